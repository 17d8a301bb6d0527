/*
 * Copyright 2026 The tracelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tracelab/compress.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

#include "tracelab/error.hpp"

namespace tracelab {

namespace {

constexpr std::uint8_t kStored = 0;
constexpr std::uint8_t kRleHuffman = 1;
constexpr int kMaxCodeLen = 24;

std::array<int, 256> code_lengths(const std::array<std::uint64_t, 256>& freq_in) {
    std::array<std::uint64_t, 256> freq = freq_in;
    for (;;) {
        struct Node {
            std::uint64_t w;
            int id;
        };
        auto cmp = [](const Node& a, const Node& b) { return a.w != b.w ? a.w > b.w : a.id > b.id; };
        std::priority_queue<Node, std::vector<Node>, decltype(cmp)> pq(cmp);
        std::vector<int> parent;
        for (int s = 0; s < 256; ++s) {
            if (freq[s] == 0) continue;
            pq.push({freq[s], static_cast<int>(parent.size())});
            parent.push_back(-1);
        }
        std::array<int, 256> len{};
        const int leaves = static_cast<int>(parent.size());
        if (leaves == 1) {
            for (int s = 0; s < 256; ++s)
                if (freq[s]) len[s] = 1;
            return len;
        }
        while (pq.size() > 1) {
            const Node a = pq.top();
            pq.pop();
            const Node b = pq.top();
            pq.pop();
            const int id = static_cast<int>(parent.size());
            parent.push_back(-1);
            parent[a.id] = id;
            parent[b.id] = id;
            pq.push({a.w + b.w, id});
        }
        int leaf = 0, longest = 0;
        for (int s = 0; s < 256; ++s) {
            if (freq[s] == 0) continue;
            int d = 0;
            for (int n = leaf; parent[n] != -1; n = parent[n]) ++d;
            len[s] = d;
            longest = std::max(longest, d);
            ++leaf;
        }
        if (longest <= kMaxCodeLen) return len;
        for (auto& f : freq)
            if (f) f = std::max<std::uint64_t>(1, f / 2);
    }
}

struct Canonical {
    std::vector<std::uint8_t> symbols;  // sorted by (len, symbol)
    std::array<std::uint32_t, 256> code{};
    std::array<int, 256> len{};
};

Canonical canonical(const std::array<int, 256>& len) {
    Canonical c;
    c.len = len;
    for (int s = 0; s < 256; ++s)
        if (len[s] > 0) c.symbols.push_back(static_cast<std::uint8_t>(s));
    std::stable_sort(c.symbols.begin(), c.symbols.end(),
                     [&](std::uint8_t a, std::uint8_t b) { return len[a] < len[b]; });
    std::uint32_t code = 0;
    int prev = 0;
    for (auto s : c.symbols) {
        code <<= (len[s] - prev);
        prev = len[s];
        c.code[s] = code++;
    }
    return c;
}

}  // namespace

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint64_t get_varint(std::span<const std::uint8_t> in, std::size_t& pos) {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        if (pos >= in.size()) throw IntegrityError("truncated varint");
        const std::uint8_t b = in[pos++];
        v |= std::uint64_t(b & 0x7f) << shift;
        if (!(b & 0x80)) return v;
    }
    throw IntegrityError("varint too long");
}

std::vector<std::uint8_t> rle_zero_encode(std::span<const std::uint8_t> in) {
    std::vector<std::uint8_t> out;
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size();) {
        if (in[i] != 0) {
            out.push_back(in[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < in.size() && in[j] == 0) ++j;
        out.push_back(0);
        put_varint(out, j - i);
        i = j;
    }
    return out;
}

std::vector<std::uint8_t> rle_zero_decode(std::span<const std::uint8_t> in) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < in.size();) {
        if (in[i] != 0) {
            out.push_back(in[i++]);
            continue;
        }
        ++i;
        const auto run = get_varint(in, i);
        if (run == 0) throw IntegrityError("zero-length run");
        out.insert(out.end(), run, 0);
    }
    return out;
}

std::vector<std::uint8_t> huffman_encode(std::span<const std::uint8_t> in) {
    if (in.empty()) throw DomainError("huffman_encode: empty input");
    std::array<std::uint64_t, 256> freq{};
    for (auto b : in) ++freq[b];
    const Canonical c = canonical(code_lengths(freq));

    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(c.symbols.size() - 1));
    for (auto s : c.symbols) {
        out.push_back(s);
        out.push_back(static_cast<std::uint8_t>(c.len[s]));
    }
    std::uint64_t acc = 0;
    int nbits = 0;
    for (auto b : in) {
        acc = (acc << c.len[b]) | c.code[b];
        nbits += c.len[b];
        while (nbits >= 8) {
            nbits -= 8;
            out.push_back(static_cast<std::uint8_t>(acc >> nbits));
        }
    }
    if (nbits > 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - nbits)));
    return out;
}

std::vector<std::uint8_t> huffman_decode(std::span<const std::uint8_t> in, std::size_t n) {
    if (in.empty()) throw IntegrityError("huffman header missing");
    const int nsym = int(in[0]) + 1;
    if (in.size() < 1 + 2 * std::size_t(nsym)) throw IntegrityError("huffman header truncated");
    std::array<int, 256> len{};
    for (int i = 0; i < nsym; ++i) {
        const int l = in[2 + 2 * i];
        if (l < 1 || l > kMaxCodeLen) throw IntegrityError("bad code length");
        len[in[1 + 2 * i]] = l;
    }
    const Canonical c = canonical(len);
    std::array<std::int64_t, kMaxCodeLen + 2> first_code{}, first_index{}, count{};
    for (auto s : c.symbols) ++count[c.len[s]];
    std::int64_t code = 0, index = 0;
    for (int l = 1; l <= kMaxCodeLen; ++l) {
        first_code[l] = code;
        first_index[l] = index;
        code = (code + count[l]) << 1;
        index += count[l];
    }
    std::vector<std::uint8_t> out;
    out.reserve(n);
    std::size_t pos = 1 + 2 * std::size_t(nsym);
    int bit = 7;
    while (out.size() < n) {
        std::int64_t v = 0;
        int l = 0;
        for (;;) {
            if (pos >= in.size()) throw IntegrityError("huffman stream truncated");
            v = (v << 1) | ((in[pos] >> bit) & 1);
            if (--bit < 0) {
                bit = 7;
                ++pos;
            }
            ++l;
            if (l > kMaxCodeLen) throw IntegrityError("invalid huffman code");
            if (v - first_code[l] < count[l] && v >= first_code[l]) {
                out.push_back(c.symbols[first_index[l] + (v - first_code[l])]);
                break;
            }
        }
    }
    return out;
}

CompressedTile compress_tile(std::span<const std::uint8_t> raw, std::uint32_t id) {
    if (raw.empty()) throw DomainError("compress_tile: empty tile");
    CompressedTile t;
    t.id = id;
    t.raw_size = raw.size();
    const auto rle = rle_zero_encode(raw);
    std::vector<std::uint8_t> enc;
    enc.push_back(kRleHuffman);
    put_varint(enc, raw.size());
    put_varint(enc, rle.size());
    const auto huff = huffman_encode(rle);
    enc.insert(enc.end(), huff.begin(), huff.end());
    if (enc.size() < raw.size() + 1) {
        t.payload = std::move(enc);
    } else {
        t.payload.reserve(raw.size() + 1);
        t.payload.push_back(kStored);
        t.payload.insert(t.payload.end(), raw.begin(), raw.end());
    }
    t.comp_size = t.payload.size();
    return t;
}

CompressedTile compress_tile_sampled(std::span<const std::uint8_t> raw, const SampledBeta& beta,
                                     Rng& rng, std::uint32_t id) {
    if (raw.empty()) throw DomainError("compress_tile: empty tile");
    if (!(beta.lo > 0.0 && beta.lo <= beta.hi && beta.hi <= 1.0)) {
        throw DomainError("sampled beta range must satisfy 0 < lo <= hi <= 1");
    }
    CompressedTile t;
    t.id = id;
    t.sampled = true;
    t.raw_size = raw.size();
    t.payload.assign(raw.begin(), raw.end());
    const double b = std::uniform_real_distribution<double>(beta.lo, beta.hi)(rng);
    t.comp_size = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(b * static_cast<double>(raw.size()))));
    return t;
}

CompressedTile compress_tile(std::span<const std::uint8_t> raw, CompressMode mode, Rng& rng,
                             const SampledBeta& beta, std::uint32_t id) {
    return mode == CompressMode::real ? compress_tile(raw, id)
                                      : compress_tile_sampled(raw, beta, rng, id);
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> payload) {
    if (payload.empty()) throw IntegrityError("empty payload");
    if (payload[0] == kStored) return {payload.begin() + 1, payload.end()};
    if (payload[0] != kRleHuffman) throw IntegrityError("unknown compression mode");
    std::size_t pos = 1;
    const auto raw_len = get_varint(payload, pos);
    const auto rle_len = get_varint(payload, pos);
    auto rle = huffman_decode(payload.subspan(pos), rle_len);
    auto raw = rle_zero_decode(rle);
    if (raw.size() != raw_len) throw IntegrityError("decoded length mismatch");
    return raw;
}

DummyInjected inject_dummy(std::span<const std::uint8_t> tile, std::int64_t n_bytes, Rng& rng) {
    if (n_bytes < 0) throw DomainError("inject_dummy: negative byte count");
    DummyInjected out;
    if (n_bytes == 0) {
        out.bytes.assign(tile.begin(), tile.end());
        return out;
    }
    // Split the dummy bytes into a few pieces placed at sorted random offsets.
    std::uniform_int_distribution<int> pieces_d(1, static_cast<int>(std::min<std::int64_t>(4, n_bytes)));
    const int pieces = pieces_d(rng);
    std::vector<std::uint64_t> cuts;
    std::uniform_int_distribution<std::uint64_t> cut_d(1, static_cast<std::uint64_t>(n_bytes) - 1);
    while (static_cast<int>(cuts.size()) < pieces - 1) {
        const auto c = cut_d(rng);
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::uint64_t> lens;
    std::uint64_t prev = 0;
    for (auto c : cuts) {
        lens.push_back(c - prev);
        prev = c;
    }
    lens.push_back(static_cast<std::uint64_t>(n_bytes) - prev);

    std::uniform_int_distribution<std::uint64_t> at_d(0, tile.size());
    std::vector<std::uint64_t> at(lens.size());
    for (auto& a : at) a = at_d(rng);
    std::sort(at.begin(), at.end());

    std::uniform_int_distribution<int> byte_d(0, 255);
    std::uint64_t src = 0;
    for (std::size_t i = 0; i < lens.size(); ++i) {
        out.bytes.insert(out.bytes.end(), tile.begin() + src, tile.begin() + at[i]);
        src = at[i];
        out.spans.push_back(DummySpan{static_cast<std::uint32_t>(out.bytes.size()),
                                      static_cast<std::uint32_t>(lens[i])});
        for (std::uint64_t j = 0; j < lens[i]; ++j) out.bytes.push_back(static_cast<std::uint8_t>(byte_d(rng)));
    }
    out.bytes.insert(out.bytes.end(), tile.begin() + src, tile.end());
    return out;
}

std::vector<std::uint8_t> strip_dummy(std::span<const std::uint8_t> bytes,
                                      std::span<const DummySpan> spans) {
    std::vector<std::uint8_t> out;
    out.reserve(bytes.size());
    std::size_t pos = 0;
    for (const auto& s : spans) {
        if (s.offset < pos || std::size_t(s.offset) + s.length > bytes.size()) {
            throw IntegrityError("dummy span out of range");
        }
        out.insert(out.end(), bytes.begin() + pos, bytes.begin() + s.offset);
        pos = std::size_t(s.offset) + s.length;
    }
    out.insert(out.end(), bytes.begin() + pos, bytes.end());
    return out;
}

}  // namespace tracelab
