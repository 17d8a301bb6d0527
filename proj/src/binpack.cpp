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

#include "tracelab/binpack.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "tracelab/error.hpp"

namespace tracelab {

namespace {

constexpr std::uint32_t kHeader = 2;

void put_u16(std::vector<std::uint8_t>& b, std::size_t at, std::uint16_t v) {
    b[at] = static_cast<std::uint8_t>(v);
    b[at + 1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[at + i]) << (8 * i);
    return v;
}

}  // namespace

void BinConfig::validate() const {
    if (kappa < 1) throw ConfigError("kappa must be >= 1");
    if (table_entry_size != 8) throw ConfigError("table_entry_size must be 8 (u32 id, u16 offset, u16 flags)");
    if (bin_size > 65536) throw ConfigError("bin_size must fit 16-bit offsets (<= 65536)");
    if (bin_size <= max_table_bytes()) throw ConfigError("bin_size smaller than the bin table");
}

std::uint32_t BinConfig::max_table_bytes() const {
    return kHeader + static_cast<std::uint32_t>(kappa + 2) * table_entry_size;
}

std::span<const std::uint8_t> Bin::segment(std::size_t i) const {
    if (i + 1 >= table.size()) throw DomainError("segment index out of range");
    const std::size_t lo = table[i].offset;
    std::size_t hi = table[i + 1].offset;
    if (hi == 0) hi = image.size();
    return std::span<const std::uint8_t>(image).subspan(lo, hi - lo);
}

std::vector<BinPlan> plan_bins(std::span<const PackItem> items, const BinConfig& cfg,
                               NoiseSampler& noise) {
    cfg.validate();
    const std::uint32_t E = cfg.table_entry_size;
    // Header, gap entry, one segment entry and one payload byte always fit.
    const std::uint32_t max_pad = cfg.bin_size - kHeader - 2 * E - 1;

    std::vector<BinPlan> bins;
    std::size_t i = 0;
    std::uint64_t done = 0;  // bytes of items[i] already placed
    while (i < items.size()) {
        if (items[i].stored_size == 0) throw DomainError("tile with zero stored bytes");
        BinPlan bin;
        const auto pad = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(noise.next_bytes(), max_pad));
        const std::uint32_t usable = cfg.bin_size - kHeader - E - pad;
        std::uint32_t used = 0;
        int starts = 0;
        while (i < items.size()) {
            const bool fresh = done == 0;
            if (fresh && (starts == cfg.kappa || (items[i].group_start && !bin.segments.empty()))) break;
            if (usable - used < E + 1) break;
            const auto room = usable - used - E;
            const auto take = static_cast<std::uint32_t>(
                std::min<std::uint64_t>(items[i].stored_size - done, room));
            bin.segments.push_back(SegmentPlan{static_cast<std::uint32_t>(i), 0, take, !fresh});
            used += E + take;
            starts += fresh;
            done += take;
            if (done == items[i].stored_size) {
                ++i;
                done = 0;
            }
        }
        std::uint32_t off = kHeader + static_cast<std::uint32_t>(bin.segments.size() + 1) * E;
        for (auto& s : bin.segments) {
            s.offset = off;
            off += s.length;
        }
        bin.empty_pad = cfg.bin_size - off;
        bins.push_back(std::move(bin));
    }
    return bins;
}

std::vector<std::uint8_t> stored_bytes(const CompressedTile& tile) {
    std::vector<std::uint8_t> out;
    if (!tile.dummy_spans.empty()) {
        if (tile.dummy_spans.size() > 0xFFFF) throw DomainError("too many dummy spans");
        out.resize(2 + 8 * tile.dummy_spans.size());
        put_u16(out, 0, static_cast<std::uint16_t>(tile.dummy_spans.size()));
        for (std::size_t j = 0; j < tile.dummy_spans.size(); ++j) {
            put_u32(out, 2 + 8 * j, tile.dummy_spans[j].offset);
            put_u32(out, 6 + 8 * j, tile.dummy_spans[j].length);
        }
    }
    out.insert(out.end(), tile.payload.begin(), tile.payload.end());
    return out;
}

BinPackReport summarize(std::span<const CompressedTile> tiles, std::span<const BinPlan> plans) {
    BinPackReport r;
    r.tiles_in = tiles.size();
    r.bins_out = plans.size();
    for (const auto& t : tiles) {
        r.raw_total += t.raw_size;
        r.comp_total += t.comp_size;
    }
    for (const auto& p : plans) r.noise_total += p.empty_pad;
    r.beta = r.raw_total ? double(r.comp_total) / double(r.raw_total) : 0.0;
    return r;
}

PackResult pack_bins(std::span<const CompressedTile> tiles, const BinConfig& cfg,
                     const NoiseSpec& noise, Rng& rng, std::span<const std::size_t> group_starts) {
    cfg.validate();
    std::vector<std::vector<std::uint8_t>> stored;
    std::vector<PackItem> items;
    stored.reserve(tiles.size());
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (tiles[i].sampled) throw DomainError("pack_bins needs real-mode tiles; use plan_bins");
        stored.push_back(stored_bytes(tiles[i]));
        items.push_back(PackItem{tiles[i].id, stored.back().size(), !tiles[i].dummy_spans.empty(),
                                 false});
    }
    for (auto g : group_starts)
        if (g < items.size()) items[g].group_start = true;

    NoiseSampler sampler(noise, Rng(rng()));
    const auto plans = plan_bins(items, cfg, sampler);

    PackResult res;
    res.report = summarize(tiles, plans);
    std::vector<std::uint64_t> consumed(tiles.size(), 0);
    for (std::size_t b = 0; b < plans.size(); ++b) {
        const auto& p = plans[b];
        Bin bin;
        bin.index = static_cast<std::uint32_t>(b);
        bin.empty_pad = p.empty_pad;
        bin.image.assign(cfg.bin_size, 0);
        put_u16(bin.image, 0, static_cast<std::uint16_t>(p.segments.size() + 1));
        std::size_t at = kHeader;
        for (const auto& s : p.segments) {
            BinEntry e{items[s.item].id, static_cast<std::uint16_t>(s.offset), 0};
            if (s.continuation) e.flags |= BinEntry::kContinuation;
            if (!s.continuation && items[s.item].dummy_map) e.flags |= BinEntry::kDummyMap;
            bin.table.push_back(e);
            const auto& src = stored[s.item];
            std::memcpy(bin.image.data() + s.offset, src.data() + consumed[s.item], s.length);
            consumed[s.item] += s.length;
        }
        bin.table.push_back(BinEntry{BinEntry::kGapId,
                                     static_cast<std::uint16_t>(cfg.bin_size - p.empty_pad), 0});
        for (const auto& e : bin.table) {
            put_u32(bin.image, at, e.tile_id);
            put_u16(bin.image, at + 4, e.offset);
            put_u16(bin.image, at + 6, e.flags);
            at += cfg.table_entry_size;
        }
        res.bins.push_back(std::move(bin));
    }
    return res;
}

std::vector<BinEntry> read_bin_table(std::span<const std::uint8_t> image, const BinConfig& cfg) {
    if (image.size() != cfg.bin_size) throw IntegrityError("bin image has wrong size");
    const std::uint32_t n = get_u16(image, 0);
    const std::uint32_t E = cfg.table_entry_size;
    if (n < 1 || kHeader + n * E > cfg.bin_size) throw IntegrityError("bad bin table entry count");
    std::vector<BinEntry> table(n);
    for (std::uint32_t j = 0; j < n; ++j) {
        const std::size_t at = kHeader + j * E;
        table[j] = BinEntry{get_u32(image, at), get_u16(image, at + 4), get_u16(image, at + 6)};
    }
    std::uint32_t prev = kHeader + n * E;
    int starts = 0;
    for (std::uint32_t j = 0; j < n; ++j) {
        const auto& e = table[j];
        // A gap entry at offset bin_size is stored as 0 (16-bit wrap).
        const std::uint32_t off = (e.tile_id == BinEntry::kGapId && e.offset == 0 && j > 0)
                                      ? cfg.bin_size
                                      : e.offset;
        if (off < prev || off > cfg.bin_size) throw IntegrityError("bin table offsets out of order");
        prev = off;
        const bool last = j + 1 == n;
        if (last != (e.tile_id == BinEntry::kGapId)) throw IntegrityError("gap entry misplaced");
        if (e.flags & BinEntry::kContinuation) {
            if (j != 0) throw IntegrityError("continuation entry not at bin start");
        } else if (!last) {
            ++starts;
        }
    }
    if (starts > cfg.kappa) throw IntegrityError("more than kappa tile starts in a bin");
    return table;
}

std::vector<RawTile> unpack_bins(std::span<const std::vector<std::uint8_t>> images,
                                 const BinConfig& cfg) {
    cfg.validate();
    std::vector<RawTile> out;
    std::vector<std::vector<std::uint8_t>> stored;
    std::vector<bool> has_map;
    bool open = false;
    for (const auto& image : images) {
        const auto table = read_bin_table(image, cfg);
        for (std::size_t j = 0; j + 1 < table.size(); ++j) {
            const auto& e = table[j];
            const std::uint32_t hi = (j + 2 == table.size() && table[j + 1].offset == 0)
                                         ? cfg.bin_size
                                         : table[j + 1].offset;
            const bool cont = e.flags & BinEntry::kContinuation;
            if (cont) {
                if (!open || out.back().id != e.tile_id) throw IntegrityError("orphan continuation entry");
            } else {
                out.push_back(RawTile{e.tile_id, {}});
                stored.emplace_back();
                has_map.push_back(e.flags & BinEntry::kDummyMap);
                open = true;
            }
            stored.back().insert(stored.back().end(), image.begin() + e.offset, image.begin() + hi);
        }
    }
    for (std::size_t t = 0; t < out.size(); ++t) {
        std::span<const std::uint8_t> s = stored[t];
        std::vector<DummySpan> spans;
        if (has_map[t]) {
            if (s.size() < 2) throw IntegrityError("truncated dummy map");
            const std::size_t n = get_u16(s, 0);
            if (s.size() < 2 + 8 * n) throw IntegrityError("truncated dummy map");
            for (std::size_t j = 0; j < n; ++j)
                spans.push_back(DummySpan{get_u32(s, 2 + 8 * j), get_u32(s, 6 + 8 * j)});
            s = s.subspan(2 + 8 * n);
        }
        const auto raw = decompress(s);
        out[t].bytes = spans.empty() ? raw : strip_dummy(raw, spans);
    }
    return out;
}

std::vector<RawTile> unpack_bins(std::span<const Bin> bins, const BinConfig& cfg) {
    std::vector<std::vector<std::uint8_t>> images;
    images.reserve(bins.size());
    for (const auto& b : bins) images.push_back(b.image);
    return unpack_bins(images, cfg);
}

}  // namespace tracelab
