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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tracelab/rng.hpp"

namespace tracelab {

struct DummySpan {
    std::uint32_t offset = 0;
    std::uint32_t length = 0;

    bool operator==(const DummySpan&) const = default;
};

struct CompressedTile {
    std::uint32_t id = 0;
    std::uint64_t raw_size = 0;
    std::uint64_t comp_size = 0;
    /// Self-describing encoded bytes; in sampled mode this is the raw input.
    std::vector<std::uint8_t> payload;
    std::vector<DummySpan> dummy_spans;
    bool sampled = false;
};

enum class CompressMode { real, sampled };

/// Range of the per-tile compression ratio used by sampled mode.
struct SampledBeta {
    double lo = 1.0 / 40.0;
    double hi = 1.0 / 1.5;
};

/// Zero run-length pass followed by canonical Huffman. Falls back to a stored
/// copy (one flag byte + raw) when that is not smaller.
CompressedTile compress_tile(std::span<const std::uint8_t> raw, std::uint32_t id = 0);

/// comp_size drawn as ceil(raw_size * U(beta.lo, beta.hi)); payload kept raw.
CompressedTile compress_tile_sampled(std::span<const std::uint8_t> raw, const SampledBeta& beta,
                                     Rng& rng, std::uint32_t id = 0);

CompressedTile compress_tile(std::span<const std::uint8_t> raw, CompressMode mode, Rng& rng,
                             const SampledBeta& beta = {}, std::uint32_t id = 0);

/// Inverse of compress_tile (real mode payloads).
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> payload);

struct DummyInjected {
    std::vector<std::uint8_t> bytes;
    std::vector<DummySpan> spans;
};

/// Splices n_bytes random bytes into the tile at random offsets.
DummyInjected inject_dummy(std::span<const std::uint8_t> tile, std::int64_t n_bytes, Rng& rng);

/// Removes the recorded spans.
std::vector<std::uint8_t> strip_dummy(std::span<const std::uint8_t> bytes,
                                      std::span<const DummySpan> spans);

// Building blocks, exposed for tests.
std::vector<std::uint8_t> rle_zero_encode(std::span<const std::uint8_t> in);
std::vector<std::uint8_t> rle_zero_decode(std::span<const std::uint8_t> in);
std::vector<std::uint8_t> huffman_encode(std::span<const std::uint8_t> in);
std::vector<std::uint8_t> huffman_decode(std::span<const std::uint8_t> in, std::size_t n_symbols);

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint64_t get_varint(std::span<const std::uint8_t> in, std::size_t& pos);

}  // namespace tracelab
