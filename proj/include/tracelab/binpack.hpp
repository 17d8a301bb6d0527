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

#include "tracelab/compress.hpp"
#include "tracelab/noise.hpp"

namespace tracelab {

struct BinConfig {
    std::uint32_t bin_size = 60000;
    int kappa = 8;
    std::uint32_t table_entry_size = 8;

    void validate() const;
    /// Largest table a bin can carry: kappa starts, one continuation, one gap.
    std::uint32_t max_table_bytes() const;
};

struct BinEntry {
    static constexpr std::uint32_t kGapId = 0xFFFFFFFFu;
    static constexpr std::uint16_t kContinuation = 1u << 0;
    static constexpr std::uint16_t kDummyMap = 1u << 1;

    std::uint32_t tile_id = 0;
    std::uint16_t offset = 0;
    std::uint16_t flags = 0;

    bool operator==(const BinEntry&) const = default;
};

struct Bin {
    std::uint32_t index = 0;
    /// Segment entries in offset order; the last entry is the padding gap.
    std::vector<BinEntry> table;
    /// Exactly bin_size bytes: [u16 n][entries][segments][pad].
    std::vector<std::uint8_t> image;
    std::uint32_t empty_pad = 0;

    std::span<const std::uint8_t> segment(std::size_t i) const;
};

struct BinPackReport {
    int layer = -1;
    std::uint64_t tiles_in = 0;
    std::uint64_t bins_out = 0;
    double beta = 0.0;
    std::uint64_t noise_total = 0;
    std::uint64_t raw_total = 0;
    std::uint64_t comp_total = 0;
};

/// Size-only description of one tile for layout planning.
struct PackItem {
    std::uint32_t id = 0;
    std::uint64_t stored_size = 0;
    bool dummy_map = false;
    /// Forces the tile to open a fresh bin (group boundary).
    bool group_start = false;
};

struct SegmentPlan {
    std::uint32_t item = 0;
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
    bool continuation = false;
};

struct BinPlan {
    std::vector<SegmentPlan> segments;
    std::uint32_t empty_pad = 0;
};

/// Sequential first-fit layout. Each bin reserves one noise draw of padding
/// (clamped so at least one payload byte fits), then takes segments until it
/// is full, holds kappa tile starts, or the next tile starts a new group.
std::vector<BinPlan> plan_bins(std::span<const PackItem> items, const BinConfig& cfg,
                               NoiseSampler& noise);

/// Bytes stored in a bin for a tile: dummy map (if any) then payload.
std::vector<std::uint8_t> stored_bytes(const CompressedTile& tile);

struct PackResult {
    std::vector<Bin> bins;
    BinPackReport report;
};

/// Packs real-mode tiles. `group_starts` lists tile indices that open a group.
PackResult pack_bins(std::span<const CompressedTile> tiles, const BinConfig& cfg,
                     const NoiseSpec& noise, Rng& rng, std::span<const std::size_t> group_starts = {});

/// Report for a layout of sized tiles (also valid for sampled-mode tiles).
BinPackReport summarize(std::span<const CompressedTile> tiles, std::span<const BinPlan> plans);

struct RawTile {
    std::uint32_t id = 0;
    std::vector<std::uint8_t> bytes;
};

/// Decodes bin images back into raw tiles with dummy spans stripped.
std::vector<RawTile> unpack_bins(std::span<const std::vector<std::uint8_t>> images,
                                 const BinConfig& cfg);
std::vector<RawTile> unpack_bins(std::span<const Bin> bins, const BinConfig& cfg);

/// Parses the table of one bin image and checks its structure.
std::vector<BinEntry> read_bin_table(std::span<const std::uint8_t> image, const BinConfig& cfg);

}  // namespace tracelab
