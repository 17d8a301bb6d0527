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

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tracelab/model.hpp"
#include "tracelab/noise.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

/// One spatial tile over a channel range. `layer` is the index of the layer
/// that reads the tile, so layer i's ofmap tiles carry layer = i + 1.
struct DeepTileId {
    int layer = 0;
    int row = 0;
    int col = 0;
    int chan_lo = 0;
    int chan_hi = 0;

    auto operator<=>(const DeepTileId&) const = default;
};

struct KernelId {
    int layer = 0;
    int k = 0;
    int c = 0;

    auto operator<=>(const KernelId&) const = default;
};

/// Halo strip produced while processing tile (row, col) for its southern neighbor.
struct HaloStripId {
    int layer = 0;
    int row = 0;
    int col = 0;

    auto operator<=>(const HaloStripId&) const = default;
};

using SfcEntry = std::variant<DeepTileId, KernelId, HaloStripId>;

enum class SfcKind { ifmap, filter, ofmap, fused_filter, halo };

std::string to_string(SfcKind k);

struct SfcOrder {
    SfcKind kind = SfcKind::ifmap;
    std::vector<SfcEntry> sequence;

    bool operator==(const SfcOrder&) const = default;
};

/// Deep tiles row-major over the tile grid, channel groups innermost.
SfcOrder ifmap_sfc(int layer_index, const LayerShape& layer, const TilingSpec& tiling);

/// Tiles of layer i's stored output laid out with the consumer's tiling
/// (Tc, Th, Tw); entries carry layer = layer_index + 1.
SfcOrder ofmap_sfc(int layer_index, const LayerShape& layer, const TilingSpec& consumer_tiling);

/// All C kernels of ofmap 0, then those of ofmap 1, ...
SfcOrder filter_sfc(int layer_index, const LayerShape& layer);

/// Kernels of layer a for ofmaps [k_lo, k_hi), then the kernels of layer b
/// that consume those channels.
SfcOrder fused_filter_sfc(int layer_a, const LayerShape& a, int layer_b, const LayerShape& b,
                          int k_lo, int k_hi);

enum class PlanCase { all_fit, case_i, case_ii, case_iii };

std::string to_string(PlanCase c);

struct PlanOptions {
    NoiseSpec partition_noise{};
    /// Forces eta for Case III (0 = draw uniformly from [1, tau]).
    int eta = 0;
};

struct ExecutionPlan {
    PlanCase plan_case = PlanCase::all_fit;
    std::vector<int> ofmap_partition;
    /// Number of spatial deep tiles in each ifmap group.
    std::vector<int> ifmap_bin_groups;
    int tau = 1;
    int eta = 1;
    std::uint64_t partition_seed = 0;
    /// Stored weight copy read in pass p (size tau).
    std::vector<int> weight_copy_of_pass;

    SfcOrder ifmap_order;
    /// Weight read stream across all passes (unrolled).
    SfcOrder weight_order;
    SfcOrder ofmap_order;
};

/// Bytes of one spatial deep tile spanning all input channels.
std::uint64_t deep_tile_bytes(const LayerShape& layer, const TilingSpec& tiling);

ExecutionPlan plan_execution(int layer_index, const LayerShape& layer, const TilingSpec& tiling,
                             std::uint64_t npu_capacity_bytes, Rng& rng,
                             const PlanOptions& opts = {});

struct HaloSource {
    int row = 0;
    int col = 0;
    int strip_rows = 0;
    int strip_cols = 0;
};

struct TileHalo {
    int row = 0;
    int col = 0;
    std::vector<HaloSource> sources;
};

struct HaloPlan {
    std::vector<TileHalo> tiles;
    std::optional<SfcOrder> overflow;
    std::uint64_t south_footprint_bytes = 0;
};

/// Default on-chip halo budget: two rows of pixels across all channels.
std::uint64_t default_halo_budget(const LayerShape& layer);

HaloPlan halo_plan(int layer_index, const LayerShape& layer, const TilingSpec& tiling,
                   std::uint64_t onchip_halo_budget);

}  // namespace tracelab
