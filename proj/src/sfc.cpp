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

#include "tracelab/sfc.hpp"

#include <algorithm>
#include <numeric>

namespace tracelab {

std::string to_string(SfcKind k) {
    switch (k) {
        case SfcKind::ifmap: return "ifmap";
        case SfcKind::filter: return "filter";
        case SfcKind::ofmap: return "ofmap";
        case SfcKind::fused_filter: return "fused-filter";
        case SfcKind::halo: return "halo";
    }
    return "?";
}

std::string to_string(PlanCase c) {
    switch (c) {
        case PlanCase::all_fit: return "AllFit";
        case PlanCase::case_i: return "I";
        case PlanCase::case_ii: return "II";
        case PlanCase::case_iii: return "III";
    }
    return "?";
}

namespace {

void deep_tiles(std::vector<SfcEntry>& out, int layer, int C, int H, int W, const TilingSpec& t) {
    const int rows = (H + t.Th - 1) / t.Th;
    const int cols = (W + t.Tw - 1) / t.Tw;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            for (int lo = 0; lo < C; lo += t.Tc)
                out.push_back(DeepTileId{layer, r, c, lo, std::min(C, lo + t.Tc)});
}

// Uniform composition of `total` into `parts` positive parts, each <= cap.
std::vector<int> bounded_composition(int total, int parts, int cap, Rng& rng) {
    if (parts == 1) return {total};
    for (int attempt = 0; attempt < 2000; ++attempt) {
        std::vector<int> cuts(total - 1);
        std::iota(cuts.begin(), cuts.end(), 1);
        std::shuffle(cuts.begin(), cuts.end(), rng);
        cuts.resize(parts - 1);
        std::sort(cuts.begin(), cuts.end());
        std::vector<int> out;
        int prev = 0;
        for (int c : cuts) {
            out.push_back(c - prev);
            prev = c;
        }
        out.push_back(total - prev);
        if (*std::max_element(out.begin(), out.end()) <= cap) return out;
    }
    // Tight caps: start balanced, then move single units at random.
    std::vector<int> out(parts, total / parts);
    for (int i = 0; i < total % parts; ++i) ++out[i];
    std::uniform_int_distribution<int> pick(0, parts - 1);
    for (int step = 0; step < 4 * total; ++step) {
        const int a = pick(rng), b = pick(rng);
        if (a != b && out[a] > 1 && out[b] < cap) {
            --out[a];
            ++out[b];
        }
    }
    return out;
}

std::vector<int> random_partition(int K, std::uint64_t kernel_bytes, std::uint64_t budget,
                                  Rng& rng, const PlanOptions& opts) {
    const std::uint64_t kmax64 = budget / kernel_bytes;
    if (kmax64 < 1) throw PlanningError("weight budget below one ofmap's kernels");
    const int kmax = static_cast<int>(std::min<std::uint64_t>(kmax64, K));
    const int n_min = (K + kmax - 1) / kmax;
    NoiseSampler sampler(opts.partition_noise, Rng(rng()));
    const int extra = sampler.next_int(std::min(3, K - n_min));
    return bounded_composition(K, n_min + extra, kmax, rng);
}

std::vector<int> spatial_groups(int n_tiles, std::uint64_t tile_bytes, std::uint64_t budget) {
    const std::uint64_t per = budget / tile_bytes;
    if (per < 1) throw PlanningError("ifmap budget below one deep tile");
    std::vector<int> groups;
    for (int left = n_tiles; left > 0;) {
        const int g = static_cast<int>(std::min<std::uint64_t>(per, left));
        groups.push_back(g);
        left -= g;
    }
    return groups;
}

}  // namespace

SfcOrder ifmap_sfc(int layer_index, const LayerShape& layer, const TilingSpec& tiling) {
    tiling.validate(layer);
    SfcOrder o{SfcKind::ifmap, {}};
    deep_tiles(o.sequence, layer_index, layer.C, layer.H, layer.W, tiling);
    return o;
}

SfcOrder ofmap_sfc(int layer_index, const LayerShape& layer, const TilingSpec& consumer) {
    const int C = layer.K, H = layer.out_rows(), W = layer.out_cols();
    if (consumer.Tc < 1 || consumer.Tc > C || consumer.Th < 1 || consumer.Th > H ||
        consumer.Tw < 1 || consumer.Tw > W) {
        throw ShapeError("consumer tiling does not fit the ofmap");
    }
    SfcOrder o{SfcKind::ofmap, {}};
    deep_tiles(o.sequence, layer_index + 1, C, H, W, consumer);
    return o;
}

SfcOrder filter_sfc(int layer_index, const LayerShape& layer) {
    SfcOrder o{SfcKind::filter, {}};
    for (int k = 0; k < layer.K; ++k)
        for (int c = 0; c < layer.C; ++c) o.sequence.push_back(KernelId{layer_index, k, c});
    return o;
}

SfcOrder fused_filter_sfc(int layer_a, const LayerShape& a, int layer_b, const LayerShape& b,
                          int k_lo, int k_hi) {
    if (b.C != a.K) throw ShapeError("fused layers are not adjacent");
    if (k_lo < 0 || k_hi > a.K || k_lo >= k_hi) throw ShapeError("bad ofmap range");
    SfcOrder o{SfcKind::fused_filter, {}};
    for (int k = k_lo; k < k_hi; ++k)
        for (int c = 0; c < a.C; ++c) o.sequence.push_back(KernelId{layer_a, k, c});
    for (int k = 0; k < b.K; ++k)
        for (int c = k_lo; c < k_hi; ++c) o.sequence.push_back(KernelId{layer_b, k, c});
    return o;
}

std::uint64_t deep_tile_bytes(const LayerShape& layer, const TilingSpec& tiling) {
    return std::uint64_t(layer.C) * std::min(tiling.Th, layer.H) * std::min(tiling.Tw, layer.W) *
           layer.bytes_per_elem;
}

ExecutionPlan plan_execution(int layer_index, const LayerShape& layer, const TilingSpec& tiling,
                             std::uint64_t cap, Rng& rng, const PlanOptions& opts) {
    layer.validate();
    tiling.validate(layer);
    const std::uint64_t tile_bytes = deep_tile_bytes(layer, tiling);
    if (cap < tile_bytes) throw PlanningError("capacity below one deep tile");

    ExecutionPlan plan;
    plan.partition_seed = rng();
    Rng prng(plan.partition_seed);

    const std::uint64_t W = layer.weight_bytes();
    const std::uint64_t I = layer.ifmap_bytes();
    const std::uint64_t kernel_bytes = std::uint64_t(layer.C) * layer.R * layer.S * layer.bytes_per_elem;
    const int n_tiles = tiling.tile_rows(layer) * tiling.tile_cols(layer);

    if (W + I <= cap) {
        plan.plan_case = PlanCase::all_fit;
        plan.ofmap_partition = {layer.K};
        plan.ifmap_bin_groups = {n_tiles};
    } else if (I <= cap / 2) {
        plan.plan_case = PlanCase::case_i;
        plan.ofmap_partition = random_partition(layer.K, kernel_bytes, cap - I, prng, opts);
        plan.ifmap_bin_groups = {n_tiles};
    } else if (W <= cap / 2) {
        plan.plan_case = PlanCase::case_ii;
        plan.ofmap_partition = {layer.K};
        plan.ifmap_bin_groups = spatial_groups(n_tiles, tile_bytes, cap - W);
    } else {
        plan.plan_case = PlanCase::case_iii;
        plan.ifmap_bin_groups = spatial_groups(n_tiles, tile_bytes, cap / 2);
        plan.ofmap_partition = random_partition(layer.K, kernel_bytes, cap / 2, prng, opts);
        plan.tau = static_cast<int>(plan.ifmap_bin_groups.size());
        if (opts.eta > 0) {
            if (opts.eta > plan.tau) throw PlanningError("eta exceeds tau");
            plan.eta = opts.eta;
        } else {
            plan.eta = std::uniform_int_distribution<int>(1, plan.tau)(prng);
        }
    }

    plan.ifmap_order = ifmap_sfc(layer_index, layer, tiling);
    plan.weight_order.kind = SfcKind::filter;
    for (int p = 0; p < plan.tau; ++p) {
        plan.weight_copy_of_pass.push_back(p % plan.eta);
        int k0 = 0;
        for (int part : plan.ofmap_partition) {
            for (int k = k0; k < k0 + part; ++k)
                for (int c = 0; c < layer.C; ++c)
                    plan.weight_order.sequence.push_back(KernelId{layer_index, k, c});
            k0 += part;
        }
    }
    TilingSpec out_t{layer.K, std::min(tiling.Tk, layer.K),
                     std::clamp(tiling.Th / layer.pool, 1, layer.out_rows()),
                     std::clamp(tiling.Tw / layer.pool, 1, layer.out_cols())};
    plan.ofmap_order = ofmap_sfc(layer_index, layer, out_t);
    return plan;
}

std::uint64_t default_halo_budget(const LayerShape& layer) {
    return 2ull * layer.W * layer.C * layer.bytes_per_elem;
}

HaloPlan halo_plan(int layer_index, const LayerShape& layer, const TilingSpec& tiling,
                   std::uint64_t budget) {
    tiling.validate(layer);
    HaloPlan plan;
    if (layer.R == 1 && layer.S == 1) return plan;
    const int rows = tiling.tile_rows(layer), cols = tiling.tile_cols(layer);
    for (int r = 0; r < rows; ++r) {
        const int th = std::min(tiling.Th, layer.H - r * tiling.Th);
        for (int c = 0; c < cols; ++c) {
            const int tw = std::min(tiling.Tw, layer.W - c * tiling.Tw);
            TileHalo t{r, c, {}};
            if (c > 0 && layer.S > 1) t.sources.push_back(HaloSource{r, c - 1, th, layer.S - 1});
            if (r > 0 && layer.R > 1) t.sources.push_back(HaloSource{r - 1, c, layer.R - 1, tw});
            plan.tiles.push_back(std::move(t));
        }
    }
    plan.south_footprint_bytes =
        std::uint64_t(layer.R - 1) * layer.W * layer.C * layer.bytes_per_elem;
    if (plan.south_footprint_bytes > budget && rows > 1) {
        SfcOrder o{SfcKind::halo, {}};
        for (int r = 0; r + 1 < rows; ++r)
            for (int c = 0; c < cols; ++c) o.sequence.push_back(HaloStripId{layer_index, r, c});
        plan.overflow = std::move(o);
    }
    return plan;
}

}  // namespace tracelab
