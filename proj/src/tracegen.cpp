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

#include "tracelab/tracegen.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>

#include "tracelab/error.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

namespace {

struct TileRect {
    int c0, c1, h0, h1, w0, w1;
    std::uint64_t elems() const { return std::uint64_t(c1 - c0) * (h1 - h0) * (w1 - w0); }
};

struct Dims {
    int C, H, W;
};

Dims tensor_dims(const NetworkSpec& spec, int j) {
    if (j == 0) {
        const auto& s = spec.layers[0].shape;
        return {s.C, s.H, s.W};
    }
    const auto& s = spec.layers[j - 1].shape;
    return {s.K, s.out_rows(), s.out_cols()};
}

int elem_bytes(const NetworkSpec& spec, int j) {
    return spec.layers[std::min<std::size_t>(j, spec.layers.size() - 1)].shape.bytes_per_elem;
}

std::vector<TileRect> tile_grid(Dims d, const TilingSpec& t) {
    std::vector<TileRect> out;
    for (int h = 0; h < d.H; h += t.Th)
        for (int w = 0; w < d.W; w += t.Tw)
            for (int c = 0; c < d.C; c += t.Tc)
                out.push_back({c, std::min(d.C, c + t.Tc), h, std::min(d.H, h + t.Th), w,
                               std::min(d.W, w + t.Tw)});
    return out;
}

std::vector<std::uint8_t> gather(const Fmap& f, const TileRect& r) {
    std::vector<std::uint8_t> out;
    out.reserve(r.elems());
    for (int c = r.c0; c < r.c1; ++c)
        for (int h = r.h0; h < r.h1; ++h)
            for (int w = r.w0; w < r.w1; ++w) out.push_back(static_cast<std::uint8_t>(f.at(c, h, w)));
    return out;
}

std::uint64_t nnz(const Fmap& f, const TileRect& r) {
    std::uint64_t n = 0;
    for (int c = r.c0; c < r.c1; ++c)
        for (int h = r.h0; h < r.h1; ++h)
            for (int w = r.w0; w < r.w1; ++w) n += f.at(c, h, w) != 0;
    return n;
}

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

std::uint64_t tile_addr(std::uint64_t base, Dims d, const TileRect& r, int b) {
    return base + ((std::uint64_t(r.c0) * d.H + r.h0) * d.W + r.w0) * b;
}

std::vector<LayerTruth> layer_truth(const NetworkSpec& spec) {
    std::vector<LayerTruth> out;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& s = spec.layers[i].shape;
        LayerTruth t;
        t.ifmap_bytes = s.ifmap_bytes();
        t.ofmap_bytes = s.ofmap_bytes();
        t.ofmap_writes = tile_grid(tensor_dims(spec, int(i) + 1), tensor_tiling(spec, int(i) + 1)).size();
        t.filter_rows = s.R;
        t.filter_cols = s.S;
        out.push_back(t);
    }
    return out;
}

class Emitter {
public:
    Emitter(Trace& tr, const TraceOptions& o) : tr_(tr), o_(o) {}

    void emit(Op op, std::uint64_t addr, std::uint64_t size, std::optional<std::uint64_t> digest,
              int layer, EventKind kind, bool fake = false) {
        if (size == 0) throw DomainError("zero-sized transaction");
        tr_.events.push_back(TraceEvent{op, addr, static_cast<std::uint32_t>(size), t_, digest});
        tr_.truth.push_back(EventTruth{layer, kind, fake});
        t_ += o_.burst_cycles * ((size + o_.burst_bytes - 1) / o_.burst_bytes);
    }
    void compute() { t_ += o_.t_tile; }

private:
    Trace& tr_;
    const TraceOptions& o_;
    std::uint64_t t_ = 0;
};

// Shared generator for the baseline and the additive countermeasures.
Trace tiled_trace(const Workload& w, const AdditiveModel* cm, std::uint64_t seed,
                  const TraceOptions& o) {
    const auto& spec = w.spec;
    spec.validate();
    const int L = static_cast<int>(spec.layers.size());
    if (static_cast<int>(w.acts.size()) != L + 1) throw ShapeError("workload activations missing");
    for (const auto& l : spec.layers) {
        const auto& s = l.shape;
        if (s.stride != 1 || s.P != s.H || s.Q != s.W) {
            throw ShapeError("tiled traces need stride-1 same convolutions");
        }
    }

    Trace tr;
    tr.layers = layer_truth(spec);
    Emitter em(tr, o);
    auto cm_rng = make_stream(seed, Stream::cm);

    // Address map: activation buffers then a dummy window; weights above weight_base.
    std::vector<std::uint64_t> act_base(L + 1), w_base(L);
    std::uint64_t cursor = o.map.act_base;
    for (int j = 0; j <= L; ++j) {
        act_base[j] = cursor;
        const Dims d = tensor_dims(spec, j);
        cursor = align_up(cursor + std::uint64_t(d.C) * d.H * d.W * elem_bytes(spec, j), o.map.align);
    }
    std::uint64_t dummy_cursor = cursor;
    cursor = o.map.weight_base;
    for (int i = 0; i < L; ++i) {
        w_base[i] = cursor;
        cursor = align_up(cursor + spec.layers[i].shape.weight_bytes(), o.map.align);
    }

    auto tile_size = [&](const Fmap& f, const TileRect& r, int b) -> std::uint64_t {
        return o.sparse ? o.sparse_header_bytes + nnz(f, r) * b : r.elems() * b;
    };

    for (int i = 0; i < L; ++i) {
        const auto& s = spec.layers[i].shape;
        const auto& t = spec.layers[i].tiling;
        const int b = s.bytes_per_elem;
        const Dims din = tensor_dims(spec, i), dout = tensor_dims(spec, i + 1);
        const auto grid_in = tile_grid(din, tensor_tiling(spec, i));
        const auto grid_out = tile_grid(dout, tensor_tiling(spec, i + 1));
        const int n_cg = t.c_groups(s);
        const int n_kg = t.k_groups(s);
        const bool cm_here = cm && cm->applies_to(i);
        const Fmap& in = w.acts[i];
        const Fmap& out = w.acts[i + 1];

        std::uint64_t cm_noise_left = 0;
        if (cm_here && cm->kind == AdditiveKind::const_mean) {
            const int j = std::uniform_int_distribution<int>(cm->jitter_lo, cm->jitter_hi)(cm_rng);
            const auto v = static_cast<std::int64_t>(cm->mean_bytes) + std::int64_t(cm->jitter_unit) * j;
            cm_noise_left = static_cast<std::uint64_t>(std::max<std::int64_t>(0, v));
        }
        int split = n_kg;
        if (cm_here && cm->kind == AdditiveKind::layer_divider) {
            if (n_kg < 2) throw ConfigError("layer-divider needs at least two ofmap groups");
            split = n_kg / 2;
        }
        double dummy_acc = 0.0;
        std::vector<bool> written(grid_out.size(), false);
        std::vector<std::size_t> sub_a;  // tiles written by the first sub-layer
        bool first_ifmap = true;

        auto write_tile = [&](std::size_t idx, bool fake) {
            const auto& r = grid_out[idx];
            const auto size = tile_size(out, r, b);
            const auto dg = fnv1a64(std::span<const std::uint8_t>(gather(out, r)));
            em.emit(Op::write, tile_addr(act_base[i + 1], dout, r, b), size, dg, i, EventKind::ofmap, fake);
            if (fake) return;
            if (cm_here && cm->kind == AdditiveKind::dummy_writes) {
                dummy_acc += cm->dummy_ratio;
                while (dummy_acc >= 1.0) {
                    dummy_acc -= 1.0;
                    em.emit(Op::write, dummy_cursor, size, cm_rng(), i, EventKind::dummy, true);
                    dummy_cursor += align_up(size, 64);
                }
            }
        };

        for (int kg = 0; kg < n_kg; ++kg) {
            if (kg == split) {
                // Second sub-layer: fake RAW on the first sub-layer's output.
                for (auto idx : sub_a) {
                    const auto& r = grid_out[idx];
                    em.emit(Op::read, tile_addr(act_base[i + 1], dout, r, b), tile_size(out, r, b),
                            fnv1a64(std::span<const std::uint8_t>(gather(out, r))), i,
                            EventKind::ofmap, true);
                }
            }
            const int k0 = kg * t.Tk, k1 = std::min(s.K, k0 + t.Tk);
            for (int cg = 0; cg < n_cg; ++cg) {
                const int c0 = cg * t.Tc, c1 = std::min(s.C, c0 + t.Tc);
                const std::uint64_t addr =
                    w_base[i] + (std::uint64_t(k0) * s.C + c0) * s.R * s.S * b;
                const std::uint64_t size = std::uint64_t(k1 - k0) * (c1 - c0) * s.R * s.S * b;
                std::uint64_t dg = 0xcbf29ce484222325ull;
                for (int k = k0; k < k1; ++k) {
                    const auto v = w.weights[i].filters[k].values();
                    dg ^= fnv1a64(std::span<const std::uint8_t>(
                        reinterpret_cast<const std::uint8_t*>(v.data()), v.size()));
                    dg *= 0x100000001b3ull;
                }
                em.emit(Op::read, addr, size, dg, i, EventKind::weight);
            }
            for (std::size_t p = 0; p < grid_in.size(); p += n_cg) {
                for (int cg = 0; cg < n_cg; ++cg) {
                    const auto& r = grid_in[p + cg];
                    em.emit(Op::read, tile_addr(act_base[i], din, r, b), tile_size(in, r, b),
                            fnv1a64(std::span<const std::uint8_t>(gather(in, r))), i, EventKind::ifmap);
                    if (first_ifmap && cm_noise_left > 0) {
                        while (cm_noise_left > 0) {
                            const auto chunk = std::min<std::uint64_t>(64, cm_noise_left);
                            em.emit(Op::read, dummy_cursor, chunk, cm_rng(), i, EventKind::dummy, true);
                            dummy_cursor += 64;
                            cm_noise_left -= chunk;
                        }
                    }
                    first_ifmap = false;
                }
                em.compute();
            }
            const int prev_done = k0;
            const int done = k1;
            for (const auto& e : spec.skips) {
                if (e.destination != i) continue;
                const int j = e.source + 1;
                const Dims ds = tensor_dims(spec, j);
                const auto grid_s = tile_grid(ds, tensor_tiling(spec, j));
                for (const auto& r : grid_s) {
                    if (r.c0 < prev_done || r.c0 >= done) continue;
                    em.emit(Op::read, tile_addr(act_base[j], ds, r, b), tile_size(w.acts[j], r, b),
                            fnv1a64(std::span<const std::uint8_t>(gather(w.acts[j], r))), i,
                            EventKind::skip);
                }
            }
            for (std::size_t idx = 0; idx < grid_out.size(); ++idx) {
                if (written[idx] || grid_out[idx].c1 > done) continue;
                written[idx] = true;
                write_tile(idx, false);
                if (kg < split && split < n_kg) sub_a.push_back(idx);
            }
        }
        if (split < n_kg) {
            for (auto idx : sub_a) write_tile(idx, true);
        }
    }
    return tr;
}

}  // namespace

TilingSpec tensor_tiling(const NetworkSpec& spec, int j) {
    const int L = static_cast<int>(spec.layers.size());
    if (j < 0 || j > L) throw DomainError("tensor index out of range");
    if (j < L) return spec.layers[j].tiling;
    const auto& last = spec.layers[L - 1];
    const auto& s = last.shape;
    return TilingSpec{1, last.tiling.Tk, std::clamp(last.tiling.Th / s.pool, 1, s.out_rows()),
                      std::clamp(last.tiling.Tw / s.pool, 1, s.out_cols())};
}

std::vector<TraceEvent> observe(const std::vector<TraceEvent>& events, const Observability& obs) {
    std::vector<TraceEvent> out = events;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!obs.values) out[i].digest.reset();
        if (!obs.addresses) out[i].addr = 0;
        if (!obs.timing) out[i].t = i;
    }
    return out;
}

Workload make_workload(const NetworkSpec& spec, const Fmap& input, std::uint64_t weight_seed) {
    return make_workload(spec, generate_weights(spec, weight_seed), input);
}

Workload make_workload(const NetworkSpec& spec, std::vector<LayerWeights> weights, const Fmap& input) {
    Workload w;
    w.spec = spec;
    w.weights = std::move(weights);
    w.acts = run_network(spec, w.weights, input);
    return w;
}

Trace baseline_trace(const Workload& w, const TraceOptions& opts) {
    return tiled_trace(w, nullptr, 0, opts);
}

Trace baseline_trace(const NetworkSpec& spec, const Fmap& input, std::uint64_t seed,
                     const TraceOptions& opts) {
    return baseline_trace(make_workload(spec, input, seed), opts);
}

AdditiveKind parse_additive_kind(const std::string& s) {
    if (s == "dummy-writes") return AdditiveKind::dummy_writes;
    if (s == "const-mean") return AdditiveKind::const_mean;
    if (s == "layer-divider") return AdditiveKind::layer_divider;
    throw ConfigError("unknown additive countermeasure model: " + s);
}

std::string to_string(AdditiveKind k) {
    switch (k) {
        case AdditiveKind::dummy_writes: return "dummy-writes";
        case AdditiveKind::const_mean: return "const-mean";
        case AdditiveKind::layer_divider: return "layer-divider";
    }
    return "?";
}

bool AdditiveModel::applies_to(int layer) const {
    return layers.empty() || std::find(layers.begin(), layers.end(), layer) != layers.end();
}

Trace additive_cm_trace(const Workload& w, const AdditiveModel& model, std::uint64_t seed,
                        const TraceOptions& opts) {
    if (model.jitter_lo > model.jitter_hi) throw ConfigError("jitter_lo > jitter_hi");
    if (model.dummy_ratio < 0.0) throw ConfigError("dummy_ratio must be >= 0");
    return tiled_trace(w, &model, seed, opts);
}

// NeuroPlug -----------------------------------------------------------------

NeuroplugSession::NeuroplugSession(const Workload& w, const NeuroplugKey& key, const TraceOptions& opts)
    : w_(&w), key_(key), opts_(opts) {
    const auto& spec = w.spec;
    spec.validate();
    key_.bins.validate();
    key_.noise.validate();
    const int L = static_cast<int>(spec.layers.size());
    truth_ = layer_truth(spec);

    for (int i = 0; i < L; ++i) {
        auto rng = make_stream(key_.noise.seed, Stream::partition, i);
        plans_.push_back(plan_execution(i, spec.layers[i].shape, spec.layers[i].tiling, key_.capacity,
                                        rng, key_.plan));
    }

    // Sampled ratios are a keyed function of tile contents, like a real codec.
    auto sample = [&](const std::vector<std::uint8_t>& raw, std::uint32_t id) {
        auto rng = make_stream(key_.noise.seed, Stream::beta_sample, fnv1a64(raw));
        return compress_tile_sampled(raw, key_.beta, rng, id);
    };

    // Activation tiles in SFC order; groups open fresh bins.
    tensors_.resize(L + 1);
    for (int j = 0; j <= L; ++j) {
        const Dims d = tensor_dims(spec, j);
        const auto tiling = tensor_tiling(spec, j);
        const auto grid = tile_grid(d, tiling);
        const int n_cg = (d.C + tiling.Tc - 1) / tiling.Tc;
        std::vector<bool> group_start(grid.size(), false);
        if (j < L) {
            std::size_t pos = 0;
            for (int g : plans_[j].ifmap_bin_groups) {
                if (pos < grid.size()) group_start[pos] = true;
                pos += std::size_t(g) * n_cg;
            }
        }
        auto& tt = tensors_[j];
        for (std::size_t k = 0; k < grid.size(); ++k) {
            auto raw = gather(w.acts[j], grid[k]);
            if (j == 0) first_raw_.push_back(raw);
            auto ct = key_.mode == CompressMode::real
                          ? compress_tile(raw, static_cast<std::uint32_t>(k))
                          : sample(raw, static_cast<std::uint32_t>(k));
            tt.items.push_back(PackItem{ct.id, ct.comp_size, false, bool(group_start[k])});
            if (ct.sampled) ct.payload.clear();
            tt.tiles.push_back(std::move(ct));
        }
    }

    // Weight bins are packed once per stored copy.
    for (int i = 0; i < L; ++i) {
        const auto& s = spec.layers[i].shape;
        const int Tk = spec.layers[i].tiling.Tk;
        std::vector<CompressedTile> tiles;
        std::vector<PackItem> items;
        int k0 = 0;
        for (int part : plans_[i].ofmap_partition) {
            for (int k = k0; k < k0 + part; k += Tk) {
                std::vector<std::uint8_t> raw;
                for (int kk = k; kk < std::min(k0 + part, k + Tk); ++kk) {
                    const auto v = w.weights[i].filters[kk].values();
                    raw.insert(raw.end(), reinterpret_cast<const std::uint8_t*>(v.data()),
                               reinterpret_cast<const std::uint8_t*>(v.data()) + v.size());
                }
                auto ct = key_.mode == CompressMode::real
                              ? compress_tile(raw, static_cast<std::uint32_t>(tiles.size()))
                              : sample(raw, static_cast<std::uint32_t>(tiles.size()));
                items.push_back(PackItem{ct.id, ct.comp_size, false, k == k0});
                tiles.push_back(std::move(ct));
            }
            k0 += part;
        }
        (void)s;
        WeightBins wb;
        for (int copy = 0; copy < plans_[i].eta; ++copy) {
            NoiseSampler sampler(key_.noise,
                                 make_stream(key_.noise.seed, Stream::noise, (1ull << 32) + i * 64 + copy));
            wb.bins_per_copy.push_back(plan_bins(items, key_.bins, sampler).size());
        }
        weights_.push_back(std::move(wb));
    }
}

std::uint32_t NeuroplugSession::gap() const {
    return static_cast<std::uint32_t>(key_.bins.kappa * opts_.t_tile);
}

std::vector<PackItem> NeuroplugSession::tensor_items(int j, std::uint64_t seed,
                                                     std::vector<CompressedTile>* first_tiles) const {
    if (j != 0 || key_.noise.dummy_bytes_first_layer == 0) {
        if (first_tiles) *first_tiles = tensors_[j].tiles;
        return tensors_[j].items;
    }
    auto rng = make_stream(seed, Stream::dummy);
    const auto n = first_raw_.size();
    const auto total = key_.noise.dummy_bytes_first_layer;
    std::vector<PackItem> items = tensors_[0].items;
    std::vector<CompressedTile> tiles;
    for (std::size_t k = 0; k < n; ++k) {
        const std::int64_t extra = static_cast<std::int64_t>(total / n + (k < total % n ? 1 : 0));
        auto inj = inject_dummy(first_raw_[k], extra, rng);
        auto ct = key_.mode == CompressMode::real
                      ? compress_tile(inj.bytes, static_cast<std::uint32_t>(k))
                      : compress_tile_sampled(inj.bytes, key_.beta, rng, static_cast<std::uint32_t>(k));
        ct.dummy_spans = inj.spans;
        const std::uint64_t map_bytes = inj.spans.empty() ? 0 : 2 + 8 * inj.spans.size();
        items[k].stored_size = ct.comp_size + map_bytes;
        items[k].dummy_map = !inj.spans.empty();
        if (first_tiles) {
            ct.payload.clear();
            tiles.push_back(std::move(ct));
        }
    }
    if (first_tiles) *first_tiles = std::move(tiles);
    return items;
}

std::vector<std::uint64_t> NeuroplugSession::bin_counts(std::uint64_t seed) const {
    std::vector<std::uint64_t> out;
    for (std::size_t j = 0; j < tensors_.size(); ++j) {
        const auto items = tensor_items(static_cast<int>(j), seed, nullptr);
        NoiseSampler sampler(key_.noise, make_stream(seed, Stream::noise, j));
        out.push_back(plan_bins(items, key_.bins, sampler).size());
    }
    return out;
}

Trace NeuroplugSession::run(std::uint64_t seed) const {
    const auto& spec = w_->spec;
    const int L = static_cast<int>(spec.layers.size());
    const std::uint64_t B = key_.bins.bin_size;
    const std::uint64_t nonce = mix(seed, 0x6e6f6e6365ull);

    Trace tr;
    tr.layers = truth_;

    // Plan activation bins for this run; record which group each bin belongs to.
    std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> group_bins(L + 1);
    std::vector<std::uint64_t> n_bins(L + 1), act_base(L + 1);
    std::uint64_t cursor = opts_.map.act_base;
    for (int j = 0; j <= L; ++j) {
        std::vector<CompressedTile> tiles;
        const auto items = tensor_items(j, seed, &tiles);
        NoiseSampler sampler(key_.noise, make_stream(seed, Stream::noise, j));
        const auto plans = plan_bins(items, key_.bins, sampler);
        auto rep = summarize(tiles, plans);
        rep.layer = j;
        tr.tensor_reports.push_back(rep);
        n_bins[j] = plans.size();
        act_base[j] = cursor;
        cursor = align_up(cursor + n_bins[j] * B, opts_.map.align);
        for (std::uint64_t b = 0; b < plans.size(); ++b) {
            const auto first = plans[b].segments.front();
            if (!first.continuation && items[first.item].group_start) group_bins[j].push_back({b, b});
            if (group_bins[j].empty()) group_bins[j].push_back({b, b});
            group_bins[j].back().second = b + 1;
        }
    }
    std::vector<std::vector<std::uint64_t>> w_base(L);
    cursor = opts_.map.weight_base;
    for (int i = 0; i < L; ++i) {
        for (auto nb : weights_[i].bins_per_copy) {
            w_base[i].push_back(cursor);
            cursor = align_up(cursor + nb * B, opts_.map.align);
        }
    }

    std::unordered_map<std::uint64_t, std::uint64_t> last_digest;
    std::uint64_t counter = 0, t = 0;
    const std::uint64_t gap_cycles = gap();
    auto emit = [&](Op op, std::uint64_t addr, int layer, EventKind kind) {
        std::uint64_t dg;
        if (op == Op::write) {
            dg = mix(nonce, mix(addr, ++counter));
            last_digest[addr] = dg;
        } else {
            auto it = last_digest.find(addr);
            dg = it != last_digest.end() ? it->second : mix(nonce, mix(addr, 0));
        }
        tr.events.push_back(TraceEvent{op, addr, static_cast<std::uint32_t>(B), t, dg});
        tr.truth.push_back(EventTruth{layer, kind, false});
        t += gap_cycles;
    };
    auto read_weights = [&](int i, int copy) {
        for (std::uint64_t b = 0; b < weights_[i].bins_per_copy[copy]; ++b)
            emit(Op::read, w_base[i][copy] + b * B, i, EventKind::weight);
    };
    auto read_range = [&](int j, std::uint64_t lo, std::uint64_t hi, int layer, EventKind kind) {
        for (std::uint64_t b = lo; b < hi; ++b) emit(Op::read, act_base[j] + b * B, layer, kind);
    };

    for (int i = 0; i < L; ++i) {
        const auto& plan = plans_[i];
        if (plan.plan_case == PlanCase::case_iii) {
            for (int g = 0; g < plan.tau; ++g) {
                if (g < static_cast<int>(group_bins[i].size())) {
                    read_range(i, group_bins[i][g].first, group_bins[i][g].second, i, EventKind::ifmap);
                }
                read_weights(i, plan.weight_copy_of_pass[g]);
            }
        } else {
            read_weights(i, 0);
            read_range(i, 0, n_bins[i], i, EventKind::ifmap);
        }
        for (const auto& e : spec.skips)
            if (e.destination == i) read_range(e.source + 1, 0, n_bins[e.source + 1], i, EventKind::skip);
        for (std::uint64_t b = 0; b < n_bins[i + 1]; ++b)
            emit(Op::write, act_base[i + 1] + b * B, i, EventKind::ofmap);
    }
    return tr;
}

Trace neuroplug_trace(const Workload& w, const NeuroplugKey& key, std::uint64_t seed,
                      const TraceOptions& opts) {
    NeuroplugSession session(w, key, opts);
    return session.run(seed);
}

// CDTV ----------------------------------------------------------------------

CdtvSummary cdtv(const std::vector<TraceEvent>& events) {
    CdtvSummary s;
    std::unordered_map<std::uint64_t, std::uint64_t> reads;
    // addr -> cumulative bytes at the time of its last unread write
    std::unordered_map<std::uint64_t, std::uint64_t> pending;
    std::uint64_t cumulative = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (i > 0) {
            if (e.t < events[i - 1].t) throw OrderingError("trace is not time-ordered");
            s.time.push_back(e.t - events[i - 1].t);
        }
        if (e.op == Op::read) {
            s.read_bytes += e.size;
            ++reads[e.addr];
            auto it = pending.find(e.addr);
            if (it != pending.end()) {
                s.distance.push_back(cumulative - it->second);
                pending.erase(it);
            }
        } else {
            s.write_bytes += e.size;
        }
        cumulative += e.size;
        if (e.op == Op::write) pending[e.addr] = cumulative;
    }
    for (const auto& [addr, n] : reads) ++s.count[n];
    return s;
}

}  // namespace tracelab
