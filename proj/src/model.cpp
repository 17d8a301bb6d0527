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

#include "tracelab/model.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

#include "tracelab/rng.hpp"

namespace tracelab {

LayerShape LayerShape::same(int K, int C, int H, int W, int R, int S, int pool) {
    LayerShape s;
    s.K = K;
    s.C = C;
    s.H = H;
    s.W = W;
    s.R = R;
    s.S = S;
    s.stride = 1;
    s.pad = (R - 1) / 2;
    s.pool = pool;
    s.derive_output();
    return s;
}

void LayerShape::derive_output() {
    P = (H + 2 * pad - R) / stride + 1;
    Q = (W + 2 * pad - S) / stride + 1;
}

void LayerShape::validate() const {
    for (int v : {K, C, H, W, R, S, P, Q, stride, pool, bytes_per_elem}) {
        if (v < 1) throw ShapeError("layer dims must all be >= 1");
    }
    if (pad < 0) throw ShapeError("negative pad");
    if (P != (H + 2 * pad - R) / stride + 1 || Q != (W + 2 * pad - S) / stride + 1) {
        throw ShapeError("P/Q inconsistent with H/W/R/S/stride/pad");
    }
    if (P % pool != 0 || Q % pool != 0) throw ShapeError("pool must divide P and Q");
}

void TilingSpec::validate(const LayerShape& s) const {
    if (Tk < 1 || Tk > s.K || Tc < 1 || Tc > s.C || Th < 1 || Th > s.H || Tw < 1 || Tw > s.W) {
        throw ShapeError("tiling factors out of range");
    }
}

void NetworkSpec::validate() const {
    if (layers.empty()) throw ConfigError("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        l.shape.validate();
        l.tiling.validate(l.shape);
        if (l.sparsity < 0.0 || l.sparsity >= 1.0) {
            throw ConfigError("layer " + std::to_string(i) + ": sparsity must be in [0,1)");
        }
        if (i + 1 < layers.size()) {
            const auto& n = layers[i + 1].shape;
            if (n.C != l.shape.K || n.H != l.shape.out_rows() || n.W != l.shape.out_cols()) {
                throw ConfigError("layer " + std::to_string(i + 1) +
                                  " is not dimension-compatible with its predecessor");
            }
        }
    }
    for (const auto& e : skips) {
        if (e.source < 0 || e.destination >= static_cast<int>(layers.size()) ||
            e.source >= e.destination) {
            throw ConfigError("skip source must precede destination");
        }
        const auto& a = layers[e.source].shape;
        const auto& b = layers[e.destination].shape;
        if (a.K != b.K || a.out_rows() != b.out_rows() || a.out_cols() != b.out_cols()) {
            throw ConfigError("skip endpoints have different output shapes");
        }
    }
}

namespace {

void check_conv_inputs(const LayerShape& layer, const Fmap& ifmap, std::span<const Fmap> filters) {
    layer.validate();
    if (ifmap.channels() != layer.C || ifmap.rows() != layer.H || ifmap.cols() != layer.W) {
        throw ShapeError("ifmap dims do not match (C,H,W)");
    }
    if (static_cast<int>(filters.size()) != layer.K) throw ShapeError("expected K filters");
    for (const auto& f : filters) {
        if (f.channels() != layer.C || f.rows() != layer.R || f.cols() != layer.S) {
            throw ShapeError("filter dims do not match (C,R,S)");
        }
    }
}

Accum relu_pool(const LayerShape& layer, Accum pre, ConvOptions opts) {
    if (opts.relu) {
        for (auto& v : pre.values()) v = std::max(v, 0);
    }
    if (!opts.pool || layer.pool == 1) return pre;
    const int pr = layer.P / layer.pool;
    const int pq = layer.Q / layer.pool;
    Accum out(layer.K, pr, pq);
    for (int k = 0; k < layer.K; ++k) {
        for (int i = 0; i < pr; ++i) {
            for (int j = 0; j < pq; ++j) {
                std::int32_t m = pre.at(k, i * layer.pool, j * layer.pool);
                for (int a = 0; a < layer.pool; ++a) {
                    for (int b = 0; b < layer.pool; ++b) {
                        m = std::max(m, pre.at(k, i * layer.pool + a, j * layer.pool + b));
                    }
                }
                out.at(k, i, j) = m;
            }
        }
    }
    return out;
}

}  // namespace

Accum conv_forward_serial(const LayerShape& layer, const Fmap& ifmap,
                          std::span<const Fmap> filters, ConvOptions opts) {
    check_conv_inputs(layer, ifmap, filters);
    Accum pre(layer.K, layer.P, layer.Q);
    for (int k = 0; k < layer.K; ++k)
        for (int c = 0; c < layer.C; ++c)
            for (int p = 0; p < layer.P; ++p)
                for (int q = 0; q < layer.Q; ++q)
                    for (int r = 0; r < layer.R; ++r)
                        for (int s = 0; s < layer.S; ++s) {
                            const int h = p * layer.stride + r - layer.pad;
                            const int w = q * layer.stride + s - layer.pad;
                            if (h < 0 || h >= layer.H || w < 0 || w >= layer.W) continue;
                            pre.at(k, p, q) += std::int32_t(ifmap.at(c, h, w)) *
                                               std::int32_t(filters[k].at(c, r, s));
                        }
    return relu_pool(layer, std::move(pre), opts);
}

Accum conv_forward(const LayerShape& layer, const Fmap& ifmap, std::span<const Fmap> filters,
                   ConvOptions opts) {
    check_conv_inputs(layer, ifmap, filters);
    Accum pre(layer.K, layer.P, layer.Q);
    const int P = layer.P, Q = layer.Q, H = layer.H, W = layer.W;
    const int st = layer.stride, pad = layer.pad;
    auto* out = pre.values().data();
    const auto* in = ifmap.values().data();

#pragma omp parallel for schedule(static)
    for (int k = 0; k < layer.K; ++k) {
        std::int32_t* plane = out + std::size_t(k) * P * Q;
        for (int c = 0; c < layer.C; ++c) {
            const std::int8_t* chan = in + std::size_t(c) * H * W;
            for (int r = 0; r < layer.R; ++r) {
                for (int s = 0; s < layer.S; ++s) {
                    const std::int32_t wv = filters[k].at(c, r, s);
                    if (wv == 0) continue;
                    // Output rows/cols whose tap (r, s) lands inside the ifmap.
                    for (int p = 0; p < P; ++p) {
                        const int h = p * st + r - pad;
                        if (h < 0 || h >= H) continue;
                        const std::int8_t* row = chan + std::size_t(h) * W;
                        std::int32_t* orow = plane + std::size_t(p) * Q;
                        int q0 = 0;
                        while (q0 < Q && q0 * st + s - pad < 0) ++q0;
                        int q1 = Q;
                        while (q1 > q0 && (q1 - 1) * st + s - pad >= W) --q1;
                        for (int q = q0; q < q1; ++q) {
                            orow[q] += wv * std::int32_t(row[q * st + s - pad]);
                        }
                    }
                }
            }
        }
    }
    return relu_pool(layer, std::move(pre), opts);
}

Fmap requantize(const Accum& acc) {
    std::int32_t peak = 0;
    for (auto v : acc.values()) peak = std::max(peak, v);
    const int bits = std::bit_width(static_cast<std::uint32_t>(peak));
    const int shift = std::max(0, bits - 7);
    Fmap out(acc.channels(), acc.rows(), acc.cols());
    auto src = acc.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const std::int32_t v = src[i];
        dst[i] = v <= 0 ? std::int8_t{0}
                        : static_cast<std::int8_t>(std::clamp(v >> shift, 1, 127));
    }
    return out;
}

std::vector<LayerWeights> generate_weights(const NetworkSpec& spec, std::uint64_t seed) {
    std::vector<LayerWeights> out;
    out.reserve(spec.layers.size());
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& l = spec.layers[li];
        if (l.sparsity < 0.0 || l.sparsity >= 1.0) throw DomainError("sparsity must be in [0,1)");
        auto rng = make_stream(seed, Stream::weights, li);
        std::uniform_int_distribution<int> mag(1, 127);
        std::bernoulli_distribution sign(0.5);
        LayerWeights lw;
        lw.filters.reserve(l.shape.K);
        for (int k = 0; k < l.shape.K; ++k) {
            Fmap f(l.shape.C, l.shape.R, l.shape.S);
            for (auto& v : f.values()) {
                const int m = mag(rng);
                v = static_cast<std::int8_t>(sign(rng) ? m : -m);
            }
            lw.filters.push_back(std::move(f));
        }
        const std::size_t n = l.shape.weight_elems();
        const auto zeros = static_cast<std::size_t>(l.sparsity * static_cast<double>(n));
        if (zeros > 0) {
            std::vector<std::int8_t*> refs;
            refs.reserve(n);
            for (auto& f : lw.filters)
                for (auto& v : f.values()) refs.push_back(&v);
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::nth_element(idx.begin(), idx.begin() + zeros, idx.end(),
                             [&](std::size_t a, std::size_t b) {
                                 const int ma = std::abs(int(*refs[a]));
                                 const int mb = std::abs(int(*refs[b]));
                                 return ma != mb ? ma < mb : a < b;
                             });
            for (std::size_t i = 0; i < zeros; ++i) *refs[idx[i]] = 0;
        }
        out.push_back(std::move(lw));
    }
    return out;
}

Fmap random_input(const LayerShape& first, std::uint64_t seed) {
    auto rng = make_stream(seed, Stream::input);
    std::uniform_int_distribution<int> d(-128, 127);
    Fmap in(first.C, first.H, first.W);
    for (auto& v : in.values()) v = static_cast<std::int8_t>(d(rng));
    return in;
}

std::vector<Fmap> run_network(const NetworkSpec& spec, std::span<const LayerWeights> weights,
                              const Fmap& input) {
    spec.validate();
    if (weights.size() != spec.layers.size()) throw ShapeError("one weight set per layer");
    std::vector<Fmap> acts;
    acts.reserve(spec.layers.size() + 1);
    acts.push_back(input);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& shape = spec.layers[i].shape;
        Fmap out = requantize(conv_forward(shape, acts[i], weights[i].filters));
        for (const auto& e : spec.skips) {
            if (e.destination != static_cast<int>(i)) continue;
            const auto src = acts[e.source + 1].values();
            auto dst = out.values();
            for (std::size_t j = 0; j < dst.size(); ++j) {
                dst[j] = static_cast<std::int8_t>(std::clamp(int(dst[j]) + int(src[j]), -128, 127));
            }
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

std::uint64_t ifmap_volume(const LayerShape& layer) { return layer.ifmap_bytes(); }

}  // namespace tracelab
