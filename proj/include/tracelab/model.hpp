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
#include <string>
#include <vector>

#include "tracelab/error.hpp"

namespace tracelab {

/// Geometry of one convolution layer. P and Q are derived from H, W, R, S,
/// stride and pad; the stored output of the layer is K x (P/pool) x (Q/pool).
struct LayerShape {
    int K = 1;
    int C = 1;
    int H = 1;
    int W = 1;
    int R = 1;
    int S = 1;
    int P = 1;
    int Q = 1;
    int stride = 1;
    int pad = 0;
    int pool = 1;
    int bytes_per_elem = 1;

    /// Stride-1 "same" convolution: pad = (R-1)/2 so that P = H and Q = W.
    static LayerShape same(int K, int C, int H, int W, int R, int S, int pool = 1);
    /// Recomputes P and Q from the other fields.
    void derive_output();
    void validate() const;

    int out_rows() const { return P / pool; }
    int out_cols() const { return Q / pool; }
    std::uint64_t ifmap_elems() const { return std::uint64_t(C) * H * W; }
    std::uint64_t ofmap_elems() const { return std::uint64_t(K) * out_rows() * out_cols(); }
    std::uint64_t weight_elems() const { return std::uint64_t(K) * C * R * S; }
    std::uint64_t ifmap_bytes() const { return ifmap_elems() * bytes_per_elem; }
    std::uint64_t ofmap_bytes() const { return ofmap_elems() * bytes_per_elem; }
    std::uint64_t weight_bytes() const { return weight_elems() * bytes_per_elem; }

    bool operator==(const LayerShape&) const = default;
};

struct TilingSpec {
    int Tk = 1;
    int Tc = 1;
    int Th = 1;
    int Tw = 1;

    void validate(const LayerShape& shape) const;
    int k_groups(const LayerShape& s) const { return (s.K + Tk - 1) / Tk; }
    int c_groups(const LayerShape& s) const { return (s.C + Tc - 1) / Tc; }
    int tile_rows(const LayerShape& s) const { return (s.H + Th - 1) / Th; }
    int tile_cols(const LayerShape& s) const { return (s.W + Tw - 1) / Tw; }

    bool operator==(const TilingSpec&) const = default;
};

struct LayerSpec {
    LayerShape shape;
    TilingSpec tiling;
    double sparsity = 0.0;
};

struct SkipEdge {
    int source = 0;
    int destination = 0;
};

struct NetworkSpec {
    std::string name;
    std::vector<LayerSpec> layers;
    std::vector<SkipEdge> skips;

    void validate() const;
};

/// Dense channel-major (C, rows, cols) tensor.
template <class T>
class Tensor3D {
public:
    Tensor3D() = default;
    Tensor3D(int channels, int rows, int cols, T fill = T{})
        : channels_(channels), rows_(rows), cols_(cols),
          values_(std::size_t(channels) * rows * cols, fill) {
        if (channels < 1 || rows < 1 || cols < 1) {
            throw ShapeError("tensor dims must be >= 1");
        }
    }

    int channels() const { return channels_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    T& at(int c, int h, int w) { return values_[index(c, h, w)]; }
    const T& at(int c, int h, int w) const { return values_[index(c, h, w)]; }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    std::size_t index(int c, int h, int w) const {
        return (std::size_t(c) * rows_ + h) * cols_ + w;
    }

    std::size_t nnz() const {
        std::size_t n = 0;
        for (const auto& v : values_) n += (v != T{});
        return n;
    }

    bool operator==(const Tensor3D&) const = default;

private:
    int channels_ = 0;
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> values_;
};

using Fmap = Tensor3D<std::int8_t>;
using Accum = Tensor3D<std::int32_t>;

/// The K filters of a layer, each (C, R, S).
struct LayerWeights {
    std::vector<Fmap> filters;
};

struct ConvOptions {
    bool relu = true;
    bool pool = true;
};

/// Convolution + ReLU + max-pool. Parallel over output channels.
Accum conv_forward(const LayerShape& layer, const Fmap& ifmap, std::span<const Fmap> filters,
                   ConvOptions opts = {});

/// Loop-nest reference of conv_forward kept for testing and benchmarking.
Accum conv_forward_serial(const LayerShape& layer, const Fmap& ifmap,
                          std::span<const Fmap> filters, ConvOptions opts = {});

/// Rescales rectified accumulators into int8 with a shift picked from the
/// tensor maximum. Nonzero inputs stay nonzero so sparsity patterns survive.
Fmap requantize(const Accum& acc);

/// Deterministic int8 weights per layer; exactly floor(sparsity * n) of the
/// smallest-magnitude weights of each layer are zeroed.
std::vector<LayerWeights> generate_weights(const NetworkSpec& spec, std::uint64_t seed);

/// Uniform random int8 input of the first layer's ifmap shape.
Fmap random_input(const LayerShape& first, std::uint64_t seed);

/// Runs the network; result[0] is the input and result[i+1] the stored
/// (requantized) output of layer i. Skip edges add the source layer's output
/// to the destination layer's output with int8 saturation.
std::vector<Fmap> run_network(const NetworkSpec& spec, std::span<const LayerWeights> weights,
                              const Fmap& input);

std::uint64_t ifmap_volume(const LayerShape& layer);

// NSQF number theory -------------------------------------------------------

/// True iff some prime square divides n.
bool is_nsqf(std::uint64_t n);

/// Ascending NSQF integers in [lo, hi] via a segmented square sieve.
std::vector<std::uint64_t> nsqf_in_range(std::uint64_t lo, std::uint64_t hi);

/// Per-element reference of nsqf_in_range.
std::vector<std::uint64_t> nsqf_in_range_serial(std::uint64_t lo, std::uint64_t hi);

/// mask[i] == 1 iff lo + i is NSQF. Parallel over sieve primes.
std::vector<std::uint8_t> nsqf_mask(std::uint64_t lo, std::uint64_t hi);

}  // namespace tracelab
