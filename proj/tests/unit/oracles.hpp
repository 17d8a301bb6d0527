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

// Independent reference computations used as test oracles. Nothing here calls
// into the library code paths the tests check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "tracelab/model.hpp"

namespace oracle {

/// Trial division: true iff p^2 | n for some prime p.
inline bool nsqf(std::uint64_t n) {
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % (p * p) == 0) return true;
        while (n % p == 0) n /= p;
    }
    return false;
}

/// Convolution, ReLU, max pool, written output-first with channels innermost.
inline std::vector<std::int32_t> conv_relu_pool(const tracelab::LayerShape& l,
                                                const tracelab::Fmap& x,
                                                const std::vector<tracelab::Fmap>& f) {
    const int P = (l.H + 2 * l.pad - l.R) / l.stride + 1;
    const int Q = (l.W + 2 * l.pad - l.S) / l.stride + 1;
    std::vector<std::int32_t> pre(std::size_t(l.K) * P * Q, 0);
    for (int k = 0; k < l.K; ++k)
        for (int p = 0; p < P; ++p)
            for (int q = 0; q < Q; ++q) {
                long acc = 0;
                for (int r = 0; r < l.R; ++r)
                    for (int s = 0; s < l.S; ++s) {
                        const int h = p * l.stride - l.pad + r;
                        const int w = q * l.stride - l.pad + s;
                        if (h < 0 || w < 0 || h >= l.H || w >= l.W) continue;
                        for (int c = 0; c < l.C; ++c) acc += long(x.at(c, h, w)) * f[k].at(c, r, s);
                    }
                pre[(std::size_t(k) * P + p) * Q + q] = std::max<std::int32_t>(0, std::int32_t(acc));
            }
    if (l.pool == 1) return pre;
    const int pr = P / l.pool, pq = Q / l.pool;
    std::vector<std::int32_t> out(std::size_t(l.K) * pr * pq, 0);
    for (int k = 0; k < l.K; ++k)
        for (int i = 0; i < P; ++i)
            for (int j = 0; j < Q; ++j) {
                if (i / l.pool >= pr || j / l.pool >= pq) continue;
                auto& o = out[(std::size_t(k) * pr + i / l.pool) * pq + j / l.pool];
                o = std::max(o, pre[(std::size_t(k) * P + i) * Q + j]);
            }
    return out;
}

inline std::size_t nnz(const std::vector<std::int32_t>& v) {
    return std::size_t(std::count_if(v.begin(), v.end(), [](std::int32_t a) { return a != 0; }));
}

/// NIST runs statistic, written from the published formulas.
inline double runs_p(const std::vector<int>& bits) {
    const double n = double(bits.size());
    double ones = 0;
    for (int b : bits) ones += b;
    const double pi = ones / n;
    double v = 1;
    for (std::size_t k = 0; k + 1 < bits.size(); ++k) v += bits[k] != bits[k + 1];
    const double num = std::fabs(v - 2 * n * pi * (1 - pi));
    const double den = 2 * std::sqrt(2 * n) * pi * (1 - pi);
    return std::erfc(num / den);
}

/// Nearest-NSQF mass transfer over integer cells; ties go down.
inline std::map<std::uint64_t, double> smart(const std::map<std::uint64_t, double>& h) {
    std::map<std::uint64_t, double> out;
    for (auto [x, p] : h) {
        std::uint64_t d = 0;
        for (;; ++d) {
            if (x >= d && x - d >= 1 && nsqf(x - d)) {
                out[x - d] += p;
                break;
            }
            if (nsqf(x + d)) {
                out[x + d] += p;
                break;
            }
        }
    }
    double s = 0;
    for (auto& [x, p] : out) s += p;
    for (auto& [x, p] : out) p /= s;
    return out;
}

}  // namespace oracle
