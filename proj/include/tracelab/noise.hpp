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

#include "tracelab/rng.hpp"

namespace tracelab {

/// Keyed additive-noise parameters. Realized noise is alpha + N' with
/// N' = clamp(|Normal(0, sigma)|, 0, support_R) and sigma^2 drawn from
/// Uniform(0, sigma2_max) once every `variance_block` draws.
struct NoiseSpec {
    double alpha = 8000.0;
    double support_R = 16000.0;
    double sigma2_max = 8000.0 * 8000.0;
    std::uint64_t dummy_bytes_first_layer = 0;
    std::uint64_t seed = 0;
    int variance_block = 1;

    void validate() const;
};

class NoiseSampler {
public:
    NoiseSampler(const NoiseSpec& spec, Rng rng);

    /// One draw of alpha + N' in bytes (not rounded).
    double next();
    /// next() rounded to whole bytes.
    std::uint64_t next_bytes();
    /// Integer mode: maps N' / support_R onto {0, ..., max_value}.
    int next_int(int max_value);

    /// Variance used by the most recent draw.
    double current_sigma2() const { return sigma2_; }
    std::uint64_t draws() const { return draws_; }

private:
    double draw_prime();

    NoiseSpec spec_;
    Rng rng_;
    double sigma2_ = 0.0;
    std::uint64_t draws_ = 0;
};

/// Single draw with a fresh variance.
double sample_noise(const NoiseSpec& spec, Rng& rng);

}  // namespace tracelab
