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

#include "tracelab/noise.hpp"

#include <algorithm>
#include <cmath>

#include "tracelab/error.hpp"

namespace tracelab {

void NoiseSpec::validate() const {
    if (alpha < 0.0) throw DomainError("noise alpha must be >= 0");
    if (support_R < 0.0) throw DomainError("noise support_R must be >= 0");
    if (sigma2_max < 0.0) throw DomainError("noise sigma2_max must be >= 0");
    if (variance_block < 1) throw DomainError("variance_block must be >= 1");
}

NoiseSampler::NoiseSampler(const NoiseSpec& spec, Rng rng) : spec_(spec), rng_(std::move(rng)) {
    spec_.validate();
}

double NoiseSampler::draw_prime() {
    if (draws_ % static_cast<std::uint64_t>(spec_.variance_block) == 0) {
        std::uniform_real_distribution<double> var(0.0, spec_.sigma2_max);
        sigma2_ = var(rng_);
    }
    ++draws_;
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double z = gauss(rng_);
    if (spec_.support_R <= 0.0) return 0.0;
    return std::clamp(std::abs(z) * std::sqrt(sigma2_), 0.0, spec_.support_R);
}

double NoiseSampler::next() { return spec_.alpha + draw_prime(); }

std::uint64_t NoiseSampler::next_bytes() { return static_cast<std::uint64_t>(std::llround(next())); }

int NoiseSampler::next_int(int max_value) {
    const double p = draw_prime();
    if (max_value <= 0 || spec_.support_R <= 0.0) return 0;
    const int v = static_cast<int>(std::floor(p / spec_.support_R * (max_value + 1)));
    return std::clamp(v, 0, max_value);
}

double sample_noise(const NoiseSpec& spec, Rng& rng) {
    NoiseSpec one = spec;
    one.variance_block = 1;
    NoiseSampler s(one, Rng(rng()));
    return s.next();
}

}  // namespace tracelab
