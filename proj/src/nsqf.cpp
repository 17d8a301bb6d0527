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

#include <cmath>
#include <cstdint>
#include <vector>

#include "tracelab/model.hpp"

namespace tracelab {

namespace {

std::uint64_t isqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

std::vector<std::uint64_t> primes_up_to(std::uint64_t n) {
    std::vector<std::uint8_t> composite(n + 1, 0);
    std::vector<std::uint64_t> primes;
    for (std::uint64_t i = 2; i <= n; ++i) {
        if (composite[i]) continue;
        primes.push_back(i);
        for (std::uint64_t j = i * i; j <= n; j += i) composite[j] = 1;
    }
    return primes;
}

}  // namespace

bool is_nsqf(std::uint64_t n) {
    if (n == 0) throw DomainError("is_nsqf: n must be >= 1");
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % p != 0) continue;
        n /= p;
        if (n % p == 0) return true;
    }
    return false;
}

std::vector<std::uint8_t> nsqf_mask(std::uint64_t lo, std::uint64_t hi) {
    if (lo < 1) throw DomainError("nsqf range starts at 1");
    if (lo > hi) return {};
    const std::uint64_t len = hi - lo + 1;
    std::vector<std::uint8_t> mask(len, 0);
    const auto primes = primes_up_to(isqrt(hi));
    const auto np = static_cast<std::int64_t>(primes.size());
    // Distinct primes can mark the same cell; every writer stores 1 so the
    // race is benign, but keep it well-defined with atomic writes.
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < np; ++i) {
        const std::uint64_t sq = primes[i] * primes[i];
        std::uint64_t first = ((lo + sq - 1) / sq) * sq;
        for (std::uint64_t m = first; m <= hi; m += sq) {
#pragma omp atomic write
            mask[m - lo] = 1;
        }
    }
    return mask;
}

std::vector<std::uint64_t> nsqf_in_range(std::uint64_t lo, std::uint64_t hi) {
    if (lo < 1) throw DomainError("nsqf range starts at 1");
    if (lo > hi) return {};
    const auto mask = nsqf_mask(lo, hi);
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.push_back(lo + i);
    return out;
}

std::vector<std::uint64_t> nsqf_in_range_serial(std::uint64_t lo, std::uint64_t hi) {
    if (lo < 1) throw DomainError("nsqf range starts at 1");
    std::vector<std::uint64_t> out;
    for (std::uint64_t n = lo; n <= hi && n >= lo; ++n) {
        if (is_nsqf(n)) out.push_back(n);
        if (n == hi) break;
    }
    return out;
}

}  // namespace tracelab
