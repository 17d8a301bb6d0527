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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tracelab/model.hpp"

using namespace tracelab;

TEST(Nsqf, Examples) {
    EXPECT_TRUE(is_nsqf(12));
    EXPECT_FALSE(is_nsqf(30));
    EXPECT_TRUE(is_nsqf(150528));
    EXPECT_FALSE(is_nsqf(1));
    EXPECT_TRUE(is_nsqf(4));
}

TEST(Nsqf, RangeExamples) {
    EXPECT_EQ(nsqf_in_range(8, 12), (std::vector<std::uint64_t>{8, 9, 12}));
    EXPECT_TRUE(nsqf_in_range(2, 3).empty());
    EXPECT_TRUE(nsqf_in_range(5, 4).empty());
}

TEST(Nsqf, SmallRangeMatchesTrialDivision) {
    std::vector<std::uint64_t> want;
    for (std::uint64_t n = 1; n <= 100; ++n)
        if (oracle::nsqf(n)) want.push_back(n);
    EXPECT_EQ(nsqf_in_range(1, 100), want);
    EXPECT_EQ(nsqf_in_range_serial(1, 100), want);
}

TEST(Nsqf, OffsetWindowsAgree) {
    // Windows far from the origin exercise the segmented sieve offsets.
    for (std::uint64_t lo : {999'000ull, 123'456'789ull, 10'000'000'000ull}) {
        const auto hi = lo + 5000;
        const auto fast = nsqf_in_range(lo, hi);
        EXPECT_EQ(fast, nsqf_in_range_serial(lo, hi));
        const auto mask = nsqf_mask(lo, hi);
        ASSERT_EQ(mask.size(), hi - lo + 1);
        for (std::uint64_t n = lo; n <= hi; n += 97) EXPECT_EQ(mask[n - lo] != 0, oracle::nsqf(n)) << n;
    }
}

TEST(Nsqf, AsymptoticDensity) {
    // Square-free density is 6/pi^2.
    const auto v = nsqf_in_range(1, 1'000'000);
    EXPECT_NEAR(double(v.size()) / 1e6, 1.0 - 6.0 / (M_PI * M_PI), 1e-3);
}
