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

#include <cmath>

#include "oracles.hpp"
#include "tracelab/error.hpp"
#include "tracelab/rng.hpp"
#include "tracelab/stats.hpp"

using namespace tracelab;

namespace {

LabeledSamples levels(int n_levels, int per, const std::function<double(int, Rng&)>& leak, std::uint64_t seed) {
    Rng rng(seed);
    LabeledSamples s;
    for (int l = 0; l < n_levels; ++l)
        for (int i = 0; i < per; ++i) {
            s.secret.push_back(l);
            s.leaked.push_back(leak(l, rng));
        }
    return s;
}

double gauss(Rng& r) { return std::normal_distribution<double>(0, 1)(r); }

}  // namespace

TEST(Fisher, IndependentLeakIsNearZero) {
    auto s = levels(4, 2000, [](int, Rng& r) { return gauss(r); }, 1);
    auto fi = fisher_information(s);
    EXPECT_LT(fi.value, 0.01);
    EXPECT_FALSE(fi.flagged);
}

TEST(Fisher, LinearShiftMatchesClosedForm) {
    // mu = 2 theta, sigma = 1: (d mu / d theta)^2 / sigma^2 = 4.
    auto s = levels(4, 20000, [](int l, Rng& r) { return 2.0 * l + gauss(r); }, 2);
    EXPECT_NEAR(fisher_information(s).value, 4.0, 0.15);
}

TEST(Fisher, ExactLeakHitsVarianceFloor) {
    auto s = levels(4, 50, [](int l, Rng&) { return double(l); }, 3);
    const double eps = 1e-6;
    auto fi = fisher_information(s, eps);
    EXPECT_TRUE(fi.flagged);
    EXPECT_NEAR(fi.value, 1.0 / eps, 1e-6 / eps);
}

TEST(Fisher, RejectsThinLevels) {
    auto s = levels(3, 10, [](int, Rng& r) { return gauss(r); }, 4);
    EXPECT_THROW(fisher_information(s), DomainError);
    LabeledSamples bad{{0, 1}, {1.0}};
    EXPECT_THROW(bad.validate(1), ShapeError);
}

TEST(MutualInformation, IndependentIsSmall) {
    auto s = levels(4, 2500, [](int, Rng& r) { return gauss(r); }, 5);
    EXPECT_LE(mutual_information(s).value, 0.05);
}

TEST(MutualInformation, ExactLeakOverFourLevelsIsTwoBits) {
    auto s = levels(4, 500, [](int l, Rng&) { return double(l); }, 6);
    EXPECT_NEAR(mutual_information(s).value, 2.0, 0.01);
}

TEST(Pearson, Extremes) {
    std::vector<double> x, y, z;
    for (int i = -50; i <= 50; ++i) {
        x.push_back(i);
        y.push_back(3.0 * i + 1);
        z.push_back(double(i) * i);
    }
    EXPECT_NEAR(pearson_cc(x, y), 1.0, 1e-12);
    std::vector<double> neg(y.rbegin(), y.rend());
    EXPECT_NEAR(pearson_cc(x, neg), -1.0, 1e-12);
    EXPECT_NEAR(pearson_cc(x, z), 0.0, 1e-12);
    EXPECT_THROW(pearson_cc(x, std::vector<double>(x.size(), 1.0)), UndefinedError);
}

TEST(Runs, PublishedExample) {
    std::vector<std::uint8_t> bits{1, 0, 0, 1, 1, 0, 1, 0, 1, 1};
    auto r = runs_test(bits, 10);
    EXPECT_NEAR(r.value, 0.147232, 1e-6);
    EXPECT_NEAR(r.value, oracle::runs_p({1, 0, 0, 1, 1, 0, 1, 0, 1, 1}), 1e-12);
    EXPECT_THROW(runs_test(bits), DomainError);
}

TEST(Runs, AlternatingAndRandom) {
    std::vector<std::uint8_t> alt(1000);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = std::uint8_t(i & 1);
    EXPECT_LT(runs_test(alt).value, 1e-6);

    Rng rng(7);
    std::vector<std::uint8_t> bits(5000);
    std::vector<int> ib(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) ib[i] = bits[i] = std::uint8_t(rng() & 1);
    EXPECT_NEAR(runs_test(bits).value, oracle::runs_p(ib), 1e-12);
}

TEST(Runs, BiasedSequenceFailsFrequencyPretest) {
    std::vector<std::uint8_t> ones(200, 1);
    auto r = runs_test(ones);
    EXPECT_TRUE(r.flagged);
    EXPECT_EQ(r.value, 0.0);
}

TEST(Cvm, SameVersusShifted) {
    // 0.461 is the 5% critical value of the limiting distribution.
    auto F = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    Rng rng(8);
    int same = 0, shifted = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> a(500), c(500);
        for (auto& v : a) v = gauss(rng);
        for (auto& v : c) v = gauss(rng) + 0.5;
        same += cvm_test(a, F) > 0.461;
        shifted += cvm_test(c, F) > 0.461;
    }
    EXPECT_NEAR(same / double(trials), 0.05, 0.025);
    EXPECT_EQ(shifted, trials);
}

TEST(Cvm, UniformAgainstExactCdf) {
    std::vector<double> grid(100);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = (double(i) + 0.5) / 100.0;
    // Perfectly spread sample: only the 1/(12n) term survives.
    EXPECT_NEAR(cvm_test(grid, [](double x) { return x; }), 1.0 / 1200.0, 1e-12);
}

TEST(Ecdf, RightContinuous) {
    auto F = ecdf({3, 1, 2, 2});
    EXPECT_EQ(F(0.5), 0.0);
    EXPECT_EQ(F(1.0), 0.25);
    EXPECT_EQ(F(2.0), 0.75);
    EXPECT_EQ(F(2.5), 0.75);
    EXPECT_EQ(F(3.0), 1.0);
    EXPECT_THROW(ecdf({}), DomainError);
}

TEST(Heteroskedasticity, CalibratedUnderNull) {
    Rng rng(9);
    int bp = 0, white = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x(200), e(200);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = std::uniform_real_distribution<double>(0, 10)(rng);
            e[i] = gauss(rng);
        }
        auto h = heteroskedasticity_tests(x, e);
        bp += h.bp_p < 0.05;
        white += h.white_p < 0.05;
    }
    EXPECT_NEAR(bp / double(trials), 0.05, 0.02);
    EXPECT_NEAR(white / double(trials), 0.05, 0.02);
}

TEST(Heteroskedasticity, PowerAgainstGrowingVariance) {
    Rng rng(10);
    int bp = 0, white = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x(500), e(500);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = std::uniform_real_distribution<double>(1, 10)(rng);
            e[i] = x[i] * gauss(rng);
        }
        auto h = heteroskedasticity_tests(x, e);
        bp += h.bp_p < 0.05;
        white += h.white_p < 0.05;
    }
    EXPECT_GT(bp / double(trials), 0.9);
    EXPECT_GT(white / double(trials), 0.9);
}

TEST(Heteroskedasticity, ConstantRegressorIsCollinear) {
    std::vector<double> x(100, 2.0), e(100, 1.0);
    EXPECT_TRUE(heteroskedasticity_tests(x, e).collinear);
    EXPECT_THROW(heteroskedasticity_tests(std::vector<double>(10), std::vector<double>(10)), DomainError);
}
