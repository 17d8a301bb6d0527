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
#include <functional>
#include <string>
#include <vector>

#include "tracelab/config.hpp"

namespace tracelab {

/// One secret label and one observable per sample.
struct LabeledSamples {
    std::vector<int> secret;
    std::vector<double> leaked;

    void validate(std::size_t min_per_level = 30) const;
};

struct Estimate {
    double value = 0.0;
    /// Estimator hit a degenerate case (variance floor, empty range, ...).
    bool flagged = false;
};

/// Mean over ordered secret levels of (d mu / d theta)^2 / sigma^2, with
/// central differences inside and one-sided ones at the ends.
Estimate fisher_information(const LabeledSamples& s, double variance_floor = 1e-9);

/// Histogram plug-in MI in bits with Miller-Madow correction; leaked values
/// binned by Freedman-Diaconis.
Estimate mutual_information(const LabeledSamples& s);

double pearson_cc(const std::vector<double>& x, const std::vector<double>& y);

/// NIST SP 800-22 runs test. A failed frequency pre-test yields p = 0 and a flag.
Estimate runs_test(const std::vector<std::uint8_t>& bits, std::size_t min_n = 100);

/// T = 1/(12n) + sum (F(x_(i)) - (2i-1)/(2n))^2.
double cvm_test(std::vector<double> sample, const std::function<double(double)>& reference_cdf);

/// Right-continuous empirical CDF of a sample.
std::function<double(double)> ecdf(std::vector<double> sample);

struct HeteroskedasticityResult {
    double white_stat = 0.0;
    double white_p = 1.0;
    double bp_stat = 0.0;
    double bp_p = 1.0;
    bool collinear = false;
};

/// Auxiliary regressions of squared residuals: Breusch-Pagan on (1, x),
/// White on (1, x, x^2); LM = n R^2 against chi-square.
HeteroskedasticityResult heteroskedasticity_tests(const std::vector<double>& x,
                                                  const std::vector<double>& residuals);

struct ConfigMetrics {
    std::string name;
    double fi_traffic = 0.0, mi_traffic = 0.0, cc_traffic = 0.0, cvm_traffic = 0.0;
    double fi_rw = 0.0, mi_rw = 0.0, cc_rw = 0.0, cvm_rw = 0.0;
    double runs_p = -1.0;
    std::uint64_t replicates = 0;
    bool flagged = false;
};

struct MetricReport {
    std::vector<ConfigMetrics> configs;
    /// Name of the random reference configuration (the floor).
    std::string reference = "random";
    std::string config_hash;
};

json to_json(const MetricReport& r);

}  // namespace tracelab
