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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracelab/attacks.hpp"
#include "tracelab/config.hpp"
#include "tracelab/scenario.hpp"
#include "tracelab/tracegen.hpp"

namespace tracelab {

enum class Scenario { baseline, additive, neuroplug };

Scenario parse_scenario(const std::string& s);
std::string to_string(Scenario s);

enum class Pipeline { ss, ss_kk, si, ss_kk_si, huffduff, reverse };

Pipeline parse_pipeline(const std::string& s);
std::string to_string(Pipeline p);

struct AttackSpec {
    Pipeline pipeline = Pipeline::ss;
    LeakedConstants leaked;
    /// "broken", "held" or empty (no expectation, exit 0).
    std::string expect;
    /// Layers the verdict looks at; empty = all.
    std::vector<int> layers;
    std::optional<NsqfPrior> nsqf_prior;
    RatioPrior prior{};
    std::uint64_t volume_cap = 1ull << 24;
    bool column_sweep = false;
};

struct SearchspaceSpec {
    SearchspaceOptions base{};
    std::vector<double> alphas{0, 40, 160, 640, 2560, 10240, 40960, 131072};
    std::vector<RatioDist> priors{RatioDist::uniform, RatioDist::geometric, RatioDist::normal};
};

/// One run document with overrides applied.
struct RunConfig {
    json doc;
    std::string hash;
    std::filesystem::path source;
    std::filesystem::path out = "out";

    NetworkSpec network;
    std::uint64_t seed = 1;
    std::uint64_t input_seed = 1;
    std::uint64_t weight_seed = 7;
    Scenario scenario = Scenario::baseline;
    int runs = 1;
    TraceOptions trace{};
    bool binary_traces = false;
    Observability observability{};
    AdditiveModel additive{};
    NeuroplugKey key{};
    AttackSpec attack{};
    SearchspaceSpec searchspace{};
    MetricsOptions metrics{};
    BoundaryOptions boundary{};
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

/// Reads NP_SEED / NP_OUT; a malformed NP_SEED is a config error.
Overrides env_overrides();

/// Parses a run document. Unknown keys and bad values raise ConfigError
/// naming the key path and, when `raw` is given, its line in the source.
RunConfig parse_run_config(json doc, const Overrides& ov = {}, const std::string& raw = {},
                           const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path, const Overrides& ov = {});

}  // namespace tracelab
