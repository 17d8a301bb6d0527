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
#include <string>
#include <vector>

#include "tracelab/attacks.hpp"
#include "tracelab/config.hpp"
#include "tracelab/mellin.hpp"
#include "tracelab/stats.hpp"
#include "tracelab/tracegen.hpp"

namespace tracelab {

// Compression-ratio priors -------------------------------------------------

/// Distribution of the compression ratio r = 1/beta on [r_lo, r_hi].
enum class RatioDist { uniform, geometric, normal };

RatioDist parse_ratio_dist(const std::string& s);
std::string to_string(RatioDist d);

struct RatioPrior {
    RatioDist dist = RatioDist::uniform;
    double r_lo = 1.5;
    double r_hi = 40.0;
    /// geometric: mean of r - r_lo.
    double geometric_mean = 5.0;
    /// normal: mean and spread of r.
    double normal_mu = 10.0;
    double normal_sd = 4.0;

    double density(double r) const;
    /// Inverse CDF on [r_lo, r_hi].
    double quantile(double u) const;
    /// The same law expressed on beta = 1/r.
    GridPdf beta_pdf(std::size_t n = 4001) const;
};

// Search space ----------------------------------------------------------------

struct SearchspaceOptions {
    /// Keyed noise level; realized noise per layer is alpha * U(0,1).
    double alpha = 160.0;
    bool compression = true;
    RatioPrior prior{};
    std::uint64_t seed = 1;
    /// Independent (beta, noise) draws averaged into the reported size.
    int realizations = 16;
    /// Upper bound on candidate volumes an attacker enumerates.
    std::uint64_t volume_cap = 1ull << 24;
    FftOptions fft{};
};

struct SearchspaceResult {
    /// Per-layer ranks of the first realization.
    std::vector<RankResult> layers;
    /// Mean over realizations of the log10 total.
    double log10_space = 0.0;
    std::vector<double> realization_log10;
    /// Layers of the first realization whose true value fell outside the candidate set.
    int unsupported = 0;
};

/// Rank of X_r given h(X); falls back to |support| when X_r is not a
/// candidate (the attacker exhausts the set without success).
RankResult rank_layer(int layer, const GridPdf& h, std::uint64_t x_r, std::uint64_t volume_cap, bool* unsupported = nullptr);

/// Per-layer observation Y = beta X + noise with beta drawn from the prior
/// and the attacker knowing the prior and the noise level. A single draw
/// lands at an arbitrary spot of a flat h', so sizes are averaged.
SearchspaceResult searchspace(const NetworkSpec& spec, const SearchspaceOptions& opts);

struct SweepPoint {
    double alpha = 0.0;
    double with_compression = 0.0;
    double without_compression = 0.0;
};

std::vector<SweepPoint> alpha_sweep(const NetworkSpec& spec, const std::vector<double>& alphas,
                                    const SearchspaceOptions& base);

// Countermeasure-holds pipeline ------------------------------------------------

struct HoldsLayer {
    int layer = 0;
    std::uint64_t truth = 0;
    double estimate = 0.0;
    double rel_error = 0.0;
    std::uint64_t rank = 0;
    bool in_support = true;
};

struct HoldsResult {
    std::vector<HoldsLayer> layers;
    AttackReport report;
};

/// si filter -> ss -> kk -> NSQF snap over the given runs, then ranks the
/// true ifmap volumes in the Mellin candidate set built from the estimate.
HoldsResult cm_holds_pipeline(const std::vector<EventStream>& runs, const std::vector<std::uint64_t>& truth,
                              const LeakedConstants& leaked, const RatioPrior& prior,
                              std::uint64_t volume_cap = 1ull << 24);

// Leakage metrics ---------------------------------------------------------------

/// Network with the first layer's filter set to s x s (same padding).
NetworkSpec with_first_filter(const NetworkSpec& spec, int s);

struct MetricsOptions {
    std::vector<int> levels{1, 3, 5, 7};
    /// Traces per level in each configuration's pool.
    int pool = 400;
    /// Bootstrap datasets and samples per level in each.
    int replicates = 2000;
    int per_level = 30;
    CraftPolicy inputs = CraftPolicy::natural;
    NeuroplugKey key{};
    AdditiveModel additive{};
    std::uint64_t seed = 1;
    std::uint64_t weight_seed = 7;
};

/// Layer-1 observables of one trace: total bytes moved while the first
/// layer runs, and the mean write -> next-read distance of its outputs.
struct LayerOneObservation {
    double traffic = 0.0;
    double rw_distance = 0.0;
};

LayerOneObservation observe_layer_one(const EventStream& events, const AddressMap& map = {});

struct MetricsRun {
    MetricReport report;
    /// Per configuration and level: pooled observations (plot-ready).
    std::vector<std::pair<std::string, LabeledSamples>> traffic;
    std::vector<std::pair<std::string, LabeledSamples>> rw;
};

MetricsRun leakage_metrics(const NetworkSpec& spec, const MetricsOptions& opts);

/// Runs-test bits: LSB of the per-run bin count of the first layer's traffic.
std::vector<std::uint8_t> bin_count_bits(const std::vector<double>& traffic, std::uint32_t bin_size);

// Boundary-effect leakage ---------------------------------------------------------

struct BoundaryOptions {
    std::vector<int> levels{1, 3, 5, 7};
    /// NeuroPlug sweeps per level, each with fresh weights and run seeds.
    int runs_per_position = 8;
    /// Label permutations averaged into the random floor.
    int permutations = 20;
    int replicates = 2000;
    int per_level = 30;
    NeuroplugKey key{};
    std::uint64_t seed = 1;
    std::uint64_t weight_seed = 7;
};

struct BoundaryConfig {
    std::string name;
    double fi = 0.0;
    double mi = 0.0;
    bool flagged = false;
};

struct BoundaryLeakage {
    /// (true S, inferred S) from the baseline sweep.
    std::vector<std::pair<int, int>> inferred;
    std::vector<BoundaryConfig> configs;
    std::vector<std::pair<std::string, LabeledSamples>> series;
};

/// HuffDuff impulse sweeps on sparse baseline and NeuroPlug traces with the
/// first-layer filter width as the secret; FI/MI of the write-volume series.
BoundaryLeakage huffduff_leakage(const NetworkSpec& spec, const BoundaryOptions& opts);

}  // namespace tracelab
