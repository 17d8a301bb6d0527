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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracelab/config.hpp"
#include "tracelab/model.hpp"
#include "tracelab/tracegen.hpp"

namespace tracelab {

using EventStream = std::vector<TraceEvent>;

struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Layer boundaries from RAW structure: a segment ends right before the first
/// read of an address written inside it; weight-window reads that directly
/// precede that read are moved into the new segment.
std::vector<Segment> segment_layers(const EventStream& events, const AddressMap& map = {});

/// What an attacker measures for one segment.
struct LayerObservation {
    /// Bytes over distinct activation-window addresses read.
    std::uint64_t read_footprint = 0;
    /// Bytes over distinct weight-window addresses read.
    std::uint64_t weight_footprint = 0;
    std::uint64_t write_volume = 0;
    std::uint64_t write_count = 0;
    /// Most common read count among activation addresses.
    std::uint64_t read_count_mode = 0;
};

std::vector<LayerObservation> observe_segments(const EventStream& events,
                                               const std::vector<Segment>& segments,
                                               const AddressMap& map = {});

/// True when every event has the same size (bin-granular traffic).
bool uniform_event_size(const EventStream& events);

struct LayerEstimate {
    int layer = 0;
    /// Estimated ifmap volume in bytes.
    double volume = 0.0;
    double min_volume = 0.0;
    double mean_volume = 0.0;
    std::uint64_t write_count = 0;
    double write_volume = 0.0;
    int filter_rows = 0;
    int filter_cols = 0;
    std::uint64_t candidate_count = 0;
    std::vector<std::uint64_t> candidates;
    bool key_resident = false;
    std::string evidence;
};

struct AttackReport {
    std::string kind;
    std::vector<LayerEstimate> layers;
    std::vector<std::string> notes;
    std::uint64_t runs = 0;
    bool success = false;
    /// Attack-specific series (e.g. HuffDuff volumes per position).
    std::vector<double> series;
    std::uint64_t removed_writes = 0;
    std::uint64_t removed_reads = 0;
};

json to_json(const AttackReport& r);

struct AttackOptions {
    AddressMap map{};
};

AttackReport ss_attack(const std::vector<EventStream>& runs, const AttackOptions& opts = {});

/// Hardwired constants leaked by an insider. Keys: "mean", "jitter_min",
/// "alpha" (noise floor); a "@<layer>" suffix scopes a key to one layer.
using LeakedConstants = std::map<std::string, double>;

AttackReport kk_attack(const AttackReport& ss, const LeakedConstants& leaked);

/// Marks events the side-information filter drops: re-writes whose digest
/// equals the previous write to the address, and reads of data that is
/// later re-written unchanged.
std::vector<bool> si_filter(const EventStream& events);

struct NsqfPrior {
    std::uint64_t lo = 1;
    std::uint64_t hi = 1;
};

AttackReport si_attack(const std::vector<EventStream>& runs, bool value_observability,
                       std::optional<NsqfPrior> prior = std::nullopt, const AttackOptions& opts = {});

/// Candidate-set rule: snaps each layer volume to the nearest NSQF integer
/// in the prior range and records the NSQF candidates.
void apply_nsqf_prior(AttackReport& report, const NsqfPrior& prior);

enum class CraftPolicy { impulse_row, impulse_col, speckle, natural };

CraftPolicy parse_craft_policy(const std::string& s);

struct CraftedInputSet {
    CraftPolicy policy = CraftPolicy::impulse_row;
    std::vector<Fmap> tensors;
};

/// impulse-row: input k has a single 1 at (channel 0, row 0, col k).
/// impulse-col: single 1 at (0, k, 0). speckle: natural input plus noise of
/// magnitude <= amplitude on pixels that are already nonzero.
CraftedInputSet craft_inputs(CraftPolicy policy, const LayerShape& first, int count,
                             std::uint64_t seed, int amplitude = 2);

struct HuffduffQuery {
    LayerShape first;
    bool sparse_trace = true;
    bool column_sweep = false;
    std::uint64_t seed = 0;
    AddressMap map{};
};

/// Feeds crafted inputs to a victim (input -> trace) and infers the first
/// layer's filter width from the boundary effect in its write volume.
AttackReport huffduff_attack(const HuffduffQuery& q,
                             const std::function<EventStream(const Fmap&)>& victim);

/// Filter half-width from a boundary-effect series (plateau start), or -1.
int plateau_half_width(const std::vector<double>& series);

struct ReverseBounds {
    int max_dim = 512;
    int max_filter = 11;
    int bytes_per_elem = 1;
    /// Interval model for bin-granular traffic: beta range and per-bin floor.
    double beta_lo = 1.0 / 40.0;
    double beta_hi = 1.0 / 1.5;
};

AttackReport reverse_engg_attack(const EventStream& events, const ReverseBounds& bounds = {},
                                 const AttackOptions& opts = {});

}  // namespace tracelab
