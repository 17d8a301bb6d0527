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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracelab/binpack.hpp"
#include "tracelab/model.hpp"
#include "tracelab/sfc.hpp"

namespace tracelab {

enum class Op : std::uint8_t { read = 0, write = 1 };

struct TraceEvent {
    Op op = Op::read;
    std::uint64_t addr = 0;
    std::uint32_t size = 0;
    std::uint64_t t = 0;
    std::optional<std::uint64_t> digest;

    bool operator==(const TraceEvent&) const = default;
};

enum class EventKind : std::uint8_t { ifmap, weight, ofmap, skip, dummy };

/// Ground truth for one event, carried out-of-band (never shown to attacks).
struct EventTruth {
    int layer = 0;
    EventKind kind = EventKind::ifmap;
    /// Not part of the real computation (dummy traffic, fake RAW pairs).
    bool fake = false;
};

struct LayerTruth {
    std::uint64_t ifmap_bytes = 0;
    std::uint64_t ofmap_bytes = 0;
    std::uint64_t ofmap_writes = 0;
    int filter_rows = 0;
    int filter_cols = 0;
};

struct Trace {
    std::vector<TraceEvent> events;
    std::vector<EventTruth> truth;
    std::vector<LayerTruth> layers;
    /// NeuroPlug only: one report per activation tensor (index j = input of layer j).
    std::vector<BinPackReport> tensor_reports;
};

/// Regions are disjoint windows. Activation buffers, dummy traffic and data
/// bins live below weight_base; weights and weight bins above it.
struct AddressMap {
    std::uint64_t act_base = 0x10000000ull;
    std::uint64_t weight_base = 0x80000000ull;
    std::uint64_t align = 4096;
};

struct TraceOptions {
    /// Sparse accelerator: tile transfer size is NNZ bytes plus a fixed
    /// per-tile metadata header.
    bool sparse = false;
    std::uint64_t sparse_header_bytes = 4;
    AddressMap map{};
    std::uint64_t burst_bytes = 64;
    std::uint64_t burst_cycles = 4;
    std::uint64_t t_tile = 512;
};

struct Observability {
    bool addresses = true;
    bool values = true;
    bool timing = true;
};

/// Drops what the scenario does not grant: digests, addresses (zeroed) or
/// timestamps (replaced by the event index).
std::vector<TraceEvent> observe(const std::vector<TraceEvent>& events, const Observability& obs);

/// Network, weights and the activations of one input.
struct Workload {
    NetworkSpec spec;
    std::vector<LayerWeights> weights;
    std::vector<Fmap> acts;
};

Workload make_workload(const NetworkSpec& spec, const Fmap& input, std::uint64_t weight_seed);
Workload make_workload(const NetworkSpec& spec, std::vector<LayerWeights> weights, const Fmap& input);

/// Tiling in which tensor j (input of layer j, or the network output for
/// j = L) is stored and read.
TilingSpec tensor_tiling(const NetworkSpec& spec, int j);

Trace baseline_trace(const Workload& w, const TraceOptions& opts = {});
Trace baseline_trace(const NetworkSpec& spec, const Fmap& input, std::uint64_t seed,
                     const TraceOptions& opts = {});

enum class AdditiveKind { dummy_writes, const_mean, layer_divider };

AdditiveKind parse_additive_kind(const std::string& s);
std::string to_string(AdditiveKind k);

struct AdditiveModel {
    AdditiveKind kind = AdditiveKind::dummy_writes;
    /// Layers the model applies to; empty = all.
    std::vector<int> layers;
    /// dummy-writes: unread dummy writes per true write.
    double dummy_ratio = 0.5;
    /// const-mean: per-layer noise bytes = mean_bytes + jitter_unit * U{jitter_lo..jitter_hi}.
    std::uint64_t mean_bytes = 22400;
    int jitter_lo = -8;
    int jitter_hi = 8;
    std::uint64_t jitter_unit = 64;

    bool applies_to(int layer) const;
};

Trace additive_cm_trace(const Workload& w, const AdditiveModel& model, std::uint64_t seed,
                        const TraceOptions& opts = {});

struct NeuroplugKey {
    BinConfig bins{};
    NoiseSpec noise{};
    std::uint64_t capacity = 512 * 1024;
    CompressMode mode = CompressMode::real;
    SampledBeta beta{};
    PlanOptions plan{};
};

/// Precomputes compressed tiles, execution plans and weight bins for a
/// workload so that many noise runs are cheap.
class NeuroplugSession {
public:
    NeuroplugSession(const Workload& w, const NeuroplugKey& key, const TraceOptions& opts = {});

    /// One inference with run nonce / noise stream derived from `seed`.
    Trace run(std::uint64_t seed) const;

    /// Bin counts per activation tensor for a run, without building events.
    std::vector<std::uint64_t> bin_counts(std::uint64_t seed) const;

    const std::vector<ExecutionPlan>& plans() const { return plans_; }
    std::uint32_t gap() const;

private:
    struct TensorTiles {
        std::vector<CompressedTile> tiles;
        std::vector<PackItem> items;
    };
    struct WeightBins {
        std::vector<std::uint64_t> bins_per_copy;
    };

    std::vector<PackItem> tensor_items(int j, std::uint64_t seed,
                                       std::vector<CompressedTile>* first_tiles) const;

    const Workload* w_;
    NeuroplugKey key_;
    TraceOptions opts_;
    std::vector<ExecutionPlan> plans_;
    std::vector<TensorTiles> tensors_;
    std::vector<std::vector<std::uint8_t>> first_raw_;
    std::vector<WeightBins> weights_;
    std::vector<LayerTruth> truth_;
};

Trace neuroplug_trace(const Workload& w, const NeuroplugKey& key, std::uint64_t seed,
                      const TraceOptions& opts = {});

struct CdtvSummary {
    /// read count -> number of addresses read that many times
    std::map<std::uint64_t, std::uint64_t> count;
    /// write -> next read of the same address: bytes accessed in between
    std::vector<std::uint64_t> distance;
    std::vector<std::uint64_t> time;
    std::uint64_t read_bytes = 0;
    std::uint64_t write_bytes = 0;
};

CdtvSummary cdtv(const std::vector<TraceEvent>& events);

// Trace files ---------------------------------------------------------------

void write_trace_csv(std::ostream& os, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace_csv(std::istream& is);

/// 24-byte little-endian records: u64 addr, u64 t, u32 size | op << 31 |
/// has_digest << 30, u32 low half of the digest.
void write_trace_binary(std::ostream& os, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace_binary(std::istream& is);

}  // namespace tracelab
