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

#include "tracelab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "tracelab/error.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

namespace {

bool is_weight(const TraceEvent& e, const AddressMap& map) { return e.addr >= map.weight_base; }

LayerObservation observe_range(const EventStream& ev, const Segment& s, const std::vector<bool>* keep,
                               const AddressMap& map) {
    LayerObservation o;
    std::unordered_map<std::uint64_t, std::uint32_t> act_size, w_size, wr_size;
    std::unordered_map<std::uint64_t, std::uint64_t> act_count;
    for (std::size_t i = s.begin; i < s.end; ++i) {
        if (keep && !(*keep)[i]) continue;
        const auto& e = ev[i];
        if (e.op == Op::write) {
            ++o.write_count;
            wr_size[e.addr] = e.size;
        } else if (is_weight(e, map)) {
            w_size[e.addr] = std::max(w_size[e.addr], e.size);
        } else {
            act_size[e.addr] = std::max(act_size[e.addr], e.size);
            ++act_count[e.addr];
        }
    }
    for (const auto& [a, v] : act_size) o.read_footprint += v;
    for (const auto& [a, v] : w_size) o.weight_footprint += v;
    for (const auto& [a, v] : wr_size) o.write_volume += v;
    std::map<std::uint64_t, std::uint64_t> hist;
    for (const auto& [a, n] : act_count) ++hist[n];
    std::uint64_t best = 0;
    for (const auto& [n, c] : hist)
        if (c > best) {
            best = c;
            o.read_count_mode = n;
        }
    return o;
}

// Writes never read later (outside the final segment) are treated as dummies.
std::vector<bool> unread_write_mask(const EventStream& ev, const std::vector<Segment>& segs) {
    std::vector<bool> keep(ev.size(), true);
    if (segs.empty()) return keep;
    const std::size_t last_begin = segs.back().begin;
    std::unordered_set<std::uint64_t> read_later;
    for (std::size_t i = ev.size(); i-- > 0;) {
        if (ev[i].op == Op::read) {
            read_later.insert(ev[i].addr);
        } else if (i < last_begin && !read_later.count(ev[i].addr)) {
            keep[i] = false;
        }
    }
    return keep;
}

EventStream apply_mask(const EventStream& ev, const std::vector<bool>& keep) {
    EventStream out;
    out.reserve(ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i)
        if (keep[i]) out.push_back(ev[i]);
    return out;
}

// Per-layer min/mean aggregation over runs.
void aggregate(AttackReport& rep, const std::vector<std::vector<LayerObservation>>& per_run) {
    std::size_t n_layers = 0;
    for (const auto& r : per_run) n_layers = std::max(n_layers, r.size());
    for (std::size_t l = 0; l < n_layers; ++l) {
        LayerEstimate est;
        est.layer = static_cast<int>(l);
        double sum = 0.0, mn = std::numeric_limits<double>::infinity();
        double wmin = std::numeric_limits<double>::infinity();
        std::uint64_t wcount = std::numeric_limits<std::uint64_t>::max();
        std::size_t n = 0;
        for (const auto& r : per_run) {
            if (l >= r.size()) continue;
            const double v = static_cast<double>(r[l].read_footprint);
            sum += v;
            mn = std::min(mn, v);
            wmin = std::min(wmin, static_cast<double>(r[l].write_volume));
            wcount = std::min(wcount, r[l].write_count);
            ++n;
        }
        est.min_volume = mn;
        est.mean_volume = sum / static_cast<double>(n);
        est.volume = mn;
        est.write_volume = wmin;
        est.write_count = wcount;
        est.evidence = "min read footprint over " + std::to_string(n) + " runs";
        rep.layers.push_back(est);
    }
}

std::optional<double> leaked_value(const LeakedConstants& leaked, const std::string& key, int layer) {
    auto it = leaked.find(key + "@" + std::to_string(layer));
    if (it != leaked.end()) return it->second;
    it = leaked.find(key);
    if (it != leaked.end()) return it->second;
    return std::nullopt;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::vector<Segment> segment_layers(const EventStream& ev, const AddressMap& map) {
    std::vector<Segment> segs;
    std::unordered_set<std::uint64_t> written;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const auto& e = ev[i];
        if (e.op == Op::write) {
            written.insert(e.addr);
            continue;
        }
        if (!written.count(e.addr)) continue;
        std::size_t b = i;
        while (b > begin && ev[b - 1].op == Op::read && is_weight(ev[b - 1], map)) --b;
        if (b > begin) segs.push_back({begin, b});
        begin = b;
        written.clear();
    }
    if (begin < ev.size()) segs.push_back({begin, ev.size()});
    return segs;
}

std::vector<LayerObservation> observe_segments(const EventStream& events,
                                               const std::vector<Segment>& segments,
                                               const AddressMap& map) {
    std::vector<LayerObservation> out;
    for (const auto& s : segments) out.push_back(observe_range(events, s, nullptr, map));
    return out;
}

bool uniform_event_size(const EventStream& events) {
    if (events.empty()) return false;
    return std::all_of(events.begin(), events.end(),
                       [&](const TraceEvent& e) { return e.size == events.front().size; });
}

json to_json(const AttackReport& r) {
    json layers = json::array();
    for (const auto& l : r.layers) {
        json c = json::array();
        for (auto v : l.candidates) c.push_back(v);
        layers.push_back({{"layer", l.layer},
                          {"volume", l.volume},
                          {"min_volume", l.min_volume},
                          {"mean_volume", l.mean_volume},
                          {"write_count", l.write_count},
                          {"write_volume", l.write_volume},
                          {"filter_rows", l.filter_rows},
                          {"filter_cols", l.filter_cols},
                          {"candidate_count", l.candidate_count},
                          {"candidates", c},
                          {"key_resident", l.key_resident},
                          {"evidence", l.evidence}});
    }
    return {{"kind", r.kind},       {"layers", layers},
            {"notes", r.notes},     {"runs", r.runs},
            {"success", r.success}, {"series", r.series},
            {"removed_writes", r.removed_writes}, {"removed_reads", r.removed_reads}};
}

AttackReport ss_attack(const std::vector<EventStream>& runs, const AttackOptions& opts) {
    if (runs.empty()) throw DomainError("ss_attack: no traces");
    AttackReport rep;
    rep.kind = "ss";
    rep.runs = runs.size();
    std::vector<std::vector<LayerObservation>> per_run;
    for (const auto& ev : runs) {
        const auto segs = segment_layers(ev, opts.map);
        const auto keep = unread_write_mask(ev, segs);
        std::vector<LayerObservation> obs;
        for (const auto& s : segs) obs.push_back(observe_range(ev, s, &keep, opts.map));
        rep.removed_writes += static_cast<std::uint64_t>(std::count(keep.begin(), keep.end(), false));
        per_run.push_back(std::move(obs));
    }
    aggregate(rep, per_run);
    return rep;
}

AttackReport kk_attack(const AttackReport& ss, const LeakedConstants& leaked) {
    AttackReport rep = ss;
    rep.kind = ss.kind + "+kk";
    for (auto& l : rep.layers) {
        const auto mean = leaked_value(leaked, "mean", l.layer);
        const auto jmin = leaked_value(leaked, "jitter_min", l.layer);
        const auto alpha = leaked_value(leaked, "alpha", l.layer);
        if (mean && jmin) {
            l.volume = l.min_volume - *mean - *jmin;
            l.evidence = "min volume minus leaked mean and jitter minimum";
        } else if (alpha) {
            l.volume = l.min_volume - *alpha;
            l.evidence = "min volume minus leaked noise floor";
        } else if (mean) {
            l.volume = std::round(l.mean_volume - *mean);
            l.evidence = "mean volume minus leaked mean";
        } else {
            l.key_resident = true;
            l.evidence += "; no leaked constant applies (key-resident)";
        }
    }
    return rep;
}

std::vector<bool> si_filter(const EventStream& ev) {
    std::vector<bool> drop(ev.size(), false);
    std::unordered_map<std::uint64_t, std::uint64_t> last_digest;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> reads_since;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const auto& e = ev[i];
        if (e.op == Op::read) {
            if (last_digest.count(e.addr)) reads_since[e.addr].push_back(i);
            continue;
        }
        auto& pending = reads_since[e.addr];
        auto it = last_digest.find(e.addr);
        if (e.digest && it != last_digest.end() && it->second == *e.digest) {
            drop[i] = true;
            for (auto r : pending) drop[r] = true;
        } else if (e.digest) {
            last_digest[e.addr] = *e.digest;
        }
        pending.clear();
    }
    return drop;
}

void apply_nsqf_prior(AttackReport& report, const NsqfPrior& prior) {
    const auto set = nsqf_in_range(prior.lo, prior.hi);
    if (set.empty()) throw DomainError("no NSQF integer in the prior range");
    for (auto& l : report.layers) {
        const double v = std::clamp(l.volume, double(set.front()), double(set.back()));
        auto it = std::lower_bound(set.begin(), set.end(), static_cast<std::uint64_t>(std::ceil(v)));
        std::uint64_t best = it == set.end() ? set.back() : *it;
        if (it != set.begin()) {
            const auto below = *std::prev(it);
            if (v - double(below) <= double(best) - v) best = below;
        }
        l.volume = static_cast<double>(best);
        l.candidate_count = set.size();
        // Keep the 64 candidates closest to the estimate.
        const auto pos = static_cast<std::ptrdiff_t>(std::lower_bound(set.begin(), set.end(), best) - set.begin());
        const auto lo = std::max<std::ptrdiff_t>(0, pos - 32);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(set.size()), lo + 64);
        l.candidates.assign(set.begin() + lo, set.begin() + hi);
        l.evidence += "; snapped to nearest NSQF";
    }
}

AttackReport si_attack(const std::vector<EventStream>& runs, bool value_observability,
                       std::optional<NsqfPrior> prior, const AttackOptions& opts) {
    if (runs.empty()) throw DomainError("si_attack: no traces");
    AttackReport rep;
    rep.kind = "si";
    rep.runs = runs.size();
    std::vector<std::vector<LayerObservation>> per_run;
    for (const auto& ev : runs) {
        EventStream kept = ev;
        if (value_observability) {
            const auto drop = si_filter(ev);
            std::vector<bool> keep(ev.size());
            for (std::size_t i = 0; i < ev.size(); ++i) {
                keep[i] = !drop[i];
                if (drop[i]) (ev[i].op == Op::write ? rep.removed_writes : rep.removed_reads) += 1;
            }
            kept = apply_mask(ev, keep);
        }
        per_run.push_back(observe_segments(kept, segment_layers(kept, opts.map), opts.map));
    }
    if (!value_observability) rep.notes.push_back("no value observability: RAW filtering skipped");
    aggregate(rep, per_run);
    if (prior) apply_nsqf_prior(rep, *prior);
    return rep;
}

CraftPolicy parse_craft_policy(const std::string& s) {
    if (s == "impulse-row") return CraftPolicy::impulse_row;
    if (s == "impulse-col") return CraftPolicy::impulse_col;
    if (s == "speckle") return CraftPolicy::speckle;
    if (s == "natural") return CraftPolicy::natural;
    throw ConfigError("unknown input policy: " + s);
}

CraftedInputSet craft_inputs(CraftPolicy policy, const LayerShape& first, int count,
                             std::uint64_t seed, int amplitude) {
    if (count < 1) throw DomainError("craft_inputs: count must be >= 1");
    CraftedInputSet set;
    set.policy = policy;
    switch (policy) {
        case CraftPolicy::impulse_row:
        case CraftPolicy::impulse_col: {
            const int positions = policy == CraftPolicy::impulse_row ? first.W : first.H;
            if (count > positions) throw DomainError("more impulse inputs than positions");
            for (int k = 0; k < count; ++k) {
                Fmap f(first.C, first.H, first.W);
                if (policy == CraftPolicy::impulse_row) f.at(0, 0, k) = 1;
                else f.at(0, k, 0) = 1;
                set.tensors.push_back(std::move(f));
            }
            break;
        }
        case CraftPolicy::natural:
            for (int k = 0; k < count; ++k) set.tensors.push_back(random_input(first, seed + k));
            break;
        case CraftPolicy::speckle: {
            if (amplitude < 0) throw DomainError("speckle amplitude must be >= 0");
            const Fmap base = random_input(first, seed);
            for (int k = 0; k < count; ++k) {
                auto rng = make_stream(seed, Stream::crafted, k);
                std::uniform_int_distribution<int> d(-amplitude, amplitude);
                Fmap f = base;
                for (auto& v : f.values()) {
                    if (v == 0 || amplitude == 0) continue;
                    // Keep the sign so the zero pattern is unchanged.
                    const int x = v + d(rng);
                    v = static_cast<std::int8_t>(v > 0 ? std::clamp(x, 1, 127) : std::clamp(x, -128, -1));
                }
                set.tensors.push_back(std::move(f));
            }
            break;
        }
    }
    return set;
}

int plateau_half_width(const std::vector<double>& series) {
    const int n = static_cast<int>(series.size());
    if (n < 3) return -1;
    const int mid = n / 2;
    const double v = series[mid];
    int left = mid;
    while (left > 0 && series[left - 1] == v) --left;
    int right = mid;
    while (right + 1 < n && series[right + 1] == v) ++right;
    const int h = std::max(left, n - 1 - right);
    return h >= mid ? -1 : h;
}

AttackReport huffduff_attack(const HuffduffQuery& q,
                             const std::function<EventStream(const Fmap&)>& victim) {
    AttackReport rep;
    rep.kind = "huffduff";
    auto sweep = [&](CraftPolicy policy, bool& bins) {
        const int count = policy == CraftPolicy::impulse_row ? q.first.W : q.first.H;
        const auto inputs = craft_inputs(policy, q.first, count, q.seed);
        std::vector<double> series;
        for (const auto& in : inputs.tensors) {
            const auto ev = victim(in);
            bins = bins || uniform_event_size(ev);
            const auto segs = segment_layers(ev, q.map);
            double vol = 0.0;
            if (!segs.empty())
                for (std::size_t i = segs[0].begin; i < segs[0].end; ++i)
                    if (ev[i].op == Op::write) vol += ev[i].size;
            series.push_back(vol);
            ++rep.runs;
        }
        return series;
    };

    bool bins = false;
    rep.series = sweep(CraftPolicy::impulse_row, bins);
    if (!q.sparse_trace && !bins) {
        throw InapplicableError("huffduff needs a sparse accelerator (NNZ-sized transfers)");
    }
    LayerEstimate est;
    est.layer = 0;
    if (bins) {
        rep.success = false;
        rep.notes.push_back("bin-granular traffic: boundary effect not observable; filter size undetermined");
        est.evidence = "write-volume series over impulse positions (flat up to noise)";
    } else {
        const int h = plateau_half_width(rep.series);
        est.filter_cols = h < 0 ? 0 : 2 * h + 1;
        rep.success = h >= 0;
        est.evidence = "plateau start of layer-1 write volume over impulse column";
        if (q.column_sweep) {
            bool b2 = false;
            const auto col = sweep(CraftPolicy::impulse_col, b2);
            const int hr = plateau_half_width(col);
            est.filter_rows = hr < 0 ? 0 : 2 * hr + 1;
            rep.success = rep.success && hr >= 0;
        }
    }
    rep.layers.push_back(est);
    return rep;
}

AttackReport reverse_engg_attack(const EventStream& events, const ReverseBounds& bounds,
                                 const AttackOptions& opts) {
    AttackReport rep;
    rep.kind = "reverse-engg";
    rep.runs = 1;
    const auto segs = segment_layers(events, opts.map);
    if (segs.size() <= 1) rep.notes.push_back("no RAW boundary found: whole trace treated as one layer");
    const bool bins = uniform_event_size(events);
    if (bins) rep.notes.push_back("bin-granular traffic: volumes used as interval constraints");
    const auto obs = observe_segments(events, segs, opts.map);
    const std::uint64_t b = bounds.bytes_per_elem;
    const std::uint64_t D = bounds.max_dim;

    rep.success = true;
    for (std::size_t l = 0; l < obs.size(); ++l) {
        const auto& o = obs[l];
        LayerEstimate est;
        est.layer = static_cast<int>(l);
        est.volume = static_cast<double>(o.read_footprint);
        est.write_volume = static_cast<double>(o.write_volume);
        est.write_count = o.write_count;
        // Element-count intervals for ifmap, ofmap and weights.
        auto interval = [&](std::uint64_t v) -> std::pair<std::uint64_t, std::uint64_t> {
            if (!bins) return {v / b, v / b};
            return {1, static_cast<std::uint64_t>(std::floor(double(v) / bounds.beta_lo)) / b};
        };
        const auto [in_lo, in_hi] = interval(o.read_footprint);
        const auto [out_lo, out_hi] = interval(o.write_volume);
        const auto [w_lo, w_hi] = interval(o.weight_footprint);
        if (!bins && (o.read_footprint % b || o.write_volume % b || o.weight_footprint % b || w_lo == 0)) {
            est.evidence = "volumes not consistent with the element size";
            rep.layers.push_back(est);
            rep.success = false;
            continue;
        }
        std::uint64_t count = 0;
        for (std::uint64_t H = 1; H <= D; ++H) {
            const std::uint64_t H2 = H * H;
            if (H2 > in_hi) break;
            const std::uint64_t c_lo = std::max<std::uint64_t>(1, ceil_div(in_lo, H2));
            const std::uint64_t c_hi = std::min<std::uint64_t>(D, in_hi / H2);
            if (c_lo > c_hi) continue;
            for (std::uint64_t pool : {1ull, 2ull}) {
                if (H % pool) continue;
                const std::uint64_t O2 = (H / pool) * (H / pool);
                const std::uint64_t k_lo0 = std::max<std::uint64_t>(1, ceil_div(out_lo, O2));
                const std::uint64_t k_hi0 = std::min<std::uint64_t>(D, out_hi / O2);
                if (k_lo0 > k_hi0) continue;
                // Same padding keeps (R - 1) / 2 <= H.
                for (std::uint64_t R = 1; R <= std::uint64_t(bounds.max_filter) && R <= 2 * H + 1; R += 2) {
                    const std::uint64_t R2 = R * R;
                    for (std::uint64_t C = c_lo; C <= c_hi; ++C) {
                        const std::uint64_t k_lo = std::max(k_lo0, ceil_div(w_lo, C * R2));
                        const std::uint64_t k_hi = std::min(k_hi0, w_hi / (C * R2));
                        if (k_lo > k_hi) continue;
                        if (!bins) {
                            // Exact mode: every product must match.
                            if (C * H2 != in_lo) continue;
                            for (std::uint64_t K = k_lo; K <= k_hi; ++K) {
                                if (K * O2 != out_lo || K * C * R2 != w_lo) continue;
                                ++count;
                                if (est.candidates.size() < 5 * 64) {
                                    est.candidates.insert(est.candidates.end(), {C, H, K, R, pool});
                                }
                            }
                        } else {
                            count += k_hi - k_lo + 1;
                        }
                    }
                }
            }
        }
        est.candidate_count = count;
        est.evidence = bins ? "interval enumeration (C,H,K,R,pool)" : "exact enumeration (C,H,K,R,pool)";
        if (count == 1 && !bins) {
            est.filter_rows = est.filter_cols = static_cast<int>(est.candidates[3]);
        }
        if (count != 1) rep.success = false;
        rep.layers.push_back(est);
    }
    return rep;
}

}  // namespace tracelab
