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

#include "tracelab/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "tracelab/error.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

namespace {

double unit_draw(std::uint64_t seed, Stream s, std::uint64_t index) {
    auto rng = make_stream(seed, s, index);
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

RatioDist parse_ratio_dist(const std::string& s) {
    if (s == "uniform") return RatioDist::uniform;
    if (s == "geometric") return RatioDist::geometric;
    if (s == "normal") return RatioDist::normal;
    throw ConfigError("unknown ratio distribution: " + s);
}

std::string to_string(RatioDist d) {
    switch (d) {
        case RatioDist::uniform: return "uniform";
        case RatioDist::geometric: return "geometric";
        case RatioDist::normal: return "normal";
    }
    return "?";
}

double RatioPrior::density(double r) const {
    if (r < r_lo || r > r_hi) return 0.0;
    switch (dist) {
        case RatioDist::uniform: return 1.0;
        case RatioDist::geometric: return std::exp(-(r - r_lo) / geometric_mean);
        case RatioDist::normal: return std::exp(-0.5 * (r - normal_mu) * (r - normal_mu) / (normal_sd * normal_sd));
    }
    return 0.0;
}

double RatioPrior::quantile(double u) const {
    constexpr int n = 20001;
    std::vector<double> cum(n, 0.0);
    const double h = (r_hi - r_lo) / (n - 1);
    for (int i = 1; i < n; ++i)
        cum[i] = cum[i - 1] + h * (density(r_lo + (i - 1) * h) + density(r_lo + i * h)) / 2;
    const double target = std::clamp(u, 0.0, 1.0) * cum.back();
    auto it = std::lower_bound(cum.begin(), cum.end(), target);
    if (it == cum.begin()) return r_lo;
    if (it == cum.end()) return r_hi;
    const auto i = static_cast<std::size_t>(it - cum.begin());
    const double t = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
    return r_lo + (static_cast<double>(i - 1) + t) * h;
}

GridPdf RatioPrior::beta_pdf(std::size_t n) const {
    return tabulate([this](double b) { return density(1.0 / b) / (b * b); }, 1.0 / r_hi, 1.0 / r_lo, n, true);
}

RankResult rank_layer(int layer, const GridPdf& h, std::uint64_t x_r, std::uint64_t volume_cap, bool* unsupported) {
    RankResult r;
    r.layer = layer;
    r.h = h;
    r.x_r = x_r;
    std::uint64_t lo, hi;
    if (h.is_point_mass()) {
        const double x = std::round(h.lo());
        lo = static_cast<std::uint64_t>(std::max(1.0, x - 64));
        hi = static_cast<std::uint64_t>(x + 64);
    } else {
        lo = static_cast<std::uint64_t>(std::max(1.0, std::floor(h.lo())));
        hi = static_cast<std::uint64_t>(std::ceil(h.hi()));
    }
    hi = std::min(hi, volume_cap);
    bool miss = false;
    if (lo <= hi) {
        r.h_smart = smart_search_space(h, lo, hi);
        try {
            r.rank = rank(r.h_smart, x_r);
        } catch (const NotInSupportError&) {
            miss = true;
        }
    } else {
        miss = true;
    }
    if (miss) r.rank = std::max<std::uint64_t>(1, r.h_smart.support.size());
    if (unsupported) *unsupported = miss;
    r.n_i = r.rank;
    r.log10_space = std::log10(static_cast<double>(r.n_i));
    return r;
}

SearchspaceResult searchspace(const NetworkSpec& spec, const SearchspaceOptions& opts) {
    if (opts.realizations < 1) throw ConfigError("searchspace: realizations must be >= 1");
    SearchspaceResult out;
    const GridPdf beta = opts.compression ? opts.prior.beta_pdf() : point_mass(1.0);
    ProductOptions po;
    po.fft = opts.fft;
    for (int k = 0; k < opts.realizations; ++k) {
        // Realization k reuses the same draws at every alpha (common random numbers).
        const std::uint64_t seed = mix(opts.seed, static_cast<std::uint64_t>(k));
        std::vector<RankResult> layers;
        int unsupported = 0;
        for (std::size_t j = 0; j < spec.layers.size(); ++j) {
            const std::uint64_t x_r = spec.layers[j].shape.ifmap_bytes();
            const double r = opts.compression ? opts.prior.quantile(unit_draw(seed, Stream::beta_sample, j)) : 1.0;
            const double noise = opts.alpha * unit_draw(seed, Stream::noise, j);
            const double y = static_cast<double>(x_r) / r + noise;
            GridPdf h;
            if (opts.alpha > 0.0) {
                // The realized noise is below the observation, so the prior is cut there.
                const double a_hi = std::min(opts.alpha, y * (1.0 - 1e-6));
                h = predict_X(y, uniform_pdf(a_hi * 1e-3, a_hi), beta, po);
            } else {
                h = product_pdf(point_mass(y), reciprocal_pdf(beta), ProductMethod::mellin, po);
            }
            bool miss = false;
            layers.push_back(rank_layer(static_cast<int>(j), h, x_r, opts.volume_cap, &miss));
            unsupported += miss;
        }
        out.realization_log10.push_back(search_space_size(layers));
        if (k == 0) {
            out.layers = std::move(layers);
            out.unsupported = unsupported;
        }
    }
    out.log10_space = std::accumulate(out.realization_log10.begin(), out.realization_log10.end(), 0.0) /
                      static_cast<double>(opts.realizations);
    return out;
}

std::vector<SweepPoint> alpha_sweep(const NetworkSpec& spec, const std::vector<double>& alphas,
                                    const SearchspaceOptions& base) {
    std::vector<SweepPoint> pts;
    for (double a : alphas) {
        SearchspaceOptions o = base;
        o.alpha = a;
        SweepPoint p;
        p.alpha = a;
        o.compression = true;
        p.with_compression = searchspace(spec, o).log10_space;
        o.compression = false;
        p.without_compression = searchspace(spec, o).log10_space;
        pts.push_back(p);
    }
    return pts;
}

HoldsResult cm_holds_pipeline(const std::vector<EventStream>& runs, const std::vector<std::uint64_t>& truth,
                              const LeakedConstants& leaked, const RatioPrior& prior, std::uint64_t volume_cap) {
    std::vector<EventStream> filtered;
    std::uint64_t removed_w = 0, removed_r = 0;
    for (const auto& ev : runs) {
        const auto drop = si_filter(ev);
        EventStream kept;
        kept.reserve(ev.size());
        for (std::size_t i = 0; i < ev.size(); ++i) {
            if (!drop[i]) kept.push_back(ev[i]);
            else (ev[i].op == Op::write ? removed_w : removed_r) += 1;
        }
        filtered.push_back(std::move(kept));
    }
    HoldsResult out;
    out.report = kk_attack(ss_attack(filtered), leaked);
    out.report.kind = "ss+kk+si";
    out.report.removed_writes += removed_w;
    out.report.removed_reads += removed_r;
    double vmax = 0.0;
    for (const auto& l : out.report.layers) vmax = std::max(vmax, l.volume);
    apply_nsqf_prior(out.report, NsqfPrior{1, std::max<std::uint64_t>(volume_cap, static_cast<std::uint64_t>(vmax) + 1)});

    const GridPdf beta = prior.beta_pdf();
    for (std::size_t l = 0; l < truth.size(); ++l) {
        HoldsLayer hl;
        hl.layer = static_cast<int>(l);
        hl.truth = truth[l];
        if (l >= out.report.layers.size()) {
            // Layer not even segmented: nothing to rank.
            hl.estimate = 0.0;
            hl.rel_error = 1.0;
            hl.in_support = false;
            hl.rank = 0;
            out.layers.push_back(hl);
            continue;
        }
        hl.estimate = out.report.layers[l].volume;
        hl.rel_error = std::abs(hl.estimate - static_cast<double>(truth[l])) / static_cast<double>(truth[l]);
        const double y = hl.estimate;
        bool miss = true;
        if (y > 200.0) {
            const auto h = predict_X(y, uniform_pdf(100.0, y - 100.0), beta);
            hl.rank = rank_layer(hl.layer, h, truth[l], volume_cap, &miss).rank;
        }
        hl.in_support = !miss;
        out.layers.push_back(hl);
    }
    out.report.success = std::all_of(out.layers.begin(), out.layers.end(), [](const HoldsLayer& h) {
        return h.rel_error < 0.25 || (h.in_support && h.rank <= 10);
    });
    return out;
}

NetworkSpec with_first_filter(const NetworkSpec& spec, int s) {
    if (spec.layers.empty()) throw ConfigError("network has no layers");
    if (s < 1 || s % 2 == 0) throw DomainError("filter size must be odd and positive");
    NetworkSpec out = spec;
    auto& sh = out.layers[0].shape;
    sh.R = sh.S = s;
    sh.pad = (s - 1) / 2;
    sh.derive_output();
    out.validate();
    return out;
}

LayerOneObservation observe_layer_one(const EventStream& ev, const AddressMap& map) {
    LayerOneObservation o;
    const auto segs = segment_layers(ev, map);
    if (segs.empty()) return o;
    const auto& s0 = segs.front();
    std::vector<double> prefix(ev.size() + 1, 0.0);
    for (std::size_t i = 0; i < ev.size(); ++i) prefix[i + 1] = prefix[i] + ev[i].size;
    o.traffic = prefix[s0.end] - prefix[s0.begin];
    std::unordered_map<std::uint64_t, std::size_t> pending;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = s0.begin; i < ev.size(); ++i) {
        const auto& e = ev[i];
        if (e.op == Op::write) {
            if (i < s0.end) pending[e.addr] = i;
            else pending.erase(e.addr);
            continue;
        }
        auto it = pending.find(e.addr);
        if (it == pending.end()) continue;
        sum += prefix[i] - prefix[it->second + 1];
        ++n;
        pending.erase(it);
    }
    o.rw_distance = n ? sum / static_cast<double>(n) : 0.0;
    return o;
}

std::vector<std::uint8_t> bin_count_bits(const std::vector<double>& traffic, std::uint32_t bin_size) {
    std::vector<std::uint8_t> bits;
    bits.reserve(traffic.size());
    for (double t : traffic) bits.push_back(static_cast<std::uint64_t>(std::llround(t / bin_size)) & 1u);
    return bits;
}

namespace {

struct Pool {
    std::string name;
    LabeledSamples traffic;
    LabeledSamples rw;
};

double abs_cc(const LabeledSamples& s, bool& flagged) {
    std::vector<double> x(s.secret.begin(), s.secret.end());
    try {
        return std::abs(pearson_cc(x, s.leaked));
    } catch (const UndefinedError&) {
        flagged = true;
        return 0.0;
    }
}

double mean_cvm(const LabeledSamples& s) {
    const auto ref = ecdf(s.leaked);
    std::map<int, std::vector<double>> by;
    for (std::size_t i = 0; i < s.secret.size(); ++i) by[s.secret[i]].push_back(s.leaked[i]);
    double acc = 0.0;
    for (auto& [level, v] : by) acc += cvm_test(v, ref);
    return acc / static_cast<double>(by.size());
}

/// Bootstrap dataset: per_level draws with replacement from each level.
LabeledSamples resample(const LabeledSamples& pool, const std::map<int, std::vector<std::size_t>>& index,
                        int per_level, Rng& rng) {
    LabeledSamples out;
    for (const auto& [level, idx] : index) {
        std::uniform_int_distribution<std::size_t> d(0, idx.size() - 1);
        for (int k = 0; k < per_level; ++k) {
            out.secret.push_back(level);
            out.leaked.push_back(pool.leaked[idx[d(rng)]]);
        }
    }
    return out;
}

std::map<int, std::vector<std::size_t>> level_index(const LabeledSamples& s) {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < s.secret.size(); ++i) out[s.secret[i]].push_back(i);
    return out;
}

struct Battery {
    double fi = 0.0, mi = 0.0, cc = 0.0, cvm = 0.0;
    bool flagged = false;
};

/// Mean of each statistic over bootstrap datasets drawn from one pool.
Battery bootstrap(const LabeledSamples& pool, int replicates, int per_level, Rng& rng) {
    const auto idx = level_index(pool);
    Battery b;
    for (int r = 0; r < replicates; ++r) {
        const auto ds = resample(pool, idx, per_level, rng);
        const auto fi = fisher_information(ds);
        const auto mi = mutual_information(ds);
        bool flag = fi.flagged || mi.flagged;
        b.cc += abs_cc(ds, flag);
        b.cvm += mean_cvm(ds);
        b.fi += fi.value;
        b.mi += mi.value;
        b.flagged = b.flagged || flag;
    }
    for (double* v : {&b.fi, &b.mi, &b.cc, &b.cvm}) *v /= replicates;
    return b;
}

std::vector<int> shuffled_labels(std::vector<int> labels, std::uint64_t seed) {
    auto rng = make_stream(seed, Stream::metrics, 1);
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

}  // namespace

MetricsRun leakage_metrics(const NetworkSpec& spec, const MetricsOptions& opts) {
    if (opts.levels.size() < 2) throw ConfigError("metrics: need at least two secret levels");
    if (opts.per_level < 30) throw ConfigError("metrics: per_level must be >= 30");
    TraceOptions sparse;
    sparse.sparse = true;

    Pool base{"baseline", {}, {}}, additive{"additive-" + to_string(opts.additive.kind), {}, {}},
        neuro{"neuroplug", {}, {}};
    for (int s : opts.levels) {
        const auto net = with_first_filter(spec, s);
        const auto weights = generate_weights(net, opts.weight_seed + static_cast<std::uint64_t>(s));
        const auto& first = net.layers[0].shape;
        for (int i = 0; i < opts.pool; ++i) {
            Fmap input;
            if (opts.inputs == CraftPolicy::natural) {
                input = random_input(first, opts.seed * 1'000'003ull + static_cast<std::uint64_t>(i));
            } else {
                const int positions = opts.inputs == CraftPolicy::impulse_row ? first.W : first.H;
                input = craft_inputs(opts.inputs, first, positions, opts.seed).tensors[static_cast<std::size_t>(i % positions)];
            }
            const auto w = make_workload(net, weights, input);
            const std::uint64_t run_seed = mix(opts.seed, static_cast<std::uint64_t>(s) * 1'000'003ull + static_cast<std::uint64_t>(i));
            auto add = [&](Pool& p, const EventStream& ev) {
                const auto o = observe_layer_one(ev, sparse.map);
                p.traffic.secret.push_back(s);
                p.traffic.leaked.push_back(o.traffic);
                p.rw.secret.push_back(s);
                p.rw.leaked.push_back(o.rw_distance);
            };
            add(base, baseline_trace(w, sparse).events);
            add(additive, additive_cm_trace(w, opts.additive, run_seed, sparse).events);
            NeuroplugSession session(w, opts.key, sparse);
            add(neuro, session.run(run_seed).events);
        }
    }
    // Random reference: the NeuroPlug pool with labels shuffled.
    Pool rnd = neuro;
    rnd.name = "random";
    rnd.traffic.secret = rnd.rw.secret = shuffled_labels(rnd.traffic.secret, opts.seed);

    MetricsRun run;
    const std::array<const Pool*, 4> pools{&base, &additive, &neuro, &rnd};
    for (std::size_t pi = 0; pi < pools.size(); ++pi) {
        const Pool* p = pools[pi];
        ConfigMetrics m;
        m.name = p->name;
        m.replicates = static_cast<std::uint64_t>(opts.replicates);
        auto rng = make_stream(opts.seed, Stream::metrics, 100 + pi);
        const auto t = bootstrap(p->traffic, opts.replicates, opts.per_level, rng);
        const auto d = bootstrap(p->rw, opts.replicates, opts.per_level, rng);
        m.fi_traffic = t.fi, m.mi_traffic = t.mi, m.cc_traffic = t.cc, m.cvm_traffic = t.cvm;
        m.fi_rw = d.fi, m.mi_rw = d.mi, m.cc_rw = d.cc, m.cvm_rw = d.cvm;
        m.flagged = t.flagged || d.flagged;
        if (p == &neuro) {
            const auto bits = bin_count_bits(p->traffic.leaked, opts.key.bins.bin_size);
            m.runs_p = runs_test(bits).value;
        }
        run.report.configs.push_back(m);
        run.traffic.push_back({p->name, p->traffic});
        run.rw.push_back({p->name, p->rw});
    }
    return run;
}

BoundaryLeakage huffduff_leakage(const NetworkSpec& spec, const BoundaryOptions& opts) {
    if (opts.levels.size() < 2) throw ConfigError("boundary leakage: need at least two secret levels");
    if (opts.runs_per_position < 1) throw ConfigError("boundary leakage: runs_per_position must be >= 1");
    if (opts.permutations < 1) throw ConfigError("boundary leakage: permutations must be >= 1");
    TraceOptions sparse;
    sparse.sparse = true;
    BoundaryLeakage out;
    LabeledSamples base, neuro;
    for (int s : opts.levels) {
        const auto net = with_first_filter(spec, s);
        const auto weights = generate_weights(net, opts.weight_seed + static_cast<std::uint64_t>(s));
        HuffduffQuery q;
        q.first = net.layers[0].shape;
        q.seed = opts.seed;
        const auto baseline = huffduff_attack(q, [&](const Fmap& in) {
            return baseline_trace(make_workload(net, weights, in), sparse).events;
        });
        out.inferred.push_back({s, baseline.layers.empty() ? 0 : baseline.layers[0].filter_cols});
        for (double v : baseline.series) {
            base.secret.push_back(s);
            base.leaked.push_back(v);
        }
        for (int k = 0; k < opts.runs_per_position; ++k) {
            // Each sweep meets a fresh model instance: S is the secret, the weights a nuisance.
            const auto inst = generate_weights(net, mix(opts.weight_seed + static_cast<std::uint64_t>(s), k + 1ull));
            std::uint64_t position = 0;
            const auto rep = huffduff_attack(q, [&](const Fmap& in) {
                const auto w = make_workload(net, inst, in);
                NeuroplugSession session(w, opts.key, sparse);
                const auto run_seed = mix(opts.seed, (static_cast<std::uint64_t>(s) << 40) ^
                                                         (static_cast<std::uint64_t>(k) << 20) ^ position++);
                return session.run(run_seed).events;
            });
            for (double v : rep.series) {
                neuro.secret.push_back(s);
                neuro.leaked.push_back(v);
            }
        }
    }
    const std::array<std::pair<const char*, const LabeledSamples*>, 2> pools{{{"baseline", &base}, {"neuroplug", &neuro}}};
    for (std::size_t pi = 0; pi < pools.size(); ++pi) {
        auto rng = make_stream(opts.seed, Stream::metrics, 200 + pi);
        const auto b = bootstrap(*pools[pi].second, opts.replicates, opts.per_level, rng);
        out.configs.push_back({pools[pi].first, b.fi, b.mi, b.flagged});
        out.series.push_back({pools[pi].first, *pools[pi].second});
    }

    // Sweeps are the exchangeable units, so the null permutes whole sweeps;
    // the floor averages several such permutations.
    const std::size_t per_sweep = neuro.secret.size() / (opts.levels.size() * opts.runs_per_position);
    std::vector<int> sweep_labels;
    for (std::size_t i = 0; i < neuro.secret.size(); i += per_sweep) sweep_labels.push_back(neuro.secret[i]);
    BoundaryConfig floor{"random", 0.0, 0.0, false};
    LabeledSamples rnd = neuro;
    for (int perm = 0; perm < opts.permutations; ++perm) {
        const auto labels = shuffled_labels(sweep_labels, mix(opts.seed, perm));
        for (std::size_t i = 0; i < rnd.secret.size(); ++i) rnd.secret[i] = labels[i / per_sweep];
        auto rng = make_stream(opts.seed, Stream::metrics, 300 + perm);
        const auto b = bootstrap(rnd, opts.replicates, opts.per_level, rng);
        floor.fi += b.fi / opts.permutations;
        floor.mi += b.mi / opts.permutations;
        floor.flagged = floor.flagged || b.flagged;
        if (perm == 0) out.series.push_back({"random", rnd});
    }
    out.configs.push_back(floor);
    return out;
}

}  // namespace tracelab
