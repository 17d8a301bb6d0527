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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Settings come from the shipped run configs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/oracles.hpp"
#include "tracelab/attacks.hpp"
#include "tracelab/binpack.hpp"
#include "tracelab/compress.hpp"
#include "tracelab/error.hpp"
#include "tracelab/mellin.hpp"
#include "tracelab/model.hpp"
#include "tracelab/noise.hpp"
#include "tracelab/runconfig.hpp"
#include "tracelab/scenario.hpp"
#include "tracelab/stats.hpp"
#include "tracelab/tracegen.hpp"

using namespace tracelab;

namespace {

const std::string kRoot = TRACELAB_SOURCE_DIR;

RunConfig run_config(const std::string& name) { return load_run_config(kRoot + "/configs/runs/" + name + ".json"); }

Workload victim(const RunConfig& c) {
    return make_workload(c.network, random_input(c.network.layers.front().shape, c.input_seed), c.weight_seed);
}

/// Collects sub-checks of one criterion and the numbers behind them.
struct Criterion {
    int id;
    std::string title;
    bool ok = true;
    std::ostringstream detail;

    void check(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "[fail: " << what << "] ";
        }
    }
    template <class T>
    void note(const std::string& key, const T& v) {
        detail << key << "=" << v << " ";
    }
};

int failures = 0;

void run(int id, const std::string& title, double limit_s, const std::function<void(Criterion&)>& body) {
    Criterion c{id, title};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0) c.check(secs < limit_s, "runtime over " + std::to_string(int(limit_s)) + " s");
    failures += !c.ok;
    std::printf("%s criterion %d: %s (%.1f s) %s\n", c.ok ? "PASS" : "FAIL", id, title.c_str(), secs,
                c.detail.str().c_str());
    std::fflush(stdout);
}

// Criterion 1 ------------------------------------------------------------------

void attacks_break(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    auto lap = [&](const char* what) {
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.check(s < 60.0, std::string(what) + " over 1 min");
    };
    {
        const auto cfg = run_config("dummy-writes");
        const auto tr = additive_cm_trace(victim(cfg), cfg.additive, mix(cfg.seed, 0));
        const auto rep = ss_attack({tr.events});
        const auto got = rep.layers.empty() ? 0 : rep.layers[0].write_count;
        c.note("dummy_writes.recovered", got);
        c.check(got == 1568 && tr.layers[0].ofmap_writes == 1568, "ss vs dummy-writes");
        lap("dummy-writes");
    }
    {
        const auto t1 = std::chrono::steady_clock::now();
        const auto cfg = run_config("const-mean");
        const auto w = victim(cfg);
        std::vector<EventStream> runs;
        for (int i = 0; i < cfg.runs; ++i) runs.push_back(additive_cm_trace(w, cfg.additive, mix(cfg.seed, i)).events);
        const auto rep = kk_attack(ss_attack(runs), cfg.attack.leaked);
        const double v = rep.layers.empty() ? -1 : rep.layers[0].volume;
        c.note("const_mean.volume", v);
        c.check(v == 150528.0, "ss+kk vs const-mean");
        c.check(std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count() < 60.0,
                "const-mean over 1 min");
    }
    {
        const auto t1 = std::chrono::steady_clock::now();
        const auto cfg = run_config("layer-divider");
        const auto tr = additive_cm_trace(victim(cfg), cfg.additive, mix(cfg.seed, 0));
        const auto drop = si_filter(tr.events);
        std::uint64_t fake = 0, fake_dropped = 0, true_dropped = 0;
        for (std::size_t i = 0; i < tr.events.size(); ++i) {
            if (tr.events[i].op != Op::write) continue;
            fake += tr.truth[i].fake;
            if (drop[i]) ++(tr.truth[i].fake ? fake_dropped : true_dropped);
        }
        const auto rep = si_attack({tr.events}, cfg.observability.values);
        c.note("layer_divider.fake", fake);
        c.note("stripped", fake_dropped);
        c.note("true_dropped", true_dropped);
        c.check(fake > 0 && fake_dropped == fake && true_dropped == 0, "si vs layer-divider");
        c.check(rep.layers.size() == cfg.network.layers.size(), "si layer count");
        c.check(std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count() < 60.0,
                "layer-divider over 1 min");
    }
}

// Criterion 2 ------------------------------------------------------------------

void cm_holds(Criterion& c) {
    const auto cfg = run_config("neuroplug");
    NeuroplugSession session(victim(cfg), cfg.key, cfg.trace);
    std::vector<EventStream> runs;
    std::vector<std::uint64_t> truth;
    for (int i = 0; i < cfg.runs; ++i) {
        auto t = session.run(mix(cfg.seed, i));
        if (i == 0)
            for (const auto& l : t.layers) truth.push_back(l.ifmap_bytes);
        runs.push_back(observe(t.events, cfg.observability));
    }
    const auto h = cm_holds_pipeline(runs, truth, cfg.attack.leaked, cfg.attack.prior, cfg.attack.volume_cap);
    double min_err = 1e300;
    std::uint64_t min_rank = ~0ull;
    for (const auto& l : h.layers) {
        min_err = std::min(min_err, l.rel_error);
        if (l.in_support) min_rank = std::min(min_rank, l.rank);
        c.check(l.rel_error >= 0.25, "layer " + std::to_string(l.layer) + " rel error < 25%");
        c.check(!l.in_support || l.rank > 10, "layer " + std::to_string(l.layer) + " rank <= 10");
    }
    c.note("runs", runs.size());
    c.note("layers", h.layers.size());
    c.note("min_rel_error", min_err);
    c.note("min_rank_in_support", min_rank == ~0ull ? 0 : min_rank);
    c.check(h.layers.size() == truth.size(), "one estimate per layer");
}

// Criterion 3 ------------------------------------------------------------------

GridPdf mc_product(double a0, double a1, double b0, double b1, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> du(a0, a1), dv(b0, b1);
    const std::size_t n = 1'000'000, bins = 400;
    const double lo = a0 * b0, hi = a1 * b1, w = (hi - lo) / bins;
    std::vector<double> counts(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = du(rng) * dv(rng);
        const auto b = std::size_t((z - lo) / w);
        if (z >= lo && b < bins) counts[b] += 1;
    }
    GridPdf g;
    for (std::size_t b = 0; b < bins; ++b) {
        g.grid.push_back(lo + (double(b) + 0.5) * w);
        g.density.push_back(counts[b] / (double(n) * w));
    }
    return g;
}

void mellin_engine(Criterion& c) {
    const auto e = tabulate([](double x) { return std::exp(-x); }, 1e-4, 40.0, 1u << 14, true);
    FftOptions at2;
    at2.c = 2.0;
    const double riemann = mellin_riemann(e, {{2.0, 0.0}}).values[0].real();
    const double fft = mellin_fft(e, at2).values[0].real();
    c.note("M2_riemann", riemann);
    c.note("M2_fft", fft);
    c.check(std::abs(riemann - 1.0) <= 1e-3 && std::abs(fft - 1.0) <= 1e-3, "M(e^-x)(2)");

    const auto u = uniform_pdf(1e-6, 1.0, 1u << 14);
    double worst = 0;
    for (const auto* pdf : {&e, &u}) {
        const auto ff = mellin_fft(*pdf);
        std::vector<std::complex<double>> s;
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < ff.n; ++j)
            if (std::abs(ff.s[j].imag()) <= 10.0) {
                s.push_back(ff.s[j]);
                idx.push_back(j);
            }
        const auto rr = mellin_riemann(*pdf, s);
        for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(rr.values[i] - ff.values[idx[i]]));
    }
    c.note("fft_vs_riemann", worst);
    c.check(worst < 1e-2, "FFT vs Riemann");

    struct Pair {
        double a0, a1, b0, b1;
    };
    double tv_max = 0;
    std::uint64_t seed = 1;
    for (auto p : {Pair{1e-6, 1, 1, 2}, Pair{2, 5, 0.1, 0.4}, Pair{10, 11, 3, 8}}) {
        const auto m = product_pdf(uniform_pdf(p.a0, p.a1), uniform_pdf(p.b0, p.b1));
        tv_max = std::max(tv_max, tv_distance(m, mc_product(p.a0, p.a1, p.b0, p.b1, seed++)));
    }
    c.note("product_tv_max", tv_max);
    c.check(tv_max <= 0.02, "product vs Monte Carlo");
}

// Criterion 4 ------------------------------------------------------------------

void smart_rank(Criterion& c) {
    GridPdf g{{8, 9, 10, 11, 12}, {0.25, 0.25, 0.25, 0.25, 0.25}};
    const auto s = smart_search_space(g, 8, 12);
    const std::map<std::uint64_t, double> want{{8, 0.2}, {9, 0.4}, {12, 0.4}};
    bool exact = s.support.size() == want.size();
    for (std::size_t i = 0; exact && i < s.support.size(); ++i)
        exact = want.count(s.support[i]) && std::abs(s.prob[i] - want.at(s.support[i])) < 1e-12;
    c.check(exact, "h' fixture");
    const auto r8 = rank(s, 8);
    c.note("rank8", r8);
    c.check(r8 == 3, "rank tie-break");
    c.check(rank(s, 9) == 1, "mode ranks first");

    auto cfg = run_config("searchspace");
    std::map<RatioDist, double> size;
    for (RatioDist d : cfg.searchspace.priors) {
        auto o = cfg.searchspace.base;
        o.prior.dist = d;
        size[d] = searchspace(cfg.network, o).log10_space;
        c.note(to_string(d), size[d]);
    }
    c.check(size[RatioDist::uniform] > size[RatioDist::geometric] && size[RatioDist::uniform] > size[RatioDist::normal],
            "uniform prior maximizes rank");
}

// Criterion 5 ------------------------------------------------------------------

void compression_sweep(Criterion& c) {
    const auto cfg = run_config("searchspace");
    const auto& ss = cfg.searchspace;
    const auto sweep = alpha_sweep(cfg.network, ss.alphas, ss.base);
    bool monotone = true, found = false;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (i > 0 && sweep[i].with_compression < sweep[i - 1].with_compression) monotone = false;
        if (sweep[i].alpha == ss.base.alpha) {
            found = true;
            const double gap = sweep[i].with_compression - sweep[i].without_compression;
            c.note("alpha", sweep[i].alpha);
            c.note("with", sweep[i].with_compression);
            c.note("without", sweep[i].without_compression);
            c.note("gap", gap);
            c.check(gap >= 20.0, "compression gap >= 20");
        }
    }
    std::ostringstream curve;
    for (const auto& p : sweep) curve << p.with_compression << (&p == &sweep.back() ? "" : ",");
    c.note("curve", curve.str());
    c.check(found, "reference alpha in sweep");
    c.check(monotone, "sweep monotone");
}

// Criteria 6 and 7 share the metrics run config -----------------------------------

void huffduff_case(Criterion& c) {
    const auto cfg = run_config("metrics");
    const auto b = huffduff_leakage(cfg.network, cfg.boundary);
    std::ostringstream inf;
    for (const auto& [s, h] : b.inferred) {
        inf << s << "->" << h << " ";
        c.check(s == h, "inferred S for S=" + std::to_string(s));
    }
    c.note("inferred", "{" + inf.str() + "}");
    c.check(b.inferred.size() == 4, "four filter sizes");
    std::map<std::string, double> fi;
    for (const auto& x : b.configs) fi[x.name] = x.fi;
    const double ratio = fi["neuroplug"] / fi["random"];
    c.note("fi_neuroplug", fi["neuroplug"]);
    c.note("fi_random", fi["random"]);
    c.note("ratio", ratio);
    c.check(std::abs(ratio - 1.0) <= 0.06, "boundary FI within 6% of random");
}

void stat_battery(Criterion& c) {
    const auto cfg = run_config("metrics");
    const auto run = leakage_metrics(cfg.network, cfg.metrics);
    std::map<std::string, ConfigMetrics> by;
    for (const auto& m : run.report.configs) by[m.name] = m;
    const auto& np = by.at("neuroplug");
    const auto& rnd = by.at(run.report.reference);
    const auto& add = by.at("additive-" + to_string(cfg.metrics.additive.kind));
    const std::vector<std::pair<std::string, double ConfigMetrics::*>> cols{
        {"fi_traffic", &ConfigMetrics::fi_traffic}, {"mi_traffic", &ConfigMetrics::mi_traffic},
        {"cc_traffic", &ConfigMetrics::cc_traffic}, {"cvm_traffic", &ConfigMetrics::cvm_traffic},
        {"fi_rw", &ConfigMetrics::fi_rw},           {"mi_rw", &ConfigMetrics::mi_rw},
        {"cc_rw", &ConfigMetrics::cc_rw},           {"cvm_rw", &ConfigMetrics::cvm_rw}};
    for (const auto& [name, p] : cols) {
        std::ostringstream v;
        v << np.*p << "/" << add.*p << "/" << rnd.*p;
        c.note(name, v.str());
        c.check(np.*p < add.*p, name + " not below additive");
        c.check(np.*p <= 2.0 * rnd.*p, name + " over 2x random");
    }
    c.note("runs_p", np.runs_p);
    c.check(np.runs_p > 0.05, "runs test p");
}

// Criterion 8 ------------------------------------------------------------------

void invariants(Criterion& c) {
    // Bin roundtrip over random tile sets.
    BinConfig bins{4096, 8, 8};
    NoiseSpec pad;
    pad.alpha = 200;
    pad.support_R = 400;
    pad.sigma2_max = 200 * 200;
    Rng rng(2026);
    int bad_sets = 0;
    for (int round = 0; round < 1000; ++round) {
        const auto n = std::uniform_int_distribution<std::size_t>(0, 24)(rng);
        std::vector<std::vector<std::uint8_t>> raw;
        std::vector<CompressedTile> tiles;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::uint8_t> r(std::uniform_int_distribution<std::size_t>(1, 3000)(rng));
            for (auto& b : r) b = std::uint8_t(rng() % 3 ? 0 : rng());
            CompressedTile t;
            if (i % 4 == 0) {
                const auto d = inject_dummy(r, std::int64_t(rng() % 128), rng);
                t = compress_tile(d.bytes, std::uint32_t(i));
                t.dummy_spans = d.spans;
            } else {
                t = compress_tile(r, std::uint32_t(i));
            }
            raw.push_back(std::move(r));
            tiles.push_back(std::move(t));
        }
        const auto packed = pack_bins(tiles, bins, pad, rng);
        const auto back = unpack_bins(packed.bins, bins);
        bool same = back.size() == raw.size();
        for (std::size_t i = 0; same && i < raw.size(); ++i) same = back[i].bytes == raw[i];
        for (const auto& b : packed.bins) same = same && b.image.size() == bins.bin_size;
        bad_sets += !same;
    }
    c.note("roundtrip_failures", bad_sets);
    c.check(bad_sets == 0, "bin roundtrip");

    // NeuroPlug event sizes and timing.
    const auto npc = run_config("neuroplug");
    const auto w = victim(npc);
    NeuroplugSession session(w, npc.key, npc.trace);
    std::set<std::uint64_t> sizes, gaps;
    for (int i = 0; i < 5; ++i) {
        const auto t = session.run(mix(npc.seed, i));
        for (std::size_t k = 0; k < t.events.size(); ++k) {
            sizes.insert(t.events[k].size);
            if (k > 0) gaps.insert(t.events[k].t - t.events[k - 1].t);
        }
    }
    c.note("event_sizes", sizes.size());
    c.note("timing_gaps", gaps.size());
    c.check(sizes == std::set<std::uint64_t>{npc.key.bins.bin_size}, "NeuroPlug event size");
    c.check(gaps.size() == 1, "NeuroPlug timing variance");

    // Baseline conservation: bytes written by layer l are what layer l+1 reads.
    const auto base = baseline_trace(w);
    const int L = int(npc.network.layers.size());
    std::vector<std::uint64_t> wrote(L, 0), read(L, 0);
    std::vector<std::set<std::uint64_t>> seen(L);
    for (std::size_t i = 0; i < base.events.size(); ++i) {
        const auto& e = base.events[i];
        const int l = base.truth[i].layer;
        if (e.op == Op::write) wrote[l] += e.size;
        if (e.op == Op::read && base.truth[i].kind == EventKind::ifmap && seen[l].insert(e.addr).second)
            read[l] += e.size;
    }
    bool conserved = true;
    for (int l = 0; l + 1 < L; ++l) conserved = conserved && wrote[l] == read[l + 1];
    c.check(conserved, "baseline volume conservation");

    // Heteroskedastic noise stream vs a Gaussian control on the same regressor.
    NoiseSpec ns;
    ns.variance_block = 100;
    NoiseSampler sampler(ns, Rng(7));
    const int n = 1000;
    std::vector<double> draws(n), sig(n), control(n);
    Rng crng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        draws[i] = sampler.next();
        sig[i] = sampler.current_sigma2();
        control[i] = gauss(crng);
    }
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    for (auto& d : draws) d -= mean;
    const auto h = heteroskedasticity_tests(sig, draws);
    const auto g = heteroskedasticity_tests(sig, control);
    c.note("noise_white_p", h.white_p);
    c.note("noise_bp_p", h.bp_p);
    c.note("control_white_p", g.white_p);
    c.note("control_bp_p", g.bp_p);
    c.check(h.white_p < 0.05 && h.bp_p < 0.05, "noise heteroskedastic");
    c.check(g.white_p >= 0.05 && g.bp_p >= 0.05, "control homoskedastic");
}

// Criterion 9 ------------------------------------------------------------------

void nsqf_oracle(Criterion& c) {
    const std::uint64_t N = 1'000'000;
    const auto mask = nsqf_mask(1, N);
    std::uint64_t mismatches = 0, count = 0;
    for (std::uint64_t n = 1; n <= N; ++n) {
        const bool sieve = mask[n - 1] != 0;
        count += sieve;
        mismatches += sieve != is_nsqf(n) || sieve != oracle::nsqf(n);
    }
    c.note("nsqf_count", count);
    c.note("mismatches", mismatches);
    c.check(mismatches == 0, "is_nsqf vs sieve");
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto want = [&](int id) { return only.empty() || only.count(id); };

    if (want(1)) run(1, "attacks break additive countermeasures", 180, attacks_break);
    if (want(2)) run(2, "full pipeline does not break NeuroPlug", 600, cm_holds);
    if (want(3)) run(3, "Mellin engine accuracy", 30, mellin_engine);
    if (want(4)) run(4, "smart search space and rank", 0, smart_rank);
    if (want(5)) run(5, "compression widens the search space", 900, compression_sweep);
    if (want(6)) run(6, "HuffDuff boundary effect", 600, huffduff_case);
    if (want(7)) run(7, "statistical battery orderings", 0, stat_battery);
    if (want(8)) run(8, "pipeline invariants", 0, invariants);
    if (want(9)) run(9, "NSQF oracle equivalence", 10, nsqf_oracle);
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
