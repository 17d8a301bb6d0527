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

#include "tracelab/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "tracelab/error.hpp"
#include "tracelab/rng.hpp"
#include "tracelab/runconfig.hpp"

namespace fs = std::filesystem;

namespace tracelab {

namespace {

enum class Format { csv, json };

struct Context {
    RunConfig cfg;
    Format format = Format::json;
    std::ostream& out;
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
    if (!fs::exists(p)) throw ConfigError("missing " + p.string());
    return read_json_file(p);
}

Workload victim_workload(const RunConfig& c) {
    return make_workload(c.network, random_input(c.network.layers.front().shape, c.input_seed), c.weight_seed);
}

json truth_json(const std::vector<LayerTruth>& layers) {
    json arr = json::array();
    for (const auto& t : layers)
        arr.push_back({{"ifmap_bytes", t.ifmap_bytes},
                       {"ofmap_bytes", t.ofmap_bytes},
                       {"ofmap_writes", t.ofmap_writes},
                       {"filter_rows", t.filter_rows},
                       {"filter_cols", t.filter_cols}});
    return arr;
}

json report_json(const BinPackReport& r) {
    return {{"layer", r.layer},       {"tiles_in", r.tiles_in},       {"bins_out", r.bins_out},
            {"beta", r.beta},         {"noise_total", r.noise_total}, {"raw_total", r.raw_total},
            {"comp_total", r.comp_total}};
}

std::string run_name(int i, bool binary) {
    std::ostringstream s;
    s << "run_" << std::setw(5) << std::setfill('0') << i << (binary ? ".bin" : ".csv");
    return s.str();
}

// simulate -------------------------------------------------------------------

int cmd_simulate(Context& ctx) {
    const auto& c = ctx.cfg;
    const fs::path dir = c.out / "traces";
    fs::create_directories(dir);
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().rfind("run_", 0) == 0) fs::remove(e.path());

    const auto w = victim_workload(c);
    std::optional<NeuroplugSession> session;
    if (c.scenario == Scenario::neuroplug) session.emplace(w, c.key, c.trace);

    std::vector<LayerTruth> truth;
    json reports = json::array();
    std::ostringstream bins_csv;
    bins_csv << "run,tensor,bins\n";
    std::uint64_t events_total = 0;
    json first_cdtv;
    for (int i = 0; i < c.runs; ++i) {
        const std::uint64_t run_seed = mix(c.seed, static_cast<std::uint64_t>(i));
        Trace t;
        switch (c.scenario) {
            case Scenario::baseline: t = baseline_trace(w, c.trace); break;
            case Scenario::additive: t = additive_cm_trace(w, c.additive, run_seed, c.trace); break;
            case Scenario::neuroplug: t = session->run(run_seed); break;
        }
        if (i == 0) {
            truth = t.layers;
            for (const auto& r : t.tensor_reports) reports.push_back(report_json(r));
            const auto s = cdtv(t.events);
            first_cdtv = {{"read_bytes", s.read_bytes}, {"write_bytes", s.write_bytes}, {"events", t.events.size()}};
        }
        for (std::size_t j = 0; j < t.tensor_reports.size(); ++j)
            bins_csv << i << ',' << j << ',' << t.tensor_reports[j].bins_out << '\n';
        const auto shown = observe(t.events, c.observability);
        events_total += shown.size();
        std::ofstream f(dir / run_name(i, c.binary_traces), std::ios::binary);
        if (!f) throw ConfigError("cannot write traces under " + dir.string());
        if (c.binary_traces) write_trace_binary(f, shown);
        else write_trace_csv(f, shown);
    }

    write_json(c.out / "truth.json", {{"config_hash", c.hash}, {"layers", truth_json(truth)}});
    if (c.scenario == Scenario::neuroplug) {
        json plans = json::array();
        for (const auto& p : session->plans()) {
            // Full SFC sequences are large; the order kind is enough here.
            json j = plan_to_json(p);
            for (const char* k : {"ifmap_order", "weight_order", "ofmap_order"}) j[k] = j[k]["kind"];
            plans.push_back(j);
        }
        write_json(c.out / "binpack.json", {{"config_hash", c.hash}, {"tensors", reports}, {"plans", plans}});
        write_text(c.out / "bins.csv", bins_csv.str());
    }
    const json manifest = {{"config_hash", c.hash},
                           {"scenario", to_string(c.scenario)},
                           {"runs", c.runs},
                           {"trace_format", c.binary_traces ? "binary" : "csv"},
                           {"events_total", events_total},
                           {"first_run", first_cdtv},
                           {"config", c.doc}};
    write_json(c.out / "simulate.json", manifest);
    ctx.out << "simulate: " << c.runs << " run(s), " << events_total << " events -> " << dir.string() << "\n";
    return exit_ok;
}

// attack ---------------------------------------------------------------------

std::vector<EventStream> load_traces(const RunConfig& c) {
    const fs::path dir = c.out / "traces";
    if (!fs::is_directory(dir)) throw ConfigError("no traces under " + dir.string() + " (run simulate first)");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("run_", 0) == 0) files.push_back(e.path());
    }
    if (files.empty()) throw ConfigError("no traces under " + dir.string() + " (run simulate first)");
    std::sort(files.begin(), files.end());
    std::vector<EventStream> runs;
    for (const auto& p : files) {
        std::ifstream f(p, std::ios::binary);
        runs.push_back(p.extension() == ".bin" ? read_trace_binary(f) : read_trace_csv(f));
    }
    return runs;
}

std::vector<LayerTruth> load_truth(const RunConfig& c) {
    const auto j = read_json(c.out / "truth.json");
    std::vector<LayerTruth> t;
    for (const auto& l : j.at("layers")) {
        LayerTruth x;
        x.ifmap_bytes = l.at("ifmap_bytes");
        x.ofmap_bytes = l.at("ofmap_bytes");
        x.ofmap_writes = l.at("ofmap_writes");
        x.filter_rows = l.at("filter_rows");
        x.filter_cols = l.at("filter_cols");
        t.push_back(x);
    }
    return t;
}

/// Victim oracle for crafted-input attacks: one fresh inference per query.
std::function<EventStream(const Fmap&)> victim_oracle(const RunConfig& c, const std::vector<LayerWeights>& weights,
                                                      std::uint64_t& counter) {
    return [&c, &weights, &counter](const Fmap& in) {
        const auto w = make_workload(c.network, weights, in);
        const std::uint64_t s = mix(c.seed, counter++);
        Trace t;
        switch (c.scenario) {
            case Scenario::baseline: t = baseline_trace(w, c.trace); break;
            case Scenario::additive: t = additive_cm_trace(w, c.additive, s, c.trace); break;
            case Scenario::neuroplug: t = NeuroplugSession(w, c.key, c.trace).run(s); break;
        }
        return observe(t.events, c.observability);
    };
}

bool in_top10(const LayerEstimate& e, std::uint64_t truth) {
    if (e.candidates.empty()) return static_cast<std::uint64_t>(std::llround(e.volume)) == truth;
    const auto n = std::min<std::size_t>(10, e.candidates.size());
    return std::find(e.candidates.begin(), e.candidates.begin() + static_cast<std::ptrdiff_t>(n), truth) !=
           e.candidates.begin() + static_cast<std::ptrdiff_t>(n);
}

int cmd_attack(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& a = c.attack;
    AttackOptions opts;
    opts.map = c.trace.map;
    AttackReport rep;
    json extra = json::object();
    bool broken = false;
    json rows = json::array();

    if (a.pipeline == Pipeline::huffduff || a.pipeline == Pipeline::reverse) {
        if (a.pipeline == Pipeline::huffduff) {
            const auto weights = generate_weights(c.network, c.weight_seed);
            std::uint64_t counter = 0;
            HuffduffQuery q;
            q.first = c.network.layers.front().shape;
            q.sparse_trace = c.trace.sparse;
            q.column_sweep = a.column_sweep;
            q.seed = c.seed;
            q.map = c.trace.map;
            rep = huffduff_attack(q, victim_oracle(c, weights, counter));
            const int S = q.first.S;
            const int est = rep.layers.empty() ? 0 : rep.layers.front().filter_cols;
            broken = rep.success && est == S;
            rows.push_back({{"layer", 0}, {"truth_S", S}, {"inferred_S", est}});
        } else {
            const auto runs = load_traces(c);
            rep = reverse_engg_attack(runs.front(), ReverseBounds{}, opts);
            broken = rep.success && rep.layers.size() == c.network.layers.size();
            for (std::size_t l = 0; l < rep.layers.size() && l < c.network.layers.size(); ++l) {
                const auto& s = c.network.layers[l].shape;
                const std::vector<std::uint64_t> truth{std::uint64_t(s.C), std::uint64_t(s.H), std::uint64_t(s.K),
                                                       std::uint64_t(s.R), std::uint64_t(s.pool)};
                const auto& cand = rep.layers[l].candidates;
                bool hit = false;
                for (std::size_t k = 0; k + 5 <= cand.size(); k += 5)
                    hit = hit || std::equal(truth.begin(), truth.end(), cand.begin() + static_cast<std::ptrdiff_t>(k));
                broken = broken && hit;
                rows.push_back({{"layer", l}, {"candidates", rep.layers[l].candidate_count}, {"truth_found", hit}});
            }
        }
    } else {
        const auto runs = load_traces(c);
        const auto truth = load_truth(c);
        if (a.pipeline == Pipeline::ss_kk_si) {
            std::vector<std::uint64_t> tv;
            for (const auto& t : truth) tv.push_back(t.ifmap_bytes);
            const auto h = cm_holds_pipeline(runs, tv, a.leaked, a.prior, a.volume_cap);
            rep = h.report;
            broken = h.report.success;
            for (const auto& l : h.layers)
                rows.push_back({{"layer", l.layer},
                                {"truth", l.truth},
                                {"estimate", l.estimate},
                                {"rel_error", l.rel_error},
                                {"rank", l.rank},
                                {"in_support", l.in_support}});
        } else {
            switch (a.pipeline) {
                case Pipeline::ss: rep = ss_attack(runs, opts); break;
                case Pipeline::ss_kk: rep = kk_attack(ss_attack(runs, opts), a.leaked); break;
                default: rep = si_attack(runs, c.observability.values, a.nsqf_prior, opts); break;
            }
            std::vector<int> layers = a.layers;
            if (layers.empty())
                for (std::size_t l = 0; l < truth.size(); ++l) layers.push_back(static_cast<int>(l));
            broken = rep.layers.size() == truth.size();
            for (int l : layers) {
                if (static_cast<std::size_t>(l) >= rep.layers.size() || static_cast<std::size_t>(l) >= truth.size()) {
                    broken = false;
                    continue;
                }
                const auto& e = rep.layers[static_cast<std::size_t>(l)];
                const auto& t = truth[static_cast<std::size_t>(l)];
                bool ok = in_top10(e, t.ifmap_bytes);
                if (a.pipeline != Pipeline::ss_kk) ok = ok && e.write_count == t.ofmap_writes;
                broken = broken && ok;
                rows.push_back({{"layer", l},
                                {"truth", t.ifmap_bytes},
                                {"estimate", e.volume},
                                {"truth_writes", t.ofmap_writes},
                                {"write_count", e.write_count},
                                {"recovered", ok}});
            }
        }
    }

    const std::string outcome = broken ? "broken" : "held";
    const json doc = {{"config_hash", c.hash},
                      {"pipeline", to_string(a.pipeline)},
                      {"scenario", to_string(c.scenario)},
                      {"outcome", outcome},
                      {"expect", a.expect},
                      {"layers", rows},
                      {"report", to_json(rep)}};
    fs::create_directories(c.out);
    if (ctx.format == Format::json) {
        write_json(c.out / "attack.json", doc);
    } else {
        std::ostringstream s;
        s << "config_hash,pipeline,outcome,layer,truth,estimate,detail\n";
        for (const auto& r : rows) {
            s << c.hash << ',' << to_string(a.pipeline) << ',' << outcome << ',' << r.value("layer", 0) << ','
              << (r.contains("truth") ? r["truth"].dump() : r.value("truth_S", json()).dump()) << ','
              << (r.contains("estimate") ? r["estimate"].dump() : r.value("inferred_S", json()).dump()) << ','
              << (r.contains("rank") ? "rank=" + r["rank"].dump() : "") << '\n';
        }
        write_text(c.out / "attack.csv", s.str());
    }
    ctx.out << "attack " << to_string(a.pipeline) << ": " << outcome;
    if (!a.expect.empty()) ctx.out << " (expected " << a.expect << ")";
    ctx.out << "\n";
    if (!a.expect.empty() && a.expect != outcome) return exit_expectation;
    return exit_ok;
}

// searchspace ----------------------------------------------------------------

int cmd_searchspace(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& ss = c.searchspace;
    fs::create_directories(c.out / "pdf");
    json priors = json::object();
    for (RatioDist d : ss.priors) {
        SearchspaceOptions o = ss.base;
        o.prior.dist = d;
        priors[to_string(d)] = searchspace(c.network, o).log10_space;
    }
    const auto main = searchspace(c.network, ss.base);
    std::ostringstream ranks;
    ranks << "layer,x_r,rank,n_i,log10\n";
    json layers = json::array();
    for (const auto& r : main.layers) {
        layers.push_back(to_json(r));
        ranks << r.layer << ',' << r.x_r << ',' << r.rank << ',' << r.n_i << ',' << r.log10_space << '\n';
        std::ofstream f(c.out / "pdf" / ("h_layer_" + std::to_string(r.layer) + ".csv"));
        write_grid_pdf_csv(f, r.h);
    }
    const auto sweep = alpha_sweep(c.network, ss.alphas, ss.base);
    std::ostringstream sweep_csv;
    sweep_csv << "alpha,with_compression,without_compression\n";
    json sweep_j = json::array();
    bool monotone = true;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const auto& p = sweep[i];
        sweep_csv << p.alpha << ',' << p.with_compression << ',' << p.without_compression << '\n';
        sweep_j.push_back({{"alpha", p.alpha}, {"with_compression", p.with_compression},
                           {"without_compression", p.without_compression}});
        if (i > 0 && p.with_compression < sweep[i - 1].with_compression) monotone = false;
    }
    write_text(c.out / "sweep.csv", sweep_csv.str());
    write_text(c.out / "ranks.csv", ranks.str());
    const json doc = {{"config_hash", c.hash},
                      {"alpha", ss.base.alpha},
                      {"realizations", ss.base.realizations},
                      {"log10_space", main.log10_space},
                      {"unsupported_layers", main.unsupported},
                      {"priors", priors},
                      {"sweep", sweep_j},
                      {"sweep_monotone", monotone},
                      {"layers", layers}};
    if (ctx.format == Format::json) {
        write_json(c.out / "searchspace.json", doc);
    } else {
        std::ostringstream s;
        s << "config_hash,prior,log10_space\n";
        for (const auto& [k, v] : priors.items()) s << c.hash << ',' << k << ',' << v.get<double>() << '\n';
        write_text(c.out / "searchspace.csv", s.str());
    }
    ctx.out << "searchspace: log10 size " << main.log10_space << " at alpha " << ss.base.alpha
            << (monotone ? "" : " (sweep not monotone)") << "\n";
    return exit_ok;
}

// metrics --------------------------------------------------------------------

void samples_csv(std::ostringstream& s, const std::vector<std::pair<std::string, LabeledSamples>>& pools) {
    for (const auto& [name, p] : pools)
        for (std::size_t i = 0; i < p.secret.size(); ++i) s << name << ',' << p.secret[i] << ',' << p.leaked[i] << '\n';
}

int cmd_metrics(Context& ctx) {
    const auto& c = ctx.cfg;
    fs::create_directories(c.out);
    auto run = leakage_metrics(c.network, c.metrics);
    run.report.config_hash = c.hash;
    const auto boundary = huffduff_leakage(c.network, c.boundary);

    std::ostringstream traffic, rw, series;
    traffic << "config,secret,traffic\n";
    rw << "config,secret,rw_distance\n";
    series << "config,secret,write_bytes\n";
    samples_csv(traffic, run.traffic);
    samples_csv(rw, run.rw);
    samples_csv(series, boundary.series);
    write_text(c.out / "metrics_traffic.csv", traffic.str());
    write_text(c.out / "metrics_rw.csv", rw.str());
    write_text(c.out / "boundary_series.csv", series.str());

    json b = json::array();
    for (const auto& x : boundary.configs)
        b.push_back({{"name", x.name}, {"fi", x.fi}, {"mi", x.mi}, {"flagged", x.flagged}});
    json inferred = json::array();
    for (const auto& [s, h] : boundary.inferred) inferred.push_back({{"S", s}, {"inferred", h}});
    json doc = to_json(run.report);
    doc["boundary"] = {{"configs", b}, {"baseline_inference", inferred}};
    if (ctx.format == Format::json) {
        write_json(c.out / "metrics.json", doc);
    } else {
        std::ostringstream s;
        s << "config_hash,config,observable,fi,mi,cc,cvm\n";
        for (const auto& m : run.report.configs) {
            s << c.hash << ',' << m.name << ",traffic," << m.fi_traffic << ',' << m.mi_traffic << ',' << m.cc_traffic
              << ',' << m.cvm_traffic << '\n';
            s << c.hash << ',' << m.name << ",rw_distance," << m.fi_rw << ',' << m.mi_rw << ',' << m.cc_rw << ','
              << m.cvm_rw << '\n';
        }
        for (const auto& x : boundary.configs)
            s << c.hash << ',' << x.name << ",boundary," << x.fi << ',' << x.mi << ",,\n";
        write_text(c.out / "metrics.csv", s.str());
    }
    ctx.out << "metrics: " << run.report.configs.size() << " configurations, boundary series over "
            << boundary.inferred.size() << " filter sizes\n";
    return exit_ok;
}

// report ---------------------------------------------------------------------

int cmd_report(Context& ctx) {
    const auto& c = ctx.cfg;
    if (!fs::is_directory(c.out)) throw ConfigError("output directory " + c.out.string() + " does not exist");
    std::ostringstream md;
    json summary = {{"config_hash", c.hash}, {"artifacts", json::array()}};
    md << "# Run report\n\nconfig hash: `" << c.hash << "`\n\n";
    md << "| artifact | config hash | status | summary |\n|---|---|---|---|\n";
    int found = 0;
    for (const char* name : {"simulate.json", "attack.json", "searchspace.json", "metrics.json"}) {
        const fs::path p = c.out / name;
        if (!fs::exists(p)) continue;
        ++found;
        const auto j = read_json_file(p);
        const std::string h = j.value("config_hash", "");
        const std::string status = h == c.hash ? "current" : "stale";
        std::string line;
        if (std::string(name) == "simulate.json") {
            line = j.value("scenario", "") + ", " + std::to_string(j.value("runs", 0)) + " runs";
        } else if (std::string(name) == "attack.json") {
            line = j.value("pipeline", "") + " -> " + j.value("outcome", "");
            if (!j.value("expect", "").empty()) line += " (expected " + j.value("expect", "") + ")";
        } else if (std::string(name) == "searchspace.json") {
            std::ostringstream s;
            s << "log10 " << std::setprecision(4) << j.value("log10_space", 0.0) << ", sweep "
              << (j.value("sweep_monotone", false) ? "monotone" : "not monotone");
            line = s.str();
        } else {
            std::ostringstream s;
            for (const auto& cfg : j.at("configs"))
                s << cfg.value("name", "") << " fi=" << std::setprecision(3)
                  << cfg.at("memory_traffic").value("fi", 0.0) << "; ";
            line = s.str();
        }
        md << "| " << name << " | `" << h << "` | " << status << " | " << line << " |\n";
        summary["artifacts"].push_back({{"file", name}, {"config_hash", h}, {"status", status}, {"summary", line}});
    }
    if (found == 0) throw ConfigError("no reports under " + c.out.string());
    if (ctx.format == Format::json) write_json(c.out / "report.json", summary);
    else write_text(c.out / "report.md", md.str());
    ctx.out << md.str();
    return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"tracelab: accelerator memory-trace simulation, attacks and leakage analysis"};
    app.require_subcommand(1);
    std::string config_path, out_dir, format = "json";
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    app.add_option("--config", config_path, "Run configuration (JSON)")->required();
    app.add_option("--seed", seed, "Master seed (overrides NP_SEED and the config)");
    app.add_option("--out", out_dir, "Output directory (overrides NP_OUT and the config)");
    app.add_option("--jobs", jobs, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));
    app.fallthrough();
    const std::vector<std::pair<std::string, std::string>> subs{
        {"simulate", "Generate traces and bin-packing reports"},
        {"attack", "Run the configured attack pipeline against stored traces"},
        {"searchspace", "Smart search-space size, prior comparison and alpha sweep"},
        {"metrics", "Leakage statistics over labeled trace sweeps"},
        {"report", "Summarize the reports in the output directory"}};
    for (const auto& [name, help] : subs) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        Overrides ov = env_overrides();
        if (seed) ov.seed = *seed;
        if (!out_dir.empty()) ov.out = out_dir;
        Context ctx{load_run_config(config_path, ov), format == "csv" ? Format::csv : Format::json, out};
        if (jobs > 0) omp_set_num_threads(jobs);
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "simulate") return cmd_simulate(ctx);
        if (cmd == "attack") return cmd_attack(ctx);
        if (cmd == "searchspace") return cmd_searchspace(ctx);
        if (cmd == "metrics") return cmd_metrics(ctx);
        return cmd_report(ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const json::exception& e) {
        err << "error: malformed report: " << e.what() << "\n";
        return exit_config;
    }
}

}  // namespace tracelab
