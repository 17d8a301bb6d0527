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

#include "tracelab/runconfig.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "tracelab/error.hpp"

namespace tracelab {

namespace {

/// Typed access to one JSON object. Tracks consumed keys so leftovers can
/// be reported, and maps key names back to source lines when it can.
class Reader {
public:
    Reader(const json& obj, std::string where, const std::string* raw, std::size_t from)
        : obj_(obj), where_(std::move(where)), raw_(raw), from_(from) {
        if (!obj_.is_object()) fail(where_ + ": expected an object");
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const {
        fail(where_ + "." + key + ": " + msg, offset_of(key));
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) fail_key(key, "expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) fail_key(key, "expected an integer");
                if constexpr (std::is_unsigned_v<T>)
                    if (v.get<std::int64_t>() < 0 && !v.is_number_unsigned()) fail_key(key, "must be >= 0");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) fail_key(key, "expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail_key(key, "expected a string");
            }
            return v.get<T>();
        } catch (const json::exception& e) {
            fail_key(key, e.what());
        }
    }

    template <class T>
    std::vector<T> list(const std::string& key, std::vector<T> fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_array()) fail_key(key, "expected an array");
        try {
            return v.get<std::vector<T>>();
        } catch (const json::exception& e) {
            fail_key(key, e.what());
        }
    }

    Reader child(const std::string& key) {
        used_.insert(key);
        return Reader(obj_.at(key), where_ + "." + key, raw_, offset_of(key));
    }

    const json& raw_value(const std::string& key) {
        used_.insert(key);
        return obj_.at(key);
    }

    std::size_t offset_of(const std::string& key) const {
        if (!raw_) return std::string::npos;
        return raw_->find("\"" + key + "\"", from_ == std::string::npos ? 0 : from_);
    }

    void finish() const {
        for (const auto& [k, v] : obj_.items())
            if (!used_.count(k)) fail(where_ + ": unknown key '" + k + "'", offset_of(k));
    }

    [[noreturn]] void fail(const std::string& msg, std::size_t at = std::string::npos) const {
        if (raw_ && at != std::string::npos) {
            const auto line = 1 + std::count(raw_->begin(), raw_->begin() + static_cast<std::ptrdiff_t>(at), '\n');
            throw ConfigError("line " + std::to_string(line) + ": " + msg);
        }
        throw ConfigError(msg);
    }

private:
    const json& obj_;
    std::string where_;
    const std::string* raw_;
    std::size_t from_;
    std::set<std::string> used_;
};

template <class T>
void positive(Reader& r, const std::string& key, T v) {
    if (v <= 0) r.fail_key(key, "must be > 0");
}

RatioPrior read_prior(Reader r) {
    RatioPrior p;
    if (r.has("dist")) {
        try {
            p.dist = parse_ratio_dist(r.get<std::string>("dist", ""));
        } catch (const ConfigError& e) {
            r.fail_key("dist", e.what());
        }
    }
    p.r_lo = r.get("r_lo", p.r_lo);
    p.r_hi = r.get("r_hi", p.r_hi);
    p.geometric_mean = r.get("geometric_mean", p.geometric_mean);
    p.normal_mu = r.get("normal_mu", p.normal_mu);
    p.normal_sd = r.get("normal_sd", p.normal_sd);
    if (!(p.r_lo >= 1.0 && p.r_hi > p.r_lo)) r.fail("ratio prior: need 1 <= r_lo < r_hi");
    positive(r, "geometric_mean", p.geometric_mean);
    positive(r, "normal_sd", p.normal_sd);
    r.finish();
    return p;
}

AdditiveModel read_additive(Reader r) {
    AdditiveModel m;
    if (r.has("kind")) {
        try {
            m.kind = parse_additive_kind(r.get<std::string>("kind", ""));
        } catch (const ConfigError& e) {
            r.fail_key("kind", e.what());
        }
    }
    m.layers = r.list<int>("layers", {});
    m.dummy_ratio = r.get("dummy_ratio", m.dummy_ratio);
    m.mean_bytes = r.get("mean_bytes", m.mean_bytes);
    m.jitter_lo = r.get("jitter_lo", m.jitter_lo);
    m.jitter_hi = r.get("jitter_hi", m.jitter_hi);
    m.jitter_unit = r.get("jitter_unit", m.jitter_unit);
    if (m.dummy_ratio < 0) r.fail_key("dummy_ratio", "must be >= 0");
    if (m.jitter_hi < m.jitter_lo) r.fail("additive: jitter_hi < jitter_lo");
    r.finish();
    return m;
}

NeuroplugKey read_key(Reader r) {
    NeuroplugKey k;
    k.bins.bin_size = r.get("bin_size", k.bins.bin_size);
    k.bins.kappa = r.get("kappa", k.bins.kappa);
    k.bins.table_entry_size = r.get("table_entry_size", k.bins.table_entry_size);
    k.noise.alpha = r.get("alpha", k.noise.alpha);
    k.noise.support_R = r.get("support_R", k.noise.support_R);
    k.noise.sigma2_max = r.get("sigma2_max", k.noise.sigma2_max);
    k.noise.dummy_bytes_first_layer = r.get("dummy_bytes_first_layer", k.noise.dummy_bytes_first_layer);
    k.noise.variance_block = r.get("variance_block", k.noise.variance_block);
    k.noise.seed = r.get("key_seed", k.noise.seed);
    k.plan.eta = r.get("eta", k.plan.eta);
    k.capacity = r.get("capacity", k.capacity);
    const auto mode = r.get<std::string>("compression", "real");
    if (mode == "real") k.mode = CompressMode::real;
    else if (mode == "sampled") k.mode = CompressMode::sampled;
    else r.fail_key("compression", "expected 'real' or 'sampled'");
    k.beta.lo = r.get("beta_lo", k.beta.lo);
    k.beta.hi = r.get("beta_hi", k.beta.hi);
    if (!(k.beta.lo > 0 && k.beta.hi >= k.beta.lo)) r.fail("neuroplug: need 0 < beta_lo <= beta_hi");
    positive(r, "capacity", k.capacity);
    try {
        k.bins.validate();
        k.noise.validate();
    } catch (const Error& e) {
        r.fail(std::string("neuroplug: ") + e.what());
    }
    r.finish();
    return k;
}

AttackSpec read_attack(Reader r) {
    AttackSpec a;
    if (r.has("pipeline")) {
        try {
            a.pipeline = parse_pipeline(r.get<std::string>("pipeline", ""));
        } catch (const ConfigError& e) {
            r.fail_key("pipeline", e.what());
        }
    }
    if (r.has("leaked")) {
        const json& l = r.raw_value("leaked");
        if (!l.is_object()) r.fail_key("leaked", "expected an object of numbers");
        for (const auto& [k, v] : l.items()) {
            if (!v.is_number()) r.fail_key("leaked", "'" + k + "' must be a number");
            a.leaked[k] = v.get<double>();
        }
    }
    a.expect = r.get<std::string>("expect", "");
    if (!a.expect.empty() && a.expect != "broken" && a.expect != "held")
        r.fail_key("expect", "expected 'broken' or 'held'");
    a.layers = r.list<int>("layers", {});
    if (r.has("nsqf_prior")) {
        auto c = r.child("nsqf_prior");
        NsqfPrior p;
        p.lo = c.get("lo", p.lo);
        p.hi = c.get("hi", p.hi);
        if (p.lo < 1 || p.hi < p.lo) c.fail("nsqf_prior: need 1 <= lo <= hi");
        c.finish();
        a.nsqf_prior = p;
    }
    if (r.has("prior")) a.prior = read_prior(r.child("prior"));
    a.volume_cap = r.get("volume_cap", a.volume_cap);
    a.column_sweep = r.get("column_sweep", a.column_sweep);
    r.finish();
    return a;
}

SearchspaceSpec read_searchspace(Reader r) {
    SearchspaceSpec s;
    auto& b = s.base;
    b.alpha = r.get("alpha", b.alpha);
    b.compression = r.get("compression", b.compression);
    b.realizations = r.get("realizations", b.realizations);
    b.volume_cap = r.get("volume_cap", b.volume_cap);
    b.fft.n = r.get("fft_points", b.fft.n);
    b.fft.c = r.get("strip_c", b.fft.c);
    if (r.has("prior")) b.prior = read_prior(r.child("prior"));
    s.alphas = r.list<double>("alphas", s.alphas);
    if (r.has("priors")) {
        s.priors.clear();
        for (const auto& p : r.list<std::string>("priors", {})) {
            try {
                s.priors.push_back(parse_ratio_dist(p));
            } catch (const ConfigError& e) {
                r.fail_key("priors", e.what());
            }
        }
    }
    if (b.alpha < 0) r.fail_key("alpha", "must be >= 0");
    for (double a : s.alphas)
        if (a < 0) r.fail_key("alphas", "entries must be >= 0");
    positive(r, "realizations", b.realizations);
    if (b.fft.n < 8) r.fail_key("fft_points", "must be >= 8");
    r.finish();
    return s;
}

void read_metrics(Reader r, MetricsOptions& m, BoundaryOptions& b) {
    m.levels = r.list<int>("levels", m.levels);
    for (int s : m.levels)
        if (s < 1 || s % 2 == 0) r.fail_key("levels", "filter sizes must be odd and positive");
    if (m.levels.size() < 2) r.fail_key("levels", "need at least two levels");
    m.pool = r.get("pool", m.pool);
    m.replicates = r.get("replicates", m.replicates);
    m.per_level = r.get("per_level", m.per_level);
    if (r.has("inputs")) {
        try {
            m.inputs = parse_craft_policy(r.get<std::string>("inputs", ""));
        } catch (const ConfigError& e) {
            r.fail_key("inputs", e.what());
        }
    }
    if (m.per_level < 30) r.fail_key("per_level", "must be >= 30");
    if (m.pool < m.per_level) r.fail_key("pool", "must be >= per_level");
    positive(r, "replicates", m.replicates);
    b.levels = m.levels;
    b.replicates = m.replicates;
    b.per_level = m.per_level;
    if (r.has("boundary")) {
        auto c = r.child("boundary");
        b.runs_per_position = c.get("runs_per_position", b.runs_per_position);
        b.permutations = c.get("permutations", b.permutations);
        positive(c, "runs_per_position", b.runs_per_position);
        positive(c, "permutations", b.permutations);
        c.finish();
    }
    r.finish();
}

}  // namespace

Scenario parse_scenario(const std::string& s) {
    if (s == "baseline") return Scenario::baseline;
    if (s == "additive") return Scenario::additive;
    if (s == "neuroplug") return Scenario::neuroplug;
    throw ConfigError("unknown scenario: " + s);
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::baseline: return "baseline";
        case Scenario::additive: return "additive";
        case Scenario::neuroplug: return "neuroplug";
    }
    return "?";
}

Pipeline parse_pipeline(const std::string& s) {
    if (s == "ss") return Pipeline::ss;
    if (s == "ss+kk") return Pipeline::ss_kk;
    if (s == "si") return Pipeline::si;
    if (s == "ss+kk+si") return Pipeline::ss_kk_si;
    if (s == "huffduff") return Pipeline::huffduff;
    if (s == "reverse") return Pipeline::reverse;
    throw ConfigError("unknown attack pipeline: " + s);
}

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::ss: return "ss";
        case Pipeline::ss_kk: return "ss+kk";
        case Pipeline::si: return "si";
        case Pipeline::ss_kk_si: return "ss+kk+si";
        case Pipeline::huffduff: return "huffduff";
        case Pipeline::reverse: return "reverse";
    }
    return "?";
}

Overrides env_overrides() {
    Overrides ov;
    if (const char* s = std::getenv("NP_SEED"); s && *s) {
        char* end = nullptr;
        const auto v = std::strtoull(s, &end, 10);
        if (*end != '\0' || s[0] == '-') throw ConfigError("NP_SEED: expected an unsigned integer, got '" + std::string(s) + "'");
        ov.seed = v;
    }
    if (const char* o = std::getenv("NP_OUT"); o && *o) ov.out = o;
    return ov;
}

RunConfig parse_run_config(json doc, const Overrides& ov, const std::string& raw,
                           const std::filesystem::path& base_dir) {
    if (ov.seed) doc["seed"] = *ov.seed;
    if (ov.out) doc["out"] = ov.out->string();
    const std::string* text = raw.empty() ? nullptr : &raw;
    Reader r(doc, "config", text, 0);
    RunConfig c;

    if (!r.has("network")) r.fail("config: missing 'network' (path or inline object)");
    const json& net = r.raw_value("network");
    try {
        if (net.is_string()) {
            std::filesystem::path p = net.get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            c.network = load_network(p);
        } else {
            c.network = network_from_json(net);
        }
    } catch (const ConfigError& e) {
        r.fail_key("network", e.what());
    } catch (const Error& e) {
        r.fail_key("network", e.what());
    }

    c.seed = r.get("seed", c.seed);
    c.input_seed = r.get("input_seed", c.seed);
    c.weight_seed = r.get("weight_seed", c.weight_seed);
    c.out = r.get<std::string>("out", c.out.string());
    if (r.has("scenario")) {
        try {
            c.scenario = parse_scenario(r.get<std::string>("scenario", ""));
        } catch (const ConfigError& e) {
            r.fail_key("scenario", e.what());
        }
    }
    c.runs = r.get("runs", c.runs);
    positive(r, "runs", c.runs);

    if (r.has("trace")) {
        auto t = r.child("trace");
        c.trace.sparse = t.get("sparse", c.trace.sparse);
        c.trace.sparse_header_bytes = t.get("sparse_header_bytes", c.trace.sparse_header_bytes);
        c.trace.burst_bytes = t.get("burst_bytes", c.trace.burst_bytes);
        c.trace.burst_cycles = t.get("burst_cycles", c.trace.burst_cycles);
        c.trace.t_tile = t.get("t_tile", c.trace.t_tile);
        const auto fmt = t.get<std::string>("format", "csv");
        if (fmt != "csv" && fmt != "binary") t.fail_key("format", "expected 'csv' or 'binary'");
        c.binary_traces = fmt == "binary";
        positive(t, "burst_bytes", c.trace.burst_bytes);
        t.finish();
    }
    if (r.has("observability")) {
        auto o = r.child("observability");
        c.observability.addresses = o.get("addresses", true);
        c.observability.values = o.get("values", true);
        c.observability.timing = o.get("timing", true);
        o.finish();
    }
    if (r.has("additive")) c.additive = read_additive(r.child("additive"));
    if (r.has("neuroplug")) c.key = read_key(r.child("neuroplug"));
    if (r.has("attack")) c.attack = read_attack(r.child("attack"));
    if (r.has("searchspace")) c.searchspace = read_searchspace(r.child("searchspace"));
    c.metrics.seed = c.seed;
    c.metrics.weight_seed = c.weight_seed;
    c.boundary.seed = c.seed;
    c.boundary.weight_seed = c.weight_seed;
    c.searchspace.base.seed = c.seed;
    if (r.has("metrics")) {
        auto m = r.child("metrics");
        // Metric runs take their own CM settings; the top-level ones are for traces.
        if (m.has("additive")) c.metrics.additive = read_additive(m.child("additive"));
        if (m.has("neuroplug")) c.metrics.key = read_key(m.child("neuroplug"));
        c.boundary.key = c.metrics.key;
        read_metrics(m, c.metrics, c.boundary);
    }
    r.finish();

    for (int l : c.attack.layers)
        if (l < 0 || l >= static_cast<int>(c.network.layers.size()))
            r.fail("attack.layers: index " + std::to_string(l) + " out of range");

    // Output location does not change results, so it stays out of the hash.
    c.doc = doc;
    json hashed = doc;
    hashed.erase("out");
    hashed["network"] = network_to_json(c.network);
    c.hash = config_hash(hashed);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const Overrides& ov) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string raw = ss.str();
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        auto c = parse_run_config(std::move(doc), ov, raw, path.parent_path());
        c.source = path;
        return c;
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace tracelab
