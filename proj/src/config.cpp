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

#include "tracelab/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tracelab/error.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

namespace {

int get_int(const json& o, const char* key, int fallback, const std::string& where) {
    if (!o.contains(key)) return fallback;
    const auto& v = o.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

int require_int(const json& o, const char* key, const std::string& where) {
    if (!o.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    return get_int(o, key, 0, where);
}

}  // namespace

NetworkSpec network_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("network config must be a JSON object");
    NetworkSpec spec;
    spec.name = j.value("name", std::string("network"));
    if (!j.contains("layers") || !j.at("layers").is_array()) throw ConfigError("network: 'layers' array required");
    std::size_t idx = 0;
    for (const auto& l : j.at("layers")) {
        const std::string where = "layers[" + std::to_string(idx++) + "]";
        if (!l.is_object()) throw ConfigError(where + ": expected an object");
        LayerSpec ls;
        auto& s = ls.shape;
        s.K = require_int(l, "k", where);
        s.C = require_int(l, "c", where);
        s.H = require_int(l, "h", where);
        s.W = require_int(l, "w", where);
        s.R = require_int(l, "r", where);
        s.S = require_int(l, "s", where);
        s.stride = get_int(l, "stride", 1, where);
        s.pad = get_int(l, "pad", (s.R - 1) / 2, where);
        s.pool = get_int(l, "pool", 1, where);
        s.bytes_per_elem = get_int(l, "bytes_per_elem", 1, where);
        if (s.stride < 1) throw ConfigError(where + ".stride: must be >= 1");
        s.derive_output();
        ls.tiling.Tk = get_int(l, "tk", s.K, where);
        ls.tiling.Tc = get_int(l, "tc", s.C, where);
        ls.tiling.Th = get_int(l, "th", s.H, where);
        ls.tiling.Tw = get_int(l, "tw", s.W, where);
        if (l.contains("sparsity")) {
            if (!l.at("sparsity").is_number()) throw ConfigError(where + ".sparsity: expected a number");
            ls.sparsity = l.at("sparsity").get<double>();
        }
        try {
            s.validate();
            ls.tiling.validate(s);
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
        spec.layers.push_back(ls);
    }
    if (j.contains("skips")) {
        for (const auto& e : j.at("skips")) {
            if (!e.is_array() || e.size() != 2) throw ConfigError("skips: expected [source, destination] pairs");
            spec.skips.push_back(SkipEdge{e[0].get<int>(), e[1].get<int>()});
        }
    }
    spec.validate();
    return spec;
}

json network_to_json(const NetworkSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["layers"] = json::array();
    for (const auto& l : spec.layers) {
        const auto& s = l.shape;
        j["layers"].push_back({{"k", s.K}, {"c", s.C}, {"h", s.H}, {"w", s.W}, {"r", s.R},
                               {"s", s.S}, {"stride", s.stride}, {"pad", s.pad}, {"pool", s.pool},
                               {"sparsity", l.sparsity}, {"tk", l.tiling.Tk}, {"tc", l.tiling.Tc},
                               {"th", l.tiling.Th}, {"tw", l.tiling.Tw}});
    }
    j["skips"] = json::array();
    for (const auto& e : spec.skips) j["skips"].push_back({e.source, e.destination});
    return j;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

NetworkSpec load_network(const std::filesystem::path& path) {
    try {
        return network_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json sfc_to_json(const SfcOrder& order) {
    json seq = json::array();
    for (const auto& e : order.sequence) {
        if (auto* d = std::get_if<DeepTileId>(&e)) {
            seq.push_back({d->layer, d->row, d->col, d->chan_lo, d->chan_hi});
        } else if (auto* k = std::get_if<KernelId>(&e)) {
            seq.push_back({k->layer, k->k, k->c});
        } else {
            const auto& h = std::get<HaloStripId>(e);
            seq.push_back({h.layer, h.row, h.col});
        }
    }
    return {{"kind", to_string(order.kind)}, {"order", seq}};
}

json plan_to_json(const ExecutionPlan& plan) {
    return {{"case", to_string(plan.plan_case)},
            {"partition", plan.ofmap_partition},
            {"ifmap_bin_groups", plan.ifmap_bin_groups},
            {"tau", plan.tau},
            {"eta", plan.eta},
            {"partition_seed", plan.partition_seed},
            {"weight_copy_of_pass", plan.weight_copy_of_pass},
            {"ifmap_order", sfc_to_json(plan.ifmap_order)},
            {"weight_order", sfc_to_json(plan.weight_order)},
            {"ofmap_order", sfc_to_json(plan.ofmap_order)}};
}

std::string config_hash(const json& j) {
    const auto h = fnv1a64(std::string_view(j.dump()));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tracelab
