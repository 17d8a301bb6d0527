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

#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "tracelab/error.hpp"
#include "tracelab/tracegen.hpp"

namespace tracelab {

namespace {

std::uint64_t parse_u64(std::string_view s, int base, std::size_t line) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ConfigError("trace csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<TraceEvent>& events) {
    os << "op,addr,size,t,digest\n";
    char buf[24];
    for (const auto& e : events) {
        os << (e.op == Op::read ? 'R' : 'W') << ',' << e.addr << ',' << e.size << ',' << e.t << ',';
        if (e.digest) {
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(*e.digest));
            os << buf;
        }
        os << '\n';
    }
}

std::vector<TraceEvent> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "op,addr,size,t,digest") {
        throw ConfigError("trace csv: missing header");
    }
    std::vector<TraceEvent> out;
    std::size_t n = 1;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        std::array<std::string_view, 5> f;
        std::string_view rest(line);
        for (int k = 0; k < 5; ++k) {
            const auto comma = k < 4 ? rest.find(',') : std::string_view::npos;
            if (k < 4 && comma == std::string_view::npos) {
                throw ConfigError("trace csv line " + std::to_string(n) + ": expected 5 fields");
            }
            f[k] = rest.substr(0, comma);
            if (k < 4) rest.remove_prefix(comma + 1);
        }
        TraceEvent e;
        if (f[0] == "R") e.op = Op::read;
        else if (f[0] == "W") e.op = Op::write;
        else throw ConfigError("trace csv line " + std::to_string(n) + ": op must be R or W");
        e.addr = parse_u64(f[1], 10, n);
        e.size = static_cast<std::uint32_t>(parse_u64(f[2], 10, n));
        e.t = parse_u64(f[3], 10, n);
        if (!f[4].empty()) e.digest = parse_u64(f[4], 16, n);
        out.push_back(e);
    }
    return out;
}

void write_trace_binary(std::ostream& os, const std::vector<TraceEvent>& events) {
    std::array<char, 24> rec;
    for (const auto& e : events) {
        if (e.size >= (1u << 30)) throw DomainError("event too large for binary trace record");
        const std::uint32_t word = e.size | (std::uint32_t(e.op == Op::write) << 31) |
                                   (std::uint32_t(e.digest.has_value()) << 30);
        const std::uint32_t dg = e.digest ? static_cast<std::uint32_t>(*e.digest) : 0;
        for (int i = 0; i < 8; ++i) rec[i] = static_cast<char>(e.addr >> (8 * i));
        for (int i = 0; i < 8; ++i) rec[8 + i] = static_cast<char>(e.t >> (8 * i));
        for (int i = 0; i < 4; ++i) rec[16 + i] = static_cast<char>(word >> (8 * i));
        for (int i = 0; i < 4; ++i) rec[20 + i] = static_cast<char>(dg >> (8 * i));
        os.write(rec.data(), rec.size());
    }
}

std::vector<TraceEvent> read_trace_binary(std::istream& is) {
    std::vector<TraceEvent> out;
    std::array<unsigned char, 24> rec;
    while (is.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
        auto le = [&](int at, int n) {
            std::uint64_t v = 0;
            for (int i = 0; i < n; ++i) v |= std::uint64_t(rec[at + i]) << (8 * i);
            return v;
        };
        TraceEvent e;
        e.addr = le(0, 8);
        e.t = le(8, 8);
        const auto word = static_cast<std::uint32_t>(le(16, 4));
        e.op = (word >> 31) ? Op::write : Op::read;
        e.size = word & ((1u << 30) - 1);
        if ((word >> 30) & 1) e.digest = le(20, 4);
        out.push_back(e);
    }
    if (is.gcount() != 0) throw IntegrityError("binary trace has a truncated record");
    return out;
}

}  // namespace tracelab
