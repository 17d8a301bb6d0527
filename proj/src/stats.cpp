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

#include "tracelab/stats.hpp"

#include <algorithm>
#include <array>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "tracelab/error.hpp"

namespace tracelab {

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i];
}

/// Entropy (nats) of counts with the Miller-Madow term.
double entropy_mm(const std::map<std::int64_t, double>& counts, double n) {
    double h = 0.0;
    for (const auto& [k, c] : counts) h -= c / n * std::log(c / n);
    return h + (static_cast<double>(counts.size()) - 1.0) / (2.0 * n);
}

double chi2_sf(double x, double dof) {
    if (!(x > 0.0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

/// R^2 of y on the columns of X (first column constant); false if singular.
bool r_squared(const std::vector<std::vector<double>>& cols, const std::vector<double>& y, double& r2) {
    const std::size_t p = cols.size(), n = y.size();
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < n; ++k) a[i][j] += cols[i][k] * cols[j][k];
        for (std::size_t k = 0; k < n; ++k) a[i][p] += cols[i][k] * y[k];
    }
    const double scale = a[0][0];
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-10 * scale) return false;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j <= p; ++j) a[r][j] -= f * a[c][j];
        }
    }
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double fit = 0.0;
        for (std::size_t i = 0; i < p; ++i) fit += a[i][p] / a[i][i] * cols[i][k];
        ss_res += (y[k] - fit) * (y[k] - fit);
        ss_tot += (y[k] - mean) * (y[k] - mean);
    }
    r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return true;
}

}  // namespace

void LabeledSamples::validate(std::size_t min_per_level) const {
    if (secret.size() != leaked.size()) throw ShapeError("labeled samples: lengths differ");
    std::map<int, std::size_t> per;
    for (int s : secret) ++per[s];
    if (per.size() < 2) throw DomainError("labeled samples: need at least 2 secret levels");
    for (const auto& [s, n] : per)
        if (n < min_per_level) throw DomainError("labeled samples: too few samples for level " + std::to_string(s));
}

Estimate fisher_information(const LabeledSamples& s, double variance_floor) {
    s.validate();
    std::map<int, std::vector<double>> by;
    for (std::size_t i = 0; i < s.secret.size(); ++i) by[s.secret[i]].push_back(s.leaked[i]);
    std::vector<double> theta, mu, var;
    Estimate out;
    for (const auto& [level, v] : by) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        double sv = ss / static_cast<double>(v.size() - 1);
        if (sv < variance_floor) {
            sv = variance_floor;
            out.flagged = true;
        }
        theta.push_back(level);
        mu.push_back(m);
        var.push_back(sv);
    }
    const std::size_t L = theta.size();
    double acc = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t a = l == 0 ? 0 : l - 1;
        const std::size_t b = l + 1 == L ? l : l + 1;
        const double d = (mu[b] - mu[a]) / (theta[b] - theta[a]);
        acc += d * d / var[l];
    }
    out.value = acc / static_cast<double>(L);
    return out;
}

Estimate mutual_information(const LabeledSamples& s) {
    s.validate();
    const auto n = static_cast<double>(s.leaked.size());
    std::vector<double> sorted = s.leaked;
    std::sort(sorted.begin(), sorted.end());
    const double range = sorted.back() - sorted.front();
    Estimate out;
    if (!(range > 0.0)) {
        out.flagged = true;
        return out;
    }
    double width = 2.0 * (quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25)) * std::cbrt(1.0 / n);
    if (!(width > 0.0)) {
        // Zero IQR (mostly one value): fall back to sqrt(n) bins.
        width = range / std::ceil(std::sqrt(n));
        out.flagged = true;
    }
    std::map<std::int64_t, double> cy, cs, cj;
    for (std::size_t i = 0; i < s.leaked.size(); ++i) {
        const auto b = static_cast<std::int64_t>(std::floor((s.leaked[i] - sorted.front()) / width));
        cy[b] += 1;
        cs[s.secret[i]] += 1;
        cj[b * 1'000'003 + s.secret[i]] += 1;
    }
    const double mi = entropy_mm(cy, n) + entropy_mm(cs, n) - entropy_mm(cj, n);
    out.value = std::max(0.0, mi / std::log(2.0));
    return out;
}

double pearson_cc(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("pearson_cc: lengths differ");
    if (x.size() < 3) throw DomainError("pearson_cc: need at least 3 samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedError("pearson_cc: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Estimate runs_test(const std::vector<std::uint8_t>& bits, std::size_t min_n) {
    const std::size_t n = bits.size();
    if (n < min_n || n < 2) throw DomainError("runs_test: sequence too short");
    const double nd = static_cast<double>(n);
    const double pi = static_cast<double>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b & 1; })) / nd;
    Estimate out;
    if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nd)) {
        out.flagged = true;
        return out;
    }
    double v = 1.0;
    for (std::size_t k = 0; k + 1 < n; ++k) v += (bits[k] & 1) != (bits[k + 1] & 1);
    const double q = pi * (1 - pi);
    out.value = std::erfc(std::abs(v - 2 * nd * q) / (2 * std::sqrt(2 * nd) * q));
    return out;
}

double cvm_test(std::vector<double> sample, const std::function<double(double)>& reference_cdf) {
    const std::size_t n = sample.size();
    if (n < 20) throw DomainError("cvm_test: need at least 20 samples");
    std::sort(sample.begin(), sample.end());
    const double nd = static_cast<double>(n);
    double t = 1.0 / (12.0 * nd);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = reference_cdf(sample[i]) - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd);
        t += d * d;
    }
    return t;
}

std::function<double(double)> ecdf(std::vector<double> sample) {
    if (sample.empty()) throw DomainError("ecdf: empty sample");
    std::sort(sample.begin(), sample.end());
    return [v = std::move(sample)](double x) {
        return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) /
               static_cast<double>(v.size());
    };
}

HeteroskedasticityResult heteroskedasticity_tests(const std::vector<double>& x, const std::vector<double>& residuals) {
    if (x.size() != residuals.size()) throw ShapeError("heteroskedasticity: lengths differ");
    const std::size_t n = x.size();
    if (n < 50) throw DomainError("heteroskedasticity: need at least 50 samples");
    const double nd = static_cast<double>(n);
    // Standardized regressor keeps the normal equations well conditioned.
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nd;
    double sx = 0.0;
    for (double v : x) sx += (v - mx) * (v - mx);
    sx = std::sqrt(sx / nd);
    HeteroskedasticityResult out;
    if (!(sx > 0.0)) {
        out.collinear = true;
        return out;
    }
    std::vector<double> one(n, 1.0), z(n), z2(n), e2(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = (x[i] - mx) / sx;
        z2[i] = z[i] * z[i];
        e2[i] = residuals[i] * residuals[i];
    }
    double r2 = 0.0;
    if (!r_squared({one, z}, e2, r2)) {
        out.collinear = true;
        return out;
    }
    out.bp_stat = nd * r2;
    out.bp_p = chi2_sf(out.bp_stat, 1);
    if (!r_squared({one, z, z2}, e2, r2)) {
        out.collinear = true;
        return out;
    }
    out.white_stat = nd * r2;
    out.white_p = chi2_sf(out.white_stat, 2);
    return out;
}

json to_json(const MetricReport& r) {
    json configs = json::array();
    for (const auto& c : r.configs) {
        json j = {{"name", c.name},
                  {"memory_traffic", {{"fi", c.fi_traffic}, {"mi", c.mi_traffic}, {"cc", c.cc_traffic}, {"cvm", c.cvm_traffic}}},
                  {"rw_distance", {{"fi", c.fi_rw}, {"mi", c.mi_rw}, {"cc", c.cc_rw}, {"cvm", c.cvm_rw}}},
                  {"replicates", c.replicates},
                  {"flagged", c.flagged}};
        if (c.runs_p >= 0.0) j["runs_p"] = c.runs_p;
        configs.push_back(j);
    }
    return {{"reference", r.reference}, {"config_hash", r.config_hash}, {"configs", configs}};
}

}  // namespace tracelab
