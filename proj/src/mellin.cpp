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

#include "tracelab/mellin.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <cstdio>
#include <istream>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "tracelab/error.hpp"
#include "tracelab/model.hpp"

namespace tracelab {

namespace {

using cd = std::complex<double>;
using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

/// Density evaluator built once per pdf.
class Interp {
public:
    explicit Interp(const GridPdf& pdf) : pdf_(pdf) {
        if (pdf.grid.size() >= 4) {
            auto x = pdf.grid;
            auto y = pdf.density;
            pchip_.emplace(std::move(x), std::move(y));
        }
    }

    double operator()(double x) const {
        const auto& g = pdf_.grid;
        // Grid ends reproduced through exp/log may be off by an ulp.
        if (x > g.back() && x <= g.back() * (1 + 1e-12)) x = g.back();
        if (x < g.front() && x >= g.front() * (1 - 1e-12)) x = g.front();
        if (x < g.front() || x > g.back()) return 0.0;
        if (pchip_) return std::max(0.0, (*pchip_)(x));
        // Too few points for a cubic: linear.
        auto it = std::upper_bound(g.begin(), g.end(), x);
        if (it == g.end()) return pdf_.density.back();
        const auto i = static_cast<std::size_t>(it - g.begin()) - 1;
        const double t = (x - g[i]) / (g[i + 1] - g[i]);
        return pdf_.density[i] * (1 - t) + pdf_.density[i + 1] * t;
    }

private:
    const GridPdf& pdf_;
    std::optional<Pchip> pchip_;
};

std::vector<double> trapezoid_weights(const std::vector<double>& g) {
    std::vector<double> w(g.size(), 0.0);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double h = g[i + 1] - g[i];
        w[i] += h / 2;
        w[i + 1] += h / 2;
    }
    return w;
}

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};

/// B_m = sum_k g_k exp(+2 pi i m k / N).
std::vector<cd> dft_backward(const std::vector<double>& g) {
    const int n = static_cast<int>(g.size());
    std::unique_ptr<fftw_complex[], FftwFree> buf(fftw_alloc_complex(g.size()));
    fftw_plan plan = fftw_plan_dft_1d(n, buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    for (int k = 0; k < n; ++k) {
        buf[k][0] = g[k];
        buf[k][1] = 0.0;
    }
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    std::vector<cd> out(g.size());
    for (int k = 0; k < n; ++k) out[k] = {buf[k][0], buf[k][1]};
    return out;
}

/// sum_m a_m exp(-2 pi i m k / N), real part.
std::vector<double> dft_forward_real(const std::vector<cd>& a) {
    const int n = static_cast<int>(a.size());
    std::unique_ptr<fftw_complex[], FftwFree> buf(fftw_alloc_complex(a.size()));
    fftw_plan plan = fftw_plan_dft_1d(n, buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    for (int k = 0; k < n; ++k) {
        buf[k][0] = a[k].real();
        buf[k][1] = a[k].imag();
    }
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    std::vector<double> out(a.size());
    for (int k = 0; k < n; ++k) out[k] = buf[k][0];
    return out;
}

double omega(std::size_t m, std::size_t n, double delta) {
    const auto mi = static_cast<double>(m < n / 2 ? static_cast<std::int64_t>(m)
                                                  : static_cast<std::int64_t>(m) - static_cast<std::int64_t>(n));
    return 2.0 * std::numbers::pi * mi / (static_cast<double>(n) * delta);
}

GridPdf scaled(const GridPdf& p, double k) {
    GridPdf out = p;
    for (auto& x : out.grid) x *= k;
    if (!p.is_point_mass())
        for (auto& d : out.density) d /= k;
    return out;
}

}  // namespace

double GridPdf::mass() const {
    if (is_point_mass()) return density.front();
    const auto w = trapezoid_weights(grid);
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) m += w[i] * density[i];
    return m;
}

double GridPdf::mean() const {
    if (is_point_mass()) return grid.front();
    const auto w = trapezoid_weights(grid);
    double m = 0.0, z = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        m += w[i] * density[i] * grid[i];
        z += w[i] * density[i];
    }
    return m / z;
}

double GridPdf::eval(double x) const {
    if (is_point_mass()) return 0.0;
    return Interp(*this)(x);
}

double GridPdf::cdf(double x) const {
    if (is_point_mass()) return x >= grid.front() ? 1.0 : 0.0;
    if (x <= grid.front()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        if (x >= grid[i + 1]) {
            acc += h * (density[i] + density[i + 1]) / 2;
            continue;
        }
        const double d = x - grid[i];
        acc += density[i] * d + (density[i + 1] - density[i]) * d * d / (2 * h);
        return acc;
    }
    return acc;
}

double GridPdf::sample(Rng& rng) const {
    if (is_point_mass()) return grid.front();
    std::vector<double> cum(grid.size(), 0.0);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        cum[i + 1] = cum[i] + (grid[i + 1] - grid[i]) * (density[i] + density[i + 1]) / 2;
    const double u = std::uniform_real_distribution<double>(0.0, cum.back())(rng);
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), grid.size() - 1) - 1;
    const double span = cum[i + 1] - cum[i];
    const double t = span > 0 ? (u - cum[i]) / span : 0.5;
    return grid[i] + t * (grid[i + 1] - grid[i]);
}

void GridPdf::validate(double mass_tol) const {
    if (grid.empty() || grid.size() != density.size()) throw ShapeError("GridPdf: grid and density sizes differ");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) throw DomainError("GridPdf: support must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("GridPdf: grid must be strictly increasing");
        if (!(density[i] >= 0.0) || !std::isfinite(density[i])) throw DomainError("GridPdf: bad density value");
    }
    if (std::abs(mass() - 1.0) > mass_tol) throw DomainError("GridPdf: not normalized");
}

GridPdf GridPdf::normalized() const {
    GridPdf out = *this;
    const double m = mass();
    if (!(m > 0.0)) throw DomainError("GridPdf: zero mass");
    for (auto& d : out.density) d /= m;
    return out;
}

GridPdf point_mass(double x) {
    if (!(x > 0.0)) throw DomainError("point mass must be positive");
    return {{x}, {1.0}};
}

GridPdf tabulate(const std::function<double(double)>& f, double a, double b, std::size_t n, bool log_spaced) {
    if (!(a > 0.0) || !(b > a)) throw DomainError("tabulate: need 0 < a < b");
    if (n < 2) throw ResolutionError("tabulate: need at least 2 points");
    GridPdf p;
    p.grid.resize(n);
    p.density.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        p.grid[i] = log_spaced ? a * std::pow(b / a, t) : a + (b - a) * t;
        p.density[i] = f(p.grid[i]);
    }
    p.grid.back() = b;
    return p.normalized();
}

GridPdf uniform_pdf(double a, double b, std::size_t n) {
    return tabulate([](double) { return 1.0; }, a, b, n);
}

GridPdf normal_pdf(double mu, double sd, double a, double b, std::size_t n) {
    if (!(sd > 0.0)) throw DomainError("normal_pdf: sd must be positive");
    return tabulate([&](double x) { return std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd)); }, a, b, n);
}

GridPdf geometric_pdf(double mean_gap, double a, double b, std::size_t n) {
    if (!(mean_gap > 0.0)) throw DomainError("geometric_pdf: mean gap must be positive");
    return tabulate([&](double x) { return std::exp(-(x - a) / mean_gap); }, a, b, n);
}

MellinFn mellin_riemann(const GridPdf& pdf, const std::vector<cd>& s_points) {
    pdf.validate();
    MellinFn m;
    m.s = s_points;
    m.values.resize(s_points.size());
    const auto w = pdf.is_point_mass() ? std::vector<double>{1.0} : trapezoid_weights(pdf.grid);
    // A density that does not vanish near 0 diverges for Re(s) <= 0.
    const double fmax = *std::max_element(pdf.density.begin(), pdf.density.end());
    const bool open_at_zero = !pdf.is_point_mass() && pdf.density.front() > 1e-9 * fmax &&
                              pdf.grid.front() < 1e-3 * pdf.grid.back();
    for (std::size_t j = 0; j < s_points.size(); ++j) {
        const cd s = s_points[j];
        if (open_at_zero && s.real() <= 0.0) throw DomainError("Mellin transform: s outside the strip");
        cd acc = 0.0;
        for (std::size_t i = 0; i < pdf.grid.size(); ++i)
            acc += w[i] * pdf.density[i] * std::pow(cd(pdf.grid[i]), s - 1.0);
        if (!std::isfinite(acc.real()) || !std::isfinite(acc.imag()))
            throw DomainError("Mellin transform: divergent sum");
        m.values[j] = acc;
    }
    if (!s_points.empty()) m.c = s_points.front().real();
    return m;
}

MellinFn mellin_fft_on(const GridPdf& pdf, double t0, double delta, std::size_t points, const FftOptions& opts) {
    if (pdf.grid.size() < 8) throw ResolutionError("mellin_fft: need at least 8 grid points");
    if (points > opts.n) throw ResolutionError("mellin_fft: more samples than transform length");
    const Interp f(pdf);
    std::vector<double> g(opts.n, 0.0);
    for (std::size_t k = 0; k < points; ++k) {
        const double t = t0 + static_cast<double>(k) * delta;
        g[k] = f(std::exp(t)) * std::exp(opts.c * t);
    }
    // Trapezoid end weights.
    g[0] *= 0.5;
    if (points > 1) g[points - 1] *= 0.5;
    const auto b = dft_backward(g);
    MellinFn m;
    m.c = opts.c;
    m.t0 = t0;
    m.delta = delta;
    m.n = opts.n;
    m.support_points = points;
    m.s.resize(opts.n);
    m.values.resize(opts.n);
    for (std::size_t j = 0; j < opts.n; ++j) {
        const double w = omega(j, opts.n, delta);
        m.s[j] = {opts.c, w};
        m.values[j] = delta * std::exp(cd(0.0, w * t0)) * b[j];
    }
    return m;
}

MellinFn mellin_fft(const GridPdf& pdf, const FftOptions& opts) {
    pdf.validate();
    if (pdf.grid.size() < 8) throw ResolutionError("mellin_fft: need at least 8 grid points");
    const double t0 = std::log(pdf.lo());
    const double delta = std::log(pdf.hi() / pdf.lo()) / static_cast<double>(opts.n - 1);
    return mellin_fft_on(pdf, t0, delta, opts.n, opts);
}

MellinFn mellin_multiply(const MellinFn& a, const MellinFn& b) {
    if (a.c != b.c) throw DomainError("Mellin product: contours differ (strip mismatch)");
    if (a.n != b.n || a.delta != b.delta) throw DomainError("Mellin product: grids differ");
    MellinFn m = a;
    m.t0 = a.t0 + b.t0;
    m.support_points = a.support_points + b.support_points - 1;
    for (std::size_t j = 0; j < a.n; ++j) m.values[j] = a.values[j] * b.values[j];
    return m;
}

GridPdf mellin_invert(const MellinFn& m, std::size_t points) {
    if (points > m.n) throw ResolutionError("mellin_invert: more points than transform length");
    // Undo the phase so the sum runs over the plain DFT kernel.
    std::vector<cd> a(m.n);
    for (std::size_t j = 0; j < m.n; ++j) a[j] = m.values[j] * std::exp(cd(0.0, -omega(j, m.n, m.delta) * m.t0));
    const auto sums = dft_forward_real(a);
    GridPdf p;
    p.grid.resize(points);
    p.density.resize(points);
    const double scale = 1.0 / (static_cast<double>(m.n) * m.delta);
    for (std::size_t k = 0; k < points; ++k) {
        const double t = m.t0 + static_cast<double>(k) * m.delta;
        p.grid[k] = std::exp(t);
        p.density[k] = std::max(0.0, sums[k] * scale * std::exp(-m.c * t));
    }
    return p;
}

GridPdf reciprocal_pdf(const GridPdf& beta) {
    if (beta.grid.empty() || !(beta.lo() > 0.0)) throw DomainError("reciprocal_pdf: support touches 0");
    if (beta.hi() > 1.0 + 1e-12) throw DomainError("reciprocal_pdf: beta support must lie in (0, 1]");
    beta.validate();
    GridPdf v;
    const std::size_t n = beta.grid.size();
    v.grid.resize(n);
    v.density.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double b = beta.grid[n - 1 - i];
        v.grid[i] = 1.0 / b;
        v.density[i] = beta.is_point_mass() ? 1.0 : beta.density[n - 1 - i] * b * b;
    }
    return v;
}

GridPdf shift_pdf(double y, const GridPdf& alpha) {
    if (!(y > alpha.hi())) throw EmptyEvidenceError("observation does not exceed the noise floor support");
    GridPdf u;
    const std::size_t n = alpha.grid.size();
    u.grid.resize(n);
    u.density.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        u.grid[i] = y - alpha.grid[n - 1 - i];
        u.density[i] = alpha.density[n - 1 - i];
    }
    return u;
}

GridPdf product_pdf(const GridPdf& u, const GridPdf& v, ProductMethod method, const ProductOptions& opts) {
    u.validate();
    v.validate();
    if (u.is_point_mass() && v.is_point_mass()) return point_mass(u.lo() * v.lo());
    if (v.is_point_mass()) return scaled(u, v.lo());
    if (u.is_point_mass()) return scaled(v, u.lo());

    if (method == ProductMethod::mc) {
        auto rng = make_stream(opts.seed, Stream::monte_carlo);
        const double lo = u.lo() * v.lo(), hi = u.hi() * v.hi();
        const std::size_t bins = opts.mc_bins;
        std::vector<double> counts(bins, 0.0);
        const double width = (hi - lo) / static_cast<double>(bins);
        for (std::size_t i = 0; i < opts.mc_draws; ++i) {
            const double x = u.sample(rng) * v.sample(rng);
            auto b = static_cast<std::size_t>((x - lo) / width);
            counts[std::min(b, bins - 1)] += 1.0;
        }
        GridPdf p;
        for (std::size_t b = 0; b < bins; ++b) {
            p.grid.push_back(lo + (static_cast<double>(b) + 0.5) * width);
            p.density.push_back(counts[b] / (static_cast<double>(opts.mc_draws) * width));
        }
        return p.normalized();
    }

    const std::size_t n = opts.fft.n;
    const double lu = std::log(u.hi() / u.lo()), lv = std::log(v.hi() / v.lo());
    const double delta = (lu + lv) / static_cast<double>(n - 2);
    // Both sample counts together stay below n so the convolution does not wrap.
    const auto pu = static_cast<std::size_t>(std::floor(lu / delta + 1e-9)) + 1;
    const auto pv = static_cast<std::size_t>(std::floor(lv / delta + 1e-9)) + 1;
    const auto mu = mellin_fft_on(u, std::log(u.lo()), delta, pu, opts.fft);
    const auto mv = mellin_fft_on(v, std::log(v.lo()), delta, pv, opts.fft);
    const auto m = mellin_multiply(mu, mv);
    return mellin_invert(m, std::min(n, m.support_points)).normalized();
}

double tv_distance(const GridPdf& a, const GridPdf& b, std::size_t bins) {
    const double lo = std::min(a.lo(), b.lo()), hi = std::max(a.hi(), b.hi());
    const double ma = a.is_point_mass() ? 1.0 : a.mass(), mb = b.is_point_mass() ? 1.0 : b.mass();
    double tv = 0.0, pa = 0.0, pb = 0.0;
    for (std::size_t i = 1; i <= bins; ++i) {
        const double x = i == bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
        const double ca = a.cdf(x) / ma, cb = b.cdf(x) / mb;
        tv += std::abs((ca - pa) - (cb - pb));
        pa = ca;
        pb = cb;
    }
    return tv / 2;
}

GridPdf predict_X(double y_obs, const GridPdf& alpha_prior, const GridPdf& beta_prior, const ProductOptions& opts) {
    alpha_prior.validate();
    return product_pdf(shift_pdf(y_obs, alpha_prior), reciprocal_pdf(beta_prior), ProductMethod::mellin, opts);
}

SmartPmf smart_search_space(const GridPdf& h, std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw DomainError("smart_search_space: empty range");
    const auto nsqf = nsqf_in_range(lo, hi);
    if (nsqf.empty()) throw DomainError("smart_search_space: no NSQF integer in range");
    SmartPmf out;
    out.support = nsqf;
    out.prob.assign(nsqf.size(), 0.0);

    auto nearest = [&](std::uint64_t x, std::size_t& pos) {
        while (pos + 1 < nsqf.size() && nsqf[pos + 1] <= x) ++pos;
        if (nsqf[pos] >= x || pos + 1 == nsqf.size()) return pos;
        // nsqf[pos] < x < nsqf[pos + 1]; ties go to the lower value.
        return x - nsqf[pos] <= nsqf[pos + 1] - x ? pos : pos + 1;
    };

    std::size_t pos = 0;
    if (h.is_point_mass()) {
        const double x = std::clamp(std::round(h.lo()), double(lo), double(hi));
        out.prob[nearest(static_cast<std::uint64_t>(x), pos)] = 1.0;
        return out;
    }
    const Interp f(h);
    const auto first = std::max<std::uint64_t>(lo, static_cast<std::uint64_t>(std::ceil(std::max(0.0, h.lo() - 0.5))));
    const auto last = std::min<std::uint64_t>(hi, static_cast<std::uint64_t>(std::floor(h.hi() + 0.5)));
    double total = 0.0;
    for (std::uint64_t x = first; x <= last && first <= last; ++x) {
        const double p = f(static_cast<double>(x));
        if (p <= 0.0) continue;
        out.prob[nearest(x, pos)] += p;
        total += p;
    }
    if (!(total > 0.0)) throw DomainError("smart_search_space: no probability mass in range");
    for (auto& p : out.prob) p /= total;
    return out;
}

std::uint64_t rank(const SmartPmf& h, std::uint64_t x_r) {
    auto it = std::lower_bound(h.support.begin(), h.support.end(), x_r);
    if (it == h.support.end() || *it != x_r) throw NotInSupportError("true value outside the candidate set");
    const double pr = h.prob[static_cast<std::size_t>(it - h.support.begin())];
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < h.support.size(); ++i) {
        if (h.prob[i] > pr || (h.prob[i] == pr && h.support[i] < x_r)) ++r;
    }
    return r;
}

double search_space_size(const std::vector<RankResult>& per_layer) {
    double s = 0.0;
    for (const auto& r : per_layer) s += std::log10(static_cast<double>(r.n_i));
    return s;
}

json to_json(const RankResult& r) {
    std::size_t mode = 0;
    for (std::size_t i = 1; i < r.h_smart.prob.size(); ++i)
        if (r.h_smart.prob[i] > r.h_smart.prob[mode]) mode = i;
    json j = {{"layer", r.layer},
              {"x_r", r.x_r},
              {"rank", r.rank},
              {"n_i", r.n_i},
              {"log10_space", r.log10_space},
              {"support_size", r.h_smart.support.size()},
              {"h_points", r.h.grid.size()}};
    if (!r.h.grid.empty()) {
        j["h_lo"] = r.h.lo();
        j["h_hi"] = r.h.hi();
        j["h_mean"] = r.h.mean();
    }
    if (!r.h_smart.support.empty()) {
        j["mode"] = r.h_smart.support[mode];
        j["mode_prob"] = r.h_smart.prob[mode];
    }
    return j;
}

void write_grid_pdf_csv(std::ostream& os, const GridPdf& pdf) {
    os << "x,density\n";
    char buf[64];
    for (std::size_t i = 0; i < pdf.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", pdf.grid[i], pdf.density[i]);
        os << buf;
    }
}

GridPdf read_grid_pdf_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,density", 0) != 0)
        throw ConfigError("GridPdf CSV: expected header 'x,density'");
    GridPdf p;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("no comma");
            std::size_t used = 0;
            p.grid.push_back(std::stod(line.substr(0, comma)));
            p.density.push_back(std::stod(line.substr(comma + 1), &used));
        } catch (const std::exception&) {
            throw ConfigError("GridPdf CSV line " + std::to_string(lineno) + ": expected two numbers");
        }
    }
    p.validate();
    return p;
}

}  // namespace tracelab
