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

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tracelab/config.hpp"
#include "tracelab/rng.hpp"

namespace tracelab {

/// Density sampled on a strictly increasing positive grid. A single grid
/// point is a point mass.
struct GridPdf {
    std::vector<double> grid;
    std::vector<double> density;

    bool is_point_mass() const { return grid.size() == 1; }
    double lo() const { return grid.front(); }
    double hi() const { return grid.back(); }

    /// Trapezoid mass.
    double mass() const;
    double mean() const;
    /// Density at x: monotone cubic Hermite inside the grid, 0 outside.
    double eval(double x) const;
    /// Integral of the piecewise-linear density up to x.
    double cdf(double x) const;
    /// Inverse-CDF sample (uniform within a cell).
    double sample(Rng& rng) const;

    /// Throws ShapeError/DomainError when the invariants fail.
    void validate(double mass_tol = 1e-3) const;
    GridPdf normalized() const;
};

GridPdf point_mass(double x);
GridPdf uniform_pdf(double a, double b, std::size_t n = 2001);
/// f sampled on n points; log_spaced picks an exponential grid.
GridPdf tabulate(const std::function<double(double)>& f, double a, double b, std::size_t n,
                 bool log_spaced = false);
/// Normal(mu, sd) truncated to [a, b].
GridPdf normal_pdf(double mu, double sd, double a, double b, std::size_t n = 2001);
/// Continuous geometric (exponential) decay from a with mean gap `mean_gap`,
/// truncated to [a, b].
GridPdf geometric_pdf(double mean_gap, double a, double b, std::size_t n = 2001);

/// Transform values on the line Re(s) = c. The Fourier pipeline keeps its
/// exponential grid (x_k = exp(t0 + k delta)) so results can be inverted.
struct MellinFn {
    double c = 1.5;
    std::vector<std::complex<double>> s;
    std::vector<std::complex<double>> values;
    double t0 = 0.0;
    double delta = 0.0;
    std::size_t n = 0;
    /// Number of data samples behind the transform (rest is zero padding).
    std::size_t support_points = 0;
};

/// Trapezoid sum of x^(s-1) f(x) dx; the slow reference.
MellinFn mellin_riemann(const GridPdf& pdf, const std::vector<std::complex<double>>& s_points);

struct FftOptions {
    double c = 1.5;
    std::size_t n = 1u << 14;
};

/// Interpolate, resample on an exponential grid, weight by x^c and FFT.
MellinFn mellin_fft(const GridPdf& pdf, const FftOptions& opts = {});

/// Transform on a prescribed exponential grid with `points` data samples,
/// zero-padded to opts.n.
MellinFn mellin_fft_on(const GridPdf& pdf, double t0, double delta, std::size_t points,
                       const FftOptions& opts);

/// Pointwise product of two transforms on matching grids.
MellinFn mellin_multiply(const MellinFn& a, const MellinFn& b);

/// Inverse of the Fourier pipeline; returns the first `points` grid samples.
GridPdf mellin_invert(const MellinFn& m, std::size_t points);

/// V = 1/beta.
GridPdf reciprocal_pdf(const GridPdf& beta);

/// Y - alpha for a fixed observation.
GridPdf shift_pdf(double y, const GridPdf& alpha);

enum class ProductMethod { mellin, mc };

struct ProductOptions {
    FftOptions fft{};
    std::size_t mc_draws = 1'000'000;
    std::size_t mc_bins = 1000;
    std::uint64_t seed = 0;
};

GridPdf product_pdf(const GridPdf& u, const GridPdf& v, ProductMethod method = ProductMethod::mellin,
                    const ProductOptions& opts = {});

/// Total variation over `bins` equal-width cells spanning both supports.
double tv_distance(const GridPdf& a, const GridPdf& b, std::size_t bins = 256);

/// h(X) for X = (Y - alpha) / beta.
GridPdf predict_X(double y_obs, const GridPdf& alpha_prior, const GridPdf& beta_prior,
                  const ProductOptions& opts = {});

/// Probability mass function over NSQF integers.
struct SmartPmf {
    std::vector<std::uint64_t> support;
    std::vector<double> prob;
};

/// Unit cells on every integer of [lo, hi] via PCHIP, non-NSQF mass moved
/// to the nearest NSQF (ties go down), renormalized.
SmartPmf smart_search_space(const GridPdf& h, std::uint64_t lo, std::uint64_t hi);

/// 1 + #higher + #equal-and-smaller.
std::uint64_t rank(const SmartPmf& h, std::uint64_t x_r);

struct RankResult {
    int layer = 0;
    GridPdf h;
    SmartPmf h_smart;
    std::uint64_t x_r = 0;
    std::uint64_t rank = 0;
    /// Choice count for the layer (the rank of the true value).
    std::uint64_t n_i = 0;
    double log10_space = 0.0;
};

double search_space_size(const std::vector<RankResult>& per_layer);

json to_json(const RankResult& r);

void write_grid_pdf_csv(std::ostream& os, const GridPdf& pdf);
GridPdf read_grid_pdf_csv(std::istream& is);

}  // namespace tracelab
