#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "takd/error.hpp"
#include "takd/rng.hpp"

namespace takd {

/// exp(-(u - v)^2 / (2 sigma^2)).
inline double rbf(double u, double v, double sigma) {
    const double d = u - v;
    return std::exp(-d * d / (2.0 * sigma * sigma));
}

/// Sum of per-coordinate Gaussians: sum_d exp(-(u_d - v_d)^2 / (2 sigma^2)).
inline double rbf_sum(std::span<const double> u, std::span<const double> v, double sigma) {
    if (u.size() != v.size()) throw config_error("rbf_sum: dims mismatch");
    double s = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) s += rbf(u[d], v[d], sigma);
    return s;
}

/// Pivot grid for the scalar Gaussian kernel approximation
/// G_sigma(u - v) ~= c * <phi(u), phi(v)>, with phi_k(u) = G_{sigma/sqrt2}(u - pivot_k)
/// over Z equally spaced pivots spanning [lo, hi]. c is fitted by least
/// squares (calibrate_c); its continuous-integral counterpart is
/// spacing * sqrt(2 / (pi sigma^2)).
struct PivotGrid {
    double lo = -1.0;
    double hi = 1.0;
    double sigma = 0.5;
    double c = 1.0;
    std::vector<double> pivots;

    std::size_t size() const { return pivots.size(); }
    double spacing() const { return pivots.size() > 1 ? pivots[1] - pivots[0] : hi - lo; }
};

/// Unscaled pivot responses phi_k(u) = G_{sigma/sqrt2}(u - pivot_k); every
/// entry lies in (0, 1].
inline std::vector<double> phi(double u, const PivotGrid& g) {
    std::vector<double> out(g.pivots.size());
    const double s = g.sigma / std::numbers::sqrt2;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = rbf(u, g.pivots[k], s);
    return out;
}

/// Least-squares fit of the kernel scale: minimises
/// sum_i (c <phi(u_i), phi(v_i)> - G_sigma(u_i - v_i))^2 over n uniform pairs
/// drawn from [lo, hi]^2 with the given seed.
inline double calibrate_c(const PivotGrid& g, int n_samples = 256, std::uint64_t seed = 42) {
    if (g.pivots.empty()) throw config_error("calibrate_c: empty grid");
    if (n_samples < 1) throw config_error("calibrate_c: n_samples must be >= 1");
    Rng rng(seed);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double u = rng.uniform(g.lo, g.hi);
        const double v = rng.uniform(g.lo, g.hi);
        const auto pu = phi(u, g);
        const auto pv = phi(v, g);
        double a = 0.0;
        for (std::size_t k = 0; k < pu.size(); ++k) a += pu[k] * pv[k];
        num += a * rbf(u, v, g.sigma);
        den += a * a;
    }
    if (den <= 0.0 || !std::isfinite(den)) throw numeric_error("calibrate_c: degenerate response matrix");
    return num / den;
}

/// Builds a grid of z equally spaced pivots on [lo, hi] and calibrates c.
inline PivotGrid make_grid(int z, double lo, double hi, double sigma, int calib_samples = 256,
                           std::uint64_t seed = 42) {
    if (z < 2) throw config_error("make_grid: need at least 2 pivots");
    if (!(lo < hi)) throw config_error("make_grid: need lo < hi");
    if (!(sigma > 0.0)) throw config_error("make_grid: need sigma > 0");
    PivotGrid g;
    g.lo = lo;
    g.hi = hi;
    g.sigma = sigma;
    g.pivots.resize(z);
    for (int k = 0; k < z; ++k) g.pivots[k] = lo + (hi - lo) * static_cast<double>(k) / (z - 1);
    g.c = calibrate_c(g, calib_samples, seed);
    return g;
}

/// sqrt(c) * phi(u): the scalar feature map whose plain dot approximates
/// G_sigma(u - v).
inline std::vector<double> embed_scalar(double u, const PivotGrid& g) {
    std::vector<double> out = phi(u, g);
    const double s = std::sqrt(g.c);
    for (double& x : out) x *= s;
    return out;
}

/// Concatenated per-coordinate embeddings; the dot of two outputs
/// approximates the sum kernel rbf_sum(x, y, sigma).
inline std::vector<double> phi_vec(std::span<const double> x, const PivotGrid& g) {
    std::vector<double> out;
    out.reserve(x.size() * g.pivots.size());
    const double s = std::sqrt(g.c);
    const double sig = g.sigma / std::numbers::sqrt2;
    for (double xd : x)
        for (double p : g.pivots) out.push_back(s * rbf(xd, p, sig));
    return out;
}

/// Normalised position of s within an index set spanning [lo_idx, hi_idx]:
/// (s - lo) / (hi - lo), or 0 for a single-element set.
inline double time_norm(std::size_t s, std::size_t count) {
    if (count <= 1) return 0.0;
    return static_cast<double>(s) / static_cast<double>(count - 1);
}

inline double span_norm(double v, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return (v - lo) / (hi - lo);
}

}  // namespace takd
