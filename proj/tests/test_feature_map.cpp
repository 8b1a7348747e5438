#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "frozen.hpp"
#include "takd/feature_map.hpp"
#include "takd/rng.hpp"

namespace {

/// Worst-case approximation error of c <phi(u), phi(v)> vs the true Gaussian
/// over n uniformly drawn pairs.
double approx_error(const takd::PivotGrid& g, int n, std::uint64_t seed) {
    takd::Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform(g.lo, g.hi);
        const double v = rng.uniform(g.lo, g.hi);
        const auto eu = takd::embed_scalar(u, g);
        const auto ev = takd::embed_scalar(v, g);
        double dot = 0.0;
        for (std::size_t k = 0; k < eu.size(); ++k) dot += eu[k] * ev[k];
        worst = std::max(worst, std::abs(dot - takd::rbf(u, v, g.sigma)));
    }
    return worst;
}

}  // namespace

TEST_CASE("make_grid spaces pivots evenly and validates input") {
    const auto g = takd::make_grid(5, -1.0, 1.0, 0.5);
    REQUIRE(g.pivots.size() == 5);
    REQUIRE(g.pivots.front() == Catch::Approx(-1.0));
    REQUIRE(g.pivots.back() == Catch::Approx(1.0));
    for (std::size_t k = 1; k < g.pivots.size(); ++k)
        REQUIRE(g.pivots[k] - g.pivots[k - 1] == Catch::Approx(0.5));
    REQUIRE_THROWS_AS(takd::make_grid(1, -1.0, 1.0, 0.5), takd::config_error);
    REQUIRE_THROWS_AS(takd::make_grid(5, 1.0, -1.0, 0.5), takd::config_error);
    REQUIRE_THROWS_AS(takd::make_grid(5, -1.0, 1.0, 0.0), takd::config_error);
}

TEST_CASE("phi entries stay in (0, 1] and peak at the matching pivot") {
    const auto g = takd::make_grid(7, 0.0, 1.0, 0.4);
    const auto p = takd::phi(0.5, g);
    for (double x : p) {
        REQUIRE(x > 0.0);
        REQUIRE(x <= 1.0);
    }
    const auto at_pivot = takd::phi(g.pivots[3], g);
    REQUIRE(at_pivot[3] == Catch::Approx(1.0));
}

TEST_CASE("calibrated c is deterministic and near the quadrature constant") {
    const auto g = takd::make_grid(11, -1.0, 1.0, 0.5);
    REQUIRE(g.c == takd::calibrate_c(g, 256, 42));
    const double quadrature = g.spacing() * std::sqrt(2.0 / (std::numbers::pi * g.sigma * g.sigma));
    REQUIRE(g.c > 0.5 * quadrature);
    REQUIRE(g.c < 2.0 * quadrature);
    REQUIRE(takd::calibrate_c(g, 256, 7) != takd::calibrate_c(g, 256, 8));
}

TEST_CASE("kernel approximation error at the frozen sweep values") {
    const auto coarse = takd::make_grid(3, -1.0, 1.0, 0.5);
    const auto medium = takd::make_grid(11, -1.0, 1.0, 0.5);
    const auto fine = takd::make_grid(20, -1.0, 1.0, 0.5);
    const double e3 = approx_error(coarse, 1000, 9001);
    const double e11 = approx_error(medium, 1000, 9001);
    const double e20 = approx_error(fine, 1000, 9001);
    REQUIRE(e11 <= frozen::rbf_eps0);
    REQUIRE(e20 < e3);
    REQUIRE(e3 > frozen::rbf_err3_floor);
    REQUIRE(e20 < frozen::rbf_err20_ceil);
}

TEST_CASE("phi_vec dot equals the sum of per-coordinate approximations exactly") {
    const auto g = takd::make_grid(11, -1.0, 1.0, 0.6);
    takd::Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(3), y(3);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        for (double& v : y) v = rng.uniform(-1.0, 1.0);
        const auto fx = takd::phi_vec(x, g);
        const auto fy = takd::phi_vec(y, g);
        REQUIRE(fx.size() == 3 * g.size());
        double dot = 0.0;
        for (std::size_t k = 0; k < fx.size(); ++k) dot += fx[k] * fy[k];
        double per_coord = 0.0;
        for (std::size_t d = 0; d < 3; ++d) {
            const auto pu = takd::phi(x[d], g);
            const auto pv = takd::phi(y[d], g);
            for (std::size_t k = 0; k < pu.size(); ++k) per_coord += g.c * pu[k] * pv[k];
        }
        REQUIRE(dot == Catch::Approx(per_coord).margin(1e-12));
        REQUIRE(dot == Catch::Approx(takd::rbf_sum(x, y, g.sigma)).margin(3.0 * frozen::rbf_eps0));
    }
}

TEST_CASE("time_norm maps an index range onto [0, 1]") {
    REQUIRE(takd::time_norm(0, 10) == 0.0);
    REQUIRE(takd::time_norm(9, 10) == 1.0);
    REQUIRE(takd::time_norm(3, 10) == Catch::Approx(3.0 / 9.0));
    REQUIRE(takd::time_norm(0, 1) == 0.0);
    REQUIRE(takd::span_norm(6.0, 6.0, 6.0) == 0.0);
    REQUIRE(takd::span_norm(10.0, 6.0, 24.0) == Catch::Approx(4.0 / 18.0));
}
