#include <catch2/catch_amalgamated.hpp>
#include <cstddef>
#include <vector>

#include "takd/packed.hpp"
#include "takd/rng.hpp"
#include "takd/tensor.hpp"

using takd::DenseTensor;

namespace {

DenseTensor random_supersym(takd::Rng& rng, std::size_t d, std::size_t r) {
    DenseTensor t(std::vector<std::size_t>(r, d));
    for (int k = 0; k < 5; ++k) {
        std::vector<double> v(d);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        takd::accumulate_power(t, v, r, rng.uniform(0.1, 1.0));
    }
    return t;
}

}  // namespace

TEST_CASE("packed_len matches binomial values") {
    REQUIRE(takd::packed_len(21, 3) == 1771);
    REQUIRE(takd::packed_len(29, 3) == 4495);
    REQUIRE(takd::packed_len(29, 2) == 435);
    REQUIRE(takd::packed_len(28, 3) == 4060);
    REQUIRE(takd::packed_len(33, 3) == 6545);
    REQUIRE(takd::packed_len(3, 2) == 6);
    REQUIRE(takd::packed_len(1, 5) == 1);
}

TEST_CASE("pack then unpack reproduces the full tensor, and repack is identical") {
    takd::Rng rng(101);
    for (std::size_t r : {2u, 3u}) {
        const DenseTensor x = random_supersym(rng, 5, r);
        const takd::PackedSymmetric p = takd::pack_supersym(x);
        REQUIRE(p.raw().size() == takd::packed_len(5, r));
        const DenseTensor back = takd::unpack_supersym(p);
        REQUIRE(back.dims() == x.dims());
        for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(back[i] == Catch::Approx(x[i]).margin(1e-12));
        const takd::PackedSymmetric p2 = takd::pack_supersym(back);
        for (std::size_t i = 0; i < p.raw().size(); ++i) REQUIRE(p2.raw()[i] == p.raw()[i]);
    }
}

TEST_CASE("packed coefficient dot equals full tensor inner product") {
    takd::Rng rng(55);
    for (std::size_t r : {2u, 3u}) {
        const DenseTensor x = random_supersym(rng, 6, r);
        const DenseTensor y = random_supersym(rng, 6, r);
        const auto px = takd::pack_supersym(x);
        const auto py = takd::pack_supersym(y);
        const double full = takd::inner(x, y);
        REQUIRE(px.dot(py) == Catch::Approx(full).epsilon(1e-12));
        const auto cx = px.coefficients();
        const auto cy = py.coefficients();
        double flat = 0.0;
        for (std::size_t i = 0; i < cx.size(); ++i) flat += cx[i] * cy[i];
        REQUIRE(flat == Catch::Approx(full).epsilon(1e-12));
    }
}

TEST_CASE("multiplicity weights follow the permutation count") {
    DenseTensor x(std::vector<std::size_t>{2, 2, 2});
    const std::size_t i000[] = {0, 0, 0};
    const std::size_t i001[] = {0, 0, 1};
    const std::size_t i010[] = {0, 1, 0};
    const std::size_t i100[] = {1, 0, 0};
    x.at(i000) = 2.0;
    x.at(i001) = 3.0;
    x.at(i010) = 3.0;
    x.at(i100) = 3.0;
    const auto p = takd::pack_supersym(x);
    REQUIRE(p.raw().size() == 4);
    const auto c = p.coefficients();
    REQUIRE(c[0] == Catch::Approx(2.0));
    REQUIRE(c[1] == Catch::Approx(3.0 * std::sqrt(3.0)));
    REQUIRE(takd::inner(x, x) == Catch::Approx(p.dot(p)).epsilon(1e-14));
}

TEST_CASE("pack rejects non-symmetric tensors") {
    DenseTensor x(std::vector<std::size_t>{3, 3, 3});
    const std::size_t a[] = {0, 1, 2};
    const std::size_t b[] = {2, 1, 0};
    x.at(a) = 1.0;
    x.at(b) = 0.5;
    REQUIRE_THROWS_AS(takd::pack_supersym(x), takd::numeric_error);
    DenseTensor rect(std::vector<std::size_t>{3, 4, 3});
    REQUIRE_THROWS_AS(takd::pack_supersym(rect), takd::config_error);
}
