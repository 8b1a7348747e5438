#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "takd/epn.hpp"
#include "takd/rng.hpp"
#include "takd/svm.hpp"

using namespace takd;

namespace {

Descriptor make_desc(std::vector<double> values, std::int32_t label, std::int32_t subject = 0) {
    Descriptor d;
    d.label = label;
    d.subject = subject;
    d.values = std::move(values);
    return d;
}

std::vector<Descriptor> blobs(Rng& rng, int classes, int per_class, int dim, double spread) {
    std::vector<Descriptor> out;
    for (int k = 0; k < classes; ++k) {
        std::vector<double> center(dim);
        for (auto& v : center) v = rng.uniform(-1.0, 1.0) * 4.0;
        for (int i = 0; i < per_class; ++i) {
            std::vector<double> x(dim);
            for (int d = 0; d < dim; ++d) x[d] = center[d] + spread * rng.normal();
            out.push_back(make_desc(std::move(x), k, i));
        }
    }
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

TEST_CASE("separable clusters are classified perfectly") {
    Rng rng(5);
    const auto train = blobs(rng, 3, 12, 2, 0.15);
    SvmOptions opt;
    opt.normalize = false;
    opt.C = 1.0;
    const auto m = train_svm(train, opt);
    CHECK(accuracy(m, train) == 1.0);

    Rng rng2(6);
    for (int k = 0; k < 3; ++k) {
        const auto& anchor = train[static_cast<std::size_t>(k) * 12];
        std::vector<double> probe = anchor.values;
        for (auto& v : probe) v += 0.05 * rng2.normal();
        CHECK(predict(m, probe) == k);
    }
}

TEST_CASE("xor labels cannot be separated by a linear model") {
    std::vector<Descriptor> data;
    data.push_back(make_desc({-1.0, -1.0}, 0));
    data.push_back(make_desc({1.0, 1.0}, 0));
    data.push_back(make_desc({-1.0, 1.0}, 1));
    data.push_back(make_desc({1.0, -1.0}, 1));
    SvmOptions opt;
    opt.normalize = false;
    opt.epochs = 400;
    const auto m = train_svm(data, opt);
    CHECK(accuracy(m, data) <= 0.75);
}

TEST_CASE("per-class training objective is non-increasing") {
    Rng rng(15);
    const auto train = blobs(rng, 3, 8, 4, 0.6);
    const auto m = train_svm(train);
    REQUIRE(m.objective.size() == 3);
    for (const auto& curve : m.objective) {
        REQUIRE(curve.size() == 200);
        for (std::size_t t = 1; t < curve.size(); ++t) CHECK(curve[t] <= curve[t - 1] + 1e-15);
    }
}

TEST_CASE("training is reproducible to the byte") {
    Rng rng(25);
    const auto train = blobs(rng, 2, 10, 3, 0.4);
    const auto m1 = train_svm(train);
    const auto m2 = train_svm(train);
    save_model("model_a.bin", m1);
    save_model("model_b.bin", m2);
    CHECK(slurp("model_a.bin") == slurp("model_b.bin"));
    std::remove("model_a.bin");
    std::remove("model_b.bin");
}

TEST_CASE("appending zero features does not change accuracy") {
    Rng rng(35);
    const auto train = blobs(rng, 3, 10, 4, 1.2);
    Rng rng2(36);
    const auto test = blobs(rng2, 3, 6, 4, 1.2);

    auto widen = [](std::vector<Descriptor> in) {
        for (auto& d : in) d.values.resize(d.values.size() + 3, 0.0);
        return in;
    };
    const auto m = train_svm(train);
    const auto mw = train_svm(widen(train));
    const double a = accuracy(m, test);
    const double aw = accuracy(mw, widen(test));
    CHECK(std::abs(a - aw) <= 1.0 / 18.0 + 1e-12);
}

TEST_CASE("scores are affine and scale-invariant in the argmax with zero bias") {
    LinearModel m;
    m.labels = {0, 1};
    m.dim = 2;
    m.normalized = false;
    m.bias = {0.0, 0.0};
    m.weights = {1.0, -0.5, -0.25, 2.0};

    const std::vector<double> x = {0.7, 0.3}, y = {-0.4, 1.1};
    CHECK(predict(m, x) == predict(m, std::vector<double>{2.1, 0.9}));

    const double alpha = 0.3;
    std::vector<double> mix(2);
    for (int d = 0; d < 2; ++d) mix[d] = alpha * x[d] + (1 - alpha) * y[d];
    const auto sx = svm_scores(m, x), sy = svm_scores(m, y), sm = svm_scores(m, mix);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(sm[k] == Catch::Approx(alpha * sx[k] + (1 - alpha) * sy[k]).margin(1e-12));

    CHECK_THROWS_AS(svm_scores(m, std::vector<double>{1.0}), config_error);
}

TEST_CASE("argmax ties break toward the lowest class label") {
    LinearModel m;
    m.labels = {2, 5};
    m.dim = 1;
    m.normalized = false;
    m.bias = {0.0, 0.0};
    m.weights = {1.0, 1.0};
    CHECK(predict(m, std::vector<double>{3.0}) == 2);
}

TEST_CASE("degenerate training sets are rejected") {
    std::vector<Descriptor> one = {make_desc({1.0, 2.0}, 0), make_desc({2.0, 1.0}, 0)};
    CHECK_THROWS_AS(train_svm(one), config_error);
    CHECK_THROWS_AS(train_svm({}), config_error);
    std::vector<Descriptor> ragged = {make_desc({1.0}, 0), make_desc({2.0, 1.0}, 1)};
    CHECK_THROWS_AS(train_svm(ragged), config_error);
    SvmOptions bad;
    bad.C = 0.0;
    std::vector<Descriptor> ok = {make_desc({1.0}, 0), make_desc({2.0}, 1)};
    CHECK_THROWS_AS(train_svm(ok, bad), config_error);
}

TEST_CASE("late fusion reproduces the weighted kernel sum") {
    Rng rng(45);
    auto mk = [&](std::int32_t label) {
        Descriptor a = make_desc({rng.uniform(), rng.uniform(), rng.uniform()}, label);
        Descriptor b = make_desc({rng.uniform(), rng.uniform()}, label);
        return std::pair{a, b};
    };
    const auto [a1, b1] = mk(0);
    const auto [a2, b2] = mk(1);
    auto f1 = late_fusion(a1, b1, 0.3);
    Descriptor b2same = b2;
    b2same.label = a2.label;
    auto f2 = late_fusion(a2, b2same, 0.3);
    CHECK(f1.values.size() == 5);
    CHECK(f1.kind == KernelKind::fused);
    CHECK(dot(f1.values, f2.values) ==
          Catch::Approx(0.3 * dot(a1.values, a2.values) + 0.7 * dot(b1.values, b2same.values))
              .margin(1e-12));

    auto w1 = late_fusion(a1, b1, 1.0);
    auto w1b = late_fusion(a2, b2same, 1.0);
    CHECK(dot(w1.values, w1b.values) == Catch::Approx(dot(a1.values, a2.values)).margin(1e-12));

    CHECK_THROWS_AS(late_fusion(a1, b1, 1.5), config_error);
    Descriptor other = b1;
    other.label = 99;
    CHECK_THROWS_AS(late_fusion(a1, other, 0.5), config_error);
}

TEST_CASE("constant kernel gives a rank-1 positive semidefinite Gram matrix") {
    const auto g = gram(5, [](std::size_t, std::size_t) { return 1.0; });
    CHECK(g.dims() == std::vector<std::size_t>{5, 5});
    double asym = 0.0;
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = 0; b < 5; ++b) asym = std::max(asym, std::abs(g[a * 5 + b] - g[b * 5 + a]));
    CHECK(asym <= 1e-10);
    CHECK(sym_min_eig(g) == Catch::Approx(0.0).margin(1e-10));
    CHECK_THROWS_AS(gram(1, [](std::size_t, std::size_t) { return 1.0; }), config_error);
}

TEST_CASE("model files round-trip") {
    Rng rng(55);
    const auto train = blobs(rng, 3, 6, 4, 0.5);
    const auto m = train_svm(train);
    save_model("model_rt.bin", m);
    const auto l = load_model("model_rt.bin");
    CHECK(l.labels == m.labels);
    CHECK(l.dim == m.dim);
    CHECK(l.normalized == m.normalized);
    CHECK(l.C == m.C);
    CHECK(l.epochs == m.epochs);
    CHECK(l.seed == m.seed);
    CHECK(l.bias == m.bias);
    CHECK(l.weights == m.weights);
    for (const auto& d : train) CHECK(predict(l, d.values) == predict(m, d.values));

    const auto bytes = slurp("model_rt.bin");
    {
        std::ofstream os("model_rt.bin", std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_model("model_rt.bin"), io_error);
    CHECK_THROWS_AS(load_model("missing_model.bin"), io_error);
    std::remove("model_rt.bin");
}
