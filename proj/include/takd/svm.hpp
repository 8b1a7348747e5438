#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "takd/binio.hpp"
#include "takd/dataio.hpp"
#include "takd/error.hpp"
#include "takd/tensor.hpp"

namespace takd {

struct SvmOptions {
    double C = 1e-2;
    std::uint32_t epochs = 200;
    std::uint64_t seed = 42;
    bool normalize = true;
};

/// One-vs-rest linear classifier. weights is class-major (class k occupies
/// [k*dim, (k+1)*dim)); objective holds the per-class running-minimum hinge
/// objective per epoch (diagnostic only, not serialized).
struct LinearModel {
    std::vector<std::int32_t> labels;
    std::uint32_t dim = 0;
    bool normalized = true;
    double C = 1e-2;
    std::uint32_t epochs = 0;
    std::uint64_t seed = 0;
    std::vector<double> bias;
    std::vector<double> weights;
    std::vector<std::vector<double>> objective;
};

namespace detail {

inline std::vector<double> maybe_normalized(std::span<const double> x, bool normalize) {
    std::vector<double> out(x.begin(), x.end());
    if (!normalize) return out;
    double n2 = 0.0;
    for (double v : out) n2 += v * v;
    if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (double& v : out) v *= inv;
    }
    return out;
}

}  // namespace detail

/// Trains one-vs-rest hinge-loss classifiers by deterministic full-batch
/// subgradient descent with step 1/(lambda*t), lambda = 1/(C*n), keeping the
/// best iterate per class. The bias is unregularized.
inline LinearModel train_svm(const std::vector<Descriptor>& data, const SvmOptions& opt = {}) {
    if (data.empty()) throw config_error("train_svm: empty training set");
    if (!(opt.C > 0.0)) throw config_error("train_svm: C must be positive");
    if (opt.epochs < 1) throw config_error("train_svm: epochs must be >= 1");
    const std::size_t n = data.size();
    const std::size_t dim = data.front().values.size();
    for (const auto& d : data)
        if (d.values.size() != dim) throw config_error("train_svm: descriptor dimension mismatch");

    std::set<std::int32_t> label_set;
    for (const auto& d : data) label_set.insert(d.label);
    if (label_set.size() < 2) throw config_error("train_svm: need at least 2 classes");

    std::vector<std::vector<double>> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = detail::maybe_normalized(data[i].values, opt.normalize);

    LinearModel m;
    m.labels.assign(label_set.begin(), label_set.end());
    m.dim = static_cast<std::uint32_t>(dim);
    m.normalized = opt.normalize;
    m.C = opt.C;
    m.epochs = opt.epochs;
    m.seed = opt.seed;
    m.bias.assign(m.labels.size(), 0.0);
    m.weights.assign(m.labels.size() * dim, 0.0);
    m.objective.resize(m.labels.size());

    const double lambda = 1.0 / (opt.C * static_cast<double>(n));
    std::vector<double> w(dim), g(dim), best_w(dim);
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = data[i].label == m.labels[k] ? 1.0 : -1.0;
        std::fill(w.begin(), w.end(), 0.0);
        double b = 0.0;
        double best = std::numeric_limits<double>::infinity();
        double best_b = 0.0;
        auto objective_at = [&]() {
            double reg = 0.0;
            for (double v : w) reg += v * v;
            double hinge = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = b;
                for (std::size_t d = 0; d < dim; ++d) s += w[d] * x[i][d];
                hinge += std::max(0.0, 1.0 - y[i] * s);
            }
            return 0.5 * lambda * reg + hinge / static_cast<double>(n);
        };
        for (std::uint32_t t = 1; t <= opt.epochs; ++t) {
            for (std::size_t d = 0; d < dim; ++d) g[d] = lambda * w[d];
            double gb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = b;
                for (std::size_t d = 0; d < dim; ++d) s += w[d] * x[i][d];
                if (y[i] * s < 1.0) {
                    const double c = -y[i] / static_cast<double>(n);
                    for (std::size_t d = 0; d < dim; ++d) g[d] += c * x[i][d];
                    gb += c;
                }
            }
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            for (std::size_t d = 0; d < dim; ++d) w[d] -= eta * g[d];
            b -= eta * gb;
            const double obj = objective_at();
            if (obj < best) {
                best = obj;
                best_w = w;
                best_b = b;
            }
            m.objective[k].push_back(best);
        }
        std::copy(best_w.begin(), best_w.end(), m.weights.begin() + static_cast<std::ptrdiff_t>(k * dim));
        m.bias[k] = best_b;
    }
    return m;
}

/// Per-class decision scores for one descriptor.
inline std::vector<double> svm_scores(const LinearModel& m, std::span<const double> values) {
    if (values.size() != m.dim) throw config_error("svm_scores: dimension mismatch");
    const auto x = detail::maybe_normalized(values, m.normalized);
    std::vector<double> out(m.labels.size(), 0.0);
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        double s = m.bias[k];
        const double* w = m.weights.data() + k * m.dim;
        for (std::size_t d = 0; d < m.dim; ++d) s += w[d] * x[d];
        out[k] = s;
    }
    return out;
}

/// Argmax class; ties go to the lowest class label.
inline std::int32_t predict(const LinearModel& m, std::span<const double> values) {
    const auto s = svm_scores(m, values);
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.size(); ++k)
        if (s[k] > s[best]) best = k;
    return m.labels[best];
}

inline double accuracy(const LinearModel& m, const std::vector<Descriptor>& data) {
    if (data.empty()) throw config_error("accuracy: empty evaluation set");
    std::size_t hit = 0;
    for (const auto& d : data)
        if (predict(m, d.values) == d.label) ++hit;
    return static_cast<double>(hit) / static_cast<double>(data.size());
}

/// Weighted concatenation [sqrt(w)*a ; sqrt(1-w)*b]: the dot product of two
/// fused descriptors is the w-weighted average of the two underlying dots.
inline Descriptor late_fusion(const Descriptor& a, const Descriptor& b, double w = 0.5) {
    if (!(w >= 0.0 && w <= 1.0)) throw config_error("late_fusion: weight must be in [0,1]");
    if (a.label != b.label || a.subject != b.subject)
        throw config_error("late_fusion: descriptors disagree on label or subject");
    Descriptor out;
    out.kind = KernelKind::fused;
    out.config_hash = a.config_hash ^ (b.config_hash * 0x9e3779b97f4a7c15ULL);
    out.joint_count = a.joint_count;
    out.label = a.label;
    out.subject = b.subject;
    out.values.reserve(a.values.size() + b.values.size());
    const double wa = std::sqrt(w), wb = std::sqrt(1.0 - w);
    for (double v : a.values) out.values.push_back(wa * v);
    for (double v : b.values) out.values.push_back(wb * v);
    return out;
}

/// Dense symmetric kernel matrix G[a,b] = k(a,b), evaluated on the upper
/// triangle and mirrored.
template <typename Kernel>
DenseTensor gram(std::size_t n, Kernel&& k) {
    if (n < 2) throw config_error("gram: need at least 2 items");
    DenseTensor g({n, n});
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            const double v = k(a, b);
            g[a * n + b] = v;
            g[b * n + a] = v;
        }
    return g;
}

inline constexpr char model_magic[4] = {'T', 'A', 'K', 'M'};
inline constexpr std::uint16_t model_version = 1;

/// Model file: magic "TAKM", u16 version, u8 normalized flag, f64 C, u32
/// epochs, u64 seed, u32 dim, u32 class count, labels i32 each, biases f64
/// each, then class-major f64 weights. Little-endian throughout.
inline void save_model(const std::string& path, const LinearModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for write: " + path);
    os.write(model_magic, 4);
    binio::write_le<std::uint16_t>(os, model_version);
    binio::write_le<std::uint8_t>(os, m.normalized ? 1 : 0);
    binio::write_le<double>(os, m.C);
    binio::write_le<std::uint32_t>(os, m.epochs);
    binio::write_le<std::uint64_t>(os, m.seed);
    binio::write_le<std::uint32_t>(os, m.dim);
    binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.labels.size()));
    for (auto l : m.labels) binio::write_le<std::int32_t>(os, l);
    for (auto b : m.bias) binio::write_le<double>(os, b);
    for (auto w : m.weights) binio::write_le<double>(os, w);
    if (!os) throw io_error("write failed: " + path);
}

inline LinearModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, model_magic, 4) != 0)
        throw io_error("bad magic (not a model file): " + path);
    if (binio::read_le<std::uint16_t>(is, "version") != model_version)
        throw io_error("unsupported model version");
    LinearModel m;
    m.normalized = binio::read_le<std::uint8_t>(is, "normalized flag") != 0;
    m.C = binio::read_le<double>(is, "C");
    m.epochs = binio::read_le<std::uint32_t>(is, "epochs");
    m.seed = binio::read_le<std::uint64_t>(is, "seed");
    m.dim = binio::read_le<std::uint32_t>(is, "dim");
    const auto classes = binio::read_le<std::uint32_t>(is, "class count");
    m.labels.resize(classes);
    for (auto& l : m.labels) l = binio::read_le<std::int32_t>(is, "label");
    m.bias.resize(classes);
    for (auto& b : m.bias) b = binio::read_le<double>(is, "bias");
    m.weights.resize(static_cast<std::size_t>(classes) * m.dim);
    for (auto& w : m.weights) w = binio::read_le<double>(is, "weight");
    return m;
}

}  // namespace takd
