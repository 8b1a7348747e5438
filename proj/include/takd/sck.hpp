#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "takd/dataio.hpp"
#include "takd/epn.hpp"
#include "takd/error.hpp"
#include "takd/feature_map.hpp"
#include "takd/packed.hpp"
#include "takd/tensor.hpp"

namespace takd {

namespace detail {

inline double ipow(double base, std::uint32_t r) {
    double out = 1.0;
    for (std::uint32_t k = 0; k < r; ++k) out *= base;
    return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

/// Sequence compatibility kernel parameters: a spatial RBF grid over joint
/// coordinates on [-1,1], a temporal RBF grid over normalized time on [0,1],
/// mixing weights and the tensor order.
struct SckConfig {
    double beta1 = 0.5;
    double beta2 = 0.5;
    PivotGrid joint_grid;
    PivotGrid time_grid;
    std::uint32_t order = 3;
    EpnConfig epn;
};

inline void validate(const SckConfig& cfg) {
    if (cfg.beta1 < 0.0 || cfg.beta2 < 0.0 || std::abs(cfg.beta1 + cfg.beta2 - 1.0) > 1e-12)
        throw config_error("sck: beta weights must be nonnegative and sum to 1");
    if (cfg.order < 2 || cfg.order > 3) throw config_error("sck: order must be 2 or 3");
}

inline SckConfig make_sck_config(int z2 = 5, int z3 = 6, double sigma2 = 0.6, double sigma3 = 0.5,
                                 double beta1 = 0.5, double beta2 = 0.5, std::uint32_t order = 3) {
    SckConfig cfg;
    cfg.beta1 = beta1;
    cfg.beta2 = beta2;
    cfg.joint_grid = make_grid(z2, -1.0, 1.0, sigma2);
    cfg.time_grid = make_grid(z3, 0.0, 1.0, sigma3);
    cfg.order = order;
    cfg.epn.mode = EpnMode::slice;
    cfg.epn.gamma = 0.36;
    validate(cfg);
    return cfg;
}

inline std::size_t sck_feature_dim(const SckConfig& cfg) {
    return 3 * cfg.joint_grid.size() + cfg.time_grid.size();
}

/// Per-frame stacked feature: weighted coordinate embeddings followed by the
/// weighted temporal embedding of the normalized frame position.
inline std::vector<double> sck_feature(std::span<const double> x, double tnorm, const SckConfig& cfg) {
    std::vector<double> out;
    out.reserve(sck_feature_dim(cfg));
    const double w1 = std::sqrt(cfg.beta1);
    const double w2 = std::sqrt(cfg.beta2);
    for (double v : phi_vec(x, cfg.joint_grid)) out.push_back(w1 * v);
    for (double v : embed_scalar(tnorm, cfg.time_grid)) out.push_back(w2 * v);
    return out;
}

/// Mean over frames of the order-r outer power of the per-frame feature:
/// a super-symmetric tensor whose pairwise inner products linearize the
/// kernel.
inline DenseTensor sck_joint_tensor(const SkeletonSequence& s, std::uint32_t joint, const SckConfig& cfg) {
    validate(cfg);
    if (joint >= s.joints) throw config_error("sck_joint_tensor: joint index out of range");
    const std::size_t d = sck_feature_dim(cfg);
    SymmetricAccumulator acc(d, cfg.order);
    const double w = 1.0 / static_cast<double>(s.frames);
    for (std::uint32_t f = 0; f < s.frames; ++f) {
        const auto p = s.at(f, joint);
        const auto feat = sck_feature(std::span<const double>(p.data(), 3), time_norm(f, s.frames), cfg);
        acc.add(feat, w);
    }
    return unpack_supersym(acc.packed());
}

/// Exact kernel between two sequences: joints are matched one-to-one, and
/// every frame pair contributes the mixed spatial+temporal subkernel raised
/// to the configured order, averaged over the M*N frame pairs. With
/// linearized_subkernels the Gaussian subkernels are replaced by embedding
/// dot products, which the descriptor inner product reproduces exactly.
inline double exact_sck(const SkeletonSequence& a, const SkeletonSequence& b, const SckConfig& cfg,
                        bool linearized_subkernels = false) {
    validate(cfg);
    if (a.joints != b.joints) throw config_error("exact_sck: joint count mismatch");
    const double lambda = static_cast<double>(a.frames) * static_cast<double>(b.frames);
    double total = 0.0;
    for (std::uint32_t i = 0; i < a.joints; ++i) {
        for (std::uint32_t s = 0; s < a.frames; ++s) {
            const auto x = a.at(s, i);
            const double ts = time_norm(s, a.frames);
            const auto phix = linearized_subkernels
                                  ? phi_vec(std::span<const double>(x.data(), 3), cfg.joint_grid)
                                  : std::vector<double>{};
            const auto zs = linearized_subkernels ? embed_scalar(ts, cfg.time_grid) : std::vector<double>{};
            for (std::uint32_t t = 0; t < b.frames; ++t) {
                const auto y = b.at(t, i);
                const double tt = time_norm(t, b.frames);
                double base;
                if (linearized_subkernels) {
                    const auto phiy = phi_vec(std::span<const double>(y.data(), 3), cfg.joint_grid);
                    const auto zt = embed_scalar(tt, cfg.time_grid);
                    base = cfg.beta1 * detail::dot(phix, phiy) + cfg.beta2 * detail::dot(zs, zt);
                } else {
                    base = cfg.beta1 * rbf_sum(std::span<const double>(x.data(), 3),
                                               std::span<const double>(y.data(), 3), cfg.joint_grid.sigma) +
                           cfg.beta2 * rbf(ts, tt, cfg.time_grid.sigma);
                }
                total += detail::ipow(base, cfg.order);
            }
        }
    }
    return total / lambda;
}

/// Per-joint pipeline: aggregate tensor, spectral normalization, projection
/// onto super-symmetry, packed upper-simplex coefficients, concatenated over
/// joints.
inline Descriptor sck_descriptor(const SkeletonSequence& s, const SckConfig& cfg) {
    validate(cfg);
    Descriptor d;
    d.kind = KernelKind::sck;
    d.joint_count = s.joints;
    d.label = s.label;
    d.subject = s.subject;
    d.values.reserve(packed_len(sck_feature_dim(cfg), cfg.order) * s.joints);
    for (std::uint32_t j = 0; j < s.joints; ++j) {
        const DenseTensor x = sck_joint_tensor(s, j, cfg);
        const DenseTensor y = tensor_epn(x, cfg.epn);
        const auto coeffs = pack_supersym(symmetrize_supersym(y)).coefficients();
        d.values.insert(d.values.end(), coeffs.begin(), coeffs.end());
    }
    return d;
}

/// Subsequence extraction plan: window lengths and, per length, the stride
/// between admissible start positions.
struct SubsequenceScheme {
    std::vector<std::uint32_t> lengths;
    std::vector<std::uint32_t> strides = {1};

    std::uint32_t stride_for(std::size_t length_index) const {
        return strides.size() == 1 ? strides[0] : strides[length_index];
    }
    std::uint32_t max_length() const {
        std::uint32_t m = 0;
        for (auto v : lengths) m = std::max(m, v);
        return m;
    }
    std::uint32_t min_length() const {
        std::uint32_t m = lengths.empty() ? 0 : lengths[0];
        for (auto v : lengths) m = std::min(m, v);
        return m;
    }
};

inline void validate(const SubsequenceScheme& s) {
    if (s.lengths.empty()) throw config_error("subsequence scheme: empty length set");
    for (auto v : s.lengths)
        if (v < 1) throw config_error("subsequence scheme: lengths must be >= 1");
    if (s.strides.size() != 1 && s.strides.size() != s.lengths.size())
        throw config_error("subsequence scheme: strides must be a single value or one per length");
    for (auto v : s.strides)
        if (v < 1) throw config_error("subsequence scheme: strides must be >= 1");
}

/// lo:step:hi inclusive range of window lengths with a common start stride.
inline SubsequenceScheme make_scheme(std::uint32_t lo, std::uint32_t step, std::uint32_t hi,
                                     std::uint32_t stride = 1) {
    SubsequenceScheme s;
    for (std::uint32_t v = lo; v <= hi; v += step) s.lengths.push_back(v);
    s.strides = {stride};
    validate(s);
    return s;
}

/// Start positions {0, stride, ...} of windows of length tau in a sequence
/// of n frames.
inline std::vector<std::uint32_t> subsequence_starts(std::uint32_t n_frames, std::uint32_t tau,
                                                     std::uint32_t stride) {
    if (tau > n_frames) throw config_error("subsequence_starts: window longer than sequence");
    std::vector<std::uint32_t> out;
    for (std::uint32_t u = 0; u + tau <= n_frames; u += stride) out.push_back(u);
    return out;
}

enum class ChannelKind : std::uint16_t { joint_rbf = 0, score_linear = 1 };

/// One modality block of the stacked subsequence feature: either RBF
/// embeddings of a joint's coordinates or a raw per-frame score vector.
struct ChannelConfig {
    ChannelKind kind = ChannelKind::joint_rbf;
    double weight = 0.25;
    PivotGrid grid;
    std::uint32_t score_index = 0;
};

/// Subsequence-aggregated, multi-modal generalization of the sequence
/// kernel: adds temporal-position, window-position and window-length
/// subkernels on top of per-channel compatibility subkernels.
struct SckPlusConfig {
    std::vector<ChannelConfig> channels;
    double beta2 = 0.25;
    double beta3 = 0.25;
    double beta4 = 0.25;
    PivotGrid frame_grid;
    PivotGrid pos_grid;
    PivotGrid len_grid;
    SubsequenceScheme scheme;
    std::uint32_t order = 3;
    EpnConfig epn;
};

inline void validate(const SckPlusConfig& cfg) {
    if (cfg.channels.empty()) throw config_error("sck_plus: need at least one channel");
    double sum = cfg.beta2 + cfg.beta3 + cfg.beta4;
    if (cfg.beta2 < 0.0 || cfg.beta3 < 0.0 || cfg.beta4 < 0.0)
        throw config_error("sck_plus: beta weights must be nonnegative");
    for (const auto& ch : cfg.channels) {
        if (ch.weight < 0.0) throw config_error("sck_plus: channel weights must be nonnegative");
        sum += ch.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw config_error("sck_plus: weights must sum to 1");
    if (cfg.order < 2 || cfg.order > 3) throw config_error("sck_plus: order must be 2 or 3");
    validate(cfg.scheme);
}

inline SckPlusConfig make_sck_plus_config(int z2 = 5, int z3 = 5, int z4 = 5, int z5 = 3,
                                          double sigma2 = 0.6, double sigma_t = 0.5,
                                          SubsequenceScheme scheme = {}, std::uint32_t order = 3) {
    SckPlusConfig cfg;
    ChannelConfig joints;
    joints.kind = ChannelKind::joint_rbf;
    joints.weight = 0.25;
    joints.grid = make_grid(z2, -1.0, 1.0, sigma2);
    cfg.channels = {joints};
    cfg.frame_grid = make_grid(z3, 0.0, 1.0, sigma_t);
    cfg.pos_grid = make_grid(z4, 0.0, 1.0, sigma_t);
    cfg.len_grid = make_grid(z5, 0.0, 1.0, sigma_t);
    cfg.scheme = scheme.lengths.empty() ? make_scheme(6, 2, 24) : std::move(scheme);
    cfg.order = order;
    cfg.epn.mode = EpnMode::slice;
    cfg.epn.gamma = 0.36;
    validate(cfg);
    return cfg;
}

inline std::size_t sck_plus_feature_dim(const SckPlusConfig& cfg, const SkeletonSequence& s) {
    std::size_t d = cfg.frame_grid.size() + cfg.pos_grid.size() + cfg.len_grid.size();
    for (const auto& ch : cfg.channels) {
        if (ch.kind == ChannelKind::joint_rbf) {
            d += 3 * ch.grid.size();
        } else {
            if (ch.score_index >= s.channels.size())
                throw config_error("sck_plus: score channel index out of range");
            d += s.channels[ch.score_index].dim;
        }
    }
    return d;
}

namespace detail {

/// One aggregated sample: global frame plus the three normalized positional
/// coordinates (frame within window, window start, window length).
struct PlusSample {
    std::uint32_t frame;
    double f_frame;
    double f_pos;
    double f_len;
};

inline std::vector<PlusSample> plus_samples(std::uint32_t n_frames, const SubsequenceScheme& scheme) {
    const double lo_len = scheme.min_length();
    const double hi_len = scheme.max_length();
    std::vector<PlusSample> out;
    for (std::size_t li = 0; li < scheme.lengths.size(); ++li) {
        const std::uint32_t tau = scheme.lengths[li];
        const double f_len = span_norm(tau, lo_len, hi_len);
        const auto starts = subsequence_starts(n_frames, tau, scheme.stride_for(li));
        for (std::uint32_t u : starts) {
            const double f_pos = span_norm(u, starts.front(), starts.back());
            for (std::uint32_t sl = 0; sl < tau; ++sl)
                out.push_back({u + sl, time_norm(sl, tau), f_pos, f_len});
        }
    }
    return out;
}

inline void append_channel_blocks(std::vector<double>& out, const SkeletonSequence& s,
                                  std::uint32_t joint, std::uint32_t frame, const SckPlusConfig& cfg) {
    for (const auto& ch : cfg.channels) {
        const double w = std::sqrt(ch.weight);
        if (ch.kind == ChannelKind::joint_rbf) {
            const auto p = s.at(frame, joint);
            for (double v : phi_vec(std::span<const double>(p.data(), 3), ch.grid)) out.push_back(w * v);
        } else {
            const auto& sc = s.channels[ch.score_index];
            const std::size_t base = static_cast<std::size_t>(frame) * sc.dim;
            for (std::uint32_t k = 0; k < sc.dim; ++k) out.push_back(w * sc.values[base + k]);
        }
    }
}

}  // namespace detail

/// Mean over all (length, start, frame) window samples of the order-r outer
/// power of the stacked feature. Sequences shorter than the longest window
/// are loop-padded first.
inline DenseTensor sck_plus_joint_tensor(const SkeletonSequence& s0, std::uint32_t joint,
                                         const SckPlusConfig& cfg) {
    validate(cfg);
    if (joint >= s0.joints) throw config_error("sck_plus_joint_tensor: joint index out of range");
    const SkeletonSequence s = loop_pad(s0, cfg.scheme.max_length());
    const std::size_t d = sck_plus_feature_dim(cfg, s);
    const auto samples = detail::plus_samples(s.frames, cfg.scheme);
    SymmetricAccumulator acc(d, cfg.order);
    const double w = 1.0 / static_cast<double>(samples.size());
    const double w2 = std::sqrt(cfg.beta2);
    const double w3 = std::sqrt(cfg.beta3);
    const double w4 = std::sqrt(cfg.beta4);
    std::vector<double> feat;
    for (const auto& sm : samples) {
        feat.clear();
        feat.reserve(d);
        detail::append_channel_blocks(feat, s, joint, sm.frame, cfg);
        for (double v : embed_scalar(sm.f_frame, cfg.frame_grid)) feat.push_back(w2 * v);
        for (double v : embed_scalar(sm.f_pos, cfg.pos_grid)) feat.push_back(w3 * v);
        for (double v : embed_scalar(sm.f_len, cfg.len_grid)) feat.push_back(w4 * v);
        acc.add(feat, w);
    }
    return unpack_supersym(acc.packed());
}

/// Exact subsequence kernel: every window sample of A meets every window
/// sample of B through the weighted sum of channel, frame-position,
/// window-position and window-length subkernels raised to the configured
/// order, averaged over both sample counts.
inline double exact_sck_plus(const SkeletonSequence& a0, const SkeletonSequence& b0,
                             const SckPlusConfig& cfg, bool linearized_subkernels = false) {
    validate(cfg);
    if (a0.joints != b0.joints) throw config_error("exact_sck_plus: joint count mismatch");
    for (const auto& ch : cfg.channels) {
        if (ch.kind != ChannelKind::score_linear) continue;
        if (ch.score_index >= a0.channels.size() || ch.score_index >= b0.channels.size())
            throw config_error("exact_sck_plus: score channel index out of range");
        if (a0.channels[ch.score_index].dim != b0.channels[ch.score_index].dim)
            throw config_error("exact_sck_plus: score channel dimension mismatch");
    }
    const SkeletonSequence a = loop_pad(a0, cfg.scheme.max_length());
    const SkeletonSequence b = loop_pad(b0, cfg.scheme.max_length());
    const auto sa = detail::plus_samples(a.frames, cfg.scheme);
    const auto sb = detail::plus_samples(b.frames, cfg.scheme);

    const auto time_k = [&](double f, double g, const PivotGrid& grid) {
        if (!linearized_subkernels) return rbf(f, g, grid.sigma);
        return detail::dot(embed_scalar(f, grid), embed_scalar(g, grid));
    };

    double total = 0.0;
    for (std::uint32_t i = 0; i < a.joints; ++i) {
        for (const auto& ta : sa) {
            const auto xa = a.at(ta.frame, i);
            for (const auto& tb : sb) {
                const auto xb = b.at(tb.frame, i);
                double base = 0.0;
                for (const auto& ch : cfg.channels) {
                    if (ch.kind == ChannelKind::joint_rbf) {
                        const std::span<const double> u(xa.data(), 3), v(xb.data(), 3);
                        base += ch.weight * (linearized_subkernels
                                                 ? detail::dot(phi_vec(u, ch.grid), phi_vec(v, ch.grid))
                                                 : rbf_sum(u, v, ch.grid.sigma));
                    } else {
                        const auto& ca = a.channels[ch.score_index];
                        const auto& cb = b.channels[ch.score_index];
                        double s = 0.0;
                        for (std::uint32_t k = 0; k < ca.dim; ++k)
                            s += ca.values[static_cast<std::size_t>(ta.frame) * ca.dim + k] *
                                 cb.values[static_cast<std::size_t>(tb.frame) * cb.dim + k];
                        base += ch.weight * s;
                    }
                }
                base += cfg.beta2 * time_k(ta.f_frame, tb.f_frame, cfg.frame_grid);
                base += cfg.beta3 * time_k(ta.f_pos, tb.f_pos, cfg.pos_grid);
                base += cfg.beta4 * time_k(ta.f_len, tb.f_len, cfg.len_grid);
                total += detail::ipow(base, cfg.order);
            }
        }
    }
    return total / (static_cast<double>(sa.size()) * static_cast<double>(sb.size()));
}

inline Descriptor sck_plus_descriptor(const SkeletonSequence& s, const SckPlusConfig& cfg) {
    validate(cfg);
    Descriptor d;
    d.kind = KernelKind::sck_plus;
    d.joint_count = s.joints;
    d.label = s.label;
    d.subject = s.subject;
    for (std::uint32_t j = 0; j < s.joints; ++j) {
        const DenseTensor x = sck_plus_joint_tensor(s, j, cfg);
        const DenseTensor y = tensor_epn(x, cfg.epn);
        const auto coeffs = pack_supersym(symmetrize_supersym(y)).coefficients();
        d.values.insert(d.values.end(), coeffs.begin(), coeffs.end());
    }
    return d;
}

}  // namespace takd
