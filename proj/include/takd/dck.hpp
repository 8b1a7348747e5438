#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "takd/dataio.hpp"
#include "takd/epn.hpp"
#include "takd/error.hpp"
#include "takd/feature_map.hpp"
#include "takd/sck.hpp"
#include "takd/tensor.hpp"

namespace takd {

/// Dynamics compatibility kernel parameters. Displacements between two
/// joints are divided by disp_scale to land on the [-1,1] pivot grid; sigma4
/// damps within-sequence frame-pair distance (raw index units). An empty
/// joint_subset means all joints.
struct DckConfig {
    PivotGrid disp_grid;
    PivotGrid time_grid;
    double sigma4 = 1.0;
    std::vector<std::uint32_t> joint_subset;
    double disp_scale = 2.0;
    bool use_velocity = false;
    bool half_pairs = false;
    EpnConfig epn;
};

inline void validate(const DckConfig& cfg) {
    if (!(cfg.sigma4 > 0.0)) throw config_error("dck: sigma4 must be positive");
    if (!(cfg.disp_scale > 0.0)) throw config_error("dck: disp_scale must be positive");
    if (!cfg.joint_subset.empty()) {
        if (cfg.joint_subset.size() < 2) throw config_error("dck: joint subset needs at least 2 joints");
        for (std::size_t a = 0; a < cfg.joint_subset.size(); ++a)
            for (std::size_t b = a + 1; b < cfg.joint_subset.size(); ++b)
                if (cfg.joint_subset[a] == cfg.joint_subset[b])
                    throw config_error("dck: joint subset has duplicates");
    }
}

inline DckConfig make_dck_config(int z2 = 5, int z3 = 6, double sigma2 = 0.6, double sigma3 = 0.5,
                                 double sigma4 = 1.0) {
    DckConfig cfg;
    cfg.disp_grid = make_grid(z2, -1.0, 1.0, sigma2);
    cfg.time_grid = make_grid(z3, 0.0, 1.0, sigma3);
    cfg.sigma4 = sigma4;
    cfg.epn.mode = EpnMode::hosvd;
    cfg.epn.gamma = 0.85;
    validate(cfg);
    return cfg;
}

/// Displacement per unit of elapsed frames; equals the plain displacement
/// for simultaneous samples.
inline std::array<double, 3> velocity(const std::array<double, 3>& x, const std::array<double, 3>& xp,
                                      std::uint32_t s, std::uint32_t sp) {
    const double gap = std::max(1.0, std::abs(static_cast<double>(sp) - static_cast<double>(s)));
    return {(x[0] - xp[0]) / gap, (x[1] - xp[1]) / gap, (x[2] - xp[2]) / gap};
}

namespace detail {

inline std::vector<std::uint32_t> dck_subset(const DckConfig& cfg, const SkeletonSequence& s) {
    std::vector<std::uint32_t> subset = cfg.joint_subset;
    if (subset.empty()) {
        subset.resize(s.joints);
        for (std::uint32_t j = 0; j < s.joints; ++j) subset[j] = j;
    }
    if (subset.size() < 2) throw config_error("dck: need at least 2 joints");
    for (auto j : subset)
        if (j >= s.joints) throw config_error("dck: joint subset index out of range");
    return subset;
}

inline std::array<double, 3> dck_disp(const SkeletonSequence& s, std::uint32_t i, std::uint32_t ip,
                                      std::uint32_t f, std::uint32_t fp, const DckConfig& cfg) {
    const auto x = s.at(f, i);
    const auto xp = s.at(fp, ip);
    auto d = cfg.use_velocity ? velocity(x, xp, f, fp)
                              : std::array<double, 3>{x[0] - xp[0], x[1] - xp[1], x[2] - xp[2]};
    for (auto& v : d) v /= cfg.disp_scale;
    return d;
}

inline std::size_t dck_pair_count(std::uint32_t frames, bool half) {
    const std::size_t p = static_cast<std::size_t>(frames) * (frames - 1);
    return half ? p / 2 : p;
}

}  // namespace detail

/// Aggregated dynamics tensor for the ordered joint pair (i, ip): damped sum
/// over distinct frame pairs of displacement-embedding x time-embedding x
/// time-embedding, scaled by 1/(J * sqrt(P)).
inline DenseTensor dck_pair_tensor(const SkeletonSequence& s, std::uint32_t i, std::uint32_t ip,
                                   const DckConfig& cfg) {
    validate(cfg);
    if (i == ip) throw config_error("dck_pair_tensor: joint pair must be distinct");
    if (i >= s.joints || ip >= s.joints) throw config_error("dck_pair_tensor: joint index out of range");
    if (s.frames < 2) throw config_error("dck_pair_tensor: need at least 2 frames");
    const std::size_t j_eff = detail::dck_subset(cfg, s).size();
    const std::size_t pairs = detail::dck_pair_count(s.frames, cfg.half_pairs);
    const double scale = 1.0 / (static_cast<double>(j_eff) * std::sqrt(static_cast<double>(pairs)));

    DenseTensor acc({3 * cfg.disp_grid.size(), cfg.time_grid.size(), cfg.time_grid.size()});
    std::vector<std::vector<double>> z(s.frames);
    for (std::uint32_t f = 0; f < s.frames; ++f)
        z[f] = embed_scalar(time_norm(f, s.frames), cfg.time_grid);
    for (std::uint32_t f = 0; f < s.frames; ++f) {
        for (std::uint32_t fp = 0; fp < s.frames; ++fp) {
            if (f == fp || (cfg.half_pairs && f <= fp)) continue;
            const double damp = rbf(static_cast<double>(f), static_cast<double>(fp), cfg.sigma4);
            const auto d = detail::dck_disp(s, i, ip, f, fp, cfg);
            const auto phid = phi_vec(std::span<const double>(d.data(), 3), cfg.disp_grid);
            const std::array<std::span<const double>, 3> vs = {std::span<const double>(phid),
                                                               std::span<const double>(z[f]),
                                                               std::span<const double>(z[fp])};
            accumulate_outer(acc, vs, damp * scale);
        }
    }
    return acc;
}

/// Exact dynamics kernel: distinct joint pairs meet distinct frame pairs on
/// both sides; each sextuple contributes the displacement-difference kernel,
/// two temporal alignment kernels and the two within-side damping factors,
/// normalized by J^2 * sqrt(P_A * P_B). With linearized_subkernels the
/// displacement and temporal Gaussians become embedding dot products.
inline double exact_dck(const SkeletonSequence& a, const SkeletonSequence& b, const DckConfig& cfg,
                        bool linearized_subkernels = false) {
    validate(cfg);
    if (a.joints != b.joints) throw config_error("exact_dck: joint count mismatch");
    if (a.frames < 2 || b.frames < 2) throw config_error("exact_dck: need at least 2 frames");
    const auto subset = detail::dck_subset(cfg, a);
    const double j_eff = static_cast<double>(subset.size());
    const double pa = static_cast<double>(detail::dck_pair_count(a.frames, cfg.half_pairs));
    const double pb = static_cast<double>(detail::dck_pair_count(b.frames, cfg.half_pairs));
    const double lambda = j_eff * j_eff * std::sqrt(pa * pb);

    std::vector<double> ta(a.frames), tb(b.frames);
    for (std::uint32_t f = 0; f < a.frames; ++f) ta[f] = time_norm(f, a.frames);
    for (std::uint32_t f = 0; f < b.frames; ++f) tb[f] = time_norm(f, b.frames);
    std::vector<std::vector<double>> za(a.frames), zb(b.frames);
    if (linearized_subkernels) {
        for (std::uint32_t f = 0; f < a.frames; ++f) za[f] = embed_scalar(ta[f], cfg.time_grid);
        for (std::uint32_t f = 0; f < b.frames; ++f) zb[f] = embed_scalar(tb[f], cfg.time_grid);
    }

    double total = 0.0;
    for (std::uint32_t qi = 0; qi < subset.size(); ++qi) {
        for (std::uint32_t qip = 0; qip < subset.size(); ++qip) {
            if (qi == qip) continue;
            const std::uint32_t i = subset[qi], ip = subset[qip];
            for (std::uint32_t s = 0; s < a.frames; ++s) {
                for (std::uint32_t sp = 0; sp < a.frames; ++sp) {
                    if (s == sp || (cfg.half_pairs && s <= sp)) continue;
                    const auto da = detail::dck_disp(a, i, ip, s, sp, cfg);
                    const double damp_a = rbf(static_cast<double>(s), static_cast<double>(sp), cfg.sigma4);
                    const auto phia = linearized_subkernels
                                          ? phi_vec(std::span<const double>(da.data(), 3), cfg.disp_grid)
                                          : std::vector<double>{};
                    for (std::uint32_t t = 0; t < b.frames; ++t) {
                        for (std::uint32_t tp = 0; tp < b.frames; ++tp) {
                            if (t == tp || (cfg.half_pairs && t <= tp)) continue;
                            const auto db = detail::dck_disp(b, i, ip, t, tp, cfg);
                            const double damp_b =
                                rbf(static_cast<double>(t), static_cast<double>(tp), cfg.sigma4);
                            double spatial, time1, time2;
                            if (linearized_subkernels) {
                                const auto phib =
                                    phi_vec(std::span<const double>(db.data(), 3), cfg.disp_grid);
                                spatial = detail::dot(phia, phib);
                                time1 = detail::dot(za[s], zb[t]);
                                time2 = detail::dot(za[sp], zb[tp]);
                            } else {
                                std::array<double, 3> diff = {da[0] - db[0], da[1] - db[1], da[2] - db[2]};
                                std::array<double, 3> zero{};
                                spatial = rbf_sum(std::span<const double>(diff.data(), 3),
                                                  std::span<const double>(zero.data(), 3),
                                                  cfg.disp_grid.sigma);
                                time1 = rbf(ta[s], tb[t], cfg.time_grid.sigma);
                                time2 = rbf(ta[sp], tb[tp], cfg.time_grid.sigma);
                            }
                            total += spatial * time1 * time2 * damp_a * damp_b;
                        }
                    }
                }
            }
        }
    }
    return total / lambda;
}

/// Per unordered joint pair of the subset: dynamics tensor, spectral
/// normalization, flattened and concatenated, with a global sqrt(2) factor
/// standing in for the mirrored ordered pairs.
inline Descriptor dck_descriptor(const SkeletonSequence& s, const DckConfig& cfg) {
    validate(cfg);
    const auto subset = detail::dck_subset(cfg, s);
    Descriptor d;
    d.kind = KernelKind::dck;
    d.joint_count = s.joints;
    d.label = s.label;
    d.subject = s.subject;
    const double root2 = std::sqrt(2.0);
    for (std::size_t p = 0; p < subset.size(); ++p) {
        for (std::size_t q = p + 1; q < subset.size(); ++q) {
            const DenseTensor x = dck_pair_tensor(s, subset[q], subset[p], cfg);
            const DenseTensor y = tensor_epn(x, cfg.epn);
            for (std::size_t k = 0; k < y.size(); ++k) d.values.push_back(root2 * y[k]);
        }
    }
    return d;
}

/// Subsequence-aggregated dynamics kernel: windows of length tau at strided
/// start positions, velocity features inside each window, and a fourth
/// tensor mode embedding the normalized window position.
struct DckPlusConfig {
    DckConfig base;
    std::uint32_t tau = 4;
    std::uint32_t stride = 1;
    PivotGrid pos_grid;
    EpnConfig epn;
};

inline void validate(const DckPlusConfig& cfg) {
    validate(cfg.base);
    if (cfg.tau < 2) throw config_error("dck_plus: tau must be >= 2");
    if (cfg.stride < 1) throw config_error("dck_plus: stride must be >= 1");
}

inline DckPlusConfig make_dck_plus_config(int z2 = 5, int z3 = 6, int z6 = 4, double sigma2 = 0.6,
                                          double sigma3 = 0.5, double sigma4 = 1.0,
                                          std::uint32_t tau = 4, std::uint32_t stride = 1) {
    DckPlusConfig cfg;
    cfg.base = make_dck_config(z2, z3, sigma2, sigma3, sigma4);
    cfg.base.use_velocity = true;
    cfg.base.epn.mode = EpnMode::none;
    cfg.tau = tau;
    cfg.stride = stride;
    cfg.pos_grid = make_grid(z6, 0.0, 1.0, 0.5);
    cfg.epn.mode = EpnMode::hosvd;
    cfg.epn.gamma = 0.85;
    validate(cfg);
    return cfg;
}

/// Copies the tau-frame window starting at u.
inline SkeletonSequence subsequence_window(const SkeletonSequence& s, std::uint32_t u, std::uint32_t tau) {
    if (u + tau > s.frames) throw config_error("subsequence_window: window out of range");
    SkeletonSequence out;
    out.label = s.label;
    out.subject = s.subject;
    out.joints = s.joints;
    out.frames = tau;
    const std::size_t stride3 = static_cast<std::size_t>(s.joints) * 3;
    out.coords.assign(s.coords.begin() + static_cast<std::ptrdiff_t>(u * stride3),
                      s.coords.begin() + static_cast<std::ptrdiff_t>((u + tau) * stride3));
    for (const auto& ch : s.channels) {
        Channel c;
        c.dim = ch.dim;
        c.values.assign(ch.values.begin() + static_cast<std::ptrdiff_t>(u) * ch.dim,
                        ch.values.begin() + static_cast<std::ptrdiff_t>(u + tau) * ch.dim);
        out.channels.push_back(std::move(c));
    }
    return out;
}

/// Exact window-aggregated dynamics kernel: every window position of A
/// meets every one of B through the window-level kernel times the
/// window-position kernel, averaged over both position counts.
inline double exact_dck_plus(const SkeletonSequence& a, const SkeletonSequence& b,
                             const DckPlusConfig& cfg, bool linearized_subkernels = false) {
    validate(cfg);
    const auto ua = subsequence_starts(a.frames, cfg.tau, cfg.stride);
    const auto ub = subsequence_starts(b.frames, cfg.tau, cfg.stride);
    double total = 0.0;
    for (std::uint32_t u : ua) {
        const double fu = span_norm(u, ua.front(), ua.back());
        const auto wa = subsequence_window(a, u, cfg.tau);
        for (std::uint32_t up : ub) {
            const double fup = span_norm(up, ub.front(), ub.back());
            const auto wb = subsequence_window(b, up, cfg.tau);
            const double kd = exact_dck(wa, wb, cfg.base, linearized_subkernels);
            const double kp = linearized_subkernels
                                  ? detail::dot(embed_scalar(fu, cfg.pos_grid),
                                                embed_scalar(fup, cfg.pos_grid))
                                  : rbf(fu, fup, cfg.pos_grid.sigma);
            total += kd * kp;
        }
    }
    return total / (static_cast<double>(ua.size()) * static_cast<double>(ub.size()));
}

/// Order-4 pair tensor: mean over window positions of the window's dynamics
/// tensor outer the embedded window position.
inline DenseTensor dck_plus_pair_tensor(const SkeletonSequence& s, std::uint32_t i, std::uint32_t ip,
                                        const DckPlusConfig& cfg) {
    validate(cfg);
    const auto starts = subsequence_starts(s.frames, cfg.tau, cfg.stride);
    const std::size_t block = 3 * cfg.base.disp_grid.size() * cfg.base.time_grid.size() *
                              cfg.base.time_grid.size();
    DenseTensor acc({3 * cfg.base.disp_grid.size(), cfg.base.time_grid.size(),
                     cfg.base.time_grid.size(), cfg.pos_grid.size()});
    const double w = 1.0 / static_cast<double>(starts.size());
    for (std::uint32_t u : starts) {
        const auto win = subsequence_window(s, u, cfg.tau);
        const DenseTensor x = dck_pair_tensor(win, i, ip, cfg.base);
        const auto zp = embed_scalar(span_norm(u, starts.front(), starts.back()), cfg.pos_grid);
        for (std::size_t k = 0; k < zp.size(); ++k) {
            const double wk = w * zp[k];
            for (std::size_t f = 0; f < block; ++f) acc[k * block + f] += wk * x[f];
        }
    }
    return acc;
}

inline Descriptor dck_plus_descriptor(const SkeletonSequence& s, const DckPlusConfig& cfg) {
    validate(cfg);
    const auto subset = detail::dck_subset(cfg.base, s);
    Descriptor d;
    d.kind = KernelKind::dck_plus;
    d.joint_count = s.joints;
    d.label = s.label;
    d.subject = s.subject;
    const double root2 = std::sqrt(2.0);
    for (std::size_t p = 0; p < subset.size(); ++p) {
        for (std::size_t q = p + 1; q < subset.size(); ++q) {
            const DenseTensor x = dck_plus_pair_tensor(s, subset[q], subset[p], cfg);
            const DenseTensor y = tensor_epn(x, cfg.epn);
            for (std::size_t k = 0; k < y.size(); ++k) d.values.push_back(root2 * y[k]);
        }
    }
    return d;
}

}  // namespace takd
