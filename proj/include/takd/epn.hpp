#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "takd/error.hpp"
#include "takd/tensor.hpp"

namespace takd {

enum class EpnMode { none, slice, hosvd };
enum class SpectralFn { gamma, maxexp };

/// Eigenvalue power normalisation settings. `gamma` drives the spectral
/// power (or the MaxExp approximation target), `gamma_star` is the final
/// element-wise power after reassembly in hosvd mode, `eta` the MaxExp
/// exponent offset.
struct EpnConfig {
    EpnMode mode = EpnMode::none;
    SpectralFn fn = SpectralFn::gamma;
    double gamma = 0.36;
    double gamma_star = 1.0;
    double eta = 0.0;
};

/// Peak co-occurrence value of an order-r projection of a unit vector onto
/// itself: (1/sqrt(r))^r.
inline double detector_kappa(int r) {
    if (r < 1) throw config_error("detector_kappa: r must be >= 1");
    return std::pow(1.0 / std::sqrt(static_cast<double>(r)), r);
}

/// Burst detector: sgn(e) * (1 - (1 - min(|e|/kappa, 1))^(n + eta)) with
/// kappa = (1/sqrt(r))^r. Behaves like sgn(e) |e/kappa|^gamma for a matched
/// gamma, saturating at 1.
inline double detector_score(double e, int r, double n, double eta = 0.0) {
    const double kappa = detector_kappa(r);
    const double a = std::min(std::abs(e) / kappa, 1.0);
    const double v = 1.0 - std::pow(1.0 - a, n + eta);
    return e < 0.0 ? -v : v;
}

/// sgn(e) |e|^gamma applied element-wise.
inline DenseTensor spectral_apply(const DenseTensor& x, const EpnConfig& cfg, double kappa = 1.0,
                                  double n_trials = 1.0) {
    if (!(cfg.gamma > 0.0) || cfg.gamma > 1.0) throw config_error("spectral_apply: gamma must be in (0, 1]");
    DenseTensor out = x;
    if (cfg.fn == SpectralFn::gamma) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double e = out[i];
            const double v = std::pow(std::abs(e), cfg.gamma);
            out[i] = e < 0.0 ? -v : v;
        }
    } else {
        if (!(kappa > 0.0)) throw config_error("spectral_apply: kappa must be positive");
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double e = out[i];
            const double a = std::min(std::abs(e) / kappa, 1.0);
            const double v = 1.0 - std::pow(1.0 - a, n_trials + cfg.eta);
            out[i] = e < 0.0 ? -v : v;
        }
    }
    return out;
}

namespace detail {

inline Eigen::MatrixXd to_matrix(const DenseTensor& m) {
    return Eigen::Map<const Eigen::MatrixXd>(m.data(), static_cast<Eigen::Index>(m.dim(0)),
                                             static_cast<Eigen::Index>(m.dim(1)));
}

}  // namespace detail

/// Symmetric PSD matrix power via eigendecomposition. Eigenvalues below
/// -tol * max(1, lambda_max) raise numeric_error; small negatives are
/// clamped to zero.
inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& m, double gamma, double psd_tol = 1e-8) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw numeric_error("matrix_power: eigendecomposition failed");
    Eigen::VectorXd ev = eig.eigenvalues();
    const double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -psd_tol * top) throw numeric_error("matrix_power: matrix is not PSD");
        ev[i] = ev[i] > 0.0 ? std::pow(ev[i], gamma) : 0.0;
    }
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

/// Slice-wise power normalisation: raises each mode-3 slice (a symmetric PSD
/// matrix) to the gamma-th spectral power. Order-2 input is treated as a
/// single slice.
inline DenseTensor slice_epn(const DenseTensor& x, double gamma, double psd_tol = 1e-8) {
    if (!(gamma > 0.0) || gamma > 1.0) throw config_error("slice_epn: gamma must be in (0, 1]");
    if (x.order() != 2 && x.order() != 3) throw config_error("slice_epn: order must be 2 or 3");
    if (x.dim(0) != x.dim(1)) throw config_error("slice_epn: slices must be square");
    const std::size_t d = x.dim(0);
    const std::size_t n_slices = x.order() == 3 ? x.dim(2) : 1;
    DenseTensor out = x;
    for (std::size_t s = 0; s < n_slices; ++s) {
        Eigen::Map<const Eigen::MatrixXd> slice(x.data() + s * d * d, static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
        const double asym = (slice - slice.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-10 * std::max(1.0, slice.cwiseAbs().maxCoeff()))
            throw numeric_error("slice_epn: slice is not symmetric");
        const Eigen::MatrixXd sym = 0.5 * (slice + slice.transpose());
        Eigen::MatrixXd powered = matrix_power(sym, gamma, psd_tol);
        Eigen::Map<Eigen::MatrixXd>(out.data() + s * d * d, static_cast<Eigen::Index>(d),
                                    static_cast<Eigen::Index>(d)) = powered;
    }
    return out;
}

/// Higher-order SVD: factors[k] holds the left singular vectors of the
/// mode-k unfolding (row-major d_k x d_k), core = X x_1 A1' x_2 A2' ...
struct HosvdResult {
    DenseTensor core;
    std::vector<std::vector<double>> factors;
};

inline HosvdResult hosvd(const DenseTensor& x) {
    HosvdResult res;
    res.factors.reserve(x.order());
    DenseTensor core = x;
    for (std::size_t k = 0; k < x.order(); ++k) {
        const DenseTensor unf = unfold(x, k);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::to_matrix(unf), Eigen::ComputeFullU);
        if (svd.info() != Eigen::Success) throw numeric_error("hosvd: SVD failed");
        const Eigen::MatrixXd u = svd.matrixU();
        const std::size_t d = x.dim(k);
        std::vector<double> ut(d * d);
        std::vector<double> a(d * d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                a[i * d + j] = u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                ut[i * d + j] = u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
            }
        core = mode_product(core, ut, d, d, k);
        res.factors.push_back(std::move(a));
    }
    res.core = std::move(core);
    return res;
}

/// Rebuilds X from a (possibly modified) core: core x_1 A1 x_2 A2 ...
inline DenseTensor hosvd_reconstruct(const DenseTensor& core, const std::vector<std::vector<double>>& factors) {
    DenseTensor x = core;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        const std::size_t d = x.dim(k);
        if (factors[k].size() != d * d) throw config_error("hosvd_reconstruct: factor shape mismatch");
        x = mode_product(x, factors[k], d, d, k);
    }
    return x;
}

/// Full tensor power normalisation.
///  - none:  identity.
///  - slice: slice-wise spectral power (super-symmetric PSD slices).
///  - hosvd: spectral function on the core, reassemble, then element-wise
///           sgn(v) |v|^gamma_star. `agg_count` feeds the MaxExp exponent.
inline DenseTensor tensor_epn(const DenseTensor& x, const EpnConfig& cfg, double agg_count = 1.0,
                              double maxexp_kappa = 1.0) {
    switch (cfg.mode) {
        case EpnMode::none:
            return x;
        case EpnMode::slice:
            return slice_epn(x, cfg.gamma);
        case EpnMode::hosvd: {
            HosvdResult h = hosvd(x);
            DenseTensor core = spectral_apply(h.core, cfg, maxexp_kappa, agg_count);
            DenseTensor out = hosvd_reconstruct(core, h.factors);
            if (cfg.gamma_star != 1.0) {
                if (!(cfg.gamma_star > 0.0) || cfg.gamma_star > 1.0)
                    throw config_error("tensor_epn: gamma_star must be in (0, 1]");
                for (std::size_t i = 0; i < out.size(); ++i) {
                    const double v = std::pow(std::abs(out[i]), cfg.gamma_star);
                    out[i] = out[i] < 0.0 ? -v : v;
                }
            }
            return out;
        }
    }
    throw config_error("tensor_epn: unknown mode");
}

/// Distance between two tensors after spectral whitening: the Frobenius norm
/// of the difference of their power-normalised forms.
inline double tensor_power_distance(const DenseTensor& a, const DenseTensor& b, const EpnConfig& cfg) {
    DenseTensor da = tensor_epn(a, cfg);
    const DenseTensor db = tensor_epn(b, cfg);
    da.add_scaled(db, -1.0);
    return da.frobenius();
}

/// Smallest eigenvalue of a symmetric matrix given as an order-2 tensor.
inline double sym_min_eig(const DenseTensor& m) {
    if (m.order() != 2 || m.dim(0) != m.dim(1)) throw config_error("sym_min_eig: need a square matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(detail::to_matrix(m));
    if (eig.info() != Eigen::Success) throw numeric_error("sym_min_eig: eigendecomposition failed");
    return eig.eigenvalues().minCoeff();
}

}  // namespace takd
