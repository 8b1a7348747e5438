#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "takd/error.hpp"

namespace takd {

/// Dense tensor of arbitrary order with the first index fastest in memory
/// (column-major generalisation). This is the one layout used everywhere;
/// unfoldings and mode products below are defined relative to it.
class DenseTensor {
  public:
    DenseTensor() = default;

    explicit DenseTensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw config_error("tensor: order must be >= 1");
        std::size_t n = 1;
        for (std::size_t d : dims_) {
            if (d == 0) throw config_error("tensor: zero dimension");
            n *= d;
        }
        v_.assign(n, 0.0);
    }

    std::size_t order() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(std::size_t k) const { return dims_[k]; }
    std::size_t size() const { return v_.size(); }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    double& operator[](std::size_t flat) { return v_[flat]; }
    double operator[](std::size_t flat) const { return v_[flat]; }

    /// Flat offset of a multi-index (first index fastest).
    std::size_t offset(std::span<const std::size_t> idx) const {
        std::size_t off = 0, stride = 1;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            off += idx[k] * stride;
            stride *= dims_[k];
        }
        return off;
    }

    double at(std::span<const std::size_t> idx) const { return v_[offset(idx)]; }
    double& at(std::span<const std::size_t> idx) { return v_[offset(idx)]; }

    void add_scaled(const DenseTensor& other, double w) {
        if (dims_ != other.dims_) throw config_error("tensor: dims mismatch in add_scaled");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += w * other.v_[i];
    }

    void scale(double w) {
        for (double& x : v_) x *= w;
    }

    double frobenius() const {
        double s = 0.0;
        for (double x : v_) s += x * x;
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

  private:
    std::vector<std::size_t> dims_;
    std::vector<double> v_;
};

/// Outer product of the given vectors; order equals the number of vectors.
inline DenseTensor outer(std::span<const std::span<const double>> vs) {
    if (vs.empty()) throw config_error("outer: need at least one vector");
    std::vector<std::size_t> dims;
    dims.reserve(vs.size());
    for (const auto& v : vs) {
        if (v.empty()) throw config_error("outer: empty vector");
        dims.push_back(v.size());
    }
    DenseTensor out(dims);
    std::vector<std::size_t> idx(dims.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        double p = 1.0;
        for (std::size_t k = 0; k < vs.size(); ++k) p *= vs[k][idx[k]];
        out[flat] = p;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

inline DenseTensor outer(std::span<const double> a, std::span<const double> b) {
    const std::span<const double> vs[] = {a, b};
    return outer(vs);
}

inline DenseTensor outer(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
    const std::span<const double> vs[] = {a, b, c};
    return outer(vs);
}

/// acc += w * (v1 x v2 x ... x vr) without materialising the outer product.
inline void accumulate_outer(DenseTensor& acc, std::span<const std::span<const double>> vs, double w) {
    if (acc.order() != vs.size()) throw config_error("accumulate_outer: order mismatch");
    for (std::size_t k = 0; k < vs.size(); ++k)
        if (acc.dim(k) != vs[k].size()) throw config_error("accumulate_outer: dims mismatch");
    const std::size_t r = vs.size();
    std::vector<std::size_t> idx(r, 0);
    std::vector<double> partial(r + 1);
    partial[r] = w;
    for (std::size_t k = r; k-- > 0;) partial[k] = partial[k + 1] * vs[k][0];
    double* a = acc.data();
    const std::size_t n = acc.size();
    for (std::size_t flat = 0; flat < n; ++flat) {
        a[flat] += partial[0];
        for (std::size_t k = 0; k < r; ++k) {
            if (++idx[k] < vs[k].size()) {
                for (std::size_t j = k + 1; j-- > 0;) partial[j] = partial[j + 1] * vs[j][idx[j]];
                break;
            }
            idx[k] = 0;
        }
    }
}

/// acc += w * (v x v x ... x v), r copies.
inline void accumulate_power(DenseTensor& acc, std::span<const double> v, std::size_t r, double w) {
    std::vector<std::span<const double>> vs(r, v);
    accumulate_outer(acc, vs, w);
}

/// Inner (Frobenius) product; dims must match exactly.
inline double inner(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims()) throw config_error("inner: dims mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Mode-k unfolding as an order-2 tensor of shape dims[k] x (size/dims[k]).
/// Columns enumerate the remaining modes in ascending order, first listed
/// fastest; fold() below inverts it.
inline DenseTensor unfold(const DenseTensor& x, std::size_t mode) {
    if (mode >= x.order()) throw config_error("unfold: mode out of range");
    const std::size_t rows = x.dim(mode);
    const std::size_t cols = x.size() / rows;
    DenseTensor m(std::vector<std::size_t>{rows, cols});
    std::vector<std::size_t> idx(x.order(), 0);
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        std::size_t col = 0, stride = 1;
        for (std::size_t k = 0; k < x.order(); ++k) {
            if (k == mode) continue;
            col += idx[k] * stride;
            stride *= x.dim(k);
        }
        m[idx[mode] + rows * col] = x[flat];
        for (std::size_t k = 0; k < x.order(); ++k) {
            if (++idx[k] < x.dim(k)) break;
            idx[k] = 0;
        }
    }
    return m;
}

/// Inverse of unfold: rebuilds a tensor with the given dims from its mode-k
/// unfolding.
inline DenseTensor fold(const DenseTensor& m, std::size_t mode, const std::vector<std::size_t>& dims) {
    if (m.order() != 2) throw config_error("fold: input must be order 2");
    if (mode >= dims.size()) throw config_error("fold: mode out of range");
    DenseTensor x(dims);
    const std::size_t rows = x.dim(mode);
    if (m.dim(0) != rows || m.dim(1) != x.size() / rows) throw config_error("fold: shape mismatch");
    std::vector<std::size_t> idx(dims.size(), 0);
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        std::size_t col = 0, stride = 1;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (k == mode) continue;
            col += idx[k] * stride;
            stride *= dims[k];
        }
        x[flat] = m[idx[mode] + rows * col];
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
    return x;
}

/// Mode-k product Y = X x_k A with A of shape m x dims[k] given row-major as
/// a_rows x a_cols; contracts dims[k] against the columns of A, so
/// unfold(Y, k) == A * unfold(X, k).
inline DenseTensor mode_product(const DenseTensor& x, std::span<const double> a, std::size_t a_rows,
                                std::size_t a_cols, std::size_t mode) {
    if (mode >= x.order()) throw config_error("mode_product: mode out of range");
    if (a_cols != x.dim(mode)) throw config_error("mode_product: columns(A) must equal dims(X)[mode]");
    if (a.size() != a_rows * a_cols) throw config_error("mode_product: matrix size mismatch");
    DenseTensor xm = unfold(x, mode);
    const std::size_t cols = xm.dim(1);
    DenseTensor ym(std::vector<std::size_t>{a_rows, cols});
    for (std::size_t c = 0; c < cols; ++c) {
        const double* xcol = xm.data() + a_cols * c;
        double* ycol = ym.data() + a_rows * c;
        for (std::size_t j = 0; j < a_cols; ++j) {
            const double xv = xcol[j];
            if (xv == 0.0) continue;
            const double* arow = a.data() + j;
            for (std::size_t i = 0; i < a_rows; ++i) ycol[i] += arow[i * a_cols] * xv;
        }
    }
    std::vector<std::size_t> dims = x.dims();
    dims[mode] = a_rows;
    return fold(ym, mode, dims);
}

/// Concatenates tensors along `mode`; all other dims must agree.
inline DenseTensor concat_mode(std::span<const DenseTensor> parts, std::size_t mode) {
    if (parts.empty()) throw config_error("concat_mode: empty list");
    const std::size_t order = parts[0].order();
    if (mode >= order) throw config_error("concat_mode: mode out of range");
    std::vector<std::size_t> dims = parts[0].dims();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.order() != order) throw config_error("concat_mode: order mismatch");
        for (std::size_t k = 0; k < order; ++k)
            if (k != mode && p.dim(k) != dims[k]) throw config_error("concat_mode: dims mismatch");
        total += p.dim(mode);
    }
    dims[mode] = total;
    DenseTensor out(dims);
    std::size_t base = 0;
    std::vector<std::size_t> idx(order, 0);
    std::vector<std::size_t> oidx(order, 0);
    for (const auto& p : parts) {
        std::fill(idx.begin(), idx.end(), 0);
        for (std::size_t flat = 0; flat < p.size(); ++flat) {
            oidx = idx;
            oidx[mode] += base;
            out.at(oidx) = p[flat];
            for (std::size_t k = 0; k < order; ++k) {
                if (++idx[k] < p.dim(k)) break;
                idx[k] = 0;
            }
        }
        base += p.dim(mode);
    }
    return out;
}

}  // namespace takd
