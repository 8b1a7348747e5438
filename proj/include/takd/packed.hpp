#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "takd/error.hpp"
#include "takd/tensor.hpp"

namespace takd {

/// Number of coefficients of a super-symmetric order-r tensor with side d:
/// C(d + r - 1, r).
inline std::uint64_t packed_len(std::uint64_t d, std::uint64_t r) {
    if (d == 0 || r == 0) throw config_error("packed_len: d and r must be >= 1");
    std::uint64_t num = 1;
    for (std::uint64_t k = 1; k <= r; ++k) num = num * (d + r - k) / k;
    return num;
}

namespace detail {

/// Visits all non-decreasing index tuples (i1 <= ... <= ir) over [0, d) in
/// lexicographic order. fn(tuple, multiplicity) where multiplicity is the
/// number of distinct permutations of the tuple.
template <typename Fn>
void for_each_multiset(std::size_t d, std::size_t r, Fn&& fn) {
    std::vector<std::size_t> idx(r, 0);
    std::vector<double> fact(r + 1, 1.0);
    for (std::size_t k = 1; k <= r; ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
    while (true) {
        double denom = 1.0;
        std::size_t run = 1;
        for (std::size_t k = 1; k < r; ++k) {
            if (idx[k] == idx[k - 1]) {
                ++run;
            } else {
                denom *= fact[run];
                run = 1;
            }
        }
        denom *= fact[run];
        fn(idx, fact[r] / denom);
        std::size_t k = r;
        while (k > 0 && idx[k - 1] == d - 1) --k;
        if (k == 0) break;
        const std::size_t v = idx[k - 1] + 1;
        for (std::size_t j = k - 1; j < r; ++j) idx[j] = v;
    }
}

template <typename Fn>
void for_each_permutation(std::vector<std::size_t> idx, Fn&& fn) {
    std::sort(idx.begin(), idx.end());
    do {
        fn(idx);
    } while (std::next_permutation(idx.begin(), idx.end()));
}

}  // namespace detail

/// Packed storage for a super-symmetric tensor: one raw entry per index
/// multiset, enumerated lexicographically, plus the permutation multiplicity.
/// coefficients() scales each entry by sqrt(multiplicity) so that a plain
/// Euclidean dot of two coefficient vectors equals the full tensor inner
/// product.
class PackedSymmetric {
  public:
    PackedSymmetric() = default;

    PackedSymmetric(std::size_t d, std::size_t r, std::vector<double> raw) : d_(d), r_(r), raw_(std::move(raw)) {
        if (raw_.size() != packed_len(d, r)) throw config_error("PackedSymmetric: wrong entry count");
    }

    std::size_t side() const { return d_; }
    std::size_t order() const { return r_; }
    const std::vector<double>& raw() const { return raw_; }

    /// Multiplicity-weighted coefficients (raw * sqrt(multiplicity)).
    std::vector<double> coefficients() const {
        std::vector<double> out;
        out.reserve(raw_.size());
        std::size_t p = 0;
        detail::for_each_multiset(d_, r_, [&](const std::vector<std::size_t>&, double mult) {
            out.push_back(raw_[p++] * std::sqrt(mult));
        });
        return out;
    }

    double dot(const PackedSymmetric& other) const {
        if (d_ != other.d_ || r_ != other.r_) throw config_error("PackedSymmetric: dot shape mismatch");
        double s = 0.0;
        std::size_t p = 0;
        detail::for_each_multiset(d_, r_, [&](const std::vector<std::size_t>&, double mult) {
            s += raw_[p] * other.raw_[p] * mult;
            ++p;
        });
        return s;
    }

  private:
    std::size_t d_ = 0;
    std::size_t r_ = 0;
    std::vector<double> raw_;
};

/// Packs a super-symmetric tensor, validating symmetry: every permutation of
/// every index multiset must match the canonical entry within
/// tol * max(1, max|X|).
inline PackedSymmetric pack_supersym(const DenseTensor& x, double tol = 1e-10) {
    const std::size_t r = x.order();
    const std::size_t d = x.dim(0);
    for (std::size_t k = 1; k < r; ++k)
        if (x.dim(k) != d) throw config_error("pack_supersym: tensor is not cubical");
    const double bound = tol * std::max(1.0, x.max_abs());
    std::vector<double> raw;
    raw.reserve(packed_len(d, r));
    detail::for_each_multiset(d, r, [&](const std::vector<std::size_t>& idx, double) {
        const double v = x.at(idx);
        detail::for_each_permutation(idx, [&](const std::vector<std::size_t>& p) {
            if (std::abs(x.at(p) - v) > bound) throw numeric_error("pack_supersym: tensor is not super-symmetric");
        });
        raw.push_back(v);
    });
    return PackedSymmetric(d, r, std::move(raw));
}

/// Accumulates sum_s w_s * v_s^(outer r) in packed multiset storage: one
/// update per distinct coefficient instead of d^r dense writes per sample.
/// The expanded tensor is exactly super-symmetric (permuted entries are
/// bitwise equal).
class SymmetricAccumulator {
  public:
    SymmetricAccumulator(std::size_t d, std::size_t r)
        : d_(d), r_(r), raw_(packed_len(d, r), 0.0) {
        flat_.reserve(raw_.size() * r);
        detail::for_each_multiset(d, r, [&](const std::vector<std::size_t>& idx, double) {
            flat_.insert(flat_.end(), idx.begin(), idx.end());
        });
    }

    void add(std::span<const double> v, double w) {
        if (v.size() != d_) throw config_error("SymmetricAccumulator: dimension mismatch");
        const std::size_t* ix = flat_.data();
        if (r_ == 3) {
            for (auto& slot : raw_) {
                slot += w * v[ix[0]] * v[ix[1]] * v[ix[2]];
                ix += 3;
            }
        } else if (r_ == 2) {
            for (auto& slot : raw_) {
                slot += w * v[ix[0]] * v[ix[1]];
                ix += 2;
            }
        } else {
            for (auto& slot : raw_) {
                double p = w;
                for (std::size_t t = 0; t < r_; ++t) p *= v[ix[t]];
                slot += p;
                ix += r_;
            }
        }
    }

    PackedSymmetric packed() const { return {d_, r_, raw_}; }

  private:
    std::size_t d_ = 0;
    std::size_t r_ = 0;
    std::vector<double> raw_;
    std::vector<std::size_t> flat_;
};

/// Expands packed storage back to a full super-symmetric tensor.
inline DenseTensor unpack_supersym(const PackedSymmetric& p) {
    DenseTensor x(std::vector<std::size_t>(p.order(), p.side()));
    std::size_t k = 0;
    detail::for_each_multiset(p.side(), p.order(), [&](const std::vector<std::size_t>& idx, double) {
        const double v = p.raw()[k++];
        detail::for_each_permutation(idx, [&](const std::vector<std::size_t>& q) { x.at(q) = v; });
    });
    return x;
}

/// Projects a cubical tensor onto the super-symmetric subspace: each entry
/// becomes the mean over all permutations of its index tuple, so permuted
/// entries come out bitwise equal.
inline DenseTensor symmetrize_supersym(const DenseTensor& x) {
    const std::size_t r = x.order();
    const std::size_t d = x.dim(0);
    for (std::size_t k = 1; k < r; ++k)
        if (x.dim(k) != d) throw config_error("symmetrize_supersym: tensor is not cubical");
    DenseTensor out(x.dims());
    detail::for_each_multiset(d, r, [&](const std::vector<std::size_t>& idx, double) {
        double sum = 0.0;
        std::size_t n = 0;
        detail::for_each_permutation(idx, [&](const std::vector<std::size_t>& p) {
            sum += x.at(p);
            ++n;
        });
        const double mean = sum / static_cast<double>(n);
        detail::for_each_permutation(idx, [&](const std::vector<std::size_t>& p) { out.at(p) = mean; });
    });
    return out;
}

}  // namespace takd
