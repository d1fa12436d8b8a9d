#pragma once

// Exact pointwise exterior algebra over an oriented inner-product space R^n.
// Coefficients live on the lexicographically ordered basis of k-element
// subsets of {0..n-1}; that basis is orthonormal by convention.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace phodge {

inline constexpr int kMaxExteriorDimension = 12;

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 0; i < std::min(k, n - k); ++i) r = r * (n - i) / (i + 1);
    return r;
}

namespace detail {

// Per-(n,k) table of basis blades, stored as bitmasks in lexicographic
// order of the underlying sorted index tuples.
struct BladeTable {
    std::vector<std::uint32_t> blades;
    std::vector<std::int32_t> index_of_mask;  // size 1<<n, -1 for foreign masks
};

inline BladeTable make_blade_table(int n, int k) {
    BladeTable t;
    t.index_of_mask.assign(std::size_t{1} << n, -1);
    std::vector<int> tuple(k);
    for (int i = 0; i < k; ++i) tuple[i] = i;
    const auto emit = [&] {
        std::uint32_t mask = 0;
        for (int v : tuple) mask |= 1u << v;
        t.index_of_mask[mask] = static_cast<std::int32_t>(t.blades.size());
        t.blades.push_back(mask);
    };
    if (k == 0) {
        t.index_of_mask[0] = 0;
        t.blades.push_back(0);
        return t;
    }
    if (k > n) return t;
    while (true) {
        emit();
        int i = k - 1;
        while (i >= 0 && tuple[i] == n - k + i) --i;
        if (i < 0) break;
        ++tuple[i];
        for (int j = i + 1; j < k; ++j) tuple[j] = tuple[j - 1] + 1;
    }
    return t;
}

inline const BladeTable& blade_table(int n, int k) {
    static const auto tables = [] {
        std::array<std::array<BladeTable, kMaxExteriorDimension + 1>, kMaxExteriorDimension + 1> all;
        for (int nn = 0; nn <= kMaxExteriorDimension; ++nn)
            for (int kk = 0; kk <= nn; ++kk) all[nn][kk] = make_blade_table(nn, kk);
        return all;
    }();
    return tables[n][k];
}

// Sign of e_A ∧ e_B for disjoint masks: parity of pairs (a in A, b in B) with a > b.
inline int wedge_sign(std::uint32_t a, std::uint32_t b) {
    int inversions = 0;
    for (std::uint32_t bb = b; bb != 0; bb &= bb - 1) {
        const int bit = std::countr_zero(bb);
        inversions += std::popcount(a >> (bit + 1));
    }
    return (inversions & 1) ? -1 : 1;
}

inline void check_dimension(int n) {
    if (n < 1 || n > kMaxExteriorDimension)
        throw std::invalid_argument("exterior: ambient dimension must be in [1, " +
                                    std::to_string(kMaxExteriorDimension) + "], got " +
                                    std::to_string(n));
}

}  // namespace detail

// Element of Λ^k(R^n).  coeffs()[i] multiplies the i-th lexicographic blade.
class MultiVector {
public:
    MultiVector(int n, int k) : n_(n), k_(k) {
        detail::check_dimension(n);
        if (k < 0 || k > n) throw std::invalid_argument("MultiVector: degree out of range");
        coeffs_ = Eigen::VectorXd::Zero(binomial(n, k));
    }
    MultiVector(int n, int k, Eigen::VectorXd coeffs) : MultiVector(n, k) {
        if (coeffs.size() != coeffs_.size())
            throw std::invalid_argument("MultiVector: coefficient count mismatch");
        coeffs_ = std::move(coeffs);
    }

    int dimension() const { return n_; }
    int degree() const { return k_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    Eigen::VectorXd& coeffs() { return coeffs_; }

    double& operator[](Eigen::Index i) { return coeffs_[i]; }
    double operator[](Eigen::Index i) const { return coeffs_[i]; }

    MultiVector& operator+=(const MultiVector& o) {
        require_compatible(o);
        coeffs_ += o.coeffs_;
        return *this;
    }
    MultiVector& operator-=(const MultiVector& o) {
        require_compatible(o);
        coeffs_ -= o.coeffs_;
        return *this;
    }
    MultiVector& operator*=(double s) {
        coeffs_ *= s;
        return *this;
    }

    friend MultiVector operator+(MultiVector a, const MultiVector& b) { return a += b; }
    friend MultiVector operator-(MultiVector a, const MultiVector& b) { return a -= b; }
    friend MultiVector operator*(MultiVector a, double s) { return a *= s; }
    friend MultiVector operator*(double s, MultiVector a) { return a *= s; }

    void require_compatible(const MultiVector& o) const {
        if (n_ != o.n_ || k_ != o.k_)
            throw std::invalid_argument("MultiVector: dimension/degree mismatch");
    }

private:
    int n_, k_;
    Eigen::VectorXd coeffs_;
};

// e_{axes[0]} ∧ e_{axes[1]} ∧ ... with 0-based axes given in increasing order.
inline MultiVector basis_blade(int n, std::initializer_list<int> axes) {
    MultiVector m(n, static_cast<int>(axes.size()));
    std::uint32_t mask = 0;
    int prev = -1;
    for (int a : axes) {
        if (a < 0 || a >= n || a <= prev)
            throw std::invalid_argument("basis_blade: axes must be strictly increasing in [0,n)");
        mask |= 1u << a;
        prev = a;
    }
    m[detail::blade_table(n, m.degree()).index_of_mask[mask]] = 1.0;
    return m;
}

inline double inner(const MultiVector& a, const MultiVector& b) {
    a.require_compatible(b);
    return a.coeffs().dot(b.coeffs());
}

inline double norm(const MultiVector& a) { return a.coeffs().norm(); }

inline MultiVector wedge(const MultiVector& a, const MultiVector& b) {
    if (a.dimension() != b.dimension())
        throw std::invalid_argument("wedge: ambient dimension mismatch");
    const int n = a.dimension(), k = a.degree(), l = b.degree();
    if (k + l > n)
        throw std::invalid_argument("wedge: degree overflow (k+l > n)");
    const auto& ta = detail::blade_table(n, k);
    const auto& tb = detail::blade_table(n, l);
    const auto& tc = detail::blade_table(n, k + l);
    MultiVector out(n, k + l);
    for (Eigen::Index i = 0; i < a.coeffs().size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        const std::uint32_t ma = ta.blades[i];
        for (Eigen::Index j = 0; j < b.coeffs().size(); ++j) {
            const double bj = b[j];
            if (bj == 0.0) continue;
            const std::uint32_t mb = tb.blades[j];
            if (ma & mb) continue;
            out[tc.index_of_mask[ma | mb]] += detail::wedge_sign(ma, mb) * ai * bj;
        }
    }
    return out;
}

// Contraction ι_v a in the first slot.
inline MultiVector interior(const Eigen::VectorXd& v, const MultiVector& a) {
    const int n = a.dimension(), k = a.degree();
    if (v.size() != n) throw std::invalid_argument("interior: vector length != ambient dimension");
    if (k < 1) throw std::invalid_argument("interior: degree-0 input has no contraction");
    const auto& ta = detail::blade_table(n, k);
    const auto& tb = detail::blade_table(n, k - 1);
    MultiVector out(n, k - 1);
    for (Eigen::Index i = 0; i < a.coeffs().size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        const std::uint32_t mask = ta.blades[i];
        int position = 0;
        for (std::uint32_t mm = mask; mm != 0; mm &= mm - 1, ++position) {
            const int axis = std::countr_zero(mm);
            const double sign = (position & 1) ? -1.0 : 1.0;
            out[tb.index_of_mask[mask & ~(1u << axis)]] += sign * v[axis] * ai;
        }
    }
    return out;
}

// Element of V ⊗ Λ^k(R^n): one degree-k slot per basis vector of V.
class VectorFormTensor {
public:
    VectorFormTensor(int n, int k) : n_(n), k_(k), slots_(n, MultiVector(n, k)) {}

    int dimension() const { return n_; }
    int degree() const { return k_; }
    const MultiVector& slot(int i) const { return slots_.at(i); }
    MultiVector& slot(int i) { return slots_.at(i); }

    VectorFormTensor& operator+=(const VectorFormTensor& o) {
        require_compatible(o);
        for (int i = 0; i < n_; ++i) slots_[i] += o.slots_[i];
        return *this;
    }
    VectorFormTensor& operator-=(const VectorFormTensor& o) {
        require_compatible(o);
        for (int i = 0; i < n_; ++i) slots_[i] -= o.slots_[i];
        return *this;
    }
    VectorFormTensor& operator*=(double s) {
        for (auto& m : slots_) m *= s;
        return *this;
    }
    friend VectorFormTensor operator+(VectorFormTensor a, const VectorFormTensor& b) { return a += b; }
    friend VectorFormTensor operator-(VectorFormTensor a, const VectorFormTensor& b) { return a -= b; }
    friend VectorFormTensor operator*(VectorFormTensor a, double s) { return a *= s; }

    void require_compatible(const VectorFormTensor& o) const {
        if (n_ != o.n_ || k_ != o.k_)
            throw std::invalid_argument("VectorFormTensor: dimension/degree mismatch");
    }

private:
    int n_, k_;
    std::vector<MultiVector> slots_;
};

inline double inner(const VectorFormTensor& a, const VectorFormTensor& b) {
    a.require_compatible(b);
    double s = 0.0;
    for (int i = 0; i < a.dimension(); ++i) s += inner(a.slot(i), b.slot(i));
    return s;
}

inline double norm(const VectorFormTensor& a) { return std::sqrt(inner(a, a)); }

// ι(A) = Σ_i ι_{e_i} A_i.
inline MultiVector iota_contract(const VectorFormTensor& a) {
    const int n = a.dimension(), k = a.degree();
    if (k < 1) throw std::invalid_argument("iota_contract: slots must have degree >= 1");
    MultiVector out(n, k - 1);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        e[i] = 1.0;
        out += interior(e, a.slot(i));
        e[i] = 0.0;
    }
    return out;
}

// ∧(A) = Σ_i e_i ∧ A_i.
inline MultiVector wedge_contract(const VectorFormTensor& a) {
    const int n = a.dimension(), k = a.degree();
    if (k + 1 > n) throw std::invalid_argument("wedge_contract: degree overflow");
    MultiVector out(n, k + 1);
    for (int i = 0; i < n; ++i) out += wedge(basis_blade(n, {i}), a.slot(i));
    return out;
}

// Metric adjoint of iota_contract: slot i of ι*(a) is e_i ∧ a.
// Satisfies iota_contract(iota_adjoint(a)) = (n-k+1)·a for degree(a) = k-1.
inline VectorFormTensor iota_adjoint(const MultiVector& a) {
    const int n = a.dimension(), k = a.degree() + 1;
    if (k > n) throw std::invalid_argument("iota_adjoint: degree overflow");
    VectorFormTensor out(n, k);
    for (int i = 0; i < n; ++i) out.slot(i) = wedge(basis_blade(n, {i}), a);
    return out;
}

// Metric adjoint of wedge_contract: slot i of ∧*(a) is ι_{e_i} a.
// Satisfies wedge_contract(wedge_adjoint(a)) = (k+1)·a for degree(a) = k+1.
inline VectorFormTensor wedge_adjoint(const MultiVector& a) {
    const int n = a.dimension(), k = a.degree() - 1;
    if (k < 0) throw std::invalid_argument("wedge_adjoint: degree-0 input");
    VectorFormTensor out(n, k);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        e[i] = 1.0;
        out.slot(i) = interior(e, a);
        e[i] = 0.0;
    }
    return out;
}

struct TwistorParts {
    VectorFormTensor proj_iota;
    VectorFormTensor proj_wedge;
    VectorFormTensor remainder;
};

// Orthogonal decomposition of V ⊗ Λ^k into im(ι*), im(∧*) and their
// complement.  The squared norms satisfy
//   |A|^2 = |remainder|^2 + |wedge_contract(A)|^2/(k+1) + |iota_contract(A)|^2/(n-k+1).
inline TwistorParts twistor_decompose(const VectorFormTensor& a) {
    const int n = a.dimension(), k = a.degree();
    if (k < 1 || k > n - 1)
        throw std::invalid_argument("twistor_decompose: degree must satisfy 1 <= k <= n-1");
    TwistorParts parts{VectorFormTensor(n, k), VectorFormTensor(n, k), VectorFormTensor(n, k)};
    parts.proj_iota = iota_adjoint(iota_contract(a)) * (1.0 / (n - k + 1));
    parts.proj_wedge = wedge_adjoint(wedge_contract(a)) * (1.0 / (k + 1));
    parts.remainder = a - parts.proj_iota - parts.proj_wedge;
    return parts;
}

}  // namespace phodge
