#pragma once

// Khintchine norms on d-tuples of n×n matrices: the row/column norm
// |||x||| = max(‖Σ x_i*x_i‖^½, ‖Σ x_i x_i*‖^½), its weighted variant
// |||x|||_A, and the dual (infimal-convolution) norms, computed by a
// Douglas–Rachford splitting over decompositions x = y + z.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nck/matcore.hpp"

namespace nck {

/// Ordered d-tuple of n×n complex matrices.
class MatrixTuple {
public:
    MatrixTuple() = default;

    explicit MatrixTuple(std::vector<Matrix> mats) : mats_(std::move(mats)) {
        if (mats_.empty()) return;
        n_ = mats_.front().rows();
        for (std::size_t i = 0; i < mats_.size(); ++i) {
            if (mats_[i].rows() != n_ || mats_[i].cols() != n_)
                throw Error(ErrorCode::DimensionMismatch,
                            "tuple entry " + std::to_string(i) + " is not " +
                                std::to_string(n_) + "x" + std::to_string(n_),
                            i);
        }
    }

    static MatrixTuple zeros(std::size_t d, Eigen::Index n) {
        return MatrixTuple(std::vector<Matrix>(d, Matrix::Zero(n, n)));
    }

    std::size_t d() const noexcept { return mats_.size(); }
    Eigen::Index n() const noexcept { return n_; }
    bool empty() const noexcept { return mats_.empty(); }

    const Matrix& operator[](std::size_t i) const { return mats_[i]; }
    Matrix& operator[](std::size_t i) { return mats_[i]; }
    const std::vector<Matrix>& matrices() const noexcept { return mats_; }

    auto begin() const noexcept { return mats_.begin(); }
    auto end() const noexcept { return mats_.end(); }

    bool all_finite() const {
        return std::all_of(mats_.begin(), mats_.end(), [](const Matrix& m) { return m.allFinite(); });
    }

    MatrixTuple& operator+=(const MatrixTuple& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < mats_.size(); ++i) mats_[i] += o.mats_[i];
        return *this;
    }
    MatrixTuple& operator-=(const MatrixTuple& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < mats_.size(); ++i) mats_[i] -= o.mats_[i];
        return *this;
    }
    MatrixTuple& operator*=(cplx s) {
        for (auto& m : mats_) m *= s;
        return *this;
    }

    friend MatrixTuple operator+(MatrixTuple a, const MatrixTuple& b) { return a += b; }
    friend MatrixTuple operator-(MatrixTuple a, const MatrixTuple& b) { return a -= b; }
    friend MatrixTuple operator*(cplx s, MatrixTuple a) { return a *= s; }
    friend MatrixTuple operator*(MatrixTuple a, cplx s) { return a *= s; }

    /// Largest entrywise deviation from another tuple of the same shape.
    double max_abs_diff(const MatrixTuple& o) const {
        require_same_shape(o);
        double m = 0.0;
        for (std::size_t i = 0; i < mats_.size(); ++i) m = std::max(m, max_abs(mats_[i] - o.mats_[i]));
        return m;
    }

    double max_abs_entry() const {
        double m = 0.0;
        for (const auto& x : mats_) m = std::max(m, max_abs(x));
        return m;
    }

private:
    void require_same_shape(const MatrixTuple& o) const {
        if (o.d() != d() || o.n() != n())
            throw Error(ErrorCode::DimensionMismatch, "tuples differ in shape");
    }

    std::vector<Matrix> mats_;
    Eigen::Index n_ = 0;
};

/// Spectrum ν_1..ν_d of the operator A attached to a subspace of R ⊕ C.
struct WeightedSpace {
    std::vector<double> nu;

    WeightedSpace() = default;
    explicit WeightedSpace(std::vector<double> weights) : nu(std::move(weights)) {
        for (std::size_t i = 0; i < nu.size(); ++i) {
            if (!std::isfinite(nu[i]) || nu[i] < 0.0 || nu[i] > 1.0)
                throw Error(ErrorCode::InvalidArgument,
                            "weight nu[" + std::to_string(i) + "] must lie in [0, 1]", i);
        }
    }

    static WeightedSpace uniform(std::size_t d, double value) {
        return WeightedSpace(std::vector<double>(d, value));
    }

    std::size_t d() const noexcept { return nu.size(); }
};

// Gram sums ------------------------------------------------------------------

inline Matrix column_gram(const MatrixTuple& x) {
    Matrix g = Matrix::Zero(x.n(), x.n());
    for (const auto& m : x) g.noalias() += m.adjoint() * m;
    return g;
}

inline Matrix row_gram(const MatrixTuple& x) {
    Matrix g = Matrix::Zero(x.n(), x.n());
    for (const auto& m : x) g.noalias() += m * m.adjoint();
    return g;
}

inline Matrix weighted_column_gram(const MatrixTuple& x, const std::vector<double>& w) {
    Matrix g = Matrix::Zero(x.n(), x.n());
    for (std::size_t i = 0; i < x.d(); ++i) g.noalias() += w[i] * (x[i].adjoint() * x[i]);
    return g;
}

inline Matrix weighted_row_gram(const MatrixTuple& x, const std::vector<double>& w) {
    Matrix g = Matrix::Zero(x.n(), x.n());
    for (std::size_t i = 0; i < x.d(); ++i) g.noalias() += w[i] * (x[i] * x[i].adjoint());
    return g;
}

/// dn×n stack [x_1; …; x_d]; its trace norm is Tr((Σ x_i*x_i)^½).
inline Matrix column_stack(const MatrixTuple& x) {
    const auto n = x.n();
    Matrix s(n * static_cast<Eigen::Index>(x.d()), n);
    for (std::size_t i = 0; i < x.d(); ++i) s.middleRows(static_cast<Eigen::Index>(i) * n, n) = x[i];
    return s;
}

/// n×dn stack [x_1, …, x_d]; its trace norm is Tr((Σ x_i x_i*)^½).
inline Matrix row_stack(const MatrixTuple& x) {
    const auto n = x.n();
    Matrix s(n, n * static_cast<Eigen::Index>(x.d()));
    for (std::size_t i = 0; i < x.d(); ++i) s.middleCols(static_cast<Eigen::Index>(i) * n, n) = x[i];
    return s;
}

namespace detail {

inline double psd_sqrt_norm(const Matrix& g) { return std::sqrt(std::max(0.0, op_norm(g))); }

inline void require_matching(const MatrixTuple& x, const WeightedSpace& w) {
    if (w.d() != x.d())
        throw Error(ErrorCode::DimensionMismatch,
                    "weights have length " + std::to_string(w.d()) + " but tuple has d=" +
                        std::to_string(x.d()));
}

inline std::vector<double> complement(const std::vector<double>& nu) {
    std::vector<double> out(nu.size());
    std::transform(nu.begin(), nu.end(), out.begin(), [](double v) { return 1.0 - v; });
    return out;
}

}  // namespace detail

/// |||x||| = max(‖Σ x_i*x_i‖^½, ‖Σ x_i x_i*‖^½).
inline double triple_norm(const MatrixTuple& x) {
    if (!x.all_finite()) throw Error(ErrorCode::NonFinite, "tuple has non-finite entries");
    if (x.empty()) return 0.0;
    return std::max(detail::psd_sqrt_norm(column_gram(x)), detail::psd_sqrt_norm(row_gram(x)));
}

/// |||x|||_A = max(‖Σ (1-ν_i) x_i x_i*‖^½, ‖Σ ν_i x_i*x_i‖^½).
inline double weighted_triple_norm(const MatrixTuple& x, const WeightedSpace& w) {
    detail::require_matching(x, w);
    if (!x.all_finite()) throw Error(ErrorCode::NonFinite, "tuple has non-finite entries");
    if (x.empty()) return 0.0;
    return std::max(detail::psd_sqrt_norm(weighted_row_gram(x, detail::complement(w.nu))),
                    detail::psd_sqrt_norm(weighted_column_gram(x, w.nu)));
}

/// Primal norm selected by an optional weight vector.
inline double primal_norm(const MatrixTuple& x, const WeightedSpace* w) {
    return w ? weighted_triple_norm(x, *w) : triple_norm(x);
}

/// Tr Σ x_i b_i.
inline cplx pairing(const MatrixTuple& x, const MatrixTuple& b) {
    if (x.d() != b.d() || x.n() != b.n())
        throw Error(ErrorCode::DimensionMismatch, "pairing operands differ in shape");
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < x.d(); ++i) s += (x[i].transpose().cwiseProduct(b[i])).sum();
    return s;
}

/// |Tr Σ x_i b_i| / |||b|||, a lower bound on the dual norm of x.
inline double pairing_certificate(const MatrixTuple& x, const MatrixTuple& b,
                                  const WeightedSpace* w = nullptr) {
    if (w) detail::require_matching(b, *w);
    const double nb = primal_norm(b, w);
    if (!(nb > 0.0)) throw Error(ErrorCode::ZeroWitness, "witness has zero primal norm");
    return std::abs(pairing(x, b)) / nb;
}

inline double pairing_certificate(const MatrixTuple& x, const MatrixTuple& b, const WeightedSpace& w) {
    return pairing_certificate(x, b, &w);
}

struct DualNormOptions {
    double step = 1.0;
    std::size_t max_iter = 5000;
    double gap_tol = 1e-6;       // stop when gap ≤ gap_tol
    double change_tol = 1e-10;   // stop when the (normalized) iterate stalls
    double accept_gap = 1e-5;    // below this the result counts as converged
    std::size_t check_every = 10;
};

/// Result of the dual-norm solver. `y` carries the column-Gram part and `z`
/// the row-Gram part of the decomposition x = y + z; `witness` is the
/// normalized dual iterate b with pairing certificate `certificate`.
struct DualNormResult {
    double value = 0.0;
    MatrixTuple y;
    MatrixTuple z;
    MatrixTuple witness;
    double certificate = 0.0;
    double gap = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

/// Objective of a decomposition: Tr((Σ c_i y_i*y_i)^½) + Tr((Σ r_i z_i z_i*)^½).
inline double decomposition_cost(const MatrixTuple& y, const MatrixTuple& z, const WeightedSpace* w) {
    if (!w) return trace_norm(column_stack(y)) + trace_norm(row_stack(z));
    MatrixTuple ys = y, zs = z;
    for (std::size_t i = 0; i < y.d(); ++i) {
        ys[i] /= std::sqrt(1.0 - w->nu[i]);
        zs[i] /= std::sqrt(w->nu[i]);
    }
    return trace_norm(column_stack(ys)) + trace_norm(row_stack(zs));
}

namespace detail {

/// Singular-value soft-thresholding, the proximal map of γ‖·‖_1.
inline Matrix svt(const Matrix& m, double gamma) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RealVector s = (svd.singularValues().array() - gamma).max(0.0).matrix();
    return svd.matrixU() * s.cast<cplx>().asDiagonal() * svd.matrixV().adjoint();
}

class DualSolver {
public:
    DualSolver(const MatrixTuple& x, const WeightedSpace* w, const DualNormOptions& opt)
        : x_(x), w_(w), opt_(opt), d_(x.d()), n_(x.n()) {
        alpha_.assign(d_, 1.0);
        beta_.assign(d_, 1.0);
        if (w_) {
            for (std::size_t i = 0; i < d_; ++i) {
                alpha_[i] = std::sqrt(1.0 - w_->nu[i]);
                beta_[i] = std::sqrt(w_->nu[i]);
            }
        }
    }

    Eigen::Block<Matrix> block_u(Matrix& u, std::size_t i) const {
        return u.middleRows(static_cast<Eigen::Index>(i) * n_, n_);
    }
    Eigen::Block<Matrix, Eigen::Dynamic, Eigen::Dynamic, true> block_w(Matrix& w, std::size_t i) const {
        return w.middleCols(static_cast<Eigen::Index>(i) * n_, n_);
    }

    DualNormResult run() {
        DualNormResult best;
        best.y = MatrixTuple::zeros(d_, n_);
        best.z = MatrixTuple::zeros(d_, n_);
        best.witness = MatrixTuple::zeros(d_, n_);
        if (x_.max_abs_entry() == 0.0) return best;

        // Trivial decompositions give the initial upper bounds.
        best.value = std::numeric_limits<double>::infinity();
        consider(x_, MatrixTuple::zeros(d_, n_), best);
        consider(MatrixTuple::zeros(d_, n_), x_, best);

        // Work on x/scale so that singular values of the stacks are O(1).
        scale_ = std::max(op_norm(column_stack(x_)), op_norm(row_stack(x_)));
        const Eigen::Index dn = n_ * static_cast<Eigen::Index>(d_);
        Matrix qu(dn, n_), qw(n_, dn);
        for (std::size_t i = 0; i < d_; ++i) {
            const Matrix xi = x_[i] / scale_;
            block_u(qu, i) = 0.5 * xi / alpha_[i];
            block_w(qw, i) = 0.5 * xi / beta_[i];
        }

        const double gamma = opt_.step;
        std::size_t it = 0;
        for (; it < opt_.max_iter; ++it) {
            Matrix pu = qu, pw = qw;
            project(pu, pw);
            const Matrix ru = svt(2.0 * pu - qu, gamma);
            const Matrix rw = svt(2.0 * pw - qw, gamma);
            const double change = std::sqrt((ru - pu).squaredNorm() + (rw - pw).squaredNorm());
            qu += ru - pu;
            qw += rw - pw;

            const bool last = it + 1 == opt_.max_iter;
            const bool stalled = change <= opt_.change_tol;
            if ((it + 1) % opt_.check_every == 0 || last || stalled) {
                consider_scaled(pu, pw, best);
                // (2P - Q - R)/γ is an exact subgradient of the stacked trace norms at R.
                certify((2.0 * pu - (qu - (ru - pu)) - ru) / gamma,
                        (2.0 * pw - (qw - (rw - pw)) - rw) / gamma, best);
                best.gap = best.value - best.certificate;
                if (best.gap <= opt_.gap_tol || stalled) {
                    ++it;
                    break;
                }
            }
        }
        best.iterations = it;
        best.gap = best.value - best.certificate;
        best.converged = best.gap <= opt_.accept_gap;
        return best;
    }

private:
    // Projection onto {α_i u_i + β_i w_i = x_i/scale}.
    void project(Matrix& u, Matrix& w) const {
        for (std::size_t i = 0; i < d_; ++i) {
            const double a = alpha_[i], b = beta_[i];
            const Matrix r = a * block_u(u, i) + b * block_w(w, i) - x_[i] / scale_;
            const double den = a * a + b * b;
            block_u(u, i) -= (a / den) * r;
            block_w(w, i) -= (b / den) * r;
        }
    }

    void consider(const MatrixTuple& y, const MatrixTuple& z, DualNormResult& best) const {
        const double v = decomposition_cost(y, z, w_);
        if (v < best.value) {
            best.value = v;
            best.y = y;
            best.z = z;
        }
    }

    void consider_scaled(const Matrix& pu, const Matrix& pw, DualNormResult& best) const {
        const double v = scale_ * (trace_norm(pu) + trace_norm(pw));
        if (!(v < best.value)) return;
        MatrixTuple y = MatrixTuple::zeros(d_, n_), z = MatrixTuple::zeros(d_, n_);
        for (std::size_t i = 0; i < d_; ++i) {
            y[i] = scale_ * alpha_[i] * pu.middleRows(static_cast<Eigen::Index>(i) * n_, n_);
            z[i] = scale_ * beta_[i] * pw.middleCols(static_cast<Eigen::Index>(i) * n_, n_);
        }
        // Re-anchor the sum exactly on x so that y + z = x holds to rounding.
        for (std::size_t i = 0; i < d_; ++i) z[i] = x_[i] - y[i];
        const double exact = decomposition_cost(y, z, w_);
        if (exact < best.value) {
            best.value = exact;
            best.y = std::move(y);
            best.z = std::move(z);
        }
    }

    void certify(const Matrix& gu, const Matrix& gw, DualNormResult& best) const {
        // Dual variable μ with G_u = (α_i μ_i), G_w = (β_i μ_i); the witness is b_i = μ_i*.
        MatrixTuple from_u = MatrixTuple::zeros(d_, n_), from_w = MatrixTuple::zeros(d_, n_);
        for (std::size_t i = 0; i < d_; ++i) {
            from_u[i] = (gu.middleRows(static_cast<Eigen::Index>(i) * n_, n_) / alpha_[i]).adjoint();
            from_w[i] = (gw.middleCols(static_cast<Eigen::Index>(i) * n_, n_) / beta_[i]).adjoint();
        }
        MatrixTuple avg = 0.5 * (from_u + from_w);
        for (const MatrixTuple* b : {&from_u, &from_w, &avg}) {
            const double nb = primal_norm(*b, w_);
            if (!(nb > 0.0)) continue;
            const double c = std::abs(pairing(x_, *b)) / nb;
            if (c > best.certificate) {
                best.certificate = c;
                best.witness = (1.0 / nb) * *b;
            }
        }
    }

    const MatrixTuple& x_;
    const WeightedSpace* w_;
    DualNormOptions opt_;
    std::size_t d_;
    Eigen::Index n_;
    std::vector<double> alpha_, beta_;
    double scale_ = 1.0;
};

}  // namespace detail

/// Unweighted dual norm inf{Tr((Σ y_i*y_i)^½) + Tr((Σ z_i z_i*)^½) : x = y + z}.
inline DualNormResult dual_norm(const MatrixTuple& x, const DualNormOptions& opt = {}) {
    if (!x.all_finite()) throw Error(ErrorCode::NonFinite, "tuple has non-finite entries");
    if (x.empty()) return {};
    return detail::DualSolver(x, nullptr, opt).run();
}

/// Weighted dual norm inf{Tr((Σ y_i*y_i/(1-ν_i))^½) + Tr((Σ z_i z_i*/ν_i)^½) : x = y + z},
/// the dual of |||·|||_A under the trace pairing. Requires 0 < ν_i < 1.
inline DualNormResult dual_norm(const MatrixTuple& x, const WeightedSpace& w,
                                const DualNormOptions& opt = {}) {
    detail::require_matching(x, w);
    for (std::size_t i = 0; i < w.d(); ++i) {
        if (w.nu[i] <= 0.0 || w.nu[i] >= 1.0)
            throw Error(ErrorCode::DegenerateWeight,
                        "weighted dual norm needs 0 < nu_i < 1; nu[" + std::to_string(i) + "] = " +
                            std::to_string(w.nu[i]),
                        i);
    }
    if (!x.all_finite()) throw Error(ErrorCode::NonFinite, "tuple has non-finite entries");
    if (x.empty()) return {};
    return detail::DualSolver(x, &w, opt).run();
}

}  // namespace nck
