#pragma once

// Dense complex-matrix kernel: Hermitian eigendecomposition, functional
// calculus, Schatten norms and the clipping map used by the lifting
// correctors.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nck/error.hpp"

namespace nck {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

struct HermitianEig {
    RealVector eigenvalues;  // ascending
    Matrix eigenvectors;     // unitary, columns match eigenvalues
};

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite())
        throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
}

/// Largest absolute entry; a cheap norm used for tolerance scaling.
inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

namespace detail {

inline bool is_diagonal(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (i != j && m(i, j) != cplx(0.0, 0.0)) return false;
    return true;
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// (H + H*)/2 first; asymmetry beyond 1e-8 (relative) is rejected.
inline HermitianEig herm_eig(const Matrix& h) {
    if (h.rows() != h.cols())
        throw Error(ErrorCode::NonSquare, "herm_eig expects a square matrix, got " +
                                              std::to_string(h.rows()) + "x" +
                                              std::to_string(h.cols()));
    require_finite(h, "herm_eig input");
    const Matrix sym = (h + h.adjoint()) * 0.5;
    if (max_abs(h - sym) > 1e-8 * (1.0 + max_abs(h)))
        throw Error(ErrorCode::NonHermitian, "herm_eig input is not Hermitian");

    const auto n = sym.rows();
    if (detail::is_diagonal(sym)) {
        // Exact path; used heavily for diagonal CAR observables.
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
            return sym(a, a).real() < sym(b, b).real();
        });
        HermitianEig out{RealVector(n), Matrix::Zero(n, n)};
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto src = order[static_cast<std::size_t>(k)];
            out.eigenvalues(k) = sym(src, src).real();
            out.eigenvectors(src, k) = 1.0;
        }
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::NonFinite, "eigensolver failed to converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// U diag(f(λ)) U* for Hermitian H and a real scalar map f.
template <class F>
    requires std::invocable<F&, double>
Matrix mat_func(const Matrix& h, F&& f) {
    const HermitianEig eig = herm_eig(h);
    RealVector fv(eig.eigenvalues.size());
    for (Eigen::Index k = 0; k < fv.size(); ++k)
        fv(k) = static_cast<double>(f(eig.eigenvalues(k)));
    const Matrix& u = eig.eigenvectors;
    Matrix out = u * fv.cast<cplx>().asDiagonal() * u.adjoint();
    return (out + out.adjoint()) * 0.5;
}

/// Clipping map F_C(t) = clamp(t, -C, C).
inline double fc_truncate(double t, double c) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw Error(ErrorCode::NonPositiveC, "truncation level must be positive and finite");
    return std::clamp(t, -c, c);
}

/// G_C(t) = t - F_C(t).
inline double gc_residual(double t, double c) { return t - fc_truncate(t, c); }

/// Hermitian dilation [[0, Y*], [Y, 0]] of a rectangular block.
inline Matrix hermitian_dilation(const Matrix& y) {
    const auto p = y.rows();
    const auto q = y.cols();
    Matrix d = Matrix::Zero(p + q, p + q);
    d.topRightCorner(q, p) = y.adjoint();
    d.bottomLeftCorner(p, q) = y;
    return d;
}

/// Lower-left block Z of F_C([[0, Y*], [Y, 0]]). Guarantees ‖Z‖ ≤ C.
inline Matrix truncate_offdiag(const Matrix& y, double c) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw Error(ErrorCode::NonPositiveC, "truncation level must be positive and finite");
    require_finite(y, "truncate_offdiag input");
    if (y.size() == 0) return y;
    const Matrix f = mat_func(hermitian_dilation(y), [c](double t) { return std::clamp(t, -c, c); });
    return f.block(y.cols(), 0, y.rows(), y.cols());
}

/// Singular values in descending order.
inline RealVector singular_values(const Matrix& m) {
    require_finite(m, "singular_values input");
    if (m.size() == 0) return RealVector();
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues();
}

/// Largest singular value.
inline double op_norm(const Matrix& m) {
    require_finite(m, "op_norm input");
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 || m.cols() == 1) return m.norm();
    // λ_max(M*M) on the smaller Gram side is accurate to relative machine precision.
    const Matrix g = m.rows() >= m.cols() ? Matrix(m.adjoint() * m) : Matrix(m * m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

/// Schatten-1 norm Tr((M*M)^{1/2}).
inline double trace_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 || m.cols() == 1) {
        require_finite(m, "trace_norm input");
        return m.norm();
    }
    return singular_values(m).sum();
}

/// Smallest eigenvalue of the Hermitian part of A - B.
inline double psd_margin(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols())
        throw Error(ErrorCode::NonSquare, "psd comparison expects square matrices");
    if (a.rows() != b.rows())
        throw Error(ErrorCode::SizeMismatch, "psd comparison operands differ in size");
    require_finite(a, "psd lhs");
    require_finite(b, "psd rhs");
    if (a.rows() == 0) return 0.0;
    const Matrix diff = (a - b + (a - b).adjoint()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(diff, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

/// True iff A - B ⪰ -tol·I with tol = 1e-9·(1 + ‖A‖ + ‖B‖).
inline bool psd_ge(const Matrix& a, const Matrix& b) {
    const double margin = psd_margin(a, b);
    const double na = op_norm(a);
    const double nb = op_norm(b);
    const auto hermitian = [](const Matrix& m, double scale) {
        return max_abs(m - m.adjoint()) <= 1e-9 * (1.0 + scale);
    };
    if (!hermitian(a, na) || !hermitian(b, nb))
        throw Error(ErrorCode::NonHermitian, "psd_ge expects Hermitian operands");
    return margin >= -1e-9 * (1.0 + na + nb);
}

}  // namespace nck
