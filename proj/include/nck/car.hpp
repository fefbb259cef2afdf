#pragma once

// CAR algebra over a d-dimensional H ⊆ R ⊕ C in the Jordan–Wigner
// representation on ⊗^d M_2, with the quasi-free state ω_A = Tr(ρ_A ·),
// the functionals φ_i^A and the map E_A. Indices are 0-based.
//
// Elements of M_n ⊗ M_{2^d} use the Kronecker layout: block (k, l) of size
// 2^d holds the M_{2^d} component of the (k, l) matrix entry.

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "nck/limits.hpp"
#include "nck/matcore.hpp"
#include "nck/opnorms.hpp"
#include "nck/report.hpp"

namespace nck {

using SparseMatrix = Eigen::SparseMatrix<cplx>;
using Generators = std::vector<SparseMatrix>;

// Subspaces of R ⊕ C -----------------------------------------------------------

/// Orthonormal basis ξ_1..ξ_d of H ⊆ R ⊕ C (ambient k): row i of `basis_r`
/// holds U_1ξ_i and row i of `basis_c` holds U_2ξ_i.
struct SubspaceModel {
    Matrix basis_r;
    Matrix basis_c;

    std::size_t d() const noexcept { return static_cast<std::size_t>(basis_r.rows()); }
};

struct SubspaceWeights {
    WeightedSpace weights;  // ν ascending
    Matrix rotation;        // column j: coefficients of the j-th eigenvector of A in the ξ basis
};

/// Spectrum of A = U_2*U_2 restricted to H.
inline SubspaceWeights subspace_to_weights(const SubspaceModel& s) {
    if (s.basis_r.rows() != s.basis_c.rows() || s.basis_r.cols() != s.basis_c.cols())
        throw Error(ErrorCode::DimensionMismatch, "row and column parts differ in shape");
    require_finite(s.basis_r, "basis_r");
    require_finite(s.basis_c, "basis_c");
    const Matrix gr = s.basis_r * s.basis_r.adjoint();
    const Matrix gc = s.basis_c * s.basis_c.adjoint();
    const auto d = gr.rows();
    const double dev = max_abs(gr + gc - Matrix::Identity(d, d));
    if (dev > 1e-10)
        throw Error(ErrorCode::NotOrthonormal, "basis is not orthonormal in R ⊕ C (deviation " +
                                                   std::to_string(dev) + ")");
    // A_{ji} = <Aξ_i, ξ_j> = <U_2ξ_i, U_2ξ_j>.
    const Matrix a = gc.transpose();
    const HermitianEig eig = herm_eig(a);
    std::vector<double> nu(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
        const double v = eig.eigenvalues(k);
        if (v < -1e-10 || v > 1.0 + 1e-10)
            throw Error(ErrorCode::NotOrthonormal, "A has eigenvalue outside [0, 1]");
        nu[static_cast<std::size_t>(k)] = std::clamp(v, 0.0, 1.0);
    }
    return {WeightedSpace(std::move(nu)), eig.eigenvectors};
}

// Jordan–Wigner generators -----------------------------------------------------

namespace detail {

inline Generators build_jordan_wigner(std::size_t d) {
    const std::size_t dim = std::size_t{1} << d;
    Generators gens;
    gens.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
        // Site i is tensor factor i (0-based), i.e. bit d-1-i of the basis index.
        const std::size_t bit = std::size_t{1} << (d - 1 - i);
        std::vector<Eigen::Triplet<cplx>> trips;
        trips.reserve(dim / 2);
        for (std::size_t b = 0; b < dim; ++b) {
            if (!(b & bit)) continue;
            // u on sites before i: sign (-1)^(occupied sites with larger bit index).
            const auto higher = static_cast<std::uint64_t>(b >> (d - i));
            const double sign = (std::popcount(higher) % 2) ? -1.0 : 1.0;
            trips.emplace_back(static_cast<int>(b ^ bit), static_cast<int>(b), sign);
        }
        SparseMatrix a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        a.setFromTriplets(trips.begin(), trips.end());
        a.makeCompressed();
        gens.push_back(std::move(a));
    }
    return gens;
}

}  // namespace detail

/// a_i = u^{⊗i} ⊗ e ⊗ I^{⊗(d-1-i)}, e = [[0,1],[0,0]], u = diag(1,-1).
/// Cached per d; the returned pointer stays valid for the program lifetime.
inline std::shared_ptr<const Generators> jordan_wigner(std::size_t d) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "jordan_wigner needs d >= 1");
    if (d > max_car_d())
        throw Error(ErrorCode::DTooLarge, "CAR dimension d=" + std::to_string(d) + " exceeds cap " +
                                              std::to_string(max_car_d()));
    static std::mutex mu;
    static std::map<std::size_t, std::shared_ptr<const Generators>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[d];
    if (!slot) slot = std::make_shared<const Generators>(detail::build_jordan_wigner(d));
    return slot;
}

/// CAR generators plus the quasi-free density ρ_A = ⊗ diag(1-ν_i, ν_i).
/// Immutable after construction.
class CarSystem {
public:
    explicit CarSystem(WeightedSpace nu) : CarSystem(nu, jordan_wigner(nu.d())) {}

    /// Uses caller-supplied generators instead of the Jordan–Wigner ones.
    /// Intended for fault injection in the identity suites.
    static CarSystem with_generators(WeightedSpace nu, Generators gens) {
        const std::size_t d = nu.d();
        if (gens.size() != d) throw Error(ErrorCode::DimensionMismatch, "need one generator per mode");
        const auto dim = static_cast<Eigen::Index>(std::size_t{1} << d);
        for (const auto& g : gens)
            if (g.rows() != dim || g.cols() != dim)
                throw Error(ErrorCode::SizeMismatch, "generator has wrong size");
        return CarSystem(std::move(nu), std::make_shared<const Generators>(std::move(gens)));
    }

    std::size_t d() const noexcept { return nu_.d(); }
    Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(std::size_t{1} << d()); }
    const WeightedSpace& weights() const noexcept { return nu_; }
    double nu(std::size_t i) const { return nu_.nu[i]; }
    const SparseMatrix& a(std::size_t i) const { return (*gens_)[i]; }
    const Generators& generators() const noexcept { return *gens_; }
    /// Diagonal of ρ_A.
    const RealVector& density() const noexcept { return rho_; }
    Matrix density_matrix() const { return rho_.cast<cplx>().asDiagonal(); }

private:
    CarSystem(WeightedSpace nu, std::shared_ptr<const Generators> gens) : nu_(std::move(nu)), gens_(std::move(gens)) {
        const std::size_t d = nu_.d();
        if (d < 1) throw Error(ErrorCode::InvalidArgument, "CAR system needs d >= 1");
        if (d > max_car_d())
            throw Error(ErrorCode::DTooLarge, "CAR dimension d=" + std::to_string(d) + " exceeds cap " +
                                                  std::to_string(max_car_d()));
        const std::size_t dim = std::size_t{1} << d;
        rho_.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t b = 0; b < dim; ++b) {
            double p = 1.0;
            for (std::size_t i = 0; i < d; ++i)
                p *= ((b >> (d - 1 - i)) & 1U) ? nu_.nu[i] : 1.0 - nu_.nu[i];
            rho_(static_cast<Eigen::Index>(b)) = p;
        }
    }

    WeightedSpace nu_;
    std::shared_ptr<const Generators> gens_;
    RealVector rho_;
};

namespace detail {

inline void require_car_square(const CarSystem& sys, Eigen::Index rows, Eigen::Index cols) {
    if (rows != sys.dim() || cols != sys.dim())
        throw Error(ErrorCode::SizeMismatch, "expected a " + std::to_string(sys.dim()) + "x" +
                                                 std::to_string(sys.dim()) + " operator");
}

/// H_i = ρ a_i* + a_i* ρ, so that φ_i(b) = Tr(H_i b).
inline SparseMatrix phi_kernel(const CarSystem& sys, std::size_t i) {
    SparseMatrix h = sys.a(i).adjoint();
    const RealVector& rho = sys.density();
    for (int k = 0; k < h.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(h, k); it; ++it) it.valueRef() *= rho(it.row()) + rho(it.col());
    return h;
}

/// Tr(K b) for sparse K and dense b.
inline cplx trace_product(const SparseMatrix& k, const Matrix& b) {
    cplx s{0.0, 0.0};
    for (int c = 0; c < k.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(k, c); it; ++it) s += it.value() * b(it.col(), it.row());
    return s;
}

inline cplx trace_product(const SparseMatrix& k, const SparseMatrix& b) {
    // Tr(K B) = Σ K(p,q) B(q,p) = sum of K ∘ Bᵀ.
    const SparseMatrix bt = b.transpose();
    return SparseMatrix(k.cwiseProduct(bt)).sum();
}

inline cplx state_of(const CarSystem& sys, const SparseMatrix& b) {
    cplx s{0.0, 0.0};
    const RealVector& rho = sys.density();
    for (int c = 0; c < b.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(b, c); it; ++it)
            if (it.row() == it.col()) s += rho(it.row()) * it.value();
    return s;
}

inline SparseMatrix sparse_identity(Eigen::Index n) {
    SparseMatrix i(n, n);
    i.setIdentity();
    return i;
}

}  // namespace detail

/// ω_A(b) = Tr(ρ_A b).
inline cplx quasifree_eval(const CarSystem& sys, const Matrix& b) {
    detail::require_car_square(sys, b.rows(), b.cols());
    return (sys.density().cast<cplx>().array() * b.diagonal().array()).sum();
}

inline cplx quasifree_eval(const CarSystem& sys, const SparseMatrix& b) {
    detail::require_car_square(sys, b.rows(), b.cols());
    return detail::state_of(sys, b);
}

struct NPointValue {
    cplx determinant;  // δ_nm det(<A g_i, f_j>)
    cplx direct;       // ω_A(a(f_n)*…a(f_1)* a(g_1)…a(g_m)) in the representation
};

/// n-point function of ω_A for basis vectors f = (e_{f_1},…), g = (e_{g_1},…).
inline NPointValue npoint_determinant(const CarSystem& sys, const std::vector<std::size_t>& f,
                                      const std::vector<std::size_t>& g) {
    for (auto idx : f)
        if (idx >= sys.d()) throw Error(ErrorCode::InvalidArgument, "f index out of range", idx);
    for (auto idx : g)
        if (idx >= sys.d()) throw Error(ErrorCode::InvalidArgument, "g index out of range", idx);

    NPointValue out{cplx(0.0, 0.0), cplx(0.0, 0.0)};
    if (f.size() == g.size()) {
        const auto n = static_cast<Eigen::Index>(f.size());
        Matrix m = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (g[static_cast<std::size_t>(i)] == f[static_cast<std::size_t>(j)])
                    m(i, j) = sys.nu(g[static_cast<std::size_t>(i)]);
        out.determinant = n == 0 ? cplx(1.0, 0.0) : m.determinant();
    }

    SparseMatrix prod = detail::sparse_identity(sys.dim());
    for (std::size_t k = f.size(); k-- > 0;) prod = SparseMatrix(prod * SparseMatrix(sys.a(f[k]).adjoint()));
    for (std::size_t k = 0; k < g.size(); ++k) prod = SparseMatrix(prod * sys.a(g[k]));
    out.direct = detail::state_of(sys, prod);
    return out;
}

/// φ_i^A(b) = ω_A(a_i* b + b a_i*).
inline cplx phi_functional(const CarSystem& sys, std::size_t i, const Matrix& b) {
    detail::require_car_square(sys, b.rows(), b.cols());
    if (i >= sys.d()) throw Error(ErrorCode::InvalidArgument, "mode index out of range", i);
    return detail::trace_product(detail::phi_kernel(sys, i), b);
}

/// Σ y_i ⊗ a_i in M_n ⊗ M_{2^d}.
inline Matrix car_element(const MatrixTuple& y, const CarSystem& sys) {
    if (y.d() != sys.d()) throw Error(ErrorCode::DimensionMismatch, "tuple and CAR system differ in d");
    const Eigen::Index n = y.n(), dim = sys.dim();
    Matrix out = Matrix::Zero(n * dim, n * dim);
    for (std::size_t i = 0; i < y.d(); ++i) {
        const SparseMatrix& a = sys.a(i);
        for (int c = 0; c < a.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(a, c); it; ++it)
                for (Eigen::Index k = 0; k < n; ++k)
                    for (Eigen::Index l = 0; l < n; ++l)
                        out(k * dim + it.row(), l * dim + it.col()) += y[i](k, l) * it.value();
    }
    return out;
}

/// (Id_n ⊗ E_A)(X): x_i = (Id_n ⊗ φ_i^A)(X).
inline MatrixTuple e_map(const CarSystem& sys, const Matrix& x) {
    const Eigen::Index dim = sys.dim();
    if (x.rows() != x.cols() || x.rows() % dim != 0 || x.rows() == 0)
        throw Error(ErrorCode::SizeMismatch, "e_map expects a square matrix of size n*2^d");
    const Eigen::Index n = x.rows() / dim;
    std::vector<Matrix> out(sys.d(), Matrix::Zero(n, n));
    for (std::size_t i = 0; i < sys.d(); ++i) {
        const SparseMatrix h = detail::phi_kernel(sys, i);
        for (int c = 0; c < h.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(h, c); it; ++it)
                for (Eigen::Index k = 0; k < n; ++k)
                    for (Eigen::Index l = 0; l < n; ++l)
                        out[i](k, l) += it.value() * x(k * dim + it.col(), l * dim + it.row());
    }
    return MatrixTuple(std::move(out));
}

/// (Id_n ⊗ ω_A)(X).
inline Matrix partial_state(const CarSystem& sys, const Matrix& x) {
    const Eigen::Index dim = sys.dim();
    if (x.rows() != x.cols() || x.rows() % dim != 0 || x.rows() == 0)
        throw Error(ErrorCode::SizeMismatch, "partial_state expects a square matrix of size n*2^d");
    const Eigen::Index n = x.rows() / dim;
    const RealVector& rho = sys.density();
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l)
            for (Eigen::Index p = 0; p < dim; ++p) out(k, l) += rho(p) * x(k * dim + p, l * dim + p);
    return out;
}

// Identity suites --------------------------------------------------------------

inline constexpr double car_identity_tol = 1e-12;

/// a_i a_j* + a_j* a_i = δ_ij I and a_i a_j + a_j a_i = 0.
inline IdentityReport anticommutation_check(const CarSystem& sys) {
    const auto id = detail::sparse_identity(sys.dim());
    double dev_mixed = 0.0, dev_plain = 0.0;
    for (std::size_t i = 0; i < sys.d(); ++i)
        for (std::size_t j = 0; j < sys.d(); ++j) {
            const SparseMatrix ai = sys.a(i), aj = sys.a(j);
            const SparseMatrix ajs = aj.adjoint();
            SparseMatrix mixed = SparseMatrix(ai * ajs) + SparseMatrix(ajs * ai);
            if (i == j) mixed -= id;
            const SparseMatrix plain = SparseMatrix(ai * aj) + SparseMatrix(aj * ai);
            for (int c = 0; c < mixed.outerSize(); ++c)
                for (SparseMatrix::InnerIterator it(mixed, c); it; ++it)
                    dev_mixed = std::max(dev_mixed, std::abs(it.value()));
            for (int c = 0; c < plain.outerSize(); ++c)
                for (SparseMatrix::InnerIterator it(plain, c); it; ++it)
                    dev_plain = std::max(dev_plain, std::abs(it.value()));
        }
    IdentityReport rep;
    rep.add("car.anticommutation.adjoint", dev_mixed, car_identity_tol);
    rep.add("car.anticommutation", dev_plain, car_identity_tol);
    return rep;
}

/// ρ_A is a state; ω_A(a_i* a_j) = ν_i δ_ij and ω_A(a_i a_j*) = (1-ν_i) δ_ij.
inline IdentityReport second_moment_check(const CarSystem& sys) {
    IdentityReport rep;
    rep.add("car.density.trace", std::abs(sys.density().sum() - 1.0), car_identity_tol);
    rep.add("car.density.positive", std::max(0.0, -sys.density().minCoeff()), car_identity_tol);
    double dev1 = 0.0, dev2 = 0.0;
    for (std::size_t i = 0; i < sys.d(); ++i)
        for (std::size_t j = 0; j < sys.d(); ++j) {
            const SparseMatrix ais = sys.a(i).adjoint(), ajs = sys.a(j).adjoint();
            const cplx v1 = detail::state_of(sys, SparseMatrix(ais * sys.a(j)));
            const cplx v2 = detail::state_of(sys, SparseMatrix(sys.a(i) * ajs));
            dev1 = std::max(dev1, std::abs(v1 - (i == j ? sys.nu(i) : 0.0)));
            dev2 = std::max(dev2, std::abs(v2 - (i == j ? 1.0 - sys.nu(i) : 0.0)));
        }
    rep.add("car.two_point.annihilation_last", dev1, car_identity_tol);
    rep.add("car.two_point.creation_last", dev2, car_identity_tol);
    return rep;
}

/// ω_A(a_i* b) = ν_i φ_i^A(b) and ω_A(b a_i*) = (1-ν_i) φ_i^A(b) for every
/// matrix unit b, plus φ_i^A(a_j) = δ_ij.
inline IdentityReport state_phi_check(const CarSystem& sys) {
    // For b = E_pq: ω(a_i* b) = (ρ a_i*)(q,p), ω(b a_i*) = (a_i* ρ)(q,p), φ_i(b) = H_i(q,p).
    double dev_left = 0.0, dev_right = 0.0, dev_dual = 0.0;
    const RealVector& rho = sys.density();
    for (std::size_t i = 0; i < sys.d(); ++i) {
        const SparseMatrix as = sys.a(i).adjoint();
        SparseMatrix left = as, right = as;
        for (int c = 0; c < as.outerSize(); ++c) {
            SparseMatrix::InnerIterator l(left, c), r(right, c);
            for (SparseMatrix::InnerIterator it(as, c); it; ++it, ++l, ++r) {
                l.valueRef() = rho(it.row()) * it.value();
                r.valueRef() = it.value() * rho(it.col());
            }
        }
        const SparseMatrix h = detail::phi_kernel(sys, i);
        const double nu = sys.nu(i);
        const SparseMatrix dl = left - nu * h;
        const SparseMatrix dr = right - (1.0 - nu) * h;
        for (int c = 0; c < dl.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(dl, c); it; ++it) dev_left = std::max(dev_left, std::abs(it.value()));
        for (int c = 0; c < dr.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(dr, c); it; ++it)
                dev_right = std::max(dev_right, std::abs(it.value()));
        for (std::size_t j = 0; j < sys.d(); ++j) {
            const cplx v = detail::trace_product(h, sys.a(j));
            dev_dual = std::max(dev_dual, std::abs(v - (i == j ? 1.0 : 0.0)));
        }
    }
    IdentityReport rep;
    rep.add("car.state_phi.left", dev_left, car_identity_tol);
    rep.add("car.state_phi.right", dev_right, car_identity_tol);
    rep.add("car.phi_dual_basis", dev_dual, car_identity_tol);
    return rep;
}

/// f_ij = a_i*a_j - δ_ij ν_i I and g_ij = a_i a_j* - δ_ij (1-ν_i) I: centred,
/// mutually orthogonal, with ω_A(f_ij* f_ij) = ω_A(g_ij g_ij*) = ν_j (1-ν_i).
inline IdentityReport orthogonality_check(const CarSystem& sys) {
    const std::size_t d = sys.d();
    const auto id = detail::sparse_identity(sys.dim());
    std::vector<SparseMatrix> f, g;
    f.reserve(d * d);
    g.reserve(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const SparseMatrix ais = sys.a(i).adjoint(), ajs = sys.a(j).adjoint();
            SparseMatrix fij = ais * sys.a(j);
            SparseMatrix gij = sys.a(i) * ajs;
            if (i == j) {
                fij -= sys.nu(i) * id;
                gij -= (1.0 - sys.nu(i)) * id;
            }
            f.push_back(fij);
            g.push_back(gij);
        }

    // <u, v> = ω(u* v) = Σ_{q,p} ρ_p conj(u(q,p)) v(q,p).
    const RealVector& rho = sys.density();
    const auto weighted_inner = [&](const SparseMatrix& u, const SparseMatrix& v) {
        const SparseMatrix prod = u.conjugate().cwiseProduct(v);
        cplx s{0.0, 0.0};
        for (int c = 0; c < prod.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(prod, c); it; ++it) s += rho(it.col()) * it.value();
        return s;
    };
    // ω(c d*) = Tr(ρ c d*) = Σ_{p,q} ρ_p c(p,q) conj(d(p,q)): weight on rows.
    const auto row_weighted_inner = [&](const SparseMatrix& c, const SparseMatrix& dd) {
        const SparseMatrix prod = c.cwiseProduct(dd.conjugate());
        cplx s{0.0, 0.0};
        for (int k = 0; k < prod.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(prod, k); it; ++it) s += rho(it.row()) * it.value();
        return s;
    };

    double dev_centre = 0.0, dev_orth_f = 0.0, dev_orth_g = 0.0, dev_norm_f = 0.0, dev_norm_g = 0.0;
    for (std::size_t a = 0; a < d * d; ++a) {
        dev_centre = std::max({dev_centre, std::abs(detail::state_of(sys, f[a])), std::abs(detail::state_of(sys, g[a]))});
        const std::size_t i = a / d, j = a % d;
        const double expected = sys.nu(j) * (1.0 - sys.nu(i));
        for (std::size_t b = 0; b < d * d; ++b) {
            const cplx vf = weighted_inner(f[a], f[b]);
            const cplx vg = row_weighted_inner(g[a], g[b]);
            if (a == b) {
                dev_norm_f = std::max(dev_norm_f, std::abs(vf - expected));
                dev_norm_g = std::max(dev_norm_g, std::abs(vg - expected));
            } else {
                dev_orth_f = std::max(dev_orth_f, std::abs(vf));
                dev_orth_g = std::max(dev_orth_g, std::abs(vg));
            }
        }
    }
    IdentityReport rep;
    rep.add("car.fg.centred", dev_centre, car_identity_tol);
    rep.add("car.f.orthogonal", dev_orth_f, car_identity_tol);
    rep.add("car.f.norms", dev_norm_f, car_identity_tol);
    rep.add("car.g.orthogonal", dev_orth_g, car_identity_tol);
    rep.add("car.g.norms", dev_norm_g, car_identity_tol);
    return rep;
}

/// Closed form of (Id⊗ω_A)((Y*Y)²) for Y = Σ y_i ⊗ a_i.
inline Matrix car_fourth_moment_column(const MatrixTuple& y, const WeightedSpace& w) {
    const Matrix col = weighted_column_gram(y, w.nu);
    const Matrix row = weighted_row_gram(y, detail::complement(w.nu));
    Matrix out = col * col;
    for (std::size_t j = 0; j < y.d(); ++j) out.noalias() += w.nu[j] * (y[j].adjoint() * row * y[j]);
    return out;
}

/// Closed form of (Id⊗ω_A)((YY*)²).
inline Matrix car_fourth_moment_row(const MatrixTuple& y, const WeightedSpace& w) {
    const Matrix col = weighted_column_gram(y, w.nu);
    const Matrix row = weighted_row_gram(y, detail::complement(w.nu));
    Matrix out = row * row;
    for (std::size_t i = 0; i < y.d(); ++i) out.noalias() += (1.0 - w.nu[i]) * (y[i] * col * y[i].adjoint());
    return out;
}

/// Second and fourth moments of Y = Σ y_i ⊗ a_i computed in M_{n·2^d}
/// against their closed forms, then the PSD moment bounds.
inline IdentityReport fourth_moment_check(const CarSystem& sys, const MatrixTuple& y, double tol = 1e-11) {
    if (y.d() != sys.d()) throw Error(ErrorCode::DimensionMismatch, "tuple and CAR system differ in d");
    const Matrix big = car_element(y, sys);
    const Matrix c = big.adjoint() * big;
    const Matrix r = big * big.adjoint();
    const Matrix m2c = partial_state(sys, c);
    const Matrix m2r = partial_state(sys, r);
    const Matrix m4c = partial_state(sys, c * c);
    const Matrix m4r = partial_state(sys, r * r);

    const WeightedSpace& w = sys.weights();
    const Matrix col = weighted_column_gram(y, w.nu);
    const Matrix row = weighted_row_gram(y, detail::complement(w.nu));
    const Matrix f4c = car_fourth_moment_column(y, w);
    const Matrix f4r = car_fourth_moment_row(y, w);

    IdentityReport rep;
    rep.add("car.moment.second.column", max_abs(m2c - col), tol * (1.0 + op_norm(col)));
    rep.add("car.moment.second.row", max_abs(m2r - row), tol * (1.0 + op_norm(row)));
    rep.add("car.moment.fourth.column", max_abs(m4c - f4c), tol * (1.0 + op_norm(f4c)));
    rep.add("car.moment.fourth.row", max_abs(m4r - f4r), tol * (1.0 + op_norm(f4r)));
    const double k = op_norm(col) + op_norm(row);
    const double scale = 1e-9 * (1.0 + op_norm(f4c) + op_norm(f4r));
    rep.add("car.moment.bound.column", std::max(0.0, -psd_margin(k * m2c, m4c)), scale);
    rep.add("car.moment.bound.row", std::max(0.0, -psd_margin(k * m2r, m4r)), scale);
    return rep;
}

/// All exact CAR identities for one system.
inline IdentityReport car_identity_suite(const CarSystem& sys) {
    IdentityReport rep = anticommutation_check(sys);
    rep.merge(second_moment_check(sys));
    rep.merge(state_phi_check(sys));
    rep.merge(orthogonality_check(sys));
    return rep;
}

}  // namespace nck
