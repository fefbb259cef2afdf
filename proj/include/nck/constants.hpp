#pragma once

// Best-constant experiments: witness sequences for the Gaussian and CAR
// Khintchine constants and a seeded random search over tuple ensembles.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nck/car.hpp"
#include "nck/matcore.hpp"
#include "nck/opnorms.hpp"
#include "nck/probspace.hpp"
#include "nck/report.hpp"

namespace nck {

/// √(m+1)/√(2m+1), an upper bound for c₁ decreasing to 1/√2.
inline double gaussian_c1_bound_sequence(double m) {
    if (!(m >= 1.0)) throw Error(ErrorCode::InvalidArgument, "bound sequence needs m >= 1");
    return std::sqrt(m + 1.0) / std::sqrt(2.0 * m + 1.0);
}

/// x_i = e_{i1} in M_d, the extremal tuple for the upper constant.
inline MatrixTuple column_units(std::size_t d) {
    std::vector<Matrix> v(d, Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    for (std::size_t i = 0; i < d; ++i) v[i](static_cast<Eigen::Index>(i), 0) = 1.0;
    return MatrixTuple(std::move(v));
}

/// ‖Σ e_{i1} ⊗ γ_i‖_{L¹(S₁)} / √d by Monte Carlo (√d bounds the dual norm of {e_{i1}} from above).
inline Estimate c2_witness_gaussian(std::size_t d, std::size_t samples, std::uint64_t seed) {
    const auto space = gaussian_space(d, samples, seed);
    const Estimate e = l1_s1_norm(column_units(d), space);
    const double s = std::sqrt(double(d));
    return {e.mean / s, e.std_err / s};
}

/// Γ(d+½)/(Γ(d)√d), the exact value of the witness above.
inline double c2_witness_exact(std::size_t d) { return gamma_ratio(double(d)) / std::sqrt(double(d)); }

/// MC estimate of E(Σ_{i≤d} |γ_i|²)^½.
inline Estimate gaussian_norm_moment(std::size_t d, std::size_t samples, std::uint64_t seed) {
    const auto space = gaussian_space(d, samples, seed);
    double mean = 0.0, sq = 0.0;
    for (std::size_t w = 0; w < space.atoms(); ++w) {
        const double r = space.family().col(static_cast<Eigen::Index>(w)).norm();
        mean += space.weight(w) * r;
        sq += space.weight(w) * r * r;
    }
    const double m = double(space.atoms());
    return {mean, std::sqrt(std::max(0.0, sq - mean * mean) * m / (m - 1.0) / m)};
}

struct CarC1Witness {
    double phi_norm = 0.0;   // ‖φ_1^A‖ in the dual of the CAR algebra
    double dual_norm = 0.0;  // weighted dual norm of x_1 = 1
    double ratio = 0.0;
    IdentityReport report;
};

/// n = d = 1, ν = ½: ‖φ_1^A‖ = 1 and |||1|||* = √2, so the ratio is 1/√2.
inline CarC1Witness car_c1_witness() {
    const CarSystem sys{WeightedSpace({0.5})};
    // φ_1(b) = Tr(H b), so its norm on the algebra is the trace norm of H.
    const Matrix h = detail::phi_kernel(sys, 0);
    CarC1Witness w;
    w.phi_norm = trace_norm(h);
    Matrix one(1, 1);
    one(0, 0) = 1.0;
    w.dual_norm = dual_norm(MatrixTuple({one}), sys.weights()).value;
    w.ratio = w.phi_norm / w.dual_norm;
    w.report.add("car.c1.phi_norm", std::abs(w.phi_norm - 1.0), 1e-12);
    w.report.add("car.c1.dual_norm", std::abs(w.dual_norm - std::numbers::sqrt2), 1e-6);
    w.report.add("car.c1.ratio", std::abs(w.ratio - 1.0 / std::numbers::sqrt2), 1e-6);
    return w;
}

struct CarC2Value {
    std::optional<double> matrix_value;  // absent when d exceeds the CAR cap
    double binomial_value = 0.0;
};

/// √(2/d)·τ((Σ a_i a_i*)^½) at ν ≡ ½, in the algebra (d within the CAR cap)
/// and from the binomial law of Σ a_i a_i* (d ≤ 60).
inline CarC2Value car_c2_sequence(std::size_t d, bool with_matrix = true) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "car_c2_sequence needs d >= 1");
    if (d > 60) throw Error(ErrorCode::DTooLarge, "car_c2_sequence binomial mode supports d <= 60");
    CarC2Value out;
    double sum = 0.0, binom = 1.0;  // binom = C(d, k)
    for (std::size_t k = 0; k <= d; ++k) {
        sum += binom * std::sqrt(double(k));
        binom = binom * double(d - k) / double(k + 1);
    }
    const double scale = std::sqrt(2.0 / double(d));
    out.binomial_value = scale * sum / std::ldexp(1.0, static_cast<int>(d));
    if (with_matrix && d <= max_car_d()) {
        const auto gens = jordan_wigner(d);
        const auto dim = static_cast<Eigen::Index>(std::size_t{1} << d);
        SparseMatrix s(dim, dim);
        for (const auto& a : *gens) s += SparseMatrix(a * SparseMatrix(a.adjoint()));
        const Matrix root = mat_func(Matrix(s), [](double t) { return std::sqrt(std::max(0.0, t)); });
        out.matrix_value = scale * root.trace().real() / double(dim);
    }
    return out;
}

enum class Ensemble { GaussianEntries, PartialIsometry, MatrixUnits };

constexpr std::string_view to_string(Ensemble e) noexcept {
    switch (e) {
        case Ensemble::GaussianEntries: return "gaussian-entries";
        case Ensemble::PartialIsometry: return "partial-isometry";
        case Ensemble::MatrixUnits: return "matrix-units";
    }
    return "unknown";
}

/// Random tuple from one of the search ensembles.
inline MatrixTuple random_tuple(Ensemble ens, std::size_t d, Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<Eigen::Index> idx(0, n - 1);
    std::vector<Matrix> v(d, Matrix::Zero(n, n));
    for (auto& m : v) {
        switch (ens) {
            case Ensemble::GaussianEntries:
                for (Eigen::Index a = 0; a < n; ++a)
                    for (Eigen::Index b = 0; b < n; ++b) m(a, b) = cplx(normal(rng), normal(rng));
                break;
            case Ensemble::PartialIsometry: {
                Matrix g(n, n);
                for (Eigen::Index a = 0; a < n; ++a)
                    for (Eigen::Index b = 0; b < n; ++b) g(a, b) = cplx(normal(rng), normal(rng));
                Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
                std::uniform_int_distribution<Eigen::Index> rank(1, n);
                const Eigen::Index r = rank(rng);
                m = svd.matrixU().leftCols(r) * svd.matrixV().leftCols(r).adjoint();
                break;
            }
            case Ensemble::MatrixUnits: {
                const Eigen::Index p = idx(rng), q = idx(rng);
                m(p, q) = 1.0;
                break;
            }
        }
    }
    return MatrixTuple(std::move(v));
}

struct ConstantReport {
    SpaceKind family = SpaceKind::Rademacher;
    double lower_witness = 0.0;  // min of L¹(S₁) norm / dual norm over trials
    double upper_witness = 0.0;  // max of the same
    double lower_std_err = 0.0;  // standard error of the minimizing ratio (sampled spaces)
    double c1 = 0.0;             // theoretical lower constant
    double c2 = 1.0;             // theoretical upper constant
    double tolerance = 0.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    bool passed = true;
};

/// Theoretical lower constant for each family (for Rademacher the known lower bound 1/√3).
inline double theoretical_c1(SpaceKind kind) {
    return kind == SpaceKind::Rademacher ? 1.0 / std::sqrt(3.0) : 1.0 / std::numbers::sqrt2;
}

inline DiscreteProbabilitySpace make_space(SpaceKind kind, std::size_t d, std::size_t samples, std::uint64_t seed) {
    switch (kind) {
        case SpaceKind::Rademacher: return rademacher_space(d);
        case SpaceKind::Steinhauss: return steinhauss_space(d);
        case SpaceKind::Lacunary: return lacunary_space(d);
        case SpaceKind::GaussianMC: return gaussian_space(d, samples, seed);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown space kind");
}

/// Ratios ‖Σ x_i ⊗ ξ_i‖_{L¹(S₁)} / |||x|||* over random tuples cycling through
/// the ensembles. Trials run in index order from one seeded generator.
inline ConstantReport random_search_ratio(SpaceKind kind, Eigen::Index n, std::size_t d, std::size_t trials,
                                          std::uint64_t seed, std::size_t samples = 20000) {
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "random search needs at least one trial");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "random search needs n >= 1");
    const auto space = make_space(kind, d, samples, seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 rng(seed);
    ConstantReport rep;
    rep.family = kind;
    rep.c1 = theoretical_c1(kind);
    rep.trials = trials;
    rep.seed = seed;
    rep.lower_witness = std::numeric_limits<double>::infinity();
    rep.upper_witness = 0.0;
    const double solver_tol = 1e-5;
    bool ok = true;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto ens = static_cast<Ensemble>(t % 3);
        const MatrixTuple x = random_tuple(ens, d, n, rng);
        const auto dual = dual_norm(x);
        if (!(dual.value > 0.0)) continue;
        const Estimate l1 = l1_s1_norm(x, space);
        const double ratio = l1.mean / dual.value;
        const double err = l1.std_err / dual.value;
        // The dual value may exceed the true norm by its gap, which lowers the ratio.
        const double tol = solver_tol + dual.gap / dual.value + 3.0 * err;
        if (ratio < rep.lower_witness) {
            rep.lower_witness = ratio;
            rep.lower_std_err = err;
        }
        rep.upper_witness = std::max(rep.upper_witness, ratio);
        rep.tolerance = std::max(rep.tolerance, tol);
        if (ratio < rep.c1 - tol || ratio > rep.c2 + tol) ok = false;
    }
    rep.passed = ok;
    return rep;
}

}  // namespace nck
