#pragma once

// Lifting by a geometric series of truncation corrections: given x, build
// X with (Id⊗E)(X) = x and ‖X‖ ≤ C/(1-δ)·‖x‖. Each step normalizes the
// current residual w_k, truncates Σ w_k,i ⊗ ξ_i at level C, and subtracts
// the expectation of the truncated element.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "nck/car.hpp"
#include "nck/matcore.hpp"
#include "nck/opnorms.hpp"
#include "nck/probspace.hpp"
#include "nck/report.hpp"

namespace nck {

struct LiftConfig {
    double C = 1.0 / std::numbers::sqrt2;
    double delta = 0.5;
    std::size_t max_iter = 64;
    double tol = 1e-10;         // stop once the residual is ≤ tol·‖x‖
    double stall_slack = 0.05;  // a step must contract by δ + slack

    double constant() const { return C / (1.0 - delta); }

    void validate() const {
        if (!(C > 0.0) || !std::isfinite(C)) throw Error(ErrorCode::NonPositiveC, "lift level C must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
        if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    }

    /// C = 1/√2 (K = √2) for Gaussian, Steinhauss and lacunary families; C = √3/2 (K = √3) for Rademacher.
    static LiftConfig preset(SpaceKind kind) {
        LiftConfig c;
        if (kind == SpaceKind::Rademacher) c.C = std::sqrt(3.0) / 2.0;
        return c;
    }
    /// C = 1/√2, K = √2.
    static LiftConfig car() { return LiftConfig{}; }
};

template <class Element>
struct Correction {
    Element Z;
    MatrixTuple z;
};

template <class Element>
struct LiftReport {
    Element X;
    std::vector<double> residual_history;  // t_0 = ‖x‖, t_k = ‖w_k‖
    std::vector<double> step_norms;        // ‖t_k Z_k‖
    double achieved_norm = 0.0;
    double target_norm = 0.0;
    double ratio = 0.0;
    double reconstruction_error = 0.0;  // max entry of (Id⊗E)(X) - x
    std::size_t iterations = 0;
};

/// A lifting setting supplies the norm on coefficients, the big algebra and
/// the one-step corrector.
template <class S>
concept LiftSetting = requires(const S& s, const MatrixTuple& y, double c, typename S::Element& e,
                               const typename S::Element& ce) {
    { s.norm(y) } -> std::convertible_to<double>;
    { s.zero(Eigen::Index{}) } -> std::same_as<typename S::Element>;
    { s.correct(y, c) } -> std::same_as<Correction<typename S::Element>>;
    { s.element_norm(ce) } -> std::convertible_to<double>;
    { s.expectation(ce) } -> std::same_as<MatrixTuple>;
    s.accumulate(e, ce, c);
};

/// Random variables on a finite probability space; norm |||·|||.
class CommutativeSetting {
public:
    using Element = RandomElement;

    /// Sampled spaces carry no guarantee and are refused unless `experimental`.
    explicit CommutativeSetting(const DiscreteProbabilitySpace& space, bool experimental = false)
        : space_(&space) {
        if (!space.is_exact() && !experimental)
            throw Error(ErrorCode::InvalidArgument,
                        "lifting on a sampled Gaussian space requires experimental mode");
    }

    const DiscreteProbabilitySpace& space() const noexcept { return *space_; }

    double norm(const MatrixTuple& y) const { return triple_norm(y); }
    Element zero(Eigen::Index n) const { return RandomElement::zero(*space_, n); }
    double element_norm(const Element& e) const { return sup_norm(e); }
    MatrixTuple expectation(const Element& e) const { return conditional_expectation(e); }
    void accumulate(Element& acc, const Element& z, double scale) const {
        for (std::size_t w = 0; w < acc.atoms(); ++w) acc[w] += scale * z[w];
    }

    Correction<Element> correct(const MatrixTuple& y, double c) const {
        RandomElement big = random_sum(y, *space_);
        for (std::size_t w = 0; w < big.atoms(); ++w) big[w] = truncate_offdiag(big[w], c);
        MatrixTuple z = conditional_expectation(big);
        return {std::move(big), std::move(z)};
    }

private:
    const DiscreteProbabilitySpace* space_;
};

/// Elements of M_n ⊗ M_{2^d} with the quasi-free state; norm |||·|||_A.
class CarSetting {
public:
    using Element = Matrix;

    explicit CarSetting(const CarSystem& sys) : sys_(&sys) {}

    const CarSystem& system() const noexcept { return *sys_; }

    double norm(const MatrixTuple& y) const { return weighted_triple_norm(y, sys_->weights()); }
    Element zero(Eigen::Index n) const { return Matrix::Zero(n * sys_->dim(), n * sys_->dim()); }
    double element_norm(const Element& e) const { return op_norm(e); }
    MatrixTuple expectation(const Element& e) const { return e_map(*sys_, e); }
    void accumulate(Element& acc, const Element& z, double scale) const { acc += scale * z; }

    Correction<Element> correct(const MatrixTuple& y, double c) const {
        Matrix z = truncate_offdiag(car_element(y, *sys_), c);
        MatrixTuple t = e_map(*sys_, z);
        return {std::move(z), std::move(t)};
    }

private:
    const CarSystem* sys_;
};

/// One truncation step on Σ y_i ⊗ ξ_i: the truncated element Z and z = E(Z).
inline Correction<RandomElement> corrector_commutative(const MatrixTuple& y, const DiscreteProbabilitySpace& space,
                                                       double c, bool experimental = false) {
    return CommutativeSetting(space, experimental).correct(y, c);
}

inline Correction<Matrix> corrector_car(const MatrixTuple& y, const CarSystem& sys, double c) {
    return CarSetting(sys).correct(y, c);
}

/// Geometric-series lift of x. Throws StalledIteration (with the step index)
/// when a step fails to contract by δ + slack.
template <LiftSetting S>
LiftReport<typename S::Element> lift(const MatrixTuple& x, const S& setting, const LiftConfig& cfg) {
    cfg.validate();
    if (!x.all_finite()) throw Error(ErrorCode::NonFinite, "lift input has non-finite entries");
    LiftReport<typename S::Element> rep{setting.zero(x.n()), {}, {}, 0.0, 0.0, 0.0, 0.0, 0};
    const double t0 = setting.norm(x);
    rep.target_norm = t0;
    rep.residual_history.push_back(t0);
    if (t0 == 0.0) return rep;

    MatrixTuple w = x;
    double t = t0;
    for (std::size_t k = 0; k < cfg.max_iter && t > cfg.tol * t0; ++k) {
        const MatrixTuple y = (1.0 / t) * w;
        const auto step = setting.correct(y, cfg.C);
        setting.accumulate(rep.X, step.Z, t);
        rep.step_norms.push_back(t * setting.element_norm(step.Z));
        w -= t * step.z;
        const double next = setting.norm(w);
        rep.iterations = k + 1;
        if (next > (cfg.delta + cfg.stall_slack) * t)
            throw Error(ErrorCode::StalledIteration,
                        "residual " + std::to_string(next) + " did not contract from " + std::to_string(t) +
                            " at step " + std::to_string(k),
                        k);
        rep.residual_history.push_back(next);
        t = next;
    }
    rep.achieved_norm = setting.element_norm(rep.X);
    rep.ratio = rep.achieved_norm / t0;
    rep.reconstruction_error = setting.expectation(rep.X).max_abs_diff(x);
    return rep;
}

struct QuotientBracket {
    double lower = 0.0;  // norm of x: no preimage under E has smaller norm
    double upper = 0.0;  // norm of the lift
    double constant = 0.0;
    bool passed = true;  // lower ≤ upper ≤ K·lower
};

template <LiftSetting S>
QuotientBracket quotient_norm_bracket(const MatrixTuple& x, const S& setting, const LiftConfig& cfg) {
    const auto rep = lift(x, setting, cfg);
    QuotientBracket b{rep.target_norm, rep.achieved_norm, cfg.constant(), true};
    const double slack = 1e-9 * (1.0 + b.lower);
    b.passed = b.lower <= b.upper + slack && b.upper <= b.constant * b.lower * (1.0 + cfg.tol) + slack;
    return b;
}

/// (Y-Z)*(Y-Z) ⪯ (Y*Y)²/(16C²) and (Y-Z)(Y-Z)* ⪯ (YY*)²/(16C²) for
/// Z = truncate_offdiag(Y, C); entries report the PSD deficit.
inline IdentityReport truncation_bound_check(const Matrix& y, double c) {
    const Matrix z = truncate_offdiag(y, c);
    const Matrix r = y - z;
    const Matrix yy = y.adjoint() * y;
    const Matrix yyr = y * y.adjoint();
    const double k = 1.0 / (16.0 * c * c);
    const Matrix lhs_c = r.adjoint() * r, rhs_c = k * (yy * yy);
    const Matrix lhs_r = r * r.adjoint(), rhs_r = k * (yyr * yyr);
    IdentityReport rep;
    rep.add("truncation.norm", std::max(0.0, op_norm(z) - c), 1e-9);
    rep.add("truncation.bound.column", std::max(0.0, -psd_margin(rhs_c, lhs_c)),
            1e-9 * (1.0 + op_norm(rhs_c) + op_norm(lhs_c)));
    rep.add("truncation.bound.row", std::max(0.0, -psd_margin(rhs_r, lhs_r)),
            1e-9 * (1.0 + op_norm(rhs_r) + op_norm(lhs_r)));
    return rep;
}

}  // namespace nck
