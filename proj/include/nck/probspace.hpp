#pragma once

// Finite probability spaces carrying d complex random variables: exact
// models of Rademacher, Steinhauss and lacunary families, and a seeded
// Monte Carlo model of standard complex Gaussians. Moments are evaluated
// by direct summation over atoms.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nck/limits.hpp"
#include "nck/matcore.hpp"
#include "nck/opnorms.hpp"
#include "nck/report.hpp"

namespace nck {

enum class SpaceKind { Rademacher, Steinhauss, Lacunary, GaussianMC };

constexpr std::string_view to_string(SpaceKind k) noexcept {
    switch (k) {
        case SpaceKind::Rademacher: return "rademacher";
        case SpaceKind::Steinhauss: return "steinhauss";
        case SpaceKind::Lacunary: return "lacunary";
        case SpaceKind::GaussianMC: return "gaussian-mc";
    }
    return "unknown";
}

class DiscreteProbabilitySpace {
public:
    /// `family` is d×m: entry (i, ω) is the value of variable i at atom ω.
    DiscreteProbabilitySpace(SpaceKind kind, std::vector<double> weights, Matrix family,
                             std::optional<std::uint64_t> seed = std::nullopt)
        : kind_(kind), weights_(std::move(weights)), family_(std::move(family)), seed_(seed) {
        if (weights_.empty()) throw Error(ErrorCode::InvalidArgument, "space has no atoms");
        if (static_cast<std::size_t>(family_.cols()) != weights_.size())
            throw Error(ErrorCode::DimensionMismatch, "family columns must match atom count");
        double total = 0.0, carry = 0.0;  // compensated sum
        for (std::size_t w = 0; w < weights_.size(); ++w) {
            if (!(weights_[w] >= 0.0))
                throw Error(ErrorCode::InvalidArgument, "negative atom weight", w);
            const double t = total + weights_[w];
            carry += std::abs(total) >= weights_[w] ? (total - t) + weights_[w] : (weights_[w] - t) + total;
            total = t;
        }
        total += carry;
        if (std::abs(total - 1.0) > 1e-12)
            throw Error(ErrorCode::InvalidArgument, "atom weights do not sum to 1");
        require_finite(family_, "space family");
    }

    SpaceKind kind() const noexcept { return kind_; }
    std::size_t d() const noexcept { return static_cast<std::size_t>(family_.rows()); }
    std::size_t atoms() const noexcept { return weights_.size(); }
    double weight(std::size_t w) const { return weights_[w]; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    cplx value(std::size_t i, std::size_t w) const {
        return family_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w));
    }
    const Matrix& family() const noexcept { return family_; }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }

    /// Exact kinds reproduce every moment used here without sampling error.
    bool is_exact() const noexcept { return kind_ != SpaceKind::GaussianMC; }

private:
    SpaceKind kind_;
    std::vector<double> weights_;
    Matrix family_;
    std::optional<std::uint64_t> seed_;
};

/// {±1}^d with uniform weights; atoms in lexicographic order, +1 first.
inline DiscreteProbabilitySpace rademacher_space(std::size_t d) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "rademacher_space needs d >= 1");
    if (d > max_rademacher_d())
        throw Error(ErrorCode::DTooLarge, "rademacher_space: d=" + std::to_string(d) +
                                              " exceeds cap " + std::to_string(max_rademacher_d()));
    const std::size_t m = std::size_t{1} << d;
    Matrix fam(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (std::size_t w = 0; w < m; ++w)
        for (std::size_t i = 0; i < d; ++i)
            fam(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)) =
                ((w >> (d - 1 - i)) & 1U) ? -1.0 : 1.0;
    return DiscreteProbabilitySpace(SpaceKind::Rademacher, std::vector<double>(m, 1.0 / m), std::move(fam));
}

/// Independent uniform m-th roots of unity; m ≥ 5 makes all moments of
/// degree ≤ 2 per variable exact.
inline DiscreteProbabilitySpace steinhauss_space(std::size_t d, std::size_t order = 5) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "steinhauss_space needs d >= 1");
    if (order < 5) throw Error(ErrorCode::InvalidArgument, "steinhauss_space needs order >= 5");
    std::size_t m = 1;
    for (std::size_t i = 0; i < d; ++i) {
        if (m > max_space_atoms / order)
            throw Error(ErrorCode::SpaceTooLarge, "steinhauss_space: order^d exceeds 2^20 atoms");
        m *= order;
    }
    std::vector<cplx> roots(order);
    for (std::size_t k = 0; k < order; ++k)
        roots[k] = k == 0 ? cplx(1.0, 0.0) : std::polar(1.0, 2.0 * std::numbers::pi * double(k) / double(order));
    Matrix fam(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (std::size_t w = 0; w < m; ++w) {
        std::size_t rest = w;
        for (std::size_t i = d; i-- > 0;) {  // variable 0 is the most significant digit
            fam(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)) = roots[rest % order];
            rest /= order;
        }
    }
    return DiscreteProbabilitySpace(SpaceKind::Steinhauss, std::vector<double>(m, 1.0 / double(m)), std::move(fam));
}

/// e_j(t) = exp(i 2^j t), j = 1..d, on the uniform grid t_k = 2πk/N with N = 2^{d+3}.
inline DiscreteProbabilitySpace lacunary_space(std::size_t d) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "lacunary_space needs d >= 1");
    if (d + 3 > 20) throw Error(ErrorCode::SpaceTooLarge, "lacunary_space: grid 2^(d+3) exceeds 2^20 points");
    const std::size_t n = std::size_t{1} << (d + 3);
    Matrix fam(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 1; j <= d; ++j) {
            const std::size_t phase = ((std::size_t{1} << j) * k) % n;  // exact reduction mod 2π
            fam(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(k)) =
                phase == 0 ? cplx(1.0, 0.0) : std::polar(1.0, 2.0 * std::numbers::pi * double(phase) / double(n));
        }
    return DiscreteProbabilitySpace(SpaceKind::Lacunary, std::vector<double>(n, 1.0 / double(n)), std::move(fam));
}

/// Equal-weight sample of d i.i.d. standard complex Gaussians (E|γ|² = 1).
/// `allow_small` lifts the 1000-sample floor for failure-mode experiments.
inline DiscreteProbabilitySpace gaussian_space(std::size_t d, std::size_t samples, std::uint64_t seed,
                                               bool allow_small = false) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "gaussian_space needs d >= 1");
    if (samples < 1 || (!allow_small && samples < 1000))
        throw Error(ErrorCode::InvalidArgument, "gaussian_space needs at least 1000 samples");
    if (d * samples > 64 * max_space_atoms)
        throw Error(ErrorCode::SpaceTooLarge, "gaussian_space: d*samples too large");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Matrix fam(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(samples));
    for (std::size_t w = 0; w < samples; ++w)
        for (std::size_t i = 0; i < d; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            fam(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)) = cplx(re, im);
        }
    return DiscreteProbabilitySpace(SpaceKind::GaussianMC, std::vector<double>(samples, 1.0 / double(samples)),
                                    std::move(fam), seed);
}

/// An element of M_n(L^∞(Ω)): one n×n block per atom. Holds a non-owning
/// pointer to its space, which must outlive it.
class RandomElement {
public:
    RandomElement(const DiscreteProbabilitySpace& space, std::vector<Matrix> blocks)
        : space_(&space), blocks_(std::move(blocks)) {
        if (blocks_.size() != space.atoms())
            throw Error(ErrorCode::DimensionMismatch, "random element needs one block per atom");
        n_ = blocks_.front().rows();
        for (std::size_t w = 0; w < blocks_.size(); ++w)
            if (blocks_[w].rows() != n_ || blocks_[w].cols() != n_)
                throw Error(ErrorCode::DimensionMismatch, "block shapes differ", w);
    }

    static RandomElement zero(const DiscreteProbabilitySpace& space, Eigen::Index n) {
        return RandomElement(space, std::vector<Matrix>(space.atoms(), Matrix::Zero(n, n)));
    }
    static RandomElement constant(const DiscreteProbabilitySpace& space, const Matrix& m) {
        return RandomElement(space, std::vector<Matrix>(space.atoms(), m));
    }

    const DiscreteProbabilitySpace& space() const noexcept { return *space_; }
    Eigen::Index n() const noexcept { return n_; }
    std::size_t atoms() const noexcept { return blocks_.size(); }
    const Matrix& operator[](std::size_t w) const { return blocks_[w]; }
    Matrix& operator[](std::size_t w) { return blocks_[w]; }
    const std::vector<Matrix>& blocks() const noexcept { return blocks_; }

    RandomElement& operator+=(const RandomElement& o) {
        if (o.space_ != space_ || o.n_ != n_)
            throw Error(ErrorCode::DimensionMismatch, "random elements live on different spaces");
        for (std::size_t w = 0; w < blocks_.size(); ++w) blocks_[w] += o.blocks_[w];
        return *this;
    }
    RandomElement& operator*=(cplx s) {
        for (auto& b : blocks_) b *= s;
        return *this;
    }

private:
    const DiscreteProbabilitySpace* space_;
    std::vector<Matrix> blocks_;
    Eigen::Index n_ = 0;
};

namespace detail {
inline void require_space_d(std::size_t d, const DiscreteProbabilitySpace& s) {
    if (d != s.d())
        throw Error(ErrorCode::DimensionMismatch, "tuple has d=" + std::to_string(d) +
                                                      " but space carries " + std::to_string(s.d()) +
                                                      " variables");
}
}  // namespace detail

/// Y = Σ y_i ⊗ ξ_i, evaluated atom by atom.
inline RandomElement random_sum(const MatrixTuple& y, const DiscreteProbabilitySpace& space) {
    detail::require_space_d(y.d(), space);
    std::vector<Matrix> blocks(space.atoms(), Matrix::Zero(y.n(), y.n()));
    for (std::size_t w = 0; w < space.atoms(); ++w)
        for (std::size_t i = 0; i < y.d(); ++i) blocks[w] += space.value(i, w) * y[i];
    return RandomElement(space, std::move(blocks));
}

struct Estimate {
    double mean = 0.0;
    double std_err = 0.0;  // zero for exact spaces
};

/// ‖Σ x_i ⊗ ξ_i‖ in L¹(Ω; S₁ⁿ). Exact for finite kinds, MC mean ± standard error otherwise.
inline Estimate l1_s1_norm(const MatrixTuple& x, const DiscreteProbabilitySpace& space) {
    detail::require_space_d(x.d(), space);
    const Eigen::Index n = x.n();
    double mean = 0.0, sq = 0.0;
    Matrix block(n, n);
    for (std::size_t w = 0; w < space.atoms(); ++w) {
        block.setZero();
        for (std::size_t i = 0; i < x.d(); ++i) block += space.value(i, w) * x[i];
        const double t = trace_norm(block);
        mean += space.weight(w) * t;
        sq += space.weight(w) * t * t;
    }
    Estimate e{mean, 0.0};
    if (!space.is_exact() && space.atoms() > 1) {
        const double m = double(space.atoms());
        const double var = std::max(0.0, sq - mean * mean) * m / (m - 1.0);
        e.std_err = std::sqrt(var / m);
    }
    return e;
}

/// Γ(d + ½)/Γ(d) = E(Σ_{i≤d} |γ_i|²)^½ for standard complex Gaussians.
inline double gamma_ratio(double d) {
    if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma_ratio needs d > 0");
    return std::exp(std::lgamma(d + 0.5) - std::lgamma(d));
}

/// x_i = E(X · conj(ξ_i)).
inline MatrixTuple conditional_expectation(const RandomElement& x) {
    const auto& s = x.space();
    std::vector<Matrix> out(s.d(), Matrix::Zero(x.n(), x.n()));
    for (std::size_t w = 0; w < s.atoms(); ++w)
        for (std::size_t i = 0; i < s.d(); ++i) out[i] += (s.weight(w) * std::conj(s.value(i, w))) * x[w];
    return MatrixTuple(std::move(out));
}

/// max_ω ‖X(ω)‖. For a sampled space this is only a lower estimate of the L^∞ norm.
inline double sup_norm(const RandomElement& x) {
    double m = 0.0;
    for (const auto& b : x.blocks()) m = std::max(m, op_norm(b));
    return m;
}

// Closed forms of (Id⊗E)((Y*Y)²) and (Id⊗E)((YY*)²) for Y = Σ y_i ⊗ ξ_i.

inline Matrix fourth_moment_column(const MatrixTuple& y, SpaceKind kind) {
    const Matrix col = column_gram(y);
    const Matrix row = row_gram(y);
    Matrix out = col * col;
    switch (kind) {
        case SpaceKind::GaussianMC:
        case SpaceKind::Steinhauss:
        case SpaceKind::Lacunary:
            for (std::size_t i = 0; i < y.d(); ++i) out.noalias() += y[i].adjoint() * row * y[i];
            if (kind != SpaceKind::GaussianMC)
                for (std::size_t i = 0; i < y.d(); ++i) {
                    const Matrix g = y[i].adjoint() * y[i];
                    out.noalias() -= g * g;
                }
            break;
        case SpaceKind::Rademacher:
            for (std::size_t i = 0; i < y.d(); ++i) {
                out.noalias() += y[i].adjoint() * row * y[i];
                for (std::size_t j = 0; j < y.d(); ++j) {
                    const Matrix g = y[i].adjoint() * y[j];
                    out.noalias() += g * g;
                }
                const Matrix g = y[i].adjoint() * y[i];
                out.noalias() -= 2.0 * (g * g);
            }
            break;
    }
    return out;
}

inline Matrix fourth_moment_row(const MatrixTuple& y, SpaceKind kind) {
    const Matrix col = column_gram(y);
    const Matrix row = row_gram(y);
    Matrix out = row * row;
    switch (kind) {
        case SpaceKind::GaussianMC:
        case SpaceKind::Steinhauss:
        case SpaceKind::Lacunary:
            for (std::size_t i = 0; i < y.d(); ++i) out.noalias() += y[i] * col * y[i].adjoint();
            if (kind != SpaceKind::GaussianMC)
                for (std::size_t i = 0; i < y.d(); ++i) {
                    const Matrix g = y[i] * y[i].adjoint();
                    out.noalias() -= g * g;
                }
            break;
        case SpaceKind::Rademacher:
            for (std::size_t i = 0; i < y.d(); ++i) {
                out.noalias() += y[i] * col * y[i].adjoint();
                for (std::size_t j = 0; j < y.d(); ++j) {
                    const Matrix g = y[i] * y[j].adjoint();
                    out.noalias() += g * g;
                }
                const Matrix g = y[i] * y[i].adjoint();
                out.noalias() -= 2.0 * (g * g);
            }
            break;
    }
    return out;
}

/// Second and fourth moments of Y = Σ y_i ⊗ ξ_i by atom summation, compared
/// with their closed forms, followed by the PSD moment bounds. Exact kinds
/// use a relative tolerance of 1e-12; sampled spaces use four standard errors.
inline IdentityReport moment_identity_check(const MatrixTuple& y, const DiscreteProbabilitySpace& space) {
    detail::require_space_d(y.d(), space);
    const Eigen::Index n = y.n();
    Matrix m2c = Matrix::Zero(n, n), m2r = Matrix::Zero(n, n);
    Matrix m4c = Matrix::Zero(n, n), m4r = Matrix::Zero(n, n);
    // Entrywise second moments of the summands, for standard errors.
    Eigen::MatrixXd s2c = Eigen::MatrixXd::Zero(n, n), s2r = s2c, s4c = s2c, s4r = s2c;
    Matrix yw(n, n);
    for (std::size_t w = 0; w < space.atoms(); ++w) {
        yw.setZero();
        for (std::size_t i = 0; i < y.d(); ++i) yw += space.value(i, w) * y[i];
        const Matrix c = yw.adjoint() * yw;
        const Matrix r = yw * yw.adjoint();
        const Matrix c2 = c * c;
        const Matrix r2 = r * r;
        const double p = space.weight(w);
        m2c += p * c;
        m2r += p * r;
        m4c += p * c2;
        m4r += p * r2;
        if (!space.is_exact()) {
            s2c += p * c.cwiseAbs2();
            s2r += p * r.cwiseAbs2();
            s4c += p * c2.cwiseAbs2();
            s4r += p * r2.cwiseAbs2();
        }
    }

    const Matrix col = column_gram(y);
    const Matrix row = row_gram(y);
    const Matrix f4c = fourth_moment_column(y, space.kind());
    const Matrix f4r = fourth_moment_row(y, space.kind());

    const auto threshold = [&](const Matrix& closed, const Matrix& mean, const Eigen::MatrixXd& sq) {
        if (space.is_exact()) return 1e-12 * (1.0 + op_norm(closed));
        const double m = double(space.atoms());
        const double var = (sq - mean.cwiseAbs2()).maxCoeff();
        return 4.0 * std::sqrt(std::max(0.0, var) / m) + 1e-12 * (1.0 + op_norm(closed));
    };

    IdentityReport rep;
    rep.add("moments.second.column", max_abs(m2c - col), threshold(col, m2c, s2c));
    rep.add("moments.second.row", max_abs(m2r - row), threshold(row, m2r, s2r));
    rep.add("moments.fourth.column", max_abs(m4c - f4c), threshold(f4c, m4c, s4c));
    rep.add("moments.fourth.row", max_abs(m4r - f4r), threshold(f4r, m4r, s4r));

    // PSD bounds, applied to the closed forms (identical to the atom sums above).
    const double psd_tol_scale = 1.0 + op_norm(f4c) + op_norm(f4r);
    if (space.kind() == SpaceKind::Rademacher) {
        const double t = triple_norm(y);
        const double k = 3.0 * t * t;
        rep.add("moments.bound.column.factor3", std::max(0.0, -psd_margin(k * col, f4c)), 1e-9 * psd_tol_scale);
        rep.add("moments.bound.row.factor3", std::max(0.0, -psd_margin(k * row, f4r)), 1e-9 * psd_tol_scale);
    } else {
        const double k = op_norm(col) + op_norm(row);
        rep.add("moments.bound.column", std::max(0.0, -psd_margin(k * col, f4c)), 1e-9 * psd_tol_scale);
        rep.add("moments.bound.row", std::max(0.0, -psd_margin(k * row, f4r)), 1e-9 * psd_tol_scale);
    }
    return rep;
}

}  // namespace nck
