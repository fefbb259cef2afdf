#pragma once

// Command implementations behind the `nck` executable: tuple-file I/O and
// the norm / lift / verify / constants commands producing JSON or CSV
// reports. Every report carries the run seed.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nck/car.hpp"
#include "nck/constants.hpp"
#include "nck/lifting.hpp"
#include "nck/opnorms.hpp"
#include "nck/probspace.hpp"
#include "nck/report.hpp"

namespace nck::cli {

using json = nlohmann::ordered_json;

enum class Format { Json, Csv };

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t samples = 20000;
    std::string out;  // empty: stdout
    Format format = Format::Json;
};

enum Exit : int { Pass = 0, AssertionFailed = 1, UsageError = 2 };

struct CommandResult {
    int exit_code = Pass;
    json report;
};

// Tuple files --------------------------------------------------------------------

struct TupleFile {
    MatrixTuple x;
    std::optional<WeightedSpace> nu;
    json metadata;
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::ParseError, where + ": " + what);
}

inline std::size_t parse_count(const json& j, const char* key) {
    if (!j.contains(key)) parse_fail(key, "missing field");
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) parse_fail(key, "expected a positive integer");
    return v.get<std::size_t>();
}

}  // namespace detail

/// Parses {"version": "1", "d", "n", "matrices": d×n×n×[re, im], "nu"?, "metadata"?}.
inline TupleFile parse_tuple_file(const json& j) {
    if (!j.is_object()) detail::parse_fail("<root>", "expected a JSON object");
    if (!j.contains("version") || j.at("version") != "1") detail::parse_fail("version", "expected \"1\"");
    const std::size_t d = detail::parse_count(j, "d");
    const std::size_t n = detail::parse_count(j, "n");
    if (!j.contains("matrices")) detail::parse_fail("matrices", "missing field");
    const auto& mats = j.at("matrices");
    if (!mats.is_array() || mats.size() != d)
        detail::parse_fail("matrices", "expected an array of " + std::to_string(d) + " matrices");
    std::vector<Matrix> out;
    out.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
        const std::string pi = "matrices[" + std::to_string(i) + "]";
        const auto& m = mats[i];
        if (!m.is_array() || m.size() != n) detail::parse_fail(pi, "expected " + std::to_string(n) + " rows");
        Matrix mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r) {
            const std::string pr = pi + "[" + std::to_string(r) + "]";
            const auto& row = m[r];
            if (!row.is_array() || row.size() != n) detail::parse_fail(pr, "expected " + std::to_string(n) + " entries");
            for (std::size_t c = 0; c < n; ++c) {
                const std::string pc = pr + "[" + std::to_string(c) + "]";
                const auto& e = row[c];
                if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                    detail::parse_fail(pc, "expected a [re, im] pair of numbers");
                const cplx v(e[0].get<double>(), e[1].get<double>());
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) detail::parse_fail(pc, "non-finite entry");
                mat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
            }
        }
        out.push_back(std::move(mat));
    }
    TupleFile tf{MatrixTuple(std::move(out)), std::nullopt, json::object()};
    if (j.contains("nu")) {
        const auto& nu = j.at("nu");
        if (!nu.is_array() || nu.size() != d) detail::parse_fail("nu", "expected an array of " + std::to_string(d) + " weights");
        std::vector<double> w(d);
        for (std::size_t i = 0; i < d; ++i) {
            if (!nu[i].is_number()) detail::parse_fail("nu[" + std::to_string(i) + "]", "expected a number");
            w[i] = nu[i].get<double>();
            if (!(w[i] >= 0.0 && w[i] <= 1.0)) detail::parse_fail("nu[" + std::to_string(i) + "]", "weight outside [0, 1]");
        }
        tf.nu = WeightedSpace(std::move(w));
    }
    if (j.contains("metadata")) tf.metadata = j.at("metadata");
    return tf;
}

inline TupleFile read_tuple_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
    return parse_tuple_file(j);
}

inline json to_json(const TupleFile& tf) {
    json j;
    j["version"] = "1";
    j["d"] = tf.x.d();
    j["n"] = tf.x.n();
    json mats = json::array();
    for (const auto& m : tf.x) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
            rows.push_back(std::move(row));
        }
        mats.push_back(std::move(rows));
    }
    j["matrices"] = std::move(mats);
    if (tf.nu) j["nu"] = tf.nu->nu;
    if (!tf.metadata.is_null() && !tf.metadata.empty()) j["metadata"] = tf.metadata;
    return j;
}

// Report emission ----------------------------------------------------------------

namespace detail {

inline std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_cell(const json& v) {
    if (v.is_number_float()) return csv_number(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv_cell(v[i]);
        return s;
    }
    return v.dump();
}

}  // namespace detail

/// JSON reports print as-is; CSV prints the "rows" table, or key,value pairs
/// when the report has no table.
inline void emit(const json& report, Format format, std::ostream& os) {
    if (format == Format::Json) {
        os << report.dump(2) << '\n';
        return;
    }
    if (report.contains("rows") && report.at("rows").is_array() && !report.at("rows").empty()) {
        const auto& rows = report.at("rows");
        std::vector<std::string> keys;
        for (const auto& [k, v] : rows[0].items()) keys.push_back(k);
        for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < keys.size(); ++i)
                os << (i ? "," : "") << (row.contains(keys[i]) ? detail::csv_cell(row.at(keys[i])) : "");
            os << '\n';
        }
        return;
    }
    os << "key,value\n";
    for (const auto& [k, v] : report.items())
        if (!v.is_object()) os << k << ',' << detail::csv_cell(v) << '\n';
}

inline json to_json(const IdentityReport& rep) {
    json rows = json::array();
    for (const auto& e : rep.entries)
        rows.push_back({{"identity", e.name}, {"deviation", e.deviation}, {"threshold", e.threshold}, {"passed", e.passed}});
    return rows;
}

// Commands -----------------------------------------------------------------------

struct NormOptions {
    bool weighted = false;
    std::vector<double> nu;  // overrides the file's weights when given
};

inline CommandResult cmd_norm(const TupleFile& tf, const NormOptions& opt, const RunConfig& cfg) {
    std::optional<WeightedSpace> nu = tf.nu;
    if (!opt.nu.empty()) nu = WeightedSpace(opt.nu);
    if (opt.weighted && !nu) throw Error(ErrorCode::InvalidArgument, "--weighted needs weights (nu) in the file or via --nu");

    CommandResult res;
    json& r = res.report;
    r["command"] = "norm";
    r["seed"] = cfg.seed;
    r["d"] = tf.x.d();
    r["n"] = tf.x.n();
    r["triple"] = triple_norm(tf.x);
    const auto unweighted = dual_norm(tf.x);
    bool ok = unweighted.converged;
    if (nu) {
        const auto weighted = dual_norm(tf.x, *nu);
        r["weighted_triple"] = weighted_triple_norm(tf.x, *nu);
        r["dual"] = weighted.value;
        r["dual_gap"] = weighted.gap;
        r["dual_certificate"] = weighted.certificate;
        r["dual_iterations"] = weighted.iterations;
        r["dual_converged"] = weighted.converged;
        r["dual_unweighted"] = unweighted.value;
        r["dual_unweighted_gap"] = unweighted.gap;
        ok = ok && weighted.converged;
    } else {
        r["dual"] = unweighted.value;
        r["dual_gap"] = unweighted.gap;
        r["dual_certificate"] = unweighted.certificate;
        r["dual_iterations"] = unweighted.iterations;
        r["dual_converged"] = unweighted.converged;
    }
    r["pass"] = ok;
    res.exit_code = ok ? Pass : AssertionFailed;
    return res;
}

struct LiftOptions {
    std::string family = "car";
    std::vector<double> nu;
    double tol = 1e-10;
    std::size_t max_iter = 64;
};

namespace detail {

inline SpaceKind parse_family(const std::string& f) {
    if (f == "rademacher") return SpaceKind::Rademacher;
    if (f == "steinhauss") return SpaceKind::Steinhauss;
    if (f == "lacunary") return SpaceKind::Lacunary;
    if (f == "gaussian" || f == "gaussian-mc") return SpaceKind::GaussianMC;
    throw Error(ErrorCode::InvalidArgument, "unknown family '" + f + "'");
}

template <class Report>
void fill_lift(json& r, const Report& rep, double constant) {
    r["iterations"] = rep.iterations;
    r["residual_history"] = rep.residual_history;
    r["target_norm"] = rep.target_norm;
    r["achieved_norm"] = rep.achieved_norm;
    r["ratio"] = rep.ratio;
    r["constant"] = constant;
    r["reconstruction_error"] = rep.reconstruction_error;
}

}  // namespace detail

inline CommandResult cmd_lift(const TupleFile& tf, const LiftOptions& opt, const RunConfig& cfg) {
    CommandResult res;
    json& r = res.report;
    r["command"] = "lift";
    r["family"] = opt.family;
    r["seed"] = cfg.seed;
    r["d"] = tf.x.d();
    r["n"] = tf.x.n();

    double constant = 0.0, ratio = 0.0, recon = 0.0;
    if (opt.family == "car") {
        std::optional<WeightedSpace> nu = tf.nu;
        if (!opt.nu.empty()) nu = WeightedSpace(opt.nu);
        if (!nu) throw Error(ErrorCode::InvalidArgument, "family car needs weights (nu) in the file or via --nu");
        if (nu->d() != tf.x.d()) throw Error(ErrorCode::DimensionMismatch, "nu length differs from d");
        if (tf.x.d() > max_car_d())
            throw Error(ErrorCode::DTooLarge, "CAR lift supports d <= " + std::to_string(max_car_d()));
        const CarSystem sys(*nu);
        LiftConfig lc = LiftConfig::car();
        lc.tol = opt.tol;
        lc.max_iter = opt.max_iter;
        const auto rep = lift(tf.x, CarSetting(sys), lc);
        detail::fill_lift(r, rep, lc.constant());
        constant = lc.constant();
        ratio = rep.ratio;
        recon = rep.reconstruction_error;
    } else {
        const SpaceKind kind = detail::parse_family(opt.family);
        // Sampled Gaussian spaces carry no guarantee; they run in experimental mode.
        const bool sampled = kind == SpaceKind::GaussianMC;
        const auto space = sampled ? gaussian_space(tf.x.d(), cfg.samples, cfg.seed, true)
                                   : make_space(kind, tf.x.d(), cfg.samples, cfg.seed);
        LiftConfig lc = LiftConfig::preset(kind);
        lc.tol = opt.tol;
        lc.max_iter = opt.max_iter;
        const auto rep = lift(tf.x, CommutativeSetting(space, sampled), lc);
        detail::fill_lift(r, rep, lc.constant());
        if (sampled) r["samples"] = cfg.samples;
        constant = lc.constant();
        ratio = rep.ratio;
        recon = rep.reconstruction_error;
    }
    const bool ok = ratio <= constant * (1.0 + 1e-6) && recon <= 1e-8 * (1.0 + tf.x.max_abs_entry());
    r["pass"] = ok;
    res.exit_code = ok ? Pass : AssertionFailed;
    return res;
}

struct VerifyOptions {
    std::string suite = "all";
    std::size_t d = 2;
    std::vector<double> nu;   // random in (0, 1) from the seed when empty
    Eigen::Index n = 2;       // size of the random test tuple
    std::string inject;       // test hook: "anticommutation" corrupts a generator
};

inline CommandResult cmd_verify(const VerifyOptions& opt, const RunConfig& cfg) {
    const bool car_suite = opt.suite == "car-identities" || opt.suite == "all";
    const bool moments = opt.suite == "moments" || opt.suite == "all";
    const bool orth = opt.suite == "orthogonality" || opt.suite == "all";
    if (!car_suite && !moments && !orth) throw Error(ErrorCode::InvalidArgument, "unknown suite '" + opt.suite + "'");
    if (opt.d < 1) throw Error(ErrorCode::InvalidArgument, "--d must be at least 1");
    if (opt.d > max_car_d()) throw Error(ErrorCode::DTooLarge, "verify supports d <= " + std::to_string(max_car_d()));

    std::mt19937_64 rng(cfg.seed);
    std::vector<double> nu = opt.nu;
    if (nu.empty()) {
        std::uniform_real_distribution<double> u(0.05, 0.95);
        nu.resize(opt.d);
        for (auto& v : nu) v = u(rng);
    }
    if (nu.size() != opt.d) throw Error(ErrorCode::DimensionMismatch, "--nu needs exactly d values");
    WeightedSpace weights(nu);

    CarSystem sys(weights);
    if (!opt.inject.empty()) {
        if (opt.inject != "anticommutation") throw Error(ErrorCode::InvalidArgument, "unknown fault '" + opt.inject + "'");
        Generators g = sys.generators();
        g[0] = SparseMatrix(g[0] + 1e-3 * SparseMatrix(g[0].adjoint()));
        sys = CarSystem::with_generators(weights, std::move(g));
    }
    const MatrixTuple y = random_tuple(Ensemble::GaussianEntries, opt.d, opt.n, rng);

    IdentityReport rep;
    if (car_suite) {
        rep.merge(anticommutation_check(sys));
        rep.merge(second_moment_check(sys));
        rep.merge(state_phi_check(sys));
        rep.merge(fourth_moment_check(sys, y));
    }
    if (orth) rep.merge(orthogonality_check(sys));
    if (moments) {
        rep.merge(moment_identity_check(y, rademacher_space(opt.d)));
        if (std::pow(5.0, double(opt.d)) <= double(max_space_atoms))
            rep.merge(moment_identity_check(y, steinhauss_space(opt.d)));
        rep.merge(moment_identity_check(y, lacunary_space(opt.d)));
    }

    CommandResult res;
    json& r = res.report;
    r["command"] = "verify";
    r["suite"] = opt.suite;
    r["seed"] = cfg.seed;
    r["d"] = opt.d;
    r["nu"] = nu;
    r["max_deviation"] = rep.max_deviation();
    r["pass"] = rep.passed();
    if (const auto* f = rep.first_failure()) r["first_failure"] = f->name;
    r["rows"] = to_json(rep);
    res.exit_code = rep.passed() ? Pass : AssertionFailed;
    return res;
}

struct ConstantsOptions {
    std::string experiment;
    std::size_t d = 0;  // 0: experiment default
    Eigen::Index n = 2;
    std::size_t trials = 100;
    bool exact = false;
    std::string family = "rademacher";
};

inline CommandResult cmd_constants(const ConstantsOptions& opt, const RunConfig& cfg) {
    CommandResult res;
    json& r = res.report;
    r["command"] = "constants";
    r["experiment"] = opt.experiment;
    r["seed"] = cfg.seed;
    json rows = json::array();
    bool ok = true;

    if (opt.experiment == "gauss-c2") {
        const std::size_t dmax = opt.d ? opt.d : 16;
        r["mode"] = opt.exact ? "exact" : "monte-carlo";
        for (std::size_t d = 1; d <= dmax; ++d) {
            const double target = c2_witness_exact(d);
            json row{{"d", d}};
            if (opt.exact) {
                row["value"] = target;
                row["std_err"] = 0.0;
            } else {
                const Estimate e = c2_witness_gaussian(d, cfg.samples, cfg.seed + d);
                row["value"] = e.mean;
                row["std_err"] = e.std_err;
                const bool within = std::abs(e.mean - target) <= 4.0 * e.std_err;
                row["pass"] = within;
                ok = ok && within;
            }
            row["target"] = target;
            rows.push_back(std::move(row));
        }
    } else if (opt.experiment == "gauss-c1") {
        for (double m : {1.0, 10.0, 100.0, 1e3, 1e4, 1e5}) {
            const double v = gaussian_c1_bound_sequence(m);
            rows.push_back({{"m", m}, {"value", v}, {"target", 1.0 / std::numbers::sqrt2}});
            ok = ok && v > 1.0 / std::numbers::sqrt2;
        }
    } else if (opt.experiment == "car-c2") {
        const std::size_t dmax = opt.d ? opt.d : 10;
        double prev = 0.0;
        for (std::size_t d = 1; d <= dmax; ++d) {
            const auto v = car_c2_sequence(d);
            json row{{"d", d}};
            if (v.matrix_value) row["matrix_value"] = *v.matrix_value;
            row["value"] = v.binomial_value;
            row["target"] = 1.0;
            const bool agree = !v.matrix_value || std::abs(*v.matrix_value - v.binomial_value) <= 1e-10;
            ok = ok && agree && v.binomial_value > prev && v.binomial_value < 1.0;
            prev = v.binomial_value;
            rows.push_back(std::move(row));
        }
    } else if (opt.experiment == "car-c1") {
        const auto w = car_c1_witness();
        rows.push_back({{"phi_norm", w.phi_norm},
                        {"dual_norm", w.dual_norm},
                        {"value", w.ratio},
                        {"target", 1.0 / std::numbers::sqrt2}});
        ok = w.report.passed();
    } else if (opt.experiment == "search") {
        const SpaceKind kind = detail::parse_family(opt.family);
        const std::size_t d = opt.d ? opt.d : 3;
        const auto rep = random_search_ratio(kind, opt.n, d, opt.trials, cfg.seed, cfg.samples);
        rows.push_back({{"family", std::string(to_string(kind))},
                        {"n", opt.n},
                        {"d", d},
                        {"trials", rep.trials},
                        {"lower_witness", rep.lower_witness},
                        {"upper_witness", rep.upper_witness},
                        {"lower_std_err", rep.lower_std_err},
                        {"c1", rep.c1},
                        {"c2", rep.c2},
                        {"tolerance", rep.tolerance}});
        ok = rep.passed;
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown experiment '" + opt.experiment + "'");
    }
    r["pass"] = ok;
    r["rows"] = std::move(rows);
    res.exit_code = ok ? Pass : AssertionFailed;
    return res;
}

/// Exit code for a library error: input and usage problems map to 2,
/// failed numerical assertions to 1.
inline int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::IdentityViolation:
        case ErrorCode::StalledIteration:
            return AssertionFailed;
        default:
            return UsageError;
    }
}

inline json error_report(const std::string& command, const Error& e, std::uint64_t seed) {
    json r;
    r["command"] = command;
    r["seed"] = seed;
    r["error"] = std::string(to_string(e.code()));
    r["message"] = e.what();
    if (e.index()) r[e.code() == ErrorCode::StalledIteration ? "step" : "index"] = *e.index();
    r["pass"] = false;
    return r;
}

}  // namespace nck::cli
