// nck: command-line front end for the Khintchine-norm toolkit.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nck/cli.hpp"

namespace {

using nck::cli::Format;

int finish(const nck::cli::CommandResult& res, const nck::cli::RunConfig& cfg) {
    if (cfg.out.empty()) {
        nck::cli::emit(res.report, cfg.format, std::cout);
    } else {
        std::ofstream os(cfg.out);
        if (!os) {
            std::cerr << "cannot write " << cfg.out << '\n';
            return nck::cli::UsageError;
        }
        nck::cli::emit(res.report, cfg.format, os);
    }
    return res.exit_code;
}

void add_common(CLI::App* cmd, nck::cli::RunConfig& cfg) {
    cmd->add_option("--seed", cfg.seed, "RNG seed (recorded in the report)");
    cmd->add_option("--samples", cfg.samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
    cmd->add_option("--out", cfg.out, "Write the report to a file instead of stdout");
    cmd->add_option("--format", cfg.format, "Report format")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"json", Format::Json}, {"csv", Format::Csv}}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noncommutative Khintchine norms, liftings and constants"};
    app.require_subcommand(1);

    nck::cli::RunConfig cfg;
    std::string file;

    nck::cli::NormOptions norm_opt;
    auto* norm = app.add_subcommand("norm", "Primal and dual norms of a tuple file");
    norm->add_option("--file", file, "Tuple file (JSON)")->required();
    norm->add_flag("--weighted", norm_opt.weighted, "Require weights and report the weighted norms");
    norm->add_option("--nu", norm_opt.nu, "Weights nu_1..nu_d (override the file)");
    add_common(norm, cfg);

    nck::cli::LiftOptions lift_opt;
    auto* lift = app.add_subcommand("lift", "Lift a tuple with the truncation iteration");
    lift->add_option("--file", file, "Tuple file (JSON)")->required();
    lift->add_option("--family", lift_opt.family, "rademacher|steinhauss|lacunary|gaussian|car")
        ->check(CLI::IsMember({"rademacher", "steinhauss", "lacunary", "gaussian", "car"}));
    lift->add_option("--nu", lift_opt.nu, "Weights for the car family (override the file)");
    lift->add_option("--tol", lift_opt.tol, "Relative residual stop");
    lift->add_option("--max-iter", lift_opt.max_iter, "Iteration cap");
    add_common(lift, cfg);

    nck::cli::VerifyOptions verify_opt;
    auto* verify = app.add_subcommand("verify", "Run exact identity suites");
    verify->add_option("--suite", verify_opt.suite, "car-identities|moments|orthogonality|all")
        ->check(CLI::IsMember({"car-identities", "moments", "orthogonality", "all"}));
    verify->add_option("--d", verify_opt.d, "Number of modes / variables");
    verify->add_option("--nu", verify_opt.nu, "Weights (random from the seed when omitted)");
    verify->add_option("--n", verify_opt.n, "Matrix size of the random test tuple")->check(CLI::PositiveNumber);
    verify->add_option("--inject-fault", verify_opt.inject)->group("");  // test hook
    add_common(verify, cfg);

    nck::cli::ConstantsOptions const_opt;
    auto* constants = app.add_subcommand("constants", "Best-constant experiments");
    constants->add_option("--experiment", const_opt.experiment, "gauss-c2|gauss-c1|car-c2|car-c1|search")
        ->required()
        ->check(CLI::IsMember({"gauss-c2", "gauss-c1", "car-c2", "car-c1", "search"}));
    constants->add_option("--d", const_opt.d, "Largest d (sequences) or d (search)");
    constants->add_option("--n", const_opt.n, "Matrix size for search")->check(CLI::PositiveNumber);
    constants->add_option("--trials", const_opt.trials, "Search trials")->check(CLI::PositiveNumber);
    constants->add_option("--family", const_opt.family, "Search family")
        ->check(CLI::IsMember({"rademacher", "steinhauss", "lacunary", "gaussian"}));
    constants->add_flag("--exact", const_opt.exact, "Closed-form values instead of Monte Carlo");
    add_common(constants, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : nck::cli::UsageError;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (norm->parsed()) return finish(nck::cli::cmd_norm(nck::cli::read_tuple_file(file), norm_opt, cfg), cfg);
        if (lift->parsed()) return finish(nck::cli::cmd_lift(nck::cli::read_tuple_file(file), lift_opt, cfg), cfg);
        if (verify->parsed()) return finish(nck::cli::cmd_verify(verify_opt, cfg), cfg);
        return finish(nck::cli::cmd_constants(const_opt, cfg), cfg);
    } catch (const nck::Error& e) {
        nck::cli::CommandResult res{nck::cli::exit_code_for(e.code()), nck::cli::error_report(command, e, cfg.seed)};
        std::cerr << e.what() << '\n';
        finish(res, cfg);
        return res.exit_code;
    }
}
