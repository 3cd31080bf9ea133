// Command-line harness for the benchmark experiments: run one experiment,
// sweep corruption rates, dump the assembled operators, or smoke-test the
// core numerics.

#include "vbinv/csv.hpp"
#include "vbinv/distributions.hpp"
#include "vbinv/errors.hpp"
#include "vbinv/experiment.hpp"
#include "vbinv/forward_models.hpp"
#include "vbinv/noise_metrics.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string problem;
    std::optional<double> rate;
    std::vector<std::uint64_t> seeds;
    std::optional<double> eta;
    std::string out_dir;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags)
{
    cmd.add_option("--config", flags.config_path, "JSON config file");
    cmd.add_option("--problem", flags.problem,
        "cauchy | flux | robin_stationary | robin_transient");
    cmd.add_option("--r", flags.rate, "corruption rate in [0,1]");
    cmd.add_option("--seeds", flags.seeds, "noise seeds")->delimiter(',');
    cmd.add_option("--eta", flags.eta, "fixed regularization for the Gaussian baseline");
    cmd.add_option("--out", flags.out_dir, "output directory for artifacts");
}

vbinv::ExperimentConfig resolve_config(const CommonFlags& flags)
{
    vbinv::ExperimentConfig config;
    if (!flags.config_path.empty())
        config = vbinv::load_config_file(flags.config_path);
    if (!flags.problem.empty())
        config.problem = flags.problem;
    if (flags.rate)
        config.corruption_rate = *flags.rate;
    if (!flags.seeds.empty())
        config.seeds = flags.seeds;
    if (flags.eta)
        config.baseline_eta = *flags.eta;
    else if (!config.baseline_eta && config.problem == "cauchy")
        config.baseline_eta = 4.64;
    if (!flags.out_dir.empty())
        config.output_dir = flags.out_dir;
    return config;
}

int command_run(const CommonFlags& flags)
{
    const auto config = resolve_config(flags);
    const auto problem = vbinv::build_problem(config.problem);
    const auto report = vbinv::run_experiment_on(problem, config);

    std::printf("problem=%s r=%g seeds=%zu\n", report.problem.c_str(),
        report.corruption_rate, report.per_seed.size());
    for (const auto& rec : report.per_seed) {
        if (rec.failed)
            std::printf("  seed %llu: FAILED (%s)\n",
                static_cast<unsigned long long>(rec.seed), rec.error.c_str());
        else
            std::printf("  seed %llu: e=%.6g lambda=%.6g iters=%d runtime=%.3fs\n",
                static_cast<unsigned long long>(rec.seed), rec.e, rec.e_lambda,
                rec.iterations, rec.runtime_s);
    }
    std::printf("median_e=%.6g median_lambda=%.6g\n", report.median_e,
        report.median_lambda);

    if (config.baseline_eta && problem.is_linear()) {
        // Same realizations as the main run, so the comparison is paired.
        std::vector<double> baseline_errors;
        for (const auto seed : config.seeds) {
            const auto noisy = vbinv::corrupt(problem.exact_y,
                vbinv::NoiseSpec{ config.corruption_rate, seed });
            const auto u = vbinv::gaussian_baseline(problem.linear(),
                problem.reduce_data(noisy.data), problem.smoothness, *config.baseline_eta);
            baseline_errors.push_back(vbinv::relative_error(u, problem.exact_u));
        }
        std::printf("gaussian_baseline eta=%g median_e=%.6g\n", *config.baseline_eta,
            vbinv::median(baseline_errors));
    }

    bool any_failed = false;
    for (const auto& rec : report.per_seed)
        any_failed = any_failed || rec.failed;
    return any_failed ? 1 : 0;
}

int command_sweep(const CommonFlags& flags, std::vector<double> r_values)
{
    const auto config = resolve_config(flags);
    if (r_values.empty())
        for (int k = 1; k <= 9; ++k)
            r_values.push_back(k / 10.0);
    const auto rows = vbinv::sweep(config, r_values);
    std::printf("%-8s %-14s %-14s\n", "r", "lambda_median", "e_median");
    for (const auto& row : rows)
        std::printf("%-8g %-14.6g %-14.6g\n", row.r, row.lambda_median, row.e_median);
    return 0;
}

int command_export(const CommonFlags& flags)
{
    const auto config = resolve_config(flags);
    if (config.output_dir.empty())
        throw vbinv::ConfigError("export-operators requires --out");
    const auto problem = vbinv::build_problem(config.problem);
    vbinv::export_operators(problem, config.output_dir);
    std::printf("wrote K.csv L.csv exact_u.csv exact_y.csv to %s\n",
        config.output_dir.string().c_str());
    return 0;
}

int selftest_check(const char* name, bool ok, int& failures)
{
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok)
        ++failures;
    return failures;
}

// Quick property smoke run over the core numerics; the full suites live in
// the test binaries.
int command_selftest()
{
    using namespace vbinv;
    int failures = 0;

    selftest_check("digamma recurrence psi(s+1)-psi(s)=1/s",
        std::abs(digamma(4.0) - digamma(3.0) - 1.0 / 3.0) < 1e-12, failures);

    const StudentTParams t{ 4.0, 1.0 };
    const GammaParams g = to_gamma(t);
    const StudentTParams back = to_student_t(g);
    selftest_check("t <-> gamma parameter round trip",
        std::abs(back.dof - t.dof) < 1e-14 && std::abs(back.scale - t.scale) < 1e-14,
        failures);

    const auto L = first_difference_operator(5);
    selftest_check("first differences annihilate constants",
        (L.matrix() * Eigen::VectorXd::Ones(5)).norm() == 0.0, failures);

    const LinearModel toy{ Eigen::MatrixXd::Identity(1, 1) };
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 2.0);
    const SmoothnessOperator Ltoy{ Eigen::MatrixXd::Identity(1, 1) };
    const auto q = update_q_u(toy, y, Ltoy, Eigen::VectorXd::Ones(1), 1.0);
    selftest_check("scalar posterior update",
        std::abs(q.mean[0] - 1.0) < 1e-14 && std::abs(q.covariance(0, 0) - 0.5) < 1e-14,
        failures);

    const Eigen::VectorXd data = Eigen::VectorXd::LinSpaced(64, -1.0, 1.0);
    const auto c1 = corrupt(data, NoiseSpec{ 0.4, 7 });
    const auto c2 = corrupt(data, NoiseSpec{ 0.4, 7 });
    selftest_check("corruption is deterministic per seed",
        c1.data == c2.data && c1.mask == c2.mask, failures);

    const auto problem = build_flux_problem();
    HyperConfig hyper;
    const auto noisy = corrupt(problem.exact_y, NoiseSpec{ 0.3, 1 });
    const auto state
        = run_vb_linear(problem.linear(), noisy.data, problem.smoothness, hyper);
    bool monotone = true;
    for (size_t i = 1; i < state.trace.size(); ++i)
        monotone = monotone
            && state.trace[i].free_energy <= state.trace[i - 1].free_energy + 1e-8;
    selftest_check("free energy non-increasing on a benchmark run", monotone, failures);
    selftest_check("benchmark run converged", state.converged, failures);

    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{ "Robust Bayesian inversion benchmarks (heavy-tailed noise model)" };
    app.require_subcommand(1);

    CommonFlags run_flags, sweep_flags, export_flags;
    std::vector<double> r_values;

    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
    add_common_flags(*run_cmd, run_flags);

    CLI::App* sweep_cmd
        = app.add_subcommand("sweep", "sweep corruption rates and tabulate medians");
    add_common_flags(*sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--r-values", r_values, "corruption rates (default 0.1..0.9)")
        ->delimiter(',');

    CLI::App* export_cmd
        = app.add_subcommand("export-operators", "write K, L, exact_u, exact_y as CSV");
    add_common_flags(*export_cmd, export_flags);

    app.add_subcommand("selftest", "smoke-run the core property checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return command_run(run_flags);
        if (sweep_cmd->parsed())
            return command_sweep(sweep_flags, r_values);
        if (export_cmd->parsed())
            return command_export(export_flags);
        return command_selftest();
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
