#ifndef VBINV_EXPERIMENT_HPP
#define VBINV_EXPERIMENT_HPP

// Experiment harness: configures a benchmark, corrupts its exact data over a
// set of seeds, runs the linear or nonlinear solver, and persists tables,
// traces and per-seed artifacts.

#include "vbinv/forward_models.hpp"
#include "vbinv/nonlinear_solver.hpp"
#include "vbinv/noise_metrics.hpp"
#include "vbinv/vb_solver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vbinv {

struct OuterConfig {
    double outer_tol = 1e-5;
    int max_outer = 20;
    bool loose_inner = false;
};

struct ExperimentConfig {
    std::string problem = "cauchy";
    double corruption_rate = 0.5;
    std::vector<std::uint64_t> seeds = { 1 };
    HyperConfig hyper;
    OuterConfig outer;                  // ignored for linear problems
    std::optional<double> baseline_eta; // defaults to 4.64 for cauchy in the CLI
    std::filesystem::path output_dir;   // empty = no artifacts written
};

// JSON document mirroring ExperimentConfig field for field; missing fields
// keep their defaults.
ExperimentConfig load_config_file(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

struct SeedRecord {
    std::uint64_t seed = 0;
    double e = 0.0;
    double e_lambda = 0.0;
    int iterations = 0; // inner iterations (total over outer sweeps if nonlinear)
    int outer_iterations = 0;
    double runtime_s = 0.0;
    bool failed = false;
    std::string error;
};

struct ExperimentReport {
    std::string problem;
    double corruption_rate = 0.0;
    std::vector<SeedRecord> per_seed;
    double median_e = 0.0;
    double median_lambda = 0.0;
    std::map<std::string, std::filesystem::path> artifacts;
};

// Runs every seed; failed seeds are recorded with their error message and
// excluded from the medians instead of being dropped silently.
ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment_on(const BenchmarkProblem& problem,
    const ExperimentConfig& config);

struct SweepRow {
    double r;
    double lambda_median;
    double e_median;
};

// One experiment per corruption rate, reusing the assembled problem; writes
// sweep.csv (r, lambda_median, e_median) when an output directory is set.
std::vector<SweepRow> sweep(const ExperimentConfig& base,
    const std::vector<double>& r_values);

// argmin ||K u - y||^2 + eta ||L u||^2, the fixed-weight baseline the
// heavy-tailed model is compared against.
Eigen::VectorXd gaussian_baseline(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, double eta);

double median(std::vector<double> values);

} // namespace vbinv

#endif
