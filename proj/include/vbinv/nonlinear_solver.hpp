#ifndef VBINV_NONLINEAR_SOLVER_HPP
#define VBINV_NONLINEAR_SOLVER_HPP

// Recursive linearization: repeatedly replace the nonlinear forward map by
// its first-order Taylor expansion at the current posterior mode and solve
// the linearized problem with the variational sweep, carrying the hyper
// factors between outer iterations.

#include "vbinv/vb_solver.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <vector>

namespace vbinv {

// Affine surrogate K(u_tilde) + J (u - u_tilde), stored as J u + offset.
struct LinearizedModel {
    Eigen::MatrixXd matrix;          // J at the expansion point
    Eigen::VectorXd offset;          // K(u_tilde) - J u_tilde
    Eigen::VectorXd expansion_point; // u_tilde

    Eigen::VectorXd predict(const Eigen::VectorXd& u) const { return matrix * u + offset; }
};

LinearizedModel linearize(const NonlinearModel& model, const Eigen::VectorXd& u_tilde);

struct OuterSettings {
    Eigen::VectorXd u0;      // empty = constant 1 start
    double outer_tol = 1e-5; // relative change of the mode
    int max_outer = 20;
    bool loose_inner = false; // relax inner tol to 1e-3 on the first two sweeps
    std::optional<VBInit> first_inner_init; // hyper factors for the first sweep
};

struct OuterRecord {
    int outer_iter;
    double rel_change;
    int inner_iters;
    double e_lambda;
    int clamped_components;
};

struct OuterTrace {
    std::vector<OuterRecord> records;
    std::vector<Eigen::VectorXd> expansion_points;
    bool converged = false;
};

struct NonlinearResult {
    VBState state;
    OuterTrace trace;
};

NonlinearResult run_vb_nonlinear(const NonlinearModel& model, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const HyperConfig& config, const OuterSettings& outer);

// outer_iter,rel_change,inner_iters,E_lambda
void write_outer_trace_csv(const std::filesystem::path& path, const OuterTrace& trace);

} // namespace vbinv

#endif
