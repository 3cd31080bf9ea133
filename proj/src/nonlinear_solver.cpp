#include "vbinv/nonlinear_solver.hpp"
#include "vbinv/csv.hpp"
#include "vbinv/errors.hpp"

#include <algorithm>
#include <string>

namespace vbinv {

LinearizedModel linearize(const NonlinearModel& model, const Eigen::VectorXd& u_tilde)
{
    if (u_tilde.size() != model.m)
        throw DimensionError("expansion point dimension does not match model");
    LinearizedModel lin;
    lin.expansion_point = u_tilde;
    try {
        lin.matrix = model.jacobian(u_tilde);
        lin.offset = model.evaluate(u_tilde) - lin.matrix * u_tilde;
    } catch (const SolverError& err) {
        throw SolverError("linearization failed at the expansion point: "
            + std::string(err.what()));
    }
    if (lin.matrix.rows() != model.n || lin.matrix.cols() != model.m)
        throw DimensionError("jacobian dimensions do not match model");
    return lin;
}

NonlinearResult run_vb_nonlinear(const NonlinearModel& model, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const HyperConfig& config, const OuterSettings& outer)
{
    if (y.size() != model.n)
        throw DimensionError("data length does not match model");
    if (outer.max_outer < 1)
        throw DomainError("max_outer must be at least 1");
    if (!(outer.outer_tol > 0.0))
        throw DomainError("outer tolerance must be positive");

    Eigen::VectorXd mode = outer.u0.size() ? outer.u0 : Eigen::VectorXd::Ones(model.m);
    if (mode.size() != model.m)
        throw DimensionError("initial guess dimension does not match model");

    VBInit carry = outer.first_inner_init ? *outer.first_inner_init
                                          : default_init(config, model.n);
    NonlinearResult result;
    int clamped_outers = 0;
    LinearizedModel previous_lin;

    for (int k = 1; k <= outer.max_outer; ++k) {
        int clamped = 0;
        if (model.admissible_min) {
            for (Eigen::Index i = 0; i < mode.size(); ++i)
                if (mode[i] < *model.admissible_min) {
                    mode[i] = *model.admissible_min;
                    ++clamped;
                }
        }
        if (clamped > 0 && ++clamped_outers > 5)
            throw SolverError("trial mode required admissibility clamping in more than"
                              " five outer iterations; the linearization is not settling");

        const LinearizedModel lin = linearize(model, mode);
        if (k > 1 && clamped == 0) {
            // an unchanged surrogate cannot move the solution; a linear model
            // wrapped in this interface terminates here after one solve
            const double scale = previous_lin.matrix.norm() + previous_lin.offset.norm();
            const double change = (lin.matrix - previous_lin.matrix).norm()
                + (lin.offset - previous_lin.offset).norm();
            if (change <= 1e-14 * scale) {
                result.trace.converged = true;
                break;
            }
        }
        previous_lin = lin;
        const Eigen::VectorXd y_adjusted = y - lin.offset;

        HyperConfig inner_config = config;
        inner_config.max_iter = std::min(config.max_iter, 50);
        if (outer.loose_inner && k <= 2)
            inner_config.tol = std::max(config.tol, 1e-3);

        result.state = run_vb_linear(LinearModel{ lin.matrix }, y_adjusted, L,
            inner_config, carry);
        carry.q_w = result.state.q_w;
        carry.q_lambda = result.state.q_lambda;
        carry.t_params = result.state.t_params;

        const Eigen::VectorXd& new_mode = result.state.q_u.mean;
        const double rel_change = (new_mode - mode).norm() / new_mode.norm();

        result.trace.expansion_points.push_back(mode);
        result.trace.records.push_back(OuterRecord{ k, rel_change, result.state.iter,
            result.state.q_lambda.shape / result.state.q_lambda.rate, clamped });

        mode = new_mode;
        if (rel_change <= outer.outer_tol) {
            result.trace.converged = true;
            break;
        }
    }
    return result;
}

void write_outer_trace_csv(const std::filesystem::path& path, const OuterTrace& trace)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.records.size());
    for (const auto& rec : trace.records)
        rows.push_back({ static_cast<double>(rec.outer_iter), rec.rel_change,
            static_cast<double>(rec.inner_iters), rec.e_lambda });
    csv::write_table(path, { "outer_iter", "rel_change", "inner_iters", "E_lambda" }, rows);
}

} // namespace vbinv
