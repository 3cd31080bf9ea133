#ifndef VBINV_FORWARD_MODELS_HPP
#define VBINV_FORWARD_MODELS_HPP

// The four heat-conduction benchmark operators, their exact solutions and
// exact data, and the first-difference smoothness operator.

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace vbinv {

// Dense linear forward map y = K u.
struct LinearModel {
    Eigen::MatrixXd matrix; // n x m

    int n() const { return static_cast<int>(matrix.rows()); }
    int m() const { return static_cast<int>(matrix.cols()); }
};

// Nonlinear forward map with an analytic Jacobian. `admissible_min`, when
// set, is the componentwise floor below which evaluation is ill-posed
// (e.g. Robin coefficients must stay positive).
struct NonlinearModel {
    int n = 0;
    int m = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> evaluate;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
    std::optional<double> admissible_min;
};

// Full-row-rank matrix L whose quadratic form penalizes rough solutions.
// Rank is verified at construction.
class SmoothnessOperator {
public:
    explicit SmoothnessOperator(Eigen::MatrixXd matrix);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    int rank() const { return static_cast<int>(matrix_.rows()); } // s
    int cols() const { return static_cast<int>(matrix_.cols()); }

private:
    Eigen::MatrixXd matrix_;
};

// Discretization descriptors kept alongside each benchmark.
struct MeshMeta {
    std::string description;
    Eigen::VectorXd unknown_coords;     // coordinate of each unknown (x1 or t)
    Eigen::MatrixXd observation_coords; // one row per measurement
    int element_count = 0;
    double boundary_flux = 0.0;         // g on the accessible boundary (constant cases)
    Eigen::VectorXd flux_values;        // nodal g when it varies along the boundary
};

struct BenchmarkProblem {
    std::string name; // cauchy | flux | robin_stationary | robin_transient
    std::variant<LinearModel, NonlinearModel> model;
    SmoothnessOperator smoothness;
    Eigen::VectorXd exact_u;
    Eigen::VectorXd exact_y;   // physical measurement values at the observation nodes
    Eigen::VectorXd data_offset; // linear problems: exact_y = K exact_u + data_offset
    MeshMeta mesh_meta;

    bool is_linear() const { return std::holds_alternative<LinearModel>(model); }
    const LinearModel& linear() const { return std::get<LinearModel>(model); }
    const NonlinearModel& nonlinear() const { return std::get<NonlinearModel>(model); }
    int n() const;
    int m() const;

    // Measurements with the known-flux response removed; the linear solver
    // sees the homogeneous problem K u = reduced data.
    Eigen::VectorXd reduce_data(const Eigen::VectorXd& measured) const;
};

// (m-1) x m first-order difference matrix with rows (..., -1, 1, ...).
SmoothnessOperator first_difference_operator(int m);

// Steady-state conduction on the unit square: Dirichlet temperature on the
// top edge (41 values), zero flux elsewhere, traces observed at 80 nodes on
// the two vertical sides. refine=1 is the reference 40x40 grid (3200
// triangles); refine=k solves on a 40k-cell grid while the unknown stays the
// 41-point trace (prolonged by linear interpolation) and the observation
// locations stay fixed.
BenchmarkProblem build_cauchy_problem(int refine = 1);

// 1d transient conduction on (0,1) x [0,1]: unknown boundary flux u(t) at
// x=1 on a 51-point coarse time grid, zero flux at x=0, temperature at x=0
// measured at 50 uniform times. 101 spatial nodes, 201 time grids.
BenchmarkProblem build_flux_problem();

// Steady-state conduction with Robin condition du/dn + u y = 0 on the top
// edge; unit inflow on the other three sides; 120 trace observations there.
// Nonlinear in the 41 nodal values of u.
BenchmarkProblem build_robin_stationary();

// 1d transient conduction with time-dependent Robin coefficient u(t) at x=1
// and constant inflow `flux` at x=0; temperature at x=0 observed at all 101
// time nodes. Both axes use 100 uniform intervals.
BenchmarkProblem build_robin_transient(double flux = 1.0);

// Central-difference Jacobian, columnwise (evaluate(u+h e_i) -
// evaluate(u-h e_i)) / (2h). Test oracle for analytic Jacobians.
Eigen::MatrixXd finite_diff_jacobian(const NonlinearModel& model,
    const Eigen::VectorXd& u, double h);

// View a linear model through the nonlinear interface.
NonlinearModel as_nonlinear(const LinearModel& model);

// Build one of the four benchmarks by name; throws ConfigError otherwise.
BenchmarkProblem build_problem(const std::string& name);

// Write K (or the Jacobian at exact_u), L, exact_u, exact_y as CSV, and read
// a raw matrix back as a linear model.
void export_operators(const BenchmarkProblem& problem, const std::filesystem::path& dir);
LinearModel load_linear_model(const std::filesystem::path& csv_path);

} // namespace vbinv

#endif
