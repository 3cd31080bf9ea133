#include "vbinv/forward_models.hpp"
#include "vbinv/csv.hpp"
#include "vbinv/errors.hpp"
#include "vbinv/fem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <utility>

namespace vbinv {

namespace {

constexpr double kRobinAdmissibleMin = 1e-6;

} // namespace

int BenchmarkProblem::n() const
{
    return is_linear() ? linear().n() : nonlinear().n;
}

int BenchmarkProblem::m() const
{
    return is_linear() ? linear().m() : nonlinear().m;
}

Eigen::VectorXd BenchmarkProblem::reduce_data(const Eigen::VectorXd& measured) const
{
    if (measured.size() != n())
        throw DimensionError("measured data length does not match problem");
    if (data_offset.size() == 0)
        return measured;
    return measured - data_offset;
}

SmoothnessOperator::SmoothnessOperator(Eigen::MatrixXd matrix)
    : matrix_(std::move(matrix))
{
    if (matrix_.rows() < 1 || matrix_.cols() < 1)
        throw DimensionError("smoothness operator must be non-empty");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(matrix_);
    if (qr.rank() != matrix_.rows())
        throw DomainError("smoothness operator must have full row rank");
}

SmoothnessOperator first_difference_operator(int m)
{
    if (m < 2)
        throw DimensionError("first-difference operator needs m >= 2");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m - 1, m);
    for (int i = 0; i < m - 1; ++i) {
        L(i, i) = -1.0;
        L(i, i + 1) = 1.0;
    }
    return SmoothnessOperator(std::move(L));
}

// ---------------------------------------------------------------------------
// Example: Cauchy problem for steady-state conduction on the unit square.

namespace {

// Linear interpolation matrix from the 41-point coarse boundary trace to the
// 40*refine+1 fine top-edge nodes; identity when refine == 1.
Eigen::MatrixXd boundary_prolongation(int refine)
{
    const int fine = 40 * refine;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(fine + 1, 41);
    for (int i = 0; i <= fine; ++i) {
        const int j = i / refine;
        const int rem = i - j * refine;
        if (rem == 0) {
            P(i, j) = 1.0;
        } else {
            const double frac = static_cast<double>(rem) / refine;
            P(i, j) = 1.0 - frac;
            P(i, j + 1) = frac;
        }
    }
    return P;
}

} // namespace

namespace {

// Exact temperature field driving the benchmark: harmonic, with large
// amplitude on the inaccessible edge but an affine trace on the vertical
// observation sides.
double cauchy_exact_field(double x1, double x2)
{
    return std::sin(M_PI * x1) * std::exp(M_PI * x2) + x1 + x2;
}

} // namespace

BenchmarkProblem build_cauchy_problem(int refine)
{
    if (refine < 1)
        throw ConfigError("cauchy problem: refine < 1 cannot host the 41 boundary unknowns");

    const int cells = 40 * refine;
    const fem::UnitSquareMesh mesh(cells);
    const auto top = fem::side_nodes(mesh, fem::Side::top);
    const fem::DirichletLaplace solver(mesh, top);
    const int per = mesh.nodes_per_side();

    // 80 observation nodes: the two vertical sides at x2 = k/40, k = 0..39
    // (top corners are Dirichlet nodes and excluded), left side then right.
    std::vector<int> obs;
    obs.reserve(80);
    for (int k = 0; k < 40; ++k)
        obs.push_back(mesh.node(0, k * refine));
    for (int k = 0; k < 40; ++k)
        obs.push_back(mesh.node(cells, k * refine));

    auto restrict_obs = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd out(80);
        for (int i = 0; i < 80; ++i)
            out[i] = y[obs[static_cast<size_t>(i)]];
        return out;
    };

    const Eigen::MatrixXd P = boundary_prolongation(refine);
    const Eigen::VectorXd zero_load = Eigen::VectorXd::Zero(mesh.node_count());

    Eigen::MatrixXd K(80, 41);
    for (int j = 0; j < 41; ++j)
        K.col(j) = restrict_obs(solver.solve(P.col(j), zero_load));

    // Known flux of the exact field on the accessible boundary; its response
    // (with zero trace data) is the affine offset between the physical
    // measurements and K u.
    Eigen::VectorXd g_bottom(per), g_left(per), g_right(per);
    for (int k = 0; k < per; ++k) {
        const double c = k * mesh.h();
        g_bottom[k] = -(M_PI * std::sin(M_PI * c) + 1.0); // n = (0,-1)
        g_left[k] = -(M_PI * std::exp(M_PI * c) + 1.0);   // n = (-1,0)
        g_right[k] = -M_PI * std::exp(M_PI * c) + 1.0;    // n = (1,0)
    }
    Eigen::VectorXd flux_load = Eigen::VectorXd::Zero(mesh.node_count());
    fem::add_neumann_load(mesh, fem::Side::bottom, g_bottom, flux_load);
    fem::add_neumann_load(mesh, fem::Side::left, g_left, flux_load);
    fem::add_neumann_load(mesh, fem::Side::right, g_right, flux_load);
    const Eigen::VectorXd offset
        = restrict_obs(solver.solve(Eigen::VectorXd::Zero(per), flux_load));

    Eigen::VectorXd exact_u(41);
    Eigen::VectorXd u_coords(41);
    for (int j = 0; j < 41; ++j) {
        const double x1 = j / 40.0;
        u_coords[j] = x1;
        exact_u[j] = cauchy_exact_field(x1, 1.0);
    }

    MeshMeta meta;
    meta.description = "unit square, " + std::to_string(mesh.triangle_count())
        + " triangles, Dirichlet trace on top edge, known flux elsewhere";
    meta.unknown_coords = u_coords;
    meta.observation_coords.resize(80, 2);
    for (int i = 0; i < 80; ++i)
        meta.observation_coords.row(i) = mesh.coord(obs[static_cast<size_t>(i)]).transpose();
    meta.element_count = mesh.triangle_count();
    meta.boundary_flux = 0.0;
    Eigen::VectorXd flux_values(3 * per);
    flux_values << g_left, g_bottom, g_right;
    meta.flux_values = std::move(flux_values);

    LinearModel model{ std::move(K) };
    Eigen::VectorXd exact_y = model.matrix * exact_u + offset;
    return BenchmarkProblem{ "cauchy", std::move(model), first_difference_operator(41),
        std::move(exact_u), std::move(exact_y), offset, std::move(meta) };
}

// ---------------------------------------------------------------------------
// Example: boundary flux reconstruction for 1d transient conduction.

BenchmarkProblem build_flux_problem()
{
    const int cells = 100;   // 101 spatial nodes
    const int steps = 200;   // 201 time grids
    const double dt = 1.0 / steps;
    const int stride = steps / 50; // measurement every 4th step
    const int coarse = 51;

    const fem::Tridiag A = fem::interval_stiffness(cells);
    const fem::Tridiag M = fem::interval_mass(cells);
    fem::Tridiag S = M.scaled(1.0 / dt);
    S += A;

    // Coarse flux nodes sit on every (steps/50)*... fine grid point: node c of
    // the 51-point grid is fine index 4c; linear interpolation in between.
    auto fine_flux = [&](const Eigen::VectorXd& u_coarse, int k) {
        const int per = steps / (coarse - 1); // 4 fine steps per coarse interval
        const int c = k / per;
        const int rem = k - c * per;
        if (rem == 0)
            return u_coarse[c];
        const double frac = static_cast<double>(rem) / per;
        return (1.0 - frac) * u_coarse[c] + frac * u_coarse[c + 1];
    };

    Eigen::MatrixXd K(50, coarse);
    for (int j = 0; j < coarse; ++j) {
        Eigen::VectorXd u_coarse = Eigen::VectorXd::Zero(coarse);
        u_coarse[j] = 1.0;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(cells + 1);
        for (int k = 1; k <= steps; ++k) {
            Eigen::VectorXd rhs = M.apply(y) / dt;
            rhs[cells] += fine_flux(u_coarse, k); // flux boundary at x=1
            y = S.solve(rhs);
            if (k % stride == 0)
                K(k / stride - 1, j) = y[0];
        }
    }

    Eigen::VectorXd exact_u(coarse);
    Eigen::VectorXd u_coords(coarse);
    for (int j = 0; j < coarse; ++j) {
        const double t = j / static_cast<double>(coarse - 1);
        u_coords[j] = t;
        exact_u[j] = 1.0 - 2.0 * std::abs(t - 0.5); // hat with peak 1 at t = 1/2
    }

    MeshMeta meta;
    meta.description = "1d rod, 101 spatial nodes, 201 time grids, backward differences;"
        " flux unknown on 51-point coarse grid, temperature at x=0 measured at 50 times";
    meta.unknown_coords = u_coords;
    meta.observation_coords.resize(50, 1);
    for (int i = 0; i < 50; ++i)
        meta.observation_coords(i, 0) = (i + 1) / 50.0;
    meta.element_count = cells;
    meta.boundary_flux = 0.0;

    LinearModel model{ std::move(K) };
    Eigen::VectorXd exact_y = model.matrix * exact_u;
    return BenchmarkProblem{ "flux", std::move(model), first_difference_operator(coarse),
        std::move(exact_u), std::move(exact_y), Eigen::VectorXd::Zero(50), std::move(meta) };
}

// ---------------------------------------------------------------------------
// Example: stationary Robin coefficient on the top edge of the unit square.

namespace {

struct RobinStationaryData {
    fem::UnitSquareMesh mesh{ 40 };
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd load;
    std::vector<int> top;
    std::vector<int> obs;

    Eigen::SparseMatrix<double> system_matrix(const Eigen::VectorXd& u) const
    {
        std::vector<Eigen::Triplet<double>> trip;
        fem::add_robin_matrix(mesh, fem::Side::top, u, trip);
        Eigen::SparseMatrix<double> R(mesh.node_count(), mesh.node_count());
        R.setFromTriplets(trip.begin(), trip.end());
        return stiffness + R;
    }

    void check_admissible(const Eigen::VectorXd& u) const
    {
        if (u.size() != static_cast<Eigen::Index>(top.size()))
            throw DimensionError("Robin coefficient must have 41 nodal values");
        if (!(u.minCoeff() > 0.0))
            throw SolverError("Robin coefficient must be positive at every node;"
                              " the boundary-value problem loses coercivity otherwise");
    }

    Eigen::VectorXd restrict_obs(const Eigen::VectorXd& y) const
    {
        Eigen::VectorXd out(obs.size());
        for (size_t i = 0; i < obs.size(); ++i)
            out[static_cast<Eigen::Index>(i)] = y[obs[i]];
        return out;
    }
};

// Observation arc on the accessible boundary: from just below the top-left
// corner down the left side, across the bottom, up the right side to the
// top-right corner. 120 distinct nodes, 40 per edge.
std::vector<int> accessible_arc(const fem::UnitSquareMesh& mesh)
{
    const int n = mesh.cells();
    std::vector<int> obs;
    obs.reserve(120);
    for (int j = n - 1; j >= 0; --j)
        obs.push_back(mesh.node(0, j));
    for (int i = 1; i <= n; ++i)
        obs.push_back(mesh.node(i, 0));
    for (int j = 1; j <= n; ++j)
        obs.push_back(mesh.node(n, j));
    return obs;
}

} // namespace

BenchmarkProblem build_robin_stationary()
{
    auto data = std::make_shared<RobinStationaryData>();
    data->stiffness = fem::stiffness_matrix(data->mesh);
    data->top = fem::side_nodes(data->mesh, fem::Side::top);
    data->obs = accessible_arc(data->mesh);

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data->mesh.nodes_per_side());
    data->load = Eigen::VectorXd::Zero(data->mesh.node_count());
    fem::add_neumann_load(data->mesh, fem::Side::bottom, ones, data->load);
    fem::add_neumann_load(data->mesh, fem::Side::left, ones, data->load);
    fem::add_neumann_load(data->mesh, fem::Side::right, ones, data->load);

    NonlinearModel model;
    model.n = 120;
    model.m = 41;
    model.admissible_min = kRobinAdmissibleMin;
    model.evaluate = [data](const Eigen::VectorXd& u) {
        data->check_admissible(u);
        std::unique_ptr<fem::SpdSolver> solver;
        try {
            solver = std::make_unique<fem::SpdSolver>(data->system_matrix(u), "robin_stationary");
        } catch (const FactorizationError& err) {
            throw SolverError(err.what());
        }
        return data->restrict_obs(solver->solve(data->load));
    };
    model.jacobian = [data](const Eigen::VectorXd& u) {
        data->check_admissible(u);
        std::unique_ptr<fem::SpdSolver> solver;
        try {
            solver = std::make_unique<fem::SpdSolver>(data->system_matrix(u), "robin_stationary");
        } catch (const FactorizationError& err) {
            throw SolverError(err.what());
        }
        const Eigen::VectorXd y = solver->solve(data->load);
        const double h = data->mesh.h();
        Eigen::MatrixXd J(120, 41);
        for (int j = 0; j < 41; ++j) {
            // rhs = -(dR/du_j) y over the one or two edges touching node j
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(data->mesh.node_count());
            if (j < 40) {
                const int a = data->top[static_cast<size_t>(j)];
                const int b = data->top[static_cast<size_t>(j + 1)];
                rhs[a] -= h / 12.0 * (3.0 * y[a] + y[b]);
                rhs[b] -= h / 12.0 * (y[a] + y[b]);
            }
            if (j > 0) {
                const int a = data->top[static_cast<size_t>(j - 1)];
                const int b = data->top[static_cast<size_t>(j)];
                rhs[a] -= h / 12.0 * (y[a] + y[b]);
                rhs[b] -= h / 12.0 * (y[a] + 3.0 * y[b]);
            }
            J.col(j) = data->restrict_obs(solver->solve(rhs));
        }
        return J;
    };

    Eigen::VectorXd exact_u(41);
    Eigen::VectorXd u_coords(41);
    for (int j = 0; j < 41; ++j) {
        const double x1 = j / 40.0;
        u_coords[j] = x1;
        exact_u[j] = 1.0 + std::sin(M_PI * x1);
    }

    MeshMeta meta;
    meta.description = "unit square, 3200 triangles, Robin condition on top edge,"
        " unit inflow on the accessible boundary, 120 trace observations";
    meta.unknown_coords = u_coords;
    meta.observation_coords.resize(120, 2);
    for (int i = 0; i < 120; ++i)
        meta.observation_coords.row(i)
            = data->mesh.coord(data->obs[static_cast<size_t>(i)]).transpose();
    meta.element_count = data->mesh.triangle_count();
    meta.boundary_flux = 1.0;

    Eigen::VectorXd exact_y = model.evaluate(exact_u);
    return BenchmarkProblem{ "robin_stationary", std::move(model),
        first_difference_operator(41), std::move(exact_u), std::move(exact_y),
        Eigen::VectorXd(), std::move(meta) };
}

// ---------------------------------------------------------------------------
// Example: transient Robin coefficient for the 1d rod.

namespace {

struct RobinTransientData {
    int cells = 100;
    int steps = 100;
    double dt = 0.01;
    double flux = 1.0;
    fem::Tridiag stiffness;
    fem::Tridiag mass;
    fem::Tridiag base; // mass/dt + stiffness

    void check_admissible(const Eigen::VectorXd& u) const
    {
        if (u.size() != steps + 1)
            throw DimensionError("Robin coefficient must have 101 time values");
        if (!(u.minCoeff() > 0.0))
            throw SolverError("Robin coefficient must be positive at every time node");
    }

    fem::Tridiag step_matrix(double u_value) const
    {
        fem::Tridiag S = base;
        S.diag[cells] += u_value; // Robin term at x = 1
        return S;
    }
};

} // namespace

BenchmarkProblem build_robin_transient(double flux)
{
    auto data = std::make_shared<RobinTransientData>();
    data->flux = flux;
    data->stiffness = fem::interval_stiffness(data->cells);
    data->mass = fem::interval_mass(data->cells);
    data->base = data->mass.scaled(1.0 / data->dt);
    data->base += data->stiffness;

    const int nodes = data->cells + 1;
    const int points = data->steps + 1;

    NonlinearModel model;
    model.n = points;
    model.m = points;
    model.admissible_min = kRobinAdmissibleMin;
    model.evaluate = [data, nodes, points](const Eigen::VectorXd& u) {
        data->check_admissible(u);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(nodes);
        Eigen::VectorXd out(points);
        out[0] = 0.0; // zero initial condition
        for (int k = 1; k <= data->steps; ++k) {
            Eigen::VectorXd rhs = data->mass.apply(y) / data->dt;
            rhs[0] += data->flux;
            y = data->step_matrix(u[k]).solve(rhs);
            out[k] = y[0];
        }
        return out;
    };
    model.jacobian = [data, nodes, points](const Eigen::VectorXd& u) {
        data->check_admissible(u);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(nodes);
        Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(nodes, points);
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(points, points);
        for (int k = 1; k <= data->steps; ++k) {
            const fem::Tridiag S = data->step_matrix(u[k]);
            Eigen::VectorXd rhs = data->mass.apply(y) / data->dt;
            rhs[0] += data->flux;
            y = S.solve(rhs);
            Eigen::MatrixXd rhs_sens(nodes, points);
            for (int j = 0; j < points; ++j)
                rhs_sens.col(j) = data->mass.apply(sens.col(j)) / data->dt;
            rhs_sens(data->cells, k) -= y[data->cells]; // d(u_k y(1))/du_k source
            sens = S.solve(rhs_sens);
            J.row(k) = sens.row(0);
        }
        return J;
    };

    Eigen::VectorXd exact_u(points);
    Eigen::VectorXd u_coords(points);
    for (int k = 0; k < points; ++k) {
        const double t = k / static_cast<double>(data->steps);
        u_coords[k] = t;
        exact_u[k] = (t >= 0.3 && t <= 0.7) ? 1.5 : 1.0;
    }

    MeshMeta meta;
    meta.description = "1d rod, 100 uniform intervals in space and time, backward"
        " differences; time-dependent Robin coefficient at x=1, temperature at x=0"
        " observed at all 101 time nodes";
    meta.unknown_coords = u_coords;
    meta.observation_coords.resize(points, 1);
    meta.observation_coords.col(0) = u_coords;
    meta.element_count = data->cells;
    meta.boundary_flux = flux;

    Eigen::VectorXd exact_y = model.evaluate(exact_u);
    return BenchmarkProblem{ "robin_transient", std::move(model),
        first_difference_operator(points), std::move(exact_u), std::move(exact_y),
        Eigen::VectorXd(), std::move(meta) };
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd finite_diff_jacobian(const NonlinearModel& model,
    const Eigen::VectorXd& u, double h)
{
    if (!(h > 0.0) || !std::isfinite(h))
        throw DomainError("finite-difference step must be positive");
    if (u.size() != model.m)
        throw DimensionError("finite_diff_jacobian: point dimension mismatch");
    Eigen::MatrixXd J(model.n, model.m);
    for (int j = 0; j < model.m; ++j) {
        Eigen::VectorXd up = u;
        Eigen::VectorXd down = u;
        up[j] += h;
        down[j] -= h;
        J.col(j) = (model.evaluate(up) - model.evaluate(down)) / (2.0 * h);
    }
    return J;
}

NonlinearModel as_nonlinear(const LinearModel& model)
{
    NonlinearModel nm;
    nm.n = model.n();
    nm.m = model.m();
    const Eigen::MatrixXd K = model.matrix;
    nm.evaluate = [K](const Eigen::VectorXd& u) {
        if (u.size() != K.cols())
            throw DimensionError("linear model: input dimension mismatch");
        return Eigen::VectorXd(K * u);
    };
    nm.jacobian = [K](const Eigen::VectorXd&) { return K; };
    return nm;
}

BenchmarkProblem build_problem(const std::string& name)
{
    if (name == "cauchy")
        return build_cauchy_problem();
    if (name == "flux")
        return build_flux_problem();
    if (name == "robin_stationary")
        return build_robin_stationary();
    if (name == "robin_transient")
        return build_robin_transient();
    throw ConfigError("unknown benchmark problem: " + name);
}

void export_operators(const BenchmarkProblem& problem, const std::filesystem::path& dir)
{
    const Eigen::MatrixXd K = problem.is_linear()
        ? problem.linear().matrix
        : problem.nonlinear().jacobian(problem.exact_u);
    csv::write_matrix(dir / "K.csv", K);
    csv::write_matrix(dir / "L.csv", problem.smoothness.matrix());
    csv::write_matrix(dir / "exact_u.csv", problem.exact_u);
    csv::write_matrix(dir / "exact_y.csv", problem.exact_y);
}

LinearModel load_linear_model(const std::filesystem::path& csv_path)
{
    Eigen::MatrixXd K = csv::read_matrix(csv_path);
    if (K.rows() < 1 || K.cols() < 1)
        throw ConfigError("empty matrix in " + csv_path.string());
    return LinearModel{ std::move(K) };
}

} // namespace vbinv
