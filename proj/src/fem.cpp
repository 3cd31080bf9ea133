#include "vbinv/fem.hpp"
#include "vbinv/errors.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

namespace vbinv::fem {

UnitSquareMesh::UnitSquareMesh(int cells_per_side)
    : n_(cells_per_side)
{
    if (n_ < 1)
        throw DimensionError("UnitSquareMesh requires at least one cell per side");
}

Eigen::Vector2d UnitSquareMesh::coord(int node_index) const
{
    const int per = nodes_per_side();
    const int i = node_index % per;
    const int j = node_index / per;
    return { i * h(), j * h() };
}

std::vector<int> side_nodes(const UnitSquareMesh& mesh, Side side)
{
    const int n = mesh.cells();
    std::vector<int> nodes(mesh.nodes_per_side());
    for (int k = 0; k <= n; ++k) {
        switch (side) {
        case Side::bottom: nodes[k] = mesh.node(k, 0); break;
        case Side::top: nodes[k] = mesh.node(k, n); break;
        case Side::left: nodes[k] = mesh.node(0, k); break;
        case Side::right: nodes[k] = mesh.node(n, k); break;
        }
    }
    return nodes;
}

Eigen::SparseMatrix<double> stiffness_matrix(const UnitSquareMesh& mesh)
{
    const int n = mesh.cells();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.triangle_count()) * 9);

    auto add_triangle = [&](const std::array<int, 3>& v) {
        std::array<Eigen::Vector2d, 3> p = { mesh.coord(v[0]), mesh.coord(v[1]),
            mesh.coord(v[2]) };
        const double twice_area = (p[1].x() - p[0].x()) * (p[2].y() - p[0].y())
            - (p[2].x() - p[0].x()) * (p[1].y() - p[0].y());
        const double area = 0.5 * std::abs(twice_area);
        // gradient of barycentric k: rotated opposite edge / (2 area)
        std::array<Eigen::Vector2d, 3> grad;
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector2d e = p[(k + 2) % 3] - p[(k + 1) % 3];
            grad[k] = Eigen::Vector2d(-e.y(), e.x()) / twice_area;
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trip.emplace_back(v[a], v[b], area * grad[a].dot(grad[b]));
    };

    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            add_triangle({ mesh.node(i, j), mesh.node(i + 1, j), mesh.node(i + 1, j + 1) });
            add_triangle({ mesh.node(i, j), mesh.node(i + 1, j + 1), mesh.node(i, j + 1) });
        }

    Eigen::SparseMatrix<double> A(mesh.node_count(), mesh.node_count());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

void add_neumann_load(const UnitSquareMesh& mesh, Side side,
    const Eigen::VectorXd& g_side, Eigen::VectorXd& load)
{
    const auto nodes = side_nodes(mesh, side);
    if (g_side.size() != static_cast<Eigen::Index>(nodes.size()))
        throw DimensionError("Neumann data size does not match side node count");
    const double h = mesh.h();
    for (size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double ga = g_side[static_cast<Eigen::Index>(k)];
        const double gb = g_side[static_cast<Eigen::Index>(k + 1)];
        load[nodes[k]] += h / 6.0 * (2.0 * ga + gb);
        load[nodes[k + 1]] += h / 6.0 * (ga + 2.0 * gb);
    }
}

void add_robin_matrix(const UnitSquareMesh& mesh, Side side,
    const Eigen::VectorXd& c_side, std::vector<Eigen::Triplet<double>>& triplets)
{
    const auto nodes = side_nodes(mesh, side);
    if (c_side.size() != static_cast<Eigen::Index>(nodes.size()))
        throw DimensionError("Robin coefficient size does not match side node count");
    const double h = mesh.h();
    for (size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double ca = c_side[static_cast<Eigen::Index>(k)];
        const double cb = c_side[static_cast<Eigen::Index>(k + 1)];
        const int a = nodes[k];
        const int b = nodes[k + 1];
        triplets.emplace_back(a, a, h / 12.0 * (3.0 * ca + cb));
        triplets.emplace_back(a, b, h / 12.0 * (ca + cb));
        triplets.emplace_back(b, a, h / 12.0 * (ca + cb));
        triplets.emplace_back(b, b, h / 12.0 * (ca + 3.0 * cb));
    }
}

SpdSolver::SpdSolver(const Eigen::SparseMatrix<double>& matrix, std::string context)
    : matrix_(matrix)
    , context_(std::move(context))
{
    llt_.compute(matrix_);
    if (llt_.info() != Eigen::Success)
        throw FactorizationError(context_ + ": sparse Cholesky failed, system not SPD");
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& rhs) const
{
    Eigen::VectorXd x = llt_.solve(rhs);
    const double scale = rhs.norm();
    if (scale > 0.0) {
        const double residual = (matrix_ * x - rhs).norm() / scale;
        if (!std::isfinite(residual) || residual > 1e-8)
            throw FactorizationError(context_ + ": solve residual " + std::to_string(residual)
                + ", system singular or severely ill-conditioned");
    }
    return x;
}

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& rhs) const
{
    Eigen::MatrixXd x(rhs.rows(), rhs.cols());
    for (Eigen::Index j = 0; j < rhs.cols(); ++j)
        x.col(j) = solve(Eigen::VectorXd(rhs.col(j)));
    return x;
}

DirichletLaplace::DirichletLaplace(const UnitSquareMesh& mesh, std::vector<int> dirichlet_nodes)
    : node_count_(mesh.node_count())
    , dirichlet_nodes_(std::move(dirichlet_nodes))
    , position_(node_count_, -1)
    , is_dirichlet_(node_count_, false)
{
    for (size_t k = 0; k < dirichlet_nodes_.size(); ++k) {
        const int node = dirichlet_nodes_[k];
        if (node < 0 || node >= node_count_)
            throw DimensionError("Dirichlet node out of range");
        if (is_dirichlet_[node])
            throw DimensionError("duplicate Dirichlet node");
        is_dirichlet_[node] = true;
        position_[node] = static_cast<int>(k);
    }
    free_nodes_.reserve(node_count_ - dirichlet_nodes_.size());
    for (int node = 0; node < node_count_; ++node)
        if (!is_dirichlet_[node]) {
            position_[node] = static_cast<int>(free_nodes_.size());
            free_nodes_.push_back(node);
        }

    const auto A = stiffness_matrix(mesh);
    const int nf = free_count();
    const int nd = static_cast<int>(dirichlet_nodes_.size());
    std::vector<Eigen::Triplet<double>> ff, fd;
    for (int col = 0; col < A.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
            const int r = static_cast<int>(it.row());
            const int c = static_cast<int>(it.col());
            if (is_dirichlet_[r])
                continue;
            if (is_dirichlet_[c])
                fd.emplace_back(position_[r], position_[c], it.value());
            else
                ff.emplace_back(position_[r], position_[c], it.value());
        }
    Eigen::SparseMatrix<double> A_ff(nf, nf);
    A_ff.setFromTriplets(ff.begin(), ff.end());
    coupling_.resize(nf, nd);
    coupling_.setFromTriplets(fd.begin(), fd.end());
    solver_ = std::make_unique<SpdSolver>(A_ff, "DirichletLaplace");
}

Eigen::VectorXd DirichletLaplace::solve(const Eigen::VectorXd& dirichlet_values,
    const Eigen::VectorXd& load) const
{
    if (dirichlet_values.size() != static_cast<Eigen::Index>(dirichlet_nodes_.size()))
        throw DimensionError("Dirichlet value count mismatch");
    if (load.size() != node_count_)
        throw DimensionError("load vector size mismatch");

    Eigen::VectorXd rhs(free_count());
    for (int k = 0; k < free_count(); ++k)
        rhs[k] = load[free_nodes_[k]];
    rhs -= coupling_ * dirichlet_values;

    const Eigen::VectorXd y_free = solver_->solve(rhs);
    Eigen::VectorXd y(node_count_);
    for (int node = 0; node < node_count_; ++node)
        y[node] = is_dirichlet_[node] ? dirichlet_values[position_[node]]
                                      : y_free[position_[node]];
    return y;
}

Eigen::VectorXd Tridiag::apply(const Eigen::VectorXd& x) const
{
    const int n = size();
    if (x.size() != n)
        throw DimensionError("tridiagonal operand size mismatch");
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        double v = diag[i] * x[i];
        if (i > 0)
            v += sub[i - 1] * x[i - 1];
        if (i < n - 1)
            v += super[i] * x[i + 1];
        y[i] = v;
    }
    return y;
}

Eigen::VectorXd Tridiag::solve(const Eigen::VectorXd& rhs) const
{
    const int n = size();
    if (rhs.size() != n)
        throw DimensionError("tridiagonal rhs size mismatch");
    Eigen::VectorXd c(n), d(n);
    c[0] = super.size() ? super[0] / diag[0] : 0.0;
    d[0] = rhs[0] / diag[0];
    for (int i = 1; i < n; ++i) {
        const double m = diag[i] - sub[i - 1] * c[i - 1];
        c[i] = (i < n - 1) ? super[i] / m : 0.0;
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    Eigen::VectorXd x(n);
    x[n - 1] = d[n - 1];
    for (int i = n - 2; i >= 0; --i)
        x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

Eigen::MatrixXd Tridiag::solve(const Eigen::MatrixXd& rhs) const
{
    Eigen::MatrixXd x(rhs.rows(), rhs.cols());
    for (Eigen::Index j = 0; j < rhs.cols(); ++j)
        x.col(j) = solve(Eigen::VectorXd(rhs.col(j)));
    return x;
}

Tridiag& Tridiag::operator+=(const Tridiag& other)
{
    if (other.size() != size())
        throw DimensionError("tridiagonal size mismatch");
    sub += other.sub;
    diag += other.diag;
    super += other.super;
    return *this;
}

Tridiag Tridiag::scaled(double factor) const
{
    return Tridiag{ sub * factor, diag * factor, super * factor };
}

Tridiag interval_stiffness(int cells)
{
    if (cells < 1)
        throw DimensionError("interval mesh requires at least one cell");
    const double h = 1.0 / cells;
    Tridiag t;
    t.sub = Eigen::VectorXd::Constant(cells, -1.0 / h);
    t.super = t.sub;
    t.diag = Eigen::VectorXd::Constant(cells + 1, 2.0 / h);
    t.diag[0] = 1.0 / h;
    t.diag[cells] = 1.0 / h;
    return t;
}

Tridiag interval_mass(int cells)
{
    if (cells < 1)
        throw DimensionError("interval mesh requires at least one cell");
    const double h = 1.0 / cells;
    Tridiag t;
    t.sub = Eigen::VectorXd::Constant(cells, h / 6.0);
    t.super = t.sub;
    t.diag = Eigen::VectorXd::Constant(cells + 1, 4.0 * h / 6.0);
    t.diag[0] = 2.0 * h / 6.0;
    t.diag[cells] = 2.0 * h / 6.0;
    return t;
}

} // namespace vbinv::fem
