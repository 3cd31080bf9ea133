#ifndef VBINV_FEM_HPP
#define VBINV_FEM_HPP

// Piecewise-linear finite elements on the unit square and the unit interval,
// just enough for the four heat-conduction benchmarks: structured triangle
// meshes, stiffness/mass assembly, boundary (Neumann/Robin) terms, and
// direct sparse SPD solves.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>

#include <memory>
#include <string>
#include <vector>

namespace vbinv::fem {

// Structured triangulation of (0,1)^2: cells x cells squares, each split by
// the diagonal from (i,j) to (i+1,j+1). Node (i,j) sits at (i*h, j*h).
class UnitSquareMesh {
public:
    explicit UnitSquareMesh(int cells_per_side);

    int cells() const { return n_; }
    int nodes_per_side() const { return n_ + 1; }
    int node_count() const { return (n_ + 1) * (n_ + 1); }
    int triangle_count() const { return 2 * n_ * n_; }
    double h() const { return 1.0 / n_; }
    int node(int i, int j) const { return j * (n_ + 1) + i; }
    Eigen::Vector2d coord(int node_index) const;

private:
    int n_;
};

enum class Side { bottom, right, top, left };

// Nodes of one side ordered by increasing coordinate along that side.
std::vector<int> side_nodes(const UnitSquareMesh& mesh, Side side);

// Full P1 stiffness matrix (no boundary conditions applied).
Eigen::SparseMatrix<double> stiffness_matrix(const UnitSquareMesh& mesh);

// load += boundary integral of g * phi_i over one side, g piecewise linear
// with nodal values g_side (ordered as side_nodes).
void add_neumann_load(const UnitSquareMesh& mesh, Side side,
    const Eigen::VectorXd& g_side, Eigen::VectorXd& load);

// triplets += boundary integral of c(x) phi_i phi_j over one side, with the
// coefficient c piecewise linear (nodal values c_side). Exact for the cubic
// integrand.
void add_robin_matrix(const UnitSquareMesh& mesh, Side side,
    const Eigen::VectorXd& c_side, std::vector<Eigen::Triplet<double>>& triplets);

// Sparse LLT with an explicit failure contract: construction throws
// FactorizationError if the matrix is not numerically SPD, and solves verify
// the residual so singular-but-factorizable systems are caught too.
class SpdSolver {
public:
    SpdSolver(const Eigen::SparseMatrix<double>& matrix, std::string context);
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

private:
    Eigen::SparseMatrix<double> matrix_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
    std::string context_;
};

// Laplace solver with a fixed Dirichlet node set; the interior block is
// factorized once so many boundary-data instances can be solved cheaply.
class DirichletLaplace {
public:
    DirichletLaplace(const UnitSquareMesh& mesh, std::vector<int> dirichlet_nodes);

    // Full nodal solution from Dirichlet data (ordered as the node set given
    // at construction) and a load vector over all nodes.
    Eigen::VectorXd solve(const Eigen::VectorXd& dirichlet_values,
        const Eigen::VectorXd& load) const;

    int free_count() const { return static_cast<int>(free_nodes_.size()); }

private:
    int node_count_;
    std::vector<int> dirichlet_nodes_;
    std::vector<int> free_nodes_;
    std::vector<int> position_; // node -> index into free/dirichlet lists
    std::vector<bool> is_dirichlet_;
    Eigen::SparseMatrix<double> coupling_; // free x dirichlet block
    std::unique_ptr<SpdSolver> solver_;
};

// Tridiagonal system stored by bands; solved by the Thomas algorithm
// (the 1d operators here are strictly diagonally dominant).
struct Tridiag {
    Eigen::VectorXd sub, diag, super;

    int size() const { return static_cast<int>(diag.size()); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

    Tridiag& operator+=(const Tridiag& other);
    Tridiag scaled(double factor) const;
};

// P1 operators on [0,1] with `cells` uniform elements (cells+1 nodes).
Tridiag interval_stiffness(int cells);
Tridiag interval_mass(int cells);

} // namespace vbinv::fem

#endif
