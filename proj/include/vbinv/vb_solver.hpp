#ifndef VBINV_VB_SOLVER_HPP
#define VBINV_VB_SOLVER_HPP

// Coordinate-ascent variational approximation of the augmented posterior for
// linear forward models under the heavy-tailed noise model. The separable
// factors are a Gaussian q(u), independent Gamma weights q(w_i) and a Gamma
// smoothness precision q(lambda); each sweep updates them in turn by exact
// minimization of the KL objective.

#include "vbinv/distributions.hpp"
#include "vbinv/forward_models.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace vbinv {

struct HyperConfig {
    GammaParams prior_lambda{ 1.0, 1e-10 }; // (alpha0, beta0)
    GammaParams prior_w{ 1.0, 1e-10 };      // (alpha1, beta1)
    double tol = 1e-5;                      // relative change of the mean
    int max_iter = 200;
    bool update_t_params = false;
};

struct GaussianPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance; // SPD
};

struct IterationRecord {
    int iter;
    double e_lambda;
    double rel_change;
    double free_energy;
};

struct VBState {
    GaussianPosterior q_u;
    std::vector<GammaParams> q_w; // one factor per measurement
    GammaParams q_lambda;
    GammaParams t_params; // current (alpha1, beta1)
    int iter = 0;
    bool converged = false;
    bool t_params_capped = false;
    std::vector<IterationRecord> trace;
};

// Gaussian factor: covariance [K' W K + lambda L' L]^{-1}, mean covariance
// K' W y, with W = diag(Ew). Throws FactorizationError when the system is
// not SPD.
GaussianPosterior update_q_u(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const Eigen::VectorXd& Ew, double Elambda);

// Componentwise E[(K u - y)_i^2] under q(u): squared residual at the mean
// plus the predictive variance diag(K cov K').
Eigen::VectorXd expected_residual_sq(const LinearModel& K, const Eigen::VectorXd& y,
    const GaussianPosterior& q_u);

// Weight factors: G(alpha1 + 1/2, beta1 + residual_sq_i / 2).
std::vector<GammaParams> update_q_w(const GammaParams& prior_w,
    const Eigen::VectorXd& residual_sq);

// Smoothness precision: G(alpha0 + s/2, beta0 + E[||L u||^2] / 2).
GammaParams update_q_lambda(const GammaParams& prior_lambda,
    const SmoothnessOperator& L, const GaussianPosterior& q_u);

// KL objective up to the constant log-evidence (and the unknown prior
// normalizer): exact differences across coordinate updates, non-increasing
// under the sweeps above.
double free_energy(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const VBState& state, const HyperConfig& config);

struct TParamResult {
    GammaParams params;
    bool capped = false; // hit the alpha1 ceiling or a degenerate moment gap
};

// Maximum-likelihood refresh of (alpha1, beta1) from the weight factors:
// eliminates beta1 = alpha1 / mean(E[w]) and solves
// ln(alpha1) - psi(alpha1) = ln(mean E[w]) - mean(E[ln w]) by safeguarded
// Newton iteration. Stationarity residual below 1e-10 unless capped.
TParamResult update_t_params(const std::vector<GammaParams>& weights);

// Warm-start state for the hyper factors (used by the outer nonlinear loop).
struct VBInit {
    std::vector<GammaParams> q_w; // empty = unit-expectation default
    GammaParams q_lambda{ 1.0, 1.0 };
    GammaParams t_params{ 1.0, 1e-10 };
};

VBInit default_init(const HyperConfig& config, int n);

// Full coordinate-ascent loop with the relative-change stopping rule.
VBState run_vb_linear(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const HyperConfig& config);
VBState run_vb_linear(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const HyperConfig& config, const VBInit& init);

// iter,E_lambda,rel_change,free_energy
void write_trace_csv(const std::filesystem::path& path, const VBState& state);
// index,E_w
void write_weights_csv(const std::filesystem::path& path, const VBState& state);

// E[w_i] of every weight factor, in order.
Eigen::VectorXd weight_means(const VBState& state);

} // namespace vbinv

#endif
