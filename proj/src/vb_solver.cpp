#include "vbinv/vb_solver.hpp"
#include "vbinv/csv.hpp"
#include "vbinv/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <string>

namespace vbinv {

namespace {

void check_problem_dims(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L)
{
    if (y.size() != K.n())
        throw DimensionError("data length does not match model rows");
    if (L.cols() != K.m())
        throw DimensionError("smoothness operator columns do not match unknown dimension");
}

} // namespace

GaussianPosterior update_q_u(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const Eigen::VectorXd& Ew, double Elambda)
{
    check_problem_dims(K, y, L);
    if (Ew.size() != K.n())
        throw DimensionError("weight vector length does not match data length");
    if (!(Ew.minCoeff() > 0.0))
        throw DomainError("weights must be positive");
    if (!(Elambda > 0.0) || !std::isfinite(Elambda))
        throw DomainError("lambda expectation must be positive");

    const int m = K.m();
    Eigen::MatrixXd H = K.matrix.transpose() * Ew.asDiagonal() * K.matrix
        + Elambda * (L.matrix().transpose() * L.matrix());
    H = ((H + H.transpose()) * 0.5).eval();

    // Pivoted LDLT copes with the wide weight spread the heavy-tail model
    // produces; positivity of D is the definiteness check.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
        throw FactorizationError("posterior precision K'WK + lambda L'L is not positive"
                                 " definite (singular or indefinite system)");

    GaussianPosterior q;
    q.mean = ldlt.solve(K.matrix.transpose() * Ew.cwiseProduct(y));
    q.covariance = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
    q.covariance = ((q.covariance + q.covariance.transpose()) * 0.5).eval();
    return q;
}

Eigen::VectorXd expected_residual_sq(const LinearModel& K, const Eigen::VectorXd& y,
    const GaussianPosterior& q_u)
{
    if (y.size() != K.n())
        throw DimensionError("data length does not match model rows");
    if (q_u.mean.size() != K.m() || q_u.covariance.rows() != K.m())
        throw DimensionError("posterior dimension does not match model columns");
    const Eigen::VectorXd residual = K.matrix * q_u.mean - y;
    const Eigen::VectorXd predictive
        = (K.matrix * q_u.covariance).cwiseProduct(K.matrix).rowwise().sum();
    return residual.array().square().matrix() + predictive;
}

std::vector<GammaParams> update_q_w(const GammaParams& prior_w,
    const Eigen::VectorXd& residual_sq)
{
    validate(prior_w);
    if (residual_sq.size() > 0 && residual_sq.minCoeff() < 0.0)
        throw DomainError("expected squared residuals must be nonnegative");
    std::vector<GammaParams> q_w(static_cast<size_t>(residual_sq.size()));
    for (Eigen::Index i = 0; i < residual_sq.size(); ++i)
        q_w[static_cast<size_t>(i)]
            = GammaParams{ prior_w.shape + 0.5, prior_w.rate + 0.5 * residual_sq[i] };
    return q_w;
}

GammaParams update_q_lambda(const GammaParams& prior_lambda,
    const SmoothnessOperator& L, const GaussianPosterior& q_u)
{
    validate(prior_lambda);
    if (q_u.mean.size() != L.cols())
        throw DimensionError("posterior dimension does not match smoothness operator");
    const double mean_term = (L.matrix() * q_u.mean).squaredNorm();
    const double trace_term
        = (L.matrix() * q_u.covariance).cwiseProduct(L.matrix()).sum();
    return GammaParams{ prior_lambda.shape + 0.5 * L.rank(),
        prior_lambda.rate + 0.5 * (mean_term + trace_term) };
}

double free_energy(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const VBState& state, const HyperConfig& config)
{
    check_problem_dims(K, y, L);
    const int n = K.n();
    const int m = K.m();
    if (static_cast<int>(state.q_w.size()) != n)
        throw DimensionError("weight factor count does not match data length");

    const GammaParams& pl = config.prior_lambda;
    const GammaParams& pw = state.t_params;
    validate(pl);
    validate(pw);

    // Negative entropies of the factors.
    Eigen::LLT<Eigen::MatrixXd> llt(state.q_u.covariance);
    if (llt.info() != Eigen::Success)
        throw FactorizationError("covariance is not positive definite");
    double logdet_cov = 0.0;
    for (int i = 0; i < m; ++i)
        logdet_cov += 2.0 * std::log(llt.matrixL()(i, i));
    double value = -0.5 * logdet_cov - 0.5 * m * (1.0 + std::log(2.0 * M_PI));

    auto neg_entropy_gamma = [](const GammaParams& g) {
        return std::log(g.rate) - std::lgamma(g.shape)
            + (g.shape - 1.0) * digamma(g.shape) - g.shape;
    };
    for (const auto& g : state.q_w)
        value += neg_entropy_gamma(g);
    value += neg_entropy_gamma(state.q_lambda);

    // Cross terms: minus the expected unnormalized log posterior.
    const Eigen::VectorXd rsq = expected_residual_sq(K, y, state.q_u);
    const auto lm = gamma_moments(state.q_lambda);
    double expected_log_p = -0.5 * n * std::log(2.0 * M_PI);
    for (int i = 0; i < n; ++i) {
        const auto wm = gamma_moments(state.q_w[static_cast<size_t>(i)]);
        expected_log_p += 0.5 * wm.mean_log - 0.5 * wm.mean * rsq[i];
        expected_log_p += pw.shape * std::log(pw.rate) - std::lgamma(pw.shape)
            + (pw.shape - 1.0) * wm.mean_log - pw.rate * wm.mean;
    }
    const double mean_term = (L.matrix() * state.q_u.mean).squaredNorm();
    const double trace_term
        = (L.matrix() * state.q_u.covariance).cwiseProduct(L.matrix()).sum();
    expected_log_p += 0.5 * L.rank() * lm.mean_log - 0.5 * lm.mean * (mean_term + trace_term);
    expected_log_p += pl.shape * std::log(pl.rate) - std::lgamma(pl.shape)
        + (pl.shape - 1.0) * lm.mean_log - pl.rate * lm.mean;

    return value - expected_log_p;
}

TParamResult update_t_params(const std::vector<GammaParams>& weights)
{
    if (weights.empty())
        throw DimensionError("update_t_params requires at least one weight factor");
    double mean_w = 0.0;
    double mean_log_w = 0.0;
    for (const auto& g : weights) {
        const auto mom = gamma_moments(g);
        mean_w += mom.mean;
        mean_log_w += mom.mean_log;
    }
    mean_w /= static_cast<double>(weights.size());
    mean_log_w /= static_cast<double>(weights.size());

    // Jensen gap; nonnegative in exact arithmetic.
    double gap = std::log(mean_w) - mean_log_w;
    bool capped = false;
    if (!(gap > 1e-12)) {
        gap = 1e-12;
        capped = true;
    }

    // Solve ln a - psi(a) = gap. The left side decreases monotonically from
    // +inf to 0, behaving like 1/(2a) for large a.
    double lo = 1e-12;
    double hi = 1e13;
    double alpha = std::min(std::max(0.5 / gap, lo), hi);
    for (int it = 0; it < 200; ++it) {
        const double g = std::log(alpha) - digamma(alpha) - gap;
        if (std::abs(g) < 1e-13)
            break;
        if (g > 0.0)
            lo = alpha;
        else
            hi = alpha;
        const double slope = 1.0 / alpha - trigamma(alpha);
        double next = alpha - g / slope;
        if (!(next > lo) || !(next < hi))
            next = 0.5 * (lo + hi); // bisection fallback
        alpha = next;
    }

    constexpr double kAlphaCeiling = 1e6;
    if (alpha > kAlphaCeiling) {
        alpha = kAlphaCeiling;
        capped = true;
    }
    return TParamResult{ GammaParams{ alpha, alpha / mean_w }, capped };
}

VBInit default_init(const HyperConfig& config, int n)
{
    // Unit-expectation starting factors: unweighted least squares on the
    // first sweep rather than the extreme prior mean alpha1/beta1.
    VBInit init;
    init.q_w.assign(static_cast<size_t>(n), GammaParams{ 1.0, 1.0 });
    init.q_lambda = GammaParams{ 1.0, 1.0 };
    init.t_params = config.prior_w;
    return init;
}

VBState run_vb_linear(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const HyperConfig& config)
{
    return run_vb_linear(K, y, L, config, default_init(config, K.n()));
}

VBState run_vb_linear(const LinearModel& K, const Eigen::VectorXd& y,
    const SmoothnessOperator& L, const HyperConfig& config, const VBInit& init)
{
    check_problem_dims(K, y, L);
    validate(config.prior_lambda);
    validate(config.prior_w);
    if (!(config.tol > 0.0))
        throw DomainError("tolerance must be positive");
    if (config.max_iter < 1)
        throw DomainError("max_iter must be at least 1");

    VBState state;
    state.q_w = init.q_w.empty()
        ? std::vector<GammaParams>(static_cast<size_t>(K.n()), GammaParams{ 1.0, 1.0 })
        : init.q_w;
    if (static_cast<int>(state.q_w.size()) != K.n())
        throw DimensionError("warm-start weight count does not match data length");
    state.q_lambda = init.q_lambda;
    state.t_params = init.t_params;

    Eigen::VectorXd prev_mean;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        Eigen::VectorXd Ew(K.n());
        for (int i = 0; i < K.n(); ++i) {
            const auto& g = state.q_w[static_cast<size_t>(i)];
            Ew[i] = g.shape / g.rate;
        }
        const double Elambda = state.q_lambda.shape / state.q_lambda.rate;

        try {
            state.q_u = update_q_u(K, y, L, Ew, Elambda);
        } catch (const FactorizationError& err) {
            throw FactorizationError("iteration " + std::to_string(iter) + ": "
                + err.what());
        }
        state.q_w = update_q_w(state.t_params, expected_residual_sq(K, y, state.q_u));
        state.q_lambda = update_q_lambda(config.prior_lambda, L, state.q_u);
        if (config.update_t_params) {
            const TParamResult refreshed = update_t_params(state.q_w);
            state.t_params = refreshed.params;
            state.t_params_capped = state.t_params_capped || refreshed.capped;
        }

        state.iter = iter;
        const double mean_norm = state.q_u.mean.norm();
        const double rel_change = (prev_mean.size() == 0)
            ? 1.0
            : (state.q_u.mean - prev_mean).norm() / mean_norm;
        state.trace.push_back(IterationRecord{ iter,
            state.q_lambda.shape / state.q_lambda.rate, rel_change,
            free_energy(K, y, L, state, config) });

        if (iter > 1 && rel_change <= config.tol) {
            state.converged = true;
            break;
        }
        prev_mean = state.q_u.mean;
    }
    return state;
}

void write_trace_csv(const std::filesystem::path& path, const VBState& state)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(state.trace.size());
    for (const auto& rec : state.trace)
        rows.push_back({ static_cast<double>(rec.iter), rec.e_lambda, rec.rel_change,
            rec.free_energy });
    csv::write_table(path, { "iter", "E_lambda", "rel_change", "free_energy" }, rows);
}

void write_weights_csv(const std::filesystem::path& path, const VBState& state)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(state.q_w.size());
    for (size_t i = 0; i < state.q_w.size(); ++i)
        rows.push_back({ static_cast<double>(i), state.q_w[i].shape / state.q_w[i].rate });
    csv::write_table(path, { "index", "E_w" }, rows);
}

Eigen::VectorXd weight_means(const VBState& state)
{
    Eigen::VectorXd means(static_cast<Eigen::Index>(state.q_w.size()));
    for (size_t i = 0; i < state.q_w.size(); ++i)
        means[static_cast<Eigen::Index>(i)] = state.q_w[i].shape / state.q_w[i].rate;
    return means;
}

} // namespace vbinv
