#ifndef VBINV_TESTS_ORACLES_HPP
#define VBINV_TESTS_ORACLES_HPP

// Test-side oracles, kept independent of the library implementation paths
// they are used to check: adaptive quadrature, deterministic Monte-Carlo
// sampling, and high-order numerical differentiation.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a, double b)
{
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

inline double adaptive_simpson_impl(const std::function<double(double)>& f, double a,
    double b, double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double left = simpson(f, a, m);
    const double right = simpson(f, m, b);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_impl(f, a, m, left, 0.5 * tol, depth - 1)
        + adaptive_simpson_impl(f, m, b, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson quadrature of f over [a, b]. The interval is first cut
// into uniform panels so narrow features cannot slip between the probe
// points of the top-level estimate.
inline double integrate(const std::function<double(double)>& f, double a, double b,
    double tol = 1e-12, int panels = 64)
{
    double total = 0.0;
    const double width = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * width;
        const double hi = (k + 1 == panels) ? b : lo + width;
        total += adaptive_simpson_impl(f, lo, hi, simpson(f, lo, hi), tol / panels, 48);
    }
    return total;
}

// Deterministic uniforms/normals for Monte-Carlo oracles.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(std::uint64_t seed)
        : gen(seed)
    {
    }

    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

    double normal()
    {
        double u1 = uniform();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform());
    }

    // Exponential via inverse CDF; Gamma(1, rate).
    double exponential(double rate)
    {
        double u = uniform();
        if (u <= 0.0)
            u = 0x1.0p-53;
        return -std::log(u) / rate;
    }

    Eigen::VectorXd normal_vector(int n)
    {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i)
            z[i] = normal();
        return z;
    }
};

// Samples from N(mean, cov) using a Cholesky factor computed here.
struct GaussianSampler {
    Eigen::VectorXd mean;
    Eigen::MatrixXd chol;

    GaussianSampler(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov)
        : mean(mu)
        , chol(Eigen::LLT<Eigen::MatrixXd>(cov).matrixL())
    {
    }

    Eigen::VectorXd draw(Rng& rng) const
    {
        return mean + chol * rng.normal_vector(static_cast<int>(mean.size()));
    }
};

// Fourth-order central difference of f at x.
inline double derivative(const std::function<double(double)>& f, double x,
    double h = 1e-4)
{
    return (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h);
}

// Sample mean and standard error of the mean.
struct MonteCarlo {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

inline MonteCarlo monte_carlo(const std::function<double()>& draw, int n)
{
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = draw();
        sum += v;
        sumsq += v * v;
    }
    MonteCarlo mc;
    mc.mean = sum / n;
    const double var = (sumsq - sum * sum / n) / (n - 1.0);
    mc.stderr_mean = std::sqrt(var / n);
    return mc;
}

} // namespace oracles

#endif
