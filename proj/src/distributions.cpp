#include "vbinv/distributions.hpp"
#include "vbinv/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace vbinv {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

void validate(const GammaParams& p)
{
    if (!positive_finite(p.shape) || !positive_finite(p.rate))
        throw DomainError("GammaParams requires finite shape > 0 and rate > 0, got shape="
            + std::to_string(p.shape) + " rate=" + std::to_string(p.rate));
}

void validate(const StudentTParams& p)
{
    if (!positive_finite(p.dof) || !positive_finite(p.scale))
        throw DomainError("StudentTParams requires finite dof > 0 and scale > 0, got dof="
            + std::to_string(p.dof) + " scale=" + std::to_string(p.scale));
}

GammaParams to_gamma(const StudentTParams& p)
{
    validate(p);
    return GammaParams{ p.dof / 2.0, p.dof * p.scale * p.scale / 2.0 };
}

StudentTParams to_student_t(const GammaParams& p)
{
    validate(p);
    return StudentTParams{ 2.0 * p.shape, std::sqrt(p.rate / p.shape) };
}

double gamma_log_density(double t, const GammaParams& p)
{
    validate(p);
    if (!std::isfinite(t) || t < 0.0)
        throw DomainError("gamma density requires finite t >= 0");
    if (t == 0.0) {
        if (p.shape < 1.0)
            throw DomainError("gamma density with shape < 1 requires t > 0");
        if (p.shape == 1.0)
            return std::log(p.rate);
        return -std::numeric_limits<double>::infinity(); // density 0 at origin
    }
    return p.shape * std::log(p.rate) - std::lgamma(p.shape)
        + (p.shape - 1.0) * std::log(t) - p.rate * t;
}

double gamma_density(double t, const GammaParams& p)
{
    return std::exp(gamma_log_density(t, p));
}

GammaMoments gamma_moments(const GammaParams& p)
{
    validate(p);
    return GammaMoments{ p.shape / p.rate, digamma(p.shape) - std::log(p.rate) };
}

double student_t_log_density(double z, const StudentTParams& p)
{
    validate(p);
    if (!std::isfinite(z))
        throw DomainError("student t density requires finite z");
    const double nu = p.dof;
    const double zs = z / p.scale;
    return std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0)
        - 0.5 * std::log(M_PI * nu) - std::log(p.scale)
        - 0.5 * (nu + 1.0) * std::log1p(zs * zs / nu);
}

double student_t_density(double z, const StudentTParams& p)
{
    return std::exp(student_t_log_density(z, p));
}

// Asymptotic series coefficients B_2k / (2k) for psi and B_2k for psi'.
double digamma(double s)
{
    if (!positive_finite(s))
        throw DomainError("digamma requires finite s > 0");
    double acc = 0.0;
    while (s < 10.0) { // shift up until the asymptotic series converges fast
        acc -= 1.0 / s;
        s += 1.0;
    }
    const double inv = 1.0 / s;
    const double inv2 = inv * inv;
    // psi(s) ~ ln s - 1/(2s) - sum B_2k / (2k s^2k)
    double series = inv2 * (1.0 / 12.0
        + inv2 * (-1.0 / 120.0
        + inv2 * (1.0 / 252.0
        + inv2 * (-1.0 / 240.0
        + inv2 * (1.0 / 132.0
        + inv2 * (-691.0 / 32760.0
        + inv2 * (1.0 / 12.0)))))));
    return acc + std::log(s) - 0.5 * inv - series;
}

double trigamma(double s)
{
    if (!positive_finite(s))
        throw DomainError("trigamma requires finite s > 0");
    double acc = 0.0;
    while (s < 10.0) {
        acc += 1.0 / (s * s);
        s += 1.0;
    }
    const double inv = 1.0 / s;
    const double inv2 = inv * inv;
    // psi'(s) ~ 1/s + 1/(2s^2) + sum B_2k / s^(2k+1)
    double series = inv * inv2 * (1.0 / 6.0
        + inv2 * (-1.0 / 30.0
        + inv2 * (1.0 / 42.0
        + inv2 * (-1.0 / 30.0
        + inv2 * (5.0 / 66.0
        + inv2 * (-691.0 / 2730.0
        + inv2 * (7.0 / 6.0)))))));
    return acc + inv + 0.5 * inv2 + series;
}

} // namespace vbinv
