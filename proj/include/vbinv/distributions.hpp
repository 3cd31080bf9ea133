#ifndef VBINV_DISTRIBUTIONS_HPP
#define VBINV_DISTRIBUTIONS_HPP

// Probability primitives shared by the solver and the tests: Gamma and
// Student-t densities, Gamma moments, and the digamma/trigamma functions.
// Everything here is a pure function of its arguments.

namespace vbinv {

// Shape/rate pair of a Gamma distribution G(t; shape, rate).
struct GammaParams {
    double shape = 1.0; // alpha
    double rate = 1.0;  // beta
};

// Degrees of freedom and scale of a centered Student-t distribution.
struct StudentTParams {
    double dof = 1.0;   // nu
    double scale = 1.0; // sigma
};

// Throws DomainError unless shape > 0 and rate > 0 (and both finite).
void validate(const GammaParams& p);
// Throws DomainError unless dof > 0 and scale > 0 (and both finite).
void validate(const StudentTParams& p);

// The t(nu, sigma) scale-mixture weight follows G(nu/2, nu sigma^2 / 2).
GammaParams to_gamma(const StudentTParams& p);
StudentTParams to_student_t(const GammaParams& p);

// G(t; a, b) = b^a / Gamma(a) * t^(a-1) * exp(-b t),  t >= 0.
// For shape < 1 the density is unbounded at the origin, so t > 0 is required.
double gamma_density(double t, const GammaParams& p);
double gamma_log_density(double t, const GammaParams& p);

struct GammaMoments {
    double mean;     // E[w] = a / b
    double mean_log; // E[ln w] = psi(a) - ln b
};
GammaMoments gamma_moments(const GammaParams& p);

// Centered t density with dof nu and scale sigma, symmetric in z.
double student_t_density(double z, const StudentTParams& p);
double student_t_log_density(double z, const StudentTParams& p);

// psi(s) = d/ds ln Gamma(s), s > 0. Recurrence shift plus asymptotic series;
// relative accuracy ~1e-12 on [1e-3, 1e6].
double digamma(double s);

// psi'(s), same scheme. Used by the Newton solve for the t parameters.
double trigamma(double s);

} // namespace vbinv

#endif
