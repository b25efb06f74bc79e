#pragma once

namespace vecont::special {

/// log Γ(x) for x > 0, Lanczos approximation (g = 7, 9 terms), ~1e-15 relative.
double log_gamma(double x);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees
/// of freedom (df may be fractional).
double student_t_two_sided(double t, double df);

}  // namespace vecont::special
