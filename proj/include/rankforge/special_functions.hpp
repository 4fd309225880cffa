#pragma once

namespace rankforge::asym {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Inverse of P(a, .): the x with P(a, x) = p, for p in [0, 1).
double inv_gamma_p(double a, double p);

/// Regularized incomplete beta I_x(a, b), x in [0, 1].
double inc_beta(double a, double b, double x);

/// Inverse of I_.(a, b): the x with I_x(a, b) = p.
double inv_inc_beta(double a, double b, double p);

/// Chi-squared CDF with (possibly fractional) df > 0.
double chi2_cdf(double df, double x);

/// Chi-squared inverse CDF with (possibly fractional) df > 0,
/// level in (0, 1).
double chi2_quantile_real(double df, double level);

}  // namespace rankforge::asym
