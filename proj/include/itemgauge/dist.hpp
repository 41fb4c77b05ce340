#pragma once

namespace itemgauge::dist {

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
double reg_gamma_lower(double a, double x);

// Regularized incomplete beta I_x(a, b) via Lentz continued fraction.
double reg_beta(double a, double b, double x);

double normal_cdf(double z);
double normal_quantile(double p);

double t_cdf(double t, double df);
// Two-sided p-value for a t statistic: P(|T| >= |t|).
double t_p_two_sided(double t, double df);
double t_quantile(double p, double df);

double chi2_cdf(double x, double df);
// Upper tail P(X >= x).
double chi2_sf(double x, double df);

}  // namespace itemgauge::dist
