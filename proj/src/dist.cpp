#include "itemgauge/dist.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace itemgauge::dist {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 500;

// Series expansion of P(a,x), converges fast for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) = 1 - P(a,x), converges fast for x > a + 1.
double gamma_cont_frac(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Lentz continued fraction for the incomplete beta.
double beta_cont_frac(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double reg_gamma_lower(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::domain_error("reg_gamma_lower: invalid arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cont_frac(a, x);
}

double reg_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0 || x < 0.0 || x > 1.0)
    throw std::domain_error("reg_beta: invalid arguments");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cont_frac(a, b, x) / a;
  }
  return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488016887242097); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  // Bisection then Newton polish on the CDF.
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 80; ++i) {
    double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double z = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) {
    double pdf = std::exp(-0.5 * z * z) / 2.5066282746310005024157652848110;
    if (pdf <= 0.0) break;
    z -= (normal_cdf(z) - p) / pdf;
  }
  return z;
}

double t_cdf(double t, double df) {
  if (df <= 0.0) throw std::domain_error("t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * reg_beta(0.5 * df, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

double t_p_two_sided(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return reg_beta(0.5 * df, 0.5, x);
}

double t_quantile(double p, double df) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  double lo = -1e8, hi = 1e8;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (t_cdf(mid, df) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * (1.0 + std::fabs(lo))) break;
  }
  return 0.5 * (lo + hi);
}

double chi2_cdf(double x, double df) {
  if (df <= 0.0) throw std::domain_error("chi2_cdf: df must be positive");
  if (x <= 0.0) return 0.0;
  return reg_gamma_lower(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, double df) { return 1.0 - chi2_cdf(x, df); }

}  // namespace itemgauge::dist
