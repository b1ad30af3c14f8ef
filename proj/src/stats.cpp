#include "sunncast/stats.hpp"

#include <algorithm>
#include <cmath>

namespace sunncast {

namespace {

// Acklam's rational approximation, then one Halley step against erfc.
double normal_quantile_approx(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
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

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must be in (0,1)");
  double x = normal_quantile_approx(p);
  // Halley refinement: residual via erfc, accurate in both tails.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw InputError("incomplete beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log1p(-x) + a * std::log(x)) *
                   beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_quantile(double p, long df) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("student_t_quantile: p must be in (0,1)");
  if (df < 1) throw InputError("student_t_quantile: df must be >= 1");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);

  // P(|T| > t) = I_x(df/2, 1/2) with x = df / (df + t^2); invert by
  // bisection on x, which is monotone and bracketed in (0,1).
  const double two_tail = 2.0 * (1.0 - p);
  const double a = 0.5 * double(df);
  const double b = 0.5;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < two_tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double x = 0.5 * (lo + hi);
  return std::sqrt(double(df) * (1.0 - x) / x);
}

double two_sided_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must be in (0,1)");
  return normal_quantile(0.5 * (1.0 + level));
}

double two_sided_t(double level, long df) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must be in (0,1)");
  return student_t_quantile(0.5 * (1.0 + level), df);
}

Interval ci_proportion(double error_fraction, long n, double level) {
  if (error_fraction < 0.0 || error_fraction > 1.0) {
    throw InputError("ci_proportion: error fraction must be in [0,1]");
  }
  if (n < 1) throw InputError("ci_proportion: n must be >= 1");
  const double z = two_sided_z(level);
  const double half = z * std::sqrt(error_fraction * (1.0 - error_fraction) / double(n));
  Interval iv;
  iv.lower = std::clamp(error_fraction - half, 0.0, 1.0);
  iv.upper = std::clamp(error_fraction + half, 0.0, 1.0);
  iv.confidence_level = level;
  iv.method = IntervalMethod::ProportionZ;
  return iv;
}

Interval ci_mean_from_moments(double mean, double sample_sd, long n, double level) {
  if (n < 2) throw InputError("ci_mean: need at least 2 values");
  const double t = two_sided_t(level, n - 1);
  const double half = t * sample_sd / std::sqrt(double(n));
  Interval iv;
  iv.lower = mean - half;
  iv.upper = mean + half;
  iv.confidence_level = level;
  iv.method = IntervalMethod::MeanT;
  return iv;
}

}  // namespace sunncast
