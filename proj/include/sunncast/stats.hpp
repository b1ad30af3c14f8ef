#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>

#include "sunncast/errors.hpp"

namespace sunncast {

/// Standard normal quantile (inverse CDF), |error| < 1e-13 over (0,1).
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a,b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Student-t quantile: t with P(T_df <= t) = p.
double student_t_quantile(double p, long df);

/// Two-sided critical values at a confidence level, e.g. level 0.99 ->
/// z = 2.5758, t obtained at the 0.995 quantile.
double two_sided_z(double level);
double two_sided_t(double level, long df);

enum class IntervalMethod { ProportionZ, MeanT };

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double confidence_level = 0.0;
  IntervalMethod method = IntervalMethod::ProportionZ;

  bool contains(double v) const { return lower <= v && v <= upper; }
  double width() const { return upper - lower; }
};

/// Normal-approximation interval for an error proportion:
/// e_s +/- z * sqrt(e_s (1 - e_s) / n), clamped to [0,1].
Interval ci_proportion(double error_fraction, long n, double level);

/// Student-t interval from sample moments: mean +/- t_{n-1} * sd / sqrt(n).
Interval ci_mean_from_moments(double mean, double sample_sd, long n, double level);

/// Product-moment correlation; absent if either side has no variance.
/// Expression-friendly: accepts any dense Eigen vector expression.
template <typename DerivedA, typename DerivedB>
std::optional<double> pearson_r(const Eigen::DenseBase<DerivedA>& pred,
                                const Eigen::DenseBase<DerivedB>& actual) {
  const Eigen::Index n = pred.size();
  if (n != actual.size()) throw InputError("pearson_r: length mismatch");
  if (n < 2) throw InputError("pearson_r: need at least 2 points");
  const Eigen::ArrayXd x = pred.derived().template cast<double>().array() - pred.derived().template cast<double>().mean();
  const Eigen::ArrayXd y = actual.derived().template cast<double>().array() - actual.derived().template cast<double>().mean();
  const double sxx = (x * x).sum();
  const double syy = (y * y).sum();
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return (x * y).sum() / std::sqrt(sxx * syy);
}

/// Student-t interval over a sequence of errors (needs >= 2 values).
template <typename Derived>
Interval ci_mean(const Eigen::DenseBase<Derived>& errors, double level) {
  const Eigen::Index n = errors.size();
  if (n < 2) throw InputError("ci_mean: need at least 2 values");
  const Eigen::ArrayXd v = errors.derived().template cast<double>().array();
  const double mean = v.mean();
  const double ss = (v - mean).square().sum();
  const double sd = std::sqrt(ss / double(n - 1));
  return ci_mean_from_moments(mean, sd, long(n), level);
}

}  // namespace sunncast
