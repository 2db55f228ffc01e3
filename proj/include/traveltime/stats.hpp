#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "traveltime/errors.hpp"

namespace traveltime {

inline constexpr double kPi = 3.14159265358979323846;

/// Standard normal CDF via the complementary error function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal inverse CDF. Rational approximation (Acklam) refined with
/// one Halley step against erfc, giving close to full double precision.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    fail(Errc::InvalidLevel, "normal_quantile requires p in [0,1]");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * kPi) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

namespace detail {

inline double beta_cont_fraction(double a, double b, double x) {
  const double eps = 1e-15, fpmin = 1e-300;
  const int maxit = 500;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  int m = 1;
  for (; m <= maxit; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  if (m > maxit) fail(Errc::NonConvergent, "incomplete beta continued fraction");
  return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                 b * std::log1p(-x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0))
    return bt * detail::beta_cont_fraction(a, b, x) / a;
  return 1.0 - bt * detail::beta_cont_fraction(b, a, 1.0 - x) / b;
}

/// Student-t CDF with df degrees of freedom.
inline double student_t_cdf(double x, double df) {
  double z = df / (df + x * x);
  double p = 0.5 * incomplete_beta(df / 2.0, 0.5, z);
  return x >= 0.0 ? 1.0 - p : p;
}

/// Student-t inverse CDF. Inverts the incomplete-beta representation with
/// bisection plus Newton refinement; accuracy is limited only by the beta
/// evaluation (relative error well below 1e-12 for moderate df).
inline double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) fail(Errc::InvalidLevel, "student_t_quantile requires p in (0,1)");
  if (df <= 0.0) fail(Errc::InvalidLevel, "student_t_quantile requires df > 0");
  if (p == 0.5) return 0.0;
  bool upper = p > 0.5;
  double tail = upper ? 1.0 - p : p;  // lower-tail mass of |t|
  // Solve I_z(df/2, 1/2) = 2*tail for z = df/(df+x^2), then map back.
  double target = 2.0 * tail;
  double lo = 0.0, hi = 1.0;
  double z = 0.5;
  for (int it = 0; it < 200; ++it) {
    z = 0.5 * (lo + hi);
    double v = incomplete_beta(df / 2.0, 0.5, z);
    if (v < target)
      lo = z;
    else
      hi = z;
    if (hi - lo < 1e-16 * std::max(z, 1e-300)) break;
  }
  z = 0.5 * (lo + hi);
  double x = std::sqrt(df * (1.0 - z) / z);
  // Newton polish on the t CDF itself.
  for (int it = 0; it < 4; ++it) {
    double f = student_t_cdf(x, df) - (upper ? p : 1.0 - p);
    double pdf = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
                 std::sqrt(df * kPi) * std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0);
    if (pdf <= 0.0) break;
    double step = f / pdf;
    if (!std::isfinite(step)) break;
    x -= step;
  }
  return upper ? x : -x;
}

/// Streaming mean/variance accumulator (Welford), mergeable for parallel
/// reductions with deterministic pairwise combining.
class RunningMoments {
 public:
  void add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningMoments& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    double d = o.mean_ - mean_;
    std::size_t n = n_ + o.n_;
    m2_ += o.m2_ + d * d * (static_cast<double>(n_) * static_cast<double>(o.n_)) /
                       static_cast<double>(n);
    mean_ += d * static_cast<double>(o.n_) / static_cast<double>(n);
    n_ = n;
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; zero when fewer than two observations.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct SampleShape {
  double mean = 0, sd = 0, skewness = 0, excess_kurtosis = 0;
};

inline SampleShape sample_shape(std::span<const double> xs) {
  SampleShape s;
  std::size_t n = xs.size();
  if (n < 2) return s;
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : xs) {
    double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  s.mean = mean;
  s.sd = std::sqrt(m2 * static_cast<double>(n) / static_cast<double>(n - 1));
  s.skewness = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return s;
}

struct AdResult {
  double a2_star = 0;  // corrected statistic
  double p_value = 0;
};

/// Anderson-Darling normality test with mean and variance estimated from the
/// sample. Returns the small-sample corrected statistic and the Stephens
/// p-value approximation.
inline AdResult anderson_darling_normality(std::vector<double> xs) {
  std::size_t n = xs.size();
  if (n < 8) fail(Errc::EmptyInput, "anderson_darling_normality needs n >= 8");
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd <= 0) fail(Errc::DegenerateVariance, "anderson_darling_normality: zero variance");
  std::sort(xs.begin(), xs.end());
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double zi = normal_cdf((xs[i] - mean) / sd);
    double zr = normal_cdf((xs[n - 1 - i] - mean) / sd);
    zi = std::min(std::max(zi, 1e-300), 1.0 - 1e-16);
    zr = std::min(std::max(zr, 1e-300), 1.0 - 1e-16);
    acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(zi) + std::log1p(-zr));
  }
  double a2 = -static_cast<double>(n) - acc / static_cast<double>(n);
  double nn = static_cast<double>(n);
  double a2s = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));
  AdResult r;
  r.a2_star = a2s;
  if (a2s < 0.2)
    r.p_value = 1.0 - std::exp(-13.436 + 101.14 * a2s - 223.73 * a2s * a2s);
  else if (a2s < 0.34)
    r.p_value = 1.0 - std::exp(-8.318 + 42.796 * a2s - 59.938 * a2s * a2s);
  else if (a2s < 0.6)
    r.p_value = std::exp(0.9177 - 4.279 * a2s - 1.38 * a2s * a2s);
  else
    r.p_value = std::exp(1.2937 - 5.709 * a2s + 0.0186 * a2s * a2s);
  return r;
}

/// Kolmogorov-Smirnov statistic against Uniform[0,1].
inline double ks_statistic_uniform(std::vector<double> xs) {
  std::size_t n = xs.size();
  if (n == 0) fail(Errc::EmptyInput, "ks_statistic_uniform: empty sample");
  std::sort(xs.begin(), xs.end());
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lo = static_cast<double>(i) / static_cast<double>(n);
    double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d = std::max(d, std::max(xs[i] - lo, hi - xs[i]));
  }
  return d;
}

/// Asymptotic KS critical value at significance alpha (two-sided).
inline double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

/// Type-7 (linear interpolation) empirical quantile of an unsorted sample.
inline double quantile_type7(std::vector<double> xs, double p) {
  if (xs.empty()) fail(Errc::EmptyInput, "quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  if (p <= 0) return xs.front();
  if (p >= 1) return xs.back();
  double h = (static_cast<double>(xs.size()) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - std::floor(h)) * (xs[hi] - xs[lo]);
}

}  // namespace traveltime
