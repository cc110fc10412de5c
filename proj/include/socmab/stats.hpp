#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "socmab/errors.hpp"

namespace socmab::stats {

/// Correlation requested over an input without variance.
class UndefinedCorrelation : public DomainError {
 public:
  using DomainError::DomainError;
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance (n - 1 denominator).
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw DomainError("variance needs at least 2 observations");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

/// Standard error of the mean; absent for fewer than 2 observations.
inline std::optional<double> standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

/// Product-moment correlation.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: samples differ in length");
  if (xs.size() < 2) throw DomainError("pearson: need at least 2 pairs");
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: constant input");
  const double r = sxy / std::sqrt(sxx * syy);
  return r > 1.0 ? 1.0 : (r < -1.0 ? -1.0 : r);
}

/// Pearson over pairs, dropping any pair with a missing side first.
inline double pearson(std::span<const std::optional<double>> xs,
                      std::span<const std::optional<double>> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: samples differ in length");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i] || !ys[i]) continue;
    a.push_back(*xs[i]);
    b.push_back(*ys[i]);
  }
  return pearson(std::span<const double>(a), std::span<const double>(b));
}

/// ICC(1) from a one-way random-effects ANOVA with the k0 correction for unequal
/// group sizes. Negative estimates are reported as 0.
inline double icc_oneway(const std::vector<std::vector<double>>& groups) {
  const std::size_t g = groups.size();
  if (g < 2) throw DomainError("icc: need at least 2 groups");
  std::size_t n = 0;
  double total = 0.0, sum_k2 = 0.0;
  for (const auto& grp : groups) {
    if (grp.empty()) throw DomainError("icc: empty group");
    n += grp.size();
    sum_k2 += static_cast<double>(grp.size()) * static_cast<double>(grp.size());
    for (double x : grp) total += x;
  }
  if (n < g + 2) throw DomainError("icc: need at least 2 observations beyond the group count");
  const double grand = total / static_cast<double>(n);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& grp : groups) {
    const double m = mean(grp);
    ssb += static_cast<double>(grp.size()) * (m - grand) * (m - grand);
    for (double x : grp) ssw += (x - m) * (x - m);
  }
  const double msb = ssb / static_cast<double>(g - 1);
  const double msw = ssw / static_cast<double>(n - g);
  const double k0 = (static_cast<double>(n) - sum_k2 / static_cast<double>(n)) / static_cast<double>(g - 1);
  const double denom = msb + (k0 - 1.0) * msw;
  if (!(denom > 0.0)) throw DomainError("icc: no variance in the data");
  const double icc = (msb - msw) / denom;
  return icc < 0.0 ? 0.0 : (icc > 1.0 ? 1.0 : icc);
}

// ---------------------------------------------------------------------------
// Student-t distribution via the regularized incomplete beta function

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw DomainError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw DomainError("student t: df must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

/// P(T <= t).
inline double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

/// Welch's unequal-variance two-sample t-test with Welch-Satterthwaite df.
inline TTestResult welch_t(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2) throw DomainError("welch t: each sample needs n >= 2");
  const double vx = sample_variance(xs) / static_cast<double>(xs.size());
  const double vy = sample_variance(ys) / static_cast<double>(ys.size());
  const double se2 = vx + vy;
  if (!(se2 > 0.0)) throw DomainError("welch t: both samples are constant");
  TTestResult r;
  r.t = (mean(xs) - mean(ys)) / std::sqrt(se2);
  r.df = se2 * se2 /
         (vx * vx / static_cast<double>(xs.size() - 1) + vy * vy / static_cast<double>(ys.size() - 1));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace socmab::stats
