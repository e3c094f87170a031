#pragma once

// Student-t distribution via the regularized incomplete beta function, and
// Welch's unequal-variance t-test.

#include "common.hpp"

#include <limits>
#include <span>

namespace aigs::stats {

namespace detail {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
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
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). `one_minus_x` may be passed
/// explicitly when 1 - x would lose precision.
inline double incomplete_beta(double x, double a, double b, double one_minus_x = -1.0) {
  if (one_minus_x < 0) one_minus_x = 1.0 - x;
  if (!(a > 0 && b > 0)) throw PreconditionError("incomplete_beta needs a, b > 0");
  if (x <= 0) return 0.0;
  if (one_minus_x <= 0) return 1.0;
  double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(one_minus_x);
  double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * detail::beta_continued_fraction(one_minus_x, b, a) / b;
}

/// P(T > |t|) for Student t with `df` degrees of freedom.
inline double t_upper_tail(double t, double df) {
  if (std::isinf(t)) return 0.0;
  double t2 = t * t;
  double x = df / (df + t2);
  double one_minus_x = t2 / (df + t2);
  return 0.5 * incomplete_beta(x, df / 2.0, 0.5, one_minus_x);
}

inline double t_cdf(double t, double df) {
  if (!(df > 0)) throw PreconditionError("t distribution needs df > 0");
  double tail = t_upper_tail(t, df);
  return t < 0 ? tail : 1.0 - tail;
}

enum class Tail { left, right, two };

struct WelchResult {
  double t = 0;
  double df = 0;
  double p = 0;
  double p_left = 0;
  double p_right = 0;
};

inline double mean(std::span<const double> xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Unbiased (n - 1) sample variance.
inline double sample_variance(std::span<const double> xs) {
  double m = mean(xs), s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

/// Welch's t-test of mean(a) vs mean(b). Left tail tests mean(a) < mean(b).
///
/// Zero pooled variance: equal means give t = 0 and one-sided p = 0.5;
/// unequal means give t = +/-inf and one-sided p of 0 or 1 by sign. In both
/// cases df is reported as na + nb - 2.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b, Tail tail = Tail::left) {
  if (a.size() < 2 || b.size() < 2) throw PreconditionError("welch_t_test needs at least two values per sample");
  for (auto xs : {a, b})
    for (double x : xs)
      if (!std::isfinite(x)) throw PreconditionError("welch_t_test needs finite values");
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double ma = mean(a), mb = mean(b);
  double qa = sample_variance(a) / na, qb = sample_variance(b) / nb;
  double se2 = qa + qb;
  WelchResult r;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p_left = r.p_right = 0.5;
    } else {
      r.t = ma < mb ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
      r.p_left = ma < mb ? 0.0 : 1.0;
      r.p_right = 1.0 - r.p_left;
    }
  } else {
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    double upper = t_upper_tail(r.t, r.df);
    if (r.t < 0) {
      r.p_left = upper;
      r.p_right = 1.0 - upper;
    } else {
      r.p_right = upper;
      r.p_left = 1.0 - upper;
    }
  }
  switch (tail) {
    case Tail::left: r.p = r.p_left; break;
    case Tail::right: r.p = r.p_right; break;
    case Tail::two: r.p = std::min(1.0, 2.0 * std::min(r.p_left, r.p_right)); break;
  }
  return r;
}

inline WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b, Tail tail = Tail::left) {
  return welch_t_test(std::span<const double>(a), std::span<const double>(b), tail);
}

}  // namespace aigs::stats
