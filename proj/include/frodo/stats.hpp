#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace frodo {

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, n-1 denominator
  double min = 0.0;
  double max = 0.0;
};

inline SampleSummary summarize(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("summarize: empty sample");
  SampleSummary s;
  s.count = xs.size();
  s.min = xs[0];
  s.max = xs[0];
  for (double v : xs) {
    s.mean += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double v : xs) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

// Survival function of the Kolmogorov distribution,
// Q(z) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 z^2), with the theta-function
// form for small z where the alternating series converges too slowly.
inline double kolmogorov_q(double z) {
  if (z <= 0.0) return 1.0;
  if (z < 0.4) {
    // 1 - Q(z) via the transformed series: accurate and fast for small z
    const double factor = std::sqrt(2.0 * 3.14159265358979323846) / z;
    double cdf = 0.0;
    for (int j = 1; j <= 20; j += 2) {  // odd terms only
      const double term = std::exp(-static_cast<double>(j) * j *
                                   9.869604401089358 / (8.0 * z * z));
      cdf += term;
      if (term < 1e-18) break;
    }
    return std::clamp(1.0 - factor * cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * z * z);
    q += (j % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

enum class KsDirection { less, greater };

namespace detail {

// Supremum ECDF gaps over the merged support, evaluating both one-sided
// limits at every point so ties are handled exactly.
struct EcdfGaps {
  double d_abs = 0.0;
  double d_a_over = 0.0;  // sup (Fa - Fb)
  double d_b_over = 0.0;  // sup (Fb - Fa)
};

inline EcdfGaps ecdf_gaps(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("KS test: empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  EcdfGaps g;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    const double v = (ib >= b.size() || (ia < a.size() && a[ia] <= b[ib]))
                         ? a[ia]
                         : b[ib];
    // left limit: P(X < v)
    const double left = static_cast<double>(ia) / na - static_cast<double>(ib) / nb;
    g.d_a_over = std::max(g.d_a_over, left);
    g.d_b_over = std::max(g.d_b_over, -left);
    while (ia < a.size() && a[ia] == v) ++ia;
    while (ib < b.size() && b[ib] == v) ++ib;
    // right limit: P(X <= v)
    const double right = static_cast<double>(ia) / na - static_cast<double>(ib) / nb;
    g.d_a_over = std::max(g.d_a_over, right);
    g.d_b_over = std::max(g.d_b_over, -right);
  }
  g.d_abs = std::max(g.d_a_over, g.d_b_over);
  return g;
}

inline double effective_size(std::size_t na, std::size_t nb) {
  return static_cast<double>(na) * static_cast<double>(nb) /
         static_cast<double>(na + nb);
}

}  // namespace detail

// Two-sided two-sample KS test: D = sup |Fa - Fb|, p from the asymptotic
// Kolmogorov distribution at sqrt(n_e) * D with n_e = na*nb/(na+nb).
inline KsResult ks_two_sided(const std::vector<double>& a,
                             const std::vector<double>& b) {
  const auto gaps = detail::ecdf_gaps(a, b);
  const double ne = detail::effective_size(a.size(), b.size());
  return {gaps.d_abs, kolmogorov_q(std::sqrt(ne) * gaps.d_abs)};
}

// One-sided test. direction = less tests "a is stochastically smaller":
// D+ = sup (Fa - Fb), p = exp(-2 n_e D+^2).
inline KsResult ks_one_sided(const std::vector<double>& a,
                             const std::vector<double>& b,
                             KsDirection direction) {
  const auto gaps = detail::ecdf_gaps(a, b);
  const double d =
      direction == KsDirection::less ? gaps.d_a_over : gaps.d_b_over;
  const double ne = detail::effective_size(a.size(), b.size());
  const double p = std::exp(-2.0 * ne * d * d);
  return {d, std::clamp(p, 0.0, 1.0)};
}

}  // namespace frodo
