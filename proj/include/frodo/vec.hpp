#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace frodo {

// Dense double vector used for agent states and gradients.
using Vec = std::vector<double>;

namespace detail {
inline thread_local std::uint64_t flop_counter = 0;
}

// Cumulative floating-point operation count of the vector helpers on the
// calling thread. The complexity tests read this to check O(T*n) scaling.
inline std::uint64_t flop_count() { return detail::flop_counter; }
inline void reset_flop_count() { detail::flop_counter = 0; }

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

inline void check_same_size(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("vector dimension mismatch");
  }
}

// y += c * x
inline void axpy(Vec& y, double c, const Vec& x) {
  check_same_size(y, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
  detail::flop_counter += 2 * y.size();
}

inline void add_in_place(Vec& y, const Vec& x) {
  check_same_size(y, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
  detail::flop_counter += y.size();
}

inline void scale_in_place(Vec& y, double c) {
  for (double& v : y) v *= c;
  detail::flop_counter += y.size();
}

inline Vec sub(const Vec& a, const Vec& b) {
  check_same_size(a, b);
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  detail::flop_counter += a.size();
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  check_same_size(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  detail::flop_counter += 2 * a.size();
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(const Vec& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace frodo
