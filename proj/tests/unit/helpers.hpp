#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"

#include "jpegiv/error.hpp"

namespace testing {

using Rng = std::mt19937_64;

/// Strictly increasing grid with spacings drawn from (lo, hi).
inline std::vector<double> random_grid(Rng& rng, std::size_t n, double lo = 0.1, double hi = 10.0) {
  std::uniform_real_distribution<double> step(lo, hi);
  std::vector<double> g(n);
  double t = step(rng);
  for (auto& x : g) {
    x = t;
    t += step(rng);
  }
  return g;
}

inline std::vector<double> random_values(Rng& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double inner(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace testing

/// Runs `expr` and checks it throws jpegiv::Error carrying `code`.
#define CHECK_ERROR_CODE(expr, expected)                     \
  do {                                                       \
    bool thrown_ = false;                                    \
    try {                                                    \
      (void)(expr);                                          \
    } catch (const jpegiv::Error& e_) {                      \
      thrown_ = true;                                        \
      CHECK(e_.code() == (expected));                        \
    }                                                        \
    CHECK_MESSAGE(thrown_, "expected an error from " #expr); \
  } while (0)
