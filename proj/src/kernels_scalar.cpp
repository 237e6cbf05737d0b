#include <cmath>

#include "kernels_impl.hpp"

namespace jpegiv::kernels::detail {
namespace {

void lift_accumulate(double* y, const double* lo, const double* hi, const double* wl, const double* wh,
                     double scale, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += scale * (wl[k] * lo[k] + wh[k] * hi[k]);
}

double threshold_one(double x, double lambda, double gamma, double alpha) {
  const double ax = std::fabs(x);
  if (ax > gamma * lambda) return x;
  const double shrunk = ax - lambda / alpha;
  if (shrunk <= 0.0) return 0.0;
  const double r = shrunk / (1.0 - 1.0 / (alpha * gamma));
  return std::signbit(x) ? -r : r;
}

void mcp_threshold(const double* in, double* out, double lambda, double gamma, double alpha, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = threshold_one(in[k], lambda, gamma, alpha);
}

double mcp_penalty_sum(const double* theta, double lambda, double gamma, std::size_t n) {
  const double knot = gamma * lambda;
  const double flat = 0.5 * lambda * lambda * gamma;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = std::fabs(theta[k]);
    total += (t <= knot) ? lambda * t - t * t / (2.0 * gamma) : flat;
  }
  return total;
}

void add_scaled(double* out, const double* a, const double* b, double scale, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] + scale * b[k];
}

void difference(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] - b[k];
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

constexpr KernelTable kScalar{lift_accumulate, mcp_threshold, mcp_penalty_sum, add_scaled,
                              difference,      dot,           squared_distance};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace jpegiv::kernels::detail
