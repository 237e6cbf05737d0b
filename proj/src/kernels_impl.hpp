#pragma once

#include <cstddef>

// Raw-pointer kernel entry points behind the dispatcher in kernels.cpp.
namespace jpegiv::kernels::detail {

struct KernelTable {
  void (*lift_accumulate)(double* y, const double* lo, const double* hi, const double* wl, const double* wh,
                          double scale, std::size_t n);
  void (*mcp_threshold)(const double* in, double* out, double lambda, double gamma, double alpha, std::size_t n);
  double (*mcp_penalty_sum)(const double* theta, double lambda, double gamma, std::size_t n);
  void (*add_scaled)(double* out, const double* a, const double* b, double scale, std::size_t n);
  void (*difference)(double* out, const double* a, const double* b, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in

}  // namespace jpegiv::kernels::detail
