#include "jpegiv/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "jpegiv/error.hpp"
#include "kernels_impl.hpp"

namespace jpegiv::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("JPEGIV_ISA"); env && std::string(env) == "scalar") return Isa::Scalar;
  return detected_isa();
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

const detail::KernelTable& table() noexcept {
  return current().load(std::memory_order_relaxed) == Isa::Avx2 ? *detail::avx2_table() : detail::scalar_table();
}

void require_same(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::LengthMismatch, "kernel operands differ in length");
}

}  // namespace

std::string_view to_string(Isa isa) noexcept { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa detected_isa() noexcept { return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::Avx2 && !cpu_has_avx2()) throw Error(ErrorCode::DomainError, "AVX2 not supported on this CPU");
  current().store(isa, std::memory_order_relaxed);
}

void lift_accumulate(std::span<double> y, std::span<const double> lo, std::span<const double> hi,
                     std::span<const double> wl, std::span<const double> wh, double scale) {
  const std::size_t n = y.size();
  require_same(n, lo.size());
  require_same(n, hi.size());
  require_same(n, wl.size());
  require_same(n, wh.size());
  table().lift_accumulate(y.data(), lo.data(), hi.data(), wl.data(), wh.data(), scale, n);
}

void mcp_threshold(std::span<const double> in, std::span<double> out, double lambda, double gamma, double alpha) {
  require_same(in.size(), out.size());
  table().mcp_threshold(in.data(), out.data(), lambda, gamma, alpha, in.size());
}

double mcp_penalty_sum(std::span<const double> theta, double lambda, double gamma) {
  return table().mcp_penalty_sum(theta.data(), lambda, gamma, theta.size());
}

void add_scaled(std::span<double> out, std::span<const double> a, std::span<const double> b, double scale) {
  require_same(out.size(), a.size());
  require_same(out.size(), b.size());
  table().add_scaled(out.data(), a.data(), b.data(), scale, out.size());
}

void difference(std::span<double> out, std::span<const double> a, std::span<const double> b) {
  require_same(out.size(), a.size());
  require_same(out.size(), b.size());
  table().difference(out.data(), a.data(), b.data(), out.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size());
  return table().dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) { return table().dot(a.data(), a.data(), a.size()); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size());
  return table().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace jpegiv::kernels
