#pragma once

#include <span>
#include <string_view>

namespace jpegiv::kernels {

/// Instruction sets with a dedicated kernel implementation.
enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

/// Best implementation the running CPU supports.
Isa detected_isa() noexcept;

/// Implementation currently dispatched to. Defaults to detected_isa() unless
/// the JPEGIV_ISA environment variable names "scalar".
Isa active_isa() noexcept;

/// Forces an implementation. Throws DomainError if the CPU lacks it.
void set_active_isa(Isa isa);

/// Restores the previous implementation on scope exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

// All spans passed to one call must have the same length unless noted.

/// y[k] += scale * (wl[k] * lo[k] + wh[k] * hi[k]). The lifting step kernel.
void lift_accumulate(std::span<double> y, std::span<const double> lo, std::span<const double> hi,
                     std::span<const double> wl, std::span<const double> wh, double scale);

/// out[k] = S_alpha(in[k]; lambda, gamma), the MCP thresholding rule.
/// Requires alpha * gamma > 1 (checked by callers).
void mcp_threshold(std::span<const double> in, std::span<double> out, double lambda, double gamma,
                   double alpha);

/// Sum of rho_{lambda,gamma}(|theta[k]|).
double mcp_penalty_sum(std::span<const double> theta, double lambda, double gamma);

/// out[k] = a[k] + scale * b[k].
void add_scaled(std::span<double> out, std::span<const double> a, std::span<const double> b, double scale);

/// out[k] = a[k] - b[k].
void difference(std::span<double> out, std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace jpegiv::kernels
