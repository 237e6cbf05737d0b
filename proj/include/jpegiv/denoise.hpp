#pragma once

#include <span>
#include <vector>

#include "jpegiv/grid_series.hpp"
#include "jpegiv/lifting.hpp"

namespace jpegiv {

/// MCP parameters per decomposition step. lambda[k-1] and gamma[k-1] apply to
/// the details produced by step k (k = 1 is the finest). The coarse segment is
/// never penalized. lambda = 0 switches the penalty off for that step.
struct PenaltyConfig {
  std::vector<double> lambda;
  std::vector<double> gamma;
  double alpha = 1.0;

  static PenaltyConfig uniform(int levels, double lambda, double gamma, double alpha = 1.0);

  /// Throws DomainError unless there are `levels` entries, lambda >= 0,
  /// gamma > 1 and alpha * gamma > 1.
  void check(int levels) const;
};

struct FitOptions {
  double tolerance = 1e-9;
  int max_iter = 1000;
  double backtrack = 1.2;
  int max_backtracks = 100;
};

struct DenoiseResult {
  WaveletCoefficients coefficients;
  GridSeries fitted;
  std::vector<double> objective_trace;  // initial value, then one per accepted step
  int iterations = 0;
  bool converged = false;
};

/// rho(theta) = lambda*theta - theta^2/(2 gamma) below gamma*lambda, gamma*lambda^2/2 above.
double mcp_penalty(double theta, double lambda, double gamma);

/// Minimizer of (delta - tilde)^2 / 2 + rho(|delta|) / alpha. Needs alpha*gamma > 1.
double threshold(double tilde, double lambda, double gamma, double alpha);

/// Proximal gradient descent with backtracking on
/// (1/n) * (||u - inverse(delta)||^2 / 2 + sum of MCP penalties over detail
/// coefficients). Starts from forward(u); each step thresholds
/// delta + inverse^T(residual) / alpha and grows alpha by `backtrack` until the
/// objective drops.
DenoiseResult penalized_fit(const GridSeries& series, const PenaltyConfig& config, int level,
                            double tolerance = 1e-9, int max_iter = 1000);

/// Same iteration on a prebuilt plan; returns only the fitted values. Used by
/// the cross-validation and backfitting loops that refit on a fixed grid.
std::vector<double> penalized_fit_values(const TransformPlan& plan, std::span<const double> values,
                                         const PenaltyConfig& config, const FitOptions& options,
                                         DenoiseResult* details = nullptr);

struct CvOptions {
  FitOptions fit{1e-9, 1000};
  bool per_level = true;  // coordinate sweep over steps after the global scan
  bool one_standard_error = false;  // prefer the largest lambda within one standard error of the best score
};

/// 30 log-spaced values between 1e-3 times a MAD noise estimate of the finest
/// details and the largest detail magnitude.
std::vector<double> default_lambda_grid(const GridSeries& series, int level, std::size_t count = 30);

/// {1.2, 2, 3, 1e12}: near-hard through near-soft.
std::vector<double> default_gamma_menu();

/// Linear interpolation of (grid, values) at `at`; constant beyond the ends.
std::vector<double> interpolate_linear(std::span<const double> grid, std::span<const double> values,
                                       std::span<const double> at);

/// Two-fold cross-validation score: each interleaved half is denoised and
/// compared against the other half at its locations.
double cv_score(const GridSeries& series, int level, const PenaltyConfig& config, const FitOptions& options = {});

/// Chooses (lambda, gamma) per step by minimizing cv_score. Ties go to the
/// smaller lambda, then the smaller gamma.
PenaltyConfig select_thresholds(const GridSeries& series, int level, std::span<const double> lambda_grid,
                                std::span<const double> gamma_menu, const CvOptions& options = {});

}  // namespace jpegiv
