#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "jpegiv/denoise.hpp"
#include "jpegiv/grid_series.hpp"

namespace jpegiv {

/// Rows observed after truncation. x_rest carries the intercept column.
struct TruncatedSample {
  Eigen::VectorXd y1;
  Eigen::VectorXd x1;
  Eigen::MatrixXd x_rest;
  Eigen::MatrixXd w;
  Eigen::MatrixXd z;

  Eigen::Index rows() const noexcept { return y1.size(); }
  /// Throws LengthMismatch / NonFiniteValue / RankDeficient.
  void check() const;
};

struct IndexCoefficients {
  enum class Normalization { UnitNormFirstPositive, Oracle };
  Eigen::VectorXd gamma;
  Normalization normalization = Normalization::Oracle;
};

enum class Method { Ols, Iv, JpegIv };
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view text);

/// Least squares through a column-pivoted QR. Throws RankDeficient.
Eigen::VectorXd ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

/// Two-stage least squares. Throws RankDeficient, or InvalidArgument when
/// there are fewer instruments than regressors.
Eigen::VectorXd iv_2sls(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& instruments);

struct PartiallyLinearOptions {
  // CoarseOnly is the limit of infinite thresholds on every detail step: the
  // bias fit is the least-squares projection on the coarse lifting functions.
  enum class Thresholds { CoarseOnly, CrossValidated, Fixed, ForcedZero };
  Thresholds thresholds = Thresholds::CoarseOnly;
  PenaltyConfig fixed;  // used with Thresholds::Fixed
  int level = 0;        // 0: four steps short of the deepest level for CoarseOnly, deepest otherwise
  FitOptions fit{};
  CvOptions cv{FitOptions{1e-9, 20}, false};
  std::size_t lambda_count = 30;
  std::vector<double> gamma_menu = default_gamma_menu();
  double tolerance = 1e-8;  // relative sup-norm change of the coefficients
  int max_outer = 50;
};

struct PartiallyLinearFit {
  Eigen::VectorXd beta;
  GridSeries bias_fit;            // centred fit over the sorted index
  Eigen::VectorXd bias_at_rows;   // same fit in input row order
  PenaltyConfig config;           // thresholds used (empty when forced to zero)
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
};

/// Backfitting for y = X beta + M(index) + noise. The bias fit is centred, so
/// an intercept column in X absorbs its level.
PartiallyLinearFit fit_partially_linear(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& index, const PartiallyLinearOptions& options = {});

/// Level used when PartiallyLinearOptions::level is 0.
int default_bias_level(std::size_t n, PartiallyLinearOptions::Thresholds mode);

/// Strictly increasing copy of a sorted index: ties move up by 1e-9 per rank.
std::vector<double> break_ties(std::vector<double> sorted_index);

struct GammaMode {
  /// Empty means estimate; otherwise the true index coefficients.
  std::optional<Eigen::VectorXd> oracle;
  int restarts = 3;
  int max_evaluations = 500;
  std::uint64_t seed = 12345;

  static GammaMode from_oracle(Eigen::VectorXd gamma) { return {std::move(gamma), 3, 500, 12345}; }
  static GammaMode estimate() { return {}; }
};

struct StageDiagnostics {
  int iterations = 0;
  bool converged = true;
  double residual_norm = 0.0;
  std::vector<double> lambda;
  std::vector<double> gamma;
};

struct EstimationResult {
  Method method = Method::Ols;
  Eigen::VectorXd beta;               // [x1, x_rest...]
  Eigen::VectorXd delta_first_stage;  // [z..., x_rest...]; empty for OLS
  GridSeries bias_term_fit_1;
  GridSeries bias_term_fit_2;
  IndexCoefficients index;
  StageDiagnostics first_stage;
  StageDiagnostics second_stage;
  int gamma_evaluations = 0;
};

EstimationResult estimate_ols(const TruncatedSample& sample);
EstimationResult estimate_iv(const TruncatedSample& sample);

/// Two-stage partially linear IV: x1 on [z, x_rest] + M2(w'gamma), then y1 on
/// [fitted x1, x_rest] + M1(w'gamma).
EstimationResult jpeg_iv(const TruncatedSample& sample, const GammaMode& gamma_mode,
                         const PartiallyLinearOptions& options = {});

/// Unit vector from hyperspherical angles with a non-negative first entry.
Eigen::VectorXd unit_from_angles(const Eigen::VectorXd& angles);

/// Derivative-free simplex minimizer used for the index search.
struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& start,
                          double step, int max_evaluations, double tolerance = 1e-10);

}  // namespace jpegiv
