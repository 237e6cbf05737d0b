#pragma once

#include <span>

#include <Eigen/Dense>

#include "jpegiv/lifting.hpp"

namespace jpegiv {

/// Dense operator matrices for small grids. Test-scale only.
struct MatrixOracle {
  Eigen::MatrixXd forward;
  Eigen::MatrixXd inverse;
  Eigen::MatrixXd transposed_inverse;
};

inline constexpr std::size_t kMatrixOracleMaxSize = 256;

/// Moves odd (1-based) entries in front of even ones; size must be even.
Eigen::MatrixXd shift_matrix(std::size_t size);
/// Diagonal: odd (1-based) entries times phi, even entries divided by phi.
Eigen::MatrixXd rescale_matrix(std::size_t size, double phi);
Eigen::MatrixXd inverse_rescale_matrix(std::size_t size, double phi);
/// Smoothing matrix of lifting step `step` (1..4) on an even-length grid.
/// Steps 1 and 3 update even rows from odd neighbours, 2 and 4 the reverse.
Eigen::MatrixXd smoothing_matrix(std::span<const double> grid, int step, double pi);

/// One-level operator on an even-length grid.
Eigen::MatrixXd level_operator(std::span<const double> grid, const FilterConstants& f = kJpegFilter);

/// Composes the per-level operators over `level` steps. Throws TooLarge when
/// the grid exceeds kMatrixOracleMaxSize points.
MatrixOracle build_matrix_oracle(std::span<const double> grid, int level, const FilterConstants& f = kJpegFilter);

}  // namespace jpegiv
