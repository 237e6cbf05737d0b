#include "jpegiv/matrix_oracle.hpp"

#include <string>
#include <vector>

#include "jpegiv/error.hpp"

namespace jpegiv {

using Eigen::Index;
using Eigen::MatrixXd;

MatrixXd shift_matrix(std::size_t size) {
  if (size % 2 != 0) throw Error(ErrorCode::InvalidArgument, "shift matrix needs an even size");
  const auto n = static_cast<Index>(size);
  const Index half = n / 2;
  MatrixXd a = MatrixXd::Zero(n, n);
  for (Index i = 0; i < half; ++i) {
    a(i, 2 * i) = 1.0;
    a(half + i, 2 * i + 1) = 1.0;
  }
  return a;
}

MatrixXd rescale_matrix(std::size_t size, double phi) {
  const auto n = static_cast<Index>(size);
  MatrixXd s = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) s(i, i) = i % 2 == 0 ? phi : 1.0 / phi;
  return s;
}

MatrixXd inverse_rescale_matrix(std::size_t size, double phi) {
  const auto n = static_cast<Index>(size);
  MatrixXd s = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) s(i, i) = i % 2 == 0 ? 1.0 / phi : phi;
  return s;
}

MatrixXd smoothing_matrix(std::span<const double> grid, int step, double pi) {
  if (grid.size() % 2 != 0 || grid.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "smoothing matrix needs an even-length grid");
  if (step < 1 || step > 4) throw Error(ErrorCode::InvalidArgument, "lifting step must be 1..4");
  const auto n = static_cast<Index>(grid.size());
  MatrixXd hm = MatrixXd::Identity(n, n);
  // 0-based row r: steps 1,3 touch odd r (1-based even), steps 2,4 even r.
  const Index first = step % 2 == 1 ? 1 : 0;
  for (Index r = first; r < n; r += 2) {
    const bool has_left = r > 0;
    const bool has_right = r + 1 < n;
    if (has_left && has_right) {
      const auto ur = static_cast<std::size_t>(r);
      const double den = grid[ur + 1] - grid[ur - 1];
      if (den == 0.0) throw Error(ErrorCode::ZeroGridSpacing, "coincident grid points");
      const double w = (grid[ur + 1] - grid[ur]) / den;
      hm(r, r - 1) = 2.0 * pi * w;
      hm(r, r + 1) = 2.0 * pi * (1.0 - w);
    } else {
      // Reflected boundary: both halves of the 0.5 weight fall on the one neighbour.
      hm(r, has_left ? r - 1 : r + 1) = 2.0 * pi;
    }
  }
  return hm;
}

MatrixXd level_operator(std::span<const double> grid, const FilterConstants& f) {
  const std::size_t n = grid.size();
  return shift_matrix(n) * rescale_matrix(n, f.phi) * smoothing_matrix(grid, 4, f.pi4) *
         smoothing_matrix(grid, 3, f.pi3) * smoothing_matrix(grid, 2, f.pi2) * smoothing_matrix(grid, 1, f.pi1);
}

namespace {

MatrixXd level_inverse(std::span<const double> grid, const FilterConstants& f) {
  const std::size_t n = grid.size();
  auto inv_h = [&](int step, double pi) {
    const MatrixXd hm = smoothing_matrix(grid, step, pi);
    const auto size = static_cast<Index>(n);
    return MatrixXd(2.0 * MatrixXd::Identity(size, size) - hm);
  };
  return inv_h(1, f.pi1) * inv_h(2, f.pi2) * inv_h(3, f.pi3) * inv_h(4, f.pi4) * inverse_rescale_matrix(n, f.phi) *
         shift_matrix(n).transpose();
}

MatrixXd embed(const MatrixXd& block, Index total) {
  MatrixXd out = MatrixXd::Identity(total, total);
  out.topLeftCorner(block.rows(), block.cols()) = block;
  return out;
}

}  // namespace

MatrixOracle build_matrix_oracle(std::span<const double> grid, int level, const FilterConstants& f) {
  if (grid.size() > kMatrixOracleMaxSize)
    throw Error(ErrorCode::TooLarge, "matrix oracle limited to " + std::to_string(kMatrixOracleMaxSize) + " points");
  validate_grid(grid);
  const LevelSchedule schedule(grid.size());
  schedule.check_level(level);
  const auto n = static_cast<Index>(grid.size());

  std::vector<double> g(grid.begin(), grid.end());
  MatrixXd forward = MatrixXd::Identity(n, n);
  MatrixXd inverse = MatrixXd::Identity(n, n);
  for (int k = 1; k <= level; ++k) {
    const std::size_t m = schedule.step_size(k);
    const std::size_t even_m = m + m % 2;
    std::vector<double> seg(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(m));
    if (m % 2 == 1) seg.push_back(2.0 * g[m - 1] - g[m - 2]);

    const MatrixXd phi = level_operator(seg, f);
    const MatrixXd phi_inv = level_inverse(seg, f);
    const auto mi = static_cast<Index>(m);
    const auto ei = static_cast<Index>(even_m);
    MatrixXd fwd_k, inv_k;
    if (m % 2 == 0) {
      fwd_k = phi;
      inv_k = phi_inv;
    } else {
      // The padded sample is whatever makes the last output coefficient vanish.
      const Eigen::RowVectorXd last = phi.row(ei - 1);
      MatrixXd pad = MatrixXd::Zero(ei, mi);
      pad.topRows(mi).setIdentity();
      pad.row(ei - 1) = -last.head(mi) / last(ei - 1);
      fwd_k = (phi * pad).topRows(mi);
      inv_k = phi_inv.topLeftCorner(mi, mi);
    }
    forward = embed(fwd_k, n) * forward;
    inverse = inverse * embed(inv_k, n);

    // Next level works on the odd (1-based) grid points.
    const MatrixXd a = shift_matrix(even_m);
    const Eigen::Map<const Eigen::VectorXd> sv(seg.data(), ei);
    const Eigen::VectorXd permuted = a * sv;
    for (Index i = 0; i < mi; ++i) g[static_cast<std::size_t>(i)] = permuted(i);
  }
  MatrixOracle out;
  out.forward = std::move(forward);
  out.transposed_inverse = inverse.transpose();
  out.inverse = std::move(inverse);
  return out;
}

}  // namespace jpegiv
