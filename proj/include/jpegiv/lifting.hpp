#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "jpegiv/grid_series.hpp"

namespace jpegiv {

/// CDF 9/7 lifting coefficients and scaling constant.
struct FilterConstants {
  double pi1 = -1.5861343420693648;
  double pi2 = -0.0529801185718856;
  double pi3 = 0.8829110755411875;
  double pi4 = 0.4435068520511142;
  double phi = 1.1496043988602418;
};

inline constexpr FilterConstants kJpegFilter{};

/// Linear combination that fills the missing even sample of an odd-length
/// segment: pad = c[0]*d[last-1] + c[1]*s[last-1] + c[2]*d[last].
struct OddPadCoefficients {
  std::array<double, 3> phi_delta{};

  /// Coefficients as printed with the original algorithm.
  static OddPadCoefficients printed(const FilterConstants& f = kJpegFilter);
  /// Coefficients that zero the padded detail on a uniform grid. These differ
  /// from printed() in the sign of the last two entries.
  static OddPadCoefficients uniform_zeroing(const FilterConstants& f = kJpegFilter);
};

/// Output of a forward transform. Layout of `coefficients` after L levels:
/// [coarse (h_L) | detail of step L | ... | detail of step 1].
struct WaveletCoefficients {
  std::vector<double> coefficients;
  std::vector<double> permuted_grid;
  LevelSchedule schedule{1};
  int level = 0;
};

/// Predict/update filter on one level. even_flag = 0 interpolates between
/// neighbours k and k+1 (last entry duplicated); even_flag = 1 between k-1 and
/// k (first entry duplicated). Grid positions 1,3,5,... are the odd grid and
/// 2,4,... the even grid; `grid` needs at least 2*series.size() entries.
std::vector<double> filter(std::span<const double> series, int even_flag, double pi,
                           std::span<const double> grid);

/// Adjoint of filter(): trans_inv_filter(x, 1, ...) is the transpose of
/// filter(., 0, ...) and trans_inv_filter(x, 0, ...) the transpose of
/// filter(., 1, ...).
std::vector<double> trans_inv_filter(std::span<const double> series, int flag, double pi,
                                     std::span<const double> grid);

/// Interpolation weights for a level with odd grid `odd` and even grid `even`
/// (same length h). predict[k] weights odd[k] when predicting even[k];
/// update[k] weights even[k-1] when updating odd[k]. Boundary entries are 0.5.
struct LevelWeights {
  std::vector<double> predict;
  std::vector<double> update;
};
LevelWeights level_weights(std::span<const double> odd, std::span<const double> even);

/// Precomputed weights and permutation for one (grid, level) pair. Reusable
/// across many transforms on the same grid; all methods are const.
class TransformPlan {
 public:
  TransformPlan(std::span<const double> grid, int level, const FilterConstants& constants = kJpegFilter);

  /// Rebuilds the plan from the grid ordering a forward transform produced.
  static TransformPlan from_permuted(std::span<const double> permuted_grid, int level,
                                     const FilterConstants& constants = kJpegFilter);

  std::size_t size() const noexcept { return grid_.size(); }
  int level() const noexcept { return level_; }
  const LevelSchedule& schedule() const noexcept { return schedule_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& permuted_grid() const noexcept { return permuted_grid_; }

  /// Number of leading coefficients that belong to the coarse segment.
  std::size_t coarse_size() const noexcept;
  /// Index of the decomposition step (1 = finest) owning coefficient i, or
  /// 0 for the coarse segment.
  int step_of(std::size_t i) const noexcept;
  /// Half-open coefficient range [first, second) holding the details of step k.
  std::pair<std::size_t, std::size_t> detail_range(int k) const;

  void forward(std::span<const double> values, std::span<double> coefficients) const;
  void inverse(std::span<const double> coefficients, std::span<double> values) const;
  void transposed_inverse(std::span<const double> vector, std::span<double> out) const;

  std::vector<double> forward(std::span<const double> values) const;
  std::vector<double> inverse(std::span<const double> coefficients) const;
  std::vector<double> transposed_inverse(std::span<const double> vector) const;

 private:
  struct Step {
    std::size_t m = 0;
    std::size_t h = 0;
    bool odd = false;
    // filter(., 0): y[k] += 2pi (p0_lo[k] x[k] + p0_hi[k] x[k+1])
    std::vector<double> p0_lo, p0_hi;
    // filter(., 1): y[k] += 2pi (p1_lo[k] x[k-1] + p1_hi[k] x[k])
    std::vector<double> p1_lo, p1_hi;
    // transposes, laid out over the same padded buffers
    std::vector<double> t0_lo, t0_hi, t1_lo, t1_hi;
  };

  TransformPlan() = default;
  void build(const FilterConstants& constants);

  std::vector<double> grid_;
  std::vector<double> permuted_grid_;
  LevelSchedule schedule_{1};
  int level_ = 0;
  FilterConstants constants_{};
  std::vector<Step> steps_;
};

/// Multi-level forward transform; recursion continues on the leading segment.
WaveletCoefficients forward_transform(const GridSeries& series, int level);

/// Left inverse of forward_transform. The grid is recovered from
/// coeffs.permuted_grid.
GridSeries inverse_transform(const WaveletCoefficients& coeffs);

/// Applies the transpose of the inverse transform for `grid` (original,
/// unpermuted order) without forming matrices.
std::vector<double> transposed_inverse_transform(std::span<const double> vector, std::span<const double> grid,
                                                 int level);

}  // namespace jpegiv
