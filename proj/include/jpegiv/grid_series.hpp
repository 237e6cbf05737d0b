#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jpegiv/error.hpp"

namespace jpegiv {

/// Paired sequence of (location, value) samples on a strictly increasing,
/// possibly irregular grid.
struct GridSeries {
  std::vector<double> locations;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// Returns the series unchanged when it satisfies the grid invariants:
/// non-empty, equal lengths, finite entries and strictly increasing locations.
const GridSeries& validate(const GridSeries& series);
GridSeries validate(GridSeries&& series);

/// Checks a bare grid (strictly increasing, finite, non-empty).
void validate_grid(std::span<const double> grid);

/// Splits at 1-based odd positions (1,3,5,...) and even positions (2,4,...).
std::pair<GridSeries, GridSeries> interleave_split(const GridSeries& series);

/// Inverse of interleave_split. The odd part may hold one more sample.
GridSeries interleave_merge(const GridSeries& odd_part, const GridSeries& even_part);

/// Resolution bookkeeping for n samples: J = ceil(log2 n) levels and the
/// segment size m(j) = ceil(n / 2^(J-j)) at resolution j, so m(J) = n.
class LevelSchedule {
 public:
  explicit LevelSchedule(std::size_t n);

  std::size_t count() const noexcept { return n_; }
  int max_level() const noexcept { return max_level_; }

  /// m(j) for j in [0, max_level].
  std::size_t level_size(int j) const;

  /// Segment length processed by the k-th decomposition step (k = 1 is the
  /// finest step and sees all n samples): ceil(n / 2^(k-1)).
  std::size_t step_size(int k) const;

  /// Throws LevelOutOfRange unless 1 <= level <= max_level.
  void check_level(int level) const;

 private:
  std::size_t n_;
  int max_level_;
};

/// ceil(log2 n) for n >= 1.
int ceil_log2(std::size_t n) noexcept;

/// Reads a two-column `t,u` CSV (header optional). With sort_by_location the
/// rows are stable-sorted by location before validation.
GridSeries read_grid_csv(const std::string& path, bool sort_by_location = false);

/// Stable sort of the pairs by location.
GridSeries sorted_by_location(GridSeries series);

}  // namespace jpegiv
