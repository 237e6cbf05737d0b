#include "jpegiv/grid_series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jpegiv/csv.hpp"

namespace jpegiv {

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorCode::TooShort, "empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw Error(ErrorCode::NonFiniteValue, "location " + std::to_string(i + 1));
    if (i > 0 && !(grid[i - 1] < grid[i]))
      throw Error(ErrorCode::NonMonotonicGrid, "location " + std::to_string(i + 1) + " does not increase");
  }
}

const GridSeries& validate(const GridSeries& series) {
  if (series.locations.size() != series.values.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(series.locations.size()) + " locations vs " +
                                               std::to_string(series.values.size()) + " values");
  validate_grid(series.locations);
  for (std::size_t i = 0; i < series.values.size(); ++i)
    if (!std::isfinite(series.values[i])) throw Error(ErrorCode::NonFiniteValue, "value " + std::to_string(i + 1));
  return series;
}

GridSeries validate(GridSeries&& series) {
  validate(static_cast<const GridSeries&>(series));
  return std::move(series);
}

std::pair<GridSeries, GridSeries> interleave_split(const GridSeries& series) {
  if (series.size() < 2) throw Error(ErrorCode::TooShort, "split needs at least 2 samples");
  if (series.locations.size() != series.values.size()) throw Error(ErrorCode::LengthMismatch, "split");
  GridSeries odd, even;
  const std::size_t n = series.size();
  odd.locations.reserve((n + 1) / 2);
  odd.values.reserve((n + 1) / 2);
  even.locations.reserve(n / 2);
  even.values.reserve(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    GridSeries& part = (i % 2 == 0) ? odd : even;  // 0-based even == 1-based odd
    part.locations.push_back(series.locations[i]);
    part.values.push_back(series.values[i]);
  }
  return {std::move(odd), std::move(even)};
}

GridSeries interleave_merge(const GridSeries& odd_part, const GridSeries& even_part) {
  const std::size_t no = odd_part.size();
  const std::size_t ne = even_part.size();
  if (no != ne && no != ne + 1) throw Error(ErrorCode::LengthMismatch, "odd part must match or exceed even part by one");
  GridSeries out;
  out.locations.resize(no + ne);
  out.values.resize(no + ne);
  for (std::size_t k = 0; k < no; ++k) {
    out.locations[2 * k] = odd_part.locations[k];
    out.values[2 * k] = odd_part.values[k];
  }
  for (std::size_t k = 0; k < ne; ++k) {
    out.locations[2 * k + 1] = even_part.locations[k];
    out.values[2 * k + 1] = even_part.values[k];
  }
  return out;
}

int ceil_log2(std::size_t n) noexcept {
  int j = 0;
  std::size_t p = 1;
  while (p < n) {
    p <<= 1;
    ++j;
  }
  return j;
}

LevelSchedule::LevelSchedule(std::size_t n) : n_(n), max_level_(ceil_log2(n)) {
  if (n == 0) throw Error(ErrorCode::TooShort, "empty series");
}

std::size_t LevelSchedule::level_size(int j) const {
  if (j < 0 || j > max_level_) throw Error(ErrorCode::LevelOutOfRange, "resolution " + std::to_string(j));
  const std::size_t div = std::size_t{1} << (max_level_ - j);
  return (n_ + div - 1) / div;
}

std::size_t LevelSchedule::step_size(int k) const {
  if (k < 1 || k > max_level_ + 1) throw Error(ErrorCode::LevelOutOfRange, "step " + std::to_string(k));
  return level_size(max_level_ - k + 1);
}

void LevelSchedule::check_level(int level) const {
  if (level < 1 || level > max_level_)
    throw Error(ErrorCode::LevelOutOfRange,
                "level " + std::to_string(level) + " outside [1, " + std::to_string(max_level_) + "]");
}

GridSeries sorted_by_location(GridSeries series) {
  if (series.locations.size() != series.values.size()) throw Error(ErrorCode::LengthMismatch, "sort");
  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series.locations[a] < series.locations[b]; });
  GridSeries out;
  out.locations.reserve(order.size());
  out.values.reserve(order.size());
  for (auto i : order) {
    out.locations.push_back(series.locations[i]);
    out.values.push_back(series.values[i]);
  }
  return out;
}

GridSeries read_grid_csv(const std::string& path, bool sort_by_location) {
  CsvTable table = read_csv_file(path);
  GridSeries series;
  if (!table.header.empty()) {
    series.locations = table.column("t");
    series.values = table.column("u");
  } else {
    if (table.columns.size() != 2) throw Error(ErrorCode::InvalidArgument, "expected two columns t,u");
    series.locations = std::move(table.columns[0]);
    series.values = std::move(table.columns[1]);
  }
  if (sort_by_location) series = sorted_by_location(std::move(series));
  return validate(std::move(series));
}

}  // namespace jpegiv
