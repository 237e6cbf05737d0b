#include "jpegiv/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jpegiv/error.hpp"
#include "jpegiv/kernels.hpp"

namespace jpegiv {
namespace {

double ratio(double num, double den) {
  if (den == 0.0) throw Error(ErrorCode::ZeroGridSpacing, "coincident grid points in interpolation weight");
  return num / den;
}

void split_grid(std::span<const double> g, std::size_t m, std::vector<double>& odd, std::vector<double>& even) {
  const std::size_t h = (m + 1) / 2;
  odd.resize(h);
  even.resize(h);
  for (std::size_t i = 0; i < h; ++i) odd[i] = g[2 * i];
  for (std::size_t i = 0; 2 * i + 1 < m; ++i) even[i] = g[2 * i + 1];
  if (m % 2 == 1) even[h - 1] = 2.0 * g[m - 1] - g[m - 2];
}

// Padded work buffer: entry i lives at data[i + 1], data[0] and data[h + 1]
// hold duplicated boundary values.
struct Padded {
  std::vector<double> data;
  std::size_t h = 0;

  void reset(std::size_t len) {
    h = len;
    data.assign(len + 2, 0.0);
  }
  double& operator[](std::size_t i) { return data[i + 1]; }
  double* body() { return data.data() + 1; }
  void refresh() {
    data[0] = data[1];
    data[h + 1] = data[h];
  }
};

void accumulate(double* y, const double* lo, const double* hi, const std::vector<double>& wl,
                const std::vector<double>& wh, double scale, std::size_t h) {
  kernels::lift_accumulate({y, h}, {lo, h}, {hi, h}, wl, wh, scale);
}

void check_filter_args(std::span<const double> series, int flag, std::span<const double> grid) {
  if (flag != 0 && flag != 1) throw Error(ErrorCode::InvalidArgument, "filter flag must be 0 or 1");
  if (series.empty()) throw Error(ErrorCode::TooShort, "empty filter input");
  if (grid.size() < 2 * series.size())
    throw Error(ErrorCode::GridTooShort, "grid has " + std::to_string(grid.size()) + " points, need " +
                                             std::to_string(2 * series.size()));
}

}  // namespace

OddPadCoefficients OddPadCoefficients::printed(const FilterConstants& f) {
  const double den = 1.0 + 2.0 * f.pi2 * f.pi3;
  return {{-2.0 * f.pi1 * f.pi2 * f.pi3 / den, 2.0 * f.pi2 * f.pi3 / den,
           2.0 * (f.pi1 + f.pi3 + 3.0 * f.pi1 * f.pi2 * f.pi3) / den}};
}

OddPadCoefficients OddPadCoefficients::uniform_zeroing(const FilterConstants& f) {
  OddPadCoefficients c = printed(f);
  c.phi_delta[1] = -c.phi_delta[1];
  c.phi_delta[2] = -c.phi_delta[2];
  return c;
}

LevelWeights level_weights(std::span<const double> odd, std::span<const double> even) {
  const std::size_t h = odd.size();
  if (even.size() != h) throw Error(ErrorCode::LengthMismatch, "odd and even grids differ in length");
  LevelWeights w;
  w.predict.assign(h, 0.5);
  w.update.assign(h, 0.5);
  for (std::size_t k = 0; k + 1 < h; ++k) w.predict[k] = ratio(odd[k + 1] - even[k], odd[k + 1] - odd[k]);
  for (std::size_t k = 1; k < h; ++k) w.update[k] = ratio(even[k] - odd[k], even[k] - even[k - 1]);
  return w;
}

std::vector<double> filter(std::span<const double> series, int even_flag, double pi, std::span<const double> grid) {
  check_filter_args(series, even_flag, grid);
  const std::size_t h = series.size();
  std::vector<double> odd, even;
  split_grid(grid, 2 * h, odd, even);
  const LevelWeights w = level_weights(odd, even);
  std::vector<double> out(h);
  for (std::size_t k = 0; k < h; ++k) {
    if (even_flag == 0) {
      const double next = k + 1 < h ? series[k + 1] : series[h - 1];
      out[k] = 2.0 * pi * (w.predict[k] * series[k] + (1.0 - w.predict[k]) * next);
    } else {
      const double prev = k > 0 ? series[k - 1] : series[0];
      out[k] = 2.0 * pi * (w.update[k] * prev + (1.0 - w.update[k]) * series[k]);
    }
  }
  return out;
}

std::vector<double> trans_inv_filter(std::span<const double> series, int flag, double pi,
                                     std::span<const double> grid) {
  check_filter_args(series, flag, grid);
  const std::size_t h = series.size();
  std::vector<double> odd, even;
  split_grid(grid, 2 * h, odd, even);
  const LevelWeights w = level_weights(odd, even);
  // S = [x0, x] with weights [0, 1-w | w, 1] for flag 1;
  // S = [x, x_last] with weights [1, 1-w | w, 0] for flag 0.
  std::vector<double> s(h + 1), lo(h), hi(h);
  if (flag == 1) {
    s[0] = series[0];
    std::copy(series.begin(), series.end(), s.begin() + 1);
    for (std::size_t k = 0; k < h; ++k) {
      lo[k] = k == 0 ? 0.0 : 1.0 - w.predict[k - 1];
      hi[k] = k + 1 == h ? 1.0 : w.predict[k];
    }
  } else {
    std::copy(series.begin(), series.end(), s.begin());
    s[h] = series[h - 1];
    for (std::size_t k = 0; k < h; ++k) {
      lo[k] = k == 0 ? 1.0 : 1.0 - w.update[k];
      hi[k] = k + 1 == h ? 0.0 : w.update[k + 1];
    }
  }
  std::vector<double> out(h);
  for (std::size_t k = 0; k < h; ++k) out[k] = 2.0 * pi * (lo[k] * s[k] + hi[k] * s[k + 1]);
  return out;
}

TransformPlan::TransformPlan(std::span<const double> grid, int level, const FilterConstants& constants)
    : grid_(grid.begin(), grid.end()), schedule_(std::max<std::size_t>(grid.size(), 1)), level_(level) {
  validate_grid(grid_);
  schedule_.check_level(level);
  build(constants);
}

TransformPlan TransformPlan::from_permuted(std::span<const double> permuted_grid, int level,
                                           const FilterConstants& constants) {
  if (permuted_grid.empty()) throw Error(ErrorCode::TooShort, "empty grid");
  const LevelSchedule schedule(permuted_grid.size());
  schedule.check_level(level);
  std::vector<double> g(permuted_grid.begin(), permuted_grid.end());
  std::vector<double> tmp(g.size());
  for (int k = level; k >= 1; --k) {
    const std::size_t m = schedule.step_size(k);
    const std::size_t h = (m + 1) / 2;
    for (std::size_t i = 0; i < h; ++i) tmp[2 * i] = g[i];
    for (std::size_t i = 0; h + i < m; ++i) tmp[2 * i + 1] = g[h + i];
    std::copy_n(tmp.begin(), m, g.begin());
  }
  return TransformPlan(g, level, constants);
}

void TransformPlan::build(const FilterConstants& constants) {
  constants_ = constants;
  std::vector<double> g = grid_;
  std::vector<double> odd, even;
  steps_.clear();
  steps_.reserve(static_cast<std::size_t>(level_));
  for (int k = 1; k <= level_; ++k) {
    Step st;
    st.m = schedule_.step_size(k);
    st.h = (st.m + 1) / 2;
    st.odd = st.m % 2 == 1;
    split_grid(g, st.m, odd, even);
    const LevelWeights w = level_weights(odd, even);
    const std::size_t h = st.h;
    st.p0_lo = w.predict;
    st.p1_lo = w.update;
    st.p0_hi.resize(h);
    st.p1_hi.resize(h);
    st.t0_lo.resize(h);
    st.t0_hi.resize(h);
    st.t1_lo.resize(h);
    st.t1_hi.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
      st.p0_hi[i] = 1.0 - w.predict[i];
      st.p1_hi[i] = 1.0 - w.update[i];
      st.t0_lo[i] = i == 0 ? 0.0 : 1.0 - w.predict[i - 1];
      st.t0_hi[i] = i + 1 == h ? 1.0 : w.predict[i];
      st.t1_lo[i] = i == 0 ? 1.0 : 1.0 - w.update[i];
      st.t1_hi[i] = i + 1 == h ? 0.0 : w.update[i + 1];
    }
    std::copy(odd.begin(), odd.end(), g.begin());
    std::copy_n(even.begin(), st.m - h, g.begin() + static_cast<std::ptrdiff_t>(h));
    steps_.push_back(std::move(st));
  }
  permuted_grid_ = std::move(g);
}

std::size_t TransformPlan::coarse_size() const noexcept { return steps_.empty() ? size() : steps_.back().h; }

int TransformPlan::step_of(std::size_t i) const noexcept {
  for (int k = level_; k >= 1; --k) {
    const Step& st = steps_[static_cast<std::size_t>(k - 1)];
    if (i < st.h) {
      if (k == level_) return 0;
      continue;
    }
    if (i < st.m) return k;
  }
  return 0;
}

std::pair<std::size_t, std::size_t> TransformPlan::detail_range(int k) const {
  if (k < 1 || k > level_) throw Error(ErrorCode::LevelOutOfRange, "no decomposition step " + std::to_string(k));
  const Step& st = steps_[static_cast<std::size_t>(k - 1)];
  return {st.h, st.m};
}

void TransformPlan::forward(std::span<const double> values, std::span<double> coefficients) const {
  const std::size_t n = size();
  if (values.size() != n || coefficients.size() != n)
    throw Error(ErrorCode::LengthMismatch, "forward transform length does not match plan");
  const FilterConstants& f = constants_;
  std::vector<double> work(values.begin(), values.end());
  Padded d, s;
  for (const Step& st : steps_) {
    const std::size_t h = st.h;
    d.reset(h);
    s.reset(h);
    for (std::size_t i = 0; i < h; ++i) d[i] = work[2 * i];
    for (std::size_t i = 0; 2 * i + 1 < st.m; ++i) s[i] = work[2 * i + 1];
    if (st.odd) {
      // Synthetic even sample chosen so the padded detail comes out exactly zero.
      const double s1_prev = s[h - 2] + 2.0 * f.pi1 * (st.p0_lo[h - 2] * d[h - 2] + st.p0_hi[h - 2] * d[h - 1]);
      const double a = st.p1_lo[h - 1];
      const double c = 4.0 * f.pi2 * f.pi3;
      const double s1_last = (-2.0 * f.pi3 * d[h - 1] - c * a * s1_prev) / (1.0 + c * (1.0 - a));
      s[h - 1] = s1_last - 2.0 * f.pi1 * d[h - 1];
    }
    d.refresh();
    accumulate(s.body(), d.body(), d.body() + 1, st.p0_lo, st.p0_hi, 2.0 * f.pi1, h);
    s.refresh();
    accumulate(d.body(), s.body() - 1, s.body(), st.p1_lo, st.p1_hi, 2.0 * f.pi2, h);
    d.refresh();
    accumulate(s.body(), d.body(), d.body() + 1, st.p0_lo, st.p0_hi, 2.0 * f.pi3, h);
    s.refresh();
    accumulate(d.body(), s.body() - 1, s.body(), st.p1_lo, st.p1_hi, 2.0 * f.pi4, h);
    for (std::size_t i = 0; i < h; ++i) work[i] = d[i] * f.phi;
    for (std::size_t i = 0; h + i < st.m; ++i) work[h + i] = s[i] / f.phi;
  }
  std::copy(work.begin(), work.end(), coefficients.begin());
}

void TransformPlan::inverse(std::span<const double> coefficients, std::span<double> values) const {
  const std::size_t n = size();
  if (values.size() != n || coefficients.size() != n)
    throw Error(ErrorCode::LengthMismatch, "inverse transform length does not match plan");
  const FilterConstants& f = constants_;
  std::vector<double> work(coefficients.begin(), coefficients.end());
  Padded d, s;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
    const Step& st = *it;
    const std::size_t h = st.h;
    d.reset(h);
    s.reset(h);
    for (std::size_t i = 0; i < h; ++i) d[i] = work[i] / f.phi;
    for (std::size_t i = 0; h + i < st.m; ++i) s[i] = work[h + i] * f.phi;
    s.refresh();
    accumulate(d.body(), s.body() - 1, s.body(), st.p1_lo, st.p1_hi, -2.0 * f.pi4, h);
    d.refresh();
    accumulate(s.body(), d.body(), d.body() + 1, st.p0_lo, st.p0_hi, -2.0 * f.pi3, h);
    s.refresh();
    accumulate(d.body(), s.body() - 1, s.body(), st.p1_lo, st.p1_hi, -2.0 * f.pi2, h);
    d.refresh();
    accumulate(s.body(), d.body(), d.body() + 1, st.p0_lo, st.p0_hi, -2.0 * f.pi1, h);
    for (std::size_t i = 0; i < h; ++i) work[2 * i] = d[i];
    for (std::size_t i = 0; 2 * i + 1 < st.m; ++i) work[2 * i + 1] = s[i];
  }
  std::copy(work.begin(), work.end(), values.begin());
}

void TransformPlan::transposed_inverse(std::span<const double> vector, std::span<double> out) const {
  const std::size_t n = size();
  if (vector.size() != n || out.size() != n)
    throw Error(ErrorCode::LengthMismatch, "transposed-inverse length does not match plan");
  const FilterConstants& f = constants_;
  std::vector<double> work(vector.begin(), vector.end());
  Padded d, s;
  for (const Step& st : steps_) {
    const std::size_t h = st.h;
    d.reset(h);
    s.reset(h);
    for (std::size_t i = 0; i < h; ++i) d[i] = work[2 * i];
    for (std::size_t i = 0; 2 * i + 1 < st.m; ++i) s[i] = work[2 * i + 1];
    s.refresh();
    accumulate(d.body(), s.body() - 1, s.body(), st.t0_lo, st.t0_hi, -2.0 * f.pi1, h);
    d.refresh();
    accumulate(s.body(), d.body(), d.body() + 1, st.t1_lo, st.t1_hi, -2.0 * f.pi2, h);
    s.refresh();
    accumulate(d.body(), s.body() - 1, s.body(), st.t0_lo, st.t0_hi, -2.0 * f.pi3, h);
    d.refresh();
    accumulate(s.body(), d.body(), d.body() + 1, st.t1_lo, st.t1_hi, -2.0 * f.pi4, h);
    for (std::size_t i = 0; i < h; ++i) work[i] = d[i] / f.phi;
    for (std::size_t i = 0; h + i < st.m; ++i) work[h + i] = s[i] * f.phi;
  }
  std::copy(work.begin(), work.end(), out.begin());
}

std::vector<double> TransformPlan::forward(std::span<const double> values) const {
  std::vector<double> out(size());
  forward(values, out);
  return out;
}

std::vector<double> TransformPlan::inverse(std::span<const double> coefficients) const {
  std::vector<double> out(size());
  inverse(coefficients, out);
  return out;
}

std::vector<double> TransformPlan::transposed_inverse(std::span<const double> vector) const {
  std::vector<double> out(size());
  transposed_inverse(vector, out);
  return out;
}

WaveletCoefficients forward_transform(const GridSeries& series, int level) {
  validate(series);
  const TransformPlan plan(series.locations, level);
  WaveletCoefficients out;
  out.coefficients = plan.forward(series.values);
  out.permuted_grid = plan.permuted_grid();
  out.schedule = plan.schedule();
  out.level = level;
  return out;
}

GridSeries inverse_transform(const WaveletCoefficients& coeffs) {
  if (coeffs.coefficients.size() != coeffs.permuted_grid.size())
    throw Error(ErrorCode::LengthMismatch, "coefficients and grid differ in length");
  const TransformPlan plan = TransformPlan::from_permuted(coeffs.permuted_grid, coeffs.level);
  GridSeries out;
  out.locations = plan.grid();
  out.values = plan.inverse(coeffs.coefficients);
  return out;
}

std::vector<double> transposed_inverse_transform(std::span<const double> vector, std::span<const double> grid,
                                                 int level) {
  if (vector.size() != grid.size()) throw Error(ErrorCode::LengthMismatch, "vector and grid differ in length");
  const TransformPlan plan(grid, level);
  return plan.transposed_inverse(vector);
}

}  // namespace jpegiv
