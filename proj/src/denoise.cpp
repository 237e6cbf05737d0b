#include "jpegiv/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jpegiv/error.hpp"
#include "jpegiv/kernels.hpp"

namespace jpegiv {
namespace {

void check_params(double lambda, double gamma) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::DomainError, "lambda must be finite and >= 0");
  if (!(gamma > 1.0)) throw Error(ErrorCode::DomainError, "gamma must exceed 1");
}

// Thresholds detail segments in place; the coarse segment passes through.
void threshold_details(const TransformPlan& plan, const PenaltyConfig& cfg, double alpha, std::span<const double> in,
                       std::span<double> out) {
  const std::size_t coarse = plan.coarse_size();
  std::copy_n(in.begin(), coarse, out.begin());
  for (int k = 1; k <= plan.level(); ++k) {
    const auto [lo, hi] = plan.detail_range(k);
    const auto i = static_cast<std::size_t>(k - 1);
    kernels::mcp_threshold(in.subspan(lo, hi - lo), out.subspan(lo, hi - lo), cfg.lambda[i], cfg.gamma[i], alpha);
  }
}

double penalty(const TransformPlan& plan, const PenaltyConfig& cfg, std::span<const double> delta) {
  double total = 0.0;
  for (int k = 1; k <= plan.level(); ++k) {
    const auto [lo, hi] = plan.detail_range(k);
    const auto i = static_cast<std::size_t>(k - 1);
    if (cfg.lambda[i] == 0.0) continue;
    total += kernels::mcp_penalty_sum(delta.subspan(lo, hi - lo), cfg.lambda[i], cfg.gamma[i]);
  }
  return total;
}

double median_abs(std::vector<double> v) {
  if (v.empty()) return 0.0;
  for (double& x : v) x = std::fabs(x);
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

struct CvHalves {
  GridSeries odd, even;
  TransformPlan odd_plan, even_plan;
  int level;

  CvHalves(const GridSeries& series, int full_level)
      : CvHalves(interleave_split(series), full_level) {}

 private:
  CvHalves(std::pair<GridSeries, GridSeries> parts, int full_level)
      : odd(std::move(parts.first)),
        even(std::move(parts.second)),
        odd_plan(odd.locations, half_level(odd.size(), even.size(), full_level)),
        even_plan(even.locations, half_level(odd.size(), even.size(), full_level)),
        level(half_level(odd.size(), even.size(), full_level)) {}

  static int half_level(std::size_t a, std::size_t b, int full_level) {
    return std::min({full_level, LevelSchedule(a).max_level(), LevelSchedule(b).max_level()});
  }
};

void half_losses(const TransformPlan& plan, const GridSeries& fit_on, const GridSeries& held_out,
                 const PenaltyConfig& cfg, const FitOptions& opts, std::vector<double>& out) {
  const std::vector<double> fitted = penalized_fit_values(plan, fit_on.values, cfg, opts);
  const std::vector<double> pred = interpolate_linear(fit_on.locations, fitted, held_out.locations);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - held_out.values[i];
    out.push_back(0.5 * e * e);
  }
}

struct Score {
  double total = 0.0;
  double standard_error = 0.0;
};

// Total held-out loss and its standard error across held-out points.
Score score_with_error(const CvHalves& cv, const PenaltyConfig& cfg, const FitOptions& opts) {
  std::vector<double> losses;
  losses.reserve(cv.odd.size() + cv.even.size());
  half_losses(cv.odd_plan, cv.odd, cv.even, cfg, opts, losses);
  half_losses(cv.even_plan, cv.even, cv.odd, cfg, opts, losses);
  Score s;
  for (double l : losses) s.total += l;
  const double n = static_cast<double>(losses.size());
  const double mean = s.total / n;
  double ss = 0.0;
  for (double l : losses) ss += (l - mean) * (l - mean);
  s.standard_error = n > 1.0 ? std::sqrt(n * ss / (n - 1.0)) : 0.0;
  return s;
}

double score_halves(const CvHalves& cv, const PenaltyConfig& cfg, const FitOptions& opts) {
  return score_with_error(cv, cfg, opts).total;
}

PenaltyConfig restrict_levels(const PenaltyConfig& cfg, int levels) {
  PenaltyConfig out;
  out.alpha = cfg.alpha;
  for (int k = 0; k < levels; ++k) {
    const auto i = std::min(static_cast<std::size_t>(k), cfg.lambda.size() - 1);
    out.lambda.push_back(cfg.lambda[i]);
    out.gamma.push_back(cfg.gamma[i]);
  }
  return out;
}

}  // namespace

PenaltyConfig PenaltyConfig::uniform(int levels, double lambda, double gamma, double alpha) {
  PenaltyConfig cfg;
  cfg.lambda.assign(static_cast<std::size_t>(std::max(levels, 0)), lambda);
  cfg.gamma.assign(static_cast<std::size_t>(std::max(levels, 0)), gamma);
  cfg.alpha = alpha;
  return cfg;
}

void PenaltyConfig::check(int levels) const {
  if (lambda.size() != static_cast<std::size_t>(levels) || gamma.size() != lambda.size())
    throw Error(ErrorCode::DomainError, "penalty config needs " + std::to_string(levels) + " levels");
  if (!(alpha > 0.0)) throw Error(ErrorCode::DomainError, "alpha must be positive");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    check_params(lambda[i], gamma[i]);
    if (!(alpha * gamma[i] > 1.0)) throw Error(ErrorCode::DomainError, "alpha * gamma must exceed 1");
  }
}

double mcp_penalty(double theta, double lambda, double gamma) {
  check_params(lambda, gamma);
  if (!(theta >= 0.0)) throw Error(ErrorCode::DomainError, "penalty argument must be >= 0");
  if (theta <= gamma * lambda) return lambda * theta - theta * theta / (2.0 * gamma);
  return 0.5 * lambda * lambda * gamma;
}

double threshold(double tilde, double lambda, double gamma, double alpha) {
  check_params(lambda, gamma);
  if (!(alpha * gamma > 1.0)) throw Error(ErrorCode::DomainError, "alpha * gamma must exceed 1");
  double out = 0.0;
  kernels::mcp_threshold({&tilde, 1}, {&out, 1}, lambda, gamma, alpha);
  return out;
}

std::vector<double> penalized_fit_values(const TransformPlan& plan, std::span<const double> values,
                                         const PenaltyConfig& config, const FitOptions& options,
                                         DenoiseResult* details) {
  const std::size_t n = plan.size();
  if (values.size() != n) throw Error(ErrorCode::LengthMismatch, "values do not match the plan");
  config.check(plan.level());
  if (!(options.backtrack > 1.0)) throw Error(ErrorCode::DomainError, "backtracking factor must exceed 1");

  // Both terms carry 1/n, so the gradient step on the coefficients is 1/alpha.
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> delta = plan.forward(values);
  std::vector<double> fitted = plan.inverse(delta);
  std::vector<double> resid(n);
  kernels::difference(resid, values, fitted);
  double obj = inv_n * (0.5 * kernels::sum_squares(resid) + penalty(plan, config, delta));

  std::vector<double> trace{obj};
  std::vector<double> grad(n), tilde(n), cand(n), cand_fit(n), cand_resid(n);
  int iter = 0;
  bool converged = false;
  plan.transposed_inverse(resid, grad);
  while (iter < options.max_iter) {
    double alpha = config.alpha;
    bool accepted = false;
    double cand_obj = 0.0;
    for (int b = 0; b <= options.max_backtracks; ++b, alpha *= options.backtrack) {
      kernels::add_scaled(tilde, delta, grad, 1.0 / alpha);
      threshold_details(plan, config, alpha, tilde, cand);
      plan.inverse(cand, cand_fit);
      kernels::difference(cand_resid, values, cand_fit);
      cand_obj = inv_n * (0.5 * kernels::sum_squares(cand_resid) + penalty(plan, config, cand));
      if (cand_obj < obj) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No step size lowers the objective: stationary point.
      converged = true;
      break;
    }
    ++iter;
    const double base = kernels::sum_squares(delta);
    const double moved = kernels::squared_distance(cand, delta);
    delta.swap(cand);
    fitted.swap(cand_fit);
    resid.swap(cand_resid);
    obj = cand_obj;
    trace.push_back(obj);
    if ((base == 0.0 ? moved : moved / base) < options.tolerance) {
      converged = true;
      break;
    }
    plan.transposed_inverse(resid, grad);
  }

  if (details) {
    details->coefficients.coefficients = delta;
    details->coefficients.permuted_grid = plan.permuted_grid();
    details->coefficients.schedule = plan.schedule();
    details->coefficients.level = plan.level();
    details->fitted.locations = plan.grid();
    details->fitted.values = fitted;
    details->objective_trace = std::move(trace);
    details->iterations = iter;
    details->converged = converged;
  }
  return fitted;
}

DenoiseResult penalized_fit(const GridSeries& series, const PenaltyConfig& config, int level, double tolerance,
                            int max_iter) {
  validate(series);
  const TransformPlan plan(series.locations, level);
  FitOptions opts;
  opts.tolerance = tolerance;
  opts.max_iter = max_iter;
  DenoiseResult out;
  penalized_fit_values(plan, series.values, config, opts, &out);
  return out;
}

std::vector<double> default_lambda_grid(const GridSeries& series, int level, std::size_t count) {
  validate(series);
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "lambda grid needs at least one point");
  const TransformPlan plan(series.locations, level);
  const std::vector<double> delta = plan.forward(series.values);
  const auto [lo, hi] = plan.detail_range(1);
  const std::vector<double> finest(delta.begin() + static_cast<std::ptrdiff_t>(lo),
                                   delta.begin() + static_cast<std::ptrdiff_t>(hi));
  double upper = 0.0;
  for (std::size_t i = plan.coarse_size(); i < delta.size(); ++i) upper = std::max(upper, std::fabs(delta[i]));
  if (upper == 0.0) return std::vector<double>(1, 0.0);
  const double sigma = median_abs(finest) / 0.6745;
  double lower = sigma > 0.0 ? sigma * 1e-3 : upper * 1e-6;
  if (lower >= upper) lower = upper * 1e-3;
  if (count == 1) return {upper};
  std::vector<double> grid(count);
  const double a = std::log(lower);
  const double step = (std::log(upper) - a) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = std::exp(a + step * static_cast<double>(i));
  grid.back() = upper;
  return grid;
}

std::vector<double> default_gamma_menu() { return {1.2, 2.0, 3.0, 1e12}; }

std::vector<double> interpolate_linear(std::span<const double> grid, std::span<const double> values,
                                       std::span<const double> at) {
  if (grid.size() != values.size()) throw Error(ErrorCode::LengthMismatch, "grid and values differ in length");
  if (grid.empty()) throw Error(ErrorCode::TooShort, "nothing to interpolate");
  std::vector<double> out(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double x = at[i];
    if (x <= grid.front()) {
      out[i] = values.front();
      continue;
    }
    if (x >= grid.back()) {
      out[i] = values.back();
      continue;
    }
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const auto j = static_cast<std::size_t>(it - grid.begin());
    const double w = (x - grid[j - 1]) / (grid[j] - grid[j - 1]);
    out[i] = (1.0 - w) * values[j - 1] + w * values[j];
  }
  return out;
}

double cv_score(const GridSeries& series, int level, const PenaltyConfig& config, const FitOptions& options) {
  validate(series);
  if (series.size() < 4) throw Error(ErrorCode::TooShort, "cross-validation needs at least 4 points");
  const CvHalves cv(series, level);
  return score_halves(cv, restrict_levels(config, cv.level), options);
}

PenaltyConfig select_thresholds(const GridSeries& series, int level, std::span<const double> lambda_grid,
                                std::span<const double> gamma_menu, const CvOptions& options) {
  validate(series);
  if (series.size() < 4) throw Error(ErrorCode::TooShort, "cross-validation needs at least 4 points");
  if (lambda_grid.empty() || gamma_menu.empty()) throw Error(ErrorCode::InvalidArgument, "empty candidate grid");
  LevelSchedule(series.size()).check_level(level);

  std::vector<double> lambdas(lambda_grid.begin(), lambda_grid.end());
  std::vector<double> gammas(gamma_menu.begin(), gamma_menu.end());
  std::sort(lambdas.begin(), lambdas.end());
  std::sort(gammas.begin(), gammas.end());
  for (double l : lambdas) check_params(l, 1.5);
  for (double g : gammas) check_params(0.0, g);

  const CvHalves cv(series, level);
  std::vector<std::pair<PenaltyConfig, Score>> scanned;
  std::size_t best_at = 0;
  for (double l : lambdas) {
    for (double g : gammas) {
      PenaltyConfig cand = PenaltyConfig::uniform(cv.level, l, g);
      const Score score = score_with_error(cv, cand, options.fit);
      if (scanned.empty() || score.total < scanned[best_at].second.total) best_at = scanned.size();
      scanned.emplace_back(std::move(cand), score);
    }
  }
  PenaltyConfig best = scanned[best_at].first;
  if (options.one_standard_error) {
    // Largest lambda whose loss is within one standard error of the minimum.
    const Score& top = scanned[best_at].second;
    const double cutoff = top.total + top.standard_error;
    for (const auto& [cand, score] : scanned) {
      if (score.total <= cutoff && cand.lambda.front() > best.lambda.front()) best = cand;
    }
  }

  if (options.per_level && cv.level > 1) {
    for (int k = 0; k < cv.level; ++k) {
      const auto i = static_cast<std::size_t>(k);
      PenaltyConfig cand = best;
      PenaltyConfig level_best = best;
      double level_score = std::numeric_limits<double>::infinity();
      for (double l : lambdas) {
        for (double g : gammas) {
          cand.lambda[i] = l;
          cand.gamma[i] = g;
          const double score = score_halves(cv, cand, options.fit);
          if (score < level_score) {
            level_score = score;
            level_best = cand;
          }
        }
      }
      best = std::move(level_best);
    }
  }
  return restrict_levels(best, level);
}

}  // namespace jpegiv
