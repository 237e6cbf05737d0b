#include "jpegiv/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "jpegiv/error.hpp"

namespace jpegiv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

MatrixXd hcat(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

double sup_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

StageDiagnostics diagnostics_of(const PartiallyLinearFit& fit) {
  StageDiagnostics d;
  d.iterations = fit.iterations;
  d.converged = fit.converged;
  d.residual_norm = fit.residual_norm;
  d.lambda = fit.config.lambda;
  d.gamma = fit.config.gamma;
  return d;
}

}  // namespace

void TruncatedSample::check() const {
  const Index n = y1.size();
  if (x1.size() != n || x_rest.rows() != n || w.rows() != n || z.rows() != n)
    throw Error(ErrorCode::LengthMismatch, "sample blocks have different row counts");
  if (n == 0) throw Error(ErrorCode::TooShort, "empty sample");
  if (!all_finite(y1) || !all_finite(x1) || !all_finite(x_rest) || !all_finite(w) || !all_finite(z))
    throw Error(ErrorCode::NonFiniteValue, "sample contains non-finite entries");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(x_rest);
  if (qr.rank() < x_rest.cols()) throw Error(ErrorCode::RankDeficient, "exogenous covariates lack full column rank");
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Ols: return "ols";
    case Method::Iv: return "iv";
    case Method::JpegIv: return "jpeg-iv";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "ols") return Method::Ols;
  if (text == "iv") return Method::Iv;
  if (text == "jpeg-iv" || text == "jpeg_iv") return Method::JpegIv;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(text) + "'");
}

VectorXd ols(const VectorXd& y, const MatrixXd& x) {
  if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "design and response differ in rows");
  if (x.rows() < x.cols()) throw Error(ErrorCode::RankDeficient, "fewer rows than regressors");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw Error(ErrorCode::RankDeficient, "design matrix lacks full column rank");
  return qr.solve(y);
}

VectorXd iv_2sls(const VectorXd& y, const MatrixXd& x, const MatrixXd& instruments) {
  if (instruments.rows() != x.rows() || x.rows() != y.size())
    throw Error(ErrorCode::LengthMismatch, "instrument rows do not match");
  if (instruments.cols() < x.cols()) throw Error(ErrorCode::InvalidArgument, "fewer instruments than regressors");
  Eigen::ColPivHouseholderQR<MatrixXd> qz(instruments);
  if (qz.rank() < instruments.cols()) throw Error(ErrorCode::RankDeficient, "instruments lack full column rank");
  const MatrixXd projected = instruments * qz.solve(x);
  return ols(y, projected);
}

std::vector<double> break_ties(std::vector<double> t) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[i - 1]) continue;
    double next = t[i - 1] + 1e-9;
    if (!(next > t[i - 1])) next = std::nextafter(t[i - 1], std::numeric_limits<double>::infinity());
    t[i] = next;
  }
  return t;
}

int default_bias_level(std::size_t n, PartiallyLinearOptions::Thresholds mode) {
  const int deepest = LevelSchedule(n).max_level();
  if (mode != PartiallyLinearOptions::Thresholds::CoarseOnly) return deepest;
  return std::max(std::min(deepest, 1), deepest - 4);
}

PartiallyLinearFit fit_partially_linear(const VectorXd& y, const MatrixXd& x, const VectorXd& index,
                                        const PartiallyLinearOptions& options) {
  const Index n = y.size();
  if (x.rows() != n || index.size() != n) throw Error(ErrorCode::LengthMismatch, "partially linear inputs differ");
  if (!y.allFinite() || !x.allFinite() || !index.allFinite())
    throw Error(ErrorCode::NonFiniteValue, "partially linear inputs contain non-finite entries");

  PartiallyLinearFit out;
  out.beta = ols(y, x);
  out.bias_at_rows = VectorXd::Zero(n);

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return index(static_cast<Index>(a)) < index(static_cast<Index>(b));
  });
  std::vector<double> sorted_index(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted_index[i] = index(static_cast<Index>(order[i]));
  out.bias_fit.locations = break_ties(std::move(sorted_index));
  out.bias_fit.values.assign(order.size(), 0.0);

  if (options.thresholds == PartiallyLinearOptions::Thresholds::ForcedZero || n < 4) {
    out.converged = true;
    out.residual_norm = (y - x * out.beta).norm();
    return out;
  }

  using Mode = PartiallyLinearOptions::Thresholds;
  const int level = options.level == 0 ? default_bias_level(static_cast<std::size_t>(n), options.thresholds)
                                       : options.level;
  const TransformPlan plan(out.bias_fit.locations, level);
  if (options.thresholds == Mode::Fixed) out.config = options.fixed;

  // Coarse lifting functions as columns; details stay at zero.
  MatrixXd basis;
  Eigen::ColPivHouseholderQR<MatrixXd> coarse_qr;
  if (options.thresholds == Mode::CoarseOnly) {
    basis.resize(n, static_cast<Index>(plan.coarse_size()));
    std::vector<double> unit(static_cast<std::size_t>(n), 0.0);
    for (Index j = 0; j < basis.cols(); ++j) {
      unit[static_cast<std::size_t>(j)] = 1.0;
      const std::vector<double> col = plan.inverse(unit);
      unit[static_cast<std::size_t>(j)] = 0.0;
      basis.col(j) = Eigen::Map<const VectorXd>(col.data(), n);
    }
    coarse_qr.compute(basis);
  }

  GridSeries partial;
  partial.locations = out.bias_fit.locations;
  partial.values.resize(order.size());
  for (int it = 1; it <= options.max_outer; ++it) {
    const VectorXd resid = y - x * out.beta;
    for (std::size_t i = 0; i < order.size(); ++i) partial.values[i] = resid(static_cast<Index>(order[i]));
    if (it == 1 && options.thresholds == Mode::CrossValidated) {
      const std::vector<double> lambdas = default_lambda_grid(partial, level, options.lambda_count);
      out.config = select_thresholds(partial, level, lambdas, options.gamma_menu, options.cv);
    }
    std::vector<double> m;
    if (options.thresholds == Mode::CoarseOnly) {
      const VectorXd target = Eigen::Map<const VectorXd>(partial.values.data(), n);
      const VectorXd projected = basis * coarse_qr.solve(target);
      m.assign(projected.data(), projected.data() + n);
    } else {
      m = penalized_fit_values(plan, partial.values, out.config, options.fit);
    }
    const double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
    for (double& v : m) v -= mean;
    for (std::size_t i = 0; i < order.size(); ++i) out.bias_at_rows(static_cast<Index>(order[i])) = m[i];
    out.bias_fit.values = std::move(m);

    const VectorXd beta = ols(y - out.bias_at_rows, x);
    const double change = sup_norm(beta - out.beta) / std::max(1.0, sup_norm(out.beta));
    out.beta = beta;
    out.iterations = it;
    if (change < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.residual_norm = (y - x * out.beta - out.bias_at_rows).norm();
  return out;
}

EstimationResult estimate_ols(const TruncatedSample& sample) {
  sample.check();
  EstimationResult r;
  r.method = Method::Ols;
  const MatrixXd x = hcat(sample.x1, sample.x_rest);
  r.beta = ols(sample.y1, x);
  r.second_stage.residual_norm = (sample.y1 - x * r.beta).norm();
  return r;
}

EstimationResult estimate_iv(const TruncatedSample& sample) {
  sample.check();
  EstimationResult r;
  r.method = Method::Iv;
  const MatrixXd x = hcat(sample.x1, sample.x_rest);
  const MatrixXd inst = hcat(sample.z, sample.x_rest);
  r.delta_first_stage = ols(sample.x1, inst);
  r.first_stage.residual_norm = (sample.x1 - inst * r.delta_first_stage).norm();
  r.beta = iv_2sls(sample.y1, x, inst);
  r.second_stage.residual_norm = (sample.y1 - x * r.beta).norm();
  return r;
}

VectorXd unit_from_angles(const VectorXd& angles) {
  const Index l = angles.size() + 1;
  VectorXd g(l);
  double carry = 1.0;
  for (Index i = 0; i + 1 < l; ++i) {
    g(i) = carry * std::cos(angles(i));
    carry *= std::sin(angles(i));
  }
  g(l - 1) = carry;
  for (Index i = 0; i < l; ++i) {
    if (g(i) == 0.0) continue;
    if (g(i) < 0.0) g = -g;
    break;
  }
  return g;
}

SimplexResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& start, double step,
                          int max_evaluations, double tolerance) {
  const Index d = start.size();
  std::vector<VectorXd> pts(static_cast<std::size_t>(d + 1), start);
  std::vector<double> vals(pts.size());
  SimplexResult res;
  auto eval = [&](const VectorXd& p) {
    ++res.evaluations;
    const double v = f(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (Index i = 0; i < d; ++i) pts[static_cast<std::size_t>(i + 1)](i) += step;
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> idx(pts.size());
  while (res.evaluations < max_evaluations) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
    if (std::fabs(vals[worst] - vals[best]) <= tolerance * (std::fabs(vals[best]) + tolerance)) break;

    VectorXd centroid = VectorXd::Zero(d);
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) centroid += pts[idx[i]];
    centroid /= static_cast<double>(d);

    const VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < vals[best]) {
      const VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const VectorXd contracted =
        outside ? VectorXd(centroid + 0.5 * (reflected - centroid)) : VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

namespace {

EstimationResult jpeg_iv_at(const TruncatedSample& s, const VectorXd& gamma, const PartiallyLinearOptions& options) {
  const VectorXd index = s.w * gamma;
  const MatrixXd first_x = hcat(s.z, s.x_rest);
  const PartiallyLinearFit first = fit_partially_linear(s.x1, first_x, index, options);
  const VectorXd x1_hat = first_x * first.beta + first.bias_at_rows;
  const PartiallyLinearFit second = fit_partially_linear(s.y1, hcat(x1_hat, s.x_rest), index, options);

  EstimationResult r;
  r.method = Method::JpegIv;
  r.beta = second.beta;
  r.delta_first_stage = first.beta;
  r.bias_term_fit_1 = second.bias_fit;
  r.bias_term_fit_2 = first.bias_fit;
  r.first_stage = diagnostics_of(first);
  r.second_stage = diagnostics_of(second);
  r.index.gamma = gamma;
  return r;
}

}  // namespace

EstimationResult jpeg_iv(const TruncatedSample& sample, const GammaMode& gamma_mode,
                         const PartiallyLinearOptions& options) {
  sample.check();
  const Index l = sample.w.cols();
  if (l == 0) throw Error(ErrorCode::InvalidArgument, "selection covariates are empty");
  if (gamma_mode.oracle) {
    if (gamma_mode.oracle->size() != l)
      throw Error(ErrorCode::LengthMismatch, "oracle index has the wrong number of coefficients");
    EstimationResult r = jpeg_iv_at(sample, *gamma_mode.oracle, options);
    r.index.normalization = IndexCoefficients::Normalization::Oracle;
    return r;
  }

  const MatrixXd first_x = hcat(sample.z, sample.x_rest);
  const double n = static_cast<double>(sample.rows());
  std::mt19937_64 rng(gamma_mode.seed);
  std::uniform_real_distribution<double> angle(-0.5 * M_PI, 0.5 * M_PI);

  PartiallyLinearOptions search = options;
  int evaluations = 0;
  double best_value = std::numeric_limits<double>::infinity();
  VectorXd best_gamma;
  for (int r = 0; r < std::max(1, gamma_mode.restarts); ++r) {
    VectorXd start(l - 1);
    for (Index i = 0; i < start.size(); ++i) start(i) = angle(rng);
    if (l == 1) {
      best_gamma = VectorXd::Ones(1);
      break;
    }
    if (r == 0 && options.thresholds == PartiallyLinearOptions::Thresholds::CrossValidated) {
      // Thresholds are tuned once at the first start and held fixed during the search.
      const PartiallyLinearFit tuned =
          fit_partially_linear(sample.x1, first_x, sample.w * unit_from_angles(start), options);
      search.thresholds = PartiallyLinearOptions::Thresholds::Fixed;
      search.fixed = tuned.config;
    }
    auto criterion = [&](const VectorXd& a) {
      const PartiallyLinearFit fit = fit_partially_linear(sample.x1, first_x, sample.w * unit_from_angles(a), search);
      return fit.residual_norm * fit.residual_norm / n;
    };
    const SimplexResult found = nelder_mead(criterion, start, 0.3, gamma_mode.max_evaluations);
    evaluations += found.evaluations;
    if (found.value < best_value) {
      best_value = found.value;
      best_gamma = unit_from_angles(found.x);
    }
  }
  if (best_gamma.size() != l || !best_gamma.allFinite())
    throw Error(ErrorCode::GammaEstimationFailed, "index search did not produce a finite direction");
  EstimationResult r = jpeg_iv_at(sample, best_gamma, options);
  r.index.normalization = IndexCoefficients::Normalization::UnitNormFirstPositive;
  r.gamma_evaluations = evaluations;
  return r;
}

}  // namespace jpegiv
