#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "jpegiv/dgp.hpp"
#include "jpegiv/estimator.hpp"

using namespace jpegiv;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(testing::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> z;
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

MatrixXd with_intercept(const MatrixXd& x) {
  MatrixXd out(x.rows(), x.cols() + 1);
  out << VectorXd::Ones(x.rows()), x;
  return out;
}

// Exogenous sample without selection: x1 = z + x2 + v, y1 = 1 + x1 - x2 + e.
TruncatedSample exogenous_sample(testing::Rng& rng, Eigen::Index n) {
  const MatrixXd g = gaussian(rng, n, 6);
  TruncatedSample s;
  s.z = g.col(0);
  s.x_rest = with_intercept(g.col(1));
  s.w = g.middleCols(2, 2);
  s.x1 = g.col(0) + g.col(1) + g.col(4);
  s.y1 = VectorXd::Ones(n) + s.x1 - g.col(1) + 0.5 * g.col(5);
  return s;
}

}  // namespace

TEST_CASE("ols") {
  testing::Rng rng(41);
  const MatrixXd x = with_intercept(gaussian(rng, 50, 3));
  const VectorXd b = (VectorXd(4) << 1.0, -2.0, 0.5, 3.0).finished();
  CHECK((ols(x * b, x) - b).cwiseAbs().maxCoeff() <= 1e-10);

  const VectorXd y = gaussian(rng, 30, 1);
  CHECK(ols(y, MatrixXd::Ones(30, 1))(0) == doctest::Approx(y.mean()).epsilon(1e-14));

  const MatrixXd big = with_intercept(gaussian(rng, 10000, 4));
  const VectorXd yb = big * VectorXd::LinSpaced(5, -1.0, 1.0) + gaussian(rng, 10000, 1);
  const VectorXd normal = (big.transpose() * big).ldlt().solve(big.transpose() * yb);
  CHECK((ols(yb, big) - normal).cwiseAbs().maxCoeff() <= 1e-8);

  MatrixXd collinear(20, 2);
  collinear.col(0) = gaussian(rng, 20, 1);
  collinear.col(1) = 2.0 * collinear.col(0);
  CHECK_ERROR_CODE(ols(gaussian(rng, 20, 1), collinear), ErrorCode::RankDeficient);
  CHECK_ERROR_CODE(ols(VectorXd::Zero(3), MatrixXd::Ones(4, 1)), ErrorCode::LengthMismatch);
}

TEST_CASE("two-stage least squares") {
  testing::Rng rng(42);
  const MatrixXd x = with_intercept(gaussian(rng, 200, 2));
  const VectorXd y = gaussian(rng, 200, 1);
  CHECK((iv_2sls(y, x, x) - ols(y, x)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK_ERROR_CODE(iv_2sls(y, x, x.leftCols(2)), ErrorCode::InvalidArgument);

  // Closed form for one regressor and one instrument.
  const VectorXd z = gaussian(rng, 200, 1), xx = z + gaussian(rng, 200, 1);
  const VectorXd yy = 2.0 * xx + gaussian(rng, 200, 1);
  CHECK(iv_2sls(yy, xx, z)(0) == doctest::Approx(z.dot(yy) / z.dot(xx)).epsilon(1e-12));
}

TEST_CASE("method names") {
  CHECK(parse_method("jpeg-iv") == Method::JpegIv);
  CHECK(to_string(Method::Iv) == "iv");
  CHECK_ERROR_CODE(parse_method("lasso"), ErrorCode::InvalidArgument);
}

TEST_CASE("sample checks") {
  testing::Rng rng(43);
  TruncatedSample s = exogenous_sample(rng, 20);
  CHECK_NOTHROW(s.check());
  s.y1(3) = std::nan("");
  CHECK_ERROR_CODE(s.check(), ErrorCode::NonFiniteValue);
  s = exogenous_sample(rng, 20);
  s.z.conservativeResize(19, Eigen::NoChange);
  CHECK_ERROR_CODE(s.check(), ErrorCode::LengthMismatch);
}

TEST_CASE("ties are broken upward in rank order") {
  const auto t = break_ties({1.0, 1.0, 1.0, 2.0});
  CHECK(t[0] == 1.0);
  CHECK(t[1] == 1.0 + 1e-9);
  CHECK(t[2] == (1.0 + 1e-9) + 1e-9);
  CHECK(t[3] == 2.0);
}

TEST_CASE("partially linear fit without a bias term is ols") {
  testing::Rng rng(44);
  const MatrixXd x = with_intercept(gaussian(rng, 300, 2));
  const VectorXd b = (VectorXd(3) << 0.5, 1.0, -1.0).finished();
  const VectorXd index = gaussian(rng, 300, 1);
  for (auto mode : {PartiallyLinearOptions::Thresholds::CoarseOnly, PartiallyLinearOptions::Thresholds::CrossValidated}) {
    PartiallyLinearOptions opts;
    opts.thresholds = mode;
    const PartiallyLinearFit f = fit_partially_linear(x * b, x, index, opts);
    CHECK((f.beta - b).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(f.bias_at_rows.cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("partially linear fit recovers a smooth bias term") {
  testing::Rng rng(45);
  const Eigen::Index n = 2048;
  const MatrixXd x = with_intercept(gaussian(rng, n, 2));
  const VectorXd b = (VectorXd(3) << 0.5, 1.0, -1.0).finished();
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  VectorXd index(n), m(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    index(i) = u(rng);
    m(i) = std::sin(index(i));
  }
  const PartiallyLinearFit f = fit_partially_linear(x * b + m, x, index);
  CHECK(f.converged);
  CHECK((f.beta.tail(2) - b.tail(2)).cwiseAbs().maxCoeff() <= 1e-2);
  // The intercept and the centred fit share the level of sin.
  const VectorXd level_fit = f.bias_at_rows.array() + (f.beta(0) - b(0));
  CHECK(std::sqrt((level_fit - m).squaredNorm() / static_cast<double>(n)) <= 0.05);
  CHECK(std::abs(f.bias_at_rows.mean()) <= 1e-10);
  CHECK(std::is_sorted(f.bias_fit.locations.begin(), f.bias_fit.locations.end()));
}

TEST_CASE("a constant bias term is absorbed by the intercept") {
  testing::Rng rng(46);
  const MatrixXd x = with_intercept(gaussian(rng, 400, 1));
  const VectorXd y = x * VectorXd::Ones(2) + gaussian(rng, 400, 1) * 0.1 + VectorXd::Constant(400, 3.0);
  const PartiallyLinearFit f = fit_partially_linear(y, x, gaussian(rng, 400, 1));
  CHECK(f.beta(0) + f.bias_at_rows.mean() == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("jpeg-iv invariances") {
  const GeneratedSample g = generate(3000, Dgp1Params{}, DisturbanceSpec{}, CovariateMode::Gaussian, 99);
  const GammaMode oracle = GammaMode::from_oracle(Eigen::Vector2d(2.0, -1.0));
  const EstimationResult base = jpeg_iv(g.truncated, oracle);

  SUBCASE("scale equivariance") {
    TruncatedSample scaled = g.truncated;
    scaled.y1 *= 10.0;
    const EstimationResult r = jpeg_iv(scaled, oracle);
    for (Eigen::Index i = 0; i < r.beta.size(); ++i)
      CHECK(r.beta(i) == doctest::Approx(10.0 * base.beta(i)).epsilon(1e-8));
    for (std::size_t i = 0; i < r.bias_term_fit_1.size(); ++i)
      CHECK(r.bias_term_fit_1.values[i] ==
            doctest::Approx(10.0 * base.bias_term_fit_1.values[i]).epsilon(1e-8).scale(1.0));
  }
  SUBCASE("row permutation") {
    const TruncatedSample& s = g.truncated;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(s.rows()));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    testing::Rng rng(47);
    std::shuffle(perm.begin(), perm.end(), rng);
    TruncatedSample p = s;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const Eigen::Index j = perm[static_cast<std::size_t>(i)];
      p.y1(i) = s.y1(j);
      p.x1(i) = s.x1(j);
      p.x_rest.row(i) = s.x_rest.row(j);
      p.w.row(i) = s.w.row(j);
      p.z.row(i) = s.z.row(j);
    }
    const EstimationResult r = jpeg_iv(p, oracle);
    CHECK((r.beta - base.beta).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((r.delta_first_stage - base.delta_first_stage).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("first-stage normal equations") {
    const TruncatedSample& s = g.truncated;
    MatrixXd inst(s.rows(), 1 + s.x_rest.cols());
    inst << s.z, s.x_rest;
    const VectorXd m2 = [&] {
      // bias_term_fit_2 is stored in index order; map it back to rows.
      VectorXd idx = s.w * Eigen::Vector2d(2.0, -1.0);
      std::vector<Eigen::Index> order(static_cast<std::size_t>(s.rows()));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return idx(a) < idx(b); });
      VectorXd out(s.rows());
      for (std::size_t i = 0; i < order.size(); ++i) out(order[i]) = base.bias_term_fit_2.values[i];
      return out;
    }();
    const VectorXd resid = s.x1 - inst * base.delta_first_stage - m2;
    CHECK((inst.transpose() * resid).cwiseAbs().maxCoeff() / static_cast<double>(s.rows()) <= 1e-8);
  }
  CHECK(base.first_stage.converged);
  CHECK(base.second_stage.converged);
  CHECK(base.index.normalization == IndexCoefficients::Normalization::Oracle);
}

TEST_CASE("forcing the bias terms to zero gives two-stage least squares") {
  testing::Rng rng(48);
  PartiallyLinearOptions opts;
  opts.thresholds = PartiallyLinearOptions::Thresholds::ForcedZero;
  for (int rep = 0; rep < 5; ++rep) {
    const TruncatedSample s = exogenous_sample(rng, 500);
    const EstimationResult j = jpeg_iv(s, GammaMode::from_oracle(Eigen::Vector2d(1.0, 0.0)), opts);
    const EstimationResult iv = estimate_iv(s);
    CHECK((j.beta - iv.beta).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((j.delta_first_stage - iv.delta_first_stage).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("without selection the bias fits stay small and jpeg-iv tracks 2sls") {
  testing::Rng rng(49);
  const TruncatedSample s = exogenous_sample(rng, 4000);
  const EstimationResult j = jpeg_iv(s, GammaMode::from_oracle(Eigen::Vector2d(1.0, 0.0)));
  const EstimationResult iv = estimate_iv(s);
  CHECK((j.beta - iv.beta).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("baseline estimators report their pieces") {
  testing::Rng rng(50);
  const TruncatedSample s = exogenous_sample(rng, 300);
  const EstimationResult o = estimate_ols(s);
  CHECK(o.method == Method::Ols);
  CHECK(o.beta.size() == 3);
  CHECK(o.delta_first_stage.size() == 0);
  const EstimationResult iv = estimate_iv(s);
  CHECK(iv.delta_first_stage.size() == 3);
  CHECK(iv.beta(0) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("unit vectors from angles") {
  testing::Rng rng(51);
  std::uniform_real_distribution<double> a(-3.0, 3.0);
  for (int d = 1; d <= 4; ++d) {
    for (int rep = 0; rep < 20; ++rep) {
      VectorXd ang(d);
      for (int i = 0; i < d; ++i) ang(i) = a(rng);
      const VectorXd g = unit_from_angles(ang);
      CHECK(g.size() == d + 1);
      CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-14));
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (g(i) == 0.0) continue;
        CHECK(g(i) > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("simplex search minimizes a shifted quadratic") {
  const auto f = [](const VectorXd& x) { return (x(0) - 1.0) * (x(0) - 1.0) + 3.0 * (x(1) + 2.0) * (x(1) + 2.0); };
  const SimplexResult r = nelder_mead(f, VectorXd::Zero(2), 0.5, 2000, 1e-14);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x(1) == doctest::Approx(-2.0).epsilon(1e-4));
  CHECK(r.evaluations <= 2000);
}

TEST_CASE("index direction estimated from a truncated sample") {
  const GeneratedSample g = generate(4000, Dgp1Params{}, DisturbanceSpec{}, CovariateMode::Gaussian, 7);
  GammaMode mode = GammaMode::estimate();
  mode.max_evaluations = 150;
  mode.restarts = 2;
  const EstimationResult r = jpeg_iv(g.truncated, mode);
  const VectorXd truth = Eigen::Vector2d(2.0, -1.0).normalized();
  CHECK(r.index.normalization == IndexCoefficients::Normalization::UnitNormFirstPositive);
  CHECK(r.index.gamma.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.index.gamma.dot(truth)) >= 0.95);
  CHECK(r.gamma_evaluations > 0);
}
