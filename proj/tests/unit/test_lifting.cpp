#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "jpegiv/lifting.hpp"
#include "jpegiv/matrix_oracle.hpp"

using namespace jpegiv;
using Eigen::MatrixXd;

namespace {

// Columns are the images of the unit vectors under `apply`.
template <class F>
MatrixXd assemble(std::size_t n, F apply) {
  MatrixXd m(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const std::vector<double> col = apply(e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return m;
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("filter constants") {
  CHECK(kJpegFilter.pi1 == -1.5861343420693648);
  CHECK(kJpegFilter.pi2 == -0.0529801185718856);
  CHECK(kJpegFilter.pi3 == 0.8829110755411875);
  CHECK(kJpegFilter.pi4 == 0.4435068520511142);
  CHECK(kJpegFilter.phi == 1.1496043988602418);
}

TEST_CASE("odd pad coefficients follow the printed formulas") {
  const auto& f = kJpegFilter;
  const double den = 1.0 + 2.0 * f.pi2 * f.pi3;
  const auto c = OddPadCoefficients::printed();
  CHECK(c.phi_delta[0] == doctest::Approx(-2.0 * f.pi1 * f.pi2 * f.pi3 / den).epsilon(1e-15));
  CHECK(c.phi_delta[1] == doctest::Approx(2.0 * f.pi2 * f.pi3 / den).epsilon(1e-15));
  CHECK(c.phi_delta[2] == doctest::Approx(2.0 * (f.pi1 + f.pi3 + 3.0 * f.pi1 * f.pi2 * f.pi3) / den).epsilon(1e-15));
  const auto u = OddPadCoefficients::uniform_zeroing();
  CHECK(u.phi_delta[0] == c.phi_delta[0]);
  CHECK(u.phi_delta[1] == -c.phi_delta[1]);
  CHECK(u.phi_delta[2] == -c.phi_delta[2]);
}

TEST_CASE("interpolation weights") {
  SUBCASE("equispaced grids give exactly one half") {
    std::vector<double> odd, even;
    for (int i = 0; i < 9; ++i) {
      odd.push_back(2.0 * i);
      even.push_back(2.0 * i + 1.0);
    }
    const LevelWeights w = level_weights(odd, even);
    for (double x : w.predict) CHECK(x == 0.5);
    for (double x : w.update) CHECK(x == 0.5);
  }
  SUBCASE("irregular grid [0,1,3,4]") {
    const std::vector<double> odd{0, 3}, even{1, 4};
    const LevelWeights w = level_weights(odd, even);
    // Predicting t=1 from t=0 and t=3: the nearer point t=0 gets (3-1)/(3-0).
    CHECK(w.predict[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(w.predict[1] == 0.5);
  }
  SUBCASE("zero spacing in a denominator") {
    const std::vector<double> odd{0, 0}, even{1, 2};
    CHECK_ERROR_CODE(level_weights(odd, even), ErrorCode::ZeroGridSpacing);
  }
}

TEST_CASE("filter on a constant series gives 2 pi c") {
  testing::Rng rng(3);
  const auto grid = testing::random_grid(rng, 16);
  const std::vector<double> c(8, 1.75);
  for (int flag : {0, 1}) {
    const auto y = filter(c, flag, 0.3, grid);
    for (double v : y) CHECK(v == doctest::Approx(2.0 * 0.3 * 1.75).epsilon(1e-14));
  }
  CHECK_ERROR_CODE(filter(c, 0, 0.3, std::vector<double>(grid.begin(), grid.begin() + 10)), ErrorCode::GridTooShort);
}

TEST_CASE("trans_inv_filter is the adjoint of filter") {
  testing::Rng rng(4);
  for (std::size_t h : {1u, 2u, 5u, 12u}) {
    const auto grid = testing::random_grid(rng, 2 * h);
    for (int flag : {0, 1}) {
      const MatrixXd f = assemble(h, [&](const std::vector<double>& x) { return filter(x, flag, 0.7, grid); });
      const MatrixXd t =
          assemble(h, [&](const std::vector<double>& x) { return trans_inv_filter(x, 1 - flag, 0.7, grid); });
      CHECK(max_abs(f.transpose() - t) <= 1e-14);
    }
  }
}

TEST_CASE("two-point hand trace") {
  const auto& f = kJpegFilter;
  // Both neighbours of a one-entry segment are the entry itself.
  double d = 1.0, s = 0.0;
  s += 2.0 * f.pi1 * d;
  d += 2.0 * f.pi2 * s;
  s += 2.0 * f.pi3 * d;
  d += 2.0 * f.pi4 * s;
  const WaveletCoefficients c = forward_transform(GridSeries{{0.0, 1.0}, {1.0, 0.0}}, 1);
  REQUIRE(c.coefficients.size() == 2);
  CHECK(c.coefficients[0] == doctest::Approx(d * f.phi).epsilon(1e-15));
  CHECK(c.coefficients[1] == doctest::Approx(s / f.phi).epsilon(1e-15));
  CHECK(c.permuted_grid == std::vector<double>{0.0, 1.0});
  const MatrixOracle o = build_matrix_oracle(std::vector<double>{0.0, 1.0}, 1);
  CHECK(o.forward(0, 0) == doctest::Approx(c.coefficients[0]).epsilon(1e-14));
  CHECK(o.forward(1, 0) == doctest::Approx(c.coefficients[1]).epsilon(1e-14));
}

TEST_CASE("oracle building blocks") {
  testing::Rng rng(8);
  for (std::size_t n : {2u, 8u, 32u, 64u}) {
    const MatrixXd a = shift_matrix(n);
    CHECK(max_abs(a * a.transpose() - MatrixXd::Identity(n, n)) == 0.0);
    const MatrixXd s = rescale_matrix(n, kJpegFilter.phi);
    CHECK(max_abs(s * inverse_rescale_matrix(n, kJpegFilter.phi) - MatrixXd::Identity(n, n)) <= 1e-15);
  }
  for (std::size_t n : {2u, 7u, 17u, 32u}) {
    const auto grid = testing::random_grid(rng, n);
    for (int level = 1; level <= LevelSchedule(n).max_level(); ++level) {
      const MatrixOracle o = build_matrix_oracle(grid, level);
      CHECK(max_abs(o.forward * o.inverse - MatrixXd::Identity(n, n)) <= 1e-10);
      CHECK(max_abs(o.transposed_inverse - o.inverse.transpose()) == 0.0);
    }
  }
  CHECK_ERROR_CODE(build_matrix_oracle(testing::random_grid(rng, 257), 1), ErrorCode::TooLarge);
}

TEST_CASE("lifting matches the dense oracle on unit vectors") {
  testing::Rng rng(21);
  for (std::size_t n = 2; n <= 40; n += (n < 12 ? 1 : 7)) {
    const auto grid = testing::random_grid(rng, n);
    for (int level = 1; level <= LevelSchedule(n).max_level(); ++level) {
      CAPTURE(n);
      CAPTURE(level);
      const TransformPlan plan(grid, level);
      const MatrixOracle o = build_matrix_oracle(grid, level);
      const MatrixXd fwd = assemble(n, [&](const std::vector<double>& x) { return plan.forward(x); });
      const MatrixXd inv = assemble(n, [&](const std::vector<double>& x) { return plan.inverse(x); });
      const MatrixXd ti = assemble(n, [&](const std::vector<double>& x) { return plan.transposed_inverse(x); });
      CHECK(max_abs(fwd - o.forward) <= 1e-10);
      CHECK(max_abs(inv - o.inverse) <= 1e-10);
      CHECK(max_abs(ti - o.inverse.transpose()) <= 1e-10);
    }
  }
}

TEST_CASE("inverse equals the dense inverse of the forward oracle") {
  testing::Rng rng(22);
  for (std::size_t n : {4u, 9u, 16u, 31u, 32u}) {
    const auto grid = testing::random_grid(rng, n);
    const int level = LevelSchedule(n).max_level();
    const MatrixOracle o = build_matrix_oracle(grid, level);
    const TransformPlan plan(grid, level);
    const MatrixXd inv = assemble(n, [&](const std::vector<double>& x) { return plan.inverse(x); });
    CHECK(max_abs(inv - o.forward.inverse()) <= 1e-8);
  }
}

TEST_CASE("perfect reconstruction, even and odd lengths") {
  testing::Rng rng(23);
  std::uniform_int_distribution<std::size_t> len(2, 256);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = len(rng);
    const auto grid = testing::random_grid(rng, n);
    const auto u = testing::random_values(rng, n, 5.0);
    std::uniform_int_distribution<int> lev(1, LevelSchedule(n).max_level());
    const int level = lev(rng);
    const WaveletCoefficients c = forward_transform(GridSeries{grid, u}, level);
    const GridSeries back = inverse_transform(c);
    double norm = 0.0;
    for (double x : u) norm = std::max(norm, std::fabs(x));
    CHECK(back.locations == grid);
    CHECK(testing::max_abs_diff(back.values, u) <= 1e-10 * (1.0 + norm));
  }
}

TEST_CASE("linearity, adjoint identity and zero input") {
  testing::Rng rng(24);
  for (std::size_t n : {5u, 64u, 129u}) {
    const auto grid = testing::random_grid(rng, n);
    const TransformPlan plan(grid, LevelSchedule(n).max_level());
    const auto u = testing::random_values(rng, n), v = testing::random_values(rng, n);
    std::vector<double> mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = 2.5 * u[i] - 0.75 * v[i];
    const auto fu = plan.forward(u), fv = plan.forward(v), fm = plan.forward(mix);
    for (std::size_t i = 0; i < n; ++i) CHECK(fm[i] == doctest::Approx(2.5 * fu[i] - 0.75 * fv[i]).epsilon(1e-10));

    const auto delta = testing::random_values(rng, n);
    const double lhs = testing::inner(plan.inverse(delta), v);
    const double rhs = testing::inner(delta, plan.transposed_inverse(v));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    const std::vector<double> zero(n, 0.0);
    for (double x : plan.forward(zero)) CHECK(x == 0.0);
    for (double x : plan.inverse(zero)) CHECK(x == 0.0);
    for (double x : plan.transposed_inverse(zero)) CHECK(x == 0.0);
  }
}

TEST_CASE("free functions agree with the plan") {
  testing::Rng rng(25);
  const std::size_t n = 37;
  const auto grid = testing::random_grid(rng, n);
  const auto v = testing::random_values(rng, n);
  const TransformPlan plan(grid, 3);
  CHECK(transposed_inverse_transform(v, grid, 3) == plan.transposed_inverse(v));
  const WaveletCoefficients c = forward_transform(GridSeries{grid, v}, 3);
  CHECK(c.coefficients == plan.forward(v));
  CHECK(c.permuted_grid == plan.permuted_grid());
  CHECK(c.level == 3);
  const TransformPlan again = TransformPlan::from_permuted(c.permuted_grid, 3);
  CHECK(again.grid() == grid);
}

TEST_CASE("layout bookkeeping") {
  const std::vector<double> grid{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const TransformPlan plan(grid, 3);
  CHECK(plan.coarse_size() == 2);
  CHECK(plan.detail_range(1) == std::pair<std::size_t, std::size_t>{6, 11});
  CHECK(plan.detail_range(2) == std::pair<std::size_t, std::size_t>{3, 6});
  CHECK(plan.detail_range(3) == std::pair<std::size_t, std::size_t>{2, 3});
  CHECK(plan.step_of(0) == 0);
  CHECK(plan.step_of(2) == 3);
  CHECK(plan.step_of(10) == 1);
}

TEST_CASE("level and length errors") {
  const std::vector<double> grid{0, 1, 2, 3};
  CHECK_ERROR_CODE(TransformPlan(grid, 0), ErrorCode::LevelOutOfRange);
  CHECK_ERROR_CODE(TransformPlan(grid, 3), ErrorCode::LevelOutOfRange);
  CHECK_ERROR_CODE(TransformPlan(std::vector<double>{0, 2, 1, 3}, 1), ErrorCode::NonMonotonicGrid);
  const TransformPlan plan(grid, 2);
  CHECK_ERROR_CODE(plan.forward(std::vector<double>(3, 0.0)), ErrorCode::LengthMismatch);
}
