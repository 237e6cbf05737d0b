#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "jpegiv/denoise.hpp"
#include "jpegiv/kernels.hpp"

using namespace jpegiv;
namespace k = jpegiv::kernels;

namespace {

std::vector<k::Isa> available() {
  std::vector<k::Isa> out{k::Isa::Scalar};
  if (k::detected_isa() == k::Isa::Avx2) out.push_back(k::Isa::Avx2);
  return out;
}

// Values spread over the dead zone, the shrinkage band and the pass-through band.
std::vector<double> threshold_inputs(testing::Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  if (n > 3) {
    v[0] = 0.0;
    v[1] = -0.0;
    v[2] = 1.0;  // exactly lambda / alpha below
  }
  return v;
}

}  // namespace

TEST_CASE("scoped isa restores the previous selection") {
  const k::Isa before = k::active_isa();
  {
    k::ScopedIsa scalar(k::Isa::Scalar);
    CHECK(k::active_isa() == k::Isa::Scalar);
  }
  CHECK(k::active_isa() == before);
  CHECK(k::to_string(k::Isa::Scalar) == "scalar");
}

TEST_CASE("kernels match naive loops for every length up to 67") {
  testing::Rng rng(5);
  for (k::Isa isa : available()) {
    k::ScopedIsa scope(isa);
    CAPTURE(k::to_string(isa));
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = testing::random_values(rng, n), b = testing::random_values(rng, n);
      const auto wl = testing::random_values(rng, n), wh = testing::random_values(rng, n);
      auto y = testing::random_values(rng, n);
      std::vector<double> expect = y;
      for (std::size_t i = 0; i < n; ++i) expect[i] += 0.7 * (wl[i] * a[i] + wh[i] * b[i]);
      k::lift_accumulate(y, a, b, wl, wh, 0.7);
      CHECK(testing::max_abs_diff(y, expect) <= 1e-13);

      std::vector<double> out(n);
      k::add_scaled(out, a, b, -1.5);
      for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == doctest::Approx(a[i] - 1.5 * b[i]).epsilon(1e-15));
      k::difference(out, a, b);
      for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] - b[i]);

      double d = 0.0, ss = 0.0, dist = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d += a[i] * b[i];
        ss += a[i] * a[i];
        dist += (a[i] - b[i]) * (a[i] - b[i]);
      }
      CHECK(k::dot(a, b) == doctest::Approx(d).epsilon(1e-12));
      CHECK(k::sum_squares(a) == doctest::Approx(ss).epsilon(1e-12));
      CHECK(k::squared_distance(a, b) == doctest::Approx(dist).epsilon(1e-12));

      const auto t = threshold_inputs(rng, n);
      k::mcp_threshold(t, out, 1.0, 3.0, 1.0);
      double pen = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(out[i] == threshold(t[i], 1.0, 3.0, 1.0));
        pen += mcp_penalty(std::fabs(t[i]), 1.0, 3.0);
      }
      CHECK(k::mcp_penalty_sum(t, 1.0, 3.0) == doctest::Approx(pen).epsilon(1e-12));
    }
  }
}

TEST_CASE("vector and scalar kernels agree") {
  if (k::detected_isa() != k::Isa::Avx2) return;
  testing::Rng rng(9);
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 15u, 64u, 1001u}) {
    const auto a = testing::random_values(rng, n), b = testing::random_values(rng, n);
    const auto t = threshold_inputs(rng, n);
    std::vector<double> ts(n), tv(n);
    double ds, dv, ps, pv;
    {
      k::ScopedIsa s(k::Isa::Scalar);
      k::mcp_threshold(t, ts, 0.8, 1.2, 1.0);
      ds = k::dot(a, b);
      ps = k::mcp_penalty_sum(t, 0.8, 1.2);
    }
    {
      k::ScopedIsa s(k::Isa::Avx2);
      k::mcp_threshold(t, tv, 0.8, 1.2, 1.0);
      dv = k::dot(a, b);
      pv = k::mcp_penalty_sum(t, 0.8, 1.2);
    }
    // Thresholding is elementwise and exact; reductions differ only in order.
    for (std::size_t i = 0; i < n; ++i) CHECK(std::signbit(ts[i]) == std::signbit(tv[i]));
    CHECK(ts == tv);
    CHECK(dv == doctest::Approx(ds).epsilon(1e-12));
    CHECK(pv == doctest::Approx(ps).epsilon(1e-12));
  }
}

TEST_CASE("mismatched spans are rejected") {
  std::vector<double> a(4), b(3), out(4);
  CHECK_ERROR_CODE(k::difference(out, a, b), ErrorCode::LengthMismatch);
  CHECK_ERROR_CODE(k::dot(a, b), ErrorCode::LengthMismatch);
}
