// Runs every acceptance criterion and prints one PASS/FAIL line for each.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jpegiv/denoise.hpp"
#include "jpegiv/dgp.hpp"
#include "jpegiv/estimator.hpp"
#include "jpegiv/lifting.hpp"
#include "jpegiv/matrix_oracle.hpp"
#include "jpegiv/montecarlo.hpp"
#include "stats.hpp"
#include "threshold_oracle.hpp"

using namespace jpegiv;

namespace {

using Rng = std::mt19937_64;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::vector<double> random_grid(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> step(0.05, 5.0);
  std::vector<double> g(n);
  double t = step(rng);
  for (auto& x : g) {
    x = t;
    t += step(rng);
  }
  return g;
}

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

Outcome transposed_inverse_matches_oracle() {
  Rng rng(101);
  std::uniform_int_distribution<std::size_t> size(2, 64);
  double worst = 0.0;
  int transforms = 0;
  for (int c = 0; c < 500; ++c) {
    const std::size_t n = size(rng);
    const auto grid = random_grid(rng, n);
    for (int level = 1; level <= LevelSchedule(n).max_level(); ++level) {
      const TransformPlan plan(grid, level);
      const Eigen::MatrixXd expected = build_matrix_oracle(grid, level).inverse.transpose();
      std::vector<double> e(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const auto col = plan.transposed_inverse(e);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          worst = std::max(worst, std::fabs(col[i] - expected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      }
      ++transforms;
    }
  }
  return {worst <= 1e-10, std::to_string(transforms) + " grid/level pairs, max error " + sci(worst)};
}

Outcome perfect_reconstruction() {
  Rng rng(102);
  std::uniform_int_distribution<std::size_t> size(2, 256);
  double worst = 0.0;
  int odd = 0;
  bool pass = true;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = size(rng);
    odd += n % 2;
    GridSeries s{random_grid(rng, n), random_values(rng, n)};
    const int max_level = LevelSchedule(n).max_level();
    const int level = std::uniform_int_distribution<int>(1, max_level)(rng);
    const GridSeries back = inverse_transform(forward_transform(s, level));
    double sup = 0.0, err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sup = std::max(sup, std::fabs(s.values[i]));
      err = std::max(err, std::fabs(back.values[i] - s.values[i]));
      pass = pass && back.locations[i] == s.locations[i];
    }
    pass = pass && err <= 1e-10 * (1.0 + sup);
    worst = std::max(worst, err / (1.0 + sup));
  }
  return {pass, "1000 cases (" + std::to_string(odd) + " odd), max scaled error " + sci(worst)};
}

Outcome thresholding_oracle() {
  Rng rng(103);
  std::uniform_real_distribution<double> lam(0.1, 3.0), gam(1.1, 10.0), tilde(-12.0, 12.0), scale(1.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double l = lam(rng), g = gam(rng), t = tilde(rng);
    const double a = (scale(rng) * 1.05 + 1.0) / g;
    worst = std::max(worst, std::fabs(threshold(t, l, g, a) - testing::brute_threshold(t, l, g, a)));
  }
  bool pass = worst <= 1e-5;

  double soft_err = 0.0;
  int hard_bad = 0, hard_checked = 0;
  std::uniform_real_distribution<double> any(-8.0, 8.0), lam2(0.2, 2.0), alpha(0.5, 3.0);
  for (int i = 0; i < 500; ++i) {
    const double t = any(rng), l = lam2(rng), a = alpha(rng);
    const double soft = std::copysign(std::max(std::fabs(t) - l / a, 0.0), t);
    soft_err = std::max(soft_err, std::fabs(threshold(t, l, 1e12, a) - soft));

    const double g = 1.0 + 2.0 * a;
    const double ah = (1.0 + 1e-9) / g, knot = g * l;
    if (std::fabs(std::fabs(t) - knot) < 1e-3) continue;
    const double h = threshold(t, l, g, ah);
    const double hard = std::fabs(t) > knot ? t : 0.0;
    ++hard_checked;
    hard_bad += std::fabs(h - hard) > 1e-6 * (1.0 + std::fabs(t)) ? 1 : 0;
  }
  pass = pass && soft_err <= 1e-6 && hard_bad == 0;
  return {pass, "oracle max error " + sci(worst) + ", soft-limit error " + sci(soft_err) +
                    ", hard-limit mismatches " + std::to_string(hard_bad) + "/" + std::to_string(hard_checked)};
}

double mean_of(const SimulationResult& r, Eigen::Index n, SimMethod m) {
  const SummaryRow* row = r.find(n, m, Parameter::Beta1);
  return row ? row->stats.mean : std::nan("");
}

Outcome truncated_biases(const SimulationResult& r) {
  const double ols = mean_of(r, 500, SimMethod::TruncOls), iv = mean_of(r, 500, SimMethod::TruncIv),
               jp = mean_of(r, 500, SimMethod::JpegIv);
  const bool pass = within(ols, 2.10, 2.42) && within(iv, -0.10, 0.32) && within(jp, 0.80, 1.10);
  return {pass, "n=500 mean beta1: trunc-ols " + fixed(ols) + ", trunc-iv " + fixed(iv) + ", jpeg-iv " + fixed(jp)};
}

Outcome full_sample_baselines(const SimulationResult& r) {
  const double ols = mean_of(r, 2000, SimMethod::FullOls), iv = mean_of(r, 2000, SimMethod::FullIv);
  return {within(ols, 2.64, 2.72) && within(iv, 0.93, 1.07),
          "n=2000 mean beta1: full-ols " + fixed(ols) + ", full-iv " + fixed(iv)};
}

Outcome convergence_rates(const SimulationResult& r) {
  const Eigen::Index sizes[] = {500, 2000, 8000};
  bool pass = true;
  std::string detail = "jpeg-iv delta";
  for (int i = 0; i < 2; ++i) {
    const SummaryRow* a = r.find(sizes[i], SimMethod::JpegIv, Parameter::Beta1);
    const SummaryRow* b = r.find(sizes[i + 1], SimMethod::JpegIv, Parameter::Beta1);
    const double d = convergence_delta(a->stats.std, b->stats.std, static_cast<double>(a->n), static_cast<double>(b->n));
    pass = pass && within(d, 0.30, 0.70);
    detail += " " + fixed(d, 3);
  }
  auto drop = [&](SimMethod m) {
    return 1.0 - r.find(8000, m, Parameter::Beta1)->rmse / r.find(2000, m, Parameter::Beta1)->rmse;
  };
  const double iv_drop = drop(SimMethod::TruncIv), jp_drop = drop(SimMethod::JpegIv);
  pass = pass && iv_drop < 0.25 && jp_drop > 0.35;
  return {pass, detail + "; rmse drop 2000->8000: trunc-iv " + fixed(100.0 * iv_drop, 1) + "%, jpeg-iv " +
                    fixed(100.0 * jp_drop, 1) + "%"};
}

Outcome nesting() {
  PartiallyLinearOptions opts;
  opts.thresholds = PartiallyLinearOptions::Thresholds::ForcedZero;
  DisturbanceSpec independent;
  independent.clayton_theta = 1e-3;
  double worst = 0.0;
  for (std::uint64_t c = 0; c < 10; ++c) {
    const TruncatedSample s =
        generate(1000, Dgp1Params{}, independent, CovariateMode::Gaussian, stream_seed(107, c)).full_sample();
    const EstimationResult j = jpeg_iv(s, GammaMode::from_oracle(Eigen::Vector2d(2.0, -1.0)), opts);
    const EstimationResult iv = estimate_iv(s);
    worst = std::max(worst, (j.beta - iv.beta).cwiseAbs().maxCoeff());
    worst = std::max(worst, (j.delta_first_stage - iv.delta_first_stage).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, "10 cases, max coefficient gap " + sci(worst)};
}

Outcome disturbance_draws() {
  Rng rng(stream_seed(108, 1));
  const Eigen::MatrixXd u = sample_clayton(2, 1.0, 100000, rng);
  const std::vector<double> a(u.col(0).data(), u.col(0).data() + u.rows()), b(u.col(1).data(), u.col(1).data() + u.rows());
  const double tau = testing::kendall_tau(a, b);

  const DisturbanceSpec spec;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double sum = 0.0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) sum += mixture_quantile(unit(rng), spec);
  const double mean = sum / draws;
  return {std::fabs(tau - 1.0 / 3.0) <= 0.01 && std::fabs(mean) <= 0.02,
          "Clayton tau " + fixed(tau) + ", mixture mean " + fixed(mean)};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("[%s] criterion %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "transposed inverse", [] {
    const auto start = Clock::now();
    Outcome o = transposed_inverse_matches_oracle();
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (secs >= 30.0) o = {false, o.detail + ", too slow"};
    return o;
  });
  report(2, "perfect reconstruction", perfect_reconstruction);
  report(3, "thresholding", thresholding_oracle);

  SimulationResult sim;
  const auto sim_start = Clock::now();
  std::string sim_error;
  try {
    ExperimentPlan plan;
    plan.sample_sizes = {500, 2000, 8000};
    plan.replications = 200;
    sim = run(plan);
  } catch (const std::exception& e) {
    sim_error = e.what();
  }
  std::printf("simulation of 3 sizes x 200 replications took %.1fs\n",
              std::chrono::duration<double>(Clock::now() - sim_start).count());
  auto needs_sim = [&](std::function<Outcome(const SimulationResult&)> f) {
    return [&sim, &sim_error, f]() -> Outcome {
      if (!sim_error.empty()) return {false, "simulation failed: " + sim_error};
      if (!sim.hard_failures.empty()) return {false, "hard failure: " + sim.hard_failures.front()};
      return f(sim);
    };
  };
  report(4, "truncated-sample biases", needs_sim(truncated_biases));
  report(5, "full-sample baselines", needs_sim(full_sample_baselines));
  report(6, "convergence rates", needs_sim(convergence_rates));
  report(7, "nesting", nesting);
  report(8, "disturbance draws", disturbance_draws);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
