#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "jpegiv/estimator.hpp"

namespace jpegiv {

using Rng = std::mt19937_64;

/// Independent stream seed for (base, a, b); splitmix64 finalizer over the
/// combined words so neighbouring inputs give unrelated streams.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Disturbance marginals: weights[0] N(mu, sigma_a^2) + weights[1] N(-mu, sigma_b^2)
/// + weights[2] Gamma(shape mu*varphi, rate varphi); v ~ N(0, sigma_v^2).
struct DisturbanceSpec {
  double mu = 4.0;
  double sigma_a = 2.5;
  double sigma_b = 1.5;
  double varphi = 2.0;
  double sigma_v = 1.0;
  double clayton_theta = 1.0;
  std::array<double, 3> weights{0.4, 0.5, 0.1};

  void check() const;
};

struct Dgp1Params {
  double alpha1 = 2.0;
  double alpha2 = 0.5;
  double beta1 = 1.0;
  double beta2 = 1.25;
  double delta1 = 0.5;
  double delta2 = 1.0;
  double gamma1 = 2.0;
  double gamma2 = -1.0;
  /// Covariance of (z, x2, w1, w2).
  Eigen::Matrix4d covariance = default_covariance();

  static Eigen::Matrix4d default_covariance();
  /// Throws SingularCovariance unless the covariance is symmetric positive definite.
  void check() const;
};

enum class CovariateMode { Gaussian, RandomMixture };
std::string_view to_string(CovariateMode mode) noexcept;
CovariateMode parse_covariate_mode(std::string_view text);

/// Clayton copula draws via the Marshall-Olkin frailty construction.
/// Returns count x dim uniforms in (0,1).
Eigen::MatrixXd sample_clayton(int dim, double theta, Eigen::Index count, Rng& rng);

double mixture_cdf(double x, const DisturbanceSpec& spec);
/// Bisection inverse of mixture_cdf to 1e-10.
double mixture_quantile(double p, const DisturbanceSpec& spec);

/// Finite mixture of normal, gamma and uniform pieces, shifted and scaled to
/// mean zero and a target variance.
class MixtureMarginal {
 public:
  enum class Kind { Normal, Gamma, Uniform };
  struct Component {
    Kind kind;
    double weight;
    double a;  // normal mean / gamma shape / uniform lower end
    double b;  // normal sd / gamma scale / uniform upper end
  };

  MixtureMarginal(std::vector<Component> components, double target_variance);

  double cdf(double x) const;
  double quantile(double p) const;
  double mean() const noexcept { return 0.0; }
  double variance() const noexcept { return target_variance_; }
  const std::vector<Component>& components() const noexcept { return components_; }

 private:
  double raw_cdf(double x) const;
  double raw_quantile_bound(double p, bool upper) const;

  std::vector<Component> components_;
  double target_variance_;
  double shift_ = 0.0;
  double scale_ = 1.0;
};

/// One marginal per variance entry, drawn deterministically from menu_seed:
/// 2 to 4 components from {normal, gamma, uniform} with random parameters.
std::vector<MixtureMarginal> random_mixture_marginals(std::uint64_t menu_seed, const std::vector<double>& variances);

struct FullData {
  Eigen::VectorXd y1, y2, x1, z, x2, w1, w2, v, eps1, eps2;
  Eigen::Index rows() const noexcept { return y1.size(); }
};

struct GeneratedSample {
  FullData full;
  TruncatedSample truncated;
  std::vector<Eigen::Index> kept;  // full-data rows with y2 >= 0
  std::uint64_t seed = 0;
  double participation_rate = 0.0;

  /// The complete data in estimator form (no truncation).
  TruncatedSample full_sample() const;
};

GeneratedSample generate(Eigen::Index n, const Dgp1Params& params, const DisturbanceSpec& spec,
                         CovariateMode covariate_mode, std::uint64_t seed);

/// Reads key=value lines or a JSON object. Keys match the field names above;
/// `covariance` takes 16 numbers (row-major) or a 4x4 JSON array, and
/// `weights` three numbers.
struct DgpConfig {
  Dgp1Params params;
  DisturbanceSpec spec;
};
DgpConfig parse_dgp_config(const std::string& text);
DgpConfig load_dgp_config(const std::string& path);

}  // namespace jpegiv
