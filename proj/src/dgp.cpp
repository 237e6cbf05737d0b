#include "jpegiv/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/uniform.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "jpegiv/error.hpp"
#include "json.hpp"

namespace jpegiv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace bm = boost::math;

namespace {

std::uint64_t splitmix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kQuantileTol = 1e-10;

// Shrinks [lo, hi] around the root of cdf(x) = p until it is narrower than tol.
template <class Cdf>
double bisect(const Cdf& cdf, double p, double lo, double hi) {
  if (!(lo < hi)) return lo;
  while (hi - lo > kQuantileTol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::DomainError, "probability must lie in (0, 1)");
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix(splitmix(splitmix(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

void DisturbanceSpec::check() const {
  if (!(sigma_a > 0.0 && sigma_b > 0.0 && sigma_v > 0.0))
    throw Error(ErrorCode::DomainError, "standard deviations must be positive");
  if (!(clayton_theta > 0.0)) throw Error(ErrorCode::DomainError, "Clayton theta must be positive");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::DomainError, "mixture weights must be non-negative");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw Error(ErrorCode::DomainError, "mixture weights must sum to 1");
  if (weights[2] > 0.0 && !(mu > 0.0 && varphi > 0.0))
    throw Error(ErrorCode::DomainError, "gamma component needs mu > 0 and varphi > 0");
}

Eigen::Matrix4d Dgp1Params::default_covariance() {
  Eigen::Matrix4d s;
  s << 1.0, 0.4, 0.8, -0.6,  //
      0.4, 1.264, 0.36, -0.48,  //
      0.8, 0.36, 2.0, -0.4,  //
      -0.6, -0.48, -0.4, 2.0;
  return s;
}

void Dgp1Params::check() const {
  if (!covariance.allFinite() || !covariance.isApprox(covariance.transpose(), 1e-12))
    throw Error(ErrorCode::SingularCovariance, "covariance must be finite and symmetric");
  Eigen::LLT<Eigen::Matrix4d> llt(covariance);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "covariance is not positive definite");
}

std::string_view to_string(CovariateMode mode) noexcept {
  return mode == CovariateMode::Gaussian ? "gaussian" : "random-mixture";
}

CovariateMode parse_covariate_mode(std::string_view text) {
  if (text == "gaussian") return CovariateMode::Gaussian;
  if (text == "random-mixture" || text == "random_mixture") return CovariateMode::RandomMixture;
  throw Error(ErrorCode::InvalidArgument, "unknown covariate mode '" + std::string(text) + "'");
}

MatrixXd sample_clayton(int dim, double theta, Index count, Rng& rng) {
  if (dim < 2) throw Error(ErrorCode::DomainError, "copula dimension must be at least 2");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw Error(ErrorCode::DomainError, "Clayton theta must be positive");
  if (count < 0) throw Error(ErrorCode::DomainError, "negative draw count");
  boost::random::gamma_distribution<double> frailty(1.0 / theta, 1.0);
  boost::random::exponential_distribution<double> expo(1.0);
  MatrixXd u(count, dim);
  for (Index i = 0; i < count; ++i) {
    const double v = frailty(rng);
    for (int k = 0; k < dim; ++k) {
      // log-space keeps tiny theta from overflowing the power
      const double x = -std::log1p(expo(rng) / v) / theta;
      u(i, k) = std::clamp(std::exp(x), std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
    }
  }
  return u;
}

double mixture_cdf(double x, const DisturbanceSpec& spec) {
  double f = 0.0;
  if (spec.weights[0] > 0.0) f += spec.weights[0] * bm::cdf(bm::normal(spec.mu, spec.sigma_a), x);
  if (spec.weights[1] > 0.0) f += spec.weights[1] * bm::cdf(bm::normal(-spec.mu, spec.sigma_b), x);
  if (spec.weights[2] > 0.0 && x > 0.0) f += spec.weights[2] * bm::gamma_p(spec.mu * spec.varphi, x * spec.varphi);
  return f;
}

double mixture_quantile(double p, const DisturbanceSpec& spec) {
  check_probability(p);
  spec.check();
  // The mixture quantile lies between the smallest and largest component quantiles.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto widen = [&](double q) {
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  };
  if (spec.weights[0] > 0.0) widen(bm::quantile(bm::normal(spec.mu, spec.sigma_a), p));
  if (spec.weights[1] > 0.0) widen(bm::quantile(bm::normal(-spec.mu, spec.sigma_b), p));
  if (spec.weights[2] > 0.0) widen(bm::gamma_p_inv(spec.mu * spec.varphi, p) / spec.varphi);
  return bisect([&](double x) { return mixture_cdf(x, spec); }, p, lo, hi);
}

MixtureMarginal::MixtureMarginal(std::vector<Component> components, double target_variance)
    : components_(std::move(components)), target_variance_(target_variance) {
  if (components_.empty()) throw Error(ErrorCode::DomainError, "mixture needs a component");
  if (!(target_variance > 0.0)) throw Error(ErrorCode::DomainError, "target variance must be positive");
  double total = 0.0, mean = 0.0, second = 0.0;
  for (const Component& c : components_) {
    if (!(c.weight > 0.0)) throw Error(ErrorCode::DomainError, "component weights must be positive");
    double m = 0.0, s2 = 0.0;
    switch (c.kind) {
      case Kind::Normal:
        m = c.a;
        s2 = c.b * c.b;
        break;
      case Kind::Gamma:
        m = c.a * c.b;
        s2 = c.a * c.b * c.b;
        break;
      case Kind::Uniform:
        m = 0.5 * (c.a + c.b);
        s2 = (c.b - c.a) * (c.b - c.a) / 12.0;
        break;
    }
    total += c.weight;
    mean += c.weight * m;
    second += c.weight * (s2 + m * m);
  }
  for (Component& c : components_) c.weight /= total;
  mean /= total;
  second /= total;
  const double var = second - mean * mean;
  if (!(var > 0.0)) throw Error(ErrorCode::DomainError, "degenerate mixture");
  shift_ = mean;
  scale_ = std::sqrt(target_variance / var);
}

double MixtureMarginal::raw_cdf(double x) const {
  double f = 0.0;
  for (const Component& c : components_) {
    switch (c.kind) {
      case Kind::Normal: f += c.weight * bm::cdf(bm::normal(c.a, c.b), x); break;
      case Kind::Gamma: f += c.weight * (x > 0.0 ? bm::gamma_p(c.a, x / c.b) : 0.0); break;
      case Kind::Uniform: f += c.weight * std::clamp((x - c.a) / (c.b - c.a), 0.0, 1.0); break;
    }
  }
  return f;
}

double MixtureMarginal::raw_quantile_bound(double p, bool upper) const {
  double out = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (const Component& c : components_) {
    double q = 0.0;
    switch (c.kind) {
      case Kind::Normal: q = bm::quantile(bm::normal(c.a, c.b), p); break;
      case Kind::Gamma: q = bm::gamma_p_inv(c.a, p) * c.b; break;
      case Kind::Uniform: q = c.a + p * (c.b - c.a); break;
    }
    out = upper ? std::max(out, q) : std::min(out, q);
  }
  return out;
}

double MixtureMarginal::cdf(double x) const { return raw_cdf(shift_ + x / scale_); }

double MixtureMarginal::quantile(double p) const {
  check_probability(p);
  const double raw =
      bisect([&](double x) { return raw_cdf(x); }, p, raw_quantile_bound(p, false), raw_quantile_bound(p, true));
  return (raw - shift_) * scale_;
}

std::vector<MixtureMarginal> random_mixture_marginals(std::uint64_t menu_seed, const std::vector<double>& variances) {
  Rng rng(stream_seed(menu_seed, 0x6d656e75ULL));
  boost::random::uniform_int_distribution<int> n_components(2, 4);
  boost::random::uniform_int_distribution<int> kind(0, 2);
  boost::random::uniform_real_distribution<double> weight(0.2, 1.0);
  boost::random::uniform_real_distribution<double> location(-3.0, 3.0);
  boost::random::uniform_real_distribution<double> spread(0.5, 2.0);
  boost::random::uniform_real_distribution<double> shape(1.0, 5.0);
  std::vector<MixtureMarginal> out;
  out.reserve(variances.size());
  for (double target : variances) {
    std::vector<MixtureMarginal::Component> comps;
    const int k = n_components(rng);
    for (int i = 0; i < k; ++i) {
      MixtureMarginal::Component c{};
      c.weight = weight(rng);
      switch (kind(rng)) {
        case 0:
          c.kind = MixtureMarginal::Kind::Normal;
          c.a = location(rng);
          c.b = spread(rng);
          break;
        case 1:
          c.kind = MixtureMarginal::Kind::Gamma;
          c.a = shape(rng);
          c.b = spread(rng);
          break;
        default:
          c.kind = MixtureMarginal::Kind::Uniform;
          c.a = location(rng);
          c.b = c.a + 2.0 * spread(rng);
          break;
      }
      comps.push_back(c);
    }
    out.emplace_back(std::move(comps), target);
  }
  return out;
}

TruncatedSample GeneratedSample::full_sample() const {
  const Index n = full.rows();
  TruncatedSample s;
  s.y1 = full.y1;
  s.x1 = full.x1;
  s.x_rest.resize(n, 2);
  s.x_rest.col(0).setOnes();
  s.x_rest.col(1) = full.x2;
  s.w.resize(n, 2);
  s.w.col(0) = full.w1;
  s.w.col(1) = full.w2;
  s.z = full.z;
  return s;
}

GeneratedSample generate(Index n, const Dgp1Params& params, const DisturbanceSpec& spec, CovariateMode covariate_mode,
                         std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::DomainError, "sample size must be positive");
  params.check();
  spec.check();
  Rng rng(seed);

  GeneratedSample g;
  g.seed = seed;
  FullData& d = g.full;

  const MatrixXd u = sample_clayton(3, spec.clayton_theta, n, rng);
  d.v.resize(n);
  d.eps1.resize(n);
  d.eps2.resize(n);
  const bm::normal v_dist(0.0, spec.sigma_v);
  for (Index i = 0; i < n; ++i) {
    d.v(i) = bm::quantile(v_dist, u(i, 0));
    d.eps1(i) = mixture_quantile(u(i, 1), spec);
    d.eps2(i) = mixture_quantile(u(i, 2), spec);
  }

  boost::random::normal_distribution<double> normal;
  MatrixXd std_normal(n, 4);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < 4; ++k) std_normal(i, k) = normal(rng);
  MatrixXd cov(n, 4);
  if (covariate_mode == CovariateMode::Gaussian) {
    const Eigen::Matrix4d l = Eigen::LLT<Eigen::Matrix4d>(params.covariance).matrixL();
    cov = std_normal * l.transpose();
  } else {
    const Eigen::Vector4d sd = params.covariance.diagonal().cwiseSqrt();
    const Eigen::Matrix4d corr = sd.cwiseInverse().asDiagonal() * params.covariance * sd.cwiseInverse().asDiagonal();
    const Eigen::Matrix4d l = Eigen::LLT<Eigen::Matrix4d>(corr).matrixL();
    const MatrixXd correlated = std_normal * l.transpose();
    const std::vector<double> variances{params.covariance(0, 0), params.covariance(1, 1), params.covariance(2, 2),
                                        params.covariance(3, 3)};
    const std::vector<MixtureMarginal> marginals = random_mixture_marginals(stream_seed(seed, 0x636f76ULL), variances);
    const bm::normal std_n;
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < 4; ++k) {
        const double p = std::clamp(bm::cdf(std_n, correlated(i, k)), 1e-15, 1.0 - 1e-15);
        cov(i, k) = marginals[static_cast<std::size_t>(k)].quantile(p);
      }
    }
  }
  d.z = cov.col(0);
  d.x2 = cov.col(1);
  d.w1 = cov.col(2);
  d.w2 = cov.col(3);

  d.x1 = params.delta1 * d.z + params.delta2 * d.x2 + d.v;
  d.y1 = (params.alpha1 + params.beta1 * d.x1.array() + params.beta2 * d.x2.array() + d.eps1.array()).matrix();
  d.y2 = (params.alpha2 + params.gamma1 * d.w1.array() + params.gamma2 * d.w2.array() + d.eps2.array()).matrix();

  for (Index i = 0; i < n; ++i)
    if (d.y2(i) >= 0.0) g.kept.push_back(i);
  const auto m = static_cast<Index>(g.kept.size());
  g.participation_rate = static_cast<double>(m) / static_cast<double>(n);
  TruncatedSample& t = g.truncated;
  t.y1.resize(m);
  t.x1.resize(m);
  t.x_rest.resize(m, 2);
  t.w.resize(m, 2);
  t.z.resize(m, 1);
  for (Index r = 0; r < m; ++r) {
    const Index i = g.kept[static_cast<std::size_t>(r)];
    t.y1(r) = d.y1(i);
    t.x1(r) = d.x1(i);
    t.x_rest(r, 0) = 1.0;
    t.x_rest(r, 1) = d.x2(i);
    t.w(r, 0) = d.w1(i);
    t.w(r, 1) = d.w2(i);
    t.z(r, 0) = d.z(i);
  }
  return g;
}

namespace {

std::vector<double> parse_numbers(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',' || c == '[' || c == ']' || c == ';') c = ' ';
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw Error(ErrorCode::InvalidArgument, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

void assign(DgpConfig& cfg, const std::string& key, const std::vector<double>& vals) {
  auto scalar = [&](double& dst) {
    if (vals.size() != 1) throw Error(ErrorCode::InvalidArgument, "key '" + key + "' takes one number");
    dst = vals[0];
  };
  Dgp1Params& p = cfg.params;
  DisturbanceSpec& s = cfg.spec;
  if (key == "alpha1") return scalar(p.alpha1);
  if (key == "alpha2") return scalar(p.alpha2);
  if (key == "beta1") return scalar(p.beta1);
  if (key == "beta2") return scalar(p.beta2);
  if (key == "delta1") return scalar(p.delta1);
  if (key == "delta2") return scalar(p.delta2);
  if (key == "gamma1") return scalar(p.gamma1);
  if (key == "gamma2") return scalar(p.gamma2);
  if (key == "mu") return scalar(s.mu);
  if (key == "sigma_a") return scalar(s.sigma_a);
  if (key == "sigma_b") return scalar(s.sigma_b);
  if (key == "varphi") return scalar(s.varphi);
  if (key == "sigma_v") return scalar(s.sigma_v);
  if (key == "clayton_theta") return scalar(s.clayton_theta);
  if (key == "covariance") {
    if (vals.size() != 16) throw Error(ErrorCode::InvalidArgument, "covariance takes 16 numbers");
    for (int i = 0; i < 16; ++i) p.covariance(i / 4, i % 4) = vals[static_cast<std::size_t>(i)];
    return;
  }
  if (key == "weights") {
    if (vals.size() != 3) throw Error(ErrorCode::InvalidArgument, "weights takes 3 numbers");
    std::copy(vals.begin(), vals.end(), s.weights.begin());
    return;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

DgpConfig parse_dgp_config(const std::string& text) {
  DgpConfig cfg;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("bad JSON config: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      std::vector<double> vals;
      if (value.is_number()) {
        vals.push_back(value.get<double>());
      } else if (value.is_array()) {
        for (const auto& row : value) {
          if (row.is_array()) {
            for (const auto& x : row) vals.push_back(x.get<double>());
          } else {
            vals.push_back(row.get<double>());
          }
        }
      } else {
        throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' must be numeric");
      }
      assign(cfg, key, vals);
    }
  } else {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected key=value: '" + line + "'");
      assign(cfg, trim(line.substr(0, eq)), parse_numbers(line.substr(eq + 1)));
    }
  }
  cfg.params.check();
  cfg.spec.check();
  return cfg;
}

DgpConfig load_dgp_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dgp_config(buf.str());
}

}  // namespace jpegiv
