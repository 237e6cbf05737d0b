#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "jpegiv/dgp.hpp"
#include "jpegiv/estimator.hpp"

namespace jpegiv {

enum class SimMethod { FullOls, FullIv, TruncOls, TruncIv, JpegIv };
std::string_view to_string(SimMethod m) noexcept;
SimMethod parse_sim_method(std::string_view text);
/// Comma separated list; "all" expands to every method.
std::vector<SimMethod> parse_sim_methods(std::string_view text);
std::vector<SimMethod> all_sim_methods();
bool uses_full_sample(SimMethod m) noexcept;
bool has_first_stage(SimMethod m) noexcept;

/// Reported slope coefficients. The intercepts are left out: under
/// truncation they are absorbed by the bias terms.
enum class Parameter { Beta1, Beta2, Delta1, Delta2 };
std::string_view to_string(Parameter p) noexcept;
bool is_first_stage(Parameter p) noexcept;
double true_value(Parameter p, const Dgp1Params& params) noexcept;
inline constexpr Parameter kParameters[] = {Parameter::Beta1, Parameter::Beta2, Parameter::Delta1, Parameter::Delta2};

struct ExperimentPlan {
  std::vector<Eigen::Index> sample_sizes{500, 2000, 3000, 5000, 8000, 10000};
  int replications = 200;
  std::vector<SimMethod> methods = all_sim_methods();
  std::uint64_t base_seed = 20240607;
  CovariateMode covariate_mode = CovariateMode::Gaussian;
  bool estimate_gamma = false;  // false: the true index coefficients
  Dgp1Params params;
  DisturbanceSpec spec;
  PartiallyLinearOptions jpeg;
  int jobs = 1;

  /// Throws InvalidArgument for fewer than 2 replications, empty or
  /// non-positive sizes, an empty method list or jobs < 1.
  void check() const;
};

/// One estimator run on one generated data set.
struct ReplicationRecord {
  Eigen::Index n = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  SimMethod method = SimMethod::FullOls;
  bool ok = false;
  std::string error;        // empty when ok
  double estimate[4] = {};  // indexed by Parameter; NaN when not produced
  double participation_rate = 0.0;

  double value(Parameter p) const noexcept { return estimate[static_cast<int>(p)]; }
};

struct Moments {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // n - 1 divisor
  std::size_t count = 0;
};
/// NaN entries are skipped. Empty input gives NaN moments with count 0.
Moments moments(const std::vector<double>& values);

struct SummaryRow {
  Eigen::Index n = 0;
  SimMethod method = SimMethod::FullOls;
  Parameter parameter = Parameter::Beta1;
  double truth = 0.0;
  Moments stats;
  std::size_t failures = 0;
  double rmse = 0.0;               // NaN when undefined
  double relative_accuracy = 0.0;  // against the full-sample counterpart; NaN when absent
  std::size_t relative_dropped = 0;
  double delta = 0.0;              // against the next smaller size; NaN for the smallest
};

struct SimulationResult {
  ExperimentPlan plan;
  std::vector<ReplicationRecord> records;  // ordered by size, replication, method
  std::vector<SummaryRow> rows;            // ordered by size, method, parameter
  std::vector<std::string> hard_failures;
  double seconds = 0.0;

  const SummaryRow* find(Eigen::Index n, SimMethod m, Parameter p) const noexcept;
};

/// Generates every (size, replication) data set and runs each method on it.
/// Estimator failures are recorded per record. A data-generation failure or a
/// cell without a single success is a hard failure. The result does not depend
/// on plan.jobs.
SimulationResult run(const ExperimentPlan& plan);

/// sqrt(mean(((e - truth) / truth)^2)) over finite estimates. Throws ZeroTruth,
/// or TooShort when nothing is finite.
double rmse(const std::vector<double>& estimates, double truth);

struct RelativeAccuracy {
  double value = 0.0;
  std::size_t dropped = 0;  // pairs with |reference| < 1e-12 or a non-finite entry
};
/// sqrt(mean(((t - s) / s)^2)) over replication-paired entries.
RelativeAccuracy relative_accuracy(const std::vector<double>& truncated, const std::vector<double>& full);

/// ln(sigma1 / sigma2) / ln(n2 / n1). Throws DomainError for non-positive
/// inputs or n1 == n2.
double convergence_delta(double sigma1, double sigma2, double n1, double n2);

/// Writes table_b.csv (full-sample fits), table_c.csv (truncated fits),
/// table_d.csv (accuracy measures), table_e.csv (first stages), summary.json
/// and raw/<n>_<method>.csv under out_dir.
void write_outputs(const SimulationResult& result, const std::string& out_dir);

}  // namespace jpegiv
