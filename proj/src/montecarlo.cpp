#include "jpegiv/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "jpegiv/error.hpp"

namespace jpegiv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return std::string(s.substr(a, b - a + 1));
}

// Full-sample counterpart used as the reference for relative accuracy.
std::optional<SimMethod> reference_of(SimMethod m) {
  switch (m) {
    case SimMethod::TruncOls: return SimMethod::FullOls;
    case SimMethod::TruncIv:
    case SimMethod::JpegIv: return SimMethod::FullIv;
    default: return std::nullopt;
  }
}

void fill_estimates(ReplicationRecord& rec, const EstimationResult& r) {
  rec.estimate[static_cast<int>(Parameter::Beta1)] = r.beta(0);
  rec.estimate[static_cast<int>(Parameter::Beta2)] = r.beta(2);
  if (r.delta_first_stage.size() >= 3) {
    rec.estimate[static_cast<int>(Parameter::Delta1)] = r.delta_first_stage(0);
    rec.estimate[static_cast<int>(Parameter::Delta2)] = r.delta_first_stage(2);
  }
}

EstimationResult estimate_with(SimMethod m, const GeneratedSample& g, const ExperimentPlan& plan) {
  switch (m) {
    case SimMethod::FullOls: return estimate_ols(g.full_sample());
    case SimMethod::FullIv: return estimate_iv(g.full_sample());
    case SimMethod::TruncOls: return estimate_ols(g.truncated);
    case SimMethod::TruncIv: return estimate_iv(g.truncated);
    case SimMethod::JpegIv: {
      GammaMode mode = GammaMode::estimate();
      if (!plan.estimate_gamma) mode = GammaMode::from_oracle(Eigen::Vector2d(plan.params.gamma1, plan.params.gamma2));
      mode.seed = stream_seed(g.seed, 0x6a);
      return jpeg_iv(g.truncated, mode, plan.jpeg);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

std::vector<double> column_of(const SimulationResult& r, Eigen::Index n, SimMethod m, Parameter p) {
  std::vector<double> out;
  for (const auto& rec : r.records)
    if (rec.n == n && rec.method == m) out.push_back(rec.ok ? rec.value(p) : kNaN);
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  return out;
}

}  // namespace

std::string_view to_string(SimMethod m) noexcept {
  switch (m) {
    case SimMethod::FullOls: return "full-ols";
    case SimMethod::FullIv: return "full-iv";
    case SimMethod::TruncOls: return "trunc-ols";
    case SimMethod::TruncIv: return "trunc-iv";
    case SimMethod::JpegIv: return "jpeg-iv";
  }
  return "?";
}

SimMethod parse_sim_method(std::string_view text) {
  for (SimMethod m : all_sim_methods())
    if (text == to_string(m)) return m;
  throw Error(ErrorCode::InvalidArgument, "unknown simulation method '" + std::string(text) + "'");
}

std::vector<SimMethod> parse_sim_methods(std::string_view text) {
  if (trim(text) == "all") return all_sim_methods();
  std::vector<SimMethod> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!item.empty()) {
      const SimMethod m = parse_sim_method(item);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty method list");
  return out;
}

std::vector<SimMethod> all_sim_methods() {
  return {SimMethod::FullOls, SimMethod::FullIv, SimMethod::TruncOls, SimMethod::TruncIv, SimMethod::JpegIv};
}

bool uses_full_sample(SimMethod m) noexcept { return m == SimMethod::FullOls || m == SimMethod::FullIv; }

bool has_first_stage(SimMethod m) noexcept {
  return m == SimMethod::FullIv || m == SimMethod::TruncIv || m == SimMethod::JpegIv;
}

std::string_view to_string(Parameter p) noexcept {
  switch (p) {
    case Parameter::Beta1: return "beta1";
    case Parameter::Beta2: return "beta2";
    case Parameter::Delta1: return "delta1";
    case Parameter::Delta2: return "delta2";
  }
  return "?";
}

bool is_first_stage(Parameter p) noexcept { return p == Parameter::Delta1 || p == Parameter::Delta2; }

double true_value(Parameter p, const Dgp1Params& params) noexcept {
  switch (p) {
    case Parameter::Beta1: return params.beta1;
    case Parameter::Beta2: return params.beta2;
    case Parameter::Delta1: return params.delta1;
    case Parameter::Delta2: return params.delta2;
  }
  return kNaN;
}

void ExperimentPlan::check() const {
  if (replications < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 replications");
  if (sample_sizes.empty()) throw Error(ErrorCode::InvalidArgument, "no sample sizes");
  for (Eigen::Index n : sample_sizes)
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample sizes must be positive");
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods");
  if (jobs < 1) throw Error(ErrorCode::InvalidArgument, "jobs must be at least 1");
  params.check();
  spec.check();
}

Moments moments(const std::vector<double>& values) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values)
    if (!std::isnan(x)) v.push_back(x);
  Moments m;
  m.count = v.size();
  if (v.empty()) return {kNaN, kNaN, kNaN, 0};
  double sum = 0.0;
  for (double x : v) sum += x;
  m.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  m.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  return m;
}

double rmse(const std::vector<double>& estimates, double truth) {
  if (truth == 0.0) throw Error(ErrorCode::ZeroTruth, "rmse is standardized by the true value");
  double ss = 0.0;
  std::size_t k = 0;
  for (double e : estimates) {
    if (!std::isfinite(e)) continue;
    const double r = (e - truth) / truth;
    ss += r * r;
    ++k;
  }
  if (k == 0) throw Error(ErrorCode::TooShort, "no finite estimates");
  return std::sqrt(ss / static_cast<double>(k));
}

RelativeAccuracy relative_accuracy(const std::vector<double>& truncated, const std::vector<double>& full) {
  if (truncated.size() != full.size()) throw Error(ErrorCode::LengthMismatch, "estimates are not paired");
  RelativeAccuracy out;
  double ss = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double s = full[i], t = truncated[i];
    if (!std::isfinite(s) || !std::isfinite(t) || std::fabs(s) < 1e-12) {
      ++out.dropped;
      continue;
    }
    const double r = (t - s) / s;
    ss += r * r;
    ++k;
  }
  out.value = k ? std::sqrt(ss / static_cast<double>(k)) : kNaN;
  return out;
}

double convergence_delta(double sigma1, double sigma2, double n1, double n2) {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !(n1 > 0.0) || !(n2 > 0.0))
    throw Error(ErrorCode::DomainError, "convergence delta needs positive inputs");
  if (n1 == n2) throw Error(ErrorCode::DomainError, "convergence delta needs distinct sizes");
  return std::log(sigma1 / sigma2) / std::log(n2 / n1);
}

const SummaryRow* SimulationResult::find(Eigen::Index n, SimMethod m, Parameter p) const noexcept {
  for (const auto& r : rows)
    if (r.n == n && r.method == m && r.parameter == p) return &r;
  return nullptr;
}

SimulationResult run(const ExperimentPlan& plan) {
  plan.check();
  const auto start = std::chrono::steady_clock::now();
  SimulationResult result;
  result.plan = plan;

  std::vector<Eigen::Index> sizes = plan.sample_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const std::size_t reps = static_cast<std::size_t>(plan.replications);
  const std::size_t nm = plan.methods.size();
  const std::size_t tasks = sizes.size() * reps;
  result.records.resize(tasks * nm);
  std::vector<std::string> dgp_errors(tasks);

  auto work = [&](std::size_t t) {
    const Eigen::Index n = sizes[t / reps];
    const int rep = static_cast<int>(t % reps);
    const std::uint64_t seed = stream_seed(plan.base_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep));
    ReplicationRecord* recs = &result.records[t * nm];
    for (std::size_t j = 0; j < nm; ++j) {
      recs[j].n = n;
      recs[j].replication = rep;
      recs[j].seed = seed;
      recs[j].method = plan.methods[j];
      std::fill(std::begin(recs[j].estimate), std::end(recs[j].estimate), kNaN);
    }
    GeneratedSample g;
    try {
      g = generate(n, plan.params, plan.spec, plan.covariate_mode, seed);
    } catch (const std::exception& e) {
      dgp_errors[t] = e.what();
      for (std::size_t j = 0; j < nm; ++j) recs[j].error = std::string("data generation: ") + e.what();
      return;
    }
    for (std::size_t j = 0; j < nm; ++j) {
      recs[j].participation_rate = g.participation_rate;
      try {
        fill_estimates(recs[j], estimate_with(plan.methods[j], g, plan));
        recs[j].ok = true;
      } catch (const std::exception& e) {
        recs[j].error = e.what();
        std::fill(std::begin(recs[j].estimate), std::end(recs[j].estimate), kNaN);
      }
    }
  };

  // Each task writes only its own slots, so completion order cannot leak
  // into the result.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) work(t);
  };
  const int jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(plan.jobs), std::max<std::size_t>(tasks, 1)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }

  for (std::size_t t = 0; t < tasks; ++t)
    if (!dgp_errors[t].empty())
      result.hard_failures.push_back("n=" + std::to_string(sizes[t / reps]) + " replication " +
                                     std::to_string(t % reps) + ": " + dgp_errors[t]);

  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const Eigen::Index n = sizes[si];
    for (SimMethod m : plan.methods) {
      std::size_t failures = 0;
      for (const auto& rec : result.records)
        if (rec.n == n && rec.method == m && !rec.ok) ++failures;
      if (failures == reps)
        result.hard_failures.push_back("n=" + std::to_string(n) + " " + std::string(to_string(m)) +
                                       ": no successful replication");
      for (Parameter p : kParameters) {
        if (is_first_stage(p) && !has_first_stage(m)) continue;
        SummaryRow row;
        row.n = n;
        row.method = m;
        row.parameter = p;
        row.truth = true_value(p, plan.params);
        row.failures = failures;
        const std::vector<double> values = column_of(result, n, m, p);
        row.stats = moments(values);
        row.rmse = kNaN;
        if (row.stats.count > 0 && row.truth != 0.0) row.rmse = rmse(values, row.truth);
        row.relative_accuracy = kNaN;
        if (auto ref = reference_of(m);
            ref && std::find(plan.methods.begin(), plan.methods.end(), *ref) != plan.methods.end()) {
          const RelativeAccuracy ra = relative_accuracy(values, column_of(result, n, *ref, p));
          row.relative_accuracy = ra.value;
          row.relative_dropped = ra.dropped;
        }
        row.delta = kNaN;
        if (si > 0) {
          const SummaryRow* prev = result.find(sizes[si - 1], m, p);
          if (prev && prev->stats.std > 0.0 && row.stats.std > 0.0)
            row.delta = convergence_delta(prev->stats.std, row.stats.std, static_cast<double>(prev->n),
                                          static_cast<double>(n));
        }
        result.rows.push_back(row);
      }
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_outputs(const SimulationResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "raw", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + (root / "raw").string() + ": " + ec.message());

  auto stats_table = [&](const fs::path& p, auto keep) {
    std::ofstream out = open_out(p);
    out << "n,method,parameter,truth,mean,median,std,count,failures\n";
    for (const auto& r : result.rows) {
      if (!keep(r)) continue;
      out << r.n << ',' << to_string(r.method) << ',' << to_string(r.parameter) << ',' << fmt(r.truth) << ','
          << fmt(r.stats.mean) << ',' << fmt(r.stats.median) << ',' << fmt(r.stats.std) << ',' << r.stats.count << ','
          << r.failures << '\n';
    }
  };
  stats_table(root / "table_b.csv",
              [](const SummaryRow& r) { return uses_full_sample(r.method) && !is_first_stage(r.parameter); });
  stats_table(root / "table_c.csv",
              [](const SummaryRow& r) { return !uses_full_sample(r.method) && !is_first_stage(r.parameter); });
  stats_table(root / "table_e.csv", [](const SummaryRow& r) { return is_first_stage(r.parameter); });
  {
    std::ofstream out = open_out(root / "table_d.csv");
    out << "n,method,parameter,rmse,relative_accuracy,relative_to,relative_dropped,delta\n";
    for (const auto& r : result.rows) {
      if (uses_full_sample(r.method) || is_first_stage(r.parameter)) continue;
      const auto ref = reference_of(r.method);
      out << r.n << ',' << to_string(r.method) << ',' << to_string(r.parameter) << ',' << fmt(r.rmse) << ','
          << fmt(r.relative_accuracy) << ',' << (ref ? to_string(*ref) : "") << ',' << r.relative_dropped << ','
          << fmt(r.delta) << '\n';
    }
  }

  std::map<std::pair<Eigen::Index, SimMethod>, std::ofstream> raw;
  for (const auto& rec : result.records) {
    auto key = std::make_pair(rec.n, rec.method);
    auto it = raw.find(key);
    if (it == raw.end()) {
      const fs::path p = root / "raw" / (std::to_string(rec.n) + "_" + std::string(to_string(rec.method)) + ".csv");
      it = raw.emplace(key, open_out(p)).first;
      it->second << "replication,seed,ok,beta1,beta2,delta1,delta2,participation_rate,error\n";
    }
    std::string err = rec.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    it->second << rec.replication << ',' << rec.seed << ',' << (rec.ok ? 1 : 0);
    for (double v : rec.estimate) it->second << ',' << fmt(v);
    it->second << ',' << fmt(rec.participation_rate) << ',' << err << '\n';
  }

  nlohmann::json j;
  const ExperimentPlan& plan = result.plan;
  j["plan"] = {
      {"sample_sizes", plan.sample_sizes},
      {"replications", plan.replications},
      {"base_seed", plan.base_seed},
      {"covariate_mode", std::string(to_string(plan.covariate_mode))},
      {"gamma", plan.estimate_gamma ? "estimate" : "oracle"},
      {"jobs", plan.jobs},
  };
  for (SimMethod m : plan.methods) j["plan"]["methods"].push_back(std::string(to_string(m)));
  j["rows"] = nlohmann::json::array();
  for (const auto& r : result.rows) {
    j["rows"].push_back({
        {"n", r.n},
        {"method", std::string(to_string(r.method))},
        {"parameter", std::string(to_string(r.parameter))},
        {"truth", r.truth},
        {"mean", number_or_null(r.stats.mean)},
        {"median", number_or_null(r.stats.median)},
        {"std", number_or_null(r.stats.std)},
        {"count", r.stats.count},
        {"failures", r.failures},
        {"rmse", number_or_null(r.rmse)},
        {"relative_accuracy", number_or_null(r.relative_accuracy)},
        {"delta", number_or_null(r.delta)},
    });
  }
  std::size_t soft = 0;
  for (const auto& rec : result.records) soft += rec.ok ? 0 : 1;
  j["estimator_failures"] = soft;
  j["hard_failures"] = result.hard_failures;
  j["seconds"] = result.seconds;
  std::ofstream out = open_out(root / "summary.json");
  out << j.dump(2) << '\n';
}

}  // namespace jpegiv
