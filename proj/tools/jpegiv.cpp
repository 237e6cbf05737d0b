// Command line front end: transform, denoise, estimate, simulate-one, simulate.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "jpegiv/csv.hpp"
#include "jpegiv/denoise.hpp"
#include "jpegiv/dgp.hpp"
#include "jpegiv/error.hpp"
#include "jpegiv/estimator.hpp"
#include "jpegiv/grid_series.hpp"
#include "jpegiv/lifting.hpp"
#include "jpegiv/montecarlo.hpp"

using namespace jpegiv;
using nlohmann::json;

namespace {

int parse_level(const std::string& text, std::size_t n) {
  const LevelSchedule schedule(n);
  if (text == "max") return schedule.max_level();
  int level = 0;
  try {
    std::size_t used = 0;
    level = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "level must be an integer or 'max', got '" + text + "'");
  }
  schedule.check_level(level);
  return level;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw Error(ErrorCode::InvalidArgument, "bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << j.dump(2) << '\n';
}

void emit_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& columns) {
  if (path.empty() || path == "-")
    write_csv(std::cout, header, columns);
  else
    write_csv_file(path, header, columns);
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// At most `count` evenly spaced points of a curve.
json curve_samples(const GridSeries& curve, std::size_t count) {
  json out = {{"index", json::array()}, {"value", json::array()}};
  const std::size_t n = curve.size();
  if (n == 0) return out;
  const std::size_t k = std::min(count, n);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t at = k == 1 ? 0 : i * (n - 1) / (k - 1);
    out["index"].push_back(curve.locations[at]);
    out["value"].push_back(curve.values[at]);
  }
  return out;
}

json stage_json(const StageDiagnostics& d) {
  return {{"iterations", d.iterations},
          {"converged", d.converged},
          {"residual_norm", d.residual_norm},
          {"lambda", d.lambda},
          {"gamma", d.gamma}};
}

// Columns sharing a prefix followed by digits, ordered by the number.
std::vector<std::string> numbered(const CsvTable& t, const std::string& prefix, int first) {
  std::vector<std::string> out;
  for (int i = first;; ++i) {
    const std::string name = prefix + std::to_string(i);
    if (std::find(t.header.begin(), t.header.end(), name) == t.header.end()) break;
    out.push_back(name);
  }
  return out;
}

TruncatedSample sample_from_csv(const CsvTable& t) {
  if (t.header.empty()) throw Error(ErrorCode::InvalidArgument, "estimate input needs a header row");
  const Eigen::Index n = static_cast<Eigen::Index>(t.rows());
  auto vec = [&](const std::string& name) {
    const auto& c = t.column(name);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(c.data(), n));
  };
  TruncatedSample s;
  s.y1 = vec("y1");
  s.x1 = vec("x1");
  const auto xs = numbered(t, "x", 2);
  s.x_rest.resize(n, static_cast<Eigen::Index>(xs.size()) + 1);
  s.x_rest.col(0).setOnes();
  for (std::size_t i = 0; i < xs.size(); ++i) s.x_rest.col(static_cast<Eigen::Index>(i) + 1) = vec(xs[i]);
  const auto ws = numbered(t, "w", 1);
  if (ws.empty()) throw Error(ErrorCode::InvalidArgument, "no selection covariates w1, w2, ...");
  s.w.resize(n, static_cast<Eigen::Index>(ws.size()));
  for (std::size_t i = 0; i < ws.size(); ++i) s.w.col(static_cast<Eigen::Index>(i)) = vec(ws[i]);
  std::vector<std::string> zs;
  if (std::find(t.header.begin(), t.header.end(), "z") != t.header.end()) zs.push_back("z");
  for (const auto& name : numbered(t, "z", 1)) zs.push_back(name);
  if (zs.empty()) throw Error(ErrorCode::InvalidArgument, "no instrument column z");
  s.z.resize(n, static_cast<Eigen::Index>(zs.size()));
  for (std::size_t i = 0; i < zs.size(); ++i) s.z.col(static_cast<Eigen::Index>(i)) = vec(zs[i]);
  s.check();
  return s;
}

PartiallyLinearOptions::Thresholds parse_smoothing(const std::string& text) {
  if (text == "coarse") return PartiallyLinearOptions::Thresholds::CoarseOnly;
  if (text == "cv") return PartiallyLinearOptions::Thresholds::CrossValidated;
  if (text == "none") return PartiallyLinearOptions::Thresholds::ForcedZero;
  throw Error(ErrorCode::InvalidArgument, "smoothing must be coarse, cv or none");
}

DgpConfig config_or_default(const std::string& path) { return path.empty() ? DgpConfig{} : load_dgp_config(path); }

// ---------------------------------------------------------------- transform

struct TransformArgs {
  std::string input, output, level = "max", direction = "forward";
};

int run_transform(const TransformArgs& a) {
  const CsvTable t = read_csv_file(a.input);
  if (t.columns.size() < 2) throw Error(ErrorCode::InvalidArgument, "transform input needs two columns");
  const std::vector<double>& grid = t.columns[0];
  const std::vector<double>& values = t.columns[1];
  const int level = parse_level(a.level, grid.size());
  if (a.direction == "forward") {
    const WaveletCoefficients c = forward_transform(validate(GridSeries{grid, values}), level);
    emit_csv(a.output, {"grid", "coefficient"}, {c.permuted_grid, c.coefficients});
  } else if (a.direction == "inverse") {
    const TransformPlan plan = TransformPlan::from_permuted(grid, level);
    emit_csv(a.output, {"t", "u"}, {plan.grid(), plan.inverse(values)});
  } else if (a.direction == "trans-inverse") {
    validate(GridSeries{grid, values});
    const TransformPlan plan(grid, level);
    emit_csv(a.output, {"grid", "coefficient"}, {plan.permuted_grid(), plan.transposed_inverse(values)});
  } else {
    throw Error(ErrorCode::InvalidArgument, "direction must be forward, inverse or trans-inverse");
  }
  return 0;
}

// ---------------------------------------------------------------- denoise

struct DenoiseArgs {
  std::string input, output, trace, level = "max", lambda = "cv", gamma = "menu";
  double tolerance = 1e-9;
  int max_iter = 1000;
};

int run_denoise(const DenoiseArgs& a) {
  const GridSeries series = read_grid_csv(a.input, true);
  const int level = parse_level(a.level, series.size());
  const std::vector<double> gammas = a.gamma == "menu" ? default_gamma_menu() : parse_list(a.gamma);
  FitOptions fit;
  fit.tolerance = a.tolerance;
  fit.max_iter = a.max_iter;

  PenaltyConfig cfg;
  bool cross_validated = false;
  if (a.lambda == "cv" || gammas.size() > 1) {
    const std::vector<double> lambdas = a.lambda == "cv" ? default_lambda_grid(series, level) : parse_list(a.lambda);
    CvOptions cv;
    cv.fit = fit;
    cfg = select_thresholds(series, level, lambdas, gammas, cv);
    cross_validated = true;
  } else {
    const std::vector<double> l = parse_list(a.lambda);
    if (l.size() != 1 || gammas.size() != 1)
      throw Error(ErrorCode::InvalidArgument, "a fixed fit needs one lambda and one gamma");
    cfg = PenaltyConfig::uniform(level, l[0], gammas[0]);
  }

  const TransformPlan plan(series.locations, level);
  DenoiseResult r;
  penalized_fit_values(plan, series.values, cfg, fit, &r);
  emit_csv(a.output, {"t", "u", "fitted"}, {series.locations, series.values, r.fitted.values});
  if (!a.trace.empty()) {
    json j = {{"level", level},
              {"cross_validated", cross_validated},
              {"lambda", cfg.lambda},
              {"gamma", cfg.gamma},
              {"alpha", cfg.alpha},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"objective", r.objective_trace}};
    write_json(a.trace, j);
  }
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string input, output, method = "jpeg-iv", gamma = "estimate", smoothing = "coarse";
  int curve_points = 200;
};

int run_estimate(const EstimateArgs& a) {
  const TruncatedSample s = sample_from_csv(read_csv_file(a.input));
  const Method method = parse_method(a.method);
  EstimationResult r;
  if (method == Method::Ols) {
    r = estimate_ols(s);
  } else if (method == Method::Iv) {
    r = estimate_iv(s);
  } else {
    GammaMode mode = GammaMode::estimate();
    if (a.gamma.rfind("oracle:", 0) == 0) {
      const std::vector<double> g = parse_list(a.gamma.substr(7));
      mode = GammaMode::from_oracle(Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size())));
    } else if (a.gamma != "estimate") {
      throw Error(ErrorCode::InvalidArgument, "gamma must be oracle:<v1,...> or estimate");
    }
    PartiallyLinearOptions opts;
    opts.thresholds = parse_smoothing(a.smoothing);
    r = jpeg_iv(s, mode, opts);
  }
  json j = {{"method", std::string(to_string(r.method))},
            {"rows", s.rows()},
            {"beta", to_json(r.beta)},
            {"beta_names", json::array()},
            {"second_stage", stage_json(r.second_stage)}};
  j["beta_names"].push_back("x1");
  j["beta_names"].push_back("intercept");
  for (Eigen::Index i = 1; i < s.x_rest.cols(); ++i) j["beta_names"].push_back("x" + std::to_string(i + 1));
  if (r.delta_first_stage.size() > 0) {
    j["delta_first_stage"] = to_json(r.delta_first_stage);
    j["first_stage"] = stage_json(r.first_stage);
  }
  if (method == Method::JpegIv) {
    j["index_coefficients"] = to_json(r.index.gamma);
    j["index_mode"] = r.index.normalization == IndexCoefficients::Normalization::Oracle ? "oracle" : "estimated";
    j["gamma_evaluations"] = r.gamma_evaluations;
    j["smoothing"] = a.smoothing;
    const std::size_t k = static_cast<std::size_t>(std::max(a.curve_points, 1));
    j["bias_term_fit_1"] = curve_samples(r.bias_term_fit_1, k);
    j["bias_term_fit_2"] = curve_samples(r.bias_term_fit_2, k);
  }
  write_json(a.output, j);
  return 0;
}

// ---------------------------------------------------------------- simulate-one

struct SimulateOneArgs {
  std::string config, output, covariate_mode = "gaussian";
  long long n = 500;
  std::uint64_t seed = 1;
  bool truncated_only = false;
};

int run_simulate_one(const SimulateOneArgs& a) {
  const DgpConfig cfg = config_or_default(a.config);
  const GeneratedSample g = generate(a.n, cfg.params, cfg.spec, parse_covariate_mode(a.covariate_mode), a.seed);
  auto col = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  if (a.truncated_only) {
    const TruncatedSample& t = g.truncated;
    emit_csv(a.output, {"y1", "x1", "x2", "w1", "w2", "z"},
             {col(t.y1), col(t.x1), col(t.x_rest.col(1)), col(t.w.col(0)), col(t.w.col(1)), col(t.z.col(0))});
  } else {
    const FullData& d = g.full;
    std::vector<double> kept(static_cast<std::size_t>(d.rows()), 0.0);
    for (Eigen::Index i : g.kept) kept[static_cast<std::size_t>(i)] = 1.0;
    emit_csv(a.output, {"y1", "x1", "x2", "w1", "w2", "z", "y2", "kept"},
             {col(d.y1), col(d.x1), col(d.x2), col(d.w1), col(d.w2), col(d.z), col(d.y2), kept});
  }
  std::cerr << "rows " << g.full.rows() << ", kept " << g.kept.size() << " (" << g.participation_rate << ")\n";
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config, out_dir = "simulation", sizes = "500,2000,3000,5000,8000,10000", methods = "all";
  std::string covariate_mode = "gaussian", gamma = "oracle", smoothing = "coarse";
  int replications = 200;
  std::uint64_t seed = 20240607;
  int jobs = 1;
};

int run_simulate(const SimulateArgs& a) {
  const DgpConfig cfg = config_or_default(a.config);
  ExperimentPlan plan;
  plan.params = cfg.params;
  plan.spec = cfg.spec;
  plan.replications = a.replications;
  plan.base_seed = a.seed;
  plan.jobs = a.jobs;
  plan.methods = parse_sim_methods(a.methods);
  plan.covariate_mode = parse_covariate_mode(a.covariate_mode);
  if (a.gamma != "oracle" && a.gamma != "estimate") throw Error(ErrorCode::InvalidArgument, "gamma must be oracle or estimate");
  plan.estimate_gamma = a.gamma == "estimate";
  plan.jpeg.thresholds = parse_smoothing(a.smoothing);
  plan.sample_sizes.clear();
  for (double v : parse_list(a.sizes)) {
    if (v != std::floor(v)) throw Error(ErrorCode::InvalidArgument, "sample sizes must be integers");
    plan.sample_sizes.push_back(static_cast<Eigen::Index>(v));
  }

  const SimulationResult r = run(plan);
  write_outputs(r, a.out_dir);
  for (const auto& row : r.rows) {
    if (row.parameter != Parameter::Beta1) continue;
    std::cerr << "n=" << row.n << ' ' << to_string(row.method) << " beta1 mean " << row.stats.mean << " std "
              << row.stats.std << " failures " << row.failures << '\n';
  }
  for (const auto& f : r.hard_failures) std::cerr << "hard failure: " << f << '\n';
  std::cerr << "wrote " << a.out_dir << " in " << r.seconds << " s\n";
  return r.hard_failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet lifting, thresholded denoising and partially linear IV estimation"};
  app.require_subcommand(1);

  TransformArgs ta;
  auto* transform = app.add_subcommand("transform", "Forward, inverse or transposed-inverse lifting transform");
  transform->add_option("--input", ta.input, "CSV with grid and value columns")->required();
  transform->add_option("--level", ta.level, "Decomposition depth or 'max'");
  transform->add_option("--direction", ta.direction, "forward | inverse | trans-inverse")
      ->check(CLI::IsMember({"forward", "inverse", "trans-inverse"}));
  transform->add_option("--output", ta.output, "Output CSV (stdout when omitted)");

  DenoiseArgs da;
  auto* denoise = app.add_subcommand("denoise", "MCP-thresholded wavelet fit");
  denoise->add_option("--input", da.input, "CSV with t,u columns")->required();
  denoise->add_option("--level", da.level, "Decomposition depth or 'max'");
  denoise->add_option("--lambda", da.lambda, "Threshold value, comma list, or 'cv'");
  denoise->add_option("--gamma", da.gamma, "MCP shape value, comma list, or 'menu'");
  denoise->add_option("--tolerance", da.tolerance, "Relative coefficient change that stops the descent");
  denoise->add_option("--max-iter", da.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  denoise->add_option("--output", da.output, "Output CSV t,u,fitted (stdout when omitted)");
  denoise->add_option("--trace", da.trace, "JSON file for the objective trace and chosen thresholds");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "OLS, IV or partially linear IV on one sample");
  estimate->add_option("--input", ea.input, "CSV with y1,x1,x2,...,w1,...,z columns")->required();
  estimate->add_option("--method", ea.method, "ols | iv | jpeg-iv")->check(CLI::IsMember({"ols", "iv", "jpeg-iv"}));
  estimate->add_option("--gamma", ea.gamma, "oracle:<v1,v2,...> or estimate");
  estimate->add_option("--smoothing", ea.smoothing, "coarse | cv | none")
      ->check(CLI::IsMember({"coarse", "cv", "none"}));
  estimate->add_option("--curve-points", ea.curve_points, "Bias-term samples written per curve");
  estimate->add_option("--output", ea.output, "Output JSON (stdout when omitted)");

  SimulateOneArgs oa;
  auto* one = app.add_subcommand("simulate-one", "Draw one data set");
  one->add_option("--n", oa.n, "Sample size before truncation")->check(CLI::PositiveNumber);
  one->add_option("--seed", oa.seed, "Seed");
  one->add_flag("--truncated-only", oa.truncated_only, "Keep only rows with y2 >= 0");
  one->add_option("--covariate-mode", oa.covariate_mode, "gaussian | random-mixture");
  one->add_option("--config", oa.config, "key=value or JSON parameter file");
  one->add_option("--output", oa.output, "Output CSV (stdout when omitted)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Replicated experiment with summary tables");
  sim->add_option("--config", sa.config, "key=value or JSON parameter file");
  sim->add_option("--replications", sa.replications, "Data sets per sample size")->check(CLI::Range(2, 1 << 30));
  sim->add_option("--sizes", sa.sizes, "Comma separated sample sizes");
  sim->add_option("--methods", sa.methods, "Comma list of full-ols,full-iv,trunc-ols,trunc-iv,jpeg-iv or all");
  sim->add_option("--seed", sa.seed, "Base seed");
  sim->add_option("--jobs", sa.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--covariate-mode", sa.covariate_mode, "gaussian | random-mixture");
  sim->add_option("--gamma", sa.gamma, "oracle | estimate");
  sim->add_option("--smoothing", sa.smoothing, "coarse | cv | none")->check(CLI::IsMember({"coarse", "cv", "none"}));
  sim->add_option("--out-dir", sa.out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*transform) return run_transform(ta);
    if (*denoise) return run_denoise(da);
    if (*estimate) return run_estimate(ea);
    if (*one) return run_simulate_one(oa);
    if (*sim) return run_simulate(sa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
