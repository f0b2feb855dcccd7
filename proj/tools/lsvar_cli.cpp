// Command-line front end: simulate scenarios, run detectors on CSV input,
// benchmark detectors over replicates, and evaluate reports against a model.
// Every failure exits with the numeric ErrorCode and, when an output directory
// is known, leaves error.json behind.

#include "lsvar/lsvar.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace lsvar;

namespace {

struct Options {
  std::string input;
  std::string output_dir = "out";
  std::string method = "two-step";
  std::string scenario;
  std::string report;
  std::string model;
  Index window_size = 0;
  Index shift = 0;
  std::optional<double> omega;
  double q = 0.4;
  std::optional<double> lambda_w;
  double alpha_c = 1.0;
  bool unconstrained = false;
  bool refine = false;
  std::uint64_t seed = 1;
  Index detrend_period = 0;
  Index stride_step = 1;
  int replicates = 20;
  std::optional<Index> length;
  std::optional<Index> dimension;
  int max_iterations = 500;
  double tolerance = 1e-6;
  double band = 0.1;
};

void add_output(CLI::App* cmd, Options& o) {
  cmd->add_option("--output-dir", o.output_dir, "Directory for output files")->capture_default_str();
}

void add_input(CLI::App* cmd, Options& o) {
  cmd->add_option("--input", o.input, "CSV file, rows are time points")->required();
  cmd->add_option("--detrend-period", o.detrend_period, "Subtract the forward moving average over this many rows")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--stride", o.stride_step, "Keep every k-th row")->check(CLI::PositiveNumber);
}

void add_solver(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha-c", o.alpha_c, "Constant of the spikiness radius")->capture_default_str();
  cmd->add_flag("--unconstrained", o.unconstrained, "Drop the spikiness constraint on the low-rank part");
  cmd->add_option("--max-iterations", o.max_iterations, "Solver iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--tolerance", o.tolerance, "Relative objective tolerance")->check(CLI::PositiveNumber);
}

void add_multi(CLI::App* cmd, Options& o) {
  cmd->add_option("--window-size", o.window_size, "Rolling window length h in rows (0 picks it)");
  cmd->add_option("--shift", o.shift, "Window shift l (0 uses h/4)");
  cmd->add_option("--omega", o.omega, "Screening penalty per change point (DP: per segment)");
  cmd->add_option("--q", o.q, "Exponent of the weakly sparse ball")->capture_default_str();
  cmd->add_option("--lambda-w", o.lambda_w, "Fixed lasso penalty of the surrogate");
  cmd->add_flag("--refine", o.refine, "Refine locations after screening");
}

DetectionSettings settings_from(const Options& o) {
  DetectionSettings s;
  require(o.window_size >= 0 && o.shift >= 0, ErrorCode::invalid_argument, "window size and shift must be >= 0");
  require(!o.omega || *o.omega >= 0.0, ErrorCode::invalid_argument, "omega must be nonnegative");
  s.two_step.h = o.window_size;
  s.two_step.l = o.shift;
  s.two_step.omega = o.omega;
  s.two_step.refine = o.refine;
  s.dp_gamma = o.omega;
  s.weakly_sparse.q = o.q;
  s.weakly_sparse.lambda_w = o.lambda_w;
  s.weakly_sparse.validate();
  s.options.max_iterations = o.max_iterations;
  s.options.rel_tolerance = o.tolerance;
  if (o.unconstrained) s.alpha_c.reset();
  else s.alpha_c = o.alpha_c;
  return s;
}

TimeSeriesData load_input(const Options& o) {
  auto data = ingest_csv(o.input);
  if (o.detrend_period > 0) data = detrend_period_average(data, o.detrend_period);
  if (o.stride_step > 1) data = stride(data, o.stride_step);
  return data;
}

fs::path prepare_output(const Options& o) {
  fs::path dir(o.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::io_error, "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_report(const fs::path& dir, const DetectionReport& r, Index T) {
  atomic_write(dir / "report.json", dump(report_to_json(r, T)));
  for (std::size_t i = 0; i < r.curves.size(); ++i)
    if (!r.curves[i].empty())
      atomic_write(dir / ("curve_window_" + std::to_string(i) + ".tsv"), curve_to_tsv(r.curves[i]));
}

void run_detect(const Options& o, Method method) {
  auto settings = settings_from(o);
  auto dir = prepare_output(o);
  auto data = load_input(o);
  auto report = run_detection(data, method, settings);
  write_report(dir, report, data.T());
  std::cout << to_string(method) << ": m_hat = " << report.detection.m_hat << ", change points";
  for (Index c : report.detection.change_points) std::cout << ' ' << c;
  std::cout << '\n';
}

void run_simulate(const Options& o) {
  require(!o.scenario.empty(), ErrorCode::invalid_argument, "--scenario is required");
  BenchmarkSettings b;
  b.scenario = o.scenario;
  b.length = o.length;
  b.dimension = o.dimension;
  auto spec = benchmark_spec(b);
  auto dir = prepare_output(o);
  auto sc = generate_scenario(spec, o.seed);
  atomic_write(dir / "data.csv", to_csv(sc.data));
  Json model = model_to_json(sc.model);
  model["scenario"] = spec.name;
  model["seed"] = o.seed;
  model["T"] = spec.T;
  model["stability_scale"] = sc.stability_scale;
  atomic_write(dir / "model.json", dump(model));
  std::cout << "simulated " << spec.name << ": T = " << spec.T << ", p = " << spec.p << '\n';
}

void run_benchmark_command(const Options& o) {
  require(!o.scenario.empty(), ErrorCode::invalid_argument, "--scenario is required");
  BenchmarkSettings b;
  b.scenario = o.scenario;
  b.replicates = o.replicates;
  b.seed = o.seed;
  b.method = parse_method(o.method);
  b.detection = settings_from(o);
  b.length = o.length;
  b.dimension = o.dimension;
  b.band = o.band;
  auto dir = prepare_output(o);
  auto result = run_benchmark(b);
  atomic_write(dir / "benchmark.csv", benchmark_csv(result, b.band));
  atomic_write(dir / "summary.csv", benchmark_summary_csv(result));
  atomic_write(dir / "summary.json", dump(benchmark_summary_json(result)));
  std::cout << result.spec.name << " (" << to_string(result.method) << "): m_hat accuracy " << result.m_hat_accuracy
            << ", selection rates";
  for (double r : result.selection_rates) std::cout << ' ' << r;
  std::cout << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void run_evaluate(const Options& o) {
  require(!o.report.empty() && !o.model.empty(), ErrorCode::invalid_argument, "--report and --model are required");
  auto report = read_json(o.report);
  auto model_doc = read_json(o.model);
  auto model = model_from_json(model_doc);
  std::vector<Index> est;
  Index T = 0;
  try {
    est = report.at("change_points").get<std::vector<Index>>();
    T = report.at("T").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed report: ") + e.what());
  }
  require(T >= 2, ErrorCode::parse_error, "report T must be at least 2");
  const auto& truth = model.change_points;
  auto rates = selection_rate({est}, truth, T, o.band);
  Json out;
  out["T"] = T;
  out["m0"] = truth.size();
  out["m_hat"] = est.size();
  out["hausdorff"] = detail::number(hausdorff_directed(est, truth));
  out["selected"] = rates;
  if (!truth.empty()) out["snr"] = snr(model, T);
  auto dir = prepare_output(o);
  atomic_write(dir / "evaluation.json", dump(out));
  std::cout << "m_hat = " << est.size() << " (m0 = " << truth.size() << "), hausdorff = " << out["hausdorff"] << '\n';
}

int fail(const Options& o, ErrorCode code, const std::string& message) {
  Json err{{"error", to_string(code)}, {"code", static_cast<int>(code)}, {"message", message}};
  std::cerr << err.dump() << '\n';
  try {
    fs::path dir(o.output_dir);
    if (fs::is_directory(dir)) atomic_write(dir / "error.json", dump(err));
  } catch (...) {
  }
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Change-point detection for piecewise low-rank plus sparse VAR(1) series"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Simulate a catalog scenario to data.csv and model.json");
  simulate->add_option("--scenario", o.scenario, "Scenario name, e.g. A.1 or L.1")->required();
  simulate->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  simulate->add_option("--length", o.length, "Override the series length T");
  simulate->add_option("--dimension", o.dimension, "Override the dimension p");
  add_output(simulate, o);

  auto* single = app.add_subcommand("detect-single", "Exhaustive search for one change point");
  add_input(single, o);
  add_output(single, o);
  add_solver(single, o);

  auto* multi = app.add_subcommand("detect-multi", "Multiple change points");
  add_input(multi, o);
  add_output(multi, o);
  add_solver(multi, o);
  add_multi(multi, o);
  multi->add_option("--method", o.method, "two-step, dp, surrogate or combined")
      ->check(CLI::IsMember({"two-step", "dp", "surrogate", "combined"}))
      ->capture_default_str();

  std::vector<std::pair<CLI::App*, Method>> fixed;
  for (auto [name, method, help] :
       {std::tuple{"detect-dp", Method::dp, "Penalized dynamic programming"},
        std::tuple{"detect-surrogate", Method::surrogate, "Weakly sparse surrogate two-step detection"},
        std::tuple{"detect-combined", Method::combined, "Surrogate pass, then the full model inside its segments"}}) {
    auto* cmd = app.add_subcommand(name, help);
    add_input(cmd, o);
    add_output(cmd, o);
    add_solver(cmd, o);
    add_multi(cmd, o);
    fixed.push_back({cmd, method});
  }

  auto* bench = app.add_subcommand("benchmark", "Replicate a scenario and summarize detection accuracy");
  bench->add_option("--scenario", o.scenario, "Scenario name")->required();
  bench->add_option("--replicates", o.replicates, "Number of replicates")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--seed", o.seed, "Seed of the first replicate")->capture_default_str();
  bench->add_option("--method", o.method, "single, two-step, dp, surrogate or combined")
      ->check(CLI::IsMember({"single", "two-step", "dp", "surrogate", "combined"}))
      ->capture_default_str();
  bench->add_option("--length", o.length, "Override the series length T");
  bench->add_option("--dimension", o.dimension, "Override the dimension p");
  bench->add_option("--band", o.band, "Success band as a fraction of the neighbouring spacing")->capture_default_str();
  add_output(bench, o);
  add_solver(bench, o);
  add_multi(bench, o);

  auto* evaluate = app.add_subcommand("evaluate", "Score a report.json against a model.json");
  evaluate->add_option("--report", o.report, "Detection report")->required();
  evaluate->add_option("--model", o.model, "Model document from simulate")->required();
  evaluate->add_option("--band", o.band, "Success band as a fraction of the neighbouring spacing")->capture_default_str();
  add_output(evaluate, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(o, ErrorCode::invalid_argument, e.what());
  }

  try {
    if (simulate->parsed()) run_simulate(o);
    else if (single->parsed()) run_detect(o, Method::single);
    else if (multi->parsed()) run_detect(o, parse_method(o.method));
    else if (bench->parsed()) run_benchmark_command(o);
    else if (evaluate->parsed()) run_evaluate(o);
    else
      for (auto [cmd, method] : fixed)
        if (cmd->parsed()) run_detect(o, method);
  } catch (const Error& e) {
    return fail(o, e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(o, ErrorCode::fit_failure, e.what());
  }
  return 0;
}
