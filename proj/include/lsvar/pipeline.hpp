#pragma once

/// Method dispatch shared by the command-line tool and the benchmark harness:
/// one entry point per detection method, report documents, and Monte Carlo
/// replication over catalog scenarios.

#include "lsvar/evaluation.hpp"
#include "lsvar/io.hpp"
#include "lsvar/surrogate.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lsvar {

enum class Method { single, two_step, dp, surrogate, combined };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::single: return "single";
    case Method::two_step: return "two-step";
    case Method::dp: return "dp";
    case Method::surrogate: return "surrogate";
    case Method::combined: return "combined";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  for (Method m : {Method::single, Method::two_step, Method::dp, Method::surrogate, Method::combined})
    if (to_string(m) == name) return m;
  throw Error(ErrorCode::invalid_argument, "unknown method '" + name + "'");
}

struct DetectionSettings {
  TwoStepConfig two_step;
  PenaltyConfig penalty;
  WeaklySparseConfig weakly_sparse;
  SolverOptions options;
  // Constant of default_alpha_L, applied when penalty.alpha_L is infinite;
  // unset leaves L unconstrained.
  std::optional<double> alpha_c = 1.0;
  std::optional<double> dp_gamma;  // unset: select_omega on two-step candidates
  double trim = 0.1;               // single search: fraction cut from each end
};

struct DetectionReport {
  Method method = Method::two_step;
  MultiDetection detection;
  std::optional<WindowPlan> plan;
  std::vector<std::vector<CurvePoint>> curves;  // per window, or the one search curve
  std::optional<SingleDetection> single;
  std::optional<SurrogateApplicability> applicability;
  std::vector<Index> candidates;
};

inline PenaltyConfig resolve_penalty(const DetectionSettings& s, const TimeSeriesData& data) {
  PenaltyConfig pen = s.penalty;
  if (std::isinf(pen.alpha_L) && s.alpha_c) {
    require(*s.alpha_c > 0.0, ErrorCode::invalid_argument, "alpha constant must be positive");
    pen.alpha_L = default_alpha_L(data.p(), data.T(), *s.alpha_c);
  }
  return pen;
}

namespace detail {

inline void take_two_step(DetectionReport& r, TwoStepRun run) {
  r.plan = run.plan;
  r.candidates = run.candidates.positions();
  for (auto& w : run.candidates.window_runs) r.curves.push_back(std::move(w.objective_curve));
  r.detection = std::move(run.detection);
}

}  // namespace detail

inline DetectionReport run_detection(const TimeSeriesData& data, Method method, const DetectionSettings& settings) {
  DetectionReport r;
  r.method = method;
  PenaltyConfig pen = resolve_penalty(settings, data);
  FullModel full{pen, settings.options};
  switch (method) {
    case Method::single: {
      auto d = exhaustive_search_with(data, trimmed_search_domain(data.T(), settings.trim), full);
      r.detection = detail::finish_detection(data, full, {d.tau_hat}, "single");
      r.curves.push_back(d.objective_curve);
      r.single = std::move(d);
      break;
    }
    case Method::two_step: {
      auto run = two_step_detect_with(data, settings.two_step, full);
      detail::take_two_step(r, std::move(run));
      break;
    }
    case Method::dp: {
      double gamma = 0.0;
      if (settings.dp_gamma) {
        gamma = *settings.dp_gamma;
      } else {
        auto run = two_step_detect_with(data, settings.two_step, full);
        gamma = run.detection.trace.omega_T;
        r.plan = run.plan;
        r.candidates = run.candidates.positions();
      }
      r.detection = dp_detect_with(data, gamma, full);
      break;
    }
    case Method::surrogate: {
      auto run = surrogate_detect_multi(data, settings.two_step, settings.weakly_sparse, settings.options);
      r.applicability = surrogate_applicability(run.detection.segment_fits, settings.weakly_sparse, data.p());
      detail::take_two_step(r, std::move(run));
      break;
    }
    case Method::combined: {
      CombinedConfig cfg{settings.two_step, settings.two_step, pen, settings.weakly_sparse};
      cfg.full_pass.h = 0;
      cfg.full_pass.l = 0;
      auto run = combined_strategy(data, cfg, settings.options);
      r.applicability =
          surrogate_applicability(run.surrogate.detection.segment_fits, settings.weakly_sparse, data.p());
      detail::take_two_step(r, std::move(run.surrogate));
      r.detection = std::move(run.detection);
      break;
    }
  }
  return r;
}

/// Report document. Contains no timing so identical inputs give identical bytes.
inline Json report_to_json(const DetectionReport& r, Index T) {
  Json j = detection_to_json(r.detection);
  j["T"] = T;
  Json rel = Json::array();
  for (Index c : r.detection.change_points) rel.push_back(static_cast<double>(c) / static_cast<double>(T));
  j["relative_locations"] = rel;
  if (r.plan) j["window_plan"] = window_plan_to_json(*r.plan);
  if (!r.candidates.empty() || r.plan) j["candidates"] = r.candidates;
  if (r.single) {
    j["single"] = single_detection_to_json(*r.single, T);
    j["single"]["flat"] = curve_relative_range(r.single->objective_curve) < kFlatCurveThreshold;
  }
  if (r.applicability) j["applicability"] = applicability_to_json(*r.applicability);
  return j;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchmarkSettings {
  std::string scenario;
  int replicates = 20;
  std::uint64_t seed = 1;  // replicate r uses seed + r
  Method method = Method::two_step;
  DetectionSettings detection;
  std::optional<Index> length;     // overrides the scenario's T
  std::optional<Index> dimension;  // overrides the scenario's p
  double band = 0.1;
};

struct ReplicateOutcome {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::vector<Index> change_points;
  double hausdorff = 0.0;
  double seconds = 0.0;
};

struct BenchmarkResult {
  ScenarioSpec spec;
  Method method = Method::two_step;
  std::vector<Index> truth;
  std::vector<ReplicateOutcome> replicates;
  std::vector<double> selection_rates;
  std::vector<SampleSummary> locations;  // tau_hat / T of the nearest detection, per truth point
  double m_hat_accuracy = 0.0;           // fraction of replicates with m_hat = m0
  double seconds = 0.0;
};

inline std::optional<Index> nearest_point(const std::vector<Index>& points, Index target) {
  std::optional<Index> best;
  for (Index x : points)
    if (!best || std::abs(x - target) < std::abs(*best - target)) best = x;
  return best;
}

inline ScenarioSpec benchmark_spec(const BenchmarkSettings& s) {
  ScenarioSpec spec = scenario_spec(s.scenario);
  if (s.length) spec.T = *s.length;
  if (s.dimension) spec.p = *s.dimension;
  require(spec.T >= 10 && spec.p >= 1, ErrorCode::invalid_argument, "scenario override too small");
  return spec;
}

inline BenchmarkResult run_benchmark(const BenchmarkSettings& s) {
  require(s.replicates >= 1, ErrorCode::invalid_argument, "need at least one replicate");
  BenchmarkResult out;
  out.spec = benchmark_spec(s);
  out.method = s.method;
  out.truth = out.spec.change_points();
  std::vector<std::vector<Index>> detections;
  std::size_t exact_count = 0;
  for (int r = 0; r < s.replicates; ++r) {
    ReplicateOutcome o;
    o.replicate = r;
    o.seed = s.seed + static_cast<std::uint64_t>(r);
    auto sc = generate_scenario(out.spec, o.seed);
    auto t0 = std::chrono::steady_clock::now();
    auto report = run_detection(sc.data, s.method, s.detection);
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.change_points = report.detection.change_points;
    o.hausdorff = hausdorff_directed(o.change_points, out.truth);
    if (o.change_points.size() == out.truth.size()) ++exact_count;
    out.seconds += o.seconds;
    detections.push_back(o.change_points);
    out.replicates.push_back(std::move(o));
  }
  out.selection_rates = selection_rate(detections, out.truth, out.spec.T, s.band);
  double T = static_cast<double>(out.spec.T);
  for (std::size_t j = 0; j < out.truth.size(); ++j) {
    std::vector<double> nearest;
    for (const auto& d : detections)
      if (auto x = nearest_point(d, out.truth[j])) nearest.push_back(static_cast<double>(*x) / T);
    out.locations.push_back(summarize(nearest));
  }
  out.m_hat_accuracy = static_cast<double>(exact_count) / static_cast<double>(s.replicates);
  return out;
}

/// Columns replicate, point_index, truth_rel, est_rel, success; est_rel is the
/// nearest detection and empty when a replicate detected nothing.
inline std::string benchmark_csv(const BenchmarkResult& b, double band = 0.1) {
  std::ostringstream out;
  out.precision(10);
  double T = static_cast<double>(b.spec.T);
  out << "replicate,point_index,truth_rel,est_rel,success\n";
  for (const auto& r : b.replicates)
    for (std::size_t j = 0; j < b.truth.size(); ++j) {
      auto x = nearest_point(r.change_points, b.truth[j]);
      bool hit = selection_rate({r.change_points}, b.truth, b.spec.T, band)[j] > 0.0;
      out << r.replicate << ',' << j + 1 << ',' << static_cast<double>(b.truth[j]) / T << ',';
      if (x) out << static_cast<double>(*x) / T;
      out << ',' << (hit ? 1 : 0) << '\n';
    }
  return out.str();
}

/// One row per truth point: location summary over replicates and selection rate.
inline std::string benchmark_summary_csv(const BenchmarkResult& b) {
  std::ostringstream out;
  out.precision(10);
  out << "point_index,truth_tau,truth_rel,mean_rel,sd_rel,selection_rate\n";
  for (std::size_t j = 0; j < b.truth.size(); ++j)
    out << j + 1 << ',' << b.truth[j] << ',' << static_cast<double>(b.truth[j]) / static_cast<double>(b.spec.T) << ','
        << b.locations[j].mean << ',' << b.locations[j].sd << ',' << b.selection_rates[j] << '\n';
  return out.str();
}

inline Json benchmark_summary_json(const BenchmarkResult& b) {
  std::vector<double> hd;
  for (const auto& r : b.replicates) hd.push_back(r.hausdorff);
  auto h = summarize(hd);
  Json loc = Json::array();
  for (const auto& l : b.locations) loc.push_back({{"mean", l.mean}, {"sd", l.sd}, {"n", l.n}});
  return {{"scenario", b.spec.name},
          {"method", to_string(b.method)},
          {"T", b.spec.T},
          {"p", b.spec.p},
          {"replicates", b.replicates.size()},
          {"truth", b.truth},
          {"m_hat_accuracy", b.m_hat_accuracy},
          {"selection_rates", b.selection_rates},
          {"locations", loc},
          {"hausdorff_mean", detail::number(h.mean)},
          {"seconds", b.seconds}};
}

}  // namespace lsvar
