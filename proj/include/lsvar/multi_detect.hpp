#pragma once

/// Multiple change-point detection: rolling-window candidate search,
/// information-criterion screening by backward elimination, the optional
/// local refinement, and a penalized dynamic-programming baseline.

#include "lsvar/single_detect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lsvar {

// ---------------------------------------------------------------------------
// Windows and candidates

/// Windows are transition intervals of h - 1 transitions (h observations).
/// Consecutive windows start l apart; the last one is aligned to end at T.
struct WindowPlan {
  Index T = 0;
  Index h = 0;
  Index l = 0;
  std::vector<Interval> windows;
};

inline WindowPlan plan_windows(Index T, Index h, Index l) {
  require(h >= 2 && h <= T, ErrorCode::invalid_argument,
          "window length " + std::to_string(h) + " must lie in [2, T = " + std::to_string(T) + "]");
  require(l >= 1 && l <= std::max<Index>(h / 2, 1), ErrorCode::invalid_argument,
          "shift " + std::to_string(l) + " must lie in [1, max(h/2, 1)]");
  WindowPlan plan{T, h, l, {}};
  for (Index b = 1;; b += l) {
    Index e = b + h - 1;
    if (e >= T) {
      plan.windows.push_back({T - h + 1, T});
      break;
    }
    plan.windows.push_back({b, e});
  }
  return plan;
}

struct Candidate {
  Index tau = 0;
  std::size_t window = 0;
  // Window minimum relative to the window maximum: raw objectives of
  // different windows are not comparable, the depth of the dip is.
  double window_objective = 0.0;
};

struct WindowFailure {
  std::size_t window = 0;
  std::string reason;
};

struct CandidateSet {
  std::vector<Candidate> candidates;         // strictly increasing tau after merging
  std::vector<SingleDetection> window_runs;  // one per window, empty curve if the window failed
  std::vector<WindowFailure> failures;

  std::vector<Index> positions() const {
    std::vector<Index> out;
    for (const auto& c : candidates) out.push_back(c.tau);
    return out;
  }
};

/// Sorts by location and merges candidates closer than `radius`, keeping the
/// lower window objective (the earlier one on ties).
inline std::vector<Candidate> merge_candidates(std::vector<Candidate> raw, Index radius) {
  std::stable_sort(raw.begin(), raw.end(), [](const Candidate& a, const Candidate& b) { return a.tau < b.tau; });
  std::vector<Candidate> kept;
  for (const auto& c : raw) {
    if (!kept.empty() && c.tau - kept.back().tau < radius) {
      if (c.window_objective < kept.back().window_objective) kept.back() = c;
      continue;
    }
    kept.push_back(c);
  }
  return kept;
}

/// Split domain inside one window of h observations, in window coordinates.
inline SearchDomain window_search_domain(Index h) {
  Index margin = std::max<Index>(2, h / 20);
  return {std::max<Index>(3, margin), h - std::max<Index>(2, margin)};
}

template <class Model>
CandidateSet rolling_window_candidates_with(const TimeSeriesData& data, const WindowPlan& plan, const Model& model) {
  require(plan.T == data.T(), ErrorCode::invalid_argument, "window plan was built for a different series length");
  require(plan.h >= 6, ErrorCode::invalid_argument, "windows need at least 6 observations");
  std::size_t n = plan.windows.size();
  CandidateSet out;
  out.window_runs.resize(n);
  std::vector<std::optional<std::string>> errors(n);
  parallel_for(n, [&](std::size_t i) {
    const Interval& w = plan.windows[i];
    try {
      auto local = data.window(w);
      out.window_runs[i] = exhaustive_search_with(local, window_search_domain(local.T()), model);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  std::vector<Candidate> raw;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      out.failures.push_back({i, *errors[i]});
      continue;
    }
    Index offset = plan.windows[i].begin - 1;
    auto& run = out.window_runs[i];
    raw.push_back({offset + run.tau_hat, i, 1.0 - curve_relative_range(run.objective_curve)});
    run.tau_hat += offset;
    for (auto& pt : run.objective_curve) pt.tau += offset;
    for (auto& sk : run.skipped) sk.tau += offset;
  }
  out.candidates = merge_candidates(std::move(raw), plan.l);
  return out;
}

inline CandidateSet rolling_window_candidates(const TimeSeriesData& data, const WindowPlan& plan,
                                              const PenaltyConfig& penalty, const SolverOptions& opts) {
  return rolling_window_candidates_with(data, plan, FullModel{penalty, opts});
}

// ---------------------------------------------------------------------------
// Information criterion

/// Segments [1, s_1), [s_1, s_2), ..., [s_m, T) of a sorted breakpoint list.
inline std::vector<Interval> segments_of(const std::vector<Index>& breakpoints, Index T) {
  std::vector<Interval> out;
  Index begin = 1;
  for (Index s : breakpoints) {
    out.push_back({begin, s});
    begin = s;
  }
  out.push_back({begin, T});
  return out;
}

inline void validate_breakpoints(const std::vector<Index>& breakpoints, Index T) {
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    require(breakpoints[i] > 1 && breakpoints[i] < T, ErrorCode::invalid_argument,
            "breakpoint " + std::to_string(breakpoints[i]) + " outside (1, T)");
    require(i == 0 || breakpoints[i] > breakpoints[i - 1], ErrorCode::invalid_argument,
            "breakpoints must be strictly increasing");
  }
  for (const auto& seg : segments_of(breakpoints, T))
    require(seg.size() >= 2, ErrorCode::degenerate_interval,
            "segment [" + std::to_string(seg.begin) + ", " + std::to_string(seg.end) +
                ") has fewer than 2 transitions");
}

/// Memoized penalized segment costs. Each segment is fitted from a cold start
/// so a cost never depends on evaluation order.
template <class Model>
class SegmentCostCache {
 public:
  SegmentCostCache(const TimeSeriesData& data, Model model) : data_(data), table_(data), model_(std::move(model)) {}

  const TimeSeriesData& data() const { return data_; }
  const Model& model() const { return model_; }

  double cost(const Interval& seg) {
    {
      std::lock_guard lock(mutex_);
      auto it = costs_.find({seg.begin, seg.end});
      if (it != costs_.end()) return it->second;
    }
    require(seg.size() >= 2, ErrorCode::degenerate_interval,
            "segment [" + std::to_string(seg.begin) + ", " + std::to_string(seg.end) +
                ") has fewer than 2 transitions");
    double value = model_.segment_cost(table_.over(seg), data_.p(), nullptr).value;
    std::lock_guard lock(mutex_);
    costs_.emplace(std::pair{seg.begin, seg.end}, value);
    return value;
  }

  /// Sum of segment costs of a breakpoint set.
  double loss(const std::vector<Index>& breakpoints) {
    double total = 0.0;
    for (const auto& seg : segments_of(breakpoints, data_.T())) total += cost(seg);
    return total;
  }

 private:
  const TimeSeriesData& data_;
  MomentTable table_;
  Model model_;
  std::mutex mutex_;
  std::map<std::pair<Index, Index>, double> costs_;
};

template <class Model>
double information_criterion_with(SegmentCostCache<Model>& cache, const std::vector<Index>& breakpoints,
                                  double omega_T) {
  validate_breakpoints(breakpoints, cache.data().T());
  return cache.loss(breakpoints) + static_cast<double>(breakpoints.size()) * omega_T;
}

/// Penalized residual sum over the segments plus m * omega_T.
inline double information_criterion(const TimeSeriesData& data, const std::vector<Index>& breakpoints,
                                    const PenaltyConfig& penalty, double omega_T, const SolverOptions& opts) {
  SegmentCostCache<FullModel> cache(data, FullModel{penalty, opts});
  return information_criterion_with(cache, breakpoints, omega_T);
}

// ---------------------------------------------------------------------------
// Screening

struct ScreeningStep {
  std::vector<Index> retained;
  double loss = 0.0;  // sum of penalized segment costs
  double ic = 0.0;    // loss + m * omega_T
};

struct ScreeningTrace {
  std::vector<ScreeningStep> steps;
  double omega_T = 0.0;
};

struct MultiDetection {
  std::string method;
  std::vector<Index> change_points;
  Index m_hat = 0;
  std::vector<Interval> segments;
  std::vector<FitResult> segment_fits;
  ScreeningTrace trace;
};

namespace detail {

struct Removal {
  std::size_t index = 0;
  double loss = 0.0;
};

/// Cheapest single removal from `current` (smallest index on ties).
template <class Model>
Removal best_removal(SegmentCostCache<Model>& cache, const std::vector<Index>& current) {
  std::vector<double> losses(current.size());
  parallel_for(current.size(), [&](std::size_t j) {
    auto reduced = current;
    reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(j));
    losses[j] = cache.loss(reduced);
  });
  Removal best{0, losses.front()};
  for (std::size_t j = 1; j < losses.size(); ++j)
    if (losses[j] < best.loss) best = {j, losses[j]};
  return best;
}

template <class Model>
std::vector<FitResult> fit_segments(const TimeSeriesData& data, const Model& model,
                                    const std::vector<Interval>& segments) {
  std::vector<FitResult> fits(segments.size());
  parallel_for(segments.size(), [&](std::size_t i) {
    fits[i] = model.segment_fit(TransitionMoments::over(data, segments[i]), data.p());
    fits[i].rss = residual_sum(data, segments[i], fits[i].A_hat());
  });
  return fits;
}

template <class Model>
MultiDetection finish_detection(const TimeSeriesData& data, const Model& model, std::vector<Index> change_points,
                                std::string method) {
  MultiDetection out;
  out.method = std::move(method);
  out.change_points = std::move(change_points);
  out.m_hat = static_cast<Index>(out.change_points.size());
  out.segments = segments_of(out.change_points, data.T());
  out.segment_fits = fit_segments(data, model, out.segments);
  return out;
}

}  // namespace detail

/// Starting from the full candidate set, removes the candidate whose removal
/// gives the smallest IC as long as that IC does not exceed the current one.
template <class Model>
MultiDetection backward_elimination_with(SegmentCostCache<Model>& cache, const std::vector<Index>& candidates,
                                         double omega_T) {
  require(!candidates.empty(), ErrorCode::invalid_argument, "backward elimination needs at least one candidate");
  require(omega_T >= 0.0, ErrorCode::invalid_argument, "omega_T must be nonnegative");
  validate_breakpoints(candidates, cache.data().T());
  std::vector<Index> current = candidates;
  ScreeningTrace trace;
  trace.omega_T = omega_T;
  double loss = cache.loss(current);
  double ic = loss + static_cast<double>(current.size()) * omega_T;
  trace.steps.push_back({current, loss, ic});
  while (!current.empty()) {
    auto removal = detail::best_removal(cache, current);
    double ic_next = removal.loss + static_cast<double>(current.size() - 1) * omega_T;
    if (ic_next > ic) break;
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(removal.index));
    loss = removal.loss;
    ic = ic_next;
    trace.steps.push_back({current, loss, ic});
  }
  auto out = detail::finish_detection(cache.data(), cache.model(), current, "two-step");
  out.trace = std::move(trace);
  return out;
}

inline MultiDetection backward_elimination(const TimeSeriesData& data, const std::vector<Index>& candidates,
                                           double omega_T, const PenaltyConfig& penalty, const SolverOptions& opts) {
  SegmentCostCache<FullModel> cache(data, FullModel{penalty, opts});
  return backward_elimination_with(cache, candidates, omega_T);
}

/// Jumps |loss after the k-th removal - loss before| along the greedy
/// removal path that runs until no candidate is left.
template <class Model>
std::vector<double> elimination_jumps(SegmentCostCache<Model>& cache, const std::vector<Index>& candidates) {
  require(!candidates.empty(), ErrorCode::invalid_argument, "omega selection needs at least one candidate");
  validate_breakpoints(candidates, cache.data().T());
  std::vector<Index> current = candidates;
  double loss = cache.loss(current);
  std::vector<double> jumps;
  while (!current.empty()) {
    auto removal = detail::best_removal(cache, current);
    jumps.push_back(std::abs(removal.loss - loss));
    loss = removal.loss;
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(removal.index));
  }
  return jumps;
}

inline constexpr double kOmegaSeparation = 0.85;
inline constexpr double kOmegaShave = 1e-9;

struct TwoMeansSplit {
  double between_ratio = 0.0;        // between-cluster SS / total SS
  std::vector<double> low, high;     // sorted clusters
};

/// Exact one-dimensional 2-means: the best split of the sorted values.
inline TwoMeansSplit two_means_1d(std::vector<double> values) {
  require(!values.empty(), ErrorCode::invalid_argument, "2-means of an empty set");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double total = 0.0;
  for (double v : values) total += (v - mean) * (v - mean);
  TwoMeansSplit best;
  best.low = values;
  if (n < 2 || total <= 0.0) return best;
  double best_between = -1.0;
  std::size_t best_k = 1;
  double left_sum = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    left_sum += values[k - 1];
    double m1 = left_sum / static_cast<double>(k);
    double m2 = (mean * static_cast<double>(n) - left_sum) / static_cast<double>(n - k);
    double between = static_cast<double>(k) * (m1 - mean) * (m1 - mean) +
                     static_cast<double>(n - k) * (m2 - mean) * (m2 - mean);
    if (between > best_between) {
      best_between = between;
      best_k = k;
    }
  }
  best.between_ratio = best_between / total;
  best.low.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(best_k));
  best.high.assign(values.begin() + static_cast<std::ptrdiff_t>(best_k), values.end());
  return best;
}

/// Threshold from the jump sizes. Jumps are clustered by 2-means on the log
/// scale, where redundant and genuine removals differ by a factor rather than
/// an offset. When the split is well separated the threshold sits just below
/// the smallest large jump (so a removal costing exactly that much is
/// refused); otherwise it is the largest jump, which screens everything out.
inline double select_omega_from_jumps(const std::vector<double>& jumps) {
  require(!jumps.empty(), ErrorCode::invalid_argument, "omega selection needs at least one jump");
  double top = *std::max_element(jumps.begin(), jumps.end());
  if (!(top > 0.0)) return top;
  std::vector<double> logs;
  for (double v : jumps) logs.push_back(std::log(std::max(v, top * 1e-12)));
  auto split = two_means_1d(logs);
  if (!split.high.empty() && split.between_ratio >= kOmegaSeparation)
    return std::exp(split.high.front()) * (1.0 - kOmegaShave);
  return top;
}

template <class Model>
double select_omega_with(SegmentCostCache<Model>& cache, const std::vector<Index>& candidates) {
  return select_omega_from_jumps(elimination_jumps(cache, candidates));
}

inline double select_omega(const TimeSeriesData& data, const std::vector<Index>& candidates,
                           const PenaltyConfig& penalty, const SolverOptions& opts) {
  SegmentCostCache<FullModel> cache(data, FullModel{penalty, opts});
  return select_omega_with(cache, candidates);
}

// ---------------------------------------------------------------------------
// Two-step pipeline

struct TwoStepConfig {
  Index h = 0;                  // 0: chosen by select_window_size
  Index l = 0;                  // 0: h / 4
  std::optional<double> omega;  // unset: select_omega
  bool refine = false;
  double window_c = 0.7;
  std::vector<double> delta_schedule{1.0, 0.9, 0.8, 0.7};
};

struct TwoStepRun {
  WindowPlan plan;
  CandidateSet candidates;
  MultiDetection detection;
};

inline Index default_shift(Index h) { return std::max<Index>(1, h / 4); }

template <class Model>
TwoStepRun two_step_with_plan(const TimeSeriesData& data, const WindowPlan& plan, const Model& model,
                              std::optional<double> omega, std::string method) {
  TwoStepRun run;
  run.plan = plan;
  run.candidates = rolling_window_candidates_with(data, plan, model);
  auto positions = run.candidates.positions();
  // Segments shorter than 2 transitions cannot be scored.
  std::vector<Index> usable;
  for (Index s : positions)
    if (s >= 3 && s <= data.T() - 2 && (usable.empty() || s - usable.back() >= 2)) usable.push_back(s);
  if (usable.empty()) {
    run.detection = detail::finish_detection(data, model, {}, method);
    run.detection.trace.omega_T = omega.value_or(0.0);
    return run;
  }
  SegmentCostCache<Model> cache(data, model);
  double w = omega ? *omega : select_omega_with(cache, usable);
  run.detection = backward_elimination_with(cache, usable, w);
  run.detection.method = std::move(method);
  return run;
}

struct WindowSizeChoice {
  Index h = 0;
  bool stabilized = false;
  std::vector<Index> sizes;
  std::vector<Index> counts;
};

/// First entry whose count the next entry repeats; the last entry otherwise.
inline WindowSizeChoice choose_stable_window(const std::vector<Index>& sizes, const std::vector<Index>& counts) {
  require(!sizes.empty() && sizes.size() == counts.size(), ErrorCode::invalid_argument,
          "window sizes and counts must be nonempty and of equal length");
  WindowSizeChoice out{sizes.back(), false, sizes, counts};
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    if (counts[i + 1] == counts[i]) return {sizes[i], true, sizes, counts};
  return out;
}

/// Runs the pipeline for h = c T^delta, l = h / 4 along the schedule and
/// stops at the first repeated change-point count.
template <class Model>
WindowSizeChoice select_window_size_with(const TimeSeriesData& data, double c, const std::vector<double>& schedule,
                                         const Model& model) {
  require(c > 0.0, ErrorCode::invalid_argument, "window constant must be positive");
  require(!schedule.empty(), ErrorCode::invalid_argument, "delta schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i)
    require(schedule[i] > 0.0 && schedule[i] <= 1.0 && (i == 0 || schedule[i] < schedule[i - 1]),
            ErrorCode::invalid_argument, "delta schedule must decrease within (0, 1]");
  std::vector<Index> sizes, counts;
  Index T = data.T();
  for (double delta : schedule) {
    auto h = static_cast<Index>(std::floor(c * std::pow(static_cast<double>(T), delta)));
    h = std::clamp<Index>(h, 6, T);
    if (!sizes.empty() && h == sizes.back()) continue;
    auto run = two_step_with_plan(data, plan_windows(T, h, default_shift(h)), model, std::nullopt, "two-step");
    sizes.push_back(h);
    counts.push_back(run.detection.m_hat);
    if (counts.size() >= 2 && counts[counts.size() - 1] == counts[counts.size() - 2]) break;
  }
  return choose_stable_window(sizes, counts);
}

inline WindowSizeChoice select_window_size(const TimeSeriesData& data, double c, const std::vector<double>& schedule,
                                           const PenaltyConfig& penalty, const SolverOptions& opts) {
  return select_window_size_with(data, c, schedule, FullModel{penalty, opts});
}

// ---------------------------------------------------------------------------
// Refinement

/// Re-locates each change point inside
/// (2 tau_{j-1}/3 + tau_j/3, 2 tau_j/3 + tau_{j+1}/3) by minimizing the
/// unpenalized two-piece least-squares residual; each side must keep p + 1
/// transitions, otherwise the point is kept. Segment fits are recomputed.
template <class Model>
MultiDetection refine_change_points_with(const TimeSeriesData& data, const MultiDetection& detection,
                                         const Model& model) {
  require(detection.m_hat >= 1, ErrorCode::invalid_argument, "refinement needs at least one change point");
  Index T = data.T(), p = data.p();
  MomentTable table(data);
  const auto& tau = detection.change_points;
  std::vector<Index> refined(tau.size());
  parallel_for(tau.size(), [&](std::size_t j) {
    double prev = j == 0 ? 0.0 : static_cast<double>(tau[j - 1]);
    double next = j + 1 == tau.size() ? static_cast<double>(T) : static_cast<double>(tau[j + 1]);
    double lo = 2.0 * prev / 3.0 + static_cast<double>(tau[j]) / 3.0;
    double hi = 2.0 * static_cast<double>(tau[j]) / 3.0 + next / 3.0;
    Index begin = std::max<Index>(1, static_cast<Index>(std::floor(lo)) + 1);
    Index end = std::min<Index>(T, static_cast<Index>(std::ceil(hi)));
    refined[j] = tau[j];
    double best = std::numeric_limits<double>::infinity();
    for (Index s = begin + p + 1; s <= end - (p + 1); ++s) {
      auto left = table.over({begin, s});
      auto right = table.over({s, end});
      double value = left.rss(ols_transition(left)) + right.rss(ols_transition(right));
      if (value < best) {
        best = value;
        refined[j] = s;
      }
    }
  });
  std::vector<Index> sorted = refined;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto out = detail::finish_detection(data, model, sorted, detection.method);
  out.trace = detection.trace;
  return out;
}

inline MultiDetection refine_change_points(const TimeSeriesData& data, const MultiDetection& detection,
                                           const PenaltyConfig& penalty, const SolverOptions& opts) {
  return refine_change_points_with(data, detection, FullModel{penalty, opts});
}

template <class Model>
TwoStepRun two_step_detect_with(const TimeSeriesData& data, const TwoStepConfig& config, const Model& model,
                                std::string method = "two-step") {
  Index h = config.h;
  if (h == 0) h = select_window_size_with(data, config.window_c, config.delta_schedule, model).h;
  Index l = config.l ? config.l : default_shift(h);
  auto run = two_step_with_plan(data, plan_windows(data.T(), h, l), model, config.omega, method);
  if (config.refine && run.detection.m_hat >= 1)
    run.detection = refine_change_points_with(data, run.detection, model);
  return run;
}

inline TwoStepRun two_step_detect(const TimeSeriesData& data, const TwoStepConfig& config,
                                  const PenaltyConfig& penalty, const SolverOptions& opts) {
  return two_step_detect_with(data, config, FullModel{penalty, opts});
}

// ---------------------------------------------------------------------------
// Dynamic programming

/// Shortest admissible segment of the dynamic program, in transitions.
inline Index dp_min_segment(Index p) { return std::max<Index>(2, 2 * p); }

/// Optimal partitioning F(t) = min_s F(s) + rss(s, t) + gamma with F(1) = -gamma,
/// where rss(s, t) is the residual sum of the penalized fit on [s, t) and
/// every segment spans at least dp_min_segment(p) transitions. Fits for a
/// fixed start warm-start from the previous end point. With pruning, a start
/// s with F(s) + rss(s, t) > F(t) is dropped for ends from t + min_len on,
/// where t itself becomes an admissible start; this is exact when segment
/// costs are superadditive and saves most fits when gamma is positive.
template <class Model>
MultiDetection dp_detect_with(const TimeSeriesData& data, double gamma, const Model& model, bool prune = true) {
  require(gamma >= 0.0, ErrorCode::invalid_argument, "gamma must be nonnegative");
  Index T = data.T(), p = data.p();
  Index min_len = dp_min_segment(p);
  require(T - 1 >= min_len, ErrorCode::invalid_argument,
          "series too short for the minimum segment length " + std::to_string(min_len));
  MomentTable table(data);
  const double inf = std::numeric_limits<double>::infinity();
  // Boundaries 1..T; F[b] is the best cost of transitions [1, b).
  std::vector<double> F(static_cast<std::size_t>(T + 1), inf);
  std::vector<Index> from(static_cast<std::size_t>(T + 1), 0);
  std::vector<std::optional<FitResult>> warm(static_cast<std::size_t>(T + 1));
  const Index never = std::numeric_limits<Index>::max() / 2;
  std::vector<Index> pruned_at(static_cast<std::size_t>(T + 1), never);
  const bool unbounded = std::isinf(gamma);
  F[1] = unbounded ? 0.0 : -gamma;
  for (Index t = 1 + min_len; t <= T; ++t) {
    std::vector<Index> starts;
    for (Index s = 1; s + min_len <= t; ++s) {
      auto k = static_cast<std::size_t>(s);
      if (t >= pruned_at[k] + min_len) {
        warm[k].reset();
        continue;
      }
      if (std::isfinite(F[k]) && (!unbounded || s == 1)) starts.push_back(s);
    }
    std::vector<double> totals(starts.size(), inf);
    parallel_for(starts.size(), [&](std::size_t k) {
      auto s = static_cast<std::size_t>(starts[k]);
      auto fit = model.split_fit(table.over({starts[k], t}), p, warm[s] ? &*warm[s] : nullptr);
      totals[k] = F[s] + fit.rss;
      warm[s] = std::move(fit);
    });
    auto& best = F[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < starts.size(); ++k) {
      double total = totals[k] + (unbounded ? 0.0 : gamma);
      if (total < best) {
        best = total;
        from[static_cast<std::size_t>(t)] = starts[k];
      }
    }
    if (prune && !unbounded)
      for (std::size_t k = 0; k < starts.size(); ++k)
        if (totals[k] > best) {
          auto& at = pruned_at[static_cast<std::size_t>(starts[k])];
          at = std::min(at, t);
        }
  }
  require(std::isfinite(F[static_cast<std::size_t>(T)]), ErrorCode::detection_failure,
          "dynamic program found no admissible partition");
  std::vector<Index> cps;
  for (Index b = from[static_cast<std::size_t>(T)]; b > 1; b = from[static_cast<std::size_t>(b)]) cps.push_back(b);
  std::reverse(cps.begin(), cps.end());
  auto out = detail::finish_detection(data, model, cps, "dp");
  out.trace.omega_T = gamma;
  double total = F[static_cast<std::size_t>(T)];
  double penalty_part = unbounded ? 0.0 : static_cast<double>(cps.size()) * gamma;
  out.trace.steps.push_back({out.change_points, total - penalty_part, total});
  return out;
}

inline MultiDetection dp_detect(const TimeSeriesData& data, double gamma, const PenaltyConfig& penalty,
                                const SolverOptions& opts, bool prune = true) {
  return dp_detect_with(data, gamma, FullModel{penalty, opts}, prune);
}

}  // namespace lsvar
