#pragma once

/// Weakly sparse surrogate detection: each transition matrix is fitted by a
/// lasso in place of the low-rank plus sparse fit, plus the combined strategy
/// that runs the surrogate first and the full model inside its segments.

#include "lsvar/multi_detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace lsvar {

struct WeaklySparseConfig {
  double q = 0.4;
  double R_q = std::numeric_limits<double>::infinity();
  double eta_fraction = 0.05;  // support threshold as a fraction of the lasso penalty
  double c0 = 0.005;           // constant of the log-rate lasso schedule
  std::optional<double> lambda_w;  // fixed penalty; overrides the schedule

  void validate() const {
    require(q > 0.0 && q < 1.0, ErrorCode::invalid_argument, "q must lie in (0, 1)");
    require(R_q > 0.0, ErrorCode::invalid_argument, "R_q must be positive");
    require(eta_fraction > 0.0, ErrorCode::invalid_argument, "eta fraction must be positive");
    require(c0 > 0.0, ErrorCode::invalid_argument, "surrogate constant must be positive");
    require(!lambda_w || *lambda_w >= 0.0, ErrorCode::invalid_argument, "lambda_w must be nonnegative");
  }
};

/// Lasso model with the log-rate penalty 4 c sqrt((log p + log n)/n) for
/// searching, screening and the reported segment fits alike.
struct WeaklySparseModel {
  WeaklySparseConfig config;
  SolverOptions options;

  double penalty_for(Index n, Index p) const {
    return config.lambda_w ? *config.lambda_w : log_rate_penalty(n, p, config.c0, 0.0).lambda;
  }

  FitResult split_fit(const TransitionMoments& m, Index p, const FitResult* warm) const {
    return fit_weakly_sparse(m, penalty_for(m.n, p), options, warm);
  }

  SegmentCost segment_cost(const TransitionMoments& m, Index p, const FitResult* warm) const {
    auto fit = split_fit(m, p, warm);
    double value = fit.rss + fit.lambda * fit.S_hat.cwiseAbs().sum();
    return {value, std::move(fit)};
  }

  FitResult segment_fit(const TransitionMoments& m, Index p) const { return split_fit(m, p, nullptr); }
};

/// sum |a_ij|^q.
inline double lq_norm_q(const Matrix& A, double q) {
  require(q > 0.0 && q <= 1.0, ErrorCode::invalid_argument, "q must lie in (0, 1]");
  double total = 0.0;
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0) total += std::pow(std::abs(A(i, j)), q);
  return total;
}

/// d ((alpha_L/p)^q + M_S^q) + (p^2 - d) sigma^q, with d the largest sparse
/// support and sigma the largest spectral norm of the low-rank parts.
inline double radius_lower_bound(const std::vector<LowRankSparsePair>& pairs, double q, double M_S,
                                 double support_threshold = 0.0) {
  require(q > 0.0 && q < 1.0, ErrorCode::invalid_argument, "q must lie in (0, 1)");
  require(M_S >= 0.0, ErrorCode::invalid_argument, "M_S must be nonnegative");
  require(!pairs.empty(), ErrorCode::invalid_argument, "need at least one segment");
  Index p = pairs.front().p();
  Index d = 0;
  double sigma = 0.0, alpha_L = 0.0;
  for (const auto& pair : pairs) {
    d = std::max<Index>(d, (pair.S.array().abs() > support_threshold).count());
    sigma = std::max(sigma, detail::singular_values(pair.L).size() ? detail::singular_values(pair.L)(0) : 0.0);
    alpha_L = std::max(alpha_L, pair.alpha_L);
  }
  double dd = static_cast<double>(d), pp = static_cast<double>(p);
  double spiky = d > 0 ? dd * (std::pow(alpha_L / pp, q) + std::pow(M_S, q)) : 0.0;
  double rest = sigma > 0.0 ? (pp * pp - dd) * std::pow(sigma, q) : 0.0;
  return spiky + rest;
}

inline double radius_lower_bound(const LowRankSparsePair& pair, double q, double M_S) {
  return radius_lower_bound(std::vector<LowRankSparsePair>{pair}, q, M_S);
}

/// Entries (row, col) with |a| > eta.
inline std::vector<std::pair<Index, Index>> threshold_support(const Matrix& A, double eta) {
  require(eta > 0.0, ErrorCode::invalid_argument, "eta must be positive");
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      if (std::abs(A(i, j)) > eta) out.push_back({i, j});
  return out;
}

struct SurrogateApplicability {
  double q = 0.0;
  double R_q = 0.0;
  double radius_lower_bound = 0.0;
  bool applicable = true;
};

/// Applicability from estimated segments: each lasso fit is read as a purely
/// sparse matrix supported on its eta-thresholded entries.
inline SurrogateApplicability surrogate_applicability(const std::vector<FitResult>& fits,
                                                      const WeaklySparseConfig& config, Index p) {
  std::vector<LowRankSparsePair> pairs;
  double M_S = 0.0;
  for (const auto& f : fits) {
    double eta = std::max(config.eta_fraction * f.lambda, std::numeric_limits<double>::min());
    Matrix S = f.A_hat();
    for (Index j = 0; j < S.cols(); ++j)
      for (Index i = 0; i < S.rows(); ++i)
        if (std::abs(S(i, j)) <= eta) S(i, j) = 0.0;
    M_S = std::max(M_S, S.size() ? S.cwiseAbs().maxCoeff() : 0.0);
    pairs.push_back({Matrix::Zero(p, p), std::move(S), 0.0});
  }
  SurrogateApplicability a;
  a.q = config.q;
  a.R_q = config.R_q;
  a.radius_lower_bound = pairs.empty() ? 0.0 : radius_lower_bound(pairs, config.q, M_S);
  a.applicable = config.R_q >= a.radius_lower_bound;
  return a;
}

inline SingleDetection surrogate_detect_single(const TimeSeriesData& data, const SearchDomain& domain,
                                               const WeaklySparseConfig& config, const SolverOptions& opts) {
  config.validate();
  return exhaustive_search_with(data, domain, WeaklySparseModel{config, opts});
}

inline TwoStepRun surrogate_detect_multi(const TimeSeriesData& data, const TwoStepConfig& two_step,
                                         const WeaklySparseConfig& config, const SolverOptions& opts) {
  config.validate();
  return two_step_detect_with(data, two_step, WeaklySparseModel{config, opts}, "surrogate");
}

inline TwoStepRun surrogate_detect_multi(const TimeSeriesData& data, const WindowPlan& plan,
                                         const WeaklySparseConfig& config, const SolverOptions& opts,
                                         std::optional<double> omega = std::nullopt) {
  config.validate();
  return two_step_with_plan(data, plan, WeaklySparseModel{config, opts}, omega, "surrogate");
}

struct CombinedConfig {
  TwoStepConfig surrogate_pass;
  TwoStepConfig full_pass;  // h is capped at each segment's length
  PenaltyConfig penalty;
  WeaklySparseConfig weakly_sparse;
};

struct CombinedRun {
  TwoStepRun surrogate;
  std::vector<Index> full_points;  // found inside surrogate segments
  MultiDetection detection;
};

/// Minimum observations a surrogate segment needs for the full-model pass.
inline constexpr Index kCombinedMinSegment = 12;

/// Surrogate two-step detection on the whole series, then the full two-step
/// pipeline inside each resulting segment. The answer is the union with
/// full-model points closer than l to an earlier point dropped; surrogate
/// points always survive.
inline CombinedRun combined_strategy(const TimeSeriesData& data, const CombinedConfig& config,
                                     const SolverOptions& opts) {
  config.weakly_sparse.validate();
  CombinedRun out;
  out.surrogate = surrogate_detect_multi(data, config.surrogate_pass, config.weakly_sparse, opts);
  const auto& first = out.surrogate.detection.change_points;
  Index radius = out.surrogate.plan.l;
  FullModel full{config.penalty, opts};

  auto segments = segments_of(first, data.T());
  std::vector<std::vector<Index>> found(segments.size());
  parallel_for(segments.size(), [&](std::size_t i) {
    const Interval& seg = segments[i];
    Index rows = seg.size() + 1;
    if (rows < kCombinedMinSegment) return;
    auto local = data.window(seg);
    TwoStepConfig cfg = config.full_pass;
    Index h = cfg.h ? cfg.h : out.surrogate.plan.h;
    cfg.h = std::clamp<Index>(h, 6, rows);
    cfg.l = std::min(cfg.l ? cfg.l : default_shift(cfg.h), std::max<Index>(cfg.h / 2, 1));
    auto run = two_step_detect_with(local, cfg, full);
    for (Index tau : run.detection.change_points) found[i].push_back(seg.begin - 1 + tau);
  });

  std::vector<Index> merged = first;
  for (const auto& pts : found)
    for (Index tau : pts) {
      out.full_points.push_back(tau);
      bool close = std::any_of(merged.begin(), merged.end(), [&](Index s) { return std::abs(s - tau) < radius; });
      if (!close) merged.push_back(tau);
    }
  std::sort(merged.begin(), merged.end());
  out.detection = detail::finish_detection(data, full, merged, "combined");
  out.detection.trace = out.surrogate.detection.trace;
  return out;
}

}  // namespace lsvar
