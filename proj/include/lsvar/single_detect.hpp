#pragma once

/// Single change-point detection by exhaustive search over a split domain.
/// The search is generic over a fitting model so the weakly sparse surrogate
/// reuses it; FullModel is the low-rank plus sparse fit.

#include "lsvar/estimation.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lsvar {

/// Candidate splits tau in [lower, upper], inclusive.
struct SearchDomain {
  Index lower = 0;
  Index upper = 0;

  Index size() const { return upper - lower + 1; }
};

struct CurvePoint {
  Index tau = 0;
  double objective = 0.0;
};

struct SkippedSplit {
  Index tau = 0;
  std::string reason;
};

struct SingleDetection {
  Index tau_hat = 0;
  double objective = 0.0;
  std::vector<CurvePoint> objective_curve;
  std::vector<SkippedSplit> skipped;
  FitResult left_fit;
  FitResult right_fit;
};

/// Penalized residual sum of one stationary segment plus its fit.
struct SegmentCost {
  double value = 0.0;
  FitResult fit;
};

/// Low-rank plus sparse model: search fits use the per-split log-rate
/// schedule, screening costs the same form on each segment, and reported
/// segment fits the per-segment schedule with the alpha_L offset.
struct FullModel {
  PenaltyConfig penalty;
  SolverOptions options;

  FitResult split_fit(const TransitionMoments& m, Index p, const FitResult* warm) const {
    auto pen = log_rate_penalty(m.n, p, penalty.c0, penalty.c0_prime);
    return fit_lowrank_sparse(m, pen.lambda, pen.mu, penalty.alpha_L, options, warm);
  }

  SegmentCost segment_cost(const TransitionMoments& m, Index p, const FitResult* warm) const {
    auto fit = split_fit(m, p, warm);
    double nuclear = fit.mu > 0.0 ? detail::nuclear_norm(fit.L_hat) : 0.0;
    double value = fit.rss + fit.lambda * fit.S_hat.cwiseAbs().sum() + fit.mu * nuclear;
    return {value, std::move(fit)};
  }

  FitResult segment_fit(const TransitionMoments& m, Index p) const {
    auto pen = segment_phase_tuning(m.n, p, penalty.alpha_L, penalty);
    return fit_lowrank_sparse(m, pen.lambda, pen.mu, penalty.alpha_L, options);
  }
};

/// (1/(T-1)) times the residual sum of the left model on [1, tau) plus the
/// right model on [tau, T).
inline double split_objective(const TimeSeriesData& data, Index tau, const Matrix& left, const Matrix& right) {
  require(tau > 1 && tau < data.T(), ErrorCode::invalid_argument,
          "split " + std::to_string(tau) + " must lie strictly inside (1, " + std::to_string(data.T()) + ")");
  double total = residual_sum(data, Interval{1, tau}, left) + residual_sum(data, Interval{tau, data.T()}, right);
  return total / static_cast<double>(data.T() - 1);
}

inline double split_objective(const TimeSeriesData& data, Index tau, const FitResult& left, const FitResult& right) {
  return split_objective(data, tau, left.A_hat(), right.A_hat());
}

inline void validate_domain(const SearchDomain& d, Index T) {
  require(d.lower >= 1 && d.lower < d.upper && d.upper <= T - 1, ErrorCode::invalid_argument,
          "search domain [" + std::to_string(d.lower) + ", " + std::to_string(d.upper) +
              "] must satisfy 1 <= lower < upper <= T-1 = " + std::to_string(T - 1));
}

inline SearchDomain trimmed_search_domain(Index T, double fraction = 0.1) {
  require(T >= 10, ErrorCode::invalid_argument, "search domain needs T >= 10, got " + std::to_string(T));
  require(fraction > 0.0 && fraction < 0.5, ErrorCode::invalid_argument, "trim fraction must lie in (0, 0.5)");
  auto a = static_cast<Index>(std::ceil(fraction * static_cast<double>(T)));
  auto b = static_cast<Index>(std::floor((1.0 - fraction) * static_cast<double>(T)));
  return {std::max<Index>(a, 1), std::min(b, T - 1)};
}

/// [floor(k), T - floor(k)] with k = (d_max + sqrt(r_max))^(1 + eta); falls
/// back to [ceil(0.1 T), floor(0.9 T)] when that is empty.
inline SearchDomain default_search_domain(Index T, Index d_max, Index r_max, double eta) {
  require(T >= 10, ErrorCode::invalid_argument, "search domain needs T >= 10, got " + std::to_string(T));
  require(d_max >= 1 && r_max >= 0 && eta > 0.0, ErrorCode::invalid_argument,
          "need d_max >= 1, r_max >= 0 and eta > 0");
  double k = std::pow(static_cast<double>(d_max) + std::sqrt(static_cast<double>(r_max)), 1.0 + eta);
  auto a = static_cast<Index>(std::floor(k));
  Index b = T - a;
  if (a >= b || a < 1 || b > T - 1) return trimmed_search_domain(T, 0.1);
  return {a, b};
}

/// Evaluates every split of the domain with `model`, warm-starting each side
/// from the neighbouring split. Splits whose fit fails are recorded and skipped.
template <class Model>
SingleDetection exhaustive_search_with(const TimeSeriesData& data, const SearchDomain& domain, const Model& model,
                                       const MomentTable* table = nullptr) {
  Index T = data.T(), p = data.p();
  validate_domain(domain, T);
  std::optional<MomentTable> own;
  if (!table) table = &own.emplace(data);

  SingleDetection out;
  std::optional<FitResult> warm_left, warm_right;
  double best = std::numeric_limits<double>::infinity();
  for (Index tau = domain.lower; tau <= domain.upper; ++tau) {
    try {
      auto left = model.split_fit(table->over({1, tau}), p, warm_left ? &*warm_left : nullptr);
      auto right = model.split_fit(table->over({tau, T}), p, warm_right ? &*warm_right : nullptr);
      double value = (left.rss + right.rss) / static_cast<double>(T - 1);
      require(std::isfinite(value), ErrorCode::fit_failure, "non-finite objective");
      out.objective_curve.push_back({tau, value});
      if (value < best) {
        best = value;
        out.tau_hat = tau;
        out.left_fit = left;
        out.right_fit = right;
      }
      warm_left = std::move(left);
      warm_right = std::move(right);
    } catch (const Error& e) {
      out.skipped.push_back({tau, e.what()});
    }
  }
  require(!out.objective_curve.empty(), ErrorCode::detection_failure,
          "every split of the search domain failed to fit");
  out.objective = best;
  return out;
}

inline SingleDetection exhaustive_search(const TimeSeriesData& data, const SearchDomain& domain,
                                         const PenaltyConfig& penalty, const SolverOptions& opts) {
  return exhaustive_search_with(data, domain, FullModel{penalty, opts});
}

/// Curves whose relative range falls below this are read as having no change.
inline constexpr double kFlatCurveThreshold = 0.05;

/// (max - min) / max of the curve; small values indicate no clear split.
inline double curve_relative_range(const std::vector<CurvePoint>& curve) {
  require(!curve.empty(), ErrorCode::invalid_argument, "empty objective curve");
  double lo = curve.front().objective, hi = lo;
  for (const auto& c : curve) {
    lo = std::min(lo, c.objective);
    hi = std::max(hi, c.objective);
  }
  return hi > 0.0 ? (hi - lo) / hi : 0.0;
}

/// [1, tau - R) and [tau + R, T); both must keep at least 2 transitions.
inline std::pair<Interval, Interval> remove_radius_neighborhood(Index tau_hat, Index R, Index T) {
  require(R >= 0, ErrorCode::invalid_argument, "radius must be nonnegative");
  require(tau_hat > 1 && tau_hat < T, ErrorCode::invalid_argument, "change point outside (1, T)");
  Interval left{1, std::max<Index>(1, tau_hat - R)};
  Interval right{std::min(T, tau_hat + R), T};
  require(left.size() >= 2 && right.size() >= 2, ErrorCode::degenerate_interval,
          "radius " + std::to_string(R) + " around " + std::to_string(tau_hat) +
              " leaves fewer than 2 transitions on one side");
  return {left, right};
}

/// Refits each interval with the per-segment schedule.
inline std::vector<FitResult> refit_segments(const TimeSeriesData& data, const std::vector<Interval>& intervals,
                                             const PenaltyConfig& penalty, const SolverOptions& opts) {
  std::vector<FitResult> fits(intervals.size());
  FullModel model{penalty, opts};
  parallel_for(intervals.size(), [&](std::size_t i) {
    require(intervals[i].size() >= 2, ErrorCode::degenerate_interval, "segment has fewer than 2 transitions");
    fits[i] = model.segment_fit(TransitionMoments::over(data, intervals[i]), data.p());
    fits[i].rss = residual_sum(data, intervals[i], fits[i].A_hat());
  });
  return fits;
}

}  // namespace lsvar
