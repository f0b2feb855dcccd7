#pragma once

/// Accuracy metrics for detected change points and estimated matrices, and
/// the catalog of simulation scenarios used for benchmarking.

#include "lsvar/var_model.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace lsvar {

// ---------------------------------------------------------------------------
// Metrics

/// max over b in `truth` of the distance to the nearest point of `estimate`.
/// Infinite when `estimate` is empty and `truth` is not.
inline double hausdorff_directed(const std::vector<Index>& estimate, const std::vector<Index>& truth) {
  if (truth.empty()) return 0.0;
  if (estimate.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Index b : truth) {
    Index best = std::numeric_limits<Index>::max();
    for (Index a : estimate) best = std::min<Index>(best, std::abs(b - a));
    worst = std::max(worst, static_cast<double>(best));
  }
  return worst;
}

struct SupportRates {
  std::optional<double> sensitivity;  // TP / (TP + FN)
  std::optional<double> specificity;  // TN / (FN + TN)
  Index tp = 0, fp = 0, tn = 0, fn = 0;
};

inline constexpr double kDefaultSupportThreshold = 1e-3;

/// Support recovery counts with |entry| > threshold. The specificity follows
/// the TN / (FN + TN) form; an empty denominator leaves the rate unset.
inline SupportRates sensitivity_specificity(const Matrix& estimate, const Matrix& truth,
                                            double threshold = kDefaultSupportThreshold) {
  require(estimate.rows() == truth.rows() && estimate.cols() == truth.cols(), ErrorCode::invalid_argument,
          "support comparison needs matrices of equal shape");
  SupportRates r;
  for (Index j = 0; j < truth.cols(); ++j)
    for (Index i = 0; i < truth.rows(); ++i) {
      bool in_est = std::abs(estimate(i, j)) > threshold;
      bool in_true = std::abs(truth(i, j)) > threshold;
      if (in_est && in_true) ++r.tp;
      else if (in_est) ++r.fp;
      else if (in_true) ++r.fn;
      else ++r.tn;
    }
  if (r.tp + r.fn > 0) r.sensitivity = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  if (r.fn + r.tn > 0) r.specificity = static_cast<double>(r.tn) / static_cast<double>(r.fn + r.tn);
  return r;
}

inline double relative_error(const Matrix& estimate, const Matrix& truth) {
  require(estimate.rows() == truth.rows() && estimate.cols() == truth.cols(), ErrorCode::invalid_argument,
          "relative error needs matrices of equal shape");
  double denom = truth.norm();
  require(denom > 0.0, ErrorCode::undefined_value, "relative error undefined for a zero truth matrix");
  return (estimate - truth).norm() / denom;
}

/// Per true point, the fraction of replicates with a detection inside
/// [tau_j - band (tau_j - tau_{j-1}), tau_j + band (tau_{j+1} - tau_j)],
/// where tau_0 = 0 and tau_{m+1} = T.
inline std::vector<double> selection_rate(const std::vector<std::vector<Index>>& detections,
                                          const std::vector<Index>& truths, Index T, double band = 0.1) {
  require(std::is_sorted(truths.begin(), truths.end()), ErrorCode::invalid_argument, "truths must be sorted");
  require(band >= 0.0, ErrorCode::invalid_argument, "band must be nonnegative");
  std::vector<double> rates(truths.size(), 0.0);
  if (detections.empty()) return rates;
  for (std::size_t j = 0; j < truths.size(); ++j) {
    double prev = j == 0 ? 0.0 : static_cast<double>(truths[j - 1]);
    double next = j + 1 == truths.size() ? static_cast<double>(T) : static_cast<double>(truths[j + 1]);
    double tau = static_cast<double>(truths[j]);
    double lo = tau - band * (tau - prev), hi = tau + band * (next - tau);
    std::size_t hits = 0;
    for (const auto& d : detections)
      if (std::any_of(d.begin(), d.end(), [&](Index x) { return x >= lo && x <= hi; })) ++hits;
    rates[j] = static_cast<double>(hits) / static_cast<double>(detections.size());
  }
  return rates;
}

/// Spectral-norm jumps ||A_{j+1} - A_j||_2 between consecutive segments.
inline std::vector<double> jump_sizes(const PiecewiseVarModel& model) {
  std::vector<double> v;
  for (std::size_t j = 0; j + 1 < model.segments.size(); ++j) {
    Matrix D = model.segments[j + 1].transition() - model.segments[j].transition();
    v.push_back(D.size() ? Eigen::JacobiSVD<Matrix>(D).singularValues()(0) : 0.0);
  }
  return v;
}

/// Minimum spacing (boundaries 0 and T included) times minimum jump, over T.
inline double snr(const PiecewiseVarModel& model, Index T) {
  require(model.m0() >= 1, ErrorCode::undefined_value, "SNR undefined without change points");
  Index spacing = T;
  Index prev = 0;
  for (Index tau : model.change_points) {
    spacing = std::min(spacing, tau - prev);
    prev = tau;
  }
  spacing = std::min(spacing, T - prev);
  auto v = jump_sizes(model);
  double vmin = *std::min_element(v.begin(), v.end());
  return static_cast<double>(spacing) * vmin / static_cast<double>(T);
}

struct SampleSummary {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single value
  std::size_t n = 0;
};

inline SampleSummary summarize(const std::vector<double>& xs) {
  SampleSummary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline double median(std::vector<double> xs) {
  require(!xs.empty(), ErrorCode::invalid_argument, "median of an empty sample");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// ---------------------------------------------------------------------------
// Scenarios

enum class SparsePattern { off_diagonal, random };

/// What the leading singular value is calibrated to match.
enum class JumpTarget {
  mean_sparse_jump,  // mean ||S_{j+1} - S_j||_2 equals the mean of sparse_jumps
  min_total_jump,    // min ||A_{j+1} - A_j||_2 equals min_total_jump
};

struct ScenarioSpec {
  std::string name;
  Index p = 20;
  Index T = 300;
  std::vector<double> change_fractions;
  std::vector<Index> ranks;            // one per segment
  std::vector<double> lowrank_jumps;   // one per change point
  std::vector<double> sparse_jumps;    // one per change point
  std::vector<double> gammas;          // one per segment
  SparsePattern pattern = SparsePattern::off_diagonal;
  JumpTarget target = JumpTarget::mean_sparse_jump;
  double min_total_jump = 0.0;
  double noise_std = 0.1;

  Index m0() const { return static_cast<Index>(change_fractions.size()); }

  std::vector<Index> change_points() const {
    std::vector<Index> cps;
    for (double f : change_fractions) cps.push_back(static_cast<Index>(std::floor(f * static_cast<double>(T) + 1e-9)));
    return cps;
  }
};

struct Scenario {
  ScenarioSpec spec;
  PiecewiseVarModel model;
  TimeSeriesData data;
  double stability_scale = 1.0;  // < 1 when the calibrated model had to be shrunk
};

namespace detail {

inline ScenarioSpec single_spec(std::string name, Index p, Index T, double frac, Index r1, Index r2, double vL,
                                double vS, double g1, double g2) {
  return {std::move(name), p, T, {frac}, {r1, r2}, {vL}, {vS}, {g1, g2}};
}

inline ScenarioSpec multi_spec(std::string name, Index p, Index T, std::vector<double> fracs, std::vector<Index> ranks,
                               std::vector<double> dL, std::vector<double> dS, double gamma) {
  std::size_t m = fracs.size();
  if (dL.size() == 1) dL.assign(m, dL.front());
  if (dS.size() == 1) dS.assign(m, dS.front());
  return {std::move(name), p, T, std::move(fracs), std::move(ranks), std::move(dL), std::move(dS),
          std::vector<double>(m + 1, gamma)};
}

inline std::map<std::string, ScenarioSpec> build_catalog() {
  std::map<std::string, ScenarioSpec> c;
  auto add = [&](ScenarioSpec s) { c.emplace(s.name, std::move(s)); };
  add(single_spec("A.1", 20, 300, 0.5, 1, 3, 0.10, 1.5, 0.25, 0.25));
  add(single_spec("A.2", 20, 300, 0.5, 1, 3, 0.25, 1.5, 0.25, 0.25));
  add(single_spec("A.3", 20, 300, 0.5, 1, 3, 0.50, 1.5, 0.25, 0.25));
  add(single_spec("B.1", 20, 300, 0.5, 1, 2, 0.25, 2.0, 2.0, 2.0));
  add(single_spec("B.2", 20, 300, 0.5, 1, 2, 0.50, 2.0, 2.0, 2.0));
  add(single_spec("B.3", 20, 300, 0.5, 1, 2, 0.75, 2.0, 2.0, 2.0));
  add(single_spec("C.1", 20, 300, 0.5, 1, 2, 0.25, 2.0, 1.75, 2.0));
  add(single_spec("C.2", 20, 300, 0.5, 1, 2, 0.25, 2.0, 1.25, 2.0));
  add(single_spec("C.3", 20, 300, 0.5, 1, 2, 0.25, 2.0, 1.0, 2.0));
  add(single_spec("C.4", 20, 300, 0.5, 1, 2, 0.25, 2.0, 0.5, 2.0));
  add(single_spec("D.1", 20, 300, 0.5, 1, 2, 3.0, 0.75, 1.5, 1.5));
  add(single_spec("D.2", 20, 300, 0.5, 1, 2, 3.5, 0.75, 1.5, 1.5));
  add(single_spec("D.3", 20, 300, 0.5, 1, 2, 4.0, 0.75, 1.5, 1.5));
  add(single_spec("E.1", 20, 300, 0.5, 1, 3, 2.5, 0.15, 0.25, 0.25));
  add(single_spec("E.2", 20, 300, 0.5, 1, 3, 3.0, 0.15, 0.25, 0.25));
  add(single_spec("E.3", 20, 300, 0.5, 1, 3, 4.5, 0.15, 0.25, 0.25));
  add(single_spec("F.1", 20, 300, 0.5, 1, 2, 2.5, 0.25, 0.5, 0.45));
  add(single_spec("F.2", 20, 300, 0.5, 1, 2, 2.5, 0.25, 0.5, 0.75));
  add(single_spec("F.3", 20, 300, 0.5, 1, 2, 2.5, 0.25, 0.5, 0.95));
  add(single_spec("G.1", 80, 200, 0.5, 1, 3, 0.20, 0.75, 0.25, 0.25));
  add(single_spec("G.2", 80, 200, 0.5, 1, 3, 0.40, 0.75, 0.25, 0.25));
  add(single_spec("G.3", 80, 200, 0.2, 1, 3, 0.20, 0.75, 0.25, 0.25));
  add(single_spec("G.4", 80, 200, 0.8, 1, 3, 0.20, 0.75, 0.25, 0.25));
  add(single_spec("G.5", 80, 200, 0.5, 3, 1, 0.20, 0.75, 0.25, 0.25));
  add(single_spec("G.6", 80, 200, 0.5, 3, 3, 0.20, 0.75, 0.25, 0.25));
  add(single_spec("G.7", 80, 200, 0.5, 5, 3, 0.20, 0.75, 0.25, 0.25));
  add(single_spec("G.8", 50, 200, 0.5, 1, 3, 0.45, 0.40, 0.75, 0.75));
  const double s6 = 1.0 / 6.0, t3 = 1.0 / 3.0;
  add(multi_spec("L.1", 20, 1200, {s6, 2 * s6, 3 * s6, 4 * s6, 5 * s6}, {1, 1, 1, 1, 1, 1}, {0.10}, {1.5}, 0.25));
  add(multi_spec("L.2", 20, 1800, {0.10, 0.25, 0.40, 0.60, 0.80}, {3, 3, 3, 3, 3, 3}, {0.10}, {1.5}, 0.25));
  add(multi_spec("L.3", 20, 2400, {0.10, 0.30, 0.50, 0.70, 0.90}, {1, 2, 3, 3, 2, 1}, {0.10}, {1.5}, 0.25));
  add(multi_spec("M.1", 100, 1200, {t3, 2 * t3}, {1, 1, 1}, {0.25}, {1.5}, 0.25));
  add(multi_spec("M.2", 125, 1800, {t3, 2 * t3}, {1, 1, 1}, {0.30}, {1.5}, 0.25));
  for (auto [name, fracs, dL, dS] :
       {std::tuple{"N.1", std::vector<double>{t3, 2 * t3}, std::vector<double>{0.35, 0.25}, std::vector<double>{2.5, 3.0}},
        std::tuple{"N.2", std::vector<double>{s6, 5 * s6}, std::vector<double>{0.35, 0.25}, std::vector<double>{2.5, 3.0}},
        std::tuple{"N.3", std::vector<double>{t3, 2 * t3}, std::vector<double>{0.50, 0.50}, std::vector<double>{3.0, 3.0}}}) {
    auto s = multi_spec(name, 20, 300, fracs, {1, 3, 2}, dL, dS, 0.25);
    s.pattern = SparsePattern::random;
    add(std::move(s));
  }
  // SNR sweep: p = 20, T = 300, change points at T/3 and 2T/3, minimum jump v.
  for (auto [name, v] : {std::pair{"S.1", 0.8}, std::pair{"S.2", 1.0}, std::pair{"S.3", 1.6}}) {
    auto s = multi_spec(name, 20, 300, {t3, 2 * t3}, {1, 1, 1}, {0.10}, {v}, 0.25);
    s.target = JumpTarget::min_total_jump;
    s.min_total_jump = v;
    add(std::move(s));
  }
  add(multi_spec("DP.1", 20, 240, {t3, 2 * t3}, {1, 1, 1}, {0.10}, {1.5}, 0.25));
  return c;
}

/// Magnitudes of the components u_l u_l^T, l >= 2, chosen so each boundary
/// whose ranks differ jumps by its low-rank jump; boundaries touching fewer
/// components are served first.
inline std::vector<double> extra_component_magnitudes(const ScenarioSpec& s) {
  Index rmax = *std::max_element(s.ranks.begin(), s.ranks.end());
  std::vector<double> mag(static_cast<std::size_t>(std::max<Index>(rmax, 1)), 0.0);
  std::vector<std::size_t> order(s.lowrank_jumps.size());
  std::iota(order.begin(), order.end(), 0);
  auto width = [&](std::size_t j) { return std::abs(s.ranks[j + 1] - s.ranks[j]); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return width(a) < width(b); });
  for (std::size_t j : order) {
    Index lo = std::min(s.ranks[j], s.ranks[j + 1]), hi = std::max(s.ranks[j], s.ranks[j + 1]);
    for (Index l = std::max<Index>(lo, 1); l < hi; ++l)
      if (mag[static_cast<std::size_t>(l)] == 0.0) mag[static_cast<std::size_t>(l)] = s.lowrank_jumps[j];
  }
  for (Index l = 1; l < rmax; ++l)
    if (mag[static_cast<std::size_t>(l)] == 0.0) mag[static_cast<std::size_t>(l)] = s.lowrank_jumps.front();
  return mag;
}

inline Matrix sparse_pattern(const ScenarioSpec& s, std::mt19937_64& rng) {
  Index p = s.p;
  Matrix P = Matrix::Zero(p, p);
  if (s.pattern == SparsePattern::off_diagonal || p == 1) {
    for (Index i = 0; i + 1 < p; ++i) P(i, i + 1) = 1.0;
    if (p == 1) P(0, 0) = 1.0;
    return P;
  }
  // Same number of entries as the off-diagonal pattern at random positions.
  std::vector<Index> cells(static_cast<std::size_t>(p * p));
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  for (Index k = 0; k < p - 1; ++k) P(cells[static_cast<std::size_t>(k)] % p, cells[static_cast<std::size_t>(k)] / p) = 1.0;
  return P;
}

struct ModelDraft {
  std::vector<Matrix> L;
  std::vector<Matrix> S;
};

inline ModelDraft assemble(const ScenarioSpec& s, const Matrix& U, const std::vector<Matrix>& patterns,
                           const std::vector<double>& extra, double sigma1) {
  std::size_t segs = s.ranks.size();
  ModelDraft d;
  double shift = 0.0;
  for (std::size_t j = 0; j < segs; ++j) {
    if (j > 0 && s.ranks[j] == s.ranks[j - 1]) shift = shift == 0.0 ? s.lowrank_jumps[j - 1] : 0.0;
    std::vector<double> sv;
    for (Index l = 0; l < s.ranks[j]; ++l) sv.push_back(l == 0 ? sigma1 + shift : extra[static_cast<std::size_t>(l)]);
    Matrix L = low_rank_from_basis(U, sv);
    double linf = L.size() ? L.cwiseAbs().maxCoeff() : 0.0;
    double sign = j % 2 == 0 ? -1.0 : 1.0;
    d.S.push_back(sign * linf / s.gammas[j] * patterns[j]);
    d.L.push_back(std::move(L));
  }
  return d;
}

inline double spectral_norm(const Matrix& M) {
  return M.size() ? Eigen::JacobiSVD<Matrix>(M).singularValues()(0) : 0.0;
}

inline double calibration_value(const ScenarioSpec& s, const ModelDraft& d) {
  std::size_t m = d.L.size() - 1;
  if (s.target == JumpTarget::min_total_jump) {
    double v = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) v = std::min(v, spectral_norm(d.L[j + 1] + d.S[j + 1] - d.L[j] - d.S[j]));
    return v;
  }
  double v = 0.0;
  for (std::size_t j = 0; j < m; ++j) v += spectral_norm(d.S[j + 1] - d.S[j]);
  return v / static_cast<double>(m);
}

inline double calibration_target(const ScenarioSpec& s) {
  if (s.target == JumpTarget::min_total_jump) return s.min_total_jump;
  return std::accumulate(s.sparse_jumps.begin(), s.sparse_jumps.end(), 0.0) / static_cast<double>(s.sparse_jumps.size());
}

inline constexpr int kBasisRedraws = 50;
inline constexpr double kShrinkFactor = 0.95;

}  // namespace detail

inline const std::map<std::string, ScenarioSpec>& scenario_catalog() {
  static const auto catalog = detail::build_catalog();
  return catalog;
}

inline ScenarioSpec scenario_spec(const std::string& name) {
  const auto& c = scenario_catalog();
  auto it = c.find(name);
  require(it != c.end(), ErrorCode::invalid_argument, "unknown scenario '" + name + "'");
  return it->second;
}

/// Builds the model of `spec`: a shared random orthonormal basis, the leading
/// singular value calibrated by bisection to the spec's jump target, sparse
/// parts +-||L_j||_inf / gamma_j on the pattern. Bases are redrawn while a
/// segment is unstable; after the redraw budget every transition matrix is
/// shrunk by 0.95 until all segments are stable.
inline Scenario build_scenario_model(const ScenarioSpec& spec, std::uint64_t seed) {
  std::size_t segs = spec.change_fractions.size() + 1;
  require(spec.p >= 1 && spec.T >= 10, ErrorCode::invalid_argument, "scenario needs p >= 1 and T >= 10");
  require(spec.ranks.size() == segs && spec.gammas.size() == segs && spec.lowrank_jumps.size() == segs - 1 &&
              spec.sparse_jumps.size() == segs - 1,
          ErrorCode::invalid_argument, "scenario parameter lists have inconsistent lengths");
  for (Index r : spec.ranks)
    require(r >= 1 && r <= spec.p, ErrorCode::invalid_argument, "scenario rank outside [1, p]");
  auto cps = spec.change_points();
  for (std::size_t j = 0; j < cps.size(); ++j)
    require(cps[j] > 1 && cps[j] < spec.T && (j == 0 || cps[j] > cps[j - 1]), ErrorCode::invalid_argument,
            "scenario change points must be increasing inside (1, T)");

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto extra = detail::extra_component_magnitudes(spec);
  double target = detail::calibration_target(spec);

  detail::ModelDraft draft;
  bool stable = false;
  for (int attempt = 0; attempt < detail::kBasisRedraws && !stable; ++attempt) {
    Matrix U = random_orthonormal(spec.p, rng);
    std::vector<Matrix> patterns;
    if (spec.pattern == SparsePattern::random) {
      for (std::size_t j = 0; j < segs; ++j) patterns.push_back(detail::sparse_pattern(spec, rng));
    } else {
      patterns.assign(segs, detail::sparse_pattern(spec, rng));
    }
    auto value_at = [&](double s1) { return detail::calibration_value(spec, detail::assemble(spec, U, patterns, extra, s1)); };
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 60 && value_at(hi) < target; ++k) hi *= 2.0;
    for (int k = 0; k < 100; ++k) {
      double mid = 0.5 * (lo + hi);
      (value_at(mid) < target ? lo : hi) = mid;
    }
    draft = detail::assemble(spec, U, patterns, extra, 0.5 * (lo + hi));
    stable = true;
    for (std::size_t j = 0; j < segs; ++j) stable = stable && check_stability(draft.L[j] + draft.S[j]);
  }

  Scenario out;
  out.spec = spec;
  double scale = 1.0;
  auto all_stable = [&] {
    for (std::size_t j = 0; j < segs; ++j)
      if (!check_stability(scale * (draft.L[j] + draft.S[j]))) return false;
    return true;
  };
  while (!all_stable()) scale *= detail::kShrinkFactor;
  out.stability_scale = scale;

  PiecewiseVarModel& model = out.model;
  model.change_points = cps;
  model.noise_std = spec.noise_std;
  double smax = 0.0;
  for (std::size_t j = 0; j < segs; ++j) {
    LowRankSparsePair pair{scale * draft.L[j], scale * draft.S[j]};
    double linf = pair.L.cwiseAbs().maxCoeff();
    pair.alpha_L = static_cast<double>(spec.p) * linf;
    smax = std::max(smax, pair.S.cwiseAbs().maxCoeff());
    model.segments.push_back(std::move(pair));
  }
  model.max_sparse_magnitude = smax;
  validate_model(model);
  return out;
}

/// Model and simulated data for `spec` with replicate seed `seed`.
inline Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  auto s = build_scenario_model(spec, seed);
  s.data = simulate_piecewise_var(s.model, spec.T, seed);
  return s;
}

inline Scenario generate_scenario(const std::string& name, std::uint64_t seed) {
  return generate_scenario(scenario_spec(name), seed);
}

}  // namespace lsvar
