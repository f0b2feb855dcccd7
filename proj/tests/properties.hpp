#pragma once

// Property checks over randomized or exhaustively enumerated inputs. Each
// returns an Outcome so the unit tests and the acceptance run share them.

#include "oracles.hpp"

#include <cstdlib>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace props {

using namespace lsvar;

struct Outcome {
  std::string name;
  bool ok = true;
  long cases = 0;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix M(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) M(i, j) = g(rng);
  return M;
}

/// soft_threshold(x, t) minimizes (z - x)^2 / 2 + t |z|; the minimizer is one
/// of x - t, x + t or 0, so the smallest objective among them is the answer.
inline Outcome soft_threshold_closed_form(std::uint64_t seed, int n = 1000) {
  Outcome o{"soft-threshold closed form"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), ut(0.0, 3.0);
  for (int k = 0; k < n; ++k, ++o.cases) {
    double x = ux(rng), t = ut(rng);
    auto f = [&](double z) { return 0.5 * (z - x) * (z - x) + t * std::abs(z); };
    double best = 0.0;
    for (double z : {x - t, x + t})
      if (f(z) < f(best)) best = z;
    double got = soft_threshold(x, t);
    if (std::abs(got - best) > 1e-12 || f(got) > f(best) + 1e-12) {
      std::ostringstream s;
      s << "x=" << x << " t=" << t << " got " << got << " expected " << best;
      o.fail(s.str());
    }
  }
  return o;
}

/// Z = SVT(M, t) satisfies M - Z = t (U_r V_r^T + W) with U_r^T W = 0, W V_r = 0
/// and ||W||_2 <= 1, where U_r, V_r are the singular vectors of Z.
inline Outcome svt_optimality(std::uint64_t seed, int n = 200) {
  Outcome o{"singular-value threshold optimality"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, 3.0);
  for (int k = 0; k < n; ++k, ++o.cases) {
    Matrix M = random_matrix(rng, 5, 5);
    double t = ut(rng);
    Matrix Z = singular_value_threshold(M, t);
    Eigen::JacobiSVD<Matrix> svd(Z, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Index r = 0;
    while (r < 5 && svd.singularValues()(r) > 1e-10) ++r;
    Matrix G = (M - Z) / std::max(t, 1e-300);
    double residual = 0.0;
    if (t == 0.0) {
      residual = (M - Z).norm();
    } else {
      Matrix Ur = svd.matrixU().leftCols(r), Vr = svd.matrixV().leftCols(r);
      Matrix W = G - Ur * Vr.transpose();
      residual = std::max((Ur.transpose() * W).norm(), (W * Vr).norm());
      double wnorm = W.size() ? Eigen::JacobiSVD<Matrix>(W).singularValues()(0) : 0.0;
      residual = std::max(residual, wnorm - 1.0);
    }
    if (residual > 1e-8) o.fail("optimality residual " + std::to_string(residual));
  }
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 3.0;
  D(1, 1) = 1.0;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  if ((singular_value_threshold(D, 2.0) - expected).norm() > 1e-12) o.fail("diag(3,1) at 2 is not diag(1,0)");
  ++o.cases;
  return o;
}

inline Outcome omega_projection(std::uint64_t seed, int n = 500) {
  Outcome o{"Omega projection idempotent and nonexpansive"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(0.0, 3.0);
  std::uniform_int_distribution<int> up(1, 6);
  for (int k = 0; k < n; ++k, ++o.cases) {
    Index p = up(rng);
    double alpha = ua(rng);
    Matrix L1 = random_matrix(rng, p, p), L2 = random_matrix(rng, p, p);
    Matrix P1 = project_onto_omega(L1, alpha), P2 = project_onto_omega(L2, alpha);
    if (P1.cwiseAbs().maxCoeff() > alpha / static_cast<double>(p)) o.fail("projection leaves Omega");
    if (project_onto_omega(P1, alpha) != P1) o.fail("projection not idempotent");
    if ((P1 - P2).norm() > (L1 - L2).norm() + 1e-12) o.fail("projection expands a distance");
  }
  return o;
}

inline double brute_hausdorff(const std::vector<Index>& a, const std::vector<Index>& b) {
  double worst = 0.0;
  for (Index y : b) {
    double best = std::numeric_limits<double>::infinity();
    for (Index x : a) best = std::min(best, static_cast<double>(std::abs(x - y)));
    worst = std::max(worst, best);
  }
  return worst;
}

inline Outcome hausdorff_definition(std::uint64_t seed, int n = 2000) {
  Outcome o{"directed Hausdorff definition"};
  auto check = [&](const std::vector<Index>& a, const std::vector<Index>& b, double expected) {
    ++o.cases;
    double got = hausdorff_directed(a, b);
    if (!(got == expected)) o.fail("hausdorff mismatch: got " + std::to_string(got));
  };
  check({10, 50}, {12, 48, 90}, 40.0);
  check({3, 7}, {3, 7}, 0.0);
  check({1, 5, 9}, {5}, 0.0);
  check({}, {}, 0.0);
  check({}, {4}, std::numeric_limits<double>::infinity());
  check({4}, {}, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(1, 6), pos(0, 100);
  for (int k = 0; k < n; ++k) {
    std::vector<Index> a, b;
    for (int i = size(rng); i > 0; --i) a.push_back(pos(rng));
    for (int i = size(rng); i > 0; --i) b.push_back(pos(rng));
    check(a, b, brute_hausdorff(a, b));
    bool subset = std::all_of(b.begin(), b.end(), [&](Index y) { return std::find(a.begin(), a.end(), y) != a.end(); });
    if ((hausdorff_directed(a, b) == 0.0) != subset) o.fail("zero distance does not match B subset of A");
  }
  return o;
}

inline Outcome threshold_support_bound(std::uint64_t seed, int n = 1000) {
  Outcome o{"threshold support cardinality bound"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uq(0.05, 1.0), ue(1e-3, 2.0), us(0.01, 3.0);
  std::uniform_int_distribution<int> up(1, 8);
  for (int k = 0; k < n; ++k, ++o.cases) {
    Index p = up(rng);
    Matrix A = random_matrix(rng, p, p, us(rng));
    double q = uq(rng), eta = ue(rng);
    auto support = threshold_support(A, eta);
    double bound = lq_norm_q(A, q) * std::pow(eta, -q);
    if (static_cast<double>(support.size()) > bound * (1.0 + 1e-12)) o.fail("support exceeds the lq bound");
    Index direct = (A.array().abs() > eta).count();
    if (static_cast<Index>(support.size()) != direct) o.fail("support size differs from a direct count");
  }
  return o;
}

/// Every valid (T, h, l) with T <= max_T: windows start at 1 and advance by l,
/// the last ends at T, all hold h - 1 transitions, consecutive windows share at
/// least h - l observations (exactly, except the right-aligned last one), and
/// every transition in [1, T) is covered.
inline Outcome window_plan_invariants(Index max_T = 80) {
  Outcome o{"window plan coverage and overlap"};
  for (Index T = 2; T <= max_T; ++T)
    for (Index h = 2; h <= T; ++h)
      for (Index l = 1; l <= std::max<Index>(h / 2, 1); ++l) {
        ++o.cases;
        auto plan = plan_windows(T, h, l);
        const auto& w = plan.windows;
        std::ostringstream where;
        where << "T=" << T << " h=" << h << " l=" << l;
        if (w.empty() || w.front().begin != 1 || w.back().end != T) {
          o.fail("bad endpoints at " + where.str());
          continue;
        }
        std::vector<int> covered(static_cast<std::size_t>(T), 0);
        for (std::size_t i = 0; i < w.size(); ++i) {
          if (w[i].size() != h - 1) o.fail("window length at " + where.str());
          for (Index t = w[i].begin; t < w[i].end; ++t) covered[static_cast<std::size_t>(t)] = 1;
          if (i == 0) continue;
          Index overlap = w[i - 1].end + 1 - w[i].begin;  // shared observations
          bool last = i + 1 == w.size();
          if (last ? overlap < h - l : overlap != h - l) o.fail("overlap at " + where.str());
          if (w[i].begin <= w[i - 1].begin) o.fail("windows not increasing at " + where.str());
        }
        for (Index t = 1; t < T; ++t)
          if (!covered[static_cast<std::size_t>(t)]) o.fail("transition not covered at " + where.str());
      }
  return o;
}

/// Model whose split objective is a prescribed curve: left fits (which see
/// the marker row 0) carry curve[tau] * (T - 1) and right fits carry 0.
struct CurveModel {
  std::vector<double> curve;  // indexed by tau
  std::set<Index> failing;
  double marker = 1e6;

  FitResult split_fit(const TransitionMoments& m, Index p, const FitResult*) const {
    FitResult f;
    f.L_hat = Matrix::Zero(p, p);
    f.S_hat = Matrix::Zero(p, p);
    f.n = m.n;
    if (m.gram(0, 0) >= marker) {
      Index tau = m.n + 1;
      require(!failing.count(tau), ErrorCode::fit_failure, "scripted failure");
      f.rss = curve[static_cast<std::size_t>(tau)] * static_cast<double>(curve.size() - 1);
    }
    return f;
  }
};

inline Outcome exhaustive_argmin_contract(std::uint64_t seed, int n = 300) {
  Outcome o{"exhaustive search argmin and tie-break"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(8, 40), level(0, 3), coin(0, 9);
  for (int k = 0; k < n; ++k, ++o.cases) {
    Index T = len(rng);
    Matrix X = Matrix::Constant(T, 1, 0.5);
    X(0, 0) = 1e3;  // x_0^2 = 1e6 marks left segments
    TimeSeriesData data(X);
    CurveModel model;
    model.curve.assign(static_cast<std::size_t>(T), 0.0);
    for (auto& c : model.curve) c = level(rng);
    SearchDomain dom{2, T - 2};
    for (Index tau = dom.lower; tau <= dom.upper; ++tau)
      if (coin(rng) == 0) model.failing.insert(tau);
    if (static_cast<Index>(model.failing.size()) == dom.size()) model.failing.erase(dom.lower);
    auto d = exhaustive_search_with(data, dom, model);
    Index expected = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index tau = dom.lower; tau <= dom.upper; ++tau)
      if (!model.failing.count(tau) && model.curve[static_cast<std::size_t>(tau)] < best) {
        best = model.curve[static_cast<std::size_t>(tau)];
        expected = tau;
      }
    if (d.tau_hat != expected) o.fail("tau_hat " + std::to_string(d.tau_hat) + " expected " + std::to_string(expected));
    if (static_cast<Index>(d.objective_curve.size() + d.skipped.size()) != dom.size()) o.fail("curve incomplete");
    if (d.skipped.size() != model.failing.size()) o.fail("skipped splits not all recorded");
    double curve_min = std::numeric_limits<double>::infinity();
    Index first = 0;
    for (const auto& pt : d.objective_curve)
      if (pt.objective < curve_min) {
        curve_min = pt.objective;
        first = pt.tau;
      }
    if (first != d.tau_hat || curve_min != d.objective) o.fail("tau_hat is not the first minimum of the stored curve");
  }
  return o;
}

inline Outcome backward_elimination_contractive(std::uint64_t seed, int n = 12) {
  Outcome o{"backward elimination contractive"};
  std::mt19937_64 rng(seed);
  PenaltyConfig pen;
  pen.alpha_L = 1.0;
  SolverOptions opts;
  for (int k = 0; k < n; ++k, ++o.cases) {
    auto data = oracle::random_var_data(rng, 2, 90, 0.3);
    std::vector<Index> candidates;
    std::uniform_int_distribution<int> pos(4, 86);
    std::set<Index> picked;
    for (int i = 0; i < 5; ++i) picked.insert(pos(rng));
    for (Index c : picked)
      if (candidates.empty() || c - candidates.back() >= 3) candidates.push_back(c);
    std::uniform_real_distribution<double> uw(0.0, 0.5);
    double omega = uw(rng);
    auto det = backward_elimination(data, candidates, omega, pen, opts);
    for (Index c : det.change_points)
      if (std::find(candidates.begin(), candidates.end(), c) == candidates.end()) o.fail("output not a subset");
    const auto& steps = det.trace.steps;
    if (steps.empty() || steps.front().retained != candidates) o.fail("trace does not start from the candidates");
    for (std::size_t i = 1; i < steps.size(); ++i) {
      const auto& prev = steps[i - 1].retained;
      const auto& cur = steps[i].retained;
      bool subset = std::includes(prev.begin(), prev.end(), cur.begin(), cur.end());
      if (!(subset && cur.size() + 1 == prev.size())) o.fail("step is not a one-point removal");
      if (steps[i].ic > steps[i - 1].ic) o.fail("accepted removal raised the IC");
    }
    for (const auto& s : steps) {
      double ic = information_criterion(data, s.retained, pen, omega, opts);
      if (std::abs(ic - s.ic) > 1e-9 * std::max(1.0, std::abs(ic))) o.fail("trace IC differs from recomputation");
    }
    if (steps.back().retained != det.change_points || det.m_hat != static_cast<Index>(det.change_points.size()))
      o.fail("result differs from the last trace step");
    if (det.segment_fits.size() != det.change_points.size() + 1) o.fail("segment fits count");
  }
  return o;
}

inline Outcome end_to_end_determinism(std::uint64_t seed) {
  Outcome o{"end-to-end determinism"};
  ScenarioSpec spec = scenario_spec("N.1");
  spec.p = 6;
  spec.T = 150;
  auto a = generate_scenario(spec, seed), b = generate_scenario(spec, seed);
  ++o.cases;
  if (a.data.values() != b.data.values()) o.fail("simulation differs between identical calls");
  DetectionSettings settings;
  settings.two_step.h = 40;
  const char* saved = std::getenv("LSVAR_THREADS");
  std::string saved_value = saved ? saved : "";
  for (Method m : {Method::single, Method::two_step, Method::surrogate, Method::dp, Method::combined}) {
    ++o.cases;
    setenv("LSVAR_THREADS", "1", 1);
    auto r1 = dump(report_to_json(run_detection(a.data, m, settings), a.data.T()));
    setenv("LSVAR_THREADS", "4", 1);
    auto r2 = dump(report_to_json(run_detection(a.data, m, settings), a.data.T()));
    auto r3 = dump(report_to_json(run_detection(b.data, m, settings), b.data.T()));
    if (r1 != r2 || r2 != r3) o.fail("report for " + to_string(m) + " is not reproducible");
  }
  if (saved) setenv("LSVAR_THREADS", saved_value.c_str(), 1);
  else unsetenv("LSVAR_THREADS");
  return o;
}

inline std::vector<Outcome> all(std::uint64_t seed) {
  return {soft_threshold_closed_form(seed),      svt_optimality(seed + 1),
          omega_projection(seed + 2),            hausdorff_definition(seed + 3),
          threshold_support_bound(seed + 4),     window_plan_invariants(),
          exhaustive_argmin_contract(seed + 5),  backward_elimination_contractive(seed + 6),
          end_to_end_determinism(seed + 7)};
}

}  // namespace props
