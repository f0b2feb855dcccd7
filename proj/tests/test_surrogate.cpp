#include "catch_amalgamated.hpp"

#include "oracles.hpp"

#include <random>

using namespace lsvar;
using Catch::Matchers::WithinAbs;

TEST_CASE("lq quasi-norm") {
  CHECK(lq_norm_q(Matrix::Zero(3, 3), 0.4) == 0.0);
  Matrix A(2, 2);
  A << 1.0, -2.0, 0.0, 0.5;
  CHECK_THAT(lq_norm_q(A, 1.0), WithinAbs(3.5, 1e-15));
  Matrix B = Matrix::Zero(2, 2);
  B(0, 0) = 2.0;
  CHECK_THAT(lq_norm_q(B, 0.5), WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK_THROWS_AS(lq_norm_q(A, 0.0), Error);
  CHECK_THROWS_AS(lq_norm_q(A, 1.5), Error);
  // Smaller q weighs entries below 1 up and entries above 1 down.
  Matrix small = Matrix::Constant(2, 2, 0.3);
  CHECK(lq_norm_q(small, 0.2) > lq_norm_q(small, 0.8));
}

TEST_CASE("radius lower bound") {
  LowRankSparsePair zero{Matrix::Zero(2, 2), Matrix::Zero(2, 2), 1.0};
  CHECK(radius_lower_bound(zero, 0.5, 1.0) == 0.0);

  LowRankSparsePair dense{Matrix::Zero(3, 3), Matrix::Constant(3, 3, 0.2), 1.5};
  CHECK_THAT(radius_lower_bound(dense, 0.4, 0.7), WithinAbs(9.0 * (std::pow(0.5, 0.4) + std::pow(0.7, 0.4)), 1e-12));

  Matrix L = Matrix::Zero(2, 2);
  L(0, 0) = 0.5;
  Matrix S = Matrix::Zero(2, 2);
  S(0, 1) = 1.0;
  S(1, 0) = -0.3;
  LowRankSparsePair pair{L, S, 1.0};
  double expected = 2.0 * (std::sqrt(0.5) + 1.0) + 2.0 * std::sqrt(0.5);
  CHECK_THAT(radius_lower_bound(pair, 0.5, 1.0), WithinAbs(expected, 1e-12));
  CHECK_THAT(expected, WithinAbs(4.828, 1e-3));
  CHECK_THROWS_AS(radius_lower_bound(pair, 1.0, 1.0), Error);
  CHECK_THROWS_AS(radius_lower_bound(pair, 0.5, -1.0), Error);
}

TEST_CASE("thresholded support") {
  Matrix A(2, 2);
  A << 0.3, 0.05, 0.0, 0.2;
  using Entry = std::pair<Index, Index>;
  CHECK(threshold_support(A, 0.1) == std::vector<Entry>{{0, 0}, {1, 1}});
  CHECK(threshold_support(A, 0.31).empty());
  CHECK(threshold_support(A, 1e-300) == std::vector<Entry>{{0, 0}, {0, 1}, {1, 1}});
  CHECK_THROWS_AS(threshold_support(A, 0.0), Error);
}

TEST_CASE("surrogate configuration is validated") {
  WeaklySparseConfig c;
  CHECK_NOTHROW(c.validate());
  c.q = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.q = 0.4;
  c.lambda_w = -0.1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("noise-free sparse-only change is recovered exactly") {
  const Index T = 40, tau_star = 19;
  Matrix A1 = Matrix::Zero(2, 2), A2 = Matrix::Zero(2, 2);
  A1(0, 1) = 0.99;
  A1(1, 0) = -0.99;
  A2(0, 0) = 0.99;
  A2(1, 1) = -0.9;
  Vector start(2);
  start << 1.0, 0.5;
  auto data = oracle::noise_free_piecewise({A1, A2}, {tau_star}, start, T);
  WeaklySparseConfig cfg;
  cfg.lambda_w = 0.0;
  SolverOptions opts;
  opts.max_iterations = 20000;
  opts.rel_tolerance = 1e-14;
  auto det = surrogate_detect_single(data, {4, T - 4}, cfg, opts);
  CHECK(det.tau_hat == tau_star);
  CHECK((det.left_fit.A_hat() - A1).norm() < 1e-6);
  CHECK((det.right_fit.A_hat() - A2).norm() < 1e-6);
  for (const auto& pt : det.objective_curve) {
    double brute = split_objective(data, pt.tau, oracle::ols(data, {1, pt.tau}), oracle::ols(data, {pt.tau, T}));
    CHECK_THAT(pt.objective, WithinAbs(brute, 1e-8));
  }
}

TEST_CASE("surrogate screening removes everything on pure noise") {
  std::mt19937_64 rng(21);
  auto data = oracle::random_var_data(rng, 3, 200, 0.1);
  auto run = surrogate_detect_multi(data, plan_windows(200, 40, 10), WeaklySparseConfig{}, SolverOptions{});
  CHECK(run.detection.m_hat == 0);
  CHECK(run.detection.method == "surrogate");
}

TEST_CASE("combined strategy keeps every surrogate point") {
  const Index p = 5, T = 240;
  PiecewiseVarModel m;
  Matrix S1 = Matrix::Zero(p, p), S2 = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    S1(i, i) = 0.6;
    S2(i, (i + 1) % p) = -0.6;
  }
  m.segments = {{Matrix::Zero(p, p), S1}, {Matrix::Zero(p, p), S2}, {Matrix::Zero(p, p), S1}};
  m.change_points = {80, 160};
  m.noise_std = 0.1;
  auto data = simulate_piecewise_var(m, T, 41);
  CombinedConfig cfg;
  cfg.surrogate_pass.h = 60;
  cfg.surrogate_pass.l = 15;
  cfg.penalty.alpha_L = default_alpha_L(p, T, 1.0);
  auto run = combined_strategy(data, cfg, SolverOptions{});
  const auto& first = run.surrogate.detection.change_points;
  CHECK(first.size() == 2);
  for (Index s : first)
    CHECK(std::find(run.detection.change_points.begin(), run.detection.change_points.end(), s) !=
          run.detection.change_points.end());
  CHECK(std::is_sorted(run.detection.change_points.begin(), run.detection.change_points.end()));
  CHECK(run.detection.method == "combined");
}

TEST_CASE("surrogate applicability") {
  FitResult f;
  f.L_hat = Matrix::Zero(2, 2);
  f.S_hat = Matrix::Zero(2, 2);
  f.S_hat(0, 0) = 0.5;
  f.S_hat(1, 0) = 0.001;
  f.lambda = 0.1;
  WeaklySparseConfig cfg;
  auto a = surrogate_applicability({f}, cfg, 2);
  // one entry survives the threshold 0.005; no low-rank part
  CHECK_THAT(a.radius_lower_bound, WithinAbs(std::pow(0.5, 0.4), 1e-12));
  CHECK(a.applicable);
  cfg.R_q = 0.1;
  CHECK_FALSE(surrogate_applicability({f}, cfg, 2).applicable);
}
