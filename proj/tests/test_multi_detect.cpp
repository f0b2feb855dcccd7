#include "catch_amalgamated.hpp"

#include "oracles.hpp"

#include <random>

using namespace lsvar;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TimeSeriesData noisy_rotations(std::uint64_t seed, Index T, const std::vector<Index>& cps, double noise = 0.1) {
  PiecewiseVarModel m;
  double angle = 0.4;
  for (std::size_t j = 0; j <= cps.size(); ++j, angle = -angle * 2.5)
    m.segments.push_back({Matrix::Zero(2, 2), oracle::rotation(0.8, angle)});
  m.change_points = cps;
  m.noise_std = noise;
  return simulate_piecewise_var(m, T, seed);
}

MultiDetection detection_at(std::vector<Index> cps) {
  MultiDetection d;
  d.method = "two-step";
  d.m_hat = static_cast<Index>(cps.size());
  d.change_points = std::move(cps);
  return d;
}

}  // namespace

TEST_CASE("window plans") {
  auto plan = plan_windows(10, 4, 2);
  REQUIRE(plan.windows.size() == 4);
  CHECK(plan.windows[0] == Interval{1, 4});
  CHECK(plan.windows[1] == Interval{3, 6});
  CHECK(plan.windows[2] == Interval{5, 8});
  CHECK(plan.windows[3] == Interval{7, 10});

  auto one = plan_windows(25, 25, 5);
  REQUIRE(one.windows.size() == 1);
  CHECK(one.windows[0] == Interval{1, 25});

  CHECK_THROWS_AS(plan_windows(10, 11, 2), Error);
  CHECK_THROWS_AS(plan_windows(10, 4, 0), Error);
  CHECK_THROWS_AS(plan_windows(10, 4, 3), Error);
}

TEST_CASE("window search domain stays inside the window") {
  for (Index h = 6; h <= 400; ++h) {
    auto d = window_search_domain(h);
    CHECK(d.lower >= 3);
    CHECK(d.upper <= h - 2);
    CHECK(d.lower < d.upper);
  }
}

TEST_CASE("candidate merging keeps the deeper dip") {
  std::vector<Candidate> raw{{50, 0, 0.9}, {10, 1, 0.5}, {53, 2, 0.2}, {12, 3, 0.5}, {80, 4, 0.7}};
  auto kept = merge_candidates(raw, 5);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].tau == 10);  // equal objectives keep the earlier one
  CHECK(kept[1].tau == 53);
  CHECK(kept[2].tau == 80);
}

TEST_CASE("rolling windows find exact changes in noise-free data") {
  Matrix A1 = oracle::rotation(0.99, 0.5), A2 = oracle::rotation(0.99, -1.1), A3 = oracle::rotation(0.99, 2.0);
  Vector start(2);
  start << 1.0, 0.5;
  auto data = oracle::noise_free_piecewise({A1, A2, A3}, {30, 60}, start, 90);
  auto plan = plan_windows(90, 20, 5);
  auto cands = rolling_window_candidates_with(data, plan, oracle::OlsModel{});
  auto pos = cands.positions();
  CHECK(std::find(pos.begin(), pos.end(), 30) != pos.end());
  CHECK(std::find(pos.begin(), pos.end(), 60) != pos.end());
  CHECK(std::is_sorted(pos.begin(), pos.end()));
  CHECK(cands.failures.empty());

  auto run = two_step_with_plan(data, plan, oracle::OlsModel{}, std::nullopt, "two-step");
  CHECK(run.detection.change_points == std::vector<Index>{30, 60});
  CHECK(run.detection.segments.size() == 3);
}

TEST_CASE("information criterion") {
  auto data = noisy_rotations(5, 60, {});
  PenaltyConfig pen;
  pen.alpha_L = 1.0;
  SolverOptions opts;
  double global = FullModel{pen, opts}.segment_cost(TransitionMoments::over(data, Interval{1, 60}), 2, nullptr).value;
  CHECK_THAT(information_criterion(data, {}, pen, 123.0, opts), WithinRel(global, 1e-12));
  CHECK_THROWS_AS(information_criterion(data, {30, 31}, pen, 1.0, opts), Error);
  CHECK_THROWS_AS(information_criterion(data, {40, 30}, pen, 1.0, opts), Error);

  SegmentCostCache<oracle::OlsModel> cache(data, {});
  double reduction = information_criterion_with(cache, {}, 0.0) - information_criterion_with(cache, {30}, 0.0);
  CHECK(reduction >= 0.0);
  CHECK(information_criterion_with(cache, {30}, reduction * 1.01) > information_criterion_with(cache, {}, reduction * 1.01));
  CHECK(information_criterion_with(cache, {30}, reduction * 0.99) < information_criterion_with(cache, {}, reduction * 0.99));

  // Nested breakpoint sets never raise the unpenalized least-squares IC.
  std::vector<Index> nested;
  double prev = information_criterion_with(cache, nested, 0.0);
  for (Index s : {10, 20, 30, 40, 50}) {
    nested.push_back(s);
    double ic = information_criterion_with(cache, nested, 0.0);
    CHECK(ic <= prev + 1e-9);
    prev = ic;
  }
}

TEST_CASE("near-duplicate candidates collapse to one point") {
  const Index p = 5, T = 160;
  PiecewiseVarModel m;
  Matrix S1 = Matrix::Zero(p, p), S2 = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    S1(i, i) = 0.6;
    S2(i, (i + 1) % p) = -0.6;
  }
  m.segments = {{Matrix::Zero(p, p), S1}, {Matrix::Zero(p, p), S2}};
  m.change_points = {80};
  m.noise_std = 0.1;
  auto data = simulate_piecewise_var(m, T, 31);
  PenaltyConfig pen;
  pen.alpha_L = default_alpha_L(p, T, 1.0);
  SolverOptions opts;
  SegmentCostCache<FullModel> cache(data, FullModel{pen, opts});
  double omega = select_omega_with(cache, {80, 83});
  auto det = backward_elimination_with(cache, {80, 83}, omega);
  REQUIRE(det.m_hat == 1);
  CHECK(std::abs(det.change_points[0] - 80) <= 3);
  double kept = information_criterion_with(cache, det.change_points, omega);
  CHECK(kept <= information_criterion_with(cache, {80, 83}, omega));
  CHECK(kept < information_criterion_with(cache, {}, omega));
  REQUIRE(det.trace.steps.size() == 2);
  CHECK(det.trace.steps[0].retained == std::vector<Index>{80, 83});
  CHECK(det.trace.steps[1].ic == kept);
}

TEST_CASE("pure noise with a large threshold screens everything out") {
  std::mt19937_64 rng(6);
  auto data = oracle::random_var_data(rng, 3, 120, 0.1);
  PenaltyConfig pen;
  pen.alpha_L = 1.0;
  auto det = backward_elimination(data, {30, 60, 90}, 1e6, pen, SolverOptions{});
  CHECK(det.m_hat == 0);
  CHECK(det.change_points.empty());
  CHECK(det.segments == std::vector<Interval>{{1, 120}});
  CHECK_THROWS_AS(backward_elimination(data, {}, 1.0, pen, SolverOptions{}), Error);
}

TEST_CASE("larger thresholds never keep more points") {
  auto data = noisy_rotations(8, 150, {50, 100});
  SegmentCostCache<oracle::OlsModel> cache(data, {});
  std::vector<Index> cands{20, 50, 70, 100, 130};
  Index prev = std::numeric_limits<Index>::max();
  for (double omega : {0.0, 0.01, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0, 1e4}) {
    auto det = backward_elimination_with(cache, cands, omega);
    CHECK(det.m_hat <= prev);
    prev = det.m_hat;
    for (std::size_t k = 1; k < det.trace.steps.size(); ++k)
      CHECK(det.trace.steps[k].ic <= det.trace.steps[k - 1].ic);
  }
  CHECK(prev == 0);
}

TEST_CASE("threshold selection from jumps") {
  CHECK_THAT(select_omega_from_jumps({1.0, 1.1, 50.0, 55.0}), WithinRel(50.0, 1e-8));
  CHECK(select_omega_from_jumps({1.0, 1.1, 50.0, 55.0}) < 50.0);
  CHECK(select_omega_from_jumps({4.0, 4.0, 4.0}) == 4.0);
  CHECK(select_omega_from_jumps({7.0}) == 7.0);
  CHECK(select_omega_from_jumps({0.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(select_omega_from_jumps({}), Error);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_int_distribution<int> n(2, 12);
  for (int k = 0; k < 300; ++k) {
    std::vector<double> v(static_cast<std::size_t>(n(rng)));
    for (auto& x : v) x = u(rng);
    auto fast = two_means_1d(v);
    auto brute = oracle::brute_two_means(v);
    CHECK_THAT(fast.between_ratio, WithinAbs(brute.between_over_total, 1e-9));
    CHECK(fast.low.size() + fast.high.size() == v.size());
    if (!fast.high.empty()) CHECK(fast.low.back() <= fast.high.front());
  }
}

TEST_CASE("stable window choice") {
  auto a = choose_stable_window({100, 80, 60, 40}, {3, 2, 2, 2});
  CHECK(a.h == 80);
  CHECK(a.stabilized);
  auto b = choose_stable_window({100, 80, 60, 40}, {5, 4, 3, 2});
  CHECK(b.h == 40);
  CHECK_FALSE(b.stabilized);
  CHECK_THROWS_AS(choose_stable_window({}, {}), Error);
  CHECK_THROWS_AS(choose_stable_window({1, 2}, {1}), Error);
}

TEST_CASE("refinement") {
  Matrix A1 = oracle::rotation(0.99, 0.5), A2 = oracle::rotation(0.99, -1.1);
  Vector start(2);
  start << 1.0, 0.5;
  auto exact = oracle::noise_free_piecewise({A1, A2}, {30}, start, 60);
  CHECK(refine_change_points_with(exact, detection_at({30}), oracle::OlsModel{}).change_points ==
        std::vector<Index>{30});

  int closer = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    auto data = noisy_rotations(100 + static_cast<std::uint64_t>(r), 100, {50});
    auto out = refine_change_points_with(data, detection_at({55}), oracle::OlsModel{});
    REQUIRE(out.m_hat == 1);
    Index s = out.change_points[0];
    CHECK(static_cast<double>(s) > 55.0 / 3.0);
    CHECK(static_cast<double>(s) < 2.0 * 55.0 / 3.0 + 100.0 / 3.0);
    if (std::abs(s - 50) <= 5) ++closer;
  }
  CHECK(closer >= reps * 8 / 10);
  CHECK_THROWS_AS(refine_change_points_with(exact, detection_at({}), oracle::OlsModel{}), Error);
}

TEST_CASE("dynamic program matches exhaustive partitioning") {
  std::mt19937_64 rng(12);
  for (auto [p, T] : {std::pair<Index, Index>{1, 22}, std::pair<Index, Index>{2, 26}}) {
    for (int k = 0; k < 3; ++k) {
      auto data = noisy_rotations(200 + static_cast<std::uint64_t>(k), T, {T / 2}, 0.2);
      if (p == 1) data = oracle::random_var_data(rng, 1, T);
      MomentTable table(data);
      oracle::OlsModel model;
      auto cost = [&](Interval iv) { return model.split_fit(table.over(iv), p, nullptr).rss; };
      for (double gamma : {0.0, 0.05, 0.5, 5.0}) {
        auto [best, cps] = oracle::brute_partition(T, dp_min_segment(p), gamma, cost);
        for (bool prune : {false, true}) {
          auto det = dp_detect_with(data, gamma, model, prune);
          CHECK_THAT(det.trace.steps.front().ic, WithinAbs(best, 1e-9));
          double achieved = 0.0;
          for (const auto& seg : det.segments) achieved += cost(seg);
          achieved += gamma * static_cast<double>(det.m_hat);
          CHECK_THAT(achieved, WithinAbs(best, 1e-9));
          for (const auto& seg : det.segments) CHECK(seg.size() >= dp_min_segment(p));
        }
      }
    }
  }
}

TEST_CASE("dynamic program edge cases") {
  auto data = noisy_rotations(3, 60, {30});
  auto none = dp_detect_with(data, std::numeric_limits<double>::infinity(), oracle::OlsModel{});
  CHECK(none.m_hat == 0);
  auto found = dp_detect_with(data, 0.5, oracle::OlsModel{});
  CHECK(found.m_hat >= 1);
  CHECK_THROWS_AS(dp_detect_with(data, -1.0, oracle::OlsModel{}), Error);
  std::mt19937_64 rng(4);
  CHECK_THROWS_AS(dp_detect_with(oracle::random_var_data(rng, 3, 6), 1.0, oracle::OlsModel{}), Error);
}
