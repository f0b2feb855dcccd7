#include "catch_amalgamated.hpp"

#include "oracles.hpp"

using namespace lsvar;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("directed Hausdorff distance") {
  CHECK(hausdorff_directed({10, 50}, {10, 50}) == 0.0);
  CHECK(hausdorff_directed({10, 50}, {12, 48, 90}) == 40.0);
  CHECK(hausdorff_directed({5, 10, 50, 70}, {10, 50}) == 0.0);
  CHECK(hausdorff_directed({}, {}) == 0.0);
  CHECK(hausdorff_directed({3}, {}) == 0.0);
  CHECK(std::isinf(hausdorff_directed({}, {3})));
}

TEST_CASE("support sensitivity and specificity") {
  Matrix S = Matrix::Zero(3, 3);
  S(0, 1) = 0.5;
  S(2, 0) = -0.4;
  auto exact = sensitivity_specificity(S, S);
  CHECK(exact.sensitivity == 1.0);
  CHECK(exact.specificity == 1.0);
  auto none = sensitivity_specificity(Matrix::Zero(3, 3), S);
  CHECK(none.sensitivity == 0.0);
  // TN / (FN + TN) with FN = 2, TN = 7
  CHECK_THAT(*none.specificity, WithinAbs(7.0 / 9.0, 1e-15));
  auto empty = sensitivity_specificity(S, Matrix::Zero(3, 3));
  CHECK_FALSE(empty.sensitivity.has_value());
  CHECK(empty.fp == 2);
  CHECK_THROWS_AS(sensitivity_specificity(S, Matrix::Zero(2, 2)), Error);
}

TEST_CASE("relative error") {
  Matrix A = Matrix::Random(4, 4);
  CHECK(relative_error(A, A) == 0.0);
  CHECK_THAT(relative_error(Matrix::Zero(4, 4), A), WithinAbs(1.0, 1e-15));
  CHECK_THAT(relative_error(2.0 * A, A), WithinAbs(1.0, 1e-15));
  try {
    relative_error(A, Matrix::Zero(4, 4));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_value);
  }
}

TEST_CASE("selection rate") {
  std::vector<Index> truth{100, 200};
  CHECK(selection_rate({{100, 200}, {100, 200}}, truth, 300) == std::vector<double>{1.0, 1.0});
  CHECK(selection_rate({{150}, {150}}, truth, 300) == std::vector<double>{0.0, 0.0});
  // band 0.1: [90, 110] and [190, 210]
  auto r = selection_rate({{95, 205}, {89, 211}, {110, 250}}, truth, 300, 0.1);
  CHECK_THAT(r[0], WithinAbs(2.0 / 3.0, 1e-15));
  CHECK_THAT(r[1], WithinAbs(1.0 / 3.0, 1e-15));
  std::vector<std::vector<Index>> dets{{95, 205}, {80, 230}, {130, 260}, {100}};
  double prev0 = -1.0, prev1 = -1.0;
  for (double band : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    auto rates = selection_rate(dets, truth, 300, band);
    CHECK(rates[0] >= prev0);
    CHECK(rates[1] >= prev1);
    prev0 = rates[0];
    prev1 = rates[1];
  }
}

TEST_CASE("signal to noise ratio") {
  PiecewiseVarModel m;
  Matrix A = Matrix::Zero(2, 2);
  Matrix B = A;
  B(0, 0) = 1.0;
  m.segments = {{Matrix::Zero(2, 2), A}, {Matrix::Zero(2, 2), B}, {Matrix::Zero(2, 2), A}};
  m.change_points = {100, 200};
  CHECK_THAT(snr(m, 300), WithinAbs(100.0 / 300.0, 1e-15));
  m.segments[1].S = A;
  CHECK(snr(m, 300) == 0.0);
  PiecewiseVarModel single;
  single.segments = {{Matrix::Zero(2, 2), A}};
  CHECK_THROWS_AS(snr(single, 300), Error);
}

TEST_CASE("sample summaries") {
  auto s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK_THAT(s.sd, WithinAbs(std::sqrt(5.0 / 3.0), 1e-15));
  CHECK(summarize({7.0}).sd == 0.0);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("scenario catalog") {
  auto a = scenario_spec("A.1");
  CHECK(a.p == 20);
  CHECK(a.T == 300);
  CHECK(a.change_points() == std::vector<Index>{150});
  CHECK(a.ranks == std::vector<Index>{1, 3});
  CHECK(a.lowrank_jumps == std::vector<double>{0.10});
  CHECK(a.sparse_jumps == std::vector<double>{1.5});
  CHECK(a.gammas == std::vector<double>{0.25, 0.25});
  auto l2 = scenario_spec("L.2");
  CHECK(l2.T == 1800);
  CHECK(l2.change_points() == std::vector<Index>{180, 450, 720, 1080, 1440});
  CHECK(scenario_spec("L.1").change_points() == std::vector<Index>{200, 400, 600, 800, 1000});
  CHECK_THROWS_AS(scenario_spec("Z.9"), Error);
}

TEST_CASE("scenario models are stable and deterministic") {
  for (const auto& [name, spec] : scenario_catalog()) {
    auto s = build_scenario_model(spec, 1);
    CAPTURE(name);
    REQUIRE(s.model.segments.size() == spec.change_fractions.size() + 1);
    for (const auto& seg : s.model.segments) {
      CHECK(check_stability(seg.transition()));
      CHECK(seg.in_omega());
    }
    CHECK(s.model.change_points == spec.change_points());
  }
  auto x = generate_scenario("A.1", 3), y = generate_scenario("A.1", 3), z = generate_scenario("A.1", 4);
  CHECK(x.data.values() == y.data.values());
  CHECK(x.data.values() != z.data.values());
  CHECK(x.data.T() == 300);
  CHECK(x.data.p() == 20);
}

TEST_CASE("scenario calibration") {
  auto a = build_scenario_model(scenario_spec("A.1"), 2);
  for (const auto& seg : a.model.segments) CHECK_THAT(information_ratio(seg), WithinRel(0.25, 1e-9));
  for (auto [name, v] : {std::pair{"S.1", 0.8}, std::pair{"S.2", 1.0}, std::pair{"S.3", 1.6}}) {
    auto s = build_scenario_model(scenario_spec(name), 2);
    auto jumps = jump_sizes(s.model);
    double vmin = *std::min_element(jumps.begin(), jumps.end());
    CHECK_THAT(vmin, WithinRel(v * s.stability_scale, 1e-6));
  }
}
