// Simulates a two-change scenario, runs the two-step detector and the lasso
// surrogate, and prints the located change points next to the truth.

#include "lsvar/lsvar.hpp"

#include <iostream>

int main() {
  using namespace lsvar;
  ScenarioSpec spec = scenario_spec("N.1");
  spec.p = 8;
  spec.T = 240;
  auto sc = generate_scenario(spec, 7);

  DetectionSettings settings;
  settings.two_step.h = 60;

  std::cout << "truth:";
  for (Index c : sc.model.change_points) std::cout << ' ' << c;
  std::cout << '\n';
  for (Method m : {Method::two_step, Method::surrogate}) {
    auto report = run_detection(sc.data, m, settings);
    std::cout << to_string(m) << ":";
    for (Index c : report.detection.change_points) std::cout << ' ' << c;
    std::cout << "  (hausdorff " << hausdorff_directed(report.detection.change_points, sc.model.change_points)
              << ")\n";
  }
  return 0;
}
