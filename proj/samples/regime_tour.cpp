// Walks the noise level through the three regimes of the default scenario
// and prints the optimal equilibrium and threshold at each point.

#include <cstdio>

#include "powerctl/powerctl.hpp"

int main() {
  using namespace powerctl;
  ModelParams params = default_scenario(0.05);
  const RegimeConstants c = n0_thresholds(params);
  std::printf("rho=%.2f  n0_1=%.6f  n0_0=%.6f\n", params.rho, c.n0_1, c.n0_0);

  for (double n0 : {0.5, 1.0, 10.0, 60.0}) {
    params.n0 = n0;
    const EquilibriumReport eq = optimal_equilibrium(params);
    const ThresholdPolicy policy = make_policy(eq, params);
    const Trajectory tr = integrate({0.25, 0.25, 0.25, 0.25}, policy.fluid_law(), 200.0, params);
    std::printf("N0=%5.1f  %-8s s4*=%.6f  E*=%.6f  pi=%.6f  m4(200)=%.6f\n", n0, to_string(eq.regime),
                eq.s4_star, eq.E_star, policy.pi, tr.samples.back().m[3]);
  }
}
