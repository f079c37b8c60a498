#include "pnfc/plant.hpp"

#include <stdexcept>

namespace pnfc {

PlantState plant_rhs(const PlantState& state, const ControlInput& input,
                     const NetworkModel& net, const Vec& disturbance) {
  const auto n = static_cast<std::size_t>(net.node_count());
  if (state.theta.size() != n || state.omega.size() != n || state.p_gen.size() != n ||
      state.p_load.size() != n || input.u_gen.size() != n || input.u_load.size() != n ||
      disturbance.size() != n)
    throw std::invalid_argument("plant_rhs: dimension mismatch");

  PlantState d = PlantState::zero(net.node_count());

  // Net tie-line inflow per node.
  Vec inflow(n, 0.0);
  for (const Edge& e : net.edges()) {
    double flow = e.susceptance *
                  (state.theta[static_cast<std::size_t>(e.from)] -
                   state.theta[static_cast<std::size_t>(e.to)]);
    inflow[static_cast<std::size_t>(e.from)] -= flow;
    inflow[static_cast<std::size_t>(e.to)] += flow;
  }

  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    d.theta[j] = state.omega[j];
    d.omega[j] = (state.p_gen[j] - state.p_load[j] - disturbance[j] -
                  a.damping * state.omega[j] + inflow[j]) /
                 a.inertia;
    d.p_gen[j] = (-state.p_gen[j] + input.u_gen[j] - state.omega[j] / a.droop) / a.t_gen;
    d.p_load[j] = (-state.p_load[j] + input.u_load[j]) / a.t_load;
  }
  return d;
}

}  // namespace pnfc
