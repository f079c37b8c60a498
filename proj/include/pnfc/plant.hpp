#pragma once

#include "pnfc/netmodel.hpp"
#include "pnfc/vec.hpp"

namespace pnfc {

// Physical state in deviation coordinates: rotor angles, frequencies,
// generation and controllable load. All vectors have one entry per node.
struct PlantState {
  Vec theta;   // rad
  Vec omega;   // rad/s
  Vec p_gen;   // MW
  Vec p_load;  // MW

  static PlantState zero(int node_count) {
    auto n = static_cast<std::size_t>(node_count);
    return {Vec(n, 0.0), Vec(n, 0.0), Vec(n, 0.0), Vec(n, 0.0)};
  }
};

struct ControlInput {
  Vec u_gen;   // MW
  Vec u_load;  // MW
};

// Open-loop right-hand side: swing equation plus first-order generation and
// load actuators. The tie-line coupling is accumulated edge by edge.
PlantState plant_rhs(const PlantState& state, const ControlInput& input,
                     const NetworkModel& net, const Vec& disturbance);

}  // namespace pnfc
