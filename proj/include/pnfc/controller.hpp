#pragma once

#include <optional>

#include "pnfc/netmodel.hpp"
#include "pnfc/plant.hpp"
#include "pnfc/vec.hpp"

namespace pnfc {

// Cyber state of the decentralized controller: one multiplier per area,
// plus an optional shadow multiplier used by the mu == omega verification.
struct ControllerState {
  Vec lambda;
  std::optional<Vec> mu;
};

// Joint capacity box for (p_gen, p_load): lower/upper stacked as
// (gen..., load...), 2(n+1) entries each.
struct SaturationBox {
  Vec lower;
  Vec upper;

  static SaturationBox from(const NetworkModel& net);
};

double clamp_scalar(double x, double lo, double hi);

// Componentwise min-max projection onto the box.
Vec clamp(const Vec& value, const SaturationBox& box);

// Saturated decentralized control law. Each node's command uses only its own
// local state; the clamp applies to the inner expression, the droop
// compensation omega/R is added outside it. Pass saturate=false for the
// comparison controller without capacity limits.
ControlInput control_law(const PlantState& state, const ControllerState& ctrl,
                         const NetworkModel& net, bool saturate = true);

// Multiplier update from local surplus generation, disturbance known.
Vec lambda_rhs_ideal(const PlantState& state, const Vec& disturbance,
                     const NetworkModel& net);

// Multiplier update from locally measurable signals only: frequency, its
// derivative, and incident tie-line flows. Algebraically equal to the ideal
// form along exact trajectories.
Vec lambda_rhs_measured(const Vec& omega, const Vec& omega_dot,
                        const Vec& tie_flows, const NetworkModel& net);

}  // namespace pnfc
