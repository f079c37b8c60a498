#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pnfc/pdcore.hpp"
#include "pnfc/scenario.hpp"
#include "pnfc/vec.hpp"

namespace pnfc {

// Sampled closed-loop trajectory. Angles are stored as edge differences
// (theta_tilde), which both formulations share; tie flows are B theta_tilde.
// Immutable once produced.
struct TrajectoryRecord {
  Scenario scenario;
  Formulation formulation = Formulation::physical;

  Vec times;
  std::vector<Vec> theta_tilde;  // per sample, one entry per edge
  std::vector<Vec> omega, p_gen, p_load, lambda;  // per sample, per node
  std::vector<Vec> mu;           // shadow multiplier (physical form with track_mu)
  Vec v1;                        // Lyapunov value; NaN where unavailable
  Vec mu_gap;                    // max |mu - omega| per sample; NaN if untracked
  Vec lambda_residual;           // |measured - ideal| multiplier update gap
  Vec overshoot;                 // max pre-clamp box excursion since previous sample

  double max_overshoot = 0.0;
  int overshoot_warnings = 0;    // steps with excursion > 1e-6 * box width
  bool v1_available = false;
  bool reference_available = false;
  AugmentedState reference;      // equilibrium used for the Lyapunov value

  int samples() const { return static_cast<int>(times.size()); }
  Vec flows_at(int sample) const;  // B * theta_tilde
  AugmentedState state_at(int sample, const NetworkModel& net) const;
};

// Post-step capacity guard: clamps (p_gen, p_load) back into the box and
// reports the pre-clamp excursion. An excursion beyond 1e-6 of the box width
// means the step size is too large for the nonsmooth boundary and is flagged.
struct StepGuardResult {
  double overshoot = 0.0;
  bool step_too_large = false;
};
StepGuardResult apply_step_guard(Vec& p_gen, Vec& p_load, const NetworkModel& net);

// Fixed-step explicit 4th-order Runge-Kutta integration of one formulation.
// Disturbance steps are snapped to the step grid and held constant within a
// step. In saturated modes the step guard runs after every step.
TrajectoryRecord integrate(const Scenario& scenario, Formulation formulation);

// Honors scenario.formulation; throws on "both" (use run_scenario).
TrajectoryRecord integrate(const Scenario& scenario);

struct RunOutput {
  TrajectoryRecord primary;                  // the scenario's own formulation
  std::optional<TrajectoryRecord> projected;  // second leg of a "both" run
};

RunOutput run_scenario(const Scenario& scenario);

// CSV export: t, omega_<j>, pg_<j>, pl_<j>, lambda_<j>, flow_<i>_<j>, V1.
// Deviation units; actual_values shifts the power columns by the scenario's
// initial operating point.
void write_trajectory(const TrajectoryRecord& record, const std::string& path,
                      bool actual_values = false);

// Derivative of the recorded state at a sample, recomputed from the
// closed-loop right-hand side (mode- and gain-aware). Flat layout
// (theta_tilde, omega, p_gen, p_load, lambda).
Vec derivative_at_sample(const TrajectoryRecord& record, int sample, const NetworkModel& net);

}  // namespace pnfc
