#pragma once

#include "pnfc/oracle.hpp"
#include "pnfc/pdcore.hpp"
#include "pnfc/sim.hpp"

namespace pnfc {

enum class EquilibriumStatus { reached, not_reached, inconclusive };

struct EquilibriumDetection {
  EquilibriumStatus status = EquilibriumStatus::inconclusive;
  AugmentedState state;     // time-averaged tail state
  double max_derivative = 0.0;  // over the tail window
  double max_drift = 0.0;       // max deviation from the tail mean
  int tail_samples = 0;
};

// Settledness over the trailing 5% of the horizon: both the recomputed
// state derivative and the drift around the tail mean must stay under tol.
// Fewer than 10 tail samples is inconclusive, distinct from "not reached".
EquilibriumDetection detect_equilibrium(const TrajectoryRecord& record, double tol = 1e-6);

struct OptimalityCertificate {
  bool pass = false;
  bool oracle_feasible = false;
  double max_gen_gap_mw = 0.0;
  double max_load_gap_mw = 0.0;
  double max_multiplier_gap_mw = 0.0;  // |lambda - lambda*| / cost weight
  double max_omega = 0.0;
  double max_flow_mw = 0.0;
  double marginal_identity_mw = 0.0;   // worst interior-node identity residual
  KktReport kkt;
  EquilibriumSolution oracle;
};

// Compares a detected equilibrium against the independent solver, runs the
// KKT checker with mu taken as the frequency, and checks restoration plus
// the marginal-cost identity at interior nodes.
OptimalityCertificate certify_optimality(const AugmentedState& eq, const NetworkModel& net,
                                         const Vec& disturbance, double tol_mw,
                                         double omega_tol = 1e-6, double flow_tol = 1e-3);

struct LyapunovCheck {
  int samples = 0;               // samples with a Lyapunov value
  int violations = 0;            // increases beyond the drift tolerance
  double worst_increase = 0.0;
  int dissipation_violations = 0;
  double worst_dissipation_gap = 0.0;
  double value_at_end = 0.0;
};

// Monotonicity along the recorded trajectory, allowing per-step drift
// rel_tol*(1+|V|), plus the dissipation bound: the decrease must dominate
// the integral of the damping/cost-weighted derivative squares.
LyapunovCheck check_lyapunov_descent(const TrajectoryRecord& record, double rel_tol = 1e-7);

// Same detector applied to an artificially time-reversed value sequence;
// used to confirm the detector actually fires.
LyapunovCheck check_lyapunov_descent_reversed(const TrajectoryRecord& record,
                                              double rel_tol = 1e-7);

struct SaturationComparison {
  double excursion_saturated = 0.0;    // recorded-state distance outside the box
  double excursion_unsaturated = 0.0;
  double preclamp_overshoot = 0.0;     // saturated run telemetry
  double endpoint_gap_mw = 0.0;        // power-state gap at the horizon
  bool saturated_within_box = false;
};

// Both records must come from the same scenario apart from the controller
// mode; anything else is rejected.
SaturationComparison compare_saturation(const TrajectoryRecord& saturated,
                                        const TrajectoryRecord& unsaturated);

struct CertificationReport {
  EquilibriumDetection detection;
  OptimalityCertificate optimality;
  LyapunovCheck lyapunov;
  double max_mu_gap = 0.0;        // NaN when the shadow multiplier is untracked
  double max_overshoot = 0.0;
  double max_lambda_residual = 0.0;
  double formulation_gap = 0.0;   // NaN unless a "both" run was compared
  bool certified = false;
};

// Full post-run certification used by the verify command.
CertificationReport certify_run(const RunOutput& run, double tol_mw,
                                double omega_tol = 1e-6, double flow_tol = 1e-3);

// Relative gap between the shared components of two records of the same
// scenario (used for the physical-vs-projected equivalence check).
double formulation_gap(const TrajectoryRecord& a, const TrajectoryRecord& b);

}  // namespace pnfc
