#pragma once

#include "pnfc/netmodel.hpp"
#include "pnfc/oracle.hpp"
#include "pnfc/plant.hpp"
#include "pnfc/vec.hpp"

namespace pnfc {

// Stacked closed-loop state (theta_tilde, omega, p_gen, p_load, lambda),
// where theta_tilde = C^T theta holds the edge angle differences.
struct AugmentedState {
  Vec theta_tilde;  // m entries
  Vec omega, p_gen, p_load, lambda;  // n+1 entries each

  static AugmentedState zero(const NetworkModel& net);
  static AugmentedState from_physical(const PlantState& x, const Vec& lambda,
                                      const NetworkModel& net);
  static AugmentedState from_equilibrium(const EquilibriumSolution& eq,
                                         const NetworkModel& net);

  std::size_t size() const {
    return theta_tilde.size() + omega.size() + p_gen.size() + p_load.size() + lambda.size();
  }
  Vec flatten() const;
  static AugmentedState unflatten(const Vec& w, const NetworkModel& net);
};

// Diagonal gain of the projected flow plus the Lyapunov constant k,
// constrained by k < min_i (gamma_ii)^2.
struct GainMatrix {
  Vec diag;  // blocks 1/sqrt(B), 1/sqrt(M), 1/Tg, 1/Tl, sqrt(gain_lambda)
  double k = 0.0;

  static GainMatrix prescribed(const NetworkModel& net);
  double min_diag_sq() const;
};

// The five stacked blocks of the flow field; w - F(w) is what gets projected.
AugmentedState pd_field(const AugmentedState& w, const NetworkModel& net, const Vec& disturbance);

// Lagrangian with the second multiplier identified with the frequency.
// Convex in (theta_tilde, p_gen, p_load), concave in (lambda, omega).
double lagrangian(const AugmentedState& w, const NetworkModel& net, const Vec& disturbance);

// Euclidean projection of w - F(w) onto the constraint set: only the
// (p_gen, p_load) blocks are ever altered.
AugmentedState projected_step(const AugmentedState& w, const NetworkModel& net,
                              const Vec& disturbance);

// Closed-loop flow: gains * (projected_step(w) - w).
AugmentedState closed_loop_rhs(const AugmentedState& w, const NetworkModel& net,
                               const Vec& disturbance, const GainMatrix& gains);

// Merit-plus-distance Lyapunov value; nonnegative on the constraint set and
// zero exactly at equilibria. w_star must be a fixed point of the projection
// within fixed_point_tol, else the certificate is invalid and this throws.
double lyapunov_value(const AugmentedState& w, const AugmentedState& w_star,
                      const NetworkModel& net, const Vec& disturbance,
                      const GainMatrix& gains, double fixed_point_tol = 1e-8);

// Quadratic form dw^T (gains^{-1} grad F) dw. The skew part cancels, so the
// value reduces to the damping/cost-weighted squares of the (omega, p_gen,
// p_load) components; evaluated matrix-free from the block structure.
double grad_field_quadratic_form(const AugmentedState& dw, const NetworkModel& net);

// Max-norm of the fixed-point residual projected_step(w) - w.
double fixed_point_residual(const AugmentedState& w, const NetworkModel& net,
                            const Vec& disturbance);

}  // namespace pnfc
