#pragma once

#include <string>
#include <vector>

#include "pnfc/netmodel.hpp"
#include "pnfc/plant.hpp"
#include "pnfc/vec.hpp"

namespace pnfc {

// One side of the per-node feasibility condition
//   pg_min - pl_max <= p_j <= pg_max - pl_min.
struct FeasibilityViolation {
  int node = -1;
  double p = 0.0;
  double lower = 0.0;   // pg_min - pl_max
  double upper = 0.0;   // pg_max - pl_min
  bool below = false;   // true: p < lower, false: p > upper
  std::string describe() const;
};

struct NodeSolution {
  bool feasible = false;
  double p_gen = 0.0;
  double p_load = 0.0;
  double lambda = 0.0;
  double objective = 0.0;
  bool gen_interior = false;
  bool load_interior = false;
  FeasibilityViolation violation;  // populated when infeasible
};

// Primal-dual optimum of the per-node balance problem. Frequencies and both
// multiplier classes that pair with them vanish at the optimum; angles are
// uniform (zero deviation under the reference convention).
struct EquilibriumSolution {
  bool feasible = false;
  Vec p_gen, p_load, lambda, mu, omega, theta;
  double objective = 0.0;
  std::vector<bool> gen_interior, load_interior;
  Vec kkt_residual_mw;  // per-node self-check, worst MW-scaled residual
  std::vector<FeasibilityViolation> violations;  // all infeasible nodes
};

// Minimize (1/2) a g^2 + (1/2) b l^2 subject to g - l = p and the capacity
// box, by monotone bisection of the balance residual over the multiplier.
NodeSolution solve_pbo_node(double p, const AreaParams& params);

EquilibriumSolution solve_pbo(const NetworkModel& net, const Vec& disturbance);

enum class ActiveSide { lower, interior, upper };

struct KktNodeReport {
  // Signed stationarity values a g + mu + lambda and b l - mu - lambda,
  // plus their magnitudes rescaled to MW (divided by the cost weight).
  double stat_gen = 0.0, stat_load = 0.0;
  double stat_gen_mw = 0.0, stat_load_mw = 0.0;
  ActiveSide gen_side = ActiveSide::interior;
  ActiveSide load_side = ActiveSide::interior;
  double balance_residual = 0.0;        // g - l - p
  double network_residual = 0.0;        // U_j(theta, omega)
  double freq_mu_residual = 0.0;        // D_j (omega_j - mu_j)
  double mu_laplacian_residual = 0.0;   // (C B C^T mu)_j
  double box_violation = 0.0;           // distance outside the capacity box
  bool pass = false;
};

struct KktReport {
  std::vector<KktNodeReport> nodes;
  double tolerance_mw = 0.0;
  bool pass = false;
  double worst_residual_mw = 0.0;  // max over all MW-scaled residuals
};

// Evaluates the stationarity, primal feasibility and sign-regime conditions
// at a candidate point. Stationarity magnitudes are compared in MW units
// (scaled by the cost weights); never throws, always returns the report.
KktReport kkt_residuals(const PlantState& x, const Vec& lambda, const Vec& mu,
                        const NetworkModel& net, const Vec& disturbance,
                        double tolerance_mw);

struct UniquenessNodeReport {
  double margin_lower = 0.0;  // p - (pg_min - pl_max)
  double margin_upper = 0.0;  // (pg_max - pl_min) - p
  bool strict = false;
  bool interior_any = false;  // optimum interior in gen or load
};

struct UniquenessReport {
  std::vector<UniquenessNodeReport> nodes;
  bool certified = false;  // strict feasibility margins and per-node interiority
};

UniquenessReport check_uniqueness_conditions(const NetworkModel& net, const Vec& disturbance);

}  // namespace pnfc
