#include "pnfc/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "pnfc/controller.hpp"

namespace pnfc {

std::string FeasibilityViolation::describe() const {
  if (below)
    return "node " + std::to_string(node) + ": p=" + std::to_string(p) +
           " < pg_min - pl_max = " + std::to_string(lower);
  return "node " + std::to_string(node) + ": p=" + std::to_string(p) +
         " > pg_max - pl_min = " + std::to_string(upper);
}

NodeSolution solve_pbo_node(double p, const AreaParams& a) {
  NodeSolution s;
  const double lo = a.pg_min - a.pl_max;
  const double hi = a.pg_max - a.pl_min;
  if (p < lo || p > hi) {
    s.feasible = false;
    s.violation = {-1, p, lo, hi, p < lo};
    return s;
  }
  s.feasible = true;

  // Response maps: g(lam) = clamp(-lam/a), l(lam) = clamp(lam/b). The balance
  // residual g(lam) - l(lam) - p is continuous and nonincreasing in lam.
  auto g_of = [&](double lam) { return clamp_scalar(-lam / a.cost_gen, a.pg_min, a.pg_max); };
  auto l_of = [&](double lam) { return clamp_scalar(lam / a.cost_load, a.pl_min, a.pl_max); };
  auto residual = [&](double lam) { return g_of(lam) - l_of(lam) - p; };

  const double radius = std::max(std::max(std::fabs(a.pg_min), std::fabs(a.pg_max)),
                                 std::max(std::fabs(a.pl_min), std::fabs(a.pl_max)));
  double span = std::max(a.cost_gen, a.cost_load) * (std::fabs(p) + radius) + 1.0;
  double left = -span, right = span;
  // residual(left) >= 0 >= residual(right) by construction of the bracket
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (left + right);
    if (residual(mid) >= 0.0)
      left = mid;
    else
      right = mid;
    if (std::fabs(residual(0.5 * (left + right))) < 1e-12 && right - left < 1e-9) break;
  }
  double lam = 0.5 * (left + right);

  // Snap to the closed-form solution when the unconstrained minimizer is
  // feasible (stationarity holds with lambda = -a g there, boundary or not).
  double g_int = a.cost_load * p / (a.cost_gen + a.cost_load);
  double l_int = -a.cost_gen * p / (a.cost_gen + a.cost_load);
  if (g_int >= a.pg_min && g_int <= a.pg_max && l_int >= a.pl_min && l_int <= a.pl_max) {
    s.p_gen = g_int;
    s.p_load = l_int;
    s.lambda = -a.cost_gen * g_int;
  } else {
    s.p_gen = g_of(lam);
    s.p_load = s.p_gen - p;  // exact balance; bisection leaves ~1e-12 slack
    s.lambda = lam;
    // Prefer the stationarity-implied multiplier when one side is interior.
    if (s.p_gen > a.pg_min && s.p_gen < a.pg_max)
      s.lambda = -a.cost_gen * s.p_gen;
    else if (s.p_load > a.pl_min && s.p_load < a.pl_max)
      s.lambda = a.cost_load * s.p_load;
  }
  s.gen_interior = s.p_gen > a.pg_min && s.p_gen < a.pg_max;
  s.load_interior = s.p_load > a.pl_min && s.p_load < a.pl_max;
  s.objective = 0.5 * a.cost_gen * s.p_gen * s.p_gen + 0.5 * a.cost_load * s.p_load * s.p_load;
  return s;
}

EquilibriumSolution solve_pbo(const NetworkModel& net, const Vec& disturbance) {
  const auto n = static_cast<std::size_t>(net.node_count());
  if (disturbance.size() != n) throw std::invalid_argument("solve_pbo: dimension mismatch");
  EquilibriumSolution out;
  out.p_gen.assign(n, 0.0);
  out.p_load.assign(n, 0.0);
  out.lambda.assign(n, 0.0);
  out.mu.assign(n, 0.0);
  out.omega.assign(n, 0.0);
  out.theta.assign(n, 0.0);
  out.gen_interior.assign(n, false);
  out.load_interior.assign(n, false);
  out.feasible = true;
  for (std::size_t j = 0; j < n; ++j) {
    NodeSolution s = solve_pbo_node(disturbance[j], net.area(static_cast<int>(j)));
    if (!s.feasible) {
      out.feasible = false;
      s.violation.node = static_cast<int>(j);
      out.violations.push_back(s.violation);
      continue;
    }
    out.p_gen[j] = s.p_gen;
    out.p_load[j] = s.p_load;
    out.lambda[j] = s.lambda;
    out.gen_interior[j] = s.gen_interior;
    out.load_interior[j] = s.load_interior;
    out.objective += s.objective;
  }
  if (!out.feasible) {
    out.objective = 0.0;
    return out;
  }
  PlantState x{out.theta, out.omega, out.p_gen, out.p_load};
  KktReport self = kkt_residuals(x, out.lambda, out.mu, net, disturbance, 1e-9);
  out.kkt_residual_mw.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const KktNodeReport& r = self.nodes[j];
    out.kkt_residual_mw[j] =
        std::max({r.stat_gen_mw, r.stat_load_mw, std::fabs(r.balance_residual),
                  std::fabs(r.network_residual), std::fabs(r.freq_mu_residual), r.box_violation});
  }
  return out;
}

namespace {

ActiveSide side_of(double x, double lo, double hi, double tol) {
  if (x <= lo + tol) return ActiveSide::lower;
  if (x >= hi - tol) return ActiveSide::upper;
  return ActiveSide::interior;
}

// Violation of the sign regime, in the raw stationarity units.
double regime_violation(double stat, ActiveSide side) {
  switch (side) {
    case ActiveSide::lower: return std::max(0.0, -stat);   // needs stat >= 0
    case ActiveSide::upper: return std::max(0.0, stat);    // needs stat <= 0
    case ActiveSide::interior: return std::fabs(stat);
  }
  return 0.0;
}

}  // namespace

KktReport kkt_residuals(const PlantState& x, const Vec& lambda, const Vec& mu,
                        const NetworkModel& net, const Vec& disturbance,
                        double tolerance_mw) {
  const auto n = static_cast<std::size_t>(net.node_count());
  KktReport rep;
  rep.tolerance_mw = tolerance_mw;
  rep.nodes.resize(n);
  rep.pass = true;

  Vec u = net.net_injection_imbalance(x.theta, x.omega);
  // (C B C^T) mu per node, reusing the imbalance form with zero damping part.
  Vec lap_mu(n, 0.0);
  for (const Edge& e : net.edges()) {
    double d = e.susceptance * (mu[static_cast<std::size_t>(e.from)] - mu[static_cast<std::size_t>(e.to)]);
    lap_mu[static_cast<std::size_t>(e.from)] += d;
    lap_mu[static_cast<std::size_t>(e.to)] -= d;
  }

  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    KktNodeReport& r = rep.nodes[j];
    double g = x.p_gen[j], l = x.p_load[j];

    r.stat_gen = a.cost_gen * g + mu[j] + lambda[j];
    r.stat_load = a.cost_load * l - mu[j] - lambda[j];
    r.gen_side = side_of(g, a.pg_min, a.pg_max, tolerance_mw);
    r.load_side = side_of(l, a.pl_min, a.pl_max, tolerance_mw);
    r.stat_gen_mw = regime_violation(r.stat_gen, r.gen_side) / a.cost_gen;
    r.stat_load_mw = regime_violation(r.stat_load, r.load_side) / a.cost_load;
    r.balance_residual = g - l - disturbance[j];
    r.network_residual = u[j];
    r.freq_mu_residual = a.damping * (x.omega[j] - mu[j]);
    r.mu_laplacian_residual = lap_mu[j];
    r.box_violation = std::max(
        std::max(a.pg_min - g, g - a.pg_max),
        std::max(a.pl_min - l, l - a.pl_max));
    r.box_violation = std::max(0.0, r.box_violation);

    double worst = std::max({r.stat_gen_mw, r.stat_load_mw, std::fabs(r.balance_residual),
                             std::fabs(r.network_residual), std::fabs(r.freq_mu_residual),
                             std::fabs(r.mu_laplacian_residual), r.box_violation});
    rep.worst_residual_mw = std::max(rep.worst_residual_mw, worst);
    r.pass = worst <= tolerance_mw;
    rep.pass = rep.pass && r.pass;
  }
  return rep;
}

UniquenessReport check_uniqueness_conditions(const NetworkModel& net, const Vec& disturbance) {
  const auto n = static_cast<std::size_t>(net.node_count());
  UniquenessReport rep;
  rep.nodes.resize(n);
  rep.certified = true;
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    UniquenessNodeReport& r = rep.nodes[j];
    r.margin_lower = disturbance[j] - (a.pg_min - a.pl_max);
    r.margin_upper = (a.pg_max - a.pl_min) - disturbance[j];
    r.strict = r.margin_lower > 0.0 && r.margin_upper > 0.0;
    NodeSolution s = solve_pbo_node(disturbance[j], a);
    r.interior_any = s.feasible && (s.gen_interior || s.load_interior);
    rep.certified = rep.certified && r.strict && r.interior_any;
  }
  return rep;
}

}  // namespace pnfc
