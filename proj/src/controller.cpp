#include "pnfc/controller.hpp"

#include <stdexcept>

namespace pnfc {

SaturationBox SaturationBox::from(const NetworkModel& net) {
  const auto n = static_cast<std::size_t>(net.node_count());
  SaturationBox box;
  box.lower.resize(2 * n);
  box.upper.resize(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    box.lower[j] = a.pg_min;
    box.upper[j] = a.pg_max;
    box.lower[n + j] = a.pl_min;
    box.upper[n + j] = a.pl_max;
  }
  return box;
}

double clamp_scalar(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

Vec clamp(const Vec& value, const SaturationBox& box) {
  if (value.size() != box.lower.size() || value.size() != box.upper.size())
    throw std::invalid_argument("clamp: dimension mismatch");
  Vec out(value.size());
  for (std::size_t i = 0; i < value.size(); ++i)
    out[i] = clamp_scalar(value[i], box.lower[i], box.upper[i]);
  return out;
}

ControlInput control_law(const PlantState& state, const ControllerState& ctrl,
                         const NetworkModel& net, bool saturate) {
  const auto n = static_cast<std::size_t>(net.node_count());
  if (state.p_gen.size() != n || ctrl.lambda.size() != n)
    throw std::invalid_argument("control_law: dimension mismatch");
  ControlInput u;
  u.u_gen.resize(n);
  u.u_load.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    double g = state.p_gen[j], l = state.p_load[j];
    double w = state.omega[j], lam = ctrl.lambda[j];
    double inner_g = g - a.gamma_gen() * (a.cost_gen * g + w + lam);
    double inner_l = l - a.gamma_load() * (a.cost_load * l - w - lam);
    if (saturate) {
      inner_g = clamp_scalar(inner_g, a.pg_min, a.pg_max);
      inner_l = clamp_scalar(inner_l, a.pl_min, a.pl_max);
    }
    u.u_gen[j] = inner_g + w / a.droop;
    u.u_load[j] = inner_l;
  }
  return u;
}

Vec lambda_rhs_ideal(const PlantState& state, const Vec& disturbance,
                     const NetworkModel& net) {
  const auto n = static_cast<std::size_t>(net.node_count());
  if (disturbance.size() != n) throw std::invalid_argument("lambda_rhs_ideal: dimension mismatch");
  Vec d(n);
  for (std::size_t j = 0; j < n; ++j)
    d[j] = net.area(static_cast<int>(j)).gain_lambda *
           (state.p_gen[j] - state.p_load[j] - disturbance[j]);
  return d;
}

Vec lambda_rhs_measured(const Vec& omega, const Vec& omega_dot,
                        const Vec& tie_flows, const NetworkModel& net) {
  const auto n = static_cast<std::size_t>(net.node_count());
  if (omega.size() != n || omega_dot.size() != n ||
      tie_flows.size() != static_cast<std::size_t>(net.edge_count()))
    throw std::invalid_argument("lambda_rhs_measured: dimension mismatch");
  // Net flow out of each node: sum of flows on out-edges minus in-edges.
  Vec outflow(n, 0.0);
  const auto& edges = net.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    outflow[static_cast<std::size_t>(edges[e].from)] += tie_flows[e];
    outflow[static_cast<std::size_t>(edges[e].to)] -= tie_flows[e];
  }
  Vec d(n);
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    d[j] = a.gain_lambda * (a.inertia * omega_dot[j] + a.damping * omega[j] + outflow[j]);
  }
  return d;
}

}  // namespace pnfc
