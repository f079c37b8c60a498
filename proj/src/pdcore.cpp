#include "pnfc/pdcore.hpp"

#include <cmath>
#include <stdexcept>

#include "pnfc/controller.hpp"
#include "pnfc/errors.hpp"

namespace pnfc {

AugmentedState AugmentedState::zero(const NetworkModel& net) {
  AugmentedState w;
  w.theta_tilde.assign(static_cast<std::size_t>(net.edge_count()), 0.0);
  const auto n = static_cast<std::size_t>(net.node_count());
  w.omega.assign(n, 0.0);
  w.p_gen.assign(n, 0.0);
  w.p_load.assign(n, 0.0);
  w.lambda.assign(n, 0.0);
  return w;
}

AugmentedState AugmentedState::from_physical(const PlantState& x, const Vec& lambda,
                                             const NetworkModel& net) {
  AugmentedState w = zero(net);
  const auto& edges = net.edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    w.theta_tilde[e] = x.theta[static_cast<std::size_t>(edges[e].from)] -
                       x.theta[static_cast<std::size_t>(edges[e].to)];
  w.omega = x.omega;
  w.p_gen = x.p_gen;
  w.p_load = x.p_load;
  w.lambda = lambda;
  return w;
}

AugmentedState AugmentedState::from_equilibrium(const EquilibriumSolution& eq,
                                                const NetworkModel& net) {
  AugmentedState w = zero(net);
  w.p_gen = eq.p_gen;
  w.p_load = eq.p_load;
  w.lambda = eq.lambda;
  return w;
}

Vec AugmentedState::flatten() const {
  Vec out;
  out.reserve(size());
  for (const Vec* b : {&theta_tilde, &omega, &p_gen, &p_load, &lambda})
    out.insert(out.end(), b->begin(), b->end());
  return out;
}

AugmentedState AugmentedState::unflatten(const Vec& w, const NetworkModel& net) {
  AugmentedState out = zero(net);
  const auto m = static_cast<std::size_t>(net.edge_count());
  const auto n = static_cast<std::size_t>(net.node_count());
  if (w.size() != m + 4 * n) throw std::invalid_argument("unflatten: wrong length");
  std::size_t at = 0;
  for (Vec* b : {&out.theta_tilde, &out.omega, &out.p_gen, &out.p_load, &out.lambda}) {
    std::copy(w.begin() + static_cast<std::ptrdiff_t>(at),
              w.begin() + static_cast<std::ptrdiff_t>(at + b->size()), b->begin());
    at += b->size();
  }
  return out;
}

GainMatrix GainMatrix::prescribed(const NetworkModel& net) {
  GainMatrix g;
  for (const Edge& e : net.edges()) g.diag.push_back(1.0 / std::sqrt(e.susceptance));
  for (const AreaParams& a : net.areas()) g.diag.push_back(1.0 / std::sqrt(a.inertia));
  for (const AreaParams& a : net.areas()) g.diag.push_back(1.0 / a.t_gen);
  for (const AreaParams& a : net.areas()) g.diag.push_back(1.0 / a.t_load);
  for (const AreaParams& a : net.areas()) g.diag.push_back(std::sqrt(a.gain_lambda));
  g.k = 0.5 * g.min_diag_sq();
  return g;
}

double GainMatrix::min_diag_sq() const {
  double m = diag.empty() ? 0.0 : diag[0] * diag[0];
  for (double d : diag) m = std::min(m, d * d);
  return m;
}

namespace {

// C B theta_tilde accumulated per node.
Vec laplacian_times_tilde(const AugmentedState& w, const NetworkModel& net) {
  Vec out(static_cast<std::size_t>(net.node_count()), 0.0);
  const auto& edges = net.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double v = edges[e].susceptance * w.theta_tilde[e];
    out[static_cast<std::size_t>(edges[e].from)] += v;
    out[static_cast<std::size_t>(edges[e].to)] -= v;
  }
  return out;
}

void check_dims(const AugmentedState& w, const NetworkModel& net, const Vec& p) {
  const auto n = static_cast<std::size_t>(net.node_count());
  if (w.theta_tilde.size() != static_cast<std::size_t>(net.edge_count()) ||
      w.omega.size() != n || w.p_gen.size() != n || w.p_load.size() != n ||
      w.lambda.size() != n || p.size() != n)
    throw std::invalid_argument("augmented state dimension mismatch");
}

}  // namespace

AugmentedState pd_field(const AugmentedState& w, const NetworkModel& net, const Vec& p) {
  check_dims(w, net, p);
  AugmentedState f = AugmentedState::zero(net);
  const auto& edges = net.edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    f.theta_tilde[e] = -std::sqrt(edges[e].susceptance) *
                       (w.omega[static_cast<std::size_t>(edges[e].from)] -
                        w.omega[static_cast<std::size_t>(edges[e].to)]);
  Vec cb = laplacian_times_tilde(w, net);
  const auto n = static_cast<std::size_t>(net.node_count());
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    double imbalance = w.p_gen[j] - w.p_load[j] - p[j];
    f.omega[j] = -(imbalance - a.damping * w.omega[j] - cb[j]) / std::sqrt(a.inertia);
    f.p_gen[j] = (a.cost_gen * w.p_gen[j] + w.omega[j] + w.lambda[j]) / a.t_gen;
    f.p_load[j] = (a.cost_load * w.p_load[j] - w.omega[j] - w.lambda[j]) / a.t_load;
    f.lambda[j] = -std::sqrt(a.gain_lambda) * imbalance;
  }
  return f;
}

double lagrangian(const AugmentedState& w, const NetworkModel& net, const Vec& p) {
  check_dims(w, net, p);
  Vec cb = laplacian_times_tilde(w, net);
  const auto n = static_cast<std::size_t>(net.node_count());
  double v = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    double imbalance = w.p_gen[j] - w.p_load[j] - p[j];
    v += 0.5 * (a.cost_gen * w.p_gen[j] * w.p_gen[j] +
                a.cost_load * w.p_load[j] * w.p_load[j] -
                a.damping * w.omega[j] * w.omega[j]);
    v += w.lambda[j] * imbalance;
    v += w.omega[j] * (imbalance - cb[j]);
  }
  return v;
}

AugmentedState projected_step(const AugmentedState& w, const NetworkModel& net, const Vec& p) {
  AugmentedState f = pd_field(w, net, p);
  AugmentedState h = AugmentedState::zero(net);
  for (std::size_t e = 0; e < w.theta_tilde.size(); ++e)
    h.theta_tilde[e] = w.theta_tilde[e] - f.theta_tilde[e];
  const auto n = w.omega.size();
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    h.omega[j] = w.omega[j] - f.omega[j];
    h.p_gen[j] = clamp_scalar(w.p_gen[j] - f.p_gen[j], a.pg_min, a.pg_max);
    h.p_load[j] = clamp_scalar(w.p_load[j] - f.p_load[j], a.pl_min, a.pl_max);
    h.lambda[j] = w.lambda[j] - f.lambda[j];
  }
  return h;
}

AugmentedState closed_loop_rhs(const AugmentedState& w, const NetworkModel& net,
                               const Vec& p, const GainMatrix& gains) {
  AugmentedState h = projected_step(w, net, p);
  const Vec wf = w.flatten(), hf = h.flatten();
  Vec df(wf.size());
  for (std::size_t i = 0; i < wf.size(); ++i) df[i] = gains.diag[i] * (hf[i] - wf[i]);
  return AugmentedState::unflatten(df, net);
}

double lyapunov_value(const AugmentedState& w, const AugmentedState& w_star,
                      const NetworkModel& net, const Vec& p,
                      const GainMatrix& gains, double fixed_point_tol) {
  if (!(gains.k > 0.0) || !(gains.k < gains.min_diag_sq()))
    throw ValidationError("lyapunov gain constant k outside (0, min diag^2)");
  if (fixed_point_residual(w_star, net, p) >= fixed_point_tol)
    throw ValidationError("reference point is not an equilibrium within tolerance");

  AugmentedState f = pd_field(w, net, p);
  AugmentedState h = projected_step(w, net, p);
  const Vec wf = w.flatten(), ff = f.flatten(), hf = h.flatten(), sf = w_star.flatten();
  double v = 0.0;
  for (std::size_t i = 0; i < wf.size(); ++i) {
    double r = hf[i] - wf[i];
    v += -r * ff[i] - 0.5 * r * r;
  }
  for (std::size_t i = 0; i < wf.size(); ++i) {
    double d = wf[i] - sf[i];
    v += 0.5 * gains.k * d * d / (gains.diag[i] * gains.diag[i]);
  }
  return v;
}

double grad_field_quadratic_form(const AugmentedState& dw, const NetworkModel& net) {
  const auto n = static_cast<std::size_t>(net.node_count());
  const auto& edges = net.edges();
  Vec row_tt(dw.theta_tilde.size());
  for (std::size_t e = 0; e < edges.size(); ++e)
    row_tt[e] = -edges[e].susceptance *
                (dw.omega[static_cast<std::size_t>(edges[e].from)] -
                 dw.omega[static_cast<std::size_t>(edges[e].to)]);
  Vec cb(n, 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double v = edges[e].susceptance * dw.theta_tilde[e];
    cb[static_cast<std::size_t>(edges[e].from)] += v;
    cb[static_cast<std::size_t>(edges[e].to)] -= v;
  }
  double q = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) q += dw.theta_tilde[e] * row_tt[e];
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    double row_om = cb[j] + a.damping * dw.omega[j] - dw.p_gen[j] + dw.p_load[j];
    double row_g = dw.omega[j] + a.cost_gen * dw.p_gen[j] + dw.lambda[j];
    double row_l = -dw.omega[j] + a.cost_load * dw.p_load[j] - dw.lambda[j];
    double row_lam = -dw.p_gen[j] + dw.p_load[j];
    q += dw.omega[j] * row_om + dw.p_gen[j] * row_g + dw.p_load[j] * row_l +
         dw.lambda[j] * row_lam;
  }
  return q;
}

double fixed_point_residual(const AugmentedState& w, const NetworkModel& net, const Vec& p) {
  AugmentedState h = projected_step(w, net, p);
  return linf_diff(h.flatten(), w.flatten());
}

}  // namespace pnfc
