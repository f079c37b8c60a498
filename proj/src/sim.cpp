#include "pnfc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "pnfc/controller.hpp"
#include "pnfc/errors.hpp"
#include "pnfc/oracle.hpp"

namespace pnfc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Disturbance schedule with step times snapped to the integration grid.
struct SnappedSchedule {
  std::vector<long long> step;  // grid index per event
  std::vector<int> node;
  std::vector<double> delta;

  SnappedSchedule(const Scenario& s) {
    for (const DisturbanceStep& d : s.disturbances) {
      step.push_back(std::llround(d.t / s.integrator.h));
      node.push_back(d.node);
      delta.push_back(d.delta_mw);
    }
  }

  Vec at(long long k, int node_count) const {
    Vec p(static_cast<std::size_t>(node_count), 0.0);
    for (std::size_t i = 0; i < step.size(); ++i)
      if (step[i] <= k) p[static_cast<std::size_t>(node[i])] += delta[i];
    return p;
  }
};

struct NodeConsts {
  double inertia, inv_m, damping, droop, cost_gen, cost_load, t_gen, t_load;
  double gamma_g, gamma_l, gain_lambda;
  double pg_min, pg_max, pl_min, pl_max;
};

std::vector<NodeConsts> node_consts(const NetworkModel& net) {
  std::vector<NodeConsts> out;
  for (const AreaParams& a : net.areas())
    out.push_back({a.inertia, 1.0 / a.inertia, a.damping, a.droop, a.cost_gen, a.cost_load,
                   a.t_gen, a.t_load, a.gamma_gen(), a.gamma_load(), a.gain_lambda,
                   a.pg_min, a.pg_max, a.pl_min, a.pl_max});
  return out;
}

// Physical-form right-hand side over the flat layout
// (theta, omega, p_gen, p_load, lambda [, mu]); mirrors the composition of
// control_law, plant_rhs and the multiplier updates term for term.
class PhysicalRhs {
public:
  PhysicalRhs(const NetworkModel& net, const Scenario& s)
      : net_(net), nc_(node_consts(net)), n_(static_cast<std::size_t>(net.node_count())),
        mode_(s.mode), track_mu_(s.track_mu), estimator_(s.estimator) {}

  std::size_t state_size() const { return (track_mu_ ? 6 : 5) * n_; }

  void operator()(const Vec& x, const Vec& p, const Vec& omega_dot_est, Vec& dx) const {
    const double* theta = x.data();
    const double* omega = theta + n_;
    const double* g = omega + n_;
    const double* l = g + n_;
    const double* lam = l + n_;
    double* dtheta = dx.data();
    double* domega = dtheta + n_;
    double* dg = domega + n_;
    double* dl = dg + n_;
    double* dlam = dl + n_;

    Vec inflow(n_, 0.0);
    for (const Edge& e : net_.edges()) {
      double flow = e.susceptance * (theta[e.from] - theta[e.to]);
      inflow[static_cast<std::size_t>(e.from)] -= flow;
      inflow[static_cast<std::size_t>(e.to)] += flow;
    }

    const bool saturate = mode_ != ControllerMode::unsaturated;
    for (std::size_t j = 0; j < n_; ++j) {
      const NodeConsts& c = nc_[j];
      double inner_g = g[j] - c.gamma_g * (c.cost_gen * g[j] + omega[j] + lam[j]);
      double inner_l = l[j] - c.gamma_l * (c.cost_load * l[j] - omega[j] - lam[j]);
      if (saturate) {
        inner_g = clamp_scalar(inner_g, c.pg_min, c.pg_max);
        inner_l = clamp_scalar(inner_l, c.pl_min, c.pl_max);
      }
      double u_g = inner_g + omega[j] / c.droop;
      dtheta[j] = omega[j];
      domega[j] = (g[j] - l[j] - p[j] - c.damping * omega[j] + inflow[j]) * c.inv_m;
      dg[j] = (-g[j] + u_g - omega[j] / c.droop) / c.t_gen;
      dl[j] = (-l[j] + inner_l) / c.t_load;

      if (mode_ == ControllerMode::ideal) {
        dlam[j] = c.gain_lambda * (g[j] - l[j] - p[j]);
      } else {
        double wdot = estimator_ == OmegaDotEstimator::exact ? domega[j] : omega_dot_est[j];
        dlam[j] = c.gain_lambda *
                  (c.inertia * wdot + c.damping * omega[j] - inflow[j]);
      }
    }

    if (track_mu_) {
      double* dmu = dlam + n_;
      // Dense Laplacian product; the frequency update uses the edge-sum form.
      const auto& lap = net_.laplacian();
      for (std::size_t j = 0; j < n_; ++j) {
        double net_term = 0.0;
        for (std::size_t kcol = 0; kcol < n_; ++kcol) net_term += lap[j][kcol] * theta[kcol];
        double u = nc_[j].damping * omega[j] + net_term;
        dmu[j] = (g[j] - l[j] - p[j] - u) * nc_[j].inv_m;
      }
    }
  }

private:
  const NetworkModel& net_;
  std::vector<NodeConsts> nc_;
  std::size_t n_;
  ControllerMode mode_;
  bool track_mu_;
  OmegaDotEstimator estimator_;
};

// Projected-form right-hand side over (theta_tilde, omega, p_gen, p_load,
// lambda); mirrors closed_loop_rhs term for term.
class ProjectedRhs {
public:
  ProjectedRhs(const NetworkModel& net, const Scenario& s)
      : net_(net), nc_(node_consts(net)), n_(static_cast<std::size_t>(net.node_count())),
        m_(static_cast<std::size_t>(net.edge_count())),
        saturate_(s.mode != ControllerMode::unsaturated) {
    for (const Edge& e : net_.edges()) sqrt_b_.push_back(std::sqrt(e.susceptance));
    for (const AreaParams& a : net_.areas()) {
      sqrt_inv_m_.push_back(1.0 / std::sqrt(a.inertia));
      sqrt_gl_.push_back(std::sqrt(a.gain_lambda));
    }
  }

  std::size_t state_size() const { return m_ + 4 * n_; }

  void operator()(const Vec& w, const Vec& p, const Vec&, Vec& dw) const {
    const double* tt = w.data();
    const double* omega = tt + m_;
    const double* g = omega + n_;
    const double* l = g + n_;
    const double* lam = l + n_;
    double* dtt = dw.data();
    double* domega = dtt + m_;
    double* dg = domega + n_;
    double* dl = dg + n_;
    double* dlam = dl + n_;

    Vec cb(n_, 0.0);
    const auto& edges = net_.edges();
    for (std::size_t e = 0; e < m_; ++e) {
      double v = edges[e].susceptance * tt[e];
      cb[static_cast<std::size_t>(edges[e].from)] += v;
      cb[static_cast<std::size_t>(edges[e].to)] -= v;
    }
    for (std::size_t e = 0; e < m_; ++e) {
      double f = -sqrt_b_[e] * (omega[edges[e].from] - omega[edges[e].to]);
      dtt[e] = (1.0 / sqrt_b_[e]) * (-f);
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const NodeConsts& c = nc_[j];
      double imbalance = g[j] - l[j] - p[j];
      double f_om = -(imbalance - c.damping * omega[j] - cb[j]) * sqrt_inv_m_[j];
      double f_g = (c.cost_gen * g[j] + omega[j] + lam[j]) / c.t_gen;
      double f_l = (c.cost_load * l[j] - omega[j] - lam[j]) / c.t_load;
      double f_lam = -sqrt_gl_[j] * imbalance;
      double h_g = g[j] - f_g;
      double h_l = l[j] - f_l;
      if (saturate_) {
        h_g = clamp_scalar(h_g, c.pg_min, c.pg_max);
        h_l = clamp_scalar(h_l, c.pl_min, c.pl_max);
      }
      domega[j] = sqrt_inv_m_[j] * (-f_om);
      dg[j] = (h_g - g[j]) / c.t_gen;
      dl[j] = (h_l - l[j]) / c.t_load;
      dlam[j] = sqrt_gl_[j] * (-f_lam);
    }
  }

private:
  const NetworkModel& net_;
  std::vector<NodeConsts> nc_;
  std::size_t n_, m_;
  bool saturate_;
  Vec sqrt_b_, sqrt_inv_m_, sqrt_gl_;
};

const char* component_name(std::size_t i, std::size_t n, std::size_t m, bool physical) {
  static thread_local std::string buf;
  const char* names_phys[] = {"theta", "omega", "p_gen", "p_load", "lambda", "mu"};
  const char* names_proj[] = {"theta_tilde", "omega", "p_gen", "p_load", "lambda"};
  if (physical) {
    buf = std::string(names_phys[i / n]) + "_" + std::to_string(i % n);
  } else {
    if (i < m)
      buf = "theta_tilde_" + std::to_string(i);
    else
      buf = std::string(names_proj[1 + (i - m) / n]) + "_" + std::to_string((i - m) % n);
  }
  return buf.c_str();
}

template <typename Rhs>
void rk4_step(const Rhs& rhs, Vec& x, const Vec& p, const Vec& est, double h,
              Vec& k1, Vec& k2, Vec& k3, Vec& k4, Vec& xtmp) {
  const std::size_t n = x.size();
  rhs(x, p, est, k1);
  for (std::size_t i = 0; i < n; ++i) xtmp[i] = x[i] + 0.5 * h * k1[i];
  rhs(xtmp, p, est, k2);
  for (std::size_t i = 0; i < n; ++i) xtmp[i] = x[i] + 0.5 * h * k2[i];
  rhs(xtmp, p, est, k3);
  for (std::size_t i = 0; i < n; ++i) xtmp[i] = x[i] + h * k3[i];
  rhs(xtmp, p, est, k4);
  for (std::size_t i = 0; i < n; ++i)
    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

StepGuardResult apply_step_guard(Vec& p_gen, Vec& p_load, const NetworkModel& net) {
  StepGuardResult res;
  const auto n = static_cast<std::size_t>(net.node_count());
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    double eg = std::max(a.pg_min - p_gen[j], p_gen[j] - a.pg_max);
    double el = std::max(a.pl_min - p_load[j], p_load[j] - a.pl_max);
    if (eg > 0.0) {
      res.overshoot = std::max(res.overshoot, eg);
      if (eg > 1e-6 * (a.pg_max - a.pg_min)) res.step_too_large = true;
      p_gen[j] = clamp_scalar(p_gen[j], a.pg_min, a.pg_max);
    }
    if (el > 0.0) {
      res.overshoot = std::max(res.overshoot, el);
      if (el > 1e-6 * (a.pl_max - a.pl_min)) res.step_too_large = true;
      p_load[j] = clamp_scalar(p_load[j], a.pl_min, a.pl_max);
    }
  }
  return res;
}

Vec TrajectoryRecord::flows_at(int sample) const {
  const Vec& tt = theta_tilde[static_cast<std::size_t>(sample)];
  Vec f(tt.size());
  for (std::size_t e = 0; e < tt.size(); ++e) f[e] = scenario.edges[e].susceptance * tt[e];
  return f;
}

AugmentedState TrajectoryRecord::state_at(int sample, const NetworkModel& net) const {
  AugmentedState w = AugmentedState::zero(net);
  auto s = static_cast<std::size_t>(sample);
  w.theta_tilde = theta_tilde[s];
  w.omega = omega[s];
  w.p_gen = p_gen[s];
  w.p_load = p_load[s];
  w.lambda = lambda[s];
  return w;
}

TrajectoryRecord integrate(const Scenario& scenario, Formulation formulation) {
  if (formulation == Formulation::both)
    throw std::invalid_argument("integrate: pick one formulation (see run_scenario)");
  NetworkModel net = scenario.network();
  const auto n = static_cast<std::size_t>(net.node_count());
  const auto m = static_cast<std::size_t>(net.edge_count());
  const bool physical = formulation == Formulation::physical;
  const bool saturate = scenario.mode != ControllerMode::unsaturated;
  const bool prescribed = net.all_prescribed_gains();

  if (!physical && !prescribed)
    throw ValidationError("projected formulation requires the prescribed actuator gains");

  const double h = scenario.integrator.h;
  const long long steps = std::llround(scenario.integrator.horizon / h);
  const long long stride = std::max<long long>(1, std::llround(scenario.integrator.sample / h));

  TrajectoryRecord rec;
  rec.scenario = scenario;
  rec.formulation = formulation;

  // Reference equilibrium for the Lyapunov value (post-schedule disturbance).
  GainMatrix gains = GainMatrix::prescribed(net);
  Vec p_final = scenario.final_disturbance();
  EquilibriumSolution eq = solve_pbo(net, p_final);
  long long ref_step = std::llround(scenario.last_disturbance_time() / h);
  if (eq.feasible && prescribed) {
    AugmentedState wstar = AugmentedState::from_equilibrium(eq, net);
    if (fixed_point_residual(wstar, net, p_final) < 1e-8) {
      rec.reference_available = true;
      rec.reference = wstar;
      rec.v1_available = true;
    }
  }

  SnappedSchedule schedule(scenario);
  PhysicalRhs phys(net, scenario);
  ProjectedRhs proj(net, scenario);
  const std::size_t nx = physical ? phys.state_size() : proj.state_size();
  Vec x(nx, 0.0), k1(nx), k2(nx), k3(nx), k4(nx), xtmp(nx);
  Vec omega_dot_est(n, 0.0), omega_prev(n, 0.0), g_buf(n), l_buf(n);

  const std::size_t off_tt = 0;
  const std::size_t off_omega = physical ? n : m;
  const std::size_t off_g = off_omega + n;
  const std::size_t off_l = off_g + n;
  const std::size_t off_lam = off_l + n;
  const std::size_t off_mu = off_lam + n;
  const bool track_mu = physical && scenario.track_mu;

  double overshoot_since_sample = 0.0;

  auto record_sample = [&](long long k) {
    double t = static_cast<double>(k) * h;
    rec.times.push_back(t);
    Vec tt(m);
    if (physical) {
      for (std::size_t e = 0; e < m; ++e)
        tt[e] = x[off_tt + static_cast<std::size_t>(scenario.edges[e].from)] -
                x[off_tt + static_cast<std::size_t>(scenario.edges[e].to)];
    } else {
      for (std::size_t e = 0; e < m; ++e) tt[e] = x[off_tt + e];
    }
    rec.theta_tilde.push_back(tt);
    rec.omega.push_back(Vec(x.begin() + static_cast<std::ptrdiff_t>(off_omega),
                            x.begin() + static_cast<std::ptrdiff_t>(off_omega + n)));
    rec.p_gen.push_back(Vec(x.begin() + static_cast<std::ptrdiff_t>(off_g),
                            x.begin() + static_cast<std::ptrdiff_t>(off_g + n)));
    rec.p_load.push_back(Vec(x.begin() + static_cast<std::ptrdiff_t>(off_l),
                             x.begin() + static_cast<std::ptrdiff_t>(off_l + n)));
    rec.lambda.push_back(Vec(x.begin() + static_cast<std::ptrdiff_t>(off_lam),
                             x.begin() + static_cast<std::ptrdiff_t>(off_lam + n)));
    Vec p = schedule.at(k, static_cast<int>(n));

    if (track_mu) {
      Vec mu(x.begin() + static_cast<std::ptrdiff_t>(off_mu),
             x.begin() + static_cast<std::ptrdiff_t>(off_mu + n));
      double gap = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        gap = std::max(gap, std::fabs(mu[j] - x[off_omega + j]));
      rec.mu.push_back(mu);
      rec.mu_gap.push_back(gap);
    } else {
      rec.mu_gap.push_back(kNaN);
    }

    // Multiplier-update residual: measured-form minus ideal-form value.
    {
      const Vec& om = rec.omega.back();
      const Vec& gg = rec.p_gen.back();
      const Vec& ll = rec.p_load.back();
      Vec cb(n, 0.0);
      for (std::size_t e = 0; e < m; ++e) {
        double v = scenario.edges[e].susceptance * tt[e];
        cb[static_cast<std::size_t>(scenario.edges[e].from)] += v;
        cb[static_cast<std::size_t>(scenario.edges[e].to)] -= v;
      }
      double res = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const AreaParams& a = net.area(static_cast<int>(j));
        double imb = gg[j] - ll[j] - p[j];
        double wdot = (imb - a.damping * om[j] - cb[j]) / a.inertia;
        double measured = a.gain_lambda * (a.inertia * wdot + a.damping * om[j] + cb[j]);
        double ideal = a.gain_lambda * imb;
        res = std::max(res, std::fabs(measured - ideal));
      }
      rec.lambda_residual.push_back(res);
    }

    if (rec.v1_available && k >= ref_step) {
      AugmentedState w = rec.state_at(rec.samples() - 1, net);
      rec.v1.push_back(lyapunov_value(w, rec.reference, net, p_final, gains));
    } else {
      rec.v1.push_back(kNaN);
    }
    rec.overshoot.push_back(overshoot_since_sample);
    overshoot_since_sample = 0.0;
  };

  record_sample(0);
  for (long long k = 0; k < steps; ++k) {
    Vec p = schedule.at(k, static_cast<int>(n));
    if (scenario.estimator == OmegaDotEstimator::backward_difference) {
      for (std::size_t j = 0; j < n; ++j)
        omega_dot_est[j] = k == 0 ? 0.0 : (x[off_omega + j] - omega_prev[j]) / h;
      std::copy(x.begin() + static_cast<std::ptrdiff_t>(off_omega),
                x.begin() + static_cast<std::ptrdiff_t>(off_omega + n), omega_prev.begin());
    }
    if (physical)
      rk4_step(phys, x, p, omega_dot_est, h, k1, k2, k3, k4, xtmp);
    else
      rk4_step(proj, x, p, omega_dot_est, h, k1, k2, k3, k4, xtmp);

    if (saturate) {
      std::copy(x.begin() + static_cast<std::ptrdiff_t>(off_g),
                x.begin() + static_cast<std::ptrdiff_t>(off_g + n), g_buf.begin());
      std::copy(x.begin() + static_cast<std::ptrdiff_t>(off_l),
                x.begin() + static_cast<std::ptrdiff_t>(off_l + n), l_buf.begin());
      StepGuardResult guard = apply_step_guard(g_buf, l_buf, net);
      std::copy(g_buf.begin(), g_buf.end(), x.begin() + static_cast<std::ptrdiff_t>(off_g));
      std::copy(l_buf.begin(), l_buf.end(), x.begin() + static_cast<std::ptrdiff_t>(off_l));
      overshoot_since_sample = std::max(overshoot_since_sample, guard.overshoot);
      rec.max_overshoot = std::max(rec.max_overshoot, guard.overshoot);
      if (guard.step_too_large) ++rec.overshoot_warnings;
    }

    for (std::size_t i = 0; i < nx; ++i)
      if (!std::isfinite(x[i]))
        throw IntegrationError("integration diverged", static_cast<double>(k + 1) * h,
                               component_name(i, n, m, physical));

    if ((k + 1) % stride == 0 || k + 1 == steps) record_sample(k + 1);
  }
  return rec;
}

TrajectoryRecord integrate(const Scenario& scenario) {
  if (scenario.formulation == Formulation::both)
    throw std::invalid_argument("integrate: scenario asks for both formulations; use run_scenario");
  return integrate(scenario, scenario.formulation);
}

RunOutput run_scenario(const Scenario& scenario) {
  if (scenario.formulation == Formulation::projected)
    return {integrate(scenario, Formulation::projected), std::nullopt};
  RunOutput out{integrate(scenario, Formulation::physical), std::nullopt};
  if (scenario.formulation == Formulation::both)
    out.projected = integrate(scenario, Formulation::projected);
  return out;
}

void write_trajectory(const TrajectoryRecord& rec, const std::string& path, bool actual_values) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trajectory file: " + path);
  const auto n = static_cast<std::size_t>(rec.scenario.node_count());
  const auto m = rec.scenario.edges.size();

  out << "t";
  for (std::size_t j = 0; j < n; ++j) out << ",omega_" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",pg_" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",pl_" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",lambda_" << j;
  for (std::size_t e = 0; e < m; ++e)
    out << ",flow_" << rec.scenario.edges[e].from << "_" << rec.scenario.edges[e].to;
  out << ",V1\n";

  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (int s = 0; s < rec.samples(); ++s) {
    auto si = static_cast<std::size_t>(s);
    std::snprintf(buf, sizeof buf, "%.17g", rec.times[si]);
    out << buf;
    for (std::size_t j = 0; j < n; ++j) emit(rec.omega[si][j]);
    for (std::size_t j = 0; j < n; ++j)
      emit(rec.p_gen[si][j] + (actual_values ? rec.scenario.initial_pg_actual[j] : 0.0));
    for (std::size_t j = 0; j < n; ++j)
      emit(rec.p_load[si][j] + (actual_values ? rec.scenario.initial_pl_actual[j] : 0.0));
    for (std::size_t j = 0; j < n; ++j) emit(rec.lambda[si][j]);
    Vec flows = rec.flows_at(s);
    for (std::size_t e = 0; e < m; ++e) emit(flows[e]);
    if (std::isnan(rec.v1[si]))
      out << ",";
    else
      emit(rec.v1[si]);
    out << "\n";
  }
}

Vec derivative_at_sample(const TrajectoryRecord& rec, int sample, const NetworkModel& net) {
  const auto n = static_cast<std::size_t>(net.node_count());
  const auto m = static_cast<std::size_t>(net.edge_count());
  auto si = static_cast<std::size_t>(sample);
  const double h = rec.scenario.integrator.h;
  long long k = std::llround(rec.times[si] / h);

  // Same grid snapping as the integrator.
  Vec p(n, 0.0);
  for (const DisturbanceStep& d : rec.scenario.disturbances)
    if (std::llround(d.t / h) <= k) p[static_cast<std::size_t>(d.node)] += d.delta_mw;

  const Vec& tt = rec.theta_tilde[si];
  const Vec& omega = rec.omega[si];
  const Vec& g = rec.p_gen[si];
  const Vec& l = rec.p_load[si];
  const Vec& lam = rec.lambda[si];
  const bool saturate = rec.scenario.mode != ControllerMode::unsaturated;

  Vec cb(n, 0.0);
  const auto& edges = net.edges();
  for (std::size_t e = 0; e < m; ++e) {
    double v = edges[e].susceptance * tt[e];
    cb[static_cast<std::size_t>(edges[e].from)] += v;
    cb[static_cast<std::size_t>(edges[e].to)] -= v;
  }

  Vec d(m + 4 * n);
  for (std::size_t e = 0; e < m; ++e)
    d[e] = omega[static_cast<std::size_t>(edges[e].from)] -
           omega[static_cast<std::size_t>(edges[e].to)];
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    double inner_g = g[j] - a.gamma_gen() * (a.cost_gen * g[j] + omega[j] + lam[j]);
    double inner_l = l[j] - a.gamma_load() * (a.cost_load * l[j] - omega[j] - lam[j]);
    if (saturate) {
      inner_g = clamp_scalar(inner_g, a.pg_min, a.pg_max);
      inner_l = clamp_scalar(inner_l, a.pl_min, a.pl_max);
    }
    d[m + j] = (g[j] - l[j] - p[j] - a.damping * omega[j] - cb[j]) / a.inertia;
    d[m + n + j] = (-g[j] + inner_g) / a.t_gen;
    d[m + 2 * n + j] = (-l[j] + inner_l) / a.t_load;
    d[m + 3 * n + j] = a.gain_lambda * (g[j] - l[j] - p[j]);
  }
  return d;
}

}  // namespace pnfc
