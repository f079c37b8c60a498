#include "pnfc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pnfc/errors.hpp"

namespace pnfc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

EquilibriumDetection detect_equilibrium(const TrajectoryRecord& rec, double tol) {
  EquilibriumDetection det;
  NetworkModel net = rec.scenario.network();
  const int total = rec.samples();
  if (total == 0) return det;

  double horizon = rec.scenario.integrator.horizon;
  double tail_start = horizon * 0.95;
  int first = total;
  for (int s = 0; s < total; ++s)
    if (rec.times[static_cast<std::size_t>(s)] >= tail_start) {
      first = s;
      break;
    }
  det.tail_samples = total - first;
  if (det.tail_samples < 10) {
    det.status = EquilibriumStatus::inconclusive;
    return det;
  }

  // Tail mean.
  AugmentedState mean = AugmentedState::zero(net);
  Vec mean_flat = mean.flatten();
  for (int s = first; s < total; ++s) {
    Vec w = rec.state_at(s, net).flatten();
    for (std::size_t i = 0; i < w.size(); ++i) mean_flat[i] += w[i];
  }
  for (double& v : mean_flat) v /= det.tail_samples;
  det.state = AugmentedState::unflatten(mean_flat, net);

  for (int s = first; s < total; ++s) {
    det.max_derivative = std::max(det.max_derivative, linf_norm(derivative_at_sample(rec, s, net)));
    det.max_drift = std::max(det.max_drift, linf_diff(rec.state_at(s, net).flatten(), mean_flat));
  }
  det.status = (det.max_derivative < tol && det.max_drift < tol)
                   ? EquilibriumStatus::reached
                   : EquilibriumStatus::not_reached;
  return det;
}

OptimalityCertificate certify_optimality(const AugmentedState& eq, const NetworkModel& net,
                                         const Vec& p, double tol_mw,
                                         double omega_tol, double flow_tol) {
  OptimalityCertificate cert;
  cert.oracle = solve_pbo(net, p);
  cert.oracle_feasible = cert.oracle.feasible;
  if (!cert.oracle_feasible) return cert;

  const auto n = static_cast<std::size_t>(net.node_count());
  for (std::size_t j = 0; j < n; ++j) {
    const AreaParams& a = net.area(static_cast<int>(j));
    cert.max_gen_gap_mw = std::max(cert.max_gen_gap_mw, std::fabs(eq.p_gen[j] - cert.oracle.p_gen[j]));
    cert.max_load_gap_mw = std::max(cert.max_load_gap_mw, std::fabs(eq.p_load[j] - cert.oracle.p_load[j]));
    cert.max_multiplier_gap_mw =
        std::max(cert.max_multiplier_gap_mw,
                 std::fabs(eq.lambda[j] - cert.oracle.lambda[j]) / a.cost_gen);
    cert.max_omega = std::max(cert.max_omega, std::fabs(eq.omega[j]));
    // Marginal-cost identity at nodes the oracle reports interior.
    if (cert.oracle.gen_interior[j])
      cert.marginal_identity_mw = std::max(
          cert.marginal_identity_mw,
          std::fabs(a.cost_gen * eq.p_gen[j] + eq.lambda[j]) / a.cost_gen);
    if (cert.oracle.load_interior[j])
      cert.marginal_identity_mw = std::max(
          cert.marginal_identity_mw,
          std::fabs(a.cost_load * eq.p_load[j] - eq.lambda[j]) / a.cost_load);
  }
  const auto& edges = net.edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    cert.max_flow_mw = std::max(cert.max_flow_mw,
                                std::fabs(edges[e].susceptance * eq.theta_tilde[e]));

  // KKT at the candidate with mu identified with the frequency; angles
  // reconstructed from the edge differences with node 0 as reference.
  PlantState x;
  x.theta = Vec(n, 0.0);
  {
    // BFS over the undirected graph assigning angles from theta_tilde.
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t e = 0; e < edges.size(); ++e) {
        auto a = static_cast<std::size_t>(edges[e].from);
        auto b = static_cast<std::size_t>(edges[e].to);
        if (a == u && !seen[b]) {
          x.theta[b] = x.theta[a] - eq.theta_tilde[e];
          seen[b] = 1;
          stack.push_back(b);
        } else if (b == u && !seen[a]) {
          x.theta[a] = x.theta[b] + eq.theta_tilde[e];
          seen[a] = 1;
          stack.push_back(a);
        }
      }
    }
  }
  x.omega = eq.omega;
  x.p_gen = eq.p_gen;
  x.p_load = eq.p_load;
  cert.kkt = kkt_residuals(x, eq.lambda, eq.omega, net, p, tol_mw);

  cert.pass = cert.max_gen_gap_mw <= tol_mw && cert.max_load_gap_mw <= tol_mw &&
              cert.max_multiplier_gap_mw <= tol_mw && cert.kkt.pass &&
              cert.max_omega <= omega_tol && cert.max_flow_mw <= flow_tol &&
              cert.marginal_identity_mw <= tol_mw;
  return cert;
}

namespace {

LyapunovCheck descent_over(const TrajectoryRecord& rec, const Vec& v1, double rel_tol,
                           bool with_dissipation) {
  LyapunovCheck chk;
  NetworkModel net = rec.scenario.network();
  const auto n = static_cast<std::size_t>(net.node_count());
  const auto m = static_cast<std::size_t>(net.edge_count());

  int prev = -1;
  for (int s = 0; s < rec.samples(); ++s) {
    double v = v1[static_cast<std::size_t>(s)];
    if (std::isnan(v)) continue;
    ++chk.samples;
    chk.value_at_end = v;
    if (prev >= 0) {
      double vp = v1[static_cast<std::size_t>(prev)];
      double allowance = rel_tol * (1.0 + std::fabs(vp));
      double increase = v - vp;
      if (increase > allowance) {
        ++chk.violations;
        chk.worst_increase = std::max(chk.worst_increase, increase);
      }
      if (with_dissipation) {
        // Trapezoidal integral of the damping/cost-weighted derivative
        // squares between the two samples.
        auto integrand = [&](int sample) {
          Vec d = derivative_at_sample(rec, sample, net);
          double q = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const AreaParams& a = net.area(static_cast<int>(j));
            q += a.damping * d[m + j] * d[m + j] +
                 a.cost_gen * d[m + n + j] * d[m + n + j] +
                 a.cost_load * d[m + 2 * n + j] * d[m + 2 * n + j];
          }
          return q;
        };
        double dt = rec.times[static_cast<std::size_t>(s)] - rec.times[static_cast<std::size_t>(prev)];
        double dissipated = 0.5 * dt * (integrand(prev) + integrand(s));
        // The decrease must dominate the dissipation up to sampling error.
        double gap = (v - vp) + dissipated;
        double tol = 1e-6 * (1.0 + std::fabs(vp)) + 0.05 * dissipated;
        if (gap > tol) {
          ++chk.dissipation_violations;
          chk.worst_dissipation_gap = std::max(chk.worst_dissipation_gap, gap - tol);
        }
      }
    }
    prev = s;
  }
  return chk;
}

}  // namespace

LyapunovCheck check_lyapunov_descent(const TrajectoryRecord& rec, double rel_tol) {
  return descent_over(rec, rec.v1, rel_tol, true);
}

LyapunovCheck check_lyapunov_descent_reversed(const TrajectoryRecord& rec, double rel_tol) {
  Vec reversed(rec.v1.rbegin(), rec.v1.rend());
  return descent_over(rec, reversed, rel_tol, false);
}

SaturationComparison compare_saturation(const TrajectoryRecord& saturated,
                                        const TrajectoryRecord& unsaturated) {
  if (saturated.scenario.fingerprint() != unsaturated.scenario.fingerprint())
    throw ValidationError("compare_saturation: records come from different scenarios");
  if (saturated.scenario.mode == ControllerMode::unsaturated ||
      unsaturated.scenario.mode != ControllerMode::unsaturated)
    throw ValidationError("compare_saturation: expected one saturated and one unsaturated record");

  NetworkModel net = saturated.scenario.network();
  const auto n = static_cast<std::size_t>(net.node_count());
  auto excursion = [&](const TrajectoryRecord& rec) {
    double exc = 0.0;
    for (int s = 0; s < rec.samples(); ++s) {
      auto si = static_cast<std::size_t>(s);
      for (std::size_t j = 0; j < n; ++j) {
        const AreaParams& a = net.area(static_cast<int>(j));
        exc = std::max(exc, rec.p_gen[si][j] - a.pg_max);
        exc = std::max(exc, a.pg_min - rec.p_gen[si][j]);
        exc = std::max(exc, rec.p_load[si][j] - a.pl_max);
        exc = std::max(exc, a.pl_min - rec.p_load[si][j]);
      }
    }
    return std::max(0.0, exc);
  };

  SaturationComparison cmp;
  cmp.excursion_saturated = excursion(saturated);
  cmp.excursion_unsaturated = excursion(unsaturated);
  cmp.preclamp_overshoot = saturated.max_overshoot;
  cmp.saturated_within_box = cmp.excursion_saturated <= 1e-9;

  auto last_s = static_cast<std::size_t>(saturated.samples() - 1);
  auto last_u = static_cast<std::size_t>(unsaturated.samples() - 1);
  for (std::size_t j = 0; j < n; ++j) {
    cmp.endpoint_gap_mw = std::max(cmp.endpoint_gap_mw,
                                   std::fabs(saturated.p_gen[last_s][j] - unsaturated.p_gen[last_u][j]));
    cmp.endpoint_gap_mw = std::max(cmp.endpoint_gap_mw,
                                   std::fabs(saturated.p_load[last_s][j] - unsaturated.p_load[last_u][j]));
  }
  return cmp;
}

double formulation_gap(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.samples() != b.samples())
    throw ValidationError("formulation_gap: records have different sampling");
  double gap = 0.0;
  auto rel = [&](double x, double y) { return std::fabs(x - y) / std::max(1.0, std::max(std::fabs(x), std::fabs(y))); };
  for (int s = 0; s < a.samples(); ++s) {
    auto si = static_cast<std::size_t>(s);
    for (std::size_t i = 0; i < a.theta_tilde[si].size(); ++i)
      gap = std::max(gap, rel(a.theta_tilde[si][i], b.theta_tilde[si][i]));
    for (std::size_t i = 0; i < a.omega[si].size(); ++i) {
      gap = std::max(gap, rel(a.omega[si][i], b.omega[si][i]));
      gap = std::max(gap, rel(a.p_gen[si][i], b.p_gen[si][i]));
      gap = std::max(gap, rel(a.p_load[si][i], b.p_load[si][i]));
      gap = std::max(gap, rel(a.lambda[si][i], b.lambda[si][i]));
    }
  }
  return gap;
}

CertificationReport certify_run(const RunOutput& run, double tol_mw,
                                double omega_tol, double flow_tol) {
  CertificationReport rep;
  const TrajectoryRecord& rec = run.primary;
  NetworkModel net = rec.scenario.network();

  rep.detection = detect_equilibrium(rec);
  rep.max_overshoot = rec.max_overshoot;
  rep.max_lambda_residual = 0.0;
  for (double v : rec.lambda_residual) rep.max_lambda_residual = std::max(rep.max_lambda_residual, v);
  rep.max_mu_gap = kNaN;
  if (!rec.mu_gap.empty() && !std::isnan(rec.mu_gap[0])) {
    rep.max_mu_gap = 0.0;
    for (double v : rec.mu_gap)
      if (!std::isnan(v)) rep.max_mu_gap = std::max(rep.max_mu_gap, v);
  }
  rep.formulation_gap = kNaN;
  if (run.projected) rep.formulation_gap = formulation_gap(rec, *run.projected);

  if (rep.detection.status == EquilibriumStatus::reached) {
    rep.optimality = certify_optimality(rep.detection.state, net,
                                        rec.scenario.final_disturbance(), tol_mw,
                                        omega_tol, flow_tol);
    // The descent certificate applies to the saturated flow only; outside
    // the constraint set the merit part of the value may go negative.
    if (rec.scenario.mode != ControllerMode::unsaturated)
      rep.lyapunov = check_lyapunov_descent(rec);
    rep.certified = rep.optimality.pass && rep.lyapunov.violations == 0;
  }
  return rep;
}

}  // namespace pnfc
