#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pnfc/analysis.hpp"
#include "pnfc/oracle.hpp"
#include "pnfc/scenario.hpp"
#include "pnfc/sim.hpp"

namespace py = pybind11;
using namespace pnfc;

namespace {

std::vector<std::pair<std::string, std::string>> to_overrides(const py::dict& d) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto item : d)
    out.emplace_back(py::cast<std::string>(item.first), py::cast<std::string>(item.second));
  return out;
}

py::dict oracle_dict(const EquilibriumSolution& eq, const Scenario& s) {
  py::dict d;
  d["feasible"] = eq.feasible;
  if (!eq.feasible) {
    py::list v;
    for (const auto& viol : eq.violations) v.append(viol.describe());
    d["violations"] = v;
    return d;
  }
  d["pg_deviation"] = eq.p_gen;
  d["pl_deviation"] = eq.p_load;
  d["lambda"] = eq.lambda;
  d["objective"] = eq.objective;
  std::vector<double> pg_actual(eq.p_gen.size()), pl_actual(eq.p_load.size());
  for (std::size_t i = 0; i < pg_actual.size(); ++i) {
    pg_actual[i] = eq.p_gen[i] + s.initial_pg_actual[i];
    pl_actual[i] = eq.p_load[i] + s.initial_pl_actual[i];
  }
  d["pg_actual"] = pg_actual;
  d["pl_actual"] = pl_actual;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "simulation and verification of decentralized per-node balance frequency control";

  m.def(
      "oracle",
      [](const std::string& path, const py::dict& overrides) {
        Scenario s = load_scenario(path, to_overrides(overrides));
        return oracle_dict(solve_pbo(s.network(), s.final_disturbance()), s);
      },
      py::arg("scenario"), py::arg("overrides") = py::dict(),
      "Solve the per-node balance problem for a scenario file.");

  m.def(
      "run",
      [](const std::string& path, const py::dict& overrides) {
        Scenario s = load_scenario(path, to_overrides(overrides));
        TrajectoryRecord rec = integrate(s, s.formulation == Formulation::projected
                                                ? Formulation::projected
                                                : Formulation::physical);
        py::dict d;
        d["t"] = rec.times;
        d["omega"] = rec.omega;
        d["pg"] = rec.p_gen;
        d["pl"] = rec.p_load;
        d["lambda"] = rec.lambda;
        d["theta_tilde"] = rec.theta_tilde;
        d["v1"] = rec.v1;
        d["max_preclamp_overshoot_mw"] = rec.max_overshoot;
        return d;
      },
      py::arg("scenario"), py::arg("overrides") = py::dict(),
      "Integrate a scenario and return the sampled trajectory.");

  m.def(
      "verify",
      [](const std::string& path, const py::dict& overrides, double tol_mw) {
        Scenario s = load_scenario(path, to_overrides(overrides));
        CertificationReport rep = certify_run(run_scenario(s), tol_mw);
        py::dict d;
        const char* status = rep.detection.status == EquilibriumStatus::reached
                                 ? "reached"
                                 : (rep.detection.status == EquilibriumStatus::not_reached
                                        ? "not_reached"
                                        : "inconclusive");
        d["equilibrium_status"] = status;
        d["certified"] = rep.certified;
        if (rep.detection.status == EquilibriumStatus::reached) {
          d["pg_deviation"] = rep.detection.state.p_gen;
          d["pl_deviation"] = rep.detection.state.p_load;
          d["max_omega"] = rep.optimality.max_omega;
          d["max_flow_mw"] = rep.optimality.max_flow_mw;
          d["pg_gap_mw"] = rep.optimality.max_gen_gap_mw;
          d["lyapunov_violations"] = rep.lyapunov.violations;
        }
        return d;
      },
      py::arg("scenario"), py::arg("overrides") = py::dict(), py::arg("tol_mw") = 0.5,
      "Integrate, detect the equilibrium and certify optimality.");

  m.def(
      "solve_node",
      [](double p, double alpha, double beta, std::pair<double, double> pg_box,
         std::pair<double, double> pl_box) {
        AreaParams a;
        a.damping = 1.0;
        a.droop = 1.0;
        a.cost_gen = alpha;
        a.cost_load = beta;
        a.t_gen = 1.0;
        a.t_load = 1.0;
        a.inertia = 1.0;
        a.pg_min = pg_box.first;
        a.pg_max = pg_box.second;
        a.pl_min = pl_box.first;
        a.pl_max = pl_box.second;
        NodeSolution s = solve_pbo_node(p, a);
        py::dict d;
        d["feasible"] = s.feasible;
        d["pg"] = s.p_gen;
        d["pl"] = s.p_load;
        d["lambda"] = s.lambda;
        return d;
      },
      py::arg("p"), py::arg("alpha"), py::arg("beta"), py::arg("pg_box"), py::arg("pl_box"),
      "Single-node balance optimum.");
}
