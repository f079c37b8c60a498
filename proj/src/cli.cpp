#include "pnfc/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnfc/analysis.hpp"
#include "pnfc/errors.hpp"
#include "pnfc/oracle.hpp"
#include "pnfc/scenario.hpp"
#include "pnfc/sim.hpp"

namespace pnfc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string scenario_path;
  std::string out_dir;
  std::vector<std::string> overrides;  // key=value
  double tol_mw = 0.5;
  bool actual = false;
  int verbosity = 0;
};

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& kv : raw) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("override must be key=value: " + kv);
    out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

Scenario load_with_overrides(const CommonOptions& opt) {
  return load_scenario(opt.scenario_path, parse_overrides(opt.overrides));
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw ValidationError("output directory required (-o)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory: " + dir);
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << "\n";
}

json summary_of(const TrajectoryRecord& rec) {
  json j;
  j["formulation"] = to_string(rec.formulation);
  j["controller_mode"] = to_string(rec.scenario.mode);
  j["samples"] = rec.samples();
  j["horizon"] = rec.scenario.integrator.horizon;
  j["h"] = rec.scenario.integrator.h;
  j["max_preclamp_overshoot_mw"] = rec.max_overshoot;
  j["overshoot_warnings"] = rec.overshoot_warnings;
  double lam_res = 0.0, mu_gap = 0.0;
  bool has_mu = false;
  for (double v : rec.lambda_residual) lam_res = std::max(lam_res, v);
  for (double v : rec.mu_gap)
    if (!std::isnan(v)) {
      has_mu = true;
      mu_gap = std::max(mu_gap, v);
    }
  j["max_lambda_update_residual"] = lam_res;
  if (has_mu) j["max_mu_omega_gap"] = mu_gap;
  bool prescribed = true;
  for (const AreaParams& a : rec.scenario.areas) prescribed = prescribed && a.prescribed_gains();
  j["prescribed_gains"] = prescribed;
  if (!prescribed)
    j["note"] = "non-default actuator gains: the stability certificate is not claimed";
  auto last = static_cast<std::size_t>(rec.samples() - 1);
  j["final"]["t"] = rec.times[last];
  j["final"]["omega"] = rec.omega[last];
  j["final"]["pg"] = rec.p_gen[last];
  j["final"]["pl"] = rec.p_load[last];
  j["final"]["lambda"] = rec.lambda[last];
  j["final"]["flows"] = rec.flows_at(static_cast<int>(last));
  if (rec.v1_available && !std::isnan(rec.v1[last])) j["final"]["V1"] = rec.v1[last];
  return j;
}

json uniqueness_json(const NetworkModel& net, const Vec& p) {
  UniquenessReport rep = check_uniqueness_conditions(net, p);
  json j;
  j["certified"] = rep.certified;
  j["nodes"] = json::array();
  for (const auto& r : rep.nodes)
    j["nodes"].push_back({{"margin_lower_mw", r.margin_lower},
                          {"margin_upper_mw", r.margin_upper},
                          {"strict", r.strict},
                          {"interior", r.interior_any}});
  return j;
}

json equilibrium_json(const EquilibriumSolution& eq, const Scenario& s) {
  json j;
  j["feasible"] = eq.feasible;
  if (!eq.feasible) {
    j["violations"] = json::array();
    for (const auto& v : eq.violations) j["violations"].push_back(v.describe());
    return j;
  }
  j["pg_deviation"] = eq.p_gen;
  j["pl_deviation"] = eq.p_load;
  j["lambda"] = eq.lambda;
  // Negated multipliers are the marginal regulation costs.
  Vec marginal(eq.lambda.size());
  for (std::size_t i = 0; i < marginal.size(); ++i) marginal[i] = -eq.lambda[i];
  j["marginal_regulation_cost"] = marginal;
  j["objective"] = eq.objective;
  j["kkt_residual_mw"] = eq.kkt_residual_mw;
  Vec pg_act(eq.p_gen.size()), pl_act(eq.p_load.size());
  for (std::size_t i = 0; i < pg_act.size(); ++i) {
    pg_act[i] = eq.p_gen[i] + s.initial_pg_actual[i];
    pl_act[i] = eq.p_load[i] + s.initial_pl_actual[i];
  }
  j["pg_actual"] = pg_act;
  j["pl_actual"] = pl_act;
  return j;
}

int cmd_run(const CommonOptions& opt) {
  Scenario s = load_with_overrides(opt);
  ensure_out_dir(opt.out_dir);
  RunOutput run = run_scenario(s);
  write_trajectory(run.primary, opt.out_dir + "/trajectory.csv", opt.actual);
  json summary = summary_of(run.primary);
  if (run.projected) {
    write_trajectory(*run.projected, opt.out_dir + "/trajectory_projected.csv", opt.actual);
    summary["formulation_gap"] = formulation_gap(run.primary, *run.projected);
  }
  write_json(summary, opt.out_dir + "/summary.json");
  if (opt.verbosity > 0) std::cout << summary.dump(2) << "\n";
  if (run.primary.overshoot_warnings > 0) {
    std::cerr << "internal consistency: pre-clamp capacity excursion exceeded "
                 "1e-6 of the box width on "
              << run.primary.overshoot_warnings
              << " steps; the step size h is too large\n";
    return kExitRuntime;
  }
  return kExitOk;
}

json certification_json(const CertificationReport& rep, const Scenario& s) {
  json j;
  const char* status = rep.detection.status == EquilibriumStatus::reached
                           ? "reached"
                           : (rep.detection.status == EquilibriumStatus::not_reached
                                  ? "not_reached"
                                  : "inconclusive");
  j["equilibrium"]["status"] = status;
  j["equilibrium"]["max_tail_derivative"] = rep.detection.max_derivative;
  j["equilibrium"]["max_tail_drift"] = rep.detection.max_drift;
  j["equilibrium"]["tail_samples"] = rep.detection.tail_samples;
  if (rep.detection.status == EquilibriumStatus::reached) {
    const auto& st = rep.detection.state;
    j["equilibrium"]["pg_deviation"] = st.p_gen;
    j["equilibrium"]["pl_deviation"] = st.p_load;
    j["equilibrium"]["lambda"] = st.lambda;
    j["equilibrium"]["omega"] = st.omega;
    Vec pg_act(st.p_gen.size()), pl_act(st.p_load.size());
    for (std::size_t i = 0; i < pg_act.size(); ++i) {
      pg_act[i] = st.p_gen[i] + s.initial_pg_actual[i];
      pl_act[i] = st.p_load[i] + s.initial_pl_actual[i];
    }
    j["equilibrium"]["pg_actual"] = pg_act;
    j["equilibrium"]["pl_actual"] = pl_act;

    j["oracle"] = equilibrium_json(rep.optimality.oracle, s);
    j["gaps"]["pg_mw"] = rep.optimality.max_gen_gap_mw;
    j["gaps"]["pl_mw"] = rep.optimality.max_load_gap_mw;
    j["gaps"]["lambda_mw"] = rep.optimality.max_multiplier_gap_mw;
    j["restoration"]["max_omega"] = rep.optimality.max_omega;
    j["restoration"]["max_flow_mw"] = rep.optimality.max_flow_mw;
    j["kkt"]["pass"] = rep.optimality.kkt.pass;
    j["kkt"]["worst_residual_mw"] = rep.optimality.kkt.worst_residual_mw;
    j["kkt"]["nodes"] = json::array();
    for (const KktNodeReport& r : rep.optimality.kkt.nodes) {
      auto side = [](ActiveSide s) {
        return s == ActiveSide::lower ? "lower" : (s == ActiveSide::upper ? "upper" : "interior");
      };
      j["kkt"]["nodes"].push_back({{"stat_gen", r.stat_gen},
                                   {"stat_load", r.stat_load},
                                   {"stat_gen_mw", r.stat_gen_mw},
                                   {"stat_load_mw", r.stat_load_mw},
                                   {"gen_side", side(r.gen_side)},
                                   {"load_side", side(r.load_side)},
                                   {"balance_residual", r.balance_residual},
                                   {"network_residual", r.network_residual},
                                   {"pass", r.pass}});
    }
    j["marginal_identity_mw"] = rep.optimality.marginal_identity_mw;
    j["lyapunov"]["samples"] = rep.lyapunov.samples;
    j["lyapunov"]["violations"] = rep.lyapunov.violations;
    j["lyapunov"]["worst_increase"] = rep.lyapunov.worst_increase;
    j["lyapunov"]["dissipation_violations"] = rep.lyapunov.dissipation_violations;
  }
  j["max_preclamp_overshoot_mw"] = rep.max_overshoot;
  j["max_lambda_update_residual"] = rep.max_lambda_residual;
  if (!std::isnan(rep.max_mu_gap)) j["max_mu_omega_gap"] = rep.max_mu_gap;
  if (!std::isnan(rep.formulation_gap)) j["formulation_gap"] = rep.formulation_gap;
  j["certified"] = rep.certified;
  return j;
}

int cmd_verify(const CommonOptions& opt) {
  Scenario s = load_with_overrides(opt);
  ensure_out_dir(opt.out_dir);
  RunOutput run = run_scenario(s);
  CertificationReport rep = certify_run(run, opt.tol_mw);
  json j = certification_json(rep, s);
  j["uniqueness"] = uniqueness_json(s.network(), s.final_disturbance());
  bool prescribed = true;
  for (const AreaParams& a : s.areas) prescribed = prescribed && a.prescribed_gains();
  j["prescribed_gains"] = prescribed;
  if (!prescribed)
    j["note"] = "non-default actuator gains: the stability certificate is not claimed";
  write_json(j, opt.out_dir + "/verification.json");
  if (opt.verbosity > 0) std::cout << j.dump(2) << "\n";
  if (rep.detection.status == EquilibriumStatus::inconclusive) return kExitInconclusive;
  if (rep.detection.status == EquilibriumStatus::not_reached) return kExitInconclusive;
  return rep.certified ? kExitOk : kExitCertification;
}

int cmd_oracle(const CommonOptions& opt) {
  Scenario s = load_with_overrides(opt);
  NetworkModel net = s.network();
  EquilibriumSolution eq = solve_pbo(net, s.final_disturbance());
  json j = equilibrium_json(eq, s);
  j["uniqueness"] = uniqueness_json(net, s.final_disturbance());
  std::cout << j.dump(2) << "\n";
  if (!opt.out_dir.empty()) {
    ensure_out_dir(opt.out_dir);
    write_json(j, opt.out_dir + "/equilibrium.json");
  }
  return eq.feasible ? kExitOk : kExitCertification;
}

int cmd_compare(const CommonOptions& opt) {
  Scenario s = load_with_overrides(opt);
  ensure_out_dir(opt.out_dir);
  if (s.mode == ControllerMode::unsaturated) s.mode = ControllerMode::measured;
  Scenario s_unsat = s;
  s_unsat.mode = ControllerMode::unsaturated;
  TrajectoryRecord sat = integrate(s, Formulation::physical);
  TrajectoryRecord unsat = integrate(s_unsat, Formulation::physical);
  SaturationComparison cmp = compare_saturation(sat, unsat);
  json j;
  j["excursion_saturated_mw"] = cmp.excursion_saturated;
  j["excursion_unsaturated_mw"] = cmp.excursion_unsaturated;
  j["preclamp_overshoot_mw"] = cmp.preclamp_overshoot;
  j["endpoint_gap_mw"] = cmp.endpoint_gap_mw;
  j["saturated_within_box"] = cmp.saturated_within_box;
  write_json(j, opt.out_dir + "/compare.json");
  std::cout << j.dump(2) << "\n";
  return cmp.saturated_within_box ? kExitOk : kExitCertification;
}

int cmd_sweep(const CommonOptions& opt, const std::string& key,
              const std::string& values_csv) {
  if (key.empty() || values_csv.empty())
    throw ValidationError("sweep requires --key and --values");
  Scenario base = load_with_overrides(opt);  // validates scenario and overrides
  (void)base;
  ensure_out_dir(opt.out_dir);

  std::vector<std::string> values;
  std::stringstream ss(values_csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(item);

  struct Row {
    std::string value;
    double max_omega, max_flow, gap_pg, max_overshoot;
  };
  auto run_point = [&](const std::string& v) -> Row {
    auto overrides = parse_overrides(opt.overrides);
    overrides.emplace_back(key, v);
    Scenario s = load_scenario(opt.scenario_path, overrides);
    TrajectoryRecord rec = integrate(s, s.formulation == Formulation::projected
                                            ? Formulation::projected
                                            : Formulation::physical);
    NetworkModel net = s.network();
    EquilibriumSolution eq = solve_pbo(net, s.final_disturbance());
    auto last = static_cast<std::size_t>(rec.samples() - 1);
    Row r{v, 0.0, 0.0, 0.0, rec.max_overshoot};
    for (std::size_t j = 0; j < rec.omega[last].size(); ++j) {
      r.max_omega = std::max(r.max_omega, std::fabs(rec.omega[last][j]));
      r.gap_pg = std::max(r.gap_pg, std::fabs(rec.p_gen[last][j] - eq.p_gen[j]));
    }
    Vec flows = rec.flows_at(static_cast<int>(last));
    for (double f : flows) r.max_flow = std::max(r.max_flow, std::fabs(f));
    return r;
  };

  std::vector<std::future<Row>> futures;
  futures.reserve(values.size());
  for (const std::string& v : values)
    futures.push_back(std::async(std::launch::async, run_point, v));

  std::ofstream out(opt.out_dir + "/sweep.csv");
  if (!out) throw ValidationError("cannot write sweep.csv");
  out << "key,value,endpoint_max_omega,endpoint_max_flow_mw,endpoint_pg_gap_mw,max_preclamp_overshoot_mw\n";
  char buf[32];
  for (auto& f : futures) {
    Row r = f.get();
    out << key << "," << r.value;
    for (double v : {r.max_omega, r.max_flow, r.gap_pg, r.max_overshoot}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"per-node balance frequency control: simulation and verification"};
  app.set_version_flag("--version", "pnfc 0.1.0");
  app.require_subcommand(1);

  CommonOptions opt;
  std::string sweep_key, sweep_values;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("scenario", opt.scenario_path, "scenario file (JSON)")->required();
    auto* o = cmd->add_option("-o,--out", opt.out_dir, "output directory");
    if (needs_out) o->required();
    cmd->add_option("--set", opt.overrides, "override scenario fields, key=value (dotted paths)");
    cmd->add_flag("-v,--verbose", opt.verbosity, "print reports to stdout");
  };

  CLI::App* run = app.add_subcommand("run", "integrate a scenario and export the trajectory");
  add_common(run, true);
  run->add_flag("--actual", opt.actual, "export power columns in actual values");

  CLI::App* verify = app.add_subcommand("verify", "integrate, detect equilibrium and certify optimality");
  add_common(verify, true);
  verify->add_option("--tol-mw", opt.tol_mw, "certification tolerance in MW");

  CLI::App* oracle = app.add_subcommand("oracle", "solve the balance problem directly");
  add_common(oracle, false);

  CLI::App* compare = app.add_subcommand("compare", "saturated vs unsaturated transient comparison");
  add_common(compare, true);

  CLI::App* sweep = app.add_subcommand("sweep", "grid over one scenario field");
  add_common(sweep, true);
  sweep->add_option("--key", sweep_key, "dotted scenario field to vary")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;  // --help is a success
  }

  try {
    if (run->parsed()) return cmd_run(opt);
    if (verify->parsed()) return cmd_verify(opt);
    if (oracle->parsed()) return cmd_oracle(opt);
    if (compare->parsed()) return cmd_compare(opt);
    if (sweep->parsed()) return cmd_sweep(opt, sweep_key, sweep_values);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IntegrationError& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace pnfc
