#include "pnfc/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "pnfc/errors.hpp"
#include "pnfc/oracle.hpp"

namespace pnfc {

using nlohmann::json;

std::string to_string(ControllerMode m) {
  switch (m) {
    case ControllerMode::ideal: return "ideal";
    case ControllerMode::measured: return "measured";
    case ControllerMode::unsaturated: return "unsaturated";
  }
  return "?";
}

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::physical: return "physical";
    case Formulation::projected: return "projected";
    case Formulation::both: return "both";
  }
  return "?";
}

std::string to_string(OmegaDotEstimator e) {
  return e == OmegaDotEstimator::exact ? "exact" : "backward_difference";
}

Vec Scenario::disturbance_at(double t) const {
  Vec p(static_cast<std::size_t>(node_count()), 0.0);
  for (const DisturbanceStep& d : disturbances)
    if (d.t <= t) p[static_cast<std::size_t>(d.node)] += d.delta_mw;
  return p;
}

Vec Scenario::final_disturbance() const {
  Vec p(static_cast<std::size_t>(node_count()), 0.0);
  for (const DisturbanceStep& d : disturbances) p[static_cast<std::size_t>(d.node)] += d.delta_mw;
  return p;
}

double Scenario::last_disturbance_time() const {
  double t = 0.0;
  for (const DisturbanceStep& d : disturbances) t = std::max(t, d.t);
  return t;
}

namespace {

json scenario_to_json(const Scenario& s) {
  json j;
  j["network"]["nodes"] = s.node_names;
  j["network"]["edges"] = json::array();
  for (const Edge& e : s.edges)
    j["network"]["edges"].push_back({{"from", e.from}, {"to", e.to}, {"susceptance", e.susceptance}});
  j["areas"] = json::array();
  for (std::size_t i = 0; i < s.areas.size(); ++i) {
    const AreaParams& a = s.areas[i];
    // Use the file's own actual-value limits when available.
    std::array<double, 2> pg = i < s.pg_limits_actual.size()
                                   ? s.pg_limits_actual[i]
                                   : std::array<double, 2>{a.pg_min + s.initial_pg_actual[i],
                                                           a.pg_max + s.initial_pg_actual[i]};
    std::array<double, 2> pl = i < s.pl_limits_actual.size()
                                   ? s.pl_limits_actual[i]
                                   : std::array<double, 2>{a.pl_min + s.initial_pl_actual[i],
                                                           a.pl_max + s.initial_pl_actual[i]};
    json ja = {{"D", a.damping},
               {"R", a.droop},
               {"alpha", a.cost_gen},
               {"beta", a.cost_load},
               {"Tg", a.t_gen},
               {"Tl", a.t_load},
               {"M", a.inertia},
               {"gl_gain", a.gain_lambda},
               {"pg_limits", {pg[0], pg[1]}},
               {"pl_limits", {pl[0], pl[1]}},
               {"initial_pg_actual", s.initial_pg_actual[i]},
               {"initial_pl_actual", s.initial_pl_actual[i]}};
    if (a.gain_gen > 0.0) ja["gamma_g"] = a.gain_gen;
    if (a.gain_load > 0.0) ja["gamma_l"] = a.gain_load;
    j["areas"].push_back(ja);
  }
  j["disturbances"] = json::array();
  for (const DisturbanceStep& d : s.disturbances)
    j["disturbances"].push_back({{"t", d.t}, {"node", d.node}, {"delta_mw", d.delta_mw}});
  j["integrator"] = {{"h", s.integrator.h}, {"horizon", s.integrator.horizon}, {"sample", s.integrator.sample}};
  j["mode"] = {{"controller", to_string(s.mode)},
               {"formulation", to_string(s.formulation)},
               {"track_mu", s.track_mu},
               {"omega_dot_estimator", to_string(s.estimator)}};
  return j;
}

template <typename T>
T require(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key))
    throw ValidationError("scenario: missing field " + path + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("scenario: field " + path + key + " has wrong type");
  }
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  const json& net = j.contains("network") ? j.at("network") : throw ValidationError("scenario: missing field network");
  s.node_names = require<std::vector<std::string>>(net, "network.", "nodes");
  if (s.node_names.empty()) throw ValidationError("scenario: network.nodes is empty");
  for (const json& je : require<json>(net, "network.", "edges")) {
    Edge e;
    e.from = require<int>(je, "network.edges[].", "from");
    e.to = require<int>(je, "network.edges[].", "to");
    e.susceptance = require<double>(je, "network.edges[].", "susceptance");
    s.edges.push_back(e);
  }

  const json& areas = j.contains("areas") ? j.at("areas") : throw ValidationError("scenario: missing field areas");
  if (areas.size() != s.node_names.size())
    throw ValidationError("scenario: areas must have one entry per node");
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const json& ja = areas[i];
    const std::string path = "areas." + std::to_string(i) + ".";
    AreaParams a;
    a.damping = require<double>(ja, path, "D");
    a.droop = require<double>(ja, path, "R");
    a.cost_gen = require<double>(ja, path, "alpha");
    a.cost_load = require<double>(ja, path, "beta");
    a.t_gen = require<double>(ja, path, "Tg");
    a.t_load = require<double>(ja, path, "Tl");
    a.inertia = require<double>(ja, path, "M");
    a.gain_lambda = require<double>(ja, path, "gl_gain");
    auto pg = require<std::vector<double>>(ja, path, "pg_limits");
    auto pl = require<std::vector<double>>(ja, path, "pl_limits");
    if (pg.size() != 2 || pl.size() != 2)
      throw ValidationError("scenario: " + path + "pg_limits/pl_limits must be [low, high]");
    double pg0 = require<double>(ja, path, "initial_pg_actual");
    double pl0 = require<double>(ja, path, "initial_pl_actual");
    a.pg_min = pg[0] - pg0;
    a.pg_max = pg[1] - pg0;
    a.pl_min = pl[0] - pl0;
    a.pl_max = pl[1] - pl0;
    if (ja.contains("gamma_g")) a.gain_gen = ja.at("gamma_g").get<double>();
    if (ja.contains("gamma_l")) a.gain_load = ja.at("gamma_l").get<double>();
    s.areas.push_back(a);
    s.initial_pg_actual.push_back(pg0);
    s.initial_pl_actual.push_back(pl0);
    s.pg_limits_actual.push_back({pg[0], pg[1]});
    s.pl_limits_actual.push_back({pl[0], pl[1]});
  }

  if (j.contains("disturbances")) {
    for (const json& jd : j.at("disturbances")) {
      DisturbanceStep d;
      d.t = require<double>(jd, "disturbances[].", "t");
      d.node = require<int>(jd, "disturbances[].", "node");
      d.delta_mw = require<double>(jd, "disturbances[].", "delta_mw");
      if (d.node < 0 || d.node >= s.node_count())
        throw ValidationError("scenario: disturbance node out of range");
      if (d.t < 0.0) throw ValidationError("scenario: disturbance time must be >= 0");
      s.disturbances.push_back(d);
    }
  }

  const json& ji = j.contains("integrator") ? j.at("integrator") : throw ValidationError("scenario: missing field integrator");
  s.integrator.h = require<double>(ji, "integrator.", "h");
  s.integrator.horizon = require<double>(ji, "integrator.", "horizon");
  s.integrator.sample = require<double>(ji, "integrator.", "sample");
  if (!(s.integrator.h > 0.0)) throw ValidationError("scenario: integrator.h must be > 0");
  if (s.integrator.sample < s.integrator.h)
    throw ValidationError("scenario: integrator.sample must be >= h");
  if (s.integrator.horizon < s.last_disturbance_time())
    throw ValidationError("scenario: horizon must cover the disturbance schedule");

  if (j.contains("mode")) {
    const json& jm = j.at("mode");
    if (jm.contains("controller")) {
      auto v = jm.at("controller").get<std::string>();
      if (v == "ideal") s.mode = ControllerMode::ideal;
      else if (v == "measured") s.mode = ControllerMode::measured;
      else if (v == "unsaturated") s.mode = ControllerMode::unsaturated;
      else throw ValidationError("scenario: mode.controller must be ideal|measured|unsaturated");
    }
    if (jm.contains("formulation")) {
      auto v = jm.at("formulation").get<std::string>();
      if (v == "physical") s.formulation = Formulation::physical;
      else if (v == "projected") s.formulation = Formulation::projected;
      else if (v == "both") s.formulation = Formulation::both;
      else throw ValidationError("scenario: mode.formulation must be physical|projected|both");
    }
    if (jm.contains("track_mu")) s.track_mu = jm.at("track_mu").get<bool>();
    if (jm.contains("omega_dot_estimator")) {
      auto v = jm.at("omega_dot_estimator").get<std::string>();
      if (v == "exact") s.estimator = OmegaDotEstimator::exact;
      else if (v == "backward_difference") s.estimator = OmegaDotEstimator::backward_difference;
      else throw ValidationError("scenario: mode.omega_dot_estimator must be exact|backward_difference");
    }
  }

  // Model-level checks: network assumptions first, then feasibility of the
  // final disturbance (a model error, distinct from parse errors).
  NetworkModel model = s.network();
  Vec p = s.final_disturbance();
  EquilibriumSolution eq = solve_pbo(model, p);
  if (!eq.feasible) {
    std::string msg = "scenario: final disturbance infeasible:";
    for (const auto& v : eq.violations) msg += " [" + v.describe() + "]";
    throw ValidationError(msg);
  }
  return s;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("scenario parse error in " + path + ": " + e.what());
  }
  return j;
}

void apply_override(json& j, const std::string& dotted, const std::string& value) {
  // Split the dotted path; "*" fans out over an array level.
  std::vector<std::string> parts;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ValidationError("override: empty key");

  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings (e.g. mode names) pass through
  }

  std::function<void(json&, std::size_t)> descend = [&](json& node, std::size_t i) {
    const std::string& key = parts[i];
    auto leaf = i + 1 == parts.size();
    if (key == "*") {
      if (!node.is_array()) throw ValidationError("override: '*' applies to arrays: " + dotted);
      for (json& item : node) {
        if (leaf) throw ValidationError("override: '*' cannot be terminal: " + dotted);
        descend(item, i + 1);
      }
      return;
    }
    if (node.is_array()) {
      std::size_t idx = 0;
      try {
        idx = static_cast<std::size_t>(std::stoul(key));
      } catch (...) {
        throw ValidationError("override: expected array index in " + dotted);
      }
      if (idx >= node.size()) throw ValidationError("override: index out of range in " + dotted);
      if (leaf) throw ValidationError("override: cannot replace array element wholesale: " + dotted);
      descend(node[idx], i + 1);
      return;
    }
    if (!node.is_object() || !node.contains(key))
      throw ValidationError("override: unknown field " + dotted);
    if (leaf)
      node[key] = parsed;
    else
      descend(node.at(key), i + 1);
  };
  descend(j, 0);
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  return scenario_from_json(parse_file(path));
}

Scenario load_scenario(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  json j = parse_file(path);
  for (const auto& [key, value] : overrides) apply_override(j, key, value);
  return scenario_from_json(j);
}

void write_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write scenario file: " + path);
  out << scenario_to_json(s).dump(2) << "\n";
}

std::string Scenario::fingerprint() const {
  json j = scenario_to_json(*this);
  j["mode"].erase("controller");
  return j.dump();
}

}  // namespace pnfc
