#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "pnfc/netmodel.hpp"
#include "pnfc/vec.hpp"

namespace pnfc {

enum class ControllerMode { ideal, measured, unsaturated };
enum class Formulation { physical, projected, both };
enum class OmegaDotEstimator { exact, backward_difference };

std::string to_string(ControllerMode m);
std::string to_string(Formulation f);
std::string to_string(OmegaDotEstimator e);

struct DisturbanceStep {
  double t = 0.0;      // s
  int node = 0;
  double delta_mw = 0.0;
};

struct IntegratorSettings {
  double h = 1e-3;        // s
  double horizon = 60.0;  // s
  double sample = 1e-2;   // s
};

// Complete experiment description. Capacity limits in the file are actual
// values; they are converted to deviation coordinates against the initial
// operating point when the file is loaded.
struct Scenario {
  std::vector<std::string> node_names;
  std::vector<Edge> edges;
  std::vector<AreaParams> areas;       // deviation coordinates
  Vec initial_pg_actual;               // MW, for reporting only
  Vec initial_pl_actual;
  // Capacity limits exactly as the file stated them (actual values); kept so
  // write/load round-trips are bit-exact. Empty for in-memory scenarios.
  std::vector<std::array<double, 2>> pg_limits_actual, pl_limits_actual;
  std::vector<DisturbanceStep> disturbances;
  IntegratorSettings integrator;
  ControllerMode mode = ControllerMode::measured;
  Formulation formulation = Formulation::physical;
  bool track_mu = true;
  OmegaDotEstimator estimator = OmegaDotEstimator::exact;

  int node_count() const { return static_cast<int>(node_names.size()); }
  NetworkModel network() const { return NetworkModel(node_count(), edges, areas); }

  // Sum of all steps scheduled at or before t, per node.
  Vec disturbance_at(double t) const;
  Vec final_disturbance() const;
  double last_disturbance_time() const;  // 0 when there are none

  // Everything except the controller/formulation mode block, serialized;
  // used to decide whether two records came from the same experiment.
  std::string fingerprint() const;
};

// Loads and validates a scenario file (JSON). Schema violations carry the
// offending field path; model-assumption violations (positivity, capacity
// boxes, feasibility of the final disturbance) are model errors.
Scenario load_scenario(const std::string& path);

// Same, after applying dotted-path overrides such as
// {"integrator.h","5e-4"} or {"areas.0.gl_gain","4"}; "*" indexes all array
// elements. Paths must reference existing fields.
Scenario load_scenario(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

void write_scenario(const Scenario& s, const std::string& path);

}  // namespace pnfc
