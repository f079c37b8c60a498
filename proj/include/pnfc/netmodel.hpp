#pragma once

#include <span>
#include <vector>

#include "pnfc/vec.hpp"

namespace pnfc {

// Per-area physical, cost and controller parameters. Powers are deviations
// from the scheduled operating point (MW), angles rad, frequency rad/s.
struct AreaParams {
  double damping = 0.0;      // D_j, MW per rad/s
  double droop = 0.0;        // R_j
  double cost_gen = 0.0;     // generation cost weight
  double cost_load = 0.0;    // controllable-load cost weight
  double t_gen = 0.0;        // generation actuator time constant, s
  double t_load = 0.0;       // load actuator time constant, s
  double inertia = 0.0;      // M_j, MW s^2 per rad
  double pg_min = 0.0, pg_max = 0.0;  // generation capacity box, deviation MW
  double pl_min = 0.0, pl_max = 0.0;  // controllable-load capacity box, deviation MW
  double gain_lambda = 1.0;  // multiplier integrator gain
  double gain_gen = 0.0;     // 0 means prescribed 1/t_gen
  double gain_load = 0.0;    // 0 means prescribed 1/t_load

  double gamma_gen() const { return gain_gen > 0.0 ? gain_gen : 1.0 / t_gen; }
  double gamma_load() const { return gain_load > 0.0 ? gain_load : 1.0 / t_load; }
  bool prescribed_gains() const { return gain_gen <= 0.0 && gain_load <= 0.0; }
};

struct Edge {
  int from = 0;
  int to = 0;
  double susceptance = 0.0;  // MW per rad
};

// Node-edge incidence matrix, one column per edge: +1 at the tail row,
// -1 at the head row. Dense (n+1) x m, row-major.
std::vector<Vec> build_incidence(std::span<const Edge> edges, int node_count);

// Connected multi-area network with one equivalent generator, controllable
// load and uncontrollable load per node. Node 0 is the angle reference.
// Immutable after construction; safe to share across threads.
class NetworkModel {
public:
  NetworkModel(int node_count, std::vector<Edge> edges, std::vector<AreaParams> areas);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const AreaParams& area(int j) const { return areas_[static_cast<std::size_t>(j)]; }
  const std::vector<AreaParams>& areas() const { return areas_; }

  // DC power flow on each edge: B_ij (theta_i - theta_j).
  Vec tie_line_flows(const Vec& theta) const;

  // Net injection imbalance U(theta, omega) = D omega + C B C^T theta,
  // evaluated per node by summing over incident edges.
  Vec net_injection_imbalance(const Vec& theta, const Vec& omega) const;

  // Dense weighted Laplacian C B C^T, (n+1) x (n+1).
  const std::vector<Vec>& laplacian() const { return laplacian_; }

  std::vector<Vec> incidence_matrix() const { return build_incidence(edges_, node_count_); }

  bool all_prescribed_gains() const;

private:
  int node_count_;
  std::vector<Edge> edges_;
  std::vector<AreaParams> areas_;
  std::vector<Vec> laplacian_;
};

}  // namespace pnfc
