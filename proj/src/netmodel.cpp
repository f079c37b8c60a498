#include "pnfc/netmodel.hpp"

#include <queue>
#include <stdexcept>
#include <string>

#include "pnfc/errors.hpp"

namespace pnfc {

std::vector<Vec> build_incidence(std::span<const Edge> edges, int node_count) {
  if (node_count < 1) throw ValidationError("network needs at least one node");
  std::vector<Vec> c(static_cast<std::size_t>(node_count),
                     Vec(edges.size(), 0.0));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& ed = edges[e];
    if (ed.from < 0 || ed.from >= node_count || ed.to < 0 || ed.to >= node_count)
      throw ValidationError("edge " + std::to_string(e) + " endpoint out of range");
    if (ed.from == ed.to)
      throw ValidationError("edge " + std::to_string(e) + " is a self-loop");
    c[static_cast<std::size_t>(ed.from)][e] = 1.0;
    c[static_cast<std::size_t>(ed.to)][e] = -1.0;
  }
  return c;
}

namespace {

void check_area(const AreaParams& a, int j) {
  auto fail = [j](const std::string& msg) {
    throw ValidationError("area " + std::to_string(j) + ": " + msg);
  };
  if (!(a.damping > 0.0)) fail("damping must be > 0");
  if (!(a.droop > 0.0)) fail("droop must be > 0");
  if (!(a.cost_gen > 0.0)) fail("generation cost weight must be > 0");
  if (!(a.cost_load > 0.0)) fail("load cost weight must be > 0");
  if (!(a.t_gen > 0.0)) fail("generation time constant must be > 0");
  if (!(a.t_load > 0.0)) fail("load time constant must be > 0");
  if (!(a.inertia > 0.0)) fail("inertia must be > 0");
  if (!(a.gain_lambda > 0.0)) fail("multiplier gain must be > 0");
  // Capacity boxes must straddle the scheduled operating point (deviation 0).
  // The ceiling may sit exactly at 0 (a fully committed resource); the floor
  // must leave strictly positive downward margin.
  if (!(a.pg_min < 0.0)) fail("generation lower limit must be < 0 in deviation coordinates");
  if (!(a.pg_max >= 0.0)) fail("generation upper limit must be >= 0 in deviation coordinates");
  if (!(a.pl_min < 0.0)) fail("load lower limit must be < 0 in deviation coordinates");
  if (!(a.pl_max >= 0.0)) fail("load upper limit must be >= 0 in deviation coordinates");
}

}  // namespace

NetworkModel::NetworkModel(int node_count, std::vector<Edge> edges,
                           std::vector<AreaParams> areas)
    : node_count_(node_count), edges_(std::move(edges)), areas_(std::move(areas)) {
  if (node_count_ < 1) throw ValidationError("network needs at least one node");
  if (areas_.size() != static_cast<std::size_t>(node_count_))
    throw ValidationError("expected one area parameter set per node");
  build_incidence(edges_, node_count_);  // endpoint and self-loop checks
  for (const Edge& e : edges_)
    if (!(e.susceptance > 0.0))
      throw ValidationError("tie-line susceptance must be > 0");
  for (int j = 0; j < node_count_; ++j) check_area(areas_[static_cast<std::size_t>(j)], j);

  // Connectivity over the undirected view.
  if (node_count_ > 1) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(node_count_));
    for (const Edge& e : edges_) {
      adj[static_cast<std::size_t>(e.from)].push_back(e.to);
      adj[static_cast<std::size_t>(e.to)].push_back(e.from);
    }
    std::vector<char> seen(static_cast<std::size_t>(node_count_), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          ++reached;
          q.push(v);
        }
    }
    if (reached != node_count_) throw ValidationError("network graph is not connected");
  }

  laplacian_.assign(static_cast<std::size_t>(node_count_), Vec(static_cast<std::size_t>(node_count_), 0.0));
  for (const Edge& e : edges_) {
    auto i = static_cast<std::size_t>(e.from), j = static_cast<std::size_t>(e.to);
    laplacian_[i][i] += e.susceptance;
    laplacian_[j][j] += e.susceptance;
    laplacian_[i][j] -= e.susceptance;
    laplacian_[j][i] -= e.susceptance;
  }
}

Vec NetworkModel::tie_line_flows(const Vec& theta) const {
  if (theta.size() != static_cast<std::size_t>(node_count_))
    throw std::invalid_argument("tie_line_flows: angle vector has wrong length");
  Vec f(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e)
    f[e] = edges_[e].susceptance *
           (theta[static_cast<std::size_t>(edges_[e].from)] - theta[static_cast<std::size_t>(edges_[e].to)]);
  return f;
}

Vec NetworkModel::net_injection_imbalance(const Vec& theta, const Vec& omega) const {
  if (theta.size() != static_cast<std::size_t>(node_count_) ||
      omega.size() != static_cast<std::size_t>(node_count_))
    throw std::invalid_argument("net_injection_imbalance: vector has wrong length");
  Vec u(static_cast<std::size_t>(node_count_));
  for (int j = 0; j < node_count_; ++j)
    u[static_cast<std::size_t>(j)] =
        areas_[static_cast<std::size_t>(j)].damping * omega[static_cast<std::size_t>(j)];
  // D omega minus net tie-line inflow, accumulated edge by edge.
  for (const Edge& e : edges_) {
    double flow = e.susceptance *
                  (theta[static_cast<std::size_t>(e.from)] - theta[static_cast<std::size_t>(e.to)]);
    u[static_cast<std::size_t>(e.from)] += flow;
    u[static_cast<std::size_t>(e.to)] -= flow;
  }
  return u;
}

bool NetworkModel::all_prescribed_gains() const {
  for (const AreaParams& a : areas_)
    if (!a.prescribed_gains()) return false;
  return true;
}

}  // namespace pnfc
