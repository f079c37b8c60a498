#include <doctest.h>

#include <cmath>

#include "pnfc/analysis.hpp"
#include "pnfc/errors.hpp"
#include "test_helpers.hpp"

using namespace pnfc;

namespace {

const TrajectoryRecord& kundur_run() {
  static TrajectoryRecord rec = integrate(load_scenario(test::scenario_path("kundur4.scenario")));
  return rec;
}

}  // namespace

TEST_CASE("zero trajectory detects the zero equilibrium") {
  Scenario s = load_scenario(test::scenario_path("zero.scenario"));
  TrajectoryRecord rec = integrate(s);
  EquilibriumDetection det = detect_equilibrium(rec);
  CHECK(det.status == EquilibriumStatus::reached);
  for (double x : det.state.flatten()) CHECK(x == 0.0);
}

TEST_CASE("full four-area run certifies against the published equilibrium") {
  const TrajectoryRecord& rec = kundur_run();
  EquilibriumDetection det = detect_equilibrium(rec);
  REQUIRE(det.status == EquilibriumStatus::reached);

  NetworkModel net = rec.scenario.network();
  OptimalityCertificate cert =
      certify_optimality(det.state, net, rec.scenario.final_disturbance(), 0.5);
  CHECK(cert.pass);
  CHECK(cert.max_gen_gap_mw < 1e-3);
  CHECK(cert.max_omega < 1e-6);
  CHECK(cert.max_flow_mw < 1e-3);

  const Vec table_pg{676.0, 618.0, 758.0, 570.0};
  const Vec table_pl{80.0, 85.3, 86.2, 60.0};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(std::fabs(det.state.p_gen[j] + rec.scenario.initial_pg_actual[j] - table_pg[j]) < 0.5);
    CHECK(std::fabs(det.state.p_load[j] + rec.scenario.initial_pl_actual[j] - table_pl[j]) < 0.5);
  }
}

TEST_CASE("certified tail state is a fixed point of the projection") {
  const TrajectoryRecord& rec = kundur_run();
  NetworkModel net = rec.scenario.network();
  EquilibriumDetection det = detect_equilibrium(rec);
  REQUIRE(det.status == EquilibriumStatus::reached);
  CHECK(fixed_point_residual(det.state, net, rec.scenario.final_disturbance()) < 1e-6);
}

TEST_CASE("stationary multiplier implies per-node balance") {
  const TrajectoryRecord& rec = kundur_run();
  EquilibriumDetection det = detect_equilibrium(rec);
  REQUIRE(det.status == EquilibriumStatus::reached);
  Vec p = rec.scenario.final_disturbance();
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(std::fabs(det.state.p_gen[j] - det.state.p_load[j] - p[j]) < 1e-8);
}

TEST_CASE("ideal controller mode certifies end to end as well") {
  Scenario s = load_scenario(test::scenario_path("kundur4.scenario"),
                             {{"mode.controller", "ideal"}});
  CertificationReport rep = certify_run(run_scenario(s), 0.5);
  CHECK(rep.detection.status == EquilibriumStatus::reached);
  CHECK(rep.certified);
  CHECK(rep.lyapunov.violations == 0);
}

TEST_CASE("actuator states respect the first-order-lag transient envelope") {
  // Starting from rest at the step time, a lagged state driven by a command
  // confined to [lo, hi] stays within [lo, hi] * (1 - exp(-tau/T)).
  const TrajectoryRecord& rec = kundur_run();
  NetworkModel net = rec.scenario.network();
  const double t_step = rec.scenario.last_disturbance_time();
  for (int s = 0; s < rec.samples(); ++s) {
    auto si = static_cast<std::size_t>(s);
    double tau = rec.times[si] - t_step;
    for (std::size_t j = 0; j < 4; ++j) {
      const AreaParams& a = net.area(static_cast<int>(j));
      double fg = tau <= 0.0 ? 0.0 : 1.0 - std::exp(-tau / a.t_gen);
      double fl = tau <= 0.0 ? 0.0 : 1.0 - std::exp(-tau / a.t_load);
      CHECK(rec.p_gen[si][j] >= a.pg_min * fg - 1e-9);
      CHECK(rec.p_gen[si][j] <= a.pg_max * fg + 1e-9);
      CHECK(rec.p_load[si][j] >= a.pl_min * fl - 1e-9);
      CHECK(rec.p_load[si][j] <= a.pl_max * fl + 1e-9);
    }
  }
}

TEST_CASE("no late divergence: peaks are set in the first quarter of the run") {
  const TrajectoryRecord& rec = kundur_run();
  NetworkModel net = rec.scenario.network();
  double quarter = rec.scenario.integrator.horizon * 0.25;
  Vec early_peak(rec.state_at(0, net).size(), 0.0);
  Vec total_peak(early_peak.size(), 0.0);
  for (int s = 0; s < rec.samples(); ++s) {
    Vec w = rec.state_at(s, net).flatten();
    for (std::size_t i = 0; i < w.size(); ++i) {
      total_peak[i] = std::max(total_peak[i], std::fabs(w[i]));
      if (rec.times[static_cast<std::size_t>(s)] <= quarter)
        early_peak[i] = std::max(early_peak[i], std::fabs(w[i]));
    }
  }
  for (std::size_t i = 0; i < total_peak.size(); ++i)
    CHECK(total_peak[i] <= 10.0 * early_peak[i] + 1e-12);
}

TEST_CASE("truncated run does not certify") {
  Scenario s = load_scenario(test::scenario_path("kundur4.scenario"),
                             {{"integrator.horizon", "12"}});
  TrajectoryRecord rec = integrate(s);
  EquilibriumDetection det = detect_equilibrium(rec);
  CHECK(det.status == EquilibriumStatus::not_reached);
}

TEST_CASE("too few tail samples is inconclusive, not false") {
  Scenario s = load_scenario(test::scenario_path("kundur4.scenario"),
                             {{"integrator.horizon", "12"}, {"integrator.sample", "0.1"}});
  TrajectoryRecord rec = integrate(s);
  EquilibriumDetection det = detect_equilibrium(rec);
  CHECK(det.status == EquilibriumStatus::inconclusive);
}

TEST_CASE("certification accepts the solver's own output at tight tolerance") {
  NetworkModel net = test::chain3();
  Vec p{15.0, -8.0, 22.0};
  EquilibriumSolution eq = solve_pbo(net, p);
  REQUIRE(eq.feasible);
  AugmentedState star = AugmentedState::from_equilibrium(eq, net);
  OptimalityCertificate cert = certify_optimality(star, net, p, 1e-9, 1e-9, 1e-9);
  CHECK(cert.pass);
}

TEST_CASE("zeroed multipliers break certification at every disturbed node") {
  NetworkModel net = test::chain3();
  Vec p{15.0, -8.0, 22.0};
  EquilibriumSolution eq = solve_pbo(net, p);
  AugmentedState star = AugmentedState::from_equilibrium(eq, net);
  star.lambda = Vec(3, 0.0);
  OptimalityCertificate cert = certify_optimality(star, net, p, 1e-6);
  CHECK_FALSE(cert.pass);
  for (std::size_t j = 0; j < 3; ++j) {
    double expect = net.area(static_cast<int>(j)).cost_gen * eq.p_gen[j];
    CHECK(cert.kkt.nodes[j].stat_gen == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("lyapunov descent holds along the four-area trajectory") {
  LyapunovCheck chk = check_lyapunov_descent(kundur_run());
  CHECK(chk.samples > 1000);
  CHECK(chk.violations == 0);
  CHECK(chk.dissipation_violations == 0);
  CHECK(std::fabs(chk.value_at_end) < 1e-9);
}

TEST_CASE("time-reversed values trip the descent detector") {
  LyapunovCheck chk = check_lyapunov_descent_reversed(kundur_run());
  CHECK(chk.violations > 0);
}

TEST_CASE("constant equilibrium trajectory keeps the value at zero") {
  Scenario s = load_scenario(test::scenario_path("zero.scenario"));
  TrajectoryRecord rec = integrate(s);
  LyapunovCheck chk = check_lyapunov_descent(rec);
  CHECK(chk.violations == 0);
  CHECK(chk.value_at_end == 0.0);
}

namespace {

Scenario small_chain(double dist_mw) {
  Scenario s;
  s.node_names = {"A", "B", "C"};
  s.edges = {{0, 1, 10.0}, {1, 2, 25.0}};
  for (int j = 0; j < 3; ++j) {
    AreaParams a = test::basic_area(0.1);
    a.cost_gen = 1.5 + 0.5 * j;
    a.cost_load = 2.0 + 0.25 * j;
    a.gain_lambda = 4.0;
    s.areas.push_back(a);
    s.initial_pg_actual.push_back(500.0);
    s.initial_pl_actual.push_back(100.0);
  }
  s.disturbances.push_back({0.5, 0, dist_mw});
  s.integrator = {1e-3, 4.0, 1e-2};
  s.mode = ControllerMode::measured;
  return s;
}

double full_gap(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  double gap = 0.0;
  for (int k = 0; k < a.samples(); ++k) {
    auto si = static_cast<std::size_t>(k);
    for (std::size_t j = 0; j < a.p_gen[si].size(); ++j) {
      gap = std::max(gap, std::fabs(a.p_gen[si][j] - b.p_gen[si][j]));
      gap = std::max(gap, std::fabs(a.p_load[si][j] - b.p_load[si][j]));
    }
  }
  return gap;
}

}  // namespace

TEST_CASE("saturation comparison") {
  SUBCASE("zero scenario: both runs identical") {
    Scenario s = load_scenario(test::scenario_path("zero.scenario"));
    TrajectoryRecord sat = integrate(s);
    Scenario su = s;
    su.mode = ControllerMode::unsaturated;
    TrajectoryRecord unsat = integrate(su);
    SaturationComparison cmp = compare_saturation(sat, unsat);
    CHECK(cmp.excursion_saturated == 0.0);
    CHECK(cmp.excursion_unsaturated == 0.0);
    CHECK(cmp.endpoint_gap_mw == 0.0);
  }
  SUBCASE("mismatched scenarios are rejected") {
    Scenario a = small_chain(60.0);
    Scenario b = small_chain(30.0);
    b.mode = ControllerMode::unsaturated;
    TrajectoryRecord ra = integrate(a);
    TrajectoryRecord rb = integrate(b);
    CHECK_THROWS_AS(compare_saturation(ra, rb), ValidationError);
  }
  SUBCASE("two saturated records are rejected") {
    Scenario a = small_chain(60.0);
    TrajectoryRecord ra = integrate(a);
    CHECK_THROWS_AS(compare_saturation(ra, ra), ValidationError);
  }
  SUBCASE("below some disturbance size the clamp never engages") {
    // Bisection on the step magnitude: large steps separate the two modes,
    // small ones make them identical.
    double scale = 60.0;
    auto gap_at = [&](double mw) {
      Scenario s = small_chain(mw);
      TrajectoryRecord sat = integrate(s);
      Scenario su = s;
      su.mode = ControllerMode::unsaturated;
      TrajectoryRecord unsat = integrate(su);
      return full_gap(sat, unsat);
    };
    REQUIRE(gap_at(scale) > 1e-6);  // clamps active at the full step
    double lo = 0.0, hi = scale;
    for (int it = 0; it < 6; ++it) {
      double mid = 0.5 * (lo + hi);
      if (gap_at(mid) > 0.0)
        hi = mid;
      else
        lo = mid;
    }
    REQUIRE(lo > 0.0);
    CHECK(gap_at(lo) == 0.0);  // identical trajectories without clamping
  }
}

TEST_CASE("mismatched sampling is rejected for the formulation gap") {
  Scenario s = small_chain(10.0);
  TrajectoryRecord a = integrate(s);
  Scenario s2 = s;
  s2.integrator.sample = 2e-2;
  TrajectoryRecord b = integrate(s2);
  CHECK_THROWS_AS(formulation_gap(a, b), ValidationError);
}

TEST_CASE("certify_run skips the descent check in unsaturated mode") {
  Scenario s = load_scenario(test::scenario_path("kundur4.scenario"),
                             {{"mode.controller", "unsaturated"}});
  CertificationReport rep = certify_run(run_scenario(s), 0.5);
  CHECK(rep.detection.status == EquilibriumStatus::reached);
  CHECK(rep.lyapunov.samples == 0);
  CHECK(rep.certified);
}

TEST_CASE("certify_run on the zero scenario") {
  Scenario s = load_scenario(test::scenario_path("zero.scenario"));
  CertificationReport rep = certify_run(run_scenario(s), 1e-9);
  CHECK(rep.detection.status == EquilibriumStatus::reached);
  CHECK(rep.certified);
  CHECK(rep.max_mu_gap == 0.0);
  CHECK(rep.max_overshoot == 0.0);
}
