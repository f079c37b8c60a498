#include <doctest.h>

#include "pnfc/errors.hpp"
#include "pnfc/netmodel.hpp"
#include "test_helpers.hpp"

using namespace pnfc;

TEST_CASE("incidence of a single edge") {
  std::vector<Edge> edges{{0, 1, 1.0}};
  auto c = build_incidence(edges, 2);
  CHECK(c[0][0] == 1.0);
  CHECK(c[1][0] == -1.0);
}

TEST_CASE("incidence of a chain by column construction") {
  std::vector<Edge> edges{{0, 1, 1.0}, {1, 2, 1.0}};
  auto c = build_incidence(edges, 3);
  CHECK(c[0][0] == 1.0);
  CHECK(c[1][0] == -1.0);
  CHECK(c[0][1] == 0.0);
  CHECK(c[1][1] == 1.0);
  CHECK(c[2][1] == -1.0);
}

TEST_CASE("incidence column sums vanish on random graphs") {
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + static_cast<int>(test::uniform(0, 6));
    std::vector<Edge> edges;
    for (int e = 0; e < n + 2; ++e) {
      int a = static_cast<int>(test::uniform(0, n));
      int b = static_cast<int>(test::uniform(0, n));
      if (a == b) b = (a + 1) % n;
      edges.push_back({a, b, 1.0});
    }
    auto c = build_incidence(edges, n);
    for (std::size_t col = 0; col < edges.size(); ++col) {
      double sum = 0.0;
      for (int row = 0; row < n; ++row) sum += c[static_cast<std::size_t>(row)][col];
      CHECK(sum == 0.0);
    }
  }
}

TEST_CASE("construction rejects bad graphs") {
  auto areas2 = std::vector<AreaParams>{test::basic_area(), test::basic_area()};
  CHECK_THROWS_AS(NetworkModel(2, {{0, 0, 1.0}}, areas2), ValidationError);  // self-loop
  CHECK_THROWS_AS(NetworkModel(2, {{0, 5, 1.0}}, areas2), ValidationError);  // bad endpoint
  CHECK_THROWS_AS(NetworkModel(2, {}, areas2), ValidationError);             // disconnected
  auto areas3 = std::vector<AreaParams>{test::basic_area(), test::basic_area(), test::basic_area()};
  CHECK_THROWS_AS(NetworkModel(3, {{0, 1, 1.0}}, areas3), ValidationError);  // node 2 isolated
}

TEST_CASE("construction rejects parameter violations") {
  auto mk = [&](auto mutate) {
    AreaParams a = test::basic_area();
    mutate(a);
    return NetworkModel(1, {}, {a});
  };
  CHECK_THROWS_AS(mk([](AreaParams& a) { a.damping = 0.0; }), ValidationError);
  CHECK_THROWS_AS(mk([](AreaParams& a) { a.cost_gen = -1.0; }), ValidationError);
  CHECK_THROWS_AS(mk([](AreaParams& a) { a.pg_min = 0.0; }), ValidationError);
  CHECK_THROWS_AS(mk([](AreaParams& a) { a.pl_max = -1.0; }), ValidationError);
  // A fully committed ceiling sits exactly at the operating point.
  CHECK_NOTHROW(mk([](AreaParams& a) { a.pl_max = 0.0; }));
}

TEST_CASE("tie-line flow basics") {
  NetworkModel net = test::chain3();
  SUBCASE("zero angles give zero flows") {
    Vec f = net.tie_line_flows({0.0, 0.0, 0.0});
    for (double x : f) CHECK(x == 0.0);
  }
  SUBCASE("direct formula") {
    std::vector<Edge> edges{{0, 1, 10.0}};
    NetworkModel two(2, edges, {test::basic_area(), test::basic_area()});
    Vec f = two.tie_line_flows({0.0, -0.1});
    CHECK(f[0] == doctest::Approx(1.0));
  }
  SUBCASE("uniform angles give zero flows") {
    Vec f = net.tie_line_flows({0.3, 0.3, 0.3});
    for (double x : f) CHECK(x == doctest::Approx(0.0));
  }
  SUBCASE("orientation reversal flips the sign") {
    std::vector<Edge> fwd{{0, 1, 10.0}};
    std::vector<Edge> rev{{1, 0, 10.0}};
    NetworkModel a(2, fwd, {test::basic_area(), test::basic_area()});
    NetworkModel b(2, rev, {test::basic_area(), test::basic_area()});
    Vec theta = {0.2, -0.4};
    CHECK(a.tie_line_flows(theta)[0] == -b.tie_line_flows(theta)[0]);
  }
}

TEST_CASE("net injection imbalance") {
  NetworkModel net = test::chain3();
  SUBCASE("zero state") {
    Vec u = net.net_injection_imbalance({0, 0, 0}, {0, 0, 0});
    for (double x : u) CHECK(x == 0.0);
  }
  SUBCASE("uniform angle shift is invisible") {
    Vec theta = test::random_vec(3, -0.5, 0.5);
    Vec omega = test::random_vec(3, -1.0, 1.0);
    Vec u1 = net.net_injection_imbalance(theta, omega);
    Vec shifted = theta;
    for (double& t : shifted) t += 0.7;
    Vec u2 = net.net_injection_imbalance(shifted, omega);
    for (std::size_t j = 0; j < 3; ++j) CHECK(u1[j] == doctest::Approx(u2[j]).epsilon(1e-12));
  }
  SUBCASE("matches the per-node summation oracle") {
    // Independent oracle: U_j = D_j w_j - sum_in B (th_i - th_j) + sum_out B (th_j - th_k).
    for (int trial = 0; trial < 10; ++trial) {
      Vec theta = test::random_vec(3, -0.5, 0.5);
      Vec omega = test::random_vec(3, -1.0, 1.0);
      Vec u = net.net_injection_imbalance(theta, omega);
      for (int j = 0; j < 3; ++j) {
        double expect = net.area(j).damping * omega[static_cast<std::size_t>(j)];
        for (const Edge& e : net.edges()) {
          if (e.to == j) expect -= e.susceptance * (theta[static_cast<std::size_t>(e.from)] - theta[static_cast<std::size_t>(e.to)]);
          if (e.from == j) expect += e.susceptance * (theta[static_cast<std::size_t>(e.from)] - theta[static_cast<std::size_t>(e.to)]);
        }
        CHECK(u[static_cast<std::size_t>(j)] == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  SUBCASE("network part conserves power") {
    Vec theta = test::random_vec(3, -0.5, 0.5);
    Vec zero(3, 0.0);
    Vec u = net.net_injection_imbalance(theta, zero);
    CHECK(u[0] + u[1] + u[2] == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("linear in angles and frequencies") {
    Vec t1 = test::random_vec(3, -0.5, 0.5), t2 = test::random_vec(3, -0.5, 0.5);
    Vec w1 = test::random_vec(3, -1, 1), w2 = test::random_vec(3, -1, 1);
    const double a = 1.7, b = -0.4;
    Vec tm(3), wm(3);
    for (std::size_t i = 0; i < 3; ++i) {
      tm[i] = a * t1[i] + b * t2[i];
      wm[i] = a * w1[i] + b * w2[i];
    }
    Vec u1 = net.net_injection_imbalance(t1, w1);
    Vec u2 = net.net_injection_imbalance(t2, w2);
    Vec um = net.net_injection_imbalance(tm, wm);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(um[i] == doctest::Approx(a * u1[i] + b * u2[i]).epsilon(1e-10));
  }
}

TEST_CASE("laplacian matches incidence product") {
  NetworkModel net = test::chain3();
  auto c = net.incidence_matrix();
  const auto& lap = net.laplacian();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double expect = 0.0;
      for (std::size_t e = 0; e < net.edges().size(); ++e)
        expect += c[static_cast<std::size_t>(i)][e] * net.edges()[e].susceptance *
                  c[static_cast<std::size_t>(j)][e];
      CHECK(lap[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
            doctest::Approx(expect).epsilon(1e-12));
    }
}
