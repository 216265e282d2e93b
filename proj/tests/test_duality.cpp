#include <doctest.h>

#include <random>

#include "fleetflow/duality.hpp"
#include "helpers.hpp"

using namespace fleetflow;

TEST_SUITE("duality") {
  TEST_CASE("self-loop optimum passes") {
    const auto s = solve_static(testing::self_loop());
    const auto r = kkt_check(s.unified, s.envelopes, s.result.plan, s.result.cert);
    CHECK(r.passed);
    CHECK(r.max_stationarity <= 1e-6);
    CHECK(r.slackness <= 1e-6);
  }

  TEST_CASE("wrong lambda is caught") {
    const auto s = solve_static(testing::self_loop());
    auto cert = s.result.cert;
    cert.lambda[0] = 0.5;
    const auto r = kkt_check(s.unified, s.envelopes, s.result.plan, cert);
    CHECK_FALSE(r.passed);
    CHECK(r.max_stationarity == doctest::Approx(0.5).epsilon(1e-3));
  }

  TEST_CASE("idle plan with zero duals fails on a profitable edge") {
    const auto s = solve_static(testing::self_loop());
    auto plan = s.result.plan;
    for (auto& q : plan.q[0]) q = 0.0;
    auto cert = s.result.cert;
    cert.lambda[0] = 0.0;
    for (auto& m : cert.mu[0]) m = 0.0;
    CHECK_FALSE(kkt_check(s.unified, s.envelopes, plan, cert).passed);
  }

  TEST_CASE("dimension mismatch is rejected") {
    const auto s = solve_static(testing::two_node());
    auto plan = s.result.plan;
    plan.q[0].pop_back();
    CHECK_THROWS(kkt_check(s.unified, s.envelopes, plan, s.result.cert));
  }

  TEST_CASE("certified solves pass on every module instance") {
    for (const auto& inst : {testing::self_loop(), testing::two_node(), testing::three_node()}) {
      const auto s = solve_static(inst);
      REQUIRE(s.certified);
      const auto r = kkt_check(s.unified, s.envelopes, s.result.plan, s.result.cert);
      CHECK(r.passed);
      CHECK(r.gap <= 1e-6);
      const auto start = DriverState::at_nodes(inst.graph, initial_distribution_or_uniform(inst));
      for (const auto& supply :
           {SupplyConstraint::per_step(), SupplyConstraint::total(), SupplyConstraint::soft({{0.2, 0.3}, {0.5, 1.0}})}) {
        const auto d = solve_dynamic(inst, 5, start, supply);
        REQUIRE(d.certified);
        CHECK(kkt_check(d.unified, d.envelopes, d.result.plan, d.result.cert, supply).passed);
      }
    }
  }

  TEST_CASE("weak duality holds for random multipliers") {
    const auto s = solve_static(testing::three_node());
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      auto cert = s.result.cert;
      cert.lambda[0] = u(rng);
      for (auto& m : cert.mu[0]) m = u(rng) - 1.0;
      const auto r = kkt_check(s.unified, s.envelopes, s.result.plan, cert);
      CHECK(r.primal_objective <= -r.dual_function + 1e-9);
    }
  }

  TEST_CASE("marginal report reads lambda") {
    const auto idle = solve_static(testing::self_loop());
    CHECK(marginal_report(idle.result.cert, idle.unified.instance.graph).find("idle") != std::string::npos);
    const auto busy = solve_static(testing::two_node());
    CHECK(marginal_report(busy.result.cert, busy.unified.instance.graph).find("busy") != std::string::npos);
  }
}
