#include <doctest.h>

#include <cmath>
#include <random>

#include "fleetflow/duality.hpp"
#include "fleetflow/solver.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fleetflow;

namespace {

double evaluate_static(const Instance& inst, const std::vector<double>& q, std::size_t grid = 1000) {
  const auto env = build_envelopes(inst, grid);
  double v = 0.0;
  for (std::size_t e = 0; e < q.size(); ++e) v += envelope_value(env[e][0], q[e]);
  return v;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("self-loop optimum is interior") {
    const auto s = solve_static(testing::self_loop());
    REQUIRE(s.certified);
    CHECK(std::abs(s.original_q[0][0] - 0.5) <= 1e-5);
    CHECK(std::abs(s.result.plan.objective - 0.25) <= 1e-6);
    CHECK(std::abs(s.result.cert.lambda[0]) <= 1e-9);
  }

  TEST_CASE("two-node optimum binds capacity") {
    SolverConfig cfg;
    cfg.grid_size = 20000;
    const auto s = solve_static(testing::two_node(), cfg);
    REQUIRE(s.certified);
    CHECK(std::abs(s.original_q[0][0] - 0.5) <= 1e-5);
    CHECK(std::abs(s.original_q[0][1] - 0.5) <= 1e-5);
    CHECK(s.result.plan.objective == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(std::abs(s.result.cert.lambda[0] - 1.0) <= 1e-4);
    CHECK(s.result.cert.mu[0][0] == doctest::Approx(s.result.cert.mu[0][1]));
  }

  TEST_CASE("unprofitable instance keeps every driver idle") {
    const auto d = DemandCurve::linear(1.0, 1.0);
    const auto inst = testing::make_instance({"A", "B"}, {{"AB", 0, 1, 1, 2.0}, {"BA", 1, 0, 1, 2.0}}, {d, d});
    const auto s = solve_static(inst);
    REQUIRE(s.certified);
    CHECK(s.result.plan.objective == doctest::Approx(0.0));
    for (double q : s.original_q[0]) CHECK(q == doctest::Approx(0.0));
  }

  TEST_CASE("node relabeling leaves the objective unchanged") {
    const auto inst = testing::three_node();
    using fleetflow::DemandCurve;
    const auto relabeled = testing::make_instance(
        {"C", "A", "B"}, {{"BA", 2, 1, 1}, {"CA", 0, 1, 1}, {"BC", 2, 0, 3, 0.1}, {"AB", 1, 2, 2}},
        {DemandCurve::step({}), DemandCurve::linear(1.0, 1.0), DemandCurve::linear(2.0, 1.0, 1.0),
         DemandCurve::step({{3.0, 0.3}, {1.0, 0.7}})});
    const auto a = solve_static(inst);
    const auto b = solve_static(relabeled);
    REQUIRE(a.certified);
    REQUIRE(b.certified);
    CHECK(std::abs(a.result.plan.objective - b.result.plan.objective) <= 1e-9);
  }

  TEST_CASE("optimum beats hand-built feasible plans") {
    const auto inst = testing::three_node();
    const auto s = solve_static(inst);
    REQUIRE(s.certified);
    CHECK(s.result.plan.objective >= 0.0);
    // Circulation A->B->C->A at 1/6 uses 6 units of travel per unit flow.
    CHECK(s.result.plan.objective >= evaluate_static(inst, {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.0}) - 1e-9);
    // A->B->A at 1/3.
    CHECK(s.result.plan.objective >= evaluate_static(inst, {1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0}) - 1e-9);
  }

  TEST_CASE("static plan invariants") {
    const auto s = solve_static(testing::three_node());
    REQUIRE(s.certified);
    const auto& plan = s.result.plan;
    const auto& g = s.unified.instance.graph;
    double mass = 0.0;
    for (double w : plan.w[0]) {
      CHECK(w >= -1e-12);
      mass += w;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      double out = 0.0;
      double in = 0.0;
      for (std::size_t e : g.out_edges(v)) out += plan.q[0][e];
      for (std::size_t e : g.in_edges(v)) in += plan.q[0][e];
      CHECK(out <= plan.w[0][v] + 1e-7);
      CHECK(std::abs(out - in) <= 1e-7);
    }
    CHECK(s.result.cert.lambda[0] >= 0.0);
    double total = 0.0;
    for (double q : plan.q[0]) total += q;
    CHECK(std::abs(s.result.cert.lambda[0] * (total - 1.0)) <= 1e-6);
  }

  TEST_CASE("enlarging demand never lowers the optimum") {
    const auto small = testing::make_instance({"A", "B"}, {{"AB", 0, 1}, {"BA", 1, 0}},
                                              {DemandCurve::linear(1.0, 1.0), DemandCurve::linear(0.5, 1.0)});
    const auto big = testing::make_instance({"A", "B"}, {{"AB", 0, 1}, {"BA", 1, 0}},
                                            {DemandCurve::linear(1.5, 1.0), DemandCurve::linear(0.8, 1.0)});
    CHECK(solve_static(big).result.plan.objective >= solve_static(small).result.plan.objective - 1e-9);
  }

  TEST_CASE("matches grid search on small random instances") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const auto a = oracle::random_atoms(rng, 3);
      const auto b = oracle::random_atoms(rng, 3);
      auto curve = [](const oracle::Atoms& x) {
        std::vector<ValueAtom> va;
        for (std::size_t k = 0; k < x.value.size(); ++k) va.push_back({x.value[k], x.mass[k]});
        return DemandCurve::step(va);
      };
      const double c = 0.3 * u(rng);
      const auto inst =
          testing::make_instance({"A", "B"}, {{"AB", 0, 1, 1, c}, {"BA", 1, 0, 1, 0.0}}, {curve(a), curve(b)});
      const auto s = solve_static(inst);
      REQUIRE(s.certified);
      const oracle::AtomEnvelope ea(a, c, 1.0);
      const oracle::AtomEnvelope eb(b, 0.0, 1.0);
      const double best = oracle::grid_search(2, {{0, 1}, {1, 0}}, {ea, eb}, 1e-3);
      CHECK(std::abs(s.result.plan.objective - best) <= 2e-3);
    }
  }

  TEST_CASE("one-step dynamic program is a capacity-limited maximization") {
    const auto inst = testing::two_node();
    const auto s = solve_dynamic(inst, 1, DriverState::at_nodes(inst.graph, {0.8, 0.2}));
    REQUIRE(s.certified);
    CHECK(s.original_q[0][0] == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(s.original_q[0][1] == doctest::Approx(0.2).epsilon(1e-6));
  }

  TEST_CASE("dynamic replica of a static optimum") {
    const auto inst = testing::two_node();
    const auto st = solve_static(inst);
    const auto dy = solve_dynamic(inst, 3, st.original_state[0]);
    REQUIRE(dy.certified);
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t e = 0; e < 2; ++e) CHECK(std::abs(dy.original_q[t][e] - st.original_q[0][e]) <= 1e-5);
    CHECK(std::abs(dy.result.plan.objective - 3.0 * st.result.plan.objective) <= 1e-6);
  }

  TEST_CASE("per-step mass is conserved") {
    const auto inst = testing::three_node();
    const auto dy = solve_dynamic(inst, 6, DriverState::at_nodes(inst.graph, {1.0, 0.0, 0.0}));
    REQUIRE(dy.certified);
    for (const auto& state : dy.original_state) CHECK(state.total_mass() == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("relaxed supply variants are no worse") {
    const auto inst = testing::two_node();
    const auto start = DriverState::at_nodes(inst.graph, {0.5, 0.5});
    const double base = solve_dynamic(inst, 4, start).result.plan.objective;
    const auto total = solve_dynamic(inst, 4, start, SupplyConstraint::total());
    const auto soft = solve_dynamic(inst, 4, start, SupplyConstraint::soft({{0.5, 0.0}}));
    REQUIRE(total.certified);
    REQUIRE(soft.certified);
    CHECK(total.result.plan.objective >= base - 1e-9);
    CHECK(soft.result.plan.objective >= base - 1e-9);
  }

  TEST_CASE("bad start state is rejected") {
    const auto inst = testing::two_node();
    CHECK_THROWS(solve_dynamic(inst, 2, DriverState::at_nodes(inst.graph, {0.5, 0.2})));
    CHECK_THROWS(solve_dynamic(inst, 0, DriverState::at_nodes(inst.graph, {0.5, 0.5})));
  }

  TEST_CASE("supply constraint parsing") {
    CHECK(SupplyConstraint::parse("per_step").kind == SupplyKind::PerStep);
    const auto t = SupplyConstraint::parse("total:10");
    CHECK(t.kind == SupplyKind::TotalAccumulated);
    CHECK(*t.budget == 10.0);
    const auto s = SupplyConstraint::parse("soft:0.1@1,0.2@3");
    REQUIRE(s.tiers.size() == 2);
    CHECK(s.attraction_cost(0.2) == doctest::Approx(0.1 + 0.3));
    CHECK_THROWS(SupplyConstraint::parse("soft:0.1@3,0.2@1"));
    CHECK_THROWS(SupplyConstraint::parse("bogus"));
  }

  TEST_CASE("plan and certificate json round trip") {
    const auto inst = testing::three_node();
    const auto s = solve_static(inst);
    const auto plan = plan_from_json(plan_to_json(s, inst), s.unified.instance.graph);
    const auto cert = certificate_from_json(certificate_to_json(s), s.unified.instance.graph);
    CHECK(plan.q == s.result.plan.q);
    CHECK(plan.w == s.result.plan.w);
    CHECK(cert.lambda == s.result.cert.lambda);
    CHECK(cert.mu == s.result.cert.mu);
    CHECK(kkt_check(s.unified, s.envelopes, plan, cert).passed);
  }
}
