#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fleetflow/demand.hpp"
#include "fleetflow/graph.hpp"
#include "fleetflow/instance.hpp"
#include "fleetflow/objective.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fleetflow;

namespace {

bool mentions(const std::vector<std::string>& report, const std::string& text) {
  for (const auto& r : report) {
    if (r.find(text) != std::string::npos) return true;
  }
  return false;
}

DemandCurve step_curve() { return DemandCurve::step({{3.0, 0.3}, {1.0, 0.7}}); }

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("two-way pair is valid") {
    CityGraph g({"A", "B"}, {{"AB", 0, 1, 1, 0.0, 0.0}, {"BA", 1, 0, 1, 0.0, 0.0}});
    CHECK(validate_graph(g).empty());
  }

  TEST_CASE("one-way pair is not strongly connected") {
    CityGraph g({"A", "B"}, {{"AB", 0, 1, 1, 0.0, 0.0}});
    CHECK(mentions(validate_graph(g), "not strongly connected"));
  }

  TEST_CASE("directed ring of five is valid") {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < 5; ++i) edges.push_back({"e" + std::to_string(i), i, (i + 1) % 5, 1, 0.0, 0.0});
    CityGraph g({"a", "b", "c", "d", "e"}, edges);
    CHECK(validate_graph(g).empty());
  }

  TEST_CASE("bad travel time, negative cost and duplicate ids are all reported") {
    CityGraph g({"A", "B"}, {{"x", 0, 1, 0, -1.0, 0.0}, {"x", 1, 0, 1, 0.0, 0.0}});
    const auto report = validate_graph(g);
    CHECK(mentions(report, "travel_time"));
    CHECK(mentions(report, "negative cost"));
    CHECK(mentions(report, "duplicate edge id"));
  }

  TEST_CASE("edge endpoints out of range throw") {
    CHECK_THROWS(CityGraph({"A"}, {{"AB", 0, 1, 1, 0.0, 0.0}}));
  }
}

TEST_SUITE("demand") {
  TEST_CASE("linear curve") {
    const auto d = DemandCurve::linear(1.0, 1.0);
    CHECK(d(0.3) == doctest::Approx(0.7));
    CHECK(d.inverse(0.25) == doctest::Approx(0.75));
    CHECK(d(2.0) == 0.0);
  }

  TEST_CASE("step curve evaluation and inverse") {
    const auto d = step_curve();
    CHECK(d(2.0) == doctest::Approx(0.3));
    CHECK(d.inverse(0.2) == doctest::Approx(3.0));
    CHECK(d.inverse(0.65) == doctest::Approx(1.0));
    CHECK(d.kinks().size() >= 1);
  }

  TEST_CASE("lognormal survival near zero") {
    const auto d = DemandCurve::lognormal(0.0, 1.0, 1.0);
    CHECK(d(1e-12) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("negative price is rejected") {
    CHECK_THROWS_AS(DemandCurve::linear(1.0, 1.0)(-0.1), std::domain_error);
  }

  TEST_CASE("inverse outside (0, D(0)] is rejected") {
    const auto d = DemandCurve::linear(1.0, 1.0);
    CHECK_THROWS(d.inverse(0.0));
    CHECK_THROWS(d.inverse(1.5));
  }

  TEST_CASE("normalization pads every curve to one at price zero") {
    const auto d = step_curve().scaled(2.0).with_ceiling(1.0);
    CHECK(d(0.0) == doctest::Approx(1.0));
    CHECK(d(2.0) == doctest::Approx(0.15));
    CHECK(d.raw_volume() == doctest::Approx(0.5));
    CHECK(d.inverse(0.9) == 0.0);
  }

  TEST_CASE("monotone and inverse-consistent on random curves") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto atoms = oracle::random_atoms(rng);
      std::vector<ValueAtom> va;
      for (std::size_t k = 0; k < atoms.value.size(); ++k) va.push_back({atoms.value[k], atoms.mass[k]});
      const std::vector<DemandCurve> curves = {DemandCurve::step(va).with_ceiling(1.0),
                                               DemandCurve::linear(1.0 + 4.0 * u(rng), 0.5 + u(rng), 1.0),
                                               DemandCurve::lognormal(u(rng), 0.2 + u(rng), 0.3 + u(rng))};
      for (const auto& d : curves) {
        double prev = d(0.0);
        for (double p = 0.01; p < 8.0; p += 0.07) {
          const double now = d(p);
          CHECK(now <= prev + 1e-15);
          CHECK(now >= 0.0);
          prev = now;
        }
        const double top = d.max_throughput();
        for (int k = 1; k <= 20; ++k) {
          const double q = top * k / 20.0;
          CHECK(d(d.inverse(q)) >= q - 1e-9);
        }
      }
      // Continuous, strictly decreasing on its support.
      const auto& ln = curves[2];
      for (int k = 1; k < 20; ++k) {
        const double q = ln.max_throughput() * k / 20.0;
        CHECK(std::abs(ln(ln.inverse(q)) - q) <= 1e-9);
      }
      // The step curve agrees with the independent atom model.
      for (double p = 0.0; p < 6.0; p += 0.013) CHECK(curves[0](p) == doctest::Approx(atoms.demand(p)));
    }
  }
}

TEST_SUITE("objective") {
  TEST_CASE("revenue of the linear curve") {
    CHECK(raw_edge_objective(DemandCurve::linear(1.0, 1.0), 0.0, ObjectiveKind::revenue(), 0.5) ==
          doctest::Approx(0.25));
  }

  TEST_CASE("revenue of the step curve is not concave") {
    const auto d = step_curve();
    CHECK(raw_edge_objective(d, 0.0, ObjectiveKind::revenue(), 0.3) == doctest::Approx(0.9));
    CHECK(raw_edge_objective(d, 0.0, ObjectiveKind::revenue(), 0.35) == doctest::Approx(0.35));
  }

  TEST_CASE("welfare of the linear curve") {
    CHECK(raw_edge_objective(DemandCurve::linear(1.0, 1.0), 0.0, ObjectiveKind::welfare(), 1.0) ==
          doctest::Approx(0.5));
  }

  TEST_CASE("mix interpolates revenue and welfare") {
    const auto d = DemandCurve::linear(1.0, 1.0);
    const double r = raw_edge_objective(d, 0.1, ObjectiveKind::revenue(), 0.4);
    const double w = raw_edge_objective(d, 0.1, ObjectiveKind::welfare(), 0.4);
    CHECK(raw_edge_objective(d, 0.1, ObjectiveKind::mix(0.3), 0.4) == doctest::Approx(0.3 * r + 0.7 * w));
    CHECK_THROWS(ObjectiveKind::mix(1.5));
  }

  TEST_CASE("zero throughput is worth zero and out-of-range throughput throws") {
    const auto d = step_curve();
    for (const auto& kind : {ObjectiveKind::revenue(), ObjectiveKind::welfare(), ObjectiveKind::mix(0.5)}) {
      CHECK(raw_edge_objective(d, 0.7, kind, 0.0) == 0.0);
      CHECK_THROWS(raw_edge_objective(d, 0.0, kind, 1.5));
      CHECK_THROWS(raw_edge_objective(d, 0.0, kind, -0.1));
    }
  }

  TEST_CASE("welfare is concave for every curve family") {
    const std::vector<DemandCurve> curves = {DemandCurve::linear(2.0, 1.0, 1.0),
                                             step_curve(), DemandCurve::lognormal(0.5, 0.7, 1.0)};
    for (const auto& d : curves) {
      const double top = d.max_throughput();
      const int n = 400;
      std::vector<double> g(n + 1);
      for (int i = 0; i <= n; ++i) g[i] = raw_edge_objective(d, 0.2, ObjectiveKind::welfare(), top * i / n);
      for (int i = 1; i < n; ++i) CHECK(g[i + 1] - 2.0 * g[i] + g[i - 1] <= 1e-9);
    }
  }

  TEST_CASE("lognormal welfare matches adaptive quadrature") {
    const auto d = DemandCurve::lognormal(0.3, 0.6, 1.0);
    for (double q : {0.05, 0.3, 0.7, 0.99}) {
      // Value of the q best requests: p* q plus the surplus above p*.
      const double p = d.inverse(q);
      const double surplus = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) { return d(x); }, p, std::numeric_limits<double>::infinity(), 15, 1e-12);
      CHECK(d.gross_value(q) == doctest::Approx(p * q + surplus).epsilon(1e-9));
    }
  }
}

TEST_SUITE("instance") {
  TEST_CASE("json round trip keeps graph and demand") {
    const auto inst = testing::three_node();
    const auto back = parse_instance(instance_to_json(inst));
    REQUIRE(back.graph.edge_count() == inst.graph.edge_count());
    for (std::size_t e = 0; e < inst.graph.edge_count(); ++e) {
      CHECK(back.graph.edge(e).travel_time == inst.graph.edge(e).travel_time);
      for (double p : {0.0, 0.5, 1.5, 2.5}) CHECK(back.demand[e][0](p) == doctest::Approx(inst.demand[e][0](p)));
    }
    CHECK(validate_instance(back).empty());
  }

  TEST_CASE("driver mass divides volume and sets the scale") {
    const nlohmann::json doc = {
        {"nodes", {"A", "B"}},
        {"edges", {{{"id", "AB"}, {"from", "A"}, {"to", "B"}}, {{"id", "BA"}, {"from", "B"}, {"to", "A"}}}},
        {"demand", {{"AB", {{"kind", "linear"}, {"intercept", 4.0}, {"slope", 1.0}}}}},
        {"driver_mass", 8.0}};
    const auto inst = parse_instance(doc);
    CHECK(inst.scale == doctest::Approx(8.0));
    CHECK(inst.demand[0][0](1.0) == doctest::Approx(3.0 / 8.0));
    CHECK(inst.demand[1][0](0.0) == doctest::Approx(1.0));
    CHECK(inst.demand[1][0](0.1) == 0.0);
  }

  TEST_CASE("unknown demand edge and bad endpoints are rejected") {
    nlohmann::json doc = {{"nodes", {"A"}},
                          {"edges", {{{"id", "AA"}, {"from", "A"}, {"to", "A"}}}},
                          {"demand", {{"ZZ", {{"kind", "none"}}}}}};
    CHECK_THROWS(parse_instance(doc));
    doc["demand"] = nlohmann::json::object();
    doc["edges"][0]["to"] = "Q";
    CHECK_THROWS(parse_instance(doc));
  }

  TEST_CASE("period lookup follows steps per period") {
    Instance inst = testing::two_node();
    inst.demand[0] = {DemandCurve::linear(1.0, 1.0), DemandCurve::linear(2.0, 1.0)};
    inst.demand[1] = {DemandCurve::linear(1.0, 1.0), DemandCurve::linear(2.0, 1.0)};
    inst.steps_per_period = 4;
    CHECK(inst.periods() == 2);
    CHECK(inst.period_of_step(3) == 0);
    CHECK(inst.period_of_step(4) == 1);
    CHECK(inst.period_of_step(9) == 0);
  }
}
