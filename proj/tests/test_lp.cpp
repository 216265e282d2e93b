#include <doctest.h>

#include <random>

#include "fleetflow/lp.hpp"

using namespace fleetflow;
using Sense = LinearProgram::Sense;

TEST_SUITE("lp") {
  TEST_CASE("textbook maximization") {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
    LinearProgram lp;
    const auto x = lp.add_column(3.0);
    const auto y = lp.add_column(5.0);
    const auto r0 = lp.add_row(Sense::LessEqual, 4.0);
    const auto r1 = lp.add_row(Sense::LessEqual, 12.0);
    const auto r2 = lp.add_row(Sense::LessEqual, 18.0);
    lp.add(r0, x, 1.0);
    lp.add(r1, y, 2.0);
    lp.add(r2, x, 3.0);
    lp.add(r2, y, 2.0);
    const auto res = solve_lp(lp);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.objective == doctest::Approx(36.0));
    CHECK(res.x[x] == doctest::Approx(2.0));
    CHECK(res.x[y] == doctest::Approx(6.0));
    CHECK(res.duals[r0] == doctest::Approx(0.0));
    CHECK(res.duals[r1] == doctest::Approx(1.5));
    CHECK(res.duals[r2] == doctest::Approx(1.0));
  }

  TEST_CASE("equality and greater-equal rows need phase one") {
    // max -x - y, x + y = 2, x >= 0.5 -> objective -2.
    LinearProgram lp;
    const auto x = lp.add_column(-1.0);
    const auto y = lp.add_column(-1.0);
    const auto eq = lp.add_row(Sense::Equal, 2.0);
    const auto ge = lp.add_row(Sense::GreaterEqual, 0.5);
    lp.add(eq, x, 1.0);
    lp.add(eq, y, 1.0);
    lp.add(ge, x, 1.0);
    const auto res = solve_lp(lp);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.objective == doctest::Approx(-2.0));
    CHECK(res.x[x] >= 0.5 - 1e-9);
    CHECK(lp.max_violation(res.x) <= 1e-9);
  }

  TEST_CASE("infeasible and unbounded programs") {
    LinearProgram bad;
    const auto x = bad.add_column(1.0);
    bad.add(bad.add_row(Sense::LessEqual, 1.0), x, 1.0);
    bad.add(bad.add_row(Sense::GreaterEqual, 2.0), x, 1.0);
    CHECK(solve_lp(bad).status == LpStatus::Infeasible);

    LinearProgram open;
    const auto a = open.add_column(1.0);
    const auto b = open.add_column(0.0);
    const auto r = open.add_row(Sense::LessEqual, 1.0);
    open.add(r, a, 1.0);
    open.add(r, b, -1.0);
    CHECK(solve_lp(open).status == LpStatus::Unbounded);
  }

  TEST_CASE("column bounds") {
    LinearProgram lp;
    const auto x = lp.add_column(2.0, 0.75);
    const auto r = lp.add_row(Sense::LessEqual, 10.0);
    lp.add(r, x, 1.0);
    const auto res = solve_lp(lp);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.x[x] == doctest::Approx(0.75));
  }

  TEST_CASE("piecewise-linear column stops at the right breakpoint") {
    // f(x) = 3x on [0, 0.3], then 1/7 per unit to 1; x + y <= 1 with y worth 0.5.
    LinearProgram lp;
    const auto x = lp.add_pwl_column({{0.3, 3.0}, {0.7, 1.0 / 7.0}});
    const auto y = lp.add_column(0.5, 1.0);
    const auto r = lp.add_row(Sense::LessEqual, 1.0);
    lp.add(r, x, 1.0);
    lp.add(r, y, 1.0);
    const auto res = solve_lp(lp);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.x[x] == doctest::Approx(0.3));
    CHECK(res.x[y] == doctest::Approx(0.7));
    CHECK(res.objective == doctest::Approx(0.9 + 0.35));
    CHECK(res.duals[r] == doctest::Approx(0.5));
  }

  TEST_CASE("pwl column matches its split into bounded columns") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 4;
      std::vector<std::vector<LpSegment>> segs(n);
      for (auto& s : segs) {
        double slope = 2.0 * u(rng);
        for (int k = 0; k < 3; ++k) {
          s.push_back({0.1 + 0.3 * u(rng), slope});
          slope -= 0.8 * u(rng);
        }
      }
      std::vector<double> coef(n);
      for (auto& c : coef) c = 0.2 + u(rng);
      LinearProgram a;
      LinearProgram b;
      const auto ra = a.add_row(Sense::LessEqual, 1.0);
      const auto rb = b.add_row(Sense::LessEqual, 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        a.add(ra, a.add_pwl_column(segs[j]), coef[j]);
        for (const auto& s : segs[j]) b.add(rb, b.add_column(s.slope, s.length), coef[j]);
      }
      const auto sa = solve_lp(a);
      const auto sb = solve_lp(b);
      REQUIRE(sa.status == LpStatus::Optimal);
      REQUIRE(sb.status == LpStatus::Optimal);
      CHECK(sa.objective == doctest::Approx(sb.objective).epsilon(1e-10));
      CHECK(sa.duals[ra] == doctest::Approx(sb.duals[rb]).epsilon(1e-9));
    }
  }

  TEST_CASE("pivot budget is reported") {
    LinearProgram lp;
    for (int j = 0; j < 10; ++j) {
      const auto c = lp.add_column(1.0 + j);
      lp.add(lp.add_row(Sense::LessEqual, 1.0), c, 1.0);
    }
    SimplexOptions opt;
    opt.max_pivots = 1;
    CHECK(solve_lp(lp, opt).status == LpStatus::IterationLimit);
    CHECK(to_string(LpStatus::Optimal) == "optimal");
  }
}
