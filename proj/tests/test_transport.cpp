#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wq/checks.hpp"
#include "wq/rng.hpp"
#include "wq/transport.hpp"

using namespace wq;
using doctest::Approx;

namespace {

DiscreteMeasure line(std::vector<double> xs, std::vector<double> ms) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back(make_point(x));
  return DiscreteMeasure(1, pts, std::move(ms));
}

TransportPlan make_plan(std::vector<double> src, std::vector<double> dst, std::vector<double> entries) {
  TransportPlan plan;
  for (double x : src) plan.sources.push_back(make_point(x));
  for (double y : dst) plan.targets.push_back(make_point(y));
  plan.entries = std::move(entries);
  return plan;
}

DiscreteMeasure random_line(Rng& rng, std::size_t k) {
  std::vector<double> xs(k), ms(k);
  for (auto& x : xs) x = rng.uniform();
  for (auto& m : ms) m = rng.uniform(0.1, 1.0);
  const double s = std::accumulate(ms.begin(), ms.end(), 0.0);
  for (auto& m : ms) m /= s;
  return line(xs, ms);
}

// In 1-D the monotone (quantile) coupling is optimal for convex costs.
double quantile_cost(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
  auto sorted = [](const DiscreteMeasure& m) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < m.size(); ++i) v.push_back({m.points()[i][0], m.masses()[i]});
    std::sort(v.begin(), v.end());
    return v;
  };
  auto u = sorted(a), v = sorted(b);
  std::size_t i = 0, j = 0;
  double cost = 0.0;
  while (i < u.size() && j < v.size()) {
    const double f = std::min(u[i].second, v[j].second);
    cost += f * std::pow(std::abs(u[i].first - v[j].first), p);
    u[i].second -= f;
    v[j].second -= f;
    if (u[i].second <= 1e-15) ++i;
    if (v[j].second <= 1e-15) ++j;
  }
  return cost;
}

}  // namespace

TEST_CASE("plan_cost examples") {
  CHECK(plan_cost(make_plan({0, 1}, {0, 1}, {0.5, 0, 0, 0.5}), 2.0) == 0.0);
  CHECK(plan_cost(make_plan({0}, {2}, {1.0}), 2.0) == 4.0);
  CHECK(plan_cost(make_plan({0}, {1, 3}, {0.5, 0.5}), 1.0) == 2.0);
}

TEST_CASE("linf_length examples") {
  CHECK(linf_length(make_plan({0, 1}, {0, 1}, {0.5, 0, 0, 0.5})) == 0.0);
  CHECK(linf_length(make_plan({0}, {1, 3}, {0.5, 0.5})) == 3.0);
  const auto sol = solve_exact(line({0, 1}, {0.5, 0.5}), line({0.5}, {1.0}), 2.0);
  CHECK(linf_length(sol.plan) == Approx(0.5));
  // Entries at the noise floor do not count.
  CHECK(linf_length(make_plan({0}, {1, 9}, {1.0, 1e-14})) == 1.0);
}

TEST_CASE("solve_exact examples") {
  CHECK(solve_exact(line({0}, {1}), line({1}, {1}), 2.0).wp == Approx(1.0));
  for (double p : {1.0, 1.5, 2.0, 3.0})
    CHECK(solve_exact(line({0, 1}, {0.5, 0.5}), line({0.5}, {1.0}), p).wp == Approx(0.5));
  const auto sol = solve_exact(line({0, 1}, {0.5, 0.5}), line({0.25, 0.75}, {0.5, 0.5}), 2.0);
  CHECK(sol.wp == Approx(0.25));
  CHECK(sol.plan.at(0, 0) == Approx(0.5));
  CHECK(sol.plan.at(1, 1) == Approx(0.5));
  CHECK(sol.dual_violation <= 1e-12);
}

TEST_CASE("solve_exact matches vertex enumeration on small instances") {
  Rng rng(314);
  for (int trial = 0; trial < 300; ++trial) {
    const int dim = 1 + static_cast<int>(rng.index(3));
    const double p = rng.uniform(1.0, 3.0);
    auto make = [&] {
      const std::size_t k = 1 + rng.index(4);
      std::vector<Point> pts(k, Point{});
      std::vector<double> ms(k);
      for (auto& x : pts)
        for (int d = 0; d < dim; ++d) x[d] = std::round(rng.uniform() * 4.0) / 4.0;  // many ties
      for (auto& m : ms) m = rng.uniform(0.1, 1.0);
      const double s = std::accumulate(ms.begin(), ms.end(), 0.0);
      for (auto& m : ms) m /= s;
      return DiscreteMeasure(dim, pts, ms);
    };
    const auto mu = make(), nu = make();
    const auto sol = solve_exact(mu, nu, p);
    CHECK(sol.cost == Approx(enumerate_vertex_cost(mu, nu, p)).epsilon(1e-9));
    CHECK(sol.cost == Approx(plan_cost(sol.plan, p)).epsilon(1e-12));
    CHECK(validate_plan(sol.plan, mu.masses(), nu.masses()).valid);
  }
}

TEST_CASE("solve_exact matches the monotone coupling in 1-D") {
  Rng rng(8);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{30, 40}, {200, 150}, {600, 600}}) {
    const auto mu = random_line(rng, m), nu = random_line(rng, n);
    for (double p : {1.0, 2.0, 3.0}) {
      const auto sol = solve_exact(mu, nu, p);
      CHECK(sol.cost == Approx(quantile_cost(mu, nu, p)).epsilon(1e-9));
      CHECK(sol.dual_violation <= 1e-9);
    }
  }
}

TEST_CASE("solve_exact in the plane certifies optimality by duality") {
  Rng rng(21);
  std::vector<Point> a(300, Point{}), b(250, Point{});
  for (auto& x : a) x = make_point(rng.uniform(), rng.uniform());
  for (auto& x : b) x = make_point(rng.uniform(), rng.uniform());
  const DiscreteMeasure mu(2, a, std::vector<double>(a.size(), 1.0 / 300.0));
  const DiscreteMeasure nu(2, b, std::vector<double>(b.size(), 1.0 / 250.0));
  const auto sol = solve_exact(mu, nu, 2.0);
  CHECK(sol.dual_violation <= 1e-9);
  const auto v = validate_plan(sol.plan, mu.masses(), nu.masses());
  CHECK(v.valid);
  CHECK(v.min_entry >= 0.0);
}

TEST_CASE("solve_exact input errors") {
  CHECK_THROWS_AS(solve_exact(line({0}, {1.0}), line({1}, {1.1}), 2.0), std::invalid_argument);
  CHECK_NOTHROW(solve_exact(line({0}, {1.0}), line({1}, {1.0 + 1e-12}), 2.0));
  CHECK_THROWS_AS(solve_exact(line({0}, {1.0}), line({1}, {1.0}), 0.5), std::invalid_argument);
  std::vector<double> xs(kMaxExactSupport + 1), ms(kMaxExactSupport + 1, 1.0);
  std::iota(xs.begin(), xs.end(), 0.0);
  CHECK_THROWS_AS(solve_exact(line(xs, ms), line({0}, {static_cast<double>(ms.size())}), 2.0), CapacityError);
}

TEST_CASE("validate_plan flags broken marginals and negative entries") {
  const auto plan = make_plan({0, 1}, {0, 1}, {0.5, 0, 0, 0.5});
  const std::vector<double> half{0.5, 0.5};
  CHECK(validate_plan(plan, half, half).valid);
  auto bad = plan;
  bad.at(0, 0) = 0.6;
  CHECK_FALSE(validate_plan(bad, half, half).valid);
  auto neg = make_plan({0, 1}, {0, 1}, {0.6, -0.1, -0.1, 0.6});
  const auto v = validate_plan(neg, half, half);
  CHECK_FALSE(v.valid);
  CHECK(v.min_entry == Approx(-0.1));
}

TEST_CASE("restrict_rows examples") {
  const auto plan = make_plan({0, 1}, {0, 2}, {0.3, 0.2, 0.1, 0.4});
  const std::vector<double> full{0.5, 0.5};
  const auto same = restrict_rows(plan, full);
  CHECK(same.plan.entries == plan.entries);
  CHECK(same.target_masses[0] == Approx(0.4));

  const std::vector<double> second{0.0, 0.5};
  const auto one = restrict_rows(plan, second);
  CHECK(one.plan.at(0, 0) == 0.0);
  CHECK(one.plan.at(0, 1) == 0.0);
  CHECK(one.plan.at(1, 0) == Approx(0.1));
  CHECK(one.plan.at(1, 1) == Approx(0.4));
  CHECK(one.target_masses[0] == Approx(0.1));
  CHECK(one.target_masses[1] == Approx(0.4));

  const std::vector<double> too_much{0.6, 0.5};
  CHECK_THROWS_AS(restrict_rows(plan, too_much), std::invalid_argument);
  const std::vector<double> negative{-0.1, 0.5};
  CHECK_THROWS_AS(restrict_rows(plan, negative), std::invalid_argument);
}

TEST_CASE("restricting rows never raises the cost") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = random_line(rng, 5), nu = random_line(rng, 5);
    const auto sol = solve_exact(mu, nu, 2.0);
    std::vector<double> sub(5);
    for (std::size_t i = 0; i < 5; ++i) sub[i] = rng.uniform() * mu.masses()[i];
    const auto r = restrict_rows(sol.plan, sub);
    CHECK(plan_cost(r.plan, 2.0) <= sol.cost + 1e-15);
    const auto cols = sol.plan.col_sums();
    for (std::size_t j = 0; j < 5; ++j) CHECK(r.target_masses[j] <= cols[j] + 1e-15);
  }
}

TEST_CASE("sum_plans examples") {
  const auto a = make_plan({0}, {2}, {1.0});
  const auto b = make_plan({5}, {6}, {1.0});
  CHECK(plan_cost(sum_plans(a, b), 2.0) == Approx(5.0));
  const TransportPlan empty;
  const auto same = sum_plans(a, empty);
  CHECK(same.entries == a.entries);
  CHECK(same.sources == a.sources);

  // Shared points are merged into one row / column.
  const auto c = make_plan({0}, {3}, {2.0});
  const auto merged = sum_plans(a, c);
  CHECK(merged.rows() == 1);
  CHECK(merged.cols() == 2);
  CHECK(merged.total_mass() == Approx(3.0));
  CHECK(plan_cost(merged, 1.0) == Approx(2.0 + 6.0));
}

TEST_CASE("summed optimal plans bound the joint problem") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mu = random_line(rng, 4), nu = random_line(rng, 3);
    const auto mu2 = random_line(rng, 3), nu2 = random_line(rng, 4);
    const auto a = solve_exact(mu, nu, 2.0), b = solve_exact(mu2, nu2, 2.0);
    const auto sum = sum_plans(a.plan, b.plan);
    CHECK(plan_cost(sum, 2.0) == Approx(a.cost + b.cost).epsilon(1e-12));
    std::vector<Point> pts = mu.points(), qts = nu.points();
    std::vector<double> ms = mu.masses(), ns = nu.masses();
    pts.insert(pts.end(), mu2.points().begin(), mu2.points().end());
    ms.insert(ms.end(), mu2.masses().begin(), mu2.masses().end());
    qts.insert(qts.end(), nu2.points().begin(), nu2.points().end());
    ns.insert(ns.end(), nu2.masses().begin(), nu2.masses().end());
    const auto joint = solve_exact(DiscreteMeasure(1, pts, ms), DiscreteMeasure(1, qts, ns), 2.0);
    CHECK(joint.cost <= a.cost + b.cost + 1e-12);
  }
}

TEST_CASE("measure_from_masses drops empty atoms") {
  const std::vector<Point> pts{make_point(0), make_point(1), make_point(2)};
  const std::vector<double> ms{0.5, 0.0, 0.25};
  const auto m = measure_from_masses(1, pts, ms);
  CHECK(m.size() == 2);
  CHECK(m.total_mass() == Approx(0.75));
}

TEST_CASE("plans export as CSV triples") {
  std::ostringstream out;
  write_plan_csv(out, make_plan({0, 1}, {0, 1}, {0.5, 0, 0, 0.25}));
  CHECK(out.str() == "i,j,mass\n0,0,0.5\n1,1,0.25\n");
}
