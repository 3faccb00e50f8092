#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wq/measure_io.hpp"
#include "wq/measures.hpp"
#include "wq/rng.hpp"

using namespace wq;
using doctest::Approx;

namespace {

Box interval(double a, double b) {
  Box box;
  box.dim = 1;
  box.lo[0] = a;
  box.hi[0] = b;
  return box;
}

Box square(double a0, double b0, double a1, double b1) {
  Box box;
  box.dim = 2;
  box.lo = make_point(a0, a1);
  box.hi = make_point(b0, b1);
  return box;
}

}  // namespace

TEST_CASE("discrete measures merge duplicate atoms") {
  DiscreteMeasure m(1, {make_point(0.5), make_point(0.25), make_point(0.5)}, {1.0, 2.0, 3.0});
  REQUIRE(m.size() == 2);
  CHECK(m.points()[0][0] == 0.5);
  CHECK(m.masses()[0] == 4.0);
  CHECK(m.masses()[1] == 2.0);
  CHECK(m.total_mass() == 6.0);
}

TEST_CASE("invalid measures are rejected") {
  CHECK_THROWS_AS(DiscreteMeasure(1, {make_point(0)}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure(1, {make_point(0)}, {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure(1, {make_point(0), make_point(1)}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(GriddedDensity(interval(0, 1), {2}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(GriddedDensity(interval(0, 1), {2}, {1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(GriddedDensity(interval(0, 1), {3}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Mixture({}), std::invalid_argument);
  CHECK_THROWS_AS(Mixture({{0.0, CantorMeasure{}}}), std::invalid_argument);
  CHECK_THROWS_AS(Mixture({{1.0, CantorMeasure{}}, {1.0, GriddedDensity::uniform(unit_box(2))}}),
                  std::invalid_argument);
}

TEST_CASE("beta_norm examples") {
  CHECK(beta_norm(GriddedDensity::uniform(unit_box(2)), 0.5) == Approx(1.0).epsilon(1e-14));
  CHECK(beta_norm(GriddedDensity(interval(0, 1), {2}, {0.0, 2.0}), 1.0 / 3.0) == Approx(0.25).epsilon(1e-13));
  const auto ramp = GriddedDensity::linear(unit_box(1), {4096}, 0.0, make_point(2.0));
  CHECK(beta_norm(ramp, 1.0 / 3.0) == Approx(27.0 / 32.0).epsilon(1e-4));
  CHECK_THROWS_AS(beta_norm(ramp, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_norm(ramp, -0.5), std::invalid_argument);
}

TEST_CASE("beta_norm at beta = 1 is the total mass") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + static_cast<int>(rng.index(3));
    std::vector<int> res(dim);
    std::size_t cells = 1;
    for (auto& r : res) {
      r = 1 + static_cast<int>(rng.index(5));
      cells *= static_cast<std::size_t>(r);
    }
    std::vector<double> values(cells);
    for (auto& v : values) v = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 3.0);
    values[0] = 1.0;
    Box box;
    box.dim = dim;
    for (int k = 0; k < dim; ++k) {
      box.lo[k] = rng.uniform(-1.0, 0.0);
      box.hi[k] = box.lo[k] + rng.uniform(0.5, 2.0);
    }
    const GriddedDensity g(box, res, values);
    CHECK(beta_norm(g, 1.0) == Approx(g.total_mass()).epsilon(1e-12));
  }
}

TEST_CASE("linear densities hold the cell averages") {
  const auto ramp = GriddedDensity::linear(unit_box(1), {4}, 0.0, make_point(2.0));
  CHECK(ramp.total_mass() == Approx(1.0));
  CHECK(ramp.values()[0] == Approx(0.25));
  CHECK(ramp.values()[3] == Approx(1.75));
  CHECK_THROWS_AS(GriddedDensity::linear(unit_box(1), {4}, -1.0, make_point(1.0)), std::invalid_argument);
}

TEST_CASE("sampling a single atom repeats it") {
  const Measure m = DiscreteMeasure(2, {make_point(0.3, 0.7)}, {2.0});
  for (const auto& x : sample(m, 25, 5)) CHECK(x == make_point(0.3, 0.7));
}

TEST_CASE("uniform square quadrant counts are binomial") {
  const Measure m = GriddedDensity::uniform(unit_box(2));
  const std::size_t n = 100000;
  const auto xs = sample(m, n, 2024);
  std::size_t q[4] = {0, 0, 0, 0};
  for (const auto& x : xs) ++q[(x[0] < 0.5 ? 0 : 1) + (x[1] < 0.5 ? 0 : 2)];
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (auto c : q) CHECK(std::abs(static_cast<double>(c) - n / 4.0) < 4.0 * sigma);
}

TEST_CASE("Cantor samples avoid the removed middle thirds") {
  const auto xs = sample(CantorMeasure{}, 100000, 3);
  for (const auto& x : xs) {
    REQUIRE(x[0] >= 0.0);
    REQUIRE(x[0] <= 1.0);
    CHECK_FALSE((x[0] > 1.0 / 3.0 && x[0] < 2.0 / 3.0));
    // Second generation gaps too.
    CHECK_FALSE((x[0] > 1.0 / 9.0 && x[0] < 2.0 / 9.0));
    CHECK_FALSE((x[0] > 7.0 / 9.0 && x[0] < 8.0 / 9.0));
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  const Measure m = Mixture({{0.5, CantorMeasure{}}, {0.5, GriddedDensity::uniform(interval(2, 3))}});
  CHECK(sample(m, 100, 9) == sample(m, 100, 9));
  CHECK(sample(m, 100, 9) != sample(m, 100, 10));
  CHECK_THROWS_AS(sample(m, 0, 1), std::invalid_argument);
}

TEST_CASE("density samples never land in zero cells") {
  const Measure m = GriddedDensity(interval(0, 1), {2}, {0.0, 2.0});
  for (const auto& x : sample(m, 2000, 1)) CHECK(x[0] >= 0.5);
}

TEST_CASE("box_mass examples") {
  CHECK(box_mass(CantorMeasure{}, interval(0, 1.0 / 3.0)) == Approx(0.5).epsilon(1e-12));
  CHECK(box_mass(CantorMeasure{}, interval(0, 1.0 / 9.0)) == Approx(0.25).epsilon(1e-12));
  // Endpoints on the support keep the residual mass of the truncated walk,
  // at most 2^-25 per end.
  CHECK(box_mass(CantorMeasure{}, interval(1.0 / 3.0, 2.0 / 3.0)) <= 6e-8);
  CHECK(box_mass(CantorMeasure{}, interval(-1, 2)) == Approx(1.0).epsilon(1e-12));
  CHECK(box_mass(GriddedDensity::uniform(unit_box(2)), square(0, 0.5, 0, 0.5)) == Approx(0.25).epsilon(1e-14));
  const Measure d = DiscreteMeasure(1, {make_point(0.0), make_point(1.0)}, {1.0, 3.0});
  CHECK(box_mass(d, interval(0, 1)) == 4.0);
  CHECK(box_mass(d, interval(0.5, 1)) == 3.0);
}

TEST_CASE("Cantor distribution function") {
  CHECK(std::abs(cantor_cdf(0.25) - 1.0 / 3.0) <= 3e-8);
  CHECK(cantor_cdf(0.25, false) <= 1.0 / 3.0);
  CHECK(cantor_cdf(0.5) == Approx(0.5));
  CHECK(cantor_cdf(1.0) == Approx(1.0));
  CHECK(cantor_cdf(-0.1) == 0.0);
}

TEST_CASE("box_mass is additive and monotone") {
  Rng rng(77);
  const Measure measures[] = {
      Measure(CantorMeasure{}),
      Measure(GriddedDensity::linear(unit_box(1), {64}, 0.5, make_point(1.0))),
      Measure(Mixture({{0.5, CantorMeasure{}}, {2.0, GriddedDensity::uniform(interval(0.2, 0.9))}})),
  };
  for (const auto& m : measures) {
    for (int trial = 0; trial < 100; ++trial) {
      double a = rng.uniform(-0.2, 1.2), b = rng.uniform(-0.2, 1.2), c = rng.uniform(-0.2, 1.2);
      if (a > b) std::swap(a, b);
      c = a + (b - a) * rng.uniform();
      const double whole = box_mass(m, interval(a, b));
      const double left = box_mass(m, interval(a, c));
      const double right = box_mass(m, interval(c, b));
      // The shared endpoint c carries no mass for these atomless measures.
      CHECK(left + right == Approx(whole).epsilon(1e-9));
      CHECK(left <= whole + 1e-12);
    }
  }
}

TEST_CASE("Cantor measure is Ahlfors regular with constant 3") {
  const double s = CantorMeasure::dimension();
  Rng rng(5);
  const auto centers = sample(CantorMeasure{}, 200, 17);
  for (const auto& x : centers) {
    const double r = std::exp(rng.uniform(std::log(std::pow(3.0, -8)), 0.0));
    const double mass = box_mass(CantorMeasure{}, interval(x[0] - r, x[0] + r));
    CHECK(mass >= std::pow(r, s) / 3.0);
    CHECK(mass <= 3.0 * std::pow(r, s));
  }
}

TEST_CASE("support boxes") {
  const Box b = support_box(DiscreteMeasure(2, {make_point(1, 5), make_point(3, 2)}, {1.0, 1.0}));
  CHECK(b.lo == make_point(1, 2));
  CHECK(b.hi == make_point(3, 5));
  const Box c = support_box(Mixture({{0.5, CantorMeasure{}}, {0.5, GriddedDensity::uniform(interval(2, 3))}}));
  CHECK(c.lo[0] == 0.0);
  CHECK(c.hi[0] == 3.0);
}

TEST_CASE("measure specs round trip through JSON") {
  using nlohmann::json;
  const auto spec = json::parse(R"({"type": "mixture", "components": [
      {"weight": 0.5, "measure": {"type": "cantor"}},
      {"weight": 0.5, "measure": {"type": "mixture", "components": [
          {"weight": 2, "measure": {"type": "uniform_box", "bounds": [[2, 3]]}}]}}]})");
  const Measure m = measure_from_json(spec);
  REQUIRE(std::holds_alternative<Mixture>(m));
  const auto& mix = std::get<Mixture>(m);
  REQUIRE(mix.components().size() == 2);
  CHECK(mix.components()[1].weight == 1.0);
  CHECK(total_mass(m) == Approx(1.5));
  const Measure again = measure_from_json(measure_to_json(m));
  CHECK(total_mass(again) == Approx(1.5));
  CHECK(measure_to_json(again) == measure_to_json(m));

  const Measure ramp = measure_from_json(json::parse(
      R"({"type": "piecewise", "bounds": [[0, 1]], "resolution": [8], "linear": {"intercept": 0, "slope": [2]}})"));
  CHECK(total_mass(ramp) == Approx(1.0));
  const Measure disc = measure_from_json(json::parse(R"({"type": "discrete", "points": [[0, 0], [1, 1]], "masses": [1, 2]})"));
  CHECK(dimension(disc) == 2);
}

TEST_CASE("malformed measure specs give readable errors") {
  using nlohmann::json;
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"type": "blob"})")), std::invalid_argument);
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"bounds": [[0, 1]]})")), std::invalid_argument);
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"type": "uniform_box", "bounds": [[1, 0]]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"type": "discrete", "points": [[0]], "masses": ["x"]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_measure("/nonexistent/measure.json"), std::invalid_argument);
}
