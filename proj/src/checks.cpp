#include "wq/checks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wq/quantizer.hpp"
#include "wq/rng.hpp"

namespace wq {

bool CheckReport::all_passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& r) { return r.ok(); });
}

double enumerate_vertex_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  const std::size_t m = mu.size(), n = nu.size();
  if (m > 4 || n > 4) throw CapacityError("vertex enumeration is limited to 4 atoms per side");
  const std::size_t cells = m * n, basis = m + n - 1;
  const double scale = mu.total_mass() / nu.total_mass();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1U << cells); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != basis) continue;
    // Spanning tree test by union-find over the m + n nodes.
    std::vector<std::size_t> parent(m + n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    bool tree = true;
    for (std::size_t c = 0; c < cells && tree; ++c) {
      if (!((mask >> c) & 1U)) continue;
      const auto a = find(c / n), b = find(m + c % n);
      if (a == b) tree = false;
      parent[a] = b;
    }
    if (!tree) continue;
    // Flows by peeling leaves.
    std::vector<double> supply(mu.masses()), demand(n);
    for (std::size_t j = 0; j < n; ++j) demand[j] = nu.masses()[j] * scale;
    std::vector<double> flow(cells, 0.0);
    std::uint32_t open = mask;
    bool feasible = true;
    while (open && feasible) {
      bool peeled = false;
      for (std::size_t node = 0; node < m + n && !peeled; ++node) {
        std::size_t degree = 0, last = 0;
        for (std::size_t c = 0; c < cells; ++c)
          if (((open >> c) & 1U) && (node < m ? c / n == node : m + c % n == node)) {
            ++degree;
            last = c;
          }
        if (degree != 1) continue;
        const std::size_t i = last / n, j = last % n;
        const double f = node < m ? supply[i] : demand[j];
        flow[last] = f;
        supply[i] -= f;
        demand[j] -= f;
        open &= ~(1U << last);
        peeled = true;
      }
      if (!peeled) feasible = false;
    }
    const double floor = -1e-12 * mu.total_mass();
    double cost = 0.0;
    for (std::size_t c = 0; c < cells && feasible; ++c) {
      if (flow[c] < floor) feasible = false;
      cost += std::max(flow[c], 0.0) * distance_pow(mu.points()[c / n], nu.points()[c % n], p);
    }
    if (feasible) best = std::min(best, cost);
  }
  return best;
}

namespace {

struct Instance {
  int dim;
  double p;
};

Instance random_setup(Rng& rng) {
  static constexpr double kExponents[] = {1.0, 1.5, 2.0, 3.0};
  return {1 + static_cast<int>(rng.index(3)), kExponents[rng.index(4)]};
}

std::vector<Point> random_points(Rng& rng, int dim, std::size_t k) {
  std::vector<Point> pts(k, Point{});
  for (auto& x : pts)
    for (int d = 0; d < dim; ++d) x[d] = rng.uniform();
  return pts;
}

std::vector<double> random_masses(Rng& rng, std::size_t k, double total) {
  std::vector<double> w(k);
  for (auto& v : w) v = rng.uniform(0.1, 1.0);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v *= total / s;
  return w;
}

DiscreteMeasure random_measure(Rng& rng, int dim, std::size_t lo, std::size_t hi, double total) {
  const std::size_t k = lo + rng.index(hi - lo + 1);
  return DiscreteMeasure(dim, random_points(rng, dim, k), random_masses(rng, k, total));
}

DiscreteMeasure transform(const DiscreteMeasure& m, double coord_scale, double mass_scale) {
  std::vector<Point> pts = m.points();
  for (auto& x : pts)
    for (auto& c : x) c *= coord_scale;
  std::vector<double> masses = m.masses();
  for (auto& v : masses) v *= mass_scale;
  return DiscreteMeasure(m.dim(), pts, masses);
}

DiscreteMeasure concat(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<Point> pts = a.points();
  pts.insert(pts.end(), b.points().begin(), b.points().end());
  std::vector<double> masses = a.masses();
  masses.insert(masses.end(), b.masses().begin(), b.masses().end());
  return DiscreteMeasure(a.dim(), pts, masses);
}

class Tally {
 public:
  Tally(std::string name, double tol) : tol_(tol) { r_.name = std::move(name); }
  // Records one trial whose violation is `excess` relative to `scale`.
  void record(double excess, double scale) {
    const double rel = excess / std::max(scale, 1e-300);
    ++r_.trials;
    if (rel <= tol_) ++r_.passed;
    r_.worst = std::max(r_.worst, std::max(rel, 0.0));
  }
  PropertyResult result() const { return r_; }

 private:
  double tol_;
  PropertyResult r_;
};

}  // namespace

CheckReport run_checks(const CheckOptions& opts) {
  if (opts.trials < 1) throw std::invalid_argument("trials must be >= 1");
  CheckReport report;
  report.options = opts;
  const double tol = opts.tol;

  {
    Tally t("enumeration", tol);
    Rng rng(derive_seed(opts.seed, 1));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      const auto mu = random_measure(rng, dim, 1, 4, 1.0);
      const auto nu = random_measure(rng, dim, 1, 4, 1.0);
      const double solved = solve_exact(mu, nu, p).cost;
      const double oracle = enumerate_vertex_cost(mu, nu, p);
      t.record(std::abs(solved - oracle), std::max(oracle, 1e-12));
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("plan-marginals", tol);
    Rng rng(derive_seed(opts.seed, 2));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      const auto mu = random_measure(rng, dim, 1, 8, 1.0);
      const auto nu = random_measure(rng, dim, 1, 8, 1.0);
      TransportPlan plan = solve_exact(mu, nu, p).plan;
      if (opts.inject_fault) plan.at(0, 0) += 0.25;
      const auto v = validate_plan(plan, mu.masses(), nu.masses());
      t.record(std::max({v.max_row_error, v.max_col_error, -v.min_entry}), 1.0);
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("monotony", tol);
    Rng rng(derive_seed(opts.seed, 3));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      const auto mu = random_measure(rng, dim, 2, 6, 1.0);
      const auto nu = random_measure(rng, dim, 2, 6, 1.0);
      const auto full = solve_exact(mu, nu, p);
      std::vector<double> sub(mu.size());
      for (std::size_t i = 0; i < sub.size(); ++i) sub[i] = rng.uniform() < 0.25 ? 0.0 : rng.uniform() * mu.masses()[i];
      const std::size_t keep = rng.index(sub.size());
      sub[keep] = 0.5 * mu.masses()[keep];
      const auto restricted = restrict_rows(full.plan, sub);
      const auto mu_t = measure_from_masses(dim, mu.points(), sub);
      const auto nu_t = measure_from_masses(dim, nu.points(), restricted.target_masses);
      const double sub_cost = solve_exact(mu_t, nu_t, p).cost;
      const double plan_c = plan_cost(restricted.plan, p);
      double nu_excess = 0.0;
      for (std::size_t j = 0; j < nu.size(); ++j)
        nu_excess = std::max(nu_excess, restricted.target_masses[j] - nu.masses()[j]);
      t.record(std::max({sub_cost - full.cost, plan_c - full.cost, nu_excess}), std::max(full.cost, 1e-12));
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("summing", tol);
    Rng rng(derive_seed(opts.seed, 4));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      const double ma = rng.uniform(0.2, 2.0), mb = rng.uniform(0.2, 2.0);
      const auto mu = random_measure(rng, dim, 1, 5, ma), nu = random_measure(rng, dim, 1, 5, ma);
      const auto mu2 = random_measure(rng, dim, 1, 5, mb), nu2 = random_measure(rng, dim, 1, 5, mb);
      const auto a = solve_exact(mu, nu, p), b = solve_exact(mu2, nu2, p);
      const TransportPlan sum = sum_plans(a.plan, b.plan);
      const double additivity = std::abs(plan_cost(sum, p) - (a.cost + b.cost));
      const double joint = solve_exact(concat(mu, mu2), concat(nu, nu2), p).cost;
      const double scale = std::max(a.cost + b.cost, 1e-12);
      t.record(std::max(additivity, joint - (a.cost + b.cost)), scale);
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("triangle", tol);
    Rng rng(derive_seed(opts.seed, 5));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      const auto a = random_measure(rng, dim, 1, 6, 1.0);
      const auto b = random_measure(rng, dim, 1, 6, 1.0);
      const auto c = random_measure(rng, dim, 1, 6, 1.0);
      const double ac = solve_exact(a, c, p).wp;
      const double ab = solve_exact(a, b, p).wp, bc = solve_exact(b, c, p).wp;
      t.record(ac - (ab + bc), std::max(ab + bc, 1e-12));
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("coordinate-scaling", tol);
    Rng rng(derive_seed(opts.seed, 6));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      const auto mu = random_measure(rng, dim, 1, 6, 1.0), nu = random_measure(rng, dim, 1, 6, 1.0);
      const double s = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
      const double base = solve_exact(mu, nu, p).wp;
      const double scaled = solve_exact(transform(mu, s, 1.0), transform(nu, s, 1.0), p).wp;
      t.record(std::abs(scaled - s * base), std::max(s * base, 1e-12));
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("mass-scaling", tol);
    Rng rng(derive_seed(opts.seed, 7));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      const auto mu = random_measure(rng, dim, 1, 6, 1.0), nu = random_measure(rng, dim, 1, 6, 1.0);
      const double s = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
      const double base = solve_exact(mu, nu, p).wp;
      const double scaled = solve_exact(transform(mu, 1.0, s), transform(nu, 1.0, s), p).wp;
      const double expected = std::pow(s, 1.0 / p) * base;
      t.record(std::abs(scaled - expected), std::max(expected, 1e-12));
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("lloyd-descent", tol);
    Rng rng(derive_seed(opts.seed, 8));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const auto [dim, p] = random_setup(rng);
      WeightedCloud cloud;
      cloud.dim = dim;
      cloud.nodes = random_points(rng, dim, 20 + rng.index(60));
      cloud.weights = random_masses(rng, cloud.nodes.size(), 1.0);
      const auto centers = random_points(rng, dim, 1 + rng.index(8));
      const double before = cloud_energy(cloud, centers, p);
      const double after = cloud_energy(cloud, improve_step(cloud, centers, p, rng.bits()), p);
      t.record(after - before, std::max(before, 1e-12));
    }
    report.properties.push_back(t.result());
  }
  {
    Tally t("allocation", tol);
    Rng rng(derive_seed(opts.seed, 9));
    for (std::size_t k = 0; k < opts.trials; ++k) {
      const int d = 1 + static_cast<int>(rng.index(3));
      const double p = rng.uniform(1.0, 4.0);
      std::vector<double> alphas(1 + rng.index(6));
      for (auto& a : alphas) a = rng.uniform(0.05, 5.0);
      const auto alloc = predict_allocation(alphas, d, p);
      const double sum = std::accumulate(alloc.fractions.begin(), alloc.fractions.end(), 0.0);
      const double at_opt = allocation_objective(alphas, alloc.fractions, d, p);
      // Any other point of the simplex does no better.
      auto other = random_masses(rng, alphas.size(), 1.0);
      const double elsewhere = allocation_objective(alphas, other, d, p);
      const double s = rng.uniform(0.1, 10.0);
      std::vector<double> scaled(alphas);
      for (auto& a : scaled) a *= s;
      const auto alloc_s = predict_allocation(scaled, d, p);
      double shift = 0.0;
      for (std::size_t i = 0; i < alphas.size(); ++i)
        shift = std::max(shift, std::abs(alloc_s.fractions[i] - alloc.fractions[i]));
      const double excess = std::max({std::abs(sum - 1.0), std::abs(at_opt - alloc.fmin) / alloc.fmin,
                                      (at_opt - elsewhere) / elsewhere, shift,
                                      std::abs(alloc_s.fmin - s * alloc.fmin) / (s * alloc.fmin)});
      t.record(excess, 1.0);
    }
    report.properties.push_back(t.result());
  }
  return report;
}

}  // namespace wq
