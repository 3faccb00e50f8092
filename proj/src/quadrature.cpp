#include "wq/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wq {

std::string to_string(QuadMode mode) {
  switch (mode) {
    case QuadMode::Auto: return "auto";
    case QuadMode::Exact: return "exact";
    case QuadMode::Grid: return "grid";
    case QuadMode::MonteCarlo: return "monte-carlo";
  }
  return "auto";
}

QuadMode parse_quad_mode(const std::string& name) {
  if (name == "auto") return QuadMode::Auto;
  if (name == "exact") return QuadMode::Exact;
  if (name == "grid") return QuadMode::Grid;
  if (name == "monte-carlo" || name == "mc") return QuadMode::MonteCarlo;
  throw std::invalid_argument("unknown quadrature mode '" + name + "'");
}

double WeightedCloud::total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

bool has_exact_path(const Measure& m) {
  if (dimension(m) == 1) return true;
  return std::visit(overloaded{
                        [](const DiscreteMeasure&) { return true; },
                        [](const Mixture& mix) {
                          return std::all_of(mix.components().begin(), mix.components().end(), [](const auto& c) {
                            return std::holds_alternative<DiscreteMeasure>(c.measure);
                          });
                        },
                        [](const auto&) { return false; },
                    },
                    m);
}

QuadratureSpec resolve(const QuadratureSpec& spec, const Measure& m) {
  QuadratureSpec out = spec;
  const int d = dimension(m);
  if (out.mode == QuadMode::Auto) {
    if (has_exact_path(m))
      out.mode = QuadMode::Exact;
    else
      out.mode = d == 3 ? QuadMode::MonteCarlo : QuadMode::Grid;
  }
  if (out.mode == QuadMode::Exact && !has_exact_path(m))
    throw std::invalid_argument("exact quadrature is only available for 1-D and discrete measures");
  if (out.nodes == 0) {
    switch (out.mode) {
      case QuadMode::Exact: out.nodes = kWorkingGrid1d; break;
      case QuadMode::Grid: out.nodes = kDefaultGridResolution; break;
      case QuadMode::MonteCarlo:
        out.nodes = d == 3 ? kDefaultMonteCarloNodes
                           : static_cast<std::size_t>(std::pow(double(kDefaultGridResolution), d));
        break;
      case QuadMode::Auto: break;
    }
  }
  return out;
}

namespace {

void append(WeightedCloud& into, const WeightedCloud& from, double scale) {
  into.nodes.insert(into.nodes.end(), from.nodes.begin(), from.nodes.end());
  for (double w : from.weights) into.weights.push_back(scale * w);
}

WeightedCloud cantor_atoms(std::size_t resolution) {
  int depth = 0;
  while ((std::size_t{1} << depth) < resolution && depth < 24) ++depth;
  std::vector<double> lefts{0.0};
  double width = 1.0;
  for (int n = 0; n < depth; ++n) {
    width /= 3.0;
    std::vector<double> next;
    next.reserve(2 * lefts.size());
    for (double a : lefts) {
      next.push_back(a);
      next.push_back(a + 2.0 * width);
    }
    lefts.swap(next);
  }
  WeightedCloud c;
  c.dim = 1;
  const double w = std::ldexp(1.0, -depth);
  for (double a : lefts) {
    c.nodes.push_back(make_point(a + 0.5 * width));
    c.weights.push_back(w);
  }
  return c;
}

WeightedCloud discrete_atoms(const DiscreteMeasure& d) {
  WeightedCloud c;
  c.dim = d.dim();
  c.nodes = d.points();
  c.weights = d.masses();
  return c;
}

// Exact cell masses of a 1-D piecewise-constant density on a fine grid.
WeightedCloud density_atoms_1d(const GriddedDensity& g, std::size_t resolution) {
  const double lo = g.bounds().lo[0];
  const double hi = g.bounds().hi[0];
  const std::size_t pieces = g.cell_count();
  std::vector<double> prefix(pieces + 1, 0.0);
  const double pw = g.cell_width(0);
  for (std::size_t i = 0; i < pieces; ++i) prefix[i + 1] = prefix[i] + g.values()[i] * pw;
  auto cdf = [&](double x) {
    const double t = (x - lo) / pw;
    if (t <= 0.0) return 0.0;
    if (t >= static_cast<double>(pieces)) return prefix[pieces];
    const auto i = static_cast<std::size_t>(t);
    return prefix[i] + g.values()[i] * (x - (lo + static_cast<double>(i) * pw));
  };
  WeightedCloud c;
  c.dim = 1;
  const double h = (hi - lo) / static_cast<double>(resolution);
  double prev = 0.0;
  for (std::size_t k = 0; k < resolution; ++k) {
    const double b = k + 1 == resolution ? hi : lo + static_cast<double>(k + 1) * h;
    const double next = k + 1 == resolution ? prefix[pieces] : cdf(b);
    const double w = next - prev;
    prev = next;
    if (w <= 0.0) continue;
    c.nodes.push_back(make_point(lo + (static_cast<double>(k) + 0.5) * h));
    c.weights.push_back(w);
  }
  return c;
}

WeightedCloud density_grid(const GriddedDensity& g, std::size_t per_axis) {
  WeightedCloud c;
  c.dim = g.dim();
  const int d = g.dim();
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;
  c.nodes.reserve(total);
  c.weights.reserve(total);
  double vol = 1.0;
  std::array<double, kMaxDim> h{};
  for (int k = 0; k < d; ++k) {
    h[k] = (g.bounds().hi[k] - g.bounds().lo[k]) / static_cast<double>(per_axis);
    vol *= h[k];
  }
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    Point x{};
    for (int k = 0; k < d; ++k) {
      const auto i = rest % per_axis;
      rest /= per_axis;
      x[k] = g.bounds().lo[k] + (static_cast<double>(i) + 0.5) * h[k];
    }
    const double w = g.density_at(x) * vol;
    if (w <= 0.0) continue;
    c.nodes.push_back(x);
    c.weights.push_back(w);
  }
  // Midpoint sampling of a non-aligned grid can lose or gain a sliver of
  // mass; rescale so the cloud carries the exact total.
  const double have = c.total();
  if (have > 0.0)
    for (double& w : c.weights) w *= g.total_mass() / have;
  return c;
}

WeightedCloud base_cloud(const BaseMeasure& m, QuadMode mode, std::size_t nodes) {
  return std::visit(overloaded{
                        [&](const DiscreteMeasure& d) { return discrete_atoms(d); },
                        [&](const CantorMeasure&) { return cantor_atoms(nodes); },
                        [&](const GriddedDensity& g) {
                          if (g.dim() == 1) return density_atoms_1d(g, nodes);
                          if (mode == QuadMode::Exact)
                            throw std::invalid_argument("exact quadrature is unavailable for d >= 2 densities");
                          return density_grid(g, nodes);
                        },
                    },
                    m);
}

}  // namespace

WeightedCloud atomize_1d(const Measure& m, std::size_t resolution) {
  if (dimension(m) != 1) throw std::invalid_argument("atomize_1d needs a 1-D measure");
  if (resolution < 1) throw std::invalid_argument("resolution must be >= 1");
  return std::visit(overloaded{
                        [&](const Mixture& mix) {
                          WeightedCloud c;
                          c.dim = 1;
                          for (const auto& comp : mix.components())
                            append(c, base_cloud(comp.measure, QuadMode::Grid, resolution), comp.weight);
                          return c;
                        },
                        [&](const auto& base) { return base_cloud(BaseMeasure(base), QuadMode::Grid, resolution); },
                    },
                    m);
}

WeightedCloud discretize(const Measure& m, const QuadratureSpec& spec) {
  const QuadratureSpec q = resolve(spec, m);
  if (q.mode == QuadMode::MonteCarlo) {
    WeightedCloud c;
    c.dim = dimension(m);
    c.nodes = sample(m, q.nodes, q.seed);
    c.weights.assign(c.nodes.size(), total_mass(m) / static_cast<double>(c.nodes.size()));
    return c;
  }
  return std::visit(overloaded{
                        [&](const Mixture& mix) {
                          WeightedCloud c;
                          c.dim = mix.dim();
                          for (const auto& comp : mix.components())
                            append(c, base_cloud(comp.measure, q.mode, q.nodes), comp.weight);
                          return c;
                        },
                        [&](const auto& base) { return base_cloud(BaseMeasure(base), q.mode, q.nodes); },
                    },
                    m);
}

}  // namespace wq
