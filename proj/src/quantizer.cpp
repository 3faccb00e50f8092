#include "wq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "wq/cantor.hpp"
#include "wq/nearest.hpp"
#include "wq/parallel.hpp"
#include "wq/rng.hpp"

namespace wq {

double QuantizerResult::wp() const { return std::pow(std::max(energy, 0.0), 1.0 / p); }

namespace {

void check_centers(std::span<const Point> centers) {
  if (centers.empty()) throw std::invalid_argument("at least one center is required");
}

void check_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("exponent p must be >= 1");
}

// ---------------------------------------------------------------------------
// Exact 1-D paths.

struct SortedCenters {
  std::vector<double> x;             // ascending
  std::vector<std::size_t> index;    // original index of x[k]
  std::vector<double> boundary;      // midpoints, size K-1
};

SortedCenters sort_centers(std::span<const Point> centers) {
  SortedCenters s;
  std::vector<std::size_t> order(centers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return centers[a][0] < centers[b][0]; });
  for (auto i : order) {
    s.x.push_back(centers[i][0]);
    s.index.push_back(i);
  }
  for (std::size_t k = 0; k + 1 < s.x.size(); ++k) s.boundary.push_back(0.5 * (s.x[k] + s.x[k + 1]));
  return s;
}

// Integral of |x - c|^p over [l, r].
double power_integral(double l, double r, double c, double p) {
  auto g = [p](double t) { return std::copysign(std::pow(std::abs(t), p + 1.0), t) / (p + 1.0); };
  return g(r - c) - g(l - c);
}

double density_energy_1d(const GriddedDensity& g, const SortedCenters& s, double p) {
  double total = 0.0;
  const double w = g.cell_width(0);
  const double lo = g.bounds().lo[0];
  for (std::size_t piece = 0; piece < g.cell_count(); ++piece) {
    const double v = g.values()[piece];
    if (v == 0.0) continue;
    const double a = lo + static_cast<double>(piece) * w;
    const double b = piece + 1 == g.cell_count() ? g.bounds().hi[0] : a + w;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(s.boundary.begin(), s.boundary.end(), a) - s.boundary.begin());
    double left = a;
    while (left < b) {
      const double right = k < s.boundary.size() ? std::min(b, s.boundary[k]) : b;
      if (right > left) total += v * power_integral(left, right, s.x[k], p);
      left = right;
      ++k;
      if (k > s.boundary.size()) break;
    }
  }
  return total;
}

double discrete_energy(const DiscreteMeasure& d, std::span<const Point> centers, double p) {
  const NearestCenter index(centers, d.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) total += d.masses()[i] * cost_from_squared(index.query(d.points()[i]).squared_distance, p);
  return total;
}

double base_energy_exact(const BaseMeasure& m, std::span<const Point> centers, double p) {
  return std::visit(overloaded{
                        [&](const DiscreteMeasure& d) { return discrete_energy(d, centers, p); },
                        [&](const CantorMeasure&) { return cantor::energy(centers, p); },
                        [&](const GriddedDensity& g) {
                          if (g.dim() != 1) throw std::invalid_argument("exact energy needs a 1-D density");
                          return density_energy_1d(g, sort_centers(centers), p);
                        },
                    },
                    m);
}

// Closed-form CDF of a continuous 1-D base measure.
double cdf_1d(const BaseMeasure& m, double x) {
  return std::visit(overloaded{
                        [&](const CantorMeasure&) { return cantor_cdf(x, true); },
                        [&](const GriddedDensity& g) {
                          Box b = g.bounds();
                          b.hi[0] = std::min(b.hi[0], x);
                          if (b.hi[0] <= b.lo[0]) return 0.0;
                          return box_mass(BaseMeasure(g), b);
                        },
                        [&](const DiscreteMeasure&) -> double { throw std::logic_error("discrete CDF unused"); },
                    },
                    m);
}

std::vector<double> cloud_masses(const WeightedCloud& cloud, std::span<const Point> centers) {
  const NearestCenter index(centers, cloud.dim);
  std::vector<double> masses(centers.size(), 0.0);
  for (std::size_t k = 0; k < cloud.size(); ++k) masses[index.query(cloud.nodes[k]).index] += cloud.weights[k];
  return masses;
}

std::vector<double> base_masses_exact(const BaseMeasure& m, std::span<const Point> centers) {
  if (const auto* d = std::get_if<DiscreteMeasure>(&m)) {
    WeightedCloud c;
    c.dim = d->dim();
    c.nodes = d->points();
    c.weights = d->masses();
    return cloud_masses(c, centers);
  }
  const SortedCenters s = sort_centers(centers);
  std::vector<double> masses(centers.size(), 0.0);
  double prev = 0.0;
  const double total = total_mass(m);
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double next = k < s.boundary.size() ? cdf_1d(m, s.boundary[k]) : total;
    masses[s.index[k]] = next - prev;
    prev = next;
  }
  return masses;
}

// Masses with ties to the lowest index; tolerates duplicate centers.
std::vector<double> cell_masses(const Measure& m, std::span<const Point> centers, const QuadratureSpec& quad) {
  const QuadratureSpec q = resolve(quad, m);
  if (q.mode != QuadMode::Exact) return cloud_masses(discretize(m, q), centers);
  return std::visit(overloaded{
                        [&](const Mixture& mix) {
                          std::vector<double> out(centers.size(), 0.0);
                          for (const auto& c : mix.components()) {
                            const auto part = base_masses_exact(c.measure, centers);
                            for (std::size_t i = 0; i < out.size(); ++i) out[i] += c.weight * part[i];
                          }
                          return out;
                        },
                        [&](const auto& base) { return base_masses_exact(BaseMeasure(base), centers); },
                    },
                    m);
}

// ---------------------------------------------------------------------------
// Cloud assignment and cell updates.

struct Assignment {
  std::vector<std::uint32_t> owner;
  std::vector<double> mass;
  double energy = 0.0;
};

Assignment assign(const WeightedCloud& cloud, std::span<const Point> centers, double p) {
  const NearestCenter index(centers, cloud.dim);
  Assignment a;
  a.owner.resize(cloud.size());
  a.mass.assign(centers.size(), 0.0);
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const auto hit = index.query(cloud.nodes[k]);
    a.owner[k] = hit.index;
    a.mass[hit.index] += cloud.weights[k];
    a.energy += cloud.weights[k] * cost_from_squared(hit.squared_distance, p);
  }
  return a;
}

double cell_objective(const WeightedCloud& cloud, std::span<const std::uint32_t> members, const Point& x, double p) {
  double f = 0.0;
  for (auto k : members) f += cloud.weights[k] * distance_pow(cloud.nodes[k], x, p);
  return f;
}

Point weighted_median(const WeightedCloud& cloud, std::span<const std::uint32_t> members) {
  Point out{};
  std::vector<std::pair<double, double>> axis(members.size());
  double half = 0.0;
  for (auto k : members) half += cloud.weights[k];
  half *= 0.5;
  for (int d = 0; d < cloud.dim; ++d) {
    for (std::size_t t = 0; t < members.size(); ++t) axis[t] = {cloud.nodes[members[t]][d], cloud.weights[members[t]]};
    std::sort(axis.begin(), axis.end());
    double acc = 0.0;
    for (const auto& [x, w] : axis) {
      acc += w;
      out[d] = x;
      if (acc >= half) break;
    }
  }
  return out;
}

// Minimizer of the cell energy for p != 2, never worse than `x`.
Point minimize_cell(const WeightedCloud& cloud, std::span<const std::uint32_t> members, Point x, double p) {
  double mass = 0.0;
  Point centroid{};
  for (auto k : members) {
    mass += cloud.weights[k];
    for (int d = 0; d < kMaxDim; ++d) centroid[d] += cloud.weights[k] * cloud.nodes[k][d];
  }
  for (auto& c : centroid) c /= mass;
  double spread = 0.0;
  for (auto k : members) spread += cloud.weights[k] * squared_distance(cloud.nodes[k], centroid);
  spread = std::sqrt(spread / mass);

  double fx = cell_objective(cloud, members, x, p);
  const Point start = p == 1.0 ? weighted_median(cloud, members) : centroid;
  if (const double fs = cell_objective(cloud, members, start, p); fs < fx) {
    x = start;
    fx = fs;
  }
  if (spread == 0.0) return x;

  // Generalized Weiszfeld direction (an iteratively reweighted mean), with
  // step halving so the cell energy strictly decreases.
  const double floor = p == 1.0 ? 1e-12 : 1e-300;
  for (int it = 0; it < 100; ++it) {
    Point num{};
    double den = 0.0;
    for (auto k : members) {
      const double r = std::max(distance(cloud.nodes[k], x), floor);
      const double omega = cloud.weights[k] * std::pow(r, p - 2.0);
      den += omega;
      for (int d = 0; d < kMaxDim; ++d) num[d] += omega * cloud.nodes[k][d];
    }
    if (!(den > 0.0) || !std::isfinite(den)) break;
    Point dir{};
    for (int d = 0; d < kMaxDim; ++d) dir[d] = num[d] / den - x[d];
    double t = 1.0;
    bool moved = false;
    while (t > 1e-6) {
      Point cand = x;
      for (int d = 0; d < kMaxDim; ++d) cand[d] += t * dir[d];
      const double fc = cell_objective(cloud, members, cand, p);
      if (fc < fx) {
        x = cand;
        fx = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    if (t * std::sqrt(squared_distance(dir, Point{})) < 1e-8 * spread) break;
  }
  return x;
}

Point reseed(const WeightedCloud& cloud, std::span<const Point> centers, const std::vector<double>& cumulative,
             std::uint64_t seed) {
  Rng rng(seed);
  Point choice{};
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double u = rng.uniform() * cumulative.back();
    auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    k = std::min(k, cloud.size() - 1);
    choice = cloud.nodes[k];
    if (std::none_of(centers.begin(), centers.end(), [&](const Point& c) { return c == choice; })) break;
  }
  return choice;
}

std::vector<Point> update(const WeightedCloud& cloud, std::span<const Point> centers, const Assignment& a, double p,
                          std::uint64_t seed) {
  std::vector<Point> out(centers.begin(), centers.end());
  const std::size_t n = centers.size();
  if (p == 2.0) {
    std::vector<Point> sum(n, Point{});
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      auto& s = sum[a.owner[k]];
      for (int d = 0; d < kMaxDim; ++d) s[d] += cloud.weights[k] * cloud.nodes[k][d];
    }
    for (std::size_t i = 0; i < n; ++i)
      if (a.mass[i] > 0.0)
        for (int d = 0; d < kMaxDim; ++d) out[i][d] = sum[i][d] / a.mass[i];
  } else {
    std::vector<std::uint32_t> start(n + 1, 0), members(cloud.size());
    for (auto o : a.owner) ++start[o + 1];
    for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (std::size_t k = 0; k < cloud.size(); ++k) members[fill[a.owner[k]]++] = static_cast<std::uint32_t>(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (a.mass[i] <= 0.0) continue;
      const std::span<const std::uint32_t> cell(members.data() + start[i], start[i + 1] - start[i]);
      out[i] = minimize_cell(cloud, cell, centers[i], p);
    }
  }
  std::vector<double> cumulative;
  for (std::size_t i = 0; i < n; ++i) {
    if (a.mass[i] > 0.0) continue;
    if (cumulative.empty()) {
      cumulative.resize(cloud.size());
      std::partial_sum(cloud.weights.begin(), cloud.weights.end(), cumulative.begin());
    }
    out[i] = reseed(cloud, out, cumulative, derive_seed(seed, i));
  }
  return out;
}

// Sequential draws with probability proportional to mass times distance^p to
// the nearest chosen point. Points then accumulate at rate rho n^(-p/d),
// which drives the point density n towards rho^(d/(d+p)).
std::vector<Point> spread_init(const WeightedCloud& cloud, std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> score(cloud.weights), cumulative(cloud.size());
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::partial_sum(score.begin(), score.end(), cumulative.begin());
    if (!(cumulative.back() > 0.0)) {
      out.push_back(cloud.nodes[rng.index(cloud.size())]);
      continue;
    }
    const double u = rng.uniform() * cumulative.back();
    auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    k = std::min(k, cloud.size() - 1);
    const Point c = cloud.nodes[k];
    out.push_back(c);
    for (std::size_t t = 0; t < cloud.size(); ++t) {
      const double v = cloud.weights[t] * cost_from_squared(squared_distance(cloud.nodes[t], c), p);
      if (i == 0 || v < score[t]) score[t] = v;
    }
  }
  return out;
}

struct LocalSearch {
  std::vector<Point> points;
  double cloud_energy = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

LocalSearch lloyd(const WeightedCloud& cloud, std::vector<Point> x, double p, std::size_t max_iters, double tol,
                  std::uint64_t seed) {
  LocalSearch out;
  Assignment a = assign(cloud, x, p);
  double e = a.energy;
  if (e == 0.0) out.converged = true;
  while (!out.converged && out.iterations < max_iters) {
    std::vector<Point> next = update(cloud, x, a, p, derive_seed(seed, out.iterations));
    Assignment na = assign(cloud, next, p);
    ++out.iterations;
    if (na.energy > e) {
      // Only round-off can get here; keep the better configuration.
      out.converged = true;
      break;
    }
    const double rel = e > 0.0 ? (e - na.energy) / e : 0.0;
    x.swap(next);
    a = std::move(na);
    e = a.energy;
    if (e == 0.0 || rel < tol) out.converged = true;
  }
  out.points = std::move(x);
  out.cloud_energy = e;
  return out;
}

// Grows the configuration by splitting the highest-energy cells (at most
// doubling per level) and relaxing after each level, so the large-scale
// point distribution is settled while the point count is still small.
std::vector<Point> split_init(const WeightedCloud& cloud, std::size_t n, double p, const QuantizeOptions& opts,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> x = spread_init(cloud, 1, p, derive_seed(seed, 0));
  for (std::size_t level = 1; x.size() < n; ++level) {
    x = lloyd(cloud, std::move(x), p, std::min<std::size_t>(opts.max_iters, 100), std::max(opts.tol, 1e-5),
              derive_seed(seed, level))
            .points;
    const std::size_t k = x.size();
    std::vector<double> e(k, 0.0), mass(k, 0.0), rms(k, 0.0);
    const NearestCenter index(x, cloud.dim);
    for (std::size_t t = 0; t < cloud.size(); ++t) {
      const auto hit = index.query(cloud.nodes[t]);
      e[hit.index] += cloud.weights[t] * cost_from_squared(hit.squared_distance, p);
      mass[hit.index] += cloud.weights[t];
      rms[hit.index] += cloud.weights[t] * hit.squared_distance;
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return e[a] > e[b]; });
    const std::size_t splits = std::min(k, n - k);
    for (std::size_t s = 0; s < splits; ++s) {
      const std::size_t i = order[s];
      const double r = mass[i] > 0.0 ? 0.25 * std::sqrt(rms[i] / mass[i]) : 0.0;
      Point dir{};
      double norm = 0.0;
      while (norm == 0.0) {
        for (int d = 0; d < cloud.dim; ++d) dir[d] = rng.uniform(-1.0, 1.0);
        norm = std::sqrt(squared_distance(dir, Point{}));
      }
      Point a = x[i], b = x[i];
      for (int d = 0; d < cloud.dim; ++d) {
        a[d] += r * dir[d] / norm;
        b[d] -= r * dir[d] / norm;
      }
      x[i] = a;
      x.push_back(b);
    }
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------

double cloud_energy(const WeightedCloud& cloud, std::span<const Point> centers, double p) {
  check_centers(centers);
  check_p(p);
  return assign(cloud, centers, p).energy;
}

double energy(const Measure& m, std::span<const Point> centers, double p, const QuadratureSpec& quad) {
  check_centers(centers);
  check_p(p);
  const QuadratureSpec q = resolve(quad, m);
  if (q.mode != QuadMode::Exact) return cloud_energy(discretize(m, q), centers, p);
  return std::visit(overloaded{
                        [&](const Mixture& mix) {
                          double total = 0.0;
                          for (const auto& c : mix.components()) total += c.weight * base_energy_exact(c.measure, centers, p);
                          return total;
                        },
                        [&](const auto& base) { return base_energy_exact(BaseMeasure(base), centers, p); },
                    },
                    m);
}

std::vector<double> cell_energies(const Measure& m, std::span<const Point> centers, double p,
                                  const QuadratureSpec& quad) {
  check_centers(centers);
  check_p(p);
  const WeightedCloud cloud = discretize(m, resolve(quad, m));
  const NearestCenter index(centers, cloud.dim);
  std::vector<double> out(centers.size(), 0.0);
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const auto hit = index.query(cloud.nodes[k]);
    out[hit.index] += cloud.weights[k] * cost_from_squared(hit.squared_distance, p);
  }
  return out;
}

std::vector<double> voronoi_masses(const Measure& m, std::span<const Point> centers, const QuadratureSpec& quad) {
  check_centers(centers);
  std::set<Point> seen(centers.begin(), centers.end());
  if (seen.size() != centers.size()) throw std::invalid_argument("centers must be pairwise distinct");
  return cell_masses(m, centers, quad);
}

std::vector<Point> improve_step(const WeightedCloud& cloud, std::span<const Point> centers, double p,
                                std::uint64_t seed) {
  check_centers(centers);
  check_p(p);
  return update(cloud, centers, assign(cloud, centers, p), p, seed);
}

std::vector<Point> improve_step(const Measure& m, std::span<const Point> centers, double p, const QuadratureSpec& quad,
                                std::uint64_t seed) {
  return improve_step(discretize(m, quad), centers, p, seed);
}

QuantizerResult quantize(const Measure& m, std::size_t n, double p, const QuantizeOptions& opts) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  check_p(p);
  const QuadratureSpec quad = resolve(opts.quad, m);
  const WeightedCloud cloud = discretize(m, quad);
  const bool warm = !opts.warm_start.empty();
  const std::size_t runs = std::max<std::size_t>(opts.restarts, 1) + (warm ? 1 : 0);

  std::vector<LocalSearch> results(runs);
  parallel_for(runs, opts.jobs, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(opts.seed, r);
    std::vector<Point> init;
    if (warm && r == 0) {
      init.assign(opts.warm_start.begin(), opts.warm_start.begin() + std::min(n, opts.warm_start.size()));
      if (init.size() < n) {
        const auto extra = sample(m, n - init.size(), seed);
        init.insert(init.end(), extra.begin(), extra.end());
      }
    } else if (opts.init == InitMode::Split) {
      init = split_init(cloud, n, p, opts, seed);
    } else if (opts.init == InitMode::Spread) {
      init = spread_init(cloud, n, p, seed);
    } else {
      init = sample(m, n, seed);
    }
    results[r] = lloyd(cloud, std::move(init), p, opts.max_iters, opts.tol, seed);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < runs; ++r)
    if (results[r].cloud_energy < results[best].cloud_energy) best = r;

  QuantizerResult out;
  out.dim = dimension(m);
  out.points = std::move(results[best].points);
  out.p = p;
  out.iterations = results[best].iterations;
  out.converged = results[best].converged;
  out.seed = opts.seed;
  out.quad = quad;
  out.energy = energy(m, out.points, p, quad);
  out.masses = cell_masses(m, out.points, quad);
  return out;
}

std::vector<QuantizerResult> quantize_sequence(const Measure& m, std::span<const std::size_t> ns, double p,
                                               const QuantizeOptions& opts) {
  std::vector<QuantizerResult> out;
  QuantizeOptions local = opts;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (k > 0 && ns[k] <= ns[k - 1]) throw std::invalid_argument("N list must be strictly increasing");
    local.seed = derive_seed(opts.seed, ns[k]);
    out.push_back(quantize(m, ns[k], p, local));
    out.back().seed = opts.seed;
    local.warm_start = out.back().points;
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1-D dynamic programming oracle.

namespace {

// Cost of serving a run of sorted atoms [i, j) by one optimally placed center.
class RunCost {
 public:
  RunCost(std::span<const double> x, std::span<const double> w, double p) : x_(x), w_(w), p_(p) {
    integer_ = p == std::floor(p) && p <= 8.0;
    if (integer_) {
      order_ = static_cast<int>(p);
      prefix_.assign(static_cast<std::size_t>(order_ + 1), std::vector<long double>(x.size() + 1, 0.0L));
      for (std::size_t k = 0; k < x.size(); ++k) {
        long double pw = w[k];
        for (int e = 0; e <= order_; ++e) {
          prefix_[e][k + 1] = prefix_[e][k] + pw;
          pw *= x[k];
        }
      }
      for (int n = 0; n <= order_; ++n) {
        binom_.emplace_back();
        for (int k = 0; k <= n; ++k) binom_.back().push_back(k == 0 ? 1.0L : binom_.back().back() * (n - k + 1) / k);
      }
    }
  }

  double cost(std::size_t i, std::size_t j) const { return evaluate(i, j).second; }
  double center(std::size_t i, std::size_t j) const { return evaluate(i, j).first; }

  std::pair<double, double> evaluate(std::size_t i, std::size_t j) const {
    if (j - i == 1) return {x_[i], 0.0};
    if (p_ == 2.0) {
      const long double s0 = sum(0, i, j), s1 = sum(1, i, j), s2 = sum(2, i, j);
      const long double c = s1 / s0;
      return {static_cast<double>(c), static_cast<double>(std::max(0.0L, s2 - s1 * c))};
    }
    if (p_ == 1.0) {
      const long double half = 0.5L * sum(0, i, j);
      const long double base = prefix_[0][i];
      const auto it = std::lower_bound(prefix_[0].begin() + static_cast<long>(i) + 1, prefix_[0].begin() + static_cast<long>(j) + 1,
                                       base + half);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - prefix_[0].begin()) - 1, j - 1);
      const double c = x_[k];
      return {c, static_cast<double>(std::max(0.0L, split_power(i, j, c, 1)))};
    }
    if (integer_) return newton(i, j);
    return golden(i, j);
  }

 private:
  long double sum(int e, std::size_t i, std::size_t j) const { return prefix_[e][j] - prefix_[e][i]; }

  // sum over atoms in [i, j) of w |x - c|^e, by binomial expansion around c.
  long double split_power(std::size_t i, std::size_t j, double c, int e) const {
    const auto s = static_cast<std::size_t>(std::lower_bound(x_.begin() + static_cast<long>(i), x_.begin() + static_cast<long>(j), c) -
                                            x_.begin());
    long double left = 0.0L, right = 0.0L;
    long double cp = 1.0L;  // c^(e-k) built from the top
    std::vector<long double> cpow(static_cast<std::size_t>(e + 1));
    for (int k = 0; k <= e; ++k) {
      cpow[k] = cp;
      cp *= c;
    }
    for (int k = 0; k <= e; ++k) {
      const long double term = binom_[e][k] * cpow[e - k];
      const long double sign_k = (k % 2 == 0) ? 1.0L : -1.0L;
      const long double sign_ek = ((e - k) % 2 == 0) ? 1.0L : -1.0L;
      left += term * sign_k * sum(k, i, s);    // (c - x)^e
      right += term * sign_ek * sum(k, s, j);  // (x - c)^e
    }
    return left + right;
  }

  // Signed derivative pieces: sum w (c-x)^(e) over x < c minus over x >= c.
  long double split_signed(std::size_t i, std::size_t j, double c, int e) const {
    const auto s = static_cast<std::size_t>(std::lower_bound(x_.begin() + static_cast<long>(i), x_.begin() + static_cast<long>(j), c) -
                                            x_.begin());
    long double left = 0.0L, right = 0.0L;
    long double cp = 1.0L;
    std::vector<long double> cpow(static_cast<std::size_t>(e + 1));
    for (int k = 0; k <= e; ++k) {
      cpow[k] = cp;
      cp *= c;
    }
    for (int k = 0; k <= e; ++k) {
      const long double term = binom_[e][k] * cpow[e - k];
      const long double sign_k = (k % 2 == 0) ? 1.0L : -1.0L;
      const long double sign_ek = ((e - k) % 2 == 0) ? 1.0L : -1.0L;
      left += term * sign_k * sum(k, i, s);
      right += term * sign_ek * sum(k, s, j);
    }
    return left - right;
  }

  // Safeguarded Newton on f'(c) = p * split_signed(p-1).
  std::pair<double, double> newton(std::size_t i, std::size_t j) const {
    double lo = x_[i], hi = x_[j - 1];
    double c = static_cast<double>(sum(1, i, j) / sum(0, i, j));
    for (int it = 0; it < 60; ++it) {
      const long double g = split_signed(i, j, c, order_ - 1);
      if (g > 0)
        hi = c;
      else if (g < 0)
        lo = c;
      else
        break;
      const long double h = (order_ - 1) * split_power(i, j, c, order_ - 2);
      double next = h > 0 ? static_cast<double>(c - g / h) : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - c) <= 1e-15 * (1.0 + std::abs(c))) {
        c = next;
        break;
      }
      c = next;
    }
    return {c, static_cast<double>(std::max(0.0L, split_power(i, j, c, order_)))};
  }

  double direct(std::size_t i, std::size_t j, double c) const {
    double f = 0.0;
    for (std::size_t k = i; k < j; ++k) f += w_[k] * std::pow(std::abs(x_[k] - c), p_);
    return f;
  }

  std::pair<double, double> golden(std::size_t i, std::size_t j) const {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = x_[i], b = x_[j - 1];
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = direct(i, j, c), fd = direct(i, j, d);
    for (int it = 0; it < 80 && b - a > 1e-14 * (1.0 + std::abs(a)); ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = direct(i, j, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = direct(i, j, d);
      }
    }
    const double m = 0.5 * (a + b);
    return {m, direct(i, j, m)};
  }

  std::span<const double> x_, w_;
  double p_;
  bool integer_ = false;
  int order_ = 0;
  std::vector<std::vector<long double>> prefix_;
  std::vector<std::vector<long double>> binom_;
};

}  // namespace

DpSolution dp_quantize_atoms(std::span<const double> positions, std::span<const double> weights, std::size_t n,
                             double p) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  check_p(p);
  if (positions.size() != weights.size() || positions.empty())
    throw std::invalid_argument("positions and weights must be nonempty and of equal length");
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return positions[a] < positions[b]; });
  std::vector<double> x, w;
  for (auto k : order) {
    if (!(weights[k] > 0.0)) continue;
    if (!x.empty() && x.back() == positions[k]) {
      w.back() += weights[k];
    } else {
      x.push_back(positions[k]);
      w.push_back(weights[k]);
    }
  }
  const std::size_t m = x.size();
  DpSolution sol;
  if (n >= m) {
    sol.centers = x;
    return sol;
  }
  const RunCost run(x, w, p);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  for (std::size_t j = 1; j <= m; ++j) prev[j] = run.cost(0, j);
  std::vector<std::vector<std::uint32_t>> arg(n + 1);

  // Optimal split points are monotone in j, so each layer is filled by
  // divide and conquer over j with a shrinking window of split candidates.
  for (std::size_t layer = 2; layer <= n; ++layer) {
    arg[layer].assign(m + 1, 0);
    std::fill(cur.begin(), cur.end(), inf);
    auto solve = [&](auto&& self, std::size_t jlo, std::size_t jhi, std::size_t optlo, std::size_t opthi) -> void {
      if (jlo > jhi) return;
      const std::size_t mid = jlo + (jhi - jlo) / 2;
      double best = inf;
      std::size_t best_i = std::max(optlo, layer - 1);
      const std::size_t upper = std::min(opthi, mid - 1);
      for (std::size_t i = std::max(optlo, layer - 1); i <= upper; ++i) {
        const double v = prev[i] + run.cost(i, mid);
        if (v < best) {
          best = v;
          best_i = i;
        }
      }
      cur[mid] = best;
      arg[layer][mid] = static_cast<std::uint32_t>(best_i);
      if (mid > jlo) self(self, jlo, mid - 1, optlo, best_i);
      self(self, mid + 1, jhi, best_i, opthi);
    };
    solve(solve, layer, m, layer - 1, m - 1);
    prev.swap(cur);
  }
  sol.cost = prev[m];
  std::vector<double> centers;
  std::size_t j = m;
  for (std::size_t layer = n; layer >= 1; --layer) {
    const std::size_t i = layer == 1 ? 0 : arg[layer][j];
    centers.push_back(run.center(i, j));
    j = i;
  }
  std::reverse(centers.begin(), centers.end());
  sol.centers = std::move(centers);
  return sol;
}

QuantizerResult quantize_1d_dp(const Measure& m, std::size_t n, double p, std::size_t grid_resolution) {
  if (dimension(m) != 1) throw std::invalid_argument("the DP quantizer needs a 1-D measure");
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  check_p(p);
  const WeightedCloud atoms = atomize_1d(m, grid_resolution);
  std::vector<double> x(atoms.size());
  for (std::size_t k = 0; k < atoms.size(); ++k) x[k] = atoms.nodes[k][0];
  const DpSolution sol = dp_quantize_atoms(x, atoms.weights, n, p);

  QuantizerResult out;
  out.dim = 1;
  for (double c : sol.centers) out.points.push_back(make_point(c));
  out.p = p;
  out.converged = true;
  out.quad = resolve(QuadratureSpec{QuadMode::Exact, 0, 0}, m);
  out.energy = energy(m, out.points, p, out.quad);
  out.masses = cell_masses(m, out.points, out.quad);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct CellKey {
  std::array<long, kMaxDim> c;
  bool operator==(const CellKey&) const = default;
};
struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 0;
    for (long v : k.c) h = mix_seed(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

// Greedy packing in sample order: a point becomes a center unless it lies
// within 2*delta of an existing one. Stops once more than `limit` centers.
std::vector<std::size_t> greedy_packing(const std::vector<Point>& pts, int dim, double delta, std::size_t limit) {
  const double r = 2.0 * delta;
  std::vector<std::size_t> centers;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> grid;
  auto key = [&](const Point& x) {
    CellKey k{};
    for (int d = 0; d < dim; ++d) k.c[d] = static_cast<long>(std::floor(x[d] / r));
    return k;
  };
  for (std::size_t s = 0; s < pts.size(); ++s) {
    const CellKey base = key(pts[s]);
    bool covered = false;
    CellKey probe{};
    const long span1 = dim >= 2 ? 1 : 0, span2 = dim >= 3 ? 1 : 0;
    for (long a = -1; a <= 1 && !covered; ++a)
      for (long b = -span1; b <= span1 && !covered; ++b)
        for (long c = -span2; c <= span2 && !covered; ++c) {
          probe.c = {base.c[0] + a, base.c[1] + b, base.c[2] + c};
          auto it = grid.find(probe);
          if (it == grid.end()) continue;
          for (auto idx : it->second)
            if (distance(pts[idx], pts[s]) <= r) {
              covered = true;
              break;
            }
        }
    if (covered) continue;
    centers.push_back(s);
    grid[base].push_back(s);
    if (centers.size() > limit) break;
  }
  return centers;
}

}  // namespace

CoverResult cover_baseline(const Measure& m, std::size_t n, std::uint64_t seed, double p) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  check_p(p);
  const int dim = dimension(m);
  std::vector<Point> pts;
  if (const auto* d = std::get_if<DiscreteMeasure>(&m))
    pts = d->points();
  else
    pts = sample(m, std::max<std::size_t>(4000, 40 * n), seed);

  double hi = 0.0;
  const Box box = support_box(m);
  for (int d = 0; d < dim; ++d) hi += (box.hi[d] - box.lo[d]) * (box.hi[d] - box.lo[d]);
  hi = std::max(std::sqrt(hi), 1e-12);
  double lo = 0.0;
  std::vector<std::size_t> best = greedy_packing(pts, dim, hi, n);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto centers = greedy_packing(pts, dim, mid, n);
    if (centers.size() <= n) {
      hi = mid;
      best = std::move(centers);
    } else {
      lo = mid;
    }
    if (hi - lo <= 1e-9 * hi) break;
  }

  CoverResult out;
  out.delta = hi;
  QuantizerResult& r = out.result;
  r.dim = dim;
  for (auto idx : best) r.points.push_back(pts[idx]);
  const NearestCenter index(r.points, dim);
  for (const auto& x : pts) out.cover_radius = std::max(out.cover_radius, std::sqrt(index.query(x).squared_distance));
  r.p = p;
  r.converged = true;
  r.seed = seed;
  r.quad = resolve(QuadratureSpec{}, m);
  r.energy = energy(m, r.points, p, r.quad);
  r.masses = cell_masses(m, r.points, r.quad);
  return out;
}

Allocation predict_allocation(std::span<const double> alphas, int d, double p) {
  if (alphas.empty()) throw std::invalid_argument("at least one alpha is required");
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  check_p(p);
  const double e = d * p / (d + p);
  Allocation a;
  double total = 0.0;
  for (double x : alphas) {
    if (!(x > 0.0)) throw std::invalid_argument("alphas must be strictly positive");
    a.fractions.push_back(std::pow(x, e));
    total += a.fractions.back();
  }
  for (double& f : a.fractions) f /= total;
  a.fmin = std::pow(total, 1.0 / e);
  return a;
}

double allocation_objective(std::span<const double> alphas, std::span<const double> fractions, int d, double p) {
  if (alphas.size() != fractions.size()) throw std::invalid_argument("alphas and fractions differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) s += std::pow(alphas[i], p) / std::pow(fractions[i], p / d);
  return std::pow(s, 1.0 / p);
}

}  // namespace wq
