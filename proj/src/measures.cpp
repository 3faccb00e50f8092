#include "wq/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "wq/rng.hpp"

namespace wq {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension must be 1, 2 or 3");
}

constexpr double kCantorResidualWidth = 1e-12;

// Inverse-CDF pick over a cumulative table (last entry = total).
std::size_t pick(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

double cantor_draw(Rng& rng) {
  // 48 ternary digits from {0,2}: a point of the Cantor set at depth >= 40.
  double x = 0.0;
  double scale = 1.0;
  std::uint64_t bits = rng.bits();
  for (int k = 0; k < 48; ++k) {
    scale /= 3.0;
    if ((bits >> k) & 1ULL) x += 2.0 * scale;
  }
  return x;
}

void sample_base(const BaseMeasure& m, std::size_t n, Rng& rng, std::vector<Point>& out) {
  std::visit(overloaded{
                 [&](const DiscreteMeasure& d) {
                   std::vector<double> cum(d.size());
                   std::partial_sum(d.masses().begin(), d.masses().end(), cum.begin());
                   for (std::size_t i = 0; i < n; ++i) out.push_back(d.points()[pick(cum, rng.uniform())]);
                 },
                 [&](const GriddedDensity& g) {
                   std::vector<double> cum(g.cell_count());
                   std::partial_sum(g.values().begin(), g.values().end(), cum.begin());
                   for (std::size_t i = 0; i < n; ++i) {
                     const Box cell = g.cell_box(pick(cum, rng.uniform()));
                     Point x{};
                     for (int k = 0; k < g.dim(); ++k) x[k] = rng.uniform(cell.lo[k], cell.hi[k]);
                     out.push_back(x);
                   }
                 },
                 [&](const CantorMeasure&) {
                   for (std::size_t i = 0; i < n; ++i) out.push_back(make_point(cantor_draw(rng)));
                 },
             },
             m);
}

}  // namespace

// ---------------------------------------------------------------------------

DiscreteMeasure::DiscreteMeasure(int dim, std::vector<Point> points, std::vector<double> masses)
    : dim_(dim) {
  check_dim(dim);
  if (points.size() != masses.size()) throw std::invalid_argument("points and masses differ in length");
  if (points.empty()) throw std::invalid_argument("discrete measure needs at least one atom");
  std::map<Point, double> merged;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i]))
      throw std::invalid_argument("atom masses must be finite and strictly positive");
    Point x = points[i];
    for (int k = dim; k < kMaxDim; ++k) x[k] = 0.0;
    merged[x] += masses[i];
  }
  // Keep first-appearance order so callers can rely on index stability
  // when no duplicates were present.
  std::map<Point, bool> emitted;
  for (std::size_t i = 0; i < points.size(); ++i) {
    Point x = points[i];
    for (int k = dim; k < kMaxDim; ++k) x[k] = 0.0;
    if (emitted[x]) continue;
    emitted[x] = true;
    points_.push_back(x);
    masses_.push_back(merged[x]);
  }
  total_ = std::accumulate(masses_.begin(), masses_.end(), 0.0);
}

// ---------------------------------------------------------------------------

GriddedDensity::GriddedDensity(Box bounds, std::vector<int> resolution, std::vector<double> values)
    : bounds_(bounds), resolution_(std::move(resolution)), values_(std::move(values)) {
  check_dim(bounds_.dim);
  if (static_cast<int>(resolution_.size()) != bounds_.dim)
    throw std::invalid_argument("resolution must have one entry per axis");
  std::size_t cells = 1;
  for (int k = 0; k < bounds_.dim; ++k) {
    if (resolution_[k] < 1) throw std::invalid_argument("resolution entries must be >= 1");
    if (!(bounds_.hi[k] > bounds_.lo[k])) throw std::invalid_argument("box bounds must satisfy lo < hi");
    cells *= static_cast<std::size_t>(resolution_[k]);
  }
  for (int k = bounds_.dim; k < kMaxDim; ++k) bounds_.lo[k] = bounds_.hi[k] = 0.0;
  if (values_.size() != cells) throw std::invalid_argument("value count does not match resolution");
  cell_volume_ = 1.0;
  for (int k = 0; k < bounds_.dim; ++k) cell_volume_ *= cell_width(k);
  double sum = 0.0;
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("density values must be finite and >= 0");
    sum += v;
  }
  total_ = sum * cell_volume_;
  if (!(total_ > 0.0)) throw std::invalid_argument("density must have positive total mass");
}

GriddedDensity GriddedDensity::uniform(const Box& bounds, double mass) {
  std::vector<int> res(bounds.dim, 1);
  return GriddedDensity(bounds, res, {mass / bounds.volume()});
}

GriddedDensity GriddedDensity::linear(const Box& bounds, std::vector<int> resolution, double intercept,
                                      const Point& slope) {
  check_dim(bounds.dim);
  if (static_cast<int>(resolution.size()) != bounds.dim)
    throw std::invalid_argument("resolution must have one entry per axis");
  std::size_t cells = 1;
  for (int r : resolution) {
    if (r < 1) throw std::invalid_argument("resolution entries must be >= 1");
    cells *= static_cast<std::size_t>(r);
  }
  std::vector<double> values(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rest = c;
    double v = intercept;
    for (int k = 0; k < bounds.dim; ++k) {
      const auto idx = rest % static_cast<std::size_t>(resolution[k]);
      rest /= static_cast<std::size_t>(resolution[k]);
      const double w = (bounds.hi[k] - bounds.lo[k]) / resolution[k];
      // Cell average of an affine function is its value at the cell center.
      v += slope[k] * (bounds.lo[k] + (static_cast<double>(idx) + 0.5) * w);
    }
    if (v < 0.0) throw std::invalid_argument("linear density is negative inside the box");
    values[c] = v;
  }
  return GriddedDensity(bounds, std::move(resolution), std::move(values));
}

double GriddedDensity::cell_width(int axis) const {
  return (bounds_.hi[axis] - bounds_.lo[axis]) / resolution_[axis];
}

Box GriddedDensity::cell_box(std::size_t cell) const {
  Box b;
  b.dim = bounds_.dim;
  std::size_t rest = cell;
  for (int k = 0; k < bounds_.dim; ++k) {
    const auto idx = rest % static_cast<std::size_t>(resolution_[k]);
    rest /= static_cast<std::size_t>(resolution_[k]);
    const double w = cell_width(k);
    b.lo[k] = bounds_.lo[k] + static_cast<double>(idx) * w;
    b.hi[k] = idx + 1 == static_cast<std::size_t>(resolution_[k]) ? bounds_.hi[k] : b.lo[k] + w;
  }
  return b;
}

std::size_t GriddedDensity::cell_of(const Point& x) const {
  std::size_t cell = 0;
  std::size_t stride = 1;
  for (int k = 0; k < bounds_.dim; ++k) {
    const double t = (x[k] - bounds_.lo[k]) / cell_width(k);
    auto idx = static_cast<long>(std::floor(t));
    idx = std::clamp<long>(idx, 0, resolution_[k] - 1);
    cell += static_cast<std::size_t>(idx) * stride;
    stride *= static_cast<std::size_t>(resolution_[k]);
  }
  return cell;
}

double GriddedDensity::density_at(const Point& x) const {
  if (!bounds_.contains(x)) return 0.0;
  return values_[cell_of(x)];
}

// ---------------------------------------------------------------------------

double CantorMeasure::dimension() { return std::log(2.0) / std::log(3.0); }

// ---------------------------------------------------------------------------

Mixture::Mixture(std::vector<MixtureComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("mixture needs at least one component");
  dim_ = dimension(components_.front().measure);
  for (const auto& c : components_) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      throw std::invalid_argument("mixture weights must be strictly positive");
    if (dimension(c.measure) != dim_) throw std::invalid_argument("mixture components differ in dimension");
    total_ += c.weight * wq::total_mass(c.measure);
  }
}

// ---------------------------------------------------------------------------

int dimension(const BaseMeasure& m) {
  return std::visit([](const auto& x) { return x.dim(); }, m);
}

int dimension(const Measure& m) {
  return std::visit([](const auto& x) { return x.dim(); }, m);
}

double total_mass(const BaseMeasure& m) {
  return std::visit([](const auto& x) { return x.total_mass(); }, m);
}

double total_mass(const Measure& m) {
  return std::visit([](const auto& x) { return x.total_mass(); }, m);
}

double beta_norm(const GriddedDensity& density, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  double sum = 0.0;
  for (double v : density.values())
    if (v > 0.0) sum += std::pow(v, beta);
  return std::pow(sum * density.cell_volume(), 1.0 / beta);
}

std::vector<Point> sample(const Measure& m, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  std::visit(overloaded{
                 [&](const Mixture& mix) {
                   std::vector<double> cum;
                   double acc = 0.0;
                   for (const auto& c : mix.components()) cum.push_back(acc += c.weight * total_mass(c.measure));
                   for (std::size_t i = 0; i < n; ++i)
                     sample_base(mix.components()[pick(cum, rng.uniform())].measure, 1, rng, out);
                 },
                 [&](const auto& base) { sample_base(BaseMeasure(base), n, rng, out); },
             },
             m);
  return out;
}

double cantor_cdf(double x, bool closed) {
  if (x < 0.0) return 0.0;
  if (x > 1.0) return 1.0;
  double lo = 0.0;
  double width = 1.0;
  double mass = 1.0;
  double acc = 0.0;
  while (width >= kCantorResidualWidth) {
    const double third = width / 3.0;
    const double half = 0.5 * mass;
    if (x <= lo + third) {
      width = third;
    } else if (x < lo + 2.0 * third) {
      return acc + half;  // inside the removed middle third
    } else {
      acc += half;
      lo += 2.0 * third;
      width = third;
    }
    mass = half;
  }
  return closed ? acc + mass : acc;
}

double box_mass(const BaseMeasure& m, const Box& box) {
  return std::visit(overloaded{
                        [&](const DiscreteMeasure& d) {
                          double s = 0.0;
                          for (std::size_t i = 0; i < d.size(); ++i)
                            if (box.contains(d.points()[i])) s += d.masses()[i];
                          return s;
                        },
                        [&](const GriddedDensity& g) {
                          double s = 0.0;
                          for (std::size_t c = 0; c < g.cell_count(); ++c) {
                            if (g.values()[c] == 0.0) continue;
                            const Box cell = g.cell_box(c);
                            double vol = 1.0;
                            for (int k = 0; k < g.dim() && vol > 0.0; ++k)
                              vol *= std::max(0.0, std::min(cell.hi[k], box.hi[k]) - std::max(cell.lo[k], box.lo[k]));
                            s += vol * g.values()[c];
                          }
                          return s;
                        },
                        [&](const CantorMeasure&) {
                          if (box.hi[0] < box.lo[0]) return 0.0;
                          return cantor_cdf(box.hi[0], true) - cantor_cdf(box.lo[0], false);
                        },
                    },
                    m);
}

double box_mass(const Measure& m, const Box& box) {
  return std::visit(overloaded{
                        [&](const Mixture& mix) {
                          double s = 0.0;
                          for (const auto& c : mix.components()) s += c.weight * box_mass(c.measure, box);
                          return s;
                        },
                        [&](const auto& base) { return box_mass(BaseMeasure(base), box); },
                    },
                    m);
}

namespace {

Box base_support_box(const BaseMeasure& m) {
  return std::visit(overloaded{
                        [](const DiscreteMeasure& d) {
                          Box b;
                          b.dim = d.dim();
                          b.lo = b.hi = d.points().front();
                          for (const auto& x : d.points())
                            for (int k = 0; k < d.dim(); ++k) {
                              b.lo[k] = std::min(b.lo[k], x[k]);
                              b.hi[k] = std::max(b.hi[k], x[k]);
                            }
                          return b;
                        },
                        [](const GriddedDensity& g) { return g.bounds(); },
                        [](const CantorMeasure&) { return unit_box(1); },
                    },
                    m);
}

}  // namespace

Box support_box(const Measure& m) {
  return std::visit(overloaded{
                        [](const Mixture& mix) {
                          Box b = base_support_box(mix.components().front().measure);
                          for (const auto& c : mix.components()) {
                            const Box o = base_support_box(c.measure);
                            for (int k = 0; k < b.dim; ++k) {
                              b.lo[k] = std::min(b.lo[k], o.lo[k]);
                              b.hi[k] = std::max(b.hi[k], o.hi[k]);
                            }
                          }
                          return b;
                        },
                        [](const auto& base) { return base_support_box(BaseMeasure(base)); },
                    },
                    m);
}

}  // namespace wq
