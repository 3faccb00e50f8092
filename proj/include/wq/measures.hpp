#pragma once

#include <cstddef>
#include <concepts>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "wq/types.hpp"

namespace wq {

/// Finitely supported measure. Duplicate points are merged on construction,
/// so two measures with the same atoms compare equal element-wise.
class DiscreteMeasure {
 public:
  DiscreteMeasure(int dim, std::vector<Point> points, std::vector<double> masses);

  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& masses() const { return masses_; }
  double total_mass() const { return total_; }

 private:
  int dim_;
  std::vector<Point> points_;
  std::vector<double> masses_;
  double total_ = 0.0;
};

/// Piecewise-constant density on a regular grid of a box. Values are
/// densities (mass per unit volume), stored with the first axis fastest.
class GriddedDensity {
 public:
  GriddedDensity(Box bounds, std::vector<int> resolution, std::vector<double> values);

  static GriddedDensity uniform(const Box& bounds, double mass = 1.0);
  /// Cell averages of rho(x) = intercept + <slope, x>; must stay nonnegative.
  static GriddedDensity linear(const Box& bounds, std::vector<int> resolution, double intercept,
                               const Point& slope);

  int dim() const { return bounds_.dim; }
  const Box& bounds() const { return bounds_; }
  const std::vector<int>& resolution() const { return resolution_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t cell_count() const { return values_.size(); }
  double cell_volume() const { return cell_volume_; }
  double cell_width(int axis) const;
  Box cell_box(std::size_t cell) const;
  /// Cell containing x (clamped to the grid); callers check bounds separately.
  std::size_t cell_of(const Point& x) const;
  /// Density at x; zero outside the box.
  double density_at(const Point& x) const;
  double total_mass() const { return total_; }

 private:
  Box bounds_;
  std::vector<int> resolution_;
  std::vector<double> values_;
  double cell_volume_ = 0.0;
  double total_ = 0.0;
};

/// The dyadic middle-thirds Cantor measure on [0,1] (mass 1, ratio 1/3,
/// weights 1/2, 1/2).
class CantorMeasure {
 public:
  static constexpr int dim() { return 1; }
  static constexpr double total_mass() { return 1.0; }
  /// Hausdorff dimension log 2 / log 3.
  static double dimension();
};

using BaseMeasure = std::variant<DiscreteMeasure, GriddedDensity, CantorMeasure>;

struct MixtureComponent {
  double weight;
  BaseMeasure measure;
};

/// Sum of positively weighted base measures of a common dimension.
/// Weights need not sum to one.
class Mixture {
 public:
  explicit Mixture(std::vector<MixtureComponent> components);

  int dim() const { return dim_; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  double total_mass() const { return total_; }

 private:
  std::vector<MixtureComponent> components_;
  int dim_ = 1;
  double total_ = 0.0;
};

using Measure = std::variant<DiscreteMeasure, GriddedDensity, CantorMeasure, Mixture>;

int dimension(const Measure& m);
int dimension(const BaseMeasure& m);
double total_mass(const Measure& m);
double total_mass(const BaseMeasure& m);

// Concrete measure types convert to both variants; these overloads pick the
// base variant so calls on a concrete type are not ambiguous.
template <class T>
concept ConcreteMeasure =
    std::same_as<T, DiscreteMeasure> || std::same_as<T, GriddedDensity> || std::same_as<T, CantorMeasure>;

template <ConcreteMeasure T>
int dimension(const T& m) {
  return m.dim();
}
template <ConcreteMeasure T>
double total_mass(const T& m) {
  return m.total_mass();
}

/// (sum over cells of value^beta * cellVolume)^(1/beta).
double beta_norm(const GriddedDensity& density, double beta);

/// n i.i.d. draws, deterministic in seed.
std::vector<Point> sample(const Measure& m, std::size_t n, std::uint64_t seed);

/// Mass of a closed box.
double box_mass(const Measure& m, const Box& box);
double box_mass(const BaseMeasure& m, const Box& box);
template <ConcreteMeasure T>
double box_mass(const T& m, const Box& box) {
  return box_mass(BaseMeasure(m), box);
}

/// kappa([0, x]) with the truncated residual interval counted (closed end)
/// or kappa([0, x)) with it dropped (open end).
double cantor_cdf(double x, bool closed = true);

/// Bounding box of the support (for discrete measures, of the atoms).
Box support_box(const Measure& m);

}  // namespace wq
