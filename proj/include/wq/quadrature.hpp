#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wq/measures.hpp"
#include "wq/types.hpp"

namespace wq {

enum class QuadMode {
  Auto,        // exact where a closed form exists, else the dimension default
  Exact,       // 1-D densities, Cantor and discrete measures only
  Grid,        // midpoint grid; nodes = per-axis resolution
  MonteCarlo,  // nodes = sample count, drawn with `seed`
};

struct QuadratureSpec {
  QuadMode mode = QuadMode::Auto;
  std::size_t nodes = 0;  // 0 selects the default for the mode and dimension
  std::uint64_t seed = 0;

  bool operator==(const QuadratureSpec&) const = default;
};

inline constexpr std::size_t kDefaultGridResolution = 512;       // per axis, d <= 2
inline constexpr std::size_t kDefaultMonteCarloNodes = 2000000;  // d = 3
inline constexpr std::size_t kWorkingGrid1d = 65536;             // 1-D iteration cloud
inline constexpr int kWorkingCantorDepth = 16;

std::string to_string(QuadMode mode);
QuadMode parse_quad_mode(const std::string& name);

/// True when energies and cell masses of `m` have closed forms.
bool has_exact_path(const Measure& m);

/// Replaces Auto and zero node counts by concrete settings for `m`.
QuadratureSpec resolve(const QuadratureSpec& spec, const Measure& m);

/// Weighted point cloud standing in for a measure. Weights sum to the total
/// mass of the measure.
struct WeightedCloud {
  int dim = 1;
  std::vector<Point> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double total() const;
};

/// Cloud used for cell integrals. Exact mode yields the fine working cloud
/// that iterative solvers run on.
WeightedCloud discretize(const Measure& m, const QuadratureSpec& spec);

/// Weighted atoms on a grid of `resolution` cells (1-D measures only): cell
/// midpoints carrying exact cell masses; Cantor measures use the centers of
/// generation-n intervals with 2^n >= resolution; discrete atoms pass through.
WeightedCloud atomize_1d(const Measure& m, std::size_t resolution);

}  // namespace wq
