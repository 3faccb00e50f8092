#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wq/measures.hpp"
#include "wq/quadrature.hpp"
#include "wq/types.hpp"

namespace wq {

/// N-point support with its Voronoi masses; `energy` estimates
/// W_p^p(mu, best measure on `points`).
struct QuantizerResult {
  int dim = 1;
  std::vector<Point> points;
  std::vector<double> masses;
  double energy = 0.0;
  double p = 2.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  QuadratureSpec quad;

  double wp() const;
};

/// Integral of min_i |x - x_i|^p against the measure. Exact in 1-D (closed
/// forms per density piece; dyadic recursion for the Cantor measure) and for
/// discrete measures; quadrature otherwise.
double energy(const Measure& m, std::span<const Point> centers, double p, const QuadratureSpec& quad = {});

/// Same integral against a cloud; ties go to the lowest center index.
double cloud_energy(const WeightedCloud& cloud, std::span<const Point> centers, double p);

/// Per-center cell energies E_i = integral over cell i of |x - x_i|^p, on the
/// cloud of `quad` (ties to the lowest index).
std::vector<double> cell_energies(const Measure& m, std::span<const Point> centers, double p,
                                  const QuadratureSpec& quad = {});

/// Mass of each Voronoi cell. Centers must be pairwise distinct.
std::vector<double> voronoi_masses(const Measure& m, std::span<const Point> centers, const QuadratureSpec& quad = {});

/// One sweep: every center moves to the minimizer of its cell energy
/// (centroid for p = 2, Weiszfeld from the coordinate-wise median for p = 1,
/// damped descent otherwise). Centers of empty cells are moved to a fresh
/// draw from the cloud, chosen from `seed`.
std::vector<Point> improve_step(const WeightedCloud& cloud, std::span<const Point> centers, double p,
                                std::uint64_t seed = 0);
std::vector<Point> improve_step(const Measure& m, std::span<const Point> centers, double p,
                                const QuadratureSpec& quad = {}, std::uint64_t seed = 0);

enum class InitMode {
  Samples,  // i.i.d. draws from the measure
  Spread,   // sequential draws weighted by mass times distance^p to the chosen centers
  Split,    // grow from one point by splitting high-energy cells, relaxing between levels
};

struct QuantizeOptions {
  std::size_t restarts = 4;
  InitMode init = InitMode::Split;
  std::size_t max_iters = 500;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  QuadratureSpec quad;
  // Extra first restart seeded from these points, topped up with samples.
  std::vector<Point> warm_start;
  unsigned jobs = 1;
};

/// Best of `restarts` Lloyd-type local searches, each from its own seeded
/// initial configuration.
QuantizerResult quantize(const Measure& m, std::size_t n, double p, const QuantizeOptions& opts = {});

/// quantize() over increasing N, each run warm-started from the previous
/// optimum plus fresh samples; energies are then non-increasing in N.
std::vector<QuantizerResult> quantize_sequence(const Measure& m, std::span<const std::size_t> ns, double p,
                                               const QuantizeOptions& opts = {});

/// Globally optimal quantizer of the measure atomized on `grid_resolution`
/// cells, by dynamic programming over contiguous runs of atoms (in 1-D every
/// Voronoi cell is an interval). The reported energy is the exact energy of
/// the returned points against the original measure.
QuantizerResult quantize_1d_dp(const Measure& m, std::size_t n, double p, std::size_t grid_resolution);

/// Same DP on an explicit sorted-or-not cloud; returns (centers, cost on the cloud).
struct DpSolution {
  std::vector<double> centers;
  double cost = 0.0;
};
DpSolution dp_quantize_atoms(std::span<const double> positions, std::span<const double> weights, std::size_t n,
                             double p);

struct CoverResult {
  QuantizerResult result;
  double delta = 0.0;         // final packing half-separation
  double cover_radius = 0.0;  // max distance from the support sample to a center
};

/// Greedy 2*delta-packing of a dense support sample with delta shrunk until
/// at most N centers remain; every sample point lies within 2*delta <= 5*delta
/// of a center.
CoverResult cover_baseline(const Measure& m, std::size_t n, std::uint64_t seed, double p = 2.0);

struct Allocation {
  std::vector<double> fractions;
  double fmin = 0.0;
};

/// Minimizer of F(alpha; x) = (sum_i alpha_i^p / x_i^(p/d))^(1/p) over the
/// simplex: x_i proportional to alpha_i^(dp/(d+p)), with minimum
/// |alpha|_(dp/(d+p)).
Allocation predict_allocation(std::span<const double> alphas, int d, double p);

/// F(alpha; x) itself, for cross-checking the closed form.
double allocation_objective(std::span<const double> alphas, std::span<const double> fractions, int d, double p);

}  // namespace wq
