#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "wq/measures.hpp"
#include "wq/types.hpp"

namespace wq {

/// Coupling between two finitely supported measures, stored as a dense
/// row-major matrix: entry (i, j) is the mass moved from source i to target j.
struct TransportPlan {
  int dim = 1;
  std::vector<Point> sources;
  std::vector<Point> targets;
  std::vector<double> entries;

  std::size_t rows() const { return sources.size(); }
  std::size_t cols() const { return targets.size(); }
  double& at(std::size_t i, std::size_t j) { return entries[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return entries[i * cols() + j]; }

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  double total_mass() const;
};

/// Diagnostics from checking a plan against prescribed marginals.
struct PlanValidation {
  bool valid = true;
  double max_row_error = 0.0;
  double max_col_error = 0.0;
  double min_entry = 0.0;
};

/// Row/column marginal residuals and sign check, tolerance 1e-9 * total mass.
PlanValidation validate_plan(const TransportPlan& plan, std::span<const double> source_masses,
                             std::span<const double> target_masses);

/// Sum of entries times Euclidean distance^p.
double plan_cost(const TransportPlan& plan, double p);

/// Largest distance over entries carrying more than 1e-12 of the total mass.
double linf_length(const TransportPlan& plan);

struct OtSolution {
  TransportPlan plan;
  double cost = 0.0;            // c_p(plan) = W_p^p
  double wp = 0.0;              // cost^(1/p)
  double dual_violation = 0.0;  // max(0, -min reduced cost); 0 certifies optimality
  std::size_t pivots = 0;
};

inline constexpr std::size_t kMaxExactSupport = 2000;

/// Exact discrete optimal transport by the transportation simplex (network
/// simplex on the bipartite graph, block pricing, perturbed supplies against
/// degeneracy). Throws std::invalid_argument on a mass mismatch beyond
/// 1e-9 relative and CapacityError beyond kMaxExactSupport atoms per side.
OtSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

struct RowRestriction {
  TransportPlan plan;
  std::vector<double> target_masses;  // column sums of the restricted plan
};

/// Scales row i by row_masses[i] / m_i, where m_i is the current row sum.
RowRestriction restrict_rows(const TransportPlan& plan, std::span<const double> row_masses);

/// Block-diagonal union of two plans; shared points are merged so the result
/// couples mu + mu~ with nu + nu~.
TransportPlan sum_plans(const TransportPlan& a, const TransportPlan& b);

/// Measure with the given atoms, dropping zero masses.
DiscreteMeasure measure_from_masses(int dim, std::span<const Point> points, std::span<const double> masses);

/// (i, j, mass) triples of nonzero entries, one per line.
void write_plan_csv(std::ostream& out, const TransportPlan& plan);

}  // namespace wq
