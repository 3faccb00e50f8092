#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wq/transport.hpp"

namespace wq {

struct PropertyResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst = 0.0;  // largest violation seen, relative to the instance scale
  bool ok() const { return passed == trials; }
};

struct CheckOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 200;
  double tol = 1e-9;
  // Corrupts every solver plan before the marginal check (negative control).
  bool inject_fault = false;
};

struct CheckReport {
  CheckOptions options;
  std::vector<PropertyResult> properties;
  bool all_passed() const;
};

/// Randomized property suites for transport inequalities (monotony, summing,
/// triangle inequality, coordinate and mass scaling), plan marginals, the
/// exact solver against vertex enumeration, Lloyd descent and the allocation
/// minimizer. Throws std::invalid_argument when trials is zero.
CheckReport run_checks(const CheckOptions& opts);

/// Minimal c_p over all vertices of the transportation polytope, by
/// enumerating every spanning tree of the bipartite support graph. For
/// instances with at most 4 atoms per side.
double enumerate_vertex_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

}  // namespace wq
