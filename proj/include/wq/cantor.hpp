#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wq/types.hpp"

namespace wq::cantor {

/// s = log 2 / log 3.
double similarity_dimension();

/// E[(Y - 1/2)^k] for Y ~ kappa, k = 0..max_order (odd orders vanish).
std::vector<double> central_moments(int max_order);

/// Integral of min_i |x - c_i|^p d kappa. Integer p uses exact moment sums
/// on every dyadic interval lying inside one Voronoi cell; other p refine
/// min/max bounds until each interval's bracket is within rel_tol of its
/// upper bound.
double energy(std::span<const Point> centers, double p, double rel_tol = 1e-8);

/// Closed bracket [lo, hi] for c1 = W_p(kappa, Delta_1) from the
/// generation-n dyadic intervals.
struct Bracket {
  double lo;
  double hi;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};
Bracket c1_bracket(double p, int generation);

/// c1 by bracket refinement until width < tol; returns the bracket midpoint.
double c1(double p, double tol = 1e-10);

/// c1 from the exact moment formula (integer p) or a 1e-13 bracket.
double c1_value(double p);

/// W_p(kappa, Delta_N) in closed form: with n = floor(log2 N),
/// W_p^p = c1^p [(2^(n+1) - N) 2^-n 3^(-np) + (N - 2^n) 2^-n 3^(-(n+1)p)].
double exact_error(std::size_t n, double p);

/// Centers of the terminal intervals of one optimal N-point support: the
/// leftmost N - 2^n generation-n intervals are split into their two sons.
std::vector<Point> canonical_support(std::size_t n);

struct ErrorRow {
  std::size_t n;
  double error;   // W_p(kappa, Delta_N)
  double scaled;  // error * N^(1/s)
};

struct ErrorTable {
  double p = 1.0;
  std::vector<ErrorRow> rows;
  // Over the last two full generations [2^(K-2), 2^K] inside the table.
  double sup_scaled = 0.0;
  double inf_scaled = 0.0;
  double ratio = 1.0;
  // scaled(3 * 2^k) / scaled(2^k) for the largest k with 3 * 2^k in the
  // table. The sup above sits between those anchors, so ratio >= this.
  std::optional<double> anchor_ratio;
};

ErrorTable scan(std::size_t n_max, double p);

/// Predicted scaled ratio value(3*2^k) / value(2^k):
/// ((1 + 3^-p) / 2)^(1/p) * 3^(log 3 / log 2 - 1).
double oscillation_ratio(double p);

}  // namespace wq::cantor
