#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wq/measures.hpp"
#include "wq/quantizer.hpp"

namespace wq {

struct RateRow {
  std::size_t n;
  double value;  // W_p
  std::uint64_t seed = 0;
};

struct RateScanReport {
  std::vector<RateRow> rows;  // sorted by N
  double slope = 0.0;
  double log_constant = 0.0;
  double r_squared = 1.0;
};

/// Least-squares line through (log N, log W_p). Needs at least three rows
/// with distinct N and positive values.
RateScanReport fit_rate(std::vector<RateRow> rows);

/// W_p(m, Delta_N) estimates from quantize_sequence() over `ns`, then fitted.
RateScanReport rate_scan(const Measure& m, double p, std::span<const std::size_t> ns, const QuantizeOptions& opts = {});

/// Closed-form rows W_p(kappa, Delta_N) for the Cantor measure.
RateScanReport cantor_rate_scan(double p, std::span<const std::size_t> ns);

/// Reference value of theta(d, p) in W_p units: (p+1)^(-1/p)/2 for d = 1 and
/// the regular hexagon cell moments for d = 2, p in {1, 2}.
std::optional<double> theta_reference(int d, double p);

/// Constant printed for theta(2, p) in the literature this tool follows, kept
/// verbatim for comparison: 5 sqrt 3 / 54 for p = 2 and
/// 2^(-2/3) 3^(-7/4) (4 + ln 27) for p = 1.
std::optional<double> theta_printed_constant(int d, double p);

struct ThetaEstimate {
  int d = 1;
  double p = 2.0;
  std::vector<std::size_t> ns;
  std::vector<double> per_n;  // N^(1/d) W_p for each N
  double theta = 0.0;         // mean over N
  double stderr_ = 0.0;       // standard error of that mean
  std::optional<double> reference;
  std::optional<double> printed;
  // Set when the printed constant is not within 3% of the reference.
  bool printed_mismatch = false;
};

/// theta(d, p) from the unit cube: the 1-D DP oracle for d = 1, best of
/// `seeds` Lloyd restarts for d >= 2.
ThetaEstimate estimate_theta(int d, double p, std::span<const std::size_t> ns, std::size_t seeds,
                             const QuantizeOptions& opts = {});

struct HistogramCell {
  Box cell;
  std::size_t count = 0;
  double observed = 0.0;   // fraction of support points
  double predicted = 0.0;  // mass fraction of rho^(d/(d+p))
};

struct SupportDensityReport {
  int dim = 1;
  std::size_t n = 0;
  double beta = 1.0;
  double ks = 0.0;          // 1-D only
  double chi_square = 0.0;  // sum over cells of (count - N f)^2 / (N f), cells with f > 0
  std::vector<HistogramCell> histogram;
};

/// Compares support points against the normalized density rho^(d/(d+p)).
SupportDensityReport support_density_report(const QuantizerResult& result, const GriddedDensity& density, double p,
                                            std::size_t cells_per_axis = 8);

struct EquidistCell {
  Box cell;
  std::size_t points = 0;
  double mean_scaled_energy = 0.0;  // average of E_i N^((d+p)/d) over points in the cell
};

struct EquidistReport {
  std::size_t cells_per_axis = 1;
  std::size_t n = 0;
  std::vector<EquidistCell> cells;
  std::vector<std::size_t> empty_cells;  // excluded from the statistics below
  double mean = 0.0;
  double cv = 0.0;      // population standard deviation / mean
  double spread = 0.0;  // max / min - 1
  // theta(d,p)^p (int rho^(d/(d+p)))^((d+p)/d) when theta is known.
  std::optional<double> predicted_limit;
};

/// Per-cell averages of scaled point energies over a cells_per_axis^d
/// partition of the support box. A point on a shared face belongs to the
/// cell with the lower index.
EquidistReport equidist_report(const QuantizerResult& result, const Measure& m, double p, std::size_t cells_per_axis);

struct MixtureRateReport {
  RateScanReport scan;
  double expected_slope = 0.0;  // -1 / max_i s_i
};

/// Rate scan on a mixture, with the slope predicted from the largest
/// component dimension (Cantor: log 2 / log 3, density: d).
MixtureRateReport mixture_rate_check(const Mixture& mixture, double p, std::span<const std::size_t> ns,
                                     const QuantizeOptions& opts = {});

}  // namespace wq
