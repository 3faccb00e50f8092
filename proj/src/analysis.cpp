#include "wq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "wq/cantor.hpp"
#include "wq/rng.hpp"

namespace wq {

RateScanReport fit_rate(std::vector<RateRow> rows) {
  if (rows.size() < 3) throw std::invalid_argument("rate fit needs at least three rows");
  std::sort(rows.begin(), rows.end(), [](const RateRow& a, const RateRow& b) { return a.n < b.n; });
  std::set<std::size_t> distinct;
  for (const auto& r : rows) {
    if (r.n < 1) throw std::invalid_argument("N must be >= 1");
    if (!(r.value > 0.0) || !std::isfinite(r.value)) throw std::invalid_argument("rate fit needs positive values");
    distinct.insert(r.n);
  }
  if (distinct.size() != rows.size()) throw std::invalid_argument("rate fit needs distinct N");

  const double k = static_cast<double>(rows.size());
  double mx = 0.0, my = 0.0;
  for (const auto& r : rows) {
    mx += std::log(static_cast<double>(r.n));
    my += std::log(r.value);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& r : rows) {
    const double dx = std::log(static_cast<double>(r.n)) - mx;
    const double dy = std::log(r.value) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateScanReport out;
  out.rows = std::move(rows);
  out.slope = sxy / sxx;
  out.log_constant = my - out.slope * mx;
  double sse = 0.0;
  for (const auto& r : out.rows) {
    const double e = std::log(r.value) - (out.log_constant + out.slope * std::log(static_cast<double>(r.n)));
    sse += e * e;
  }
  out.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return out;
}

RateScanReport rate_scan(const Measure& m, double p, std::span<const std::size_t> ns, const QuantizeOptions& opts) {
  const auto results = quantize_sequence(m, ns, p, opts);
  std::vector<RateRow> rows;
  for (std::size_t k = 0; k < ns.size(); ++k) rows.push_back({ns[k], results[k].wp(), opts.seed});
  return fit_rate(std::move(rows));
}

RateScanReport cantor_rate_scan(double p, std::span<const std::size_t> ns) {
  std::vector<RateRow> rows;
  for (auto n : ns) rows.push_back({n, cantor::exact_error(n, p), 0});
  return fit_rate(std::move(rows));
}

std::optional<double> theta_reference(int d, double p) {
  if (d == 1) return std::pow(p + 1.0, -1.0 / p) / 2.0;
  if (d == 2 && p == 2.0) return std::sqrt(5.0 * std::sqrt(3.0) / 54.0);
  if (d == 2 && p == 1.0) return std::pow(2.0, -1.5) * std::pow(3.0, -1.75) * (4.0 + std::log(27.0));
  return std::nullopt;
}

std::optional<double> theta_printed_constant(int d, double p) {
  if (d == 1) return theta_reference(d, p);
  if (d == 2 && p == 2.0) return 5.0 * std::sqrt(3.0) / 54.0;
  if (d == 2 && p == 1.0) return std::pow(2.0, -2.0 / 3.0) * std::pow(3.0, -1.75) * (4.0 + std::log(27.0));
  return std::nullopt;
}

ThetaEstimate estimate_theta(int d, double p, std::span<const std::size_t> ns, std::size_t seeds,
                             const QuantizeOptions& opts) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (ns.empty()) throw std::invalid_argument("N list must not be empty");
  if (seeds < 1) throw std::invalid_argument("at least one seed is required");
  const Measure cube = GriddedDensity::uniform(unit_box(d));
  ThetaEstimate out;
  out.d = d;
  out.p = p;
  out.ns.assign(ns.begin(), ns.end());
  for (auto n : ns) {
    double wp = 0.0;
    if (d == 1) {
      wp = quantize_1d_dp(cube, n, p, 32 * n).wp();
    } else {
      QuantizeOptions o = opts;
      o.restarts = seeds;
      o.seed = derive_seed(opts.seed, n);
      wp = quantize(cube, n, p, o).wp();
    }
    out.per_n.push_back(std::pow(static_cast<double>(n), 1.0 / d) * wp);
  }
  const double k = static_cast<double>(out.per_n.size());
  out.theta = std::accumulate(out.per_n.begin(), out.per_n.end(), 0.0) / k;
  if (out.per_n.size() > 1) {
    double ss = 0.0;
    for (double v : out.per_n) ss += (v - out.theta) * (v - out.theta);
    out.stderr_ = std::sqrt(ss / (k - 1.0) / k);
  }
  out.reference = theta_reference(d, p);
  out.printed = theta_printed_constant(d, p);
  if (out.reference && out.printed) out.printed_mismatch = std::abs(*out.printed / *out.reference - 1.0) > 0.03;
  return out;
}

namespace {

// Index of the grid cell holding x; a coordinate on a shared face goes to the
// lower cell.
std::size_t partition_cell(const Box& box, std::size_t cells, const Point& x) {
  std::size_t flat = 0, stride = 1;
  for (int d = 0; d < box.dim; ++d) {
    const double w = (box.hi[d] - box.lo[d]) / static_cast<double>(cells);
    long k = w > 0.0 ? static_cast<long>(std::ceil((x[d] - box.lo[d]) / w)) - 1 : 0;
    k = std::clamp<long>(k, 0, static_cast<long>(cells) - 1);
    flat += static_cast<std::size_t>(k) * stride;
    stride *= cells;
  }
  return flat;
}

Box partition_box(const Box& box, std::size_t cells, std::size_t flat) {
  Box b = box;
  for (int d = 0; d < box.dim; ++d) {
    const std::size_t k = flat % cells;
    flat /= cells;
    const double w = (box.hi[d] - box.lo[d]) / static_cast<double>(cells);
    b.lo[d] = box.lo[d] + static_cast<double>(k) * w;
    b.hi[d] = k + 1 == cells ? box.hi[d] : b.lo[d] + w;
  }
  return b;
}

std::size_t power(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Mass of rho^beta over a box, for a piecewise-constant rho.
double powered_mass(const GriddedDensity& g, double beta, const Box& box) {
  double total = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double v = g.values()[c];
    if (v <= 0.0) continue;
    const Box cb = g.cell_box(c);
    double overlap = 1.0;
    for (int d = 0; d < g.dim() && overlap > 0.0; ++d)
      overlap *= std::max(0.0, std::min(cb.hi[d], box.hi[d]) - std::max(cb.lo[d], box.lo[d]));
    total += std::pow(v, beta) * overlap;
  }
  return total;
}

}  // namespace

SupportDensityReport support_density_report(const QuantizerResult& result, const GriddedDensity& density, double p,
                                            std::size_t cells_per_axis) {
  if (result.dim != density.dim()) throw std::invalid_argument("result and density differ in dimension");
  if (result.points.empty()) throw std::invalid_argument("result has no points");
  if (cells_per_axis < 1) throw std::invalid_argument("cells per axis must be >= 1");
  SupportDensityReport out;
  out.dim = density.dim();
  out.n = result.points.size();
  out.beta = out.dim / (out.dim + p);
  const Box& box = density.bounds();
  const double z = powered_mass(density, out.beta, box);
  const double n = static_cast<double>(out.n);

  if (out.dim == 1) {
    // Predicted CDF is piecewise linear across density cells.
    std::vector<double> xs;
    for (const auto& x : result.points) xs.push_back(x[0]);
    std::sort(xs.begin(), xs.end());
    const double w = density.cell_width(0);
    std::vector<double> cum(density.cell_count() + 1, 0.0);
    for (std::size_t c = 0; c < density.cell_count(); ++c)
      cum[c + 1] = cum[c] + std::pow(density.values()[c], out.beta) * w / z;
    auto cdf = [&](double x) {
      if (x <= box.lo[0]) return 0.0;
      if (x >= box.hi[0]) return 1.0;
      const auto c = std::min(static_cast<std::size_t>((x - box.lo[0]) / w), density.cell_count() - 1);
      const double a = box.lo[0] + static_cast<double>(c) * w;
      return cum[c] + (cum[c + 1] - cum[c]) * (x - a) / w;
    };
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double f = cdf(xs[i]);
      out.ks = std::max({out.ks, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
    }
  }

  const std::size_t total_cells = power(cells_per_axis, out.dim);
  out.histogram.resize(total_cells);
  for (std::size_t c = 0; c < total_cells; ++c) {
    out.histogram[c].cell = partition_box(box, cells_per_axis, c);
    out.histogram[c].predicted = powered_mass(density, out.beta, out.histogram[c].cell) / z;
  }
  for (const auto& x : result.points) ++out.histogram[partition_cell(box, cells_per_axis, x)].count;
  for (auto& h : out.histogram) {
    h.observed = static_cast<double>(h.count) / n;
    if (h.predicted > 0.0) {
      const double e = n * h.predicted;
      out.chi_square += (static_cast<double>(h.count) - e) * (static_cast<double>(h.count) - e) / e;
    }
  }
  return out;
}

EquidistReport equidist_report(const QuantizerResult& result, const Measure& m, double p, std::size_t cells_per_axis) {
  if (cells_per_axis < 1) throw std::invalid_argument("cells per axis must be >= 1");
  if (result.points.empty()) throw std::invalid_argument("result has no points");
  if (result.dim != dimension(m)) throw std::invalid_argument("result and measure differ in dimension");
  const int d = result.dim;
  EquidistReport out;
  out.cells_per_axis = cells_per_axis;
  out.n = result.points.size();
  const double scale = std::pow(static_cast<double>(out.n), (d + p) / d);
  const auto energies = cell_energies(m, result.points, p, result.quad);

  const Box box = support_box(m);
  const std::size_t total_cells = power(cells_per_axis, d);
  out.cells.resize(total_cells);
  std::vector<double> sums(total_cells, 0.0);
  for (std::size_t i = 0; i < out.n; ++i) {
    const auto c = partition_cell(box, cells_per_axis, result.points[i]);
    ++out.cells[c].points;
    sums[c] += energies[i] * scale;
  }
  std::vector<double> values;
  for (std::size_t c = 0; c < total_cells; ++c) {
    out.cells[c].cell = partition_box(box, cells_per_axis, c);
    if (out.cells[c].points == 0) {
      out.empty_cells.push_back(c);
      continue;
    }
    out.cells[c].mean_scaled_energy = sums[c] / static_cast<double>(out.cells[c].points);
    values.push_back(out.cells[c].mean_scaled_energy);
  }
  const double k = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.cv = out.mean > 0.0 ? std::sqrt(ss / k) / out.mean : 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  out.spread = *lo > 0.0 ? *hi / *lo - 1.0 : INFINITY;

  if (const auto* g = std::get_if<GriddedDensity>(&m)) {
    if (const auto theta = theta_reference(d, p)) {
      const double beta = d / (d + p);
      out.predicted_limit = std::pow(*theta, p) * std::pow(powered_mass(*g, beta, g->bounds()), (d + p) / d);
    }
  }
  return out;
}

MixtureRateReport mixture_rate_check(const Mixture& mixture, double p, std::span<const std::size_t> ns,
                                     const QuantizeOptions& opts) {
  double s_max = 0.0;
  for (const auto& c : mixture.components()) {
    const double s = std::visit(overloaded{
                                    [](const CantorMeasure&) { return cantor::similarity_dimension(); },
                                    [](const GriddedDensity& g) { return static_cast<double>(g.dim()); },
                                    [](const DiscreteMeasure&) { return 0.0; },
                                },
                                c.measure);
    s_max = std::max(s_max, s);
  }
  if (!(s_max > 0.0)) throw std::invalid_argument("mixture needs a Cantor or density component");
  MixtureRateReport out;
  out.scan = rate_scan(Measure(mixture), p, ns, opts);
  out.expected_slope = -1.0 / s_max;
  return out;
}

}  // namespace wq
