// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// status when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "wq/analysis.hpp"
#include "wq/cantor.hpp"
#include "wq/checks.hpp"
#include "wq/quantizer.hpp"

using namespace wq;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double rel(double value, double target) { return std::abs(value / target - 1.0); }

const GriddedDensity kRamp = GriddedDensity::linear(unit_box(1), {4096}, 0.0, make_point(2.0));

Verdict theta_1d() {
  bool pass = true;
  std::string detail;
  for (double p : {1.0, 2.0, 3.0}) {
    const double value = 256.0 * quantize_1d_dp(GriddedDensity::uniform(unit_box(1)), 256, p, 256 * 32).wp();
    const double target = 0.5 * std::pow(p + 1.0, -1.0 / p);
    pass = pass && rel(value, target) < 0.01;
    detail += fmt::format(" p={}: {:.6f} vs {:.6f} ({:+.3f}%);", p, value, target, 100.0 * (value / target - 1.0));
  }
  return {pass, detail};
}

Verdict theta_2d() {
  const std::vector<std::size_t> ns{256, 1024};
  const auto t = estimate_theta(2, 2.0, ns, 8);
  const double target = *t.reference;
  bool pass = true;
  std::string detail;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    pass = pass && rel(t.per_n[k], target) < 0.03;
    detail += fmt::format(" N={}: {:.6f};", ns[k], t.per_n[k]);
  }
  detail += fmt::format(" mean {:.6f} vs hexagon {:.6f} ({:+.2f}%); printed constant {:.6f} normalization mismatch {}",
                        t.theta, target, 100.0 * (t.theta / target - 1.0), *t.printed, t.printed_mismatch);
  return {pass && t.printed_mismatch, detail};
}

Verdict density_constant() {
  const double target = 0.5 / std::sqrt(3.0) * std::sqrt(27.0 / 32.0);
  const double value = 256.0 * quantize_1d_dp(kRamp, 256, 2.0, 256 * 32).wp();
  return {rel(value, target) < 0.02,
          fmt::format(" N*W_2 = {:.6f} vs {:.6f} ({:+.3f}%)", value, target, 100.0 * (value / target - 1.0))};
}

Verdict support_law() {
  const auto rep = support_density_report(quantize_1d_dp(kRamp, 512, 2.0, 512 * 32), kRamp, 2.0);
  return {rep.ks < 0.05, fmt::format(" KS = {:.5f} (limit 0.05)", rep.ks)};
}

Verdict cantor_oscillation() {
  const double inv_s = 1.0 / cantor::similarity_dimension();
  double worst_low = 0.0, worst_ratio = 0.0;
  for (double p : {1.0, 2.0, 3.0}) {
    const double c1 = cantor::c1_value(p);
    for (int k = 0; k <= 10; ++k) {
      const double n = std::ldexp(1.0, k);
      const double low = cantor::exact_error(std::size_t(n), p) * std::pow(n, inv_s);
      const double high = cantor::exact_error(std::size_t(3 * n), p) * std::pow(3 * n, inv_s);
      worst_low = std::max(worst_low, rel(low, c1));
      worst_ratio = std::max(worst_ratio, rel(high / low, cantor::oscillation_ratio(p)));
    }
  }
  const double ratio1 = cantor::exact_error(3, 1.0) * std::pow(3.0, inv_s) / cantor::exact_error(1, 1.0);
  double worst_numeric = 0.0;
  const Measure kappa = CantorMeasure{};
  QuantizeOptions opts;
  opts.restarts = 8;
  for (double p : {1.0, 2.0})
    for (std::size_t n : {1, 2, 3, 4, 6, 8})
      worst_numeric = std::max(worst_numeric, rel(quantize(kappa, n, p, opts).wp(), cantor::exact_error(n, p)));
  const bool pass = worst_low < 1e-9 && worst_ratio < 1e-9 && std::abs(ratio1 - 1.2677) < 1e-4 && worst_numeric < 0.02;
  return {pass, fmt::format(" scaled(2^k)/c1 dev {:.1e}; ratio dev {:.1e}; p=1 ratio {:.6f}; quantize vs closed form "
                            "worst {:.2e}",
                            worst_low, worst_ratio, ratio1, worst_numeric)};
}

Verdict rate_exponents() {
  QuantizeOptions opts;
  opts.restarts = 2;
  const std::vector<std::size_t> square_ns{64, 128, 256, 512};
  const auto square = rate_scan(GriddedDensity::uniform(unit_box(2)), 2.0, square_ns, opts);

  std::vector<std::size_t> cantor_ns;
  for (int k = 0; k <= 10; ++k) cantor_ns.push_back(std::size_t{1} << k);
  const auto kappa = cantor_rate_scan(1.0, cantor_ns);

  const Mixture mix({{0.5, CantorMeasure{}}, {0.5, GriddedDensity::uniform(Box{1, make_point(2.0), make_point(3.0)})}});
  const std::vector<std::size_t> mix_ns{16, 32, 64, 128, 256, 512};
  const auto mixed = mixture_rate_check(mix, 1.0, mix_ns);

  // Same mixture through the 1-D DP oracle: separates local-search error
  // from the finite-N behaviour of the optimum itself.
  std::vector<RateRow> oracle_rows;
  for (std::size_t n : mix_ns) oracle_rows.push_back({n, quantize_1d_dp(mix, n, 1.0, 32 * n).wp()});
  const auto oracle = fit_rate(oracle_rows);

  const bool ok_square = std::abs(square.slope + 0.5) <= 0.03;
  const bool ok_kappa = std::abs(kappa.slope + std::log(3.0) / std::log(2.0)) <= 0.01;
  const bool ok_mix = std::abs(mixed.scan.slope - mixed.expected_slope) <= 0.05;
  return {ok_square && ok_kappa && ok_mix,
          fmt::format(" square {:.4f} [{}]; Cantor exact {:.4f} [{}]; mixture {:.4f} vs {:.1f} [{}] (DP optimum {:.4f})",
                      square.slope, ok_square ? "ok" : "out", kappa.slope, ok_kappa ? "ok" : "out", mixed.scan.slope,
                      mixed.expected_slope, ok_mix ? "ok" : "out", oracle.slope)};
}

Verdict property_suites() {
  const auto rep = run_checks({});
  bool pass = true;
  std::string detail;
  for (const auto& p : rep.properties) {
    pass = pass && p.ok() && p.trials >= 200;
    detail += fmt::format(" {} {}/{};", p.name, p.passed, p.trials);
  }
  return {pass, detail};
}

Verdict equidistribution() {
  const auto uniform = GriddedDensity::uniform(unit_box(2));
  const auto u = equidist_report(quantize(uniform, 4096, 2.0), uniform, 2.0, 4);
  const Measure ramp = GriddedDensity::linear(unit_box(2), {64, 64}, 0.4, make_point(1.2, 0.0));
  const auto r = equidist_report(quantize(ramp, 4096, 2.0), ramp, 2.0, 4);
  const bool pass = u.cv < 0.10 && u.empty_cells.empty() && r.spread < 0.15 && r.empty_cells.empty();
  return {pass, fmt::format(" uniform CV {:.4f} (limit 0.10); ramp spread {:.4f} (limit 0.15), CV {:.4f}", u.cv,
                            r.spread, r.cv)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"theta(1,p) from the DP oracle", theta_1d},
      {"theta(2,2) best of 8 seeds", theta_2d},
      {"nonuniform density constant", density_constant},
      {"support law", support_law},
      {"Cantor oscillation", cantor_oscillation},
      {"rate exponents", rate_exponents},
      {"transport property suites", property_suites},
      {"energy equidistribution", equidistribution},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string(" exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += v.pass ? 0 : 1;
    fmt::print("{} {} {}:{} [{:.1f} s]\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, v.detail, secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
