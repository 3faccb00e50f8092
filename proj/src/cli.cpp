#include "wq/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wq/analysis.hpp"
#include "wq/cantor.hpp"
#include "wq/checks.hpp"
#include "wq/format.hpp"
#include "wq/measure_io.hpp"
#include "wq/quantizer.hpp"

namespace wq {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string measure;
  double p = 2.0;
  std::size_t n = 0;
  std::vector<std::size_t> n_list;
  std::size_t n_max = 0;
  int d = 1;
  std::size_t cells = 4;
  std::uint64_t seed = 0;
  std::size_t restarts = 4;
  std::size_t max_iters = 500;
  std::string quad = "auto";
  std::size_t quad_nodes = 0;
  std::string init = "split";
  unsigned jobs = 1;
  std::size_t trials = 200;
  bool inject_fault = false;
  bool exact = false;
  std::string out;
  std::string format;

  json to_json() const {
    json j{{"command", command}, {"seed", seed}};
    if (!measure.empty()) j["measure"] = measure;
    if (command != "check") j["p"] = p;
    if (command == "quantize" || command == "support-law" || command == "equidist") j["N"] = n;
    if (command == "rate-scan" || command == "theta") j["N_list"] = n_list;
    if (command == "cantor") j["N_max"] = n_max;
    if (command == "theta") j["d"] = d;
    if (command == "equidist" || command == "support-law") j["cells"] = cells;
    if (command == "rate-scan") j["exact"] = exact;
    if (command == "check") {
      j["trials"] = trials;
      j["inject_fault"] = inject_fault;
    } else if (command != "cantor" && !exact) {
      j["restarts"] = restarts;
      j["max_iters"] = max_iters;
      j["quad"] = {{"mode", quad}, {"nodes", quad_nodes}};
      j["init"] = init;
    }
    j["jobs"] = jobs;
    j["out"] = out;
    j["format"] = format;
    return j;
  }
};

InitMode parse_init(const std::string& s) {
  if (s == "split") return InitMode::Split;
  if (s == "spread") return InitMode::Spread;
  if (s == "samples") return InitMode::Samples;
  throw UsageError("unknown init mode '" + s + "'");
}

QuantizeOptions options_from(const RunConfig& c) {
  QuantizeOptions o;
  o.restarts = c.restarts;
  o.max_iters = c.max_iters;
  o.seed = c.seed;
  o.quad.mode = parse_quad_mode(c.quad);
  o.quad.nodes = c.quad_nodes;
  o.quad.seed = c.seed;
  o.init = parse_init(c.init);
  o.jobs = c.jobs;
  return o;
}

void require_n(std::size_t n) {
  if (n < 1) throw UsageError("N must be ≥ 1");
}

void require_list(const std::vector<std::size_t>& ns) {
  if (ns.empty()) throw UsageError("N list must not be empty");
  for (auto n : ns) require_n(n);
}

Measure measure_of(const RunConfig& c, const char* fallback = nullptr) {
  if (!c.measure.empty()) return load_measure(c.measure);
  if (fallback) return measure_from_json(json::parse(fallback));
  throw UsageError("--measure is required");
}

json point_json(const Point& x, int dim) {
  json a = json::array();
  for (int k = 0; k < dim; ++k) a.push_back(x[k]);
  return a;
}

json quad_json(const QuadratureSpec& q) {
  return {{"mode", to_string(q.mode)}, {"nodes", q.nodes}, {"seed", q.seed}};
}

json result_json(const QuantizerResult& r) {
  json pts = json::array();
  for (const auto& x : r.points) pts.push_back(point_json(x, r.dim));
  return {{"points", pts},         {"masses", r.masses},         {"energy", r.energy},
          {"wp", r.wp()},          {"p", r.p},                   {"N", r.points.size()},
          {"seed", r.seed},        {"quad", quad_json(r.quad)},  {"iterations", r.iterations},
          {"converged", r.converged}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Output document: JSON object or CSV text with a commented provenance header.
struct Output {
  json doc;
  std::string csv;
};

std::string csv_header(const RunConfig& c) {
  return std::string("# ") + kVersion + "\n# config: " + c.to_json().dump() + "\n";
}

json wrap(const RunConfig& c, json result) {
  return {{"version", kVersion}, {"config", c.to_json()}, {"result", std::move(result)}};
}

int cmd_quantize(const RunConfig& c, Output& o) {
  require_n(c.n);
  const Measure m = measure_of(c);
  const auto r = quantize(m, c.n, c.p, options_from(c));
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(c);
    s << "# energy " << format_real(r.energy) << " wp " << format_real(r.wp()) << " iterations " << r.iterations
      << " converged " << (r.converged ? "true" : "false") << "\n";
    static constexpr const char* kAxes[] = {"x", "y", "z"};
    s << "i";
    for (int k = 0; k < r.dim; ++k) s << ',' << kAxes[k];
    s << ",mass\n";
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      s << i;
      for (int k = 0; k < r.dim; ++k) s << ',' << format_real(r.points[i][k]);
      s << ',' << format_real(r.masses[i]) << '\n';
    }
    o.csv = s.str();
  } else {
    o.doc = wrap(c, result_json(r));
  }
  return r.converged ? kExitOk : kExitReported;
}

bool is_cantor(const Measure& m) { return std::holds_alternative<CantorMeasure>(m); }

int cmd_rate_scan(const RunConfig& c, Output& o) {
  require_list(c.n_list);
  if (c.n_list.size() < 3) throw UsageError("rate scan needs at least three N values");
  const Measure m = measure_of(c);
  RateScanReport rep;
  double s_dim = dimension(m);
  if (c.exact) {
    if (!is_cantor(m)) throw UsageError("--exact is available for the Cantor measure only");
    rep = cantor_rate_scan(c.p, c.n_list);
  } else {
    rep = rate_scan(m, c.p, c.n_list, options_from(c));
  }
  if (is_cantor(m)) s_dim = cantor::similarity_dimension();
  if (const auto* mix = std::get_if<Mixture>(&m)) {
    s_dim = 0.0;
    for (const auto& comp : mix->components()) {
      if (std::holds_alternative<CantorMeasure>(comp.measure)) s_dim = std::max(s_dim, cantor::similarity_dimension());
      if (std::holds_alternative<GriddedDensity>(comp.measure)) s_dim = std::max<double>(s_dim, dimension(comp.measure));
    }
  }
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"N", r.n}, {"Wp", r.value}, {"scaled", r.value * std::pow(r.n, 1.0 / s_dim)}, {"seed", r.seed}});
    o.doc = wrap(c, {{"rows", rows},
                     {"slope", rep.slope},
                     {"log_constant", rep.log_constant},
                     {"r_squared", rep.r_squared},
                     {"expected_slope", -1.0 / s_dim}});
  } else {
    std::ostringstream s;
    s << csv_header(c) << "# scaled = Wp * N^(1/s), s = " << format_real(s_dim) << "\nN,Wp,scaled,seed\n";
    for (const auto& r : rep.rows)
      s << r.n << ',' << format_real(r.value) << ',' << format_real(r.value * std::pow(r.n, 1.0 / s_dim)) << ','
        << r.seed << '\n';
    s << "slope," << format_real(rep.slope) << ",r_squared," << format_real(rep.r_squared) << '\n';
    o.csv = s.str();
  }
  return kExitOk;
}

int cmd_cantor(const RunConfig& c, Output& o) {
  if (c.n_max < 1) throw UsageError("N max must be ≥ 1");
  const auto t = cantor::scan(c.n_max, c.p);
  const double c1 = cantor::c1_value(c.p);
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back({{"N", r.n}, {"Wp", r.error}, {"scaled", r.scaled}});
    o.doc = wrap(c, {{"rows", rows},
                     {"c1", c1},
                     {"sup_scaled", t.sup_scaled},
                     {"inf_scaled", t.inf_scaled},
                     {"ratio", t.ratio},
                     {"anchor_ratio", t.anchor_ratio ? json(*t.anchor_ratio) : json(nullptr)},
                     {"predicted_ratio", cantor::oscillation_ratio(c.p)}});
  } else {
    std::ostringstream s;
    s << csv_header(c) << "# c1 " << format_real(c1) << " sup " << format_real(t.sup_scaled) << " inf "
      << format_real(t.inf_scaled) << " ratio " << format_real(t.ratio) << " anchor_ratio "
      << (t.anchor_ratio ? format_real(*t.anchor_ratio) : std::string("-")) << " predicted_ratio "
      << format_real(cantor::oscillation_ratio(c.p)) << "\nN,Wp,scaled\n";
    for (const auto& r : t.rows) s << r.n << ',' << format_real(r.error) << ',' << format_real(r.scaled) << '\n';
    o.csv = s.str();
  }
  return kExitOk;
}

int cmd_theta(const RunConfig& c, Output& o) {
  if (c.d < 1 || c.d > kMaxDim) throw UsageError("--d must be 1, 2 or 3");
  const std::vector<std::size_t>& ns = c.n_list;
  require_list(ns);
  const auto t = estimate_theta(c.d, c.p, ns, c.restarts, options_from(c));
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(c) << "# theta " << format_real(t.theta) << " stderr " << format_real(t.stderr_)
      << " reference " << (t.reference ? format_real(*t.reference) : "none") << " printed_constant "
      << (t.printed ? format_real(*t.printed) : "none") << " normalization_mismatch "
      << (t.printed_mismatch ? "true" : "false") << "\nN,theta\n";
    for (std::size_t k = 0; k < ns.size(); ++k) s << ns[k] << ',' << format_real(t.per_n[k]) << '\n';
    o.csv = s.str();
  } else {
    json rows = json::array();
    for (std::size_t k = 0; k < ns.size(); ++k) rows.push_back({{"N", ns[k]}, {"theta", t.per_n[k]}});
    o.doc = wrap(c, {{"theta", t.theta},
                     {"stderr", t.stderr_},
                     {"rows", rows},
                     {"reference", optional_json(t.reference)},
                     {"printed_constant", optional_json(t.printed)},
                     {"normalization_mismatch", t.printed_mismatch}});
  }
  return kExitOk;
}

json box_json(const Box& b) {
  json a = json::array();
  for (int k = 0; k < b.dim; ++k) a.push_back({b.lo[k], b.hi[k]});
  return a;
}

int cmd_support_law(const RunConfig& c, Output& o) {
  require_n(c.n);
  const Measure m = measure_of(c);
  const auto* g = std::get_if<GriddedDensity>(&m);
  if (!g) throw UsageError("support-law needs a density (uniform_box or piecewise) measure");
  QuantizerResult r = g->dim() == 1 ? quantize_1d_dp(m, c.n, c.p, std::max<std::size_t>(32 * c.n, g->cell_count()))
                                    : quantize(m, c.n, c.p, options_from(c));
  const auto rep = support_density_report(r, *g, c.p, c.cells);
  json hist = json::array();
  for (const auto& h : rep.histogram)
    hist.push_back({{"cell", box_json(h.cell)}, {"count", h.count}, {"observed", h.observed}, {"predicted", h.predicted}});
  json res{{"beta", rep.beta}, {"chi_square", rep.chi_square}, {"histogram", hist}, {"energy", r.energy}, {"wp", r.wp()}};
  if (rep.dim == 1) res["ks"] = rep.ks;
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(c) << "# beta " << format_real(rep.beta) << " chi_square " << format_real(rep.chi_square);
    if (rep.dim == 1) s << " ks " << format_real(rep.ks);
    s << "\ncell,count,observed,predicted\n";
    for (std::size_t k = 0; k < rep.histogram.size(); ++k)
      s << k << ',' << rep.histogram[k].count << ',' << format_real(rep.histogram[k].observed) << ','
        << format_real(rep.histogram[k].predicted) << '\n';
    o.csv = s.str();
  } else {
    o.doc = wrap(c, res);
  }
  return r.converged ? kExitOk : kExitReported;
}

int cmd_equidist(const RunConfig& c, Output& o) {
  require_n(c.n);
  if (c.cells < 1) throw UsageError("--cells must be ≥ 1");
  const Measure m = measure_of(c, R"({"type": "uniform_box", "bounds": [[0, 1], [0, 1]]})");
  const auto r = quantize(m, c.n, c.p, options_from(c));
  const auto rep = equidist_report(r, m, c.p, c.cells);
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(c) << "# mean " << format_real(rep.mean) << " cv " << format_real(rep.cv) << " spread "
      << format_real(rep.spread) << " predicted_limit "
      << (rep.predicted_limit ? format_real(*rep.predicted_limit) : "none") << " empty_cells "
      << rep.empty_cells.size() << "\ncell,points,mean_scaled_energy\n";
    for (std::size_t k = 0; k < rep.cells.size(); ++k)
      s << k << ',' << rep.cells[k].points << ',' << format_real(rep.cells[k].mean_scaled_energy) << '\n';
    o.csv = s.str();
  } else {
    json cells = json::array();
    for (const auto& cell : rep.cells)
      cells.push_back({{"cell", box_json(cell.cell)}, {"points", cell.points}, {"mean_scaled_energy", cell.mean_scaled_energy}});
    o.doc = wrap(c, {{"cells", cells},
                     {"empty_cells", rep.empty_cells},
                     {"mean", rep.mean},
                     {"cv", rep.cv},
                     {"spread", rep.spread},
                     {"predicted_limit", optional_json(rep.predicted_limit)},
                     {"energy", r.energy},
                     {"iterations", r.iterations},
                     {"converged", r.converged}});
  }
  return r.converged ? kExitOk : kExitReported;
}

int cmd_check(const RunConfig& c, Output& o) {
  if (c.trials < 1) throw UsageError("--trials must be ≥ 1");
  CheckOptions opts;
  opts.seed = c.seed;
  opts.trials = c.trials;
  opts.inject_fault = c.inject_fault;
  const auto rep = run_checks(opts);
  if (c.format == "csv") {
    std::ostringstream s;
    s << csv_header(c) << "property,trials,passed,worst,status\n";
    for (const auto& p : rep.properties)
      s << p.name << ',' << p.trials << ',' << p.passed << ',' << format_real(p.worst) << ','
        << (p.ok() ? "pass" : "FAIL") << '\n';
    o.csv = s.str();
  } else {
    json props = json::array();
    for (const auto& p : rep.properties)
      props.push_back(
          {{"name", p.name}, {"trials", p.trials}, {"passed", p.passed}, {"worst", p.worst}, {"ok", p.ok()}});
    o.doc = wrap(c, {{"properties", props}, {"all_passed", rep.all_passed()}});
  }
  return rep.all_passed() ? kExitOk : kExitReported;
}

unsigned default_jobs() {
  if (const char* env = std::getenv("WQ_DEFAULT_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  cfg.jobs = default_jobs();
  CLI::App app{"Optimal N-point quantization of measures under Wasserstein costs", "wq"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto common = [&](CLI::App* sub, bool with_measure) {
    if (with_measure) sub->add_option("--measure", cfg.measure, "Measure spec JSON file");
    sub->add_option("--seed", cfg.seed, "Run seed");
    sub->add_option("--jobs", cfg.jobs, "Worker threads (default WQ_DEFAULT_JOBS or 1)")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out, "Output file (default standard output)");
    sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };
  auto search = [&](CLI::App* sub) {
    sub->add_option("--p", cfg.p, "Cost exponent p >= 1");
    sub->add_option("--restarts", cfg.restarts, "Local-search restarts (seeds)");
    sub->add_option("--max-iters", cfg.max_iters, "Iteration cap per local search");
    sub->add_option("--quad", cfg.quad, "Quadrature: auto, exact, grid, mc")
        ->check(CLI::IsMember({"auto", "exact", "grid", "mc", "monte-carlo"}));
    sub->add_option("--quad-nodes", cfg.quad_nodes, "Grid resolution per axis or Monte Carlo sample count");
    sub->add_option("--init", cfg.init, "Initialization: split, spread, samples")
        ->check(CLI::IsMember({"split", "spread", "samples"}));
  };

  auto* q = app.add_subcommand("quantize", "Near-optimal N-point support of a measure");
  common(q, true);
  search(q);
  q->add_option("--n", cfg.n, "Number of points")->required();

  auto* rs = app.add_subcommand("rate-scan", "W_p over a list of N with a log-log rate fit");
  common(rs, true);
  search(rs);
  rs->add_option("--n-list", cfg.n_list, "Comma-separated N values")->delimiter(',');
  rs->add_flag("--exact", cfg.exact, "Closed-form errors (Cantor measure)");

  auto* ca = app.add_subcommand("cantor", "Closed-form Cantor errors and oscillation summary");
  common(ca, false);
  ca->add_option("--p", cfg.p, "Cost exponent p >= 1");
  ca->add_option("--n-max", cfg.n_max, "Largest N")->required();

  auto* th = app.add_subcommand("theta", "Estimate theta(d, p) on the unit cube");
  common(th, false);
  search(th);
  th->add_option("--d", cfg.d, "Dimension 1..3");
  th->add_option("--n-list", cfg.n_list, "Comma-separated N values")->delimiter(',');

  auto* sl = app.add_subcommand("support-law", "Support points against the rho^(d/(d+p)) law");
  common(sl, true);
  search(sl);
  sl->add_option("--n", cfg.n, "Number of points")->required();
  sl->add_option("--cells", cfg.cells, "Histogram cells per axis");

  auto* eq = app.add_subcommand("equidist", "Per-region average point energies");
  common(eq, true);
  search(eq);
  eq->add_option("--n", cfg.n, "Number of points")->required();
  eq->add_option("--cells", cfg.cells, "Partition cells per axis");

  auto* ck = app.add_subcommand("check", "Randomized property suites for transport inequalities");
  common(ck, false);
  ck->add_option("--trials", cfg.trials, "Instances per property");
  ck->add_flag("--inject-fault", cfg.inject_fault, "Corrupt solver plans (negative control)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  cfg.command = chosen->get_name();
  if (cfg.format.empty()) cfg.format = (cfg.command == "rate-scan" || cfg.command == "cantor") ? "csv" : "json";
  if (cfg.quad == "monte-carlo") cfg.quad = "mc";
  if (cfg.command == "theta" && cfg.n_list.empty()) cfg.n_list = {256};

  Output result;
  int code = kExitOk;
  try {
    if (cfg.command != "check" && cfg.command != "cantor" && !(cfg.p >= 1.0)) throw UsageError("--p must be >= 1");
    if (cfg.command == "cantor" && !(cfg.p >= 1.0)) throw UsageError("--p must be >= 1");
    if (cfg.command == "quantize") code = cmd_quantize(cfg, result);
    else if (cfg.command == "rate-scan") code = cmd_rate_scan(cfg, result);
    else if (cfg.command == "cantor") code = cmd_cantor(cfg, result);
    else if (cfg.command == "theta") code = cmd_theta(cfg, result);
    else if (cfg.command == "support-law") code = cmd_support_law(cfg, result);
    else if (cfg.command == "equidist") code = cmd_equidist(cfg, result);
    else code = cmd_check(cfg, result);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const std::string text = result.csv.empty() ? result.doc.dump(2) + "\n" : result.csv;
  if (cfg.out.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << cfg.out << "'\n";
      return kExitUsage;
    }
    f << text;
  }
  if (code == kExitReported) err << "warning: run did not converge or a check failed; report written\n";
  return code;
}

}  // namespace wq
