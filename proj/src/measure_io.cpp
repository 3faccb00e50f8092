#include "wq/measure_io.hpp"

#include <fstream>
#include <stdexcept>
#include <string_view>

namespace wq {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("measure spec: " + what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) fail(std::string("missing field '") + name + "'");
  return j.at(name);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + " must be a number");
  return j.get<double>();
}

Point point(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) fail("point of dimension " + std::to_string(dim) + " expected");
  Point x{};
  for (int k = 0; k < dim; ++k) x[k] = number(j[k], "coordinate");
  return x;
}

Box bounds(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim))
    fail("bounds must list 1 to 3 [lo, hi] pairs");
  Box b;
  b.dim = static_cast<int>(j.size());
  for (int k = 0; k < b.dim; ++k) {
    const auto& pair = j[k];
    if (!pair.is_array() || pair.size() != 2) fail("each bound must be [lo, hi]");
    b.lo[k] = number(pair[0], "bound");
    b.hi[k] = number(pair[1], "bound");
    if (!(b.lo[k] < b.hi[k])) fail("bounds need lo < hi");
  }
  return b;
}

BaseMeasure base_from_json(const json& j) {
  const json& type = field(j, "type");
  if (!type.is_string()) fail("'type' must be a string");
  const std::string t = type.get<std::string>();
  if (t == "cantor") return CantorMeasure{};
  if (t == "uniform_box") {
    const double mass = j.contains("mass") ? number(j.at("mass"), "mass") : 1.0;
    return GriddedDensity::uniform(bounds(field(j, "bounds")), mass);
  }
  if (t == "piecewise") {
    const Box b = bounds(field(j, "bounds"));
    const json& res = field(j, "resolution");
    if (!res.is_array() || static_cast<int>(res.size()) != b.dim) fail("resolution must have one entry per axis");
    std::vector<int> resolution;
    for (const auto& r : res) {
      if (!r.is_number_integer() || r.get<long>() < 1) fail("resolution entries must be positive integers");
      resolution.push_back(r.get<int>());
    }
    if (j.contains("linear")) {
      const json& lin = j.at("linear");
      const double intercept = number(field(lin, "intercept"), "intercept");
      const Point slope = point(field(lin, "slope"), b.dim);
      return GriddedDensity::linear(b, resolution, intercept, slope);
    }
    const json& vals = field(j, "values");
    if (!vals.is_array()) fail("'values' must be an array");
    std::vector<double> values;
    for (const auto& v : vals) values.push_back(number(v, "density value"));
    return GriddedDensity(b, resolution, values);
  }
  if (t == "discrete") {
    const json& pts = field(j, "points");
    const json& ms = field(j, "masses");
    if (!pts.is_array() || pts.empty() || !ms.is_array()) fail("'points' and 'masses' must be nonempty arrays");
    const int dim = pts[0].is_array() ? static_cast<int>(pts[0].size()) : 0;
    if (dim < 1 || dim > kMaxDim) fail("points must have 1 to 3 coordinates");
    std::vector<Point> points;
    std::vector<double> masses;
    for (const auto& p : pts) points.push_back(point(p, dim));
    for (const auto& m : ms) masses.push_back(number(m, "mass"));
    return DiscreteMeasure(dim, points, masses);
  }
  if (t == "mixture") fail("mixture is handled separately");
  fail("unknown type '" + t + "'");
}

void collect(const json& j, double weight, std::vector<MixtureComponent>& out) {
  if (field(j, "type") == "mixture") {
    const json& comps = field(j, "components");
    if (!comps.is_array() || comps.empty()) fail("'components' must be a nonempty array");
    for (const auto& c : comps) {
      const double w = number(field(c, "weight"), "weight");
      collect(field(c, "measure"), weight * w, out);
    }
    return;
  }
  out.push_back({weight, base_from_json(j)});
}

json box_json(const Box& b) {
  json out = json::array();
  for (int k = 0; k < b.dim; ++k) out.push_back({b.lo[k], b.hi[k]});
  return out;
}

json point_json(const Point& x, int dim) {
  json out = json::array();
  for (int k = 0; k < dim; ++k) out.push_back(x[k]);
  return out;
}

json base_to_json(const BaseMeasure& m) {
  return std::visit(overloaded{
                        [](const CantorMeasure&) { return json{{"type", "cantor"}}; },
                        [](const GriddedDensity& g) {
                          return json{{"type", "piecewise"},
                                      {"bounds", box_json(g.bounds())},
                                      {"resolution", g.resolution()},
                                      {"values", g.values()}};
                        },
                        [](const DiscreteMeasure& d) {
                          json pts = json::array();
                          for (const auto& x : d.points()) pts.push_back(point_json(x, d.dim()));
                          return json{{"type", "discrete"}, {"points", pts}, {"masses", d.masses()}};
                        },
                    },
                    m);
}

}  // namespace

Measure measure_from_json(const json& spec) {
  try {
    if (field(spec, "type") == "mixture") {
      std::vector<MixtureComponent> comps;
      collect(spec, 1.0, comps);
      return Mixture(std::move(comps));
    }
    return std::visit([](auto&& b) -> Measure { return std::move(b); }, base_from_json(spec));
  } catch (const json::exception& e) {
    fail(e.what());
  } catch (const std::invalid_argument& e) {
    // Constructor validation errors get the same prefix as parse errors.
    if (std::string_view(e.what()).starts_with("measure spec: ")) throw;
    fail(e.what());
  }
}

Measure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open measure file '" + path + "'");
  json spec;
  try {
    in >> spec;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("measure file '" + path + "': " + e.what());
  }
  return measure_from_json(spec);
}

json measure_to_json(const Measure& m) {
  return std::visit(overloaded{
                        [](const Mixture& mix) {
                          json comps = json::array();
                          for (const auto& c : mix.components())
                            comps.push_back({{"weight", c.weight}, {"measure", base_to_json(c.measure)}});
                          return json{{"type", "mixture"}, {"components", comps}};
                        },
                        [](const auto& b) { return base_to_json(BaseMeasure(b)); },
                    },
                    m);
}

}  // namespace wq
