#pragma once

#include <string>

#include <json.hpp>

#include "wq/measures.hpp"

namespace wq {

/// Builds a measure from its JSON description:
///   {"type": "uniform_box", "bounds": [[a1, b1], ...], "mass": m}
///   {"type": "piecewise", "bounds": [...], "resolution": [n1, ...],
///    "values": [...]}  or  "linear": {"intercept": c, "slope": [...]}
///   {"type": "cantor"}
///   {"type": "discrete", "points": [[...], ...], "masses": [...]}
///   {"type": "mixture", "components": [{"weight": w, "measure": {...}}, ...]}
/// Throws std::invalid_argument with a readable message on malformed input.
Measure measure_from_json(const nlohmann::json& spec);

/// Reads and parses a measure file.
Measure load_measure(const std::string& path);

/// Inverse of measure_from_json (piecewise densities are written with values).
nlohmann::json measure_to_json(const Measure& m);

}  // namespace wq
