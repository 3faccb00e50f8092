#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace wq {

inline constexpr int kMaxDim = 3;

// Coordinates beyond the ambient dimension are kept at zero, so distances
// can always be computed over all kMaxDim slots.
using Point = std::array<double, kMaxDim>;

inline Point make_point(double x, double y = 0.0, double z = 0.0) { return {x, y, z}; }

inline double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (int k = 0; k < kMaxDim; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

inline double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

// |a-b|^p without a pow() call for the common exponents.
inline double cost_from_squared(double d2, double p) {
  if (p == 2.0) return d2;
  if (p == 1.0) return std::sqrt(d2);
  if (p == 4.0) return d2 * d2;
  return std::pow(d2, 0.5 * p);
}

inline double distance_pow(const Point& a, const Point& b, double p) {
  return cost_from_squared(squared_distance(a, b), p);
}

// Closed axis-aligned box in the first `dim` coordinates.
struct Box {
  int dim = 1;
  Point lo{};
  Point hi{};

  bool contains(const Point& x) const {
    for (int k = 0; k < dim; ++k)
      if (x[k] < lo[k] || x[k] > hi[k]) return false;
    return true;
  }
  double volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= (hi[k] - lo[k]);
    return v;
  }
};

inline Box unit_box(int dim) {
  Box b;
  b.dim = dim;
  for (int k = 0; k < dim; ++k) b.hi[k] = 1.0;
  return b;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Thrown when an input exceeds the sizes a solver is built for.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace wq
