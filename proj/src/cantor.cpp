#include "wq/cantor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace wq::cantor {

namespace {

constexpr double kMinWidth = 1e-12;

bool is_integer(double p) { return p == std::floor(p) && p >= 1.0 && p <= 64.0; }

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Integral of |x - c|^p per unit mass over a dyadic copy of kappa with the
// given half-offset t = center - c and width w; valid when x - c keeps one
// sign on the copy, or p is even.
double moment_integral(double t, double w, int p, const std::vector<double>& z) {
  const double at = std::abs(t);
  double s = 0.0;
  for (int k = 0; k <= p; k += 2) s += binomial(p, k) * std::pow(at, p - k) * std::pow(w, k) * z[k];
  return s;
}

class Integrator {
 public:
  Integrator(std::span<const Point> centers, double p, double rel_tol) : p_(p), rel_tol_(rel_tol) {
    for (const auto& c : centers) cs_.push_back(c[0]);
    std::sort(cs_.begin(), cs_.end());
    cs_.erase(std::unique(cs_.begin(), cs_.end()), cs_.end());
    for (std::size_t k = 0; k + 1 < cs_.size(); ++k) bs_.push_back(0.5 * (cs_[k] + cs_[k + 1]));
    integer_ = is_integer(p);
    if (integer_) {
      order_ = static_cast<int>(p);
      z_ = central_moments(order_);
    }
  }

  double run() { return rec(0.0, 1.0, 1.0); }

 private:
  std::size_t cell(double x) const {
    return static_cast<std::size_t>(std::lower_bound(bs_.begin(), bs_.end(), x) - bs_.begin());
  }

  double rec(double a, double w, double mass) {
    const double b = a + w;
    const double mid = a + 0.5 * w;
    const std::size_t lo = cell(a);
    const std::size_t hi = cell(b);
    const bool leaf = w < kMinWidth;
    if (lo == hi) {
      const double c = cs_[lo];
      const bool outside = c <= a || c >= b;
      if (integer_ && (outside || order_ % 2 == 0)) return mass * moment_integral(mid - c, w, order_, z_);
      if (!integer_ && outside) {
        const double near = std::pow(std::min(std::abs(a - c), std::abs(b - c)), p_);
        const double far = std::pow(std::max(std::abs(a - c), std::abs(b - c)), p_);
        if (far - near <= rel_tol_ * far || leaf) return mass * 0.5 * (near + far);
      }
      if (leaf) return mass * std::pow(std::abs(mid - c), p_);
    } else if (leaf) {
      double best = std::abs(mid - cs_[lo]);
      for (std::size_t k = lo + 1; k <= hi; ++k) best = std::min(best, std::abs(mid - cs_[k]));
      return mass * std::pow(best, p_);
    }
    const double third = w / 3.0;
    return rec(a, third, 0.5 * mass) + rec(a + 2.0 * third, third, 0.5 * mass);
  }

  double p_;
  double rel_tol_;
  bool integer_ = false;
  int order_ = 0;
  std::vector<double> z_;
  std::vector<double> cs_;
  std::vector<double> bs_;
};

void bracket_rec(double a, double w, int depth, double mass, double p, double& lo, double& hi) {
  if (depth == 0) {
    const double b = a + w;
    const double dn = (a <= 0.5 && 0.5 <= b) ? 0.0 : std::min(std::abs(a - 0.5), std::abs(b - 0.5));
    const double df = std::max(std::abs(a - 0.5), std::abs(b - 0.5));
    lo += mass * std::pow(dn, p);
    hi += mass * std::pow(df, p);
    return;
  }
  const double third = w / 3.0;
  bracket_rec(a, third, depth - 1, 0.5 * mass, p, lo, hi);
  bracket_rec(a + 2.0 * third, third, depth - 1, 0.5 * mass, p, lo, hi);
}

}  // namespace

double similarity_dimension() { return std::log(2.0) / std::log(3.0); }

std::vector<double> central_moments(int max_order) {
  // Z = Y - 1/2 satisfies Z = Z'/3 + S/3 with S = +-1 equiprobable.
  std::vector<double> z(static_cast<std::size_t>(max_order) + 1, 0.0);
  z[0] = 1.0;
  for (int k = 2; k <= max_order; k += 2) {
    const double scale = std::pow(3.0, -k);
    double s = 0.0;
    for (int j = 0; j < k; j += 2) s += binomial(k, j) * z[j];
    z[k] = scale * s / (1.0 - scale);
  }
  return z;
}

double energy(std::span<const Point> centers, double p, double rel_tol) {
  if (centers.empty()) throw std::invalid_argument("energy needs at least one center");
  if (!(p >= 1.0)) throw std::invalid_argument("exponent p must be >= 1");
  return Integrator(centers, p, rel_tol).run();
}

Bracket c1_bracket(double p, int generation) {
  if (generation < 0) throw std::invalid_argument("generation must be >= 0");
  double lo = 0.0, hi = 0.0;
  if (generation == 0) {
    bracket_rec(0.0, 1.0, 0, 1.0, p, lo, hi);
  } else {
    // Symmetry about 1/2: twice the left half.
    bracket_rec(0.0, 1.0 / 3.0, generation - 1, 0.5, p, lo, hi);
    lo *= 2.0;
    hi *= 2.0;
  }
  return {std::pow(lo, 1.0 / p), std::pow(hi, 1.0 / p)};
}

double c1(double p, double tol) {
  if (!(p >= 1.0)) throw std::invalid_argument("exponent p must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  Bracket b = c1_bracket(p, 0);
  for (int n = 1; n <= 34 && !(b.width() < tol); ++n) b = c1_bracket(p, n);
  return b.mid();
}

double c1_value(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("exponent p must be >= 1");
  if (is_integer(p)) {
    // c1^p = E|Z|^p; for odd p use E[(1/3 - Z/3)^p] from one-branch symmetry.
    const int k = static_cast<int>(p);
    const auto z = central_moments(k);
    double v = 0.0;
    if (k % 2 == 0) {
      v = z[k];
    } else {
      for (int j = 0; j <= k; j += 2) v += binomial(k, j) * z[j];
      v *= std::pow(3.0, -k);
    }
    return std::pow(v, 1.0 / p);
  }
  static std::mutex mutex;
  static std::map<double, double> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  const double v = c1(p, 1e-12);
  cache.emplace(p, v);
  return v;
}

double exact_error(std::size_t n, double p) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  if (!(p >= 1.0)) throw std::invalid_argument("exponent p must be >= 1");
  const int g = std::bit_width(n) - 1;
  const double lower = std::ldexp(1.0, g);
  const double coarse = 2.0 * lower - static_cast<double>(n);  // generation-g terminal intervals
  const double split = static_cast<double>(n) - lower;         // generation-g intervals split in two
  const double s = coarse / lower * std::pow(3.0, -g * p) + split / lower * std::pow(3.0, -(g + 1) * p);
  return c1_value(p) * std::pow(s, 1.0 / p);
}

std::vector<Point> canonical_support(std::size_t n) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  const int g = std::bit_width(n) - 1;
  const std::size_t count = std::size_t{1} << g;
  const std::size_t split = n - count;
  const double w = std::pow(3.0, -g);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t idx = 0; idx < count; ++idx) {
    double a = 0.0;
    for (int bit = g - 1, level = 1; bit >= 0; --bit, ++level)
      if ((idx >> bit) & 1U) a += 2.0 * std::pow(3.0, -level);
    if (idx < split) {
      out.push_back(make_point(a + w / 6.0));
      out.push_back(make_point(a + 5.0 * w / 6.0));
    } else {
      out.push_back(make_point(a + 0.5 * w));
    }
  }
  return out;
}

ErrorTable scan(std::size_t n_max, double p) {
  if (n_max < 1) throw std::invalid_argument("N max must be >= 1");
  ErrorTable t;
  t.p = p;
  const double inv_s = 1.0 / similarity_dimension();
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double e = exact_error(n, p);
    t.rows.push_back({n, e, e * std::pow(static_cast<double>(n), inv_s)});
  }
  const int top = std::bit_width(n_max) - 1;
  const std::size_t from = top >= 2 ? std::size_t{1} << (top - 2) : 1;
  const std::size_t to = std::size_t{1} << top;
  t.sup_scaled = 0.0;
  t.inf_scaled = INFINITY;
  for (const auto& r : t.rows)
    if (r.n >= from && r.n <= to) {
      t.sup_scaled = std::max(t.sup_scaled, r.scaled);
      t.inf_scaled = std::min(t.inf_scaled, r.scaled);
    }
  t.ratio = t.sup_scaled / t.inf_scaled;
  if (n_max >= 3) {
    const std::size_t base = std::size_t{1} << (std::bit_width(n_max / 3) - 1);
    t.anchor_ratio = t.rows[3 * base - 1].scaled / t.rows[base - 1].scaled;
  }
  return t;
}

double oscillation_ratio(double p) {
  return std::pow(0.5 * (1.0 + std::pow(3.0, -p)), 1.0 / p) * std::pow(3.0, std::log(3.0) / std::log(2.0) - 1.0);
}

}  // namespace wq::cantor
