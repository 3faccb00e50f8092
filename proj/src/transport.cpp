#include "wq/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "wq/format.hpp"

namespace wq {

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> s(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) s[i] += at(i, j);
  return s;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> s(cols(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) s[j] += at(i, j);
  return s;
}

double TransportPlan::total_mass() const { return std::accumulate(entries.begin(), entries.end(), 0.0); }

PlanValidation validate_plan(const TransportPlan& plan, std::span<const double> source_masses,
                             std::span<const double> target_masses) {
  PlanValidation v;
  if (source_masses.size() != plan.rows() || target_masses.size() != plan.cols()) {
    v.valid = false;
    v.max_row_error = v.max_col_error = std::numeric_limits<double>::infinity();
    return v;
  }
  const auto rs = plan.row_sums();
  const auto cs = plan.col_sums();
  const double total = std::accumulate(source_masses.begin(), source_masses.end(), 0.0);
  for (std::size_t i = 0; i < rs.size(); ++i) v.max_row_error = std::max(v.max_row_error, std::abs(rs[i] - source_masses[i]));
  for (std::size_t j = 0; j < cs.size(); ++j) v.max_col_error = std::max(v.max_col_error, std::abs(cs[j] - target_masses[j]));
  v.min_entry = plan.entries.empty() ? 0.0 : *std::min_element(plan.entries.begin(), plan.entries.end());
  const double tol = 1e-9 * total;
  v.valid = v.max_row_error <= tol && v.max_col_error <= tol && v.min_entry >= 0.0;
  return v;
}

double plan_cost(const TransportPlan& plan, double p) {
  double c = 0.0;
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      const double m = plan.at(i, j);
      if (m != 0.0) c += m * distance_pow(plan.sources[i], plan.targets[j], p);
    }
  return c;
}

double linf_length(const TransportPlan& plan) {
  const double cutoff = 1e-12 * plan.total_mass();
  double len = 0.0;
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j)
      if (plan.at(i, j) > cutoff) len = std::max(len, distance(plan.sources[i], plan.targets[j]));
  return len;
}

// ---------------------------------------------------------------------------
// Transportation simplex.
//
// Nodes 0..m-1 are sources, m..m+n-1 are sinks. The basis is a spanning tree
// with m+n-1 arcs; after each pivot the tree is re-rooted at node 0 and the
// potentials and flows are recomputed from scratch, which keeps round-off
// from accumulating across pivots. Supplies are perturbed (a_i += eps,
// b_last += m*eps) so every basis is nondegenerate; the final flows are
// recomputed on the optimal tree with the unperturbed supplies.

namespace {

class TransportationSimplex {
 public:
  TransportationSimplex(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
      : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
        cost_(std::move(cost)) {}

  std::size_t solve() {
    const std::size_t nodes = m_ + n_;
    const double total = std::accumulate(supply_.begin(), supply_.end(), 0.0);
    const double eps = 1e-11 * total / static_cast<double>(m_ + n_);
    perturbed_supply_ = supply_;
    perturbed_demand_ = demand_;
    for (double& a : perturbed_supply_) a += eps;
    perturbed_demand_.back() += static_cast<double>(m_) * eps;

    initial_basis();
    parent_.resize(nodes);
    parent_arc_.resize(nodes);
    depth_.resize(nodes);
    potential_.resize(nodes);
    order_.reserve(nodes);
    flow_.assign(arcs_.size(), 0.0);
    rebuild(perturbed_supply_, perturbed_demand_);

    double max_cost = 0.0;
    for (double c : cost_) max_cost = std::max(max_cost, c);
    tolerance_ = 1e-13 * std::max(max_cost, 1e-300);

    const std::size_t arc_count = m_ * n_;
    const std::size_t block = std::max<std::size_t>(static_cast<std::size_t>(std::sqrt(double(arc_count))), 16);
    const std::size_t max_pivots = 200 * (m_ + n_) * (m_ + n_) + 1000;
    std::size_t next = 0;
    std::size_t pivots = 0;
    while (true) {
      // Block search: scan `block` arcs at a time, take the most negative
      // reduced cost of the first block that has one.
      std::size_t best = arc_count;
      double best_rc = -tolerance_;
      std::size_t scanned = 0;
      while (scanned < arc_count) {
        const std::size_t len = std::min(block, arc_count - scanned);
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t a = next;
          next = next + 1 == arc_count ? 0 : next + 1;
          const std::size_t i = a / n_;
          const std::size_t j = a % n_;
          const double rc = cost_[a] - potential_[i] - potential_[m_ + j];
          if (rc < best_rc) {
            best_rc = rc;
            best = a;
          }
        }
        scanned += len;
        if (best != arc_count) break;
      }
      if (best == arc_count) break;
      pivot(best / n_, best % n_);
      if (++pivots > max_pivots) throw std::runtime_error("transportation simplex exceeded its pivot budget");
    }
    rebuild(supply_, demand_);
    return pivots;
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& arcs() const { return arcs_; }
  const std::vector<double>& flows() const { return flow_; }

  double dual_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        worst = std::max(worst, potential_[i] + potential_[m_ + j] - cost_[i * n_ + j]);
    return worst;
  }

 private:
  void initial_basis() {
    // North-west corner rule on the perturbed supplies.
    std::vector<double> a = perturbed_supply_;
    std::vector<double> b = perturbed_demand_;
    std::size_t i = 0, j = 0;
    adjacency_.assign(m_ + n_, {});
    while (true) {
      const double x = std::min(a[i], b[j]);
      a[i] -= x;
      b[j] -= x;
      add_arc(i, j);
      if (i + 1 == m_ && j + 1 == n_) break;
      if (i + 1 == m_)
        ++j;
      else if (j + 1 == n_)
        ++i;
      else if (a[i] <= b[j])
        ++i;
      else
        ++j;
    }
  }

  void add_arc(std::size_t i, std::size_t j) {
    const std::size_t id = arcs_.size();
    arcs_.emplace_back(i, j);
    adjacency_[i].push_back(id);
    adjacency_[m_ + j].push_back(id);
  }

  std::size_t other(std::size_t arc, std::size_t node) const {
    const auto [i, j] = arcs_[arc];
    return node == i ? m_ + j : i;
  }

  // Root the tree at node 0; recompute parents, depths, potentials and the
  // flows implied by the given supplies.
  void rebuild(const std::vector<double>& supply, const std::vector<double>& demand) {
    const std::size_t nodes = m_ + n_;
    order_.clear();
    std::fill(parent_.begin(), parent_.end(), nodes);
    parent_[0] = 0;
    parent_arc_[0] = arcs_.size();
    depth_[0] = 0;
    potential_[0] = 0.0;
    order_.push_back(0);
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const std::size_t u = order_[head];
      for (std::size_t arc : adjacency_[u]) {
        const std::size_t v = other(arc, u);
        if (v == parent_[u] && arc == parent_arc_[u]) continue;
        parent_[v] = u;
        parent_arc_[v] = arc;
        depth_[v] = depth_[u] + 1;
        const double c = cost_[arcs_[arc].first * n_ + arcs_[arc].second];
        potential_[v] = c - potential_[u];
        order_.push_back(v);
      }
    }
    if (order_.size() != nodes) throw std::logic_error("transportation basis is not a spanning tree");

    std::vector<double> net(nodes);
    for (std::size_t i = 0; i < m_; ++i) net[i] = supply[i];
    for (std::size_t j = 0; j < n_; ++j) net[m_ + j] = -demand[j];
    for (std::size_t k = nodes; k-- > 1;) {
      const std::size_t v = order_[k];
      const std::size_t arc = parent_arc_[v];
      // Source below a sink pushes its subtree surplus up; a sink below a
      // source receives its subtree deficit.
      flow_[arc] = v < m_ ? net[v] : -net[v];
      net[parent_[v]] += net[v];
    }
  }

  void pivot(std::size_t si, std::size_t tj) {
    // Cycle: +theta on (si, tj), then alternate along the tree path tj -> si.
    std::size_t u = si;
    std::size_t v = m_ + tj;
    std::vector<std::size_t> from_source, from_sink;
    while (u != v) {
      if (depth_[u] >= depth_[v]) {
        from_source.push_back(u);
        u = parent_[u];
      } else {
        from_sink.push_back(v);
        v = parent_[v];
      }
    }
    // Walking from the sink up to the apex and then down to the source, an
    // arc is traversed backwards (flow decreases) when we step from a sink to
    // a source.
    std::size_t leaving = arcs_.size();
    double theta = std::numeric_limits<double>::infinity();
    auto consider = [&](std::size_t child, bool decreasing) {
      if (!decreasing) return;
      const std::size_t arc = parent_arc_[child];
      if (flow_[arc] < theta) {
        theta = flow_[arc];
        leaving = arc;
      }
    };
    // Sink side: step child -> parent; decreasing when child is a sink.
    for (std::size_t child : from_sink) consider(child, child >= m_);
    // Source side is walked apex -> source, i.e. parent -> child;
    // decreasing when the parent is a sink, i.e. the child is a source.
    for (std::size_t k = from_source.size(); k-- > 0;) consider(from_source[k], from_source[k] < m_);
    if (leaving == arcs_.size()) throw std::logic_error("unbounded transportation pivot");

    // Swap the leaving arc out of the adjacency lists, reuse its slot.
    auto drop = [&](std::size_t node, std::size_t arc) {
      auto& adj = adjacency_[node];
      adj.erase(std::find(adj.begin(), adj.end(), arc));
    };
    drop(arcs_[leaving].first, leaving);
    drop(m_ + arcs_[leaving].second, leaving);
    arcs_[leaving] = {si, tj};
    adjacency_[si].push_back(leaving);
    adjacency_[m_ + tj].push_back(leaving);
    rebuild(perturbed_supply_, perturbed_demand_);
  }

  std::size_t m_, n_;
  std::vector<double> supply_, demand_, cost_;
  std::vector<double> perturbed_supply_, perturbed_demand_;
  std::vector<std::pair<std::size_t, std::size_t>> arcs_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> flow_;
  std::vector<std::size_t> parent_, parent_arc_, depth_, order_;
  std::vector<double> potential_;
  double tolerance_ = 0.0;
};

}  // namespace

OtSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("exponent p must be >= 1");
  if (mu.dim() != nu.dim()) throw std::invalid_argument("measures differ in dimension");
  const double ma = mu.total_mass();
  const double mb = nu.total_mass();
  if (std::abs(ma - mb) > 1e-9 * ma) throw std::invalid_argument("measures must have equal total mass");
  if (mu.size() > kMaxExactSupport || nu.size() > kMaxExactSupport)
    throw CapacityError("exact transport supports at most 2000 atoms per measure");

  const std::size_t m = mu.size();
  const std::size_t n = nu.size();
  std::vector<double> cost(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = distance_pow(mu.points()[i], nu.points()[j], p);

  // Absorb the admissible mass mismatch into the targets.
  std::vector<double> demand = nu.masses();
  for (double& b : demand) b *= ma / mb;

  TransportationSimplex simplex(mu.masses(), demand, cost);
  OtSolution sol;
  sol.pivots = simplex.solve();
  sol.plan.dim = mu.dim();
  sol.plan.sources = mu.points();
  sol.plan.targets = nu.points();
  sol.plan.entries.assign(m * n, 0.0);
  for (std::size_t a = 0; a < simplex.arcs().size(); ++a) {
    const auto [i, j] = simplex.arcs()[a];
    sol.plan.at(i, j) = std::max(0.0, simplex.flows()[a]);
  }
  sol.cost = plan_cost(sol.plan, p);
  sol.wp = std::pow(sol.cost, 1.0 / p);
  sol.dual_violation = simplex.dual_violation();
  return sol;
}

RowRestriction restrict_rows(const TransportPlan& plan, std::span<const double> row_masses) {
  if (row_masses.size() != plan.rows()) throw std::invalid_argument("row mass count does not match plan rows");
  const auto rs = plan.row_sums();
  RowRestriction out;
  out.plan = plan;
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    const double target = row_masses[i];
    if (target < 0.0) throw std::invalid_argument("restricted masses must be nonnegative");
    if (target > rs[i] * (1.0 + 1e-12) + 1e-300) throw std::invalid_argument("restricted mass exceeds the source marginal");
    const double scale = rs[i] > 0.0 ? std::min(1.0, target / rs[i]) : 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) out.plan.at(i, j) *= scale;
  }
  out.target_masses = out.plan.col_sums();
  return out;
}

TransportPlan sum_plans(const TransportPlan& a, const TransportPlan& b) {
  if (a.rows() == 0 || a.cols() == 0) return b;
  if (b.rows() == 0 || b.cols() == 0) return a;
  if (a.dim != b.dim) throw std::invalid_argument("plans differ in ambient dimension");
  TransportPlan out;
  out.dim = a.dim;
  std::map<Point, std::size_t> src_index, dst_index;
  auto intern = [](std::map<Point, std::size_t>& index, std::vector<Point>& pts, const Point& x) {
    auto [it, inserted] = index.emplace(x, pts.size());
    if (inserted) pts.push_back(x);
    return it->second;
  };
  for (const auto* plan : {&a, &b}) {
    for (const auto& x : plan->sources) intern(src_index, out.sources, x);
    for (const auto& y : plan->targets) intern(dst_index, out.targets, y);
  }
  out.entries.assign(out.sources.size() * out.targets.size(), 0.0);
  for (const auto* plan : {&a, &b})
    for (std::size_t i = 0; i < plan->rows(); ++i)
      for (std::size_t j = 0; j < plan->cols(); ++j)
        out.at(src_index[plan->sources[i]], dst_index[plan->targets[j]]) += plan->at(i, j);
  return out;
}

DiscreteMeasure measure_from_masses(int dim, std::span<const Point> points, std::span<const double> masses) {
  std::vector<Point> pts;
  std::vector<double> ms;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (masses[i] > 0.0) {
      pts.push_back(points[i]);
      ms.push_back(masses[i]);
    }
  return DiscreteMeasure(dim, std::move(pts), std::move(ms));
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << "i,j,mass\n";
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j)
      if (plan.at(i, j) != 0.0) out << i << ',' << j << ',' << format_real(plan.at(i, j)) << '\n';
}

}  // namespace wq
