#include "xscript/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "xscript/errors.hpp"

namespace xscript {

PointCloud PointCloud::uniform(int count, int dim, std::vector<double> points) {
  if (count <= 0 || dim <= 0)
    throw ConfigError("point cloud needs positive count and dim");
  if (points.size() != static_cast<std::size_t>(count) * dim)
    throw ShapeError("point data size does not match count x dim");
  PointCloud c;
  c.count = count;
  c.dim = dim;
  c.points = std::move(points);
  c.weights.assign(count, 1.0 / count);
  return c;
}

Matrix ground_distance(const PointCloud& p, const PointCloud& q) {
  if (p.dim != q.dim)
    throw ShapeError("ground_distance: dimension mismatch " + std::to_string(p.dim) +
                     " vs " + std::to_string(q.dim));
  Matrix d(p.count, q.count);
  for (int i = 0; i < p.count; ++i)
    for (int j = 0; j < q.count; ++j) {
      double acc = 0.0;
      for (int k = 0; k < p.dim; ++k) {
        const double diff = p.point(i, k) - q.point(j, k);
        acc += diff * diff;
      }
      d.at(i, j) = acc / p.dim;
    }
  return d;
}

namespace {

constexpr double kReducedCostTol = 1e-12;

// Balanced transportation simplex over an m x n cost matrix. Maintains a
// spanning-tree basis of exactly m + n - 1 cells.
class TransportSimplex {
 public:
  TransportSimplex(int m, int n, const std::vector<double>& cost,
                   std::vector<double> supply, std::vector<double> demand)
      : m_(m),
        n_(n),
        cost_(cost),
        supply_(std::move(supply)),
        demand_(std::move(demand)),
        flow_(static_cast<std::size_t>(m) * n, 0.0),
        basic_(static_cast<std::size_t>(m) * n, 0) {}

  void solve() {
    northwest_corner();
    const long max_dantzig = 200L * (static_cast<long>(m_) * n_ + 10);
    const long max_total = 4 * max_dantzig;
    long iter = 0;
    while (true) {
      compute_duals();
      const auto entering = pick_entering(iter >= max_dantzig);
      if (entering.first < 0) break;
      pivot(entering);
      if (++iter > max_total)
        throw NumericError("transport solver failed to converge");
    }
  }

  const std::vector<double>& flow() const { return flow_; }

  std::vector<std::pair<int, int>> basis() const {
    std::vector<std::pair<int, int>> b;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (basic_[idx(i, j)]) b.emplace_back(i, j);
    return b;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  void northwest_corner() {
    std::vector<double> s = supply_;
    std::vector<double> d = demand_;
    int i = 0, j = 0;
    // The staircase walk takes (m - 1) + (n - 1) steps and records one basic
    // cell per step plus the first, i.e. exactly m + n - 1 cells; exhausting
    // both a row and a column at once yields a zero-flow basic cell.
    while (true) {
      const double q = std::min(s[i], d[j]);
      flow_[idx(i, j)] = q;
      basic_[idx(i, j)] = 1;
      s[i] -= q;
      d[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (s[i] <= 0.0 && i < m_ - 1)
        ++i;
      else
        ++j;
    }
  }

  void compute_duals() {
    u_.assign(m_, std::numeric_limits<double>::quiet_NaN());
    v_.assign(n_, std::numeric_limits<double>::quiet_NaN());
    // Basis adjacency: traverse the spanning tree from row 0.
    std::vector<std::vector<int>> row_cells(m_), col_cells(n_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (basic_[idx(i, j)]) {
          row_cells[i].push_back(j);
          col_cells[j].push_back(i);
        }
    u_[0] = 0.0;
    std::vector<int> stack = {0};  // encoded: rows [0, m), cols m + j
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node < m_) {
        for (int j : row_cells[node])
          if (std::isnan(v_[j])) {
            v_[j] = cost_[idx(node, j)] - u_[node];
            stack.push_back(m_ + j);
          }
      } else {
        const int j = node - m_;
        for (int i : col_cells[j])
          if (std::isnan(u_[i])) {
            u_[i] = cost_[idx(i, j)] - v_[j];
            stack.push_back(i);
          }
      }
    }
    for (int i = 0; i < m_; ++i)
      if (std::isnan(u_[i])) throw NumericError("transport basis is disconnected");
    for (int j = 0; j < n_; ++j)
      if (std::isnan(v_[j])) throw NumericError("transport basis is disconnected");
  }

  // Most negative reduced cost, ties to the lowest (row, col); lexicographic
  // scan order makes the tie-break implicit. Bland mode takes the first
  // negative cell instead, which cannot cycle.
  std::pair<int, int> pick_entering(bool bland) const {
    std::pair<int, int> best{-1, -1};
    double best_r = -kReducedCostTol;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) {
        if (basic_[idx(i, j)]) continue;
        const double r = cost_[idx(i, j)] - u_[i] - v_[j];
        if (r < best_r) {
          best = {i, j};
          best_r = r;
          if (bland) return best;
        }
      }
    return best;
  }

  // The entering cell closes a unique cycle with the basis tree. Flows
  // alternate +/- theta around it starting with + at the entering cell.
  void pivot(std::pair<int, int> entering) {
    const auto [ei, ej] = entering;
    // Path from row node ei to col node ej through basic cells.
    std::vector<std::vector<int>> row_cells(m_), col_cells(n_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (basic_[idx(i, j)]) {
          row_cells[i].push_back(j);
          col_cells[j].push_back(i);
        }
    const int nodes = m_ + n_;
    std::vector<int> parent(nodes, -2);  // -2 unvisited, -1 root
    std::vector<int> queue = {ei};
    parent[ei] = -1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int node = queue[h];
      if (node == m_ + ej) break;
      if (node < m_) {
        for (int j : row_cells[node])
          if (parent[m_ + j] == -2) {
            parent[m_ + j] = node;
            queue.push_back(m_ + j);
          }
      } else {
        for (int i : col_cells[node - m_])
          if (parent[i] == -2) {
            parent[i] = node;
            queue.push_back(i);
          }
      }
    }
    if (parent[m_ + ej] == -2) throw NumericError("transport basis is disconnected");

    // Rebuild the node path, then convert to the cell cycle.
    std::vector<int> path;
    for (int node = m_ + ej; node != -1; node = parent[node]) path.push_back(node);
    std::reverse(path.begin(), path.end());  // ei ... ej
    std::vector<std::pair<int, int>> cycle = {{ei, ej}};  // + at entering
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const int a = path[k], b = path[k + 1];
      cycle.emplace_back(a < m_ ? a : b, a < m_ ? b - m_ : a - m_);
    }
    // cycle[0] is +, cycle[1] shares row ei -> -, alternating afterwards.
    double theta = std::numeric_limits<double>::infinity();
    std::pair<int, int> leaving{-1, -1};
    for (std::size_t k = 1; k < cycle.size(); k += 2) {
      const double f = flow_[idx(cycle[k].first, cycle[k].second)];
      if (f < theta || (f == theta && cycle[k] < leaving)) {
        theta = f;
        leaving = cycle[k];
      }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      auto& f = flow_[idx(cycle[k].first, cycle[k].second)];
      f += (k % 2 == 0) ? theta : -theta;
    }
    flow_[idx(leaving.first, leaving.second)] = 0.0;  // exact zero on exit
    basic_[idx(leaving.first, leaving.second)] = 0;
    basic_[idx(ei, ej)] = 1;
  }

  const int m_, n_;
  const std::vector<double>& cost_;
  std::vector<double> supply_, demand_;
  std::vector<double> flow_;
  std::vector<std::uint8_t> basic_;
  std::vector<double> u_, v_;
};

void check_instance(const Matrix& cost, const std::vector<double>& supply,
                    const std::vector<double>& demand) {
  if (cost.rows <= 0 || cost.cols <= 0)
    throw ConfigError("transport instance needs at least one source and sink");
  if (static_cast<int>(supply.size()) != cost.rows ||
      static_cast<int>(demand.size()) != cost.cols)
    throw ShapeError("supply/demand sizes do not match the cost matrix");
  for (double c : cost.v)
    if (!std::isfinite(c)) throw NumericError("non-finite transport cost");
  for (double w : supply)
    if (!(w > 0.0) || !std::isfinite(w))
      throw ConfigError("supplies must be positive and finite");
  for (double w : demand)
    if (!(w > 0.0) || !std::isfinite(w))
      throw ConfigError("demands must be positive and finite");
}

}  // namespace

TransportPlan solve_transport(const Matrix& cost, const std::vector<double>& supply,
                              const std::vector<double>& demand) {
  check_instance(cost, supply, demand);
  const int m = cost.rows, n = cost.cols;
  double total_supply = 0.0, total_demand = 0.0;
  for (double w : supply) total_supply += w;
  for (double w : demand) total_demand += w;

  // Surplus mass parks on a zero-cost dummy row/column, turning the
  // inequality-constrained problem into a balanced equality one.
  int am = m, an = n;
  if (total_supply > total_demand)
    an = n + 1;
  else if (total_demand > total_supply)
    am = m + 1;
  std::vector<double> acost(static_cast<std::size_t>(am) * an, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      acost[static_cast<std::size_t>(i) * an + j] = cost.at(i, j);
  std::vector<double> asupply = supply, ademand = demand;
  if (an > n) ademand.push_back(total_supply - total_demand);
  if (am > m) asupply.push_back(total_demand - total_supply);

  TransportSimplex simplex(am, an, acost, asupply, ademand);
  simplex.solve();

  TransportPlan plan;
  plan.aug_rows = am;
  plan.aug_cols = an;
  plan.basis = simplex.basis();
  plan.flow = Matrix(m, n);
  const auto& f = simplex.flow();
  double objective = 0.0, total = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double fij = f[static_cast<std::size_t>(i) * an + j];
      plan.flow.at(i, j) = fij;
      objective += fij * cost.at(i, j);
      total += fij;
    }
  plan.objective = objective;
  plan.total_flow = total;
  return plan;
}

void validate_plan(const Matrix& cost, const std::vector<double>& supply,
                   const std::vector<double>& demand, const TransportPlan& plan,
                   double tol) {
  if (plan.flow.rows != cost.rows || plan.flow.cols != cost.cols)
    throw ShapeError("plan shape does not match cost matrix");
  double total_supply = 0.0, total_demand = 0.0;
  for (double w : supply) total_supply += w;
  for (double w : demand) total_demand += w;
  double total = 0.0, objective = 0.0;
  for (int i = 0; i < cost.rows; ++i) {
    double row = 0.0;
    for (int j = 0; j < cost.cols; ++j) {
      const double f = plan.flow.at(i, j);
      if (f < -tol) throw NumericError("negative flow in transport plan");
      row += f;
      total += f;
      objective += f * cost.at(i, j);
    }
    if (row > supply[i] + tol) throw NumericError("row sum exceeds supply");
  }
  for (int j = 0; j < cost.cols; ++j) {
    double col = 0.0;
    for (int i = 0; i < cost.rows; ++i) col += plan.flow.at(i, j);
    if (col > demand[j] + tol) throw NumericError("column sum exceeds demand");
  }
  if (std::abs(total - std::min(total_supply, total_demand)) > tol)
    throw NumericError("plan does not move min(total supply, total demand)");
  if (std::abs(objective - plan.objective) > tol)
    throw NumericError("plan objective is inconsistent with its flows");
}

PlanDiagnostics diagnose_plan(const Matrix& cost, const std::vector<double>& supply,
                              const std::vector<double>& demand,
                              const TransportPlan& plan) {
  check_instance(cost, supply, demand);
  const int m = cost.rows, n = cost.cols;
  const int am = plan.aug_rows, an = plan.aug_cols;
  if (am < m || an < n || plan.basis.empty())
    throw ConfigError("plan carries no basis to diagnose");
  std::vector<double> acost(static_cast<std::size_t>(am) * an, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) acost[static_cast<std::size_t>(i) * an + j] = cost.at(i, j);

  double total_supply = 0.0, total_demand = 0.0;
  for (double w : supply) total_supply += w;
  for (double w : demand) total_demand += w;
  auto flow_at = [&](int i, int j) -> double {
    if (i < m && j < n) return plan.flow.at(i, j);
    if (i >= m) {  // dummy row absorbs unmet demand j
      double col = 0.0;
      for (int r = 0; r < m; ++r) col += plan.flow.at(r, j);
      return demand[j] - col;
    }
    double row = 0.0;  // dummy column absorbs unshipped supply i
    for (int c = 0; c < n; ++c) row += plan.flow.at(i, c);
    return supply[i] - row;
  };

  // Duals from the stored basis tree.
  std::vector<double> u(am, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> v(an, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<int>> row_cells(am), col_cells(an);
  std::vector<std::uint8_t> basic(static_cast<std::size_t>(am) * an, 0);
  for (auto [i, j] : plan.basis) {
    row_cells[i].push_back(j);
    col_cells[j].push_back(i);
    basic[static_cast<std::size_t>(i) * an + j] = 1;
  }
  u[0] = 0.0;
  std::vector<int> stack = {0};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (node < am) {
      for (int j : row_cells[node])
        if (std::isnan(v[j])) {
          v[j] = acost[static_cast<std::size_t>(node) * an + j] - u[node];
          stack.push_back(am + j);
        }
    } else {
      const int j = node - am;
      for (int i : col_cells[j])
        if (std::isnan(u[i])) {
          u[i] = acost[static_cast<std::size_t>(i) * an + j] - v[j];
          stack.push_back(i);
        }
    }
  }

  PlanDiagnostics d;
  d.basis_size = static_cast<int>(plan.basis.size());
  d.min_basic_flow = std::numeric_limits<double>::infinity();
  for (auto [i, j] : plan.basis)
    d.min_basic_flow = std::min(d.min_basic_flow, flow_at(i, j));
  d.min_nonbasic_reduced_cost = std::numeric_limits<double>::infinity();
  for (int i = 0; i < am; ++i)
    for (int j = 0; j < an; ++j) {
      if (basic[static_cast<std::size_t>(i) * an + j]) continue;
      if (std::isnan(u[i]) || std::isnan(v[j]))
        throw NumericError("plan basis is disconnected");
      const double r = acost[static_cast<std::size_t>(i) * an + j] - u[i] - v[j];
      d.min_nonbasic_reduced_cost = std::min(d.min_nonbasic_reduced_cost, r);
    }
  if (plan.basis.size() == static_cast<std::size_t>(am) * an)  // no nonbasic cell
    d.min_nonbasic_reduced_cost = std::numeric_limits<double>::infinity();
  return d;
}

bool plan_is_degenerate(const PlanDiagnostics& d, double flow_tol,
                        double reduced_cost_tol) {
  return d.min_basic_flow < flow_tol || d.min_nonbasic_reduced_cost < reduced_cost_tol;
}

double emd(const PointCloud& p, const PointCloud& q) { return emd_full(p, q).value; }

EmdResult emd_full(const PointCloud& p, const PointCloud& q) {
  EmdResult r;
  r.ground = ground_distance(p, q);
  r.plan = solve_transport(r.ground, p.weights, q.weights);
  r.value = r.plan.objective / r.plan.total_flow;
  return r;
}

void emd_point_gradients(const EmdResult& r, const PointCloud& p, const PointCloud& q,
                         std::vector<double>& grad_p, std::vector<double>& grad_q) {
  grad_p.assign(p.points.size(), 0.0);
  grad_q.assign(q.points.size(), 0.0);
  const double inv_total = 1.0 / r.plan.total_flow;
  const double inv_dim = 1.0 / p.dim;
  for (int i = 0; i < p.count; ++i)
    for (int j = 0; j < q.count; ++j) {
      const double f = r.plan.flow.at(i, j);
      if (f == 0.0) continue;
      for (int k = 0; k < p.dim; ++k) {
        const double diff = p.point(i, k) - q.point(j, k);
        const double g = inv_total * f * 2.0 * diff * inv_dim;
        grad_p[static_cast<std::size_t>(i) * p.dim + k] += g;
        grad_q[static_cast<std::size_t>(j) * q.dim + k] -= g;
      }
    }
}

Tensor emd_loss(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("emd_loss expects rank-2 point tensors");
  return emd_loss(a, b, std::vector<double>(a.dim(0), 1.0 / a.dim(0)),
                  std::vector<double>(b.dim(0), 1.0 / b.dim(0)));
}

Tensor emd_loss(const Tensor& a, const Tensor& b, std::vector<double> wa,
                std::vector<double> wb) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("emd_loss expects rank-2 point tensors");
  if (a.dim(1) != b.dim(1))
    throw ShapeError("emd_loss point dimensions disagree: " +
                     detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
  PointCloud p, q;
  p.count = a.dim(0);
  p.dim = a.dim(1);
  p.points = a.data();
  p.weights = std::move(wa);
  q.count = b.dim(0);
  q.dim = b.dim(1);
  q.points = b.data();
  q.weights = std::move(wb);
  if (p.weights.size() != static_cast<std::size_t>(p.count) ||
      q.weights.size() != static_cast<std::size_t>(q.count))
    throw ShapeError("emd_loss weights must match point counts");

  EmdResult r = emd_full(p, q);

  auto an = a.node();
  auto bn = b.node();
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = {1};
  node->data = {r.value};
  node->requires_grad = an->requires_grad || bn->requires_grad;
  if (node->requires_grad) {
    node->parents = {an, bn};
    // Envelope theorem: flows held fixed at the optimum.
    node->backprop = [an, bn, r = std::move(r), p = std::move(p),
                      q = std::move(q)](detail::TensorNode& self) {
      std::vector<double> gp, gq;
      emd_point_gradients(r, p, q, gp, gq);
      const double g = self.grad[0];
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < gp.size(); ++i) an->grad[i] += g * gp[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < gq.size(); ++i) bn->grad[i] += g * gq[i];
      }
    };
  }
  return Tensor::wrap(node);
}

std::string transport_debug_json(const Matrix& cost, const TransportPlan& plan) {
  nlohmann::json j;
  auto mat = [](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < m.cols; ++c) row.push_back(m.at(i, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["D"] = mat(cost);
  j["F"] = mat(plan.flow);
  j["objective"] = plan.objective;
  return j.dump(2);
}

}  // namespace xscript
