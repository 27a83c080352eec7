#pragma once

// Independent transportation-LP oracle for small instances. Enumerates every
// spanning tree of the bipartite source/sink graph (each tree is a basic
// solution of the balanced problem), solves its flows by leaf elimination,
// and returns the cheapest feasible one. No simplex machinery involved.

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "xscript/transport.hpp"

namespace testsupport {

struct OracleSolution {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> flow;  // m x n of the original (unaugmented) problem
  bool feasible = false;
};

namespace detail {

// Works on the augmented (balanced) problem: m x n includes any dummy.
struct TreeEnumerator {
  int m = 0, n = 0;
  std::vector<double> cost;
  std::vector<double> supply, demand;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> parent;  // union-find over m + n nodes
  OracleSolution best;

  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }

  // Flows of a spanning tree by repeatedly resolving degree-1 nodes.
  void evaluate() {
    const int nodes = m + n;
    std::vector<std::vector<int>> incident(nodes);
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
      incident[edges[e].first].push_back(e);
      incident[m + edges[e].second].push_back(e);
    }
    std::vector<double> rem(nodes);
    for (int i = 0; i < m; ++i) rem[i] = supply[i];
    for (int j = 0; j < n; ++j) rem[m + j] = demand[j];
    std::vector<int> degree(nodes);
    std::vector<char> edge_done(edges.size(), 0);
    std::vector<int> leaves;
    for (int v = 0; v < nodes; ++v) {
      degree[v] = static_cast<int>(incident[v].size());
      if (degree[v] == 1) leaves.push_back(v);
    }
    std::vector<double> flow(edges.size(), 0.0);
    std::size_t solved = 0;
    while (!leaves.empty()) {
      const int v = leaves.back();
      leaves.pop_back();
      int eidx = -1;
      for (int e : incident[v])
        if (!edge_done[e]) eidx = e;
      if (eidx < 0) continue;  // last node of the tree, nothing left
      const auto [r, c] = edges[eidx];
      const int other = (v == r) ? m + c : r;
      flow[eidx] = rem[v];
      if (flow[eidx] < -1e-12) return;  // infeasible tree
      rem[v] = 0.0;
      rem[other] -= flow[eidx];
      edge_done[eidx] = 1;
      ++solved;
      if (--degree[other] == 1) leaves.push_back(other);
      degree[v] = 0;
    }
    if (solved != edges.size()) return;
    double obj = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (flow[e] < -1e-12) return;
      obj += flow[e] * cost[static_cast<std::size_t>(edges[e].first) * n + edges[e].second];
    }
    if (obj < best.objective) {
      best.objective = obj;
      best.feasible = true;
      best.flow.assign(static_cast<std::size_t>(m) * n, 0.0);
      for (std::size_t e = 0; e < edges.size(); ++e)
        best.flow[static_cast<std::size_t>(edges[e].first) * n + edges[e].second] =
            std::max(flow[e], 0.0);
    }
  }

  // Enumerate acyclic cell subsets of size m + n - 1 in lexicographic order.
  void recurse(int next_cell, int chosen) {
    const int target = m + n - 1;
    const int total = m * n;
    if (chosen == target) {
      evaluate();
      return;
    }
    if (total - next_cell < target - chosen) return;
    for (int cell = next_cell; cell < total; ++cell) {
      const int r = cell / n, c = cell % n;
      const int fr = find(r), fc = find(m + c);
      if (fr == fc) continue;  // closes a cycle
      std::vector<int> saved_parent = parent;
      parent[fr] = fc;
      edges.emplace_back(r, c);
      recurse(cell + 1, chosen + 1);
      edges.pop_back();
      parent = std::move(saved_parent);
    }
  }
};

}  // namespace detail

// Solves the inequality-form problem (row sums <= supply, col sums <= demand,
// total = min mass) by augmenting with a zero-cost dummy and enumerating.
inline OracleSolution lp_oracle_solve(const xscript::Matrix& cost,
                                      const std::vector<double>& supply,
                                      const std::vector<double>& demand) {
  const int m = cost.rows, n = cost.cols;
  double ts = 0.0, td = 0.0;
  for (double w : supply) ts += w;
  for (double w : demand) td += w;
  int am = m, an = n;
  if (ts > td) an = n + 1;
  if (td > ts) am = m + 1;

  detail::TreeEnumerator runner;
  runner.m = am;
  runner.n = an;
  runner.cost.assign(static_cast<std::size_t>(am) * an, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      runner.cost[static_cast<std::size_t>(i) * an + j] = cost.at(i, j);
  runner.supply = supply;
  runner.demand = demand;
  if (an > n) runner.demand.push_back(ts - td);
  if (am > m) runner.supply.push_back(td - ts);
  runner.parent.resize(am + an);
  for (int i = 0; i < am + an; ++i) runner.parent[i] = i;
  runner.recurse(0, 0);

  OracleSolution out;
  out.objective = runner.best.objective;
  out.feasible = runner.best.feasible;
  if (runner.best.feasible) {
    out.flow.assign(static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        out.flow[static_cast<std::size_t>(i) * n + j] =
            runner.best.flow[static_cast<std::size_t>(i) * an + j];
  }
  return out;
}

}  // namespace testsupport
