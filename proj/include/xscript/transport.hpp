#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xscript/tensor.hpp"

namespace xscript {

// Weighted point set in R^dim; points are row-major [count x dim].
struct PointCloud {
  int count = 0;
  int dim = 0;
  std::vector<double> points;
  std::vector<double> weights;

  static PointCloud uniform(int count, int dim, std::vector<double> points);
  double point(int i, int k) const { return points[static_cast<std::size_t>(i) * dim + k]; }
};

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
};

// Pairwise ground distance d(x,y) = mean_k (p[x,k] - q[y,k])^2.
Matrix ground_distance(const PointCloud& p, const PointCloud& q);

struct TransportPlan {
  Matrix flow;              // [m x n], real cells only
  double total_flow = 0.0;  // min(sum supply, sum demand)
  double objective = 0.0;   // sum flow * cost over real cells
  // Final basis of the balanced solve. Indices may address the dummy
  // row/column appended when supplies and demands differ.
  std::vector<std::pair<int, int>> basis;
  int aug_rows = 0;
  int aug_cols = 0;
};

// Exact minimizer of sum_{x,y} f_xy * cost_xy subject to
//   f >= 0, row sums <= supply, col sums <= demand,
//   total flow = min(sum supply, sum demand).
// Transportation simplex; entering/leaving ties break on lowest (row, col).
TransportPlan solve_transport(const Matrix& cost, const std::vector<double>& supply,
                              const std::vector<double>& demand);

// Throws NumericError if the plan violates the constraints or its stored
// objective beyond `tol`.
void validate_plan(const Matrix& cost, const std::vector<double>& supply,
                   const std::vector<double>& demand, const TransportPlan& plan,
                   double tol = 1e-9);

struct PlanDiagnostics {
  double min_basic_flow = 0.0;          // smallest flow on a basic cell
  double min_nonbasic_reduced_cost = 0.0;  // smallest reduced cost off the basis
  int basis_size = 0;
};

// Recomputes duals from the plan's basis. Near-zero values in either field
// signal a degenerate or non-unique optimum (envelope gradients unreliable).
PlanDiagnostics diagnose_plan(const Matrix& cost, const std::vector<double>& supply,
                              const std::vector<double>& demand,
                              const TransportPlan& plan);
bool plan_is_degenerate(const PlanDiagnostics& d, double flow_tol = 1e-7,
                        double reduced_cost_tol = 1e-7);

struct EmdResult {
  double value = 0.0;  // objective / total_flow
  TransportPlan plan;
  Matrix ground;
};

// Earth mover's distance between weighted clouds (cost = ground_distance).
double emd(const PointCloud& p, const PointCloud& q);
EmdResult emd_full(const PointCloud& p, const PointCloud& q);

// Envelope-theorem gradients of emd() w.r.t. point coordinates, with the
// optimal flow held fixed. grad_p/grad_q are resized to match the clouds.
void emd_point_gradients(const EmdResult& r, const PointCloud& p, const PointCloud& q,
                         std::vector<double>& grad_p, std::vector<double>& grad_q);

// Differentiable EMD over point tensors [m x d] and [n x d]. Weights default
// to uniform 1/m and 1/n. Backward applies the envelope gradients.
Tensor emd_loss(const Tensor& a, const Tensor& b);
Tensor emd_loss(const Tensor& a, const Tensor& b, std::vector<double> wa,
                std::vector<double> wb);

// JSON debug dump {D, F, objective} for solver cross-checks.
std::string transport_debug_json(const Matrix& cost, const TransportPlan& plan);

}  // namespace xscript
