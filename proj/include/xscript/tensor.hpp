#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <vector>

namespace xscript {

using Shape = std::vector<int>;

namespace detail {

// One node of the reverse-mode differentiation graph. Interior nodes hold a
// backprop closure that scatters this node's grad into its parents' grads.
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first touched; conceptually zero
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;

  std::size_t size() const { return data.size(); }
  bool is_leaf() const { return parents.empty(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

std::size_t shape_size(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);
std::string shape_str(const Shape& s);

}  // namespace detail

// Dense 64-bit float tensor with value semantics over a shared graph node.
// Copying a Tensor aliases the same node (PyTorch-style handles).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor ones(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // Gaussian(0, stddev) fill; draws from `rng` in row-major order.
  static Tensor randn(Shape shape, double stddev, std::mt19937_64& rng,
                      bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  int dim(int axis) const;
  std::size_t size() const;
  bool requires_grad() const;

  const std::vector<double>& data() const;
  // Direct mutation of a leaf's values (optimizer updates). Mutating an
  // interior node invalidates any graph built from it; callers must not.
  std::vector<double>& mutable_data();

  // Gradient buffer; zeros if backward has not touched this node yet.
  std::vector<double> grad() const;
  bool grad_allocated() const;
  void zero_grad();

  double value() const;  // scalar tensors only
  double at(std::initializer_list<int> idx) const;

  // Deep copy detached from the graph (fresh leaf, no grad history).
  Tensor detached_copy(bool requires_grad = false) const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::TensorNode> node);

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// ---- Differentiable operations ----------------------------------------
// Every op validates shapes (ShapeError) and propagates requires_grad.

Tensor matmul(const Tensor& a, const Tensor& b);       // [m,k]x[k,n]
Tensor bmm(const Tensor& a, const Tensor& b);          // [B,m,k]x[B,k,n]
Tensor add(const Tensor& a, const Tensor& b);          // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);          // elementwise
Tensor scale(const Tensor& a, double s);
Tensor add_bias(const Tensor& x, const Tensor& bias);  // [..., d] + [d]
Tensor transpose(const Tensor& a);                     // rank 2
Tensor transpose_last2(const Tensor& a);               // rank 3
Tensor reshape(const Tensor& a, Shape shape);          // same element count
Tensor concat_last(const std::vector<Tensor>& parts);  // along last axis
Tensor mean_axis(const Tensor& a, int axis);
Tensor mean_all(const Tensor& a);   // -> [1]
Tensor sum_all(const Tensor& a);    // -> [1]

// Softmax over the last axis. The masked overload zeroes masked positions
// exactly; mask holds 0/1 and is not differentiated. A row with no unmasked
// entry is a NumericError.
Tensor softmax_rows(const Tensor& x);
Tensor softmax_rows(const Tensor& x, const Tensor& mask);

// Per-row normalization over the last axis with learned gain/bias of shape [d].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor gelu(const Tensor& x);

// table [V,d], ids in [0,V) -> [ids.size(), d]. Grad scatters into table.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
// x [R,c], rows subset -> [rows.size(), c]. Grad scatter-adds.
Tensor gather_rows(const Tensor& x, const std::vector<int>& rows);
// probs [B,C], labels [B] -> [B] picking probs[b, labels[b]].
Tensor pick_class(const Tensor& probs, const std::vector<int>& labels);
// log(max(x, eps)) elementwise; derivative 0 in the clamped region.
Tensor log_clamped(const Tensor& x, double eps = 1e-12);
// x [B,T,d], mask length B*T -> [B,d]: mean over mask-true positions per b.
// A fully masked example is a NumericError.
Tensor masked_mean_rows(const Tensor& x, const std::vector<std::uint8_t>& mask);

// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
// calls (callers zero them between steps); interior gradients are recomputed
// per call. Non-scalar input is a ShapeError.
void backward(const Tensor& loss);

}  // namespace xscript
