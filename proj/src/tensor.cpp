#include "xscript/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "xscript/errors.hpp"

namespace xscript {

namespace detail {

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

namespace {

void check_shape_dims(const Shape& s) {
  for (int d : s) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(s));
  }
}

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> data,
                                      bool requires_grad) {
  check_shape_dims(shape);
  if (shape_size(shape) != data.size())
    throw ShapeError("data size does not match shape " + shape_str(shape));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return n;
}

}  // namespace

}  // namespace detail

using detail::TensorNode;
using detail::shape_size;
using detail::shape_str;

Tensor Tensor::wrap(std::shared_ptr<TensorNode> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::ones(Shape shape, bool requires_grad) {
  return full(std::move(shape), 1.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(detail::shape_size(shape), value);
  return wrap(detail::make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  return wrap(detail::make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::randn(Shape shape, double stddev, std::mt19937_64& rng,
                     bool requires_grad) {
  std::vector<double> data(detail::shape_size(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : data) v = dist(rng);
  return wrap(detail::make_node(std::move(shape), std::move(data), requires_grad));
}

namespace {
const detail::TensorNode& deref(const std::shared_ptr<TensorNode>& n) {
  if (!n) throw ShapeError("operation on an undefined tensor");
  return *n;
}
}  // namespace

const Shape& Tensor::shape() const { return deref(node_).shape; }
int Tensor::rank() const { return static_cast<int>(shape().size()); }

int Tensor::dim(int axis) const {
  const Shape& s = shape();
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw ShapeError("axis out of range for " + shape_str(s));
  return s[axis];
}

std::size_t Tensor::size() const { return deref(node_).data.size(); }
bool Tensor::requires_grad() const { return deref(node_).requires_grad; }
const std::vector<double>& Tensor::data() const { return deref(node_).data; }

std::vector<double>& Tensor::mutable_data() {
  deref(node_);
  return node_->data;
}

std::vector<double> Tensor::grad() const {
  const TensorNode& n = deref(node_);
  if (n.grad.size() == n.data.size()) return n.grad;
  return std::vector<double>(n.data.size(), 0.0);
}

bool Tensor::grad_allocated() const {
  const TensorNode& n = deref(node_);
  return n.grad.size() == n.data.size();
}

void Tensor::zero_grad() {
  deref(node_);
  node_->grad.assign(node_->data.size(), 0.0);
}

double Tensor::value() const {
  const TensorNode& n = deref(node_);
  if (n.data.size() != 1)
    throw ShapeError("value() requires a scalar tensor, got " + shape_str(n.shape));
  return n.data[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  const TensorNode& n = deref(node_);
  if (idx.size() != n.shape.size())
    throw ShapeError("index rank does not match tensor rank " + shape_str(n.shape));
  std::size_t flat = 0;
  int axis = 0;
  for (int i : idx) {
    if (i < 0 || i >= n.shape[axis])
      throw ShapeError("index out of range for " + shape_str(n.shape));
    flat = flat * static_cast<std::size_t>(n.shape[axis]) + static_cast<std::size_t>(i);
    ++axis;
  }
  return n.data[flat];
}

Tensor Tensor::detached_copy(bool requires_grad) const {
  const TensorNode& n = deref(node_);
  return from_data(n.shape, n.data, requires_grad);
}

// ---- op helpers --------------------------------------------------------

namespace {

using NodePtr = std::shared_ptr<TensorNode>;

NodePtr result_node(Shape shape, std::vector<double> data,
                    std::vector<NodePtr> parents,
                    std::function<void(TensorNode&)> backprop) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

// C[m,n] += or = A[m,k] * B[k,n]
void gemm_nn(int m, int k, int n, const double* a, const double* b, double* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(int m, int k, int n, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(int m, int k, int n, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    const double* brow = b + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

// ---- ops ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("matmul expects rank-2 tensors, got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2)
    throw ShapeError("matmul inner dimensions disagree: " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data(), false);

  auto an = a.node();
  auto bn = b.node();
  return Tensor::wrap(result_node(
      {m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](TensorNode& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          gemm_nt(m, n, k, self.grad.data(), bn->data.data(), an->grad.data());
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          gemm_tn(m, k, n, an->data.data(), self.grad.data(), bn->grad.data());
        }
      }));
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3)
    throw ShapeError("bmm expects rank-3 tensors, got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  const int bs = a.dim(0), m = a.dim(1), k = a.dim(2);
  if (b.dim(0) != bs || b.dim(1) != k)
    throw ShapeError("bmm shapes disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  const int n = b.dim(2);
  std::vector<double> out(static_cast<std::size_t>(bs) * m * n);
  for (int i = 0; i < bs; ++i) {
    gemm_nn(m, k, n, a.data().data() + static_cast<std::size_t>(i) * m * k,
            b.data().data() + static_cast<std::size_t>(i) * k * n,
            out.data() + static_cast<std::size_t>(i) * m * n, false);
  }
  auto an = a.node();
  auto bn = b.node();
  return Tensor::wrap(result_node(
      {bs, m, n}, std::move(out), {an, bn},
      [an, bn, bs, m, k, n](TensorNode& self) {
        for (int i = 0; i < bs; ++i) {
          const double* g = self.grad.data() + static_cast<std::size_t>(i) * m * n;
          if (an->requires_grad) {
            an->ensure_grad();
            gemm_nt(m, n, k, g, bn->data.data() + static_cast<std::size_t>(i) * k * n,
                    an->grad.data() + static_cast<std::size_t>(i) * m * k);
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            gemm_tn(m, k, n, an->data.data() + static_cast<std::size_t>(i) * m * k, g,
                    bn->grad.data() + static_cast<std::size_t>(i) * k * n);
          }
        }
      }));
}

namespace {

Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* name,
                          double (*fwd)(double, double),
                          void (*bwd)(double, double, double, double&, double&)) {
  if (!detail::same_shape(a.shape(), b.shape()))
    throw ShapeError(std::string(name) + " expects equal shapes, got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  const auto& av = a.data();
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  auto an = a.node();
  auto bn = b.node();
  return Tensor::wrap(result_node(
      a.shape(), std::move(out), {an, bn}, [an, bn, bwd](TensorNode& self) {
        const bool ga = an->requires_grad, gb = bn->requires_grad;
        if (ga) an->ensure_grad();
        if (gb) bn->ensure_grad();
        double dummy = 0.0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          bwd(an->data[i], bn->data[i], self.grad[i],
              ga ? an->grad[i] : dummy, gb ? bn->grad[i] : dummy);
        }
      }));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double g, double& da, double& db) {
        da += g;
        db += g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double g, double& da, double& db) {
        da += g;
        db -= g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& da, double& db) {
        da += g * y;
        db += g * x;
      });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  const auto& av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  auto an = a.node();
  return Tensor::wrap(
      result_node(a.shape(), std::move(out), {an}, [an, s](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          an->grad[i] += self.grad[i] * s;
      }));
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1)
    throw ShapeError("add_bias expects a rank-1 bias, got " + shape_str(bias.shape()));
  const int d = bias.dim(0);
  if (x.rank() < 1 || x.shape().back() != d)
    throw ShapeError("add_bias last dimension mismatch: " + shape_str(x.shape()) +
                     " vs " + shape_str(bias.shape()));
  const std::size_t rows = x.size() / static_cast<std::size_t>(d);
  std::vector<double> out(x.size());
  const auto& xv = x.data();
  const auto& bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (int j = 0; j < d; ++j) out[r * d + j] = xv[r * d + j] + bv[j];
  auto xn = x.node();
  auto bn = bias.node();
  return Tensor::wrap(result_node(
      x.shape(), std::move(out), {xn, bn}, [xn, bn, rows, d](TensorNode& self) {
        if (xn->requires_grad) {
          xn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            xn->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (int j = 0; j < d; ++j) bn->grad[j] += self.grad[r * d + j];
        }
      }));
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2)
    throw ShapeError("transpose expects rank 2, got " + shape_str(a.shape()));
  const int m = a.dim(0), n = a.dim(1);
  std::vector<double> out(a.size());
  const auto& av = a.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(j) * m + i] = av[static_cast<std::size_t>(i) * n + j];
  auto an = a.node();
  return Tensor::wrap(
      result_node({n, m}, std::move(out), {an}, [an, m, n](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            an->grad[static_cast<std::size_t>(i) * n + j] +=
                self.grad[static_cast<std::size_t>(j) * m + i];
      }));
}

Tensor transpose_last2(const Tensor& a) {
  if (a.rank() != 3)
    throw ShapeError("transpose_last2 expects rank 3, got " + shape_str(a.shape()));
  const int b = a.dim(0), m = a.dim(1), n = a.dim(2);
  std::vector<double> out(a.size());
  const auto& av = a.data();
  for (int i = 0; i < b; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * m * n;
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c)
        out[base + static_cast<std::size_t>(c) * m + r] =
            av[base + static_cast<std::size_t>(r) * n + c];
  }
  auto an = a.node();
  return Tensor::wrap(
      result_node({b, n, m}, std::move(out), {an}, [an, b, m, n](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (int i = 0; i < b; ++i) {
          const std::size_t base = static_cast<std::size_t>(i) * m * n;
          for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c)
              an->grad[base + static_cast<std::size_t>(r) * n + c] +=
                  self.grad[base + static_cast<std::size_t>(c) * m + r];
        }
      }));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (detail::shape_size(shape) != a.size())
    throw ShapeError("reshape to " + shape_str(shape) + " changes element count of " +
                     shape_str(a.shape()));
  auto an = a.node();
  return Tensor::wrap(
      result_node(std::move(shape), a.data(), {an}, [an](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          an->grad[i] += self.grad[i];
      }));
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_last of zero tensors");
  const Shape& first = parts[0].shape();
  Shape lead(first.begin(), first.end() - 1);
  int total_last = 0;
  std::vector<int> lasts;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() ||
        !std::equal(lead.begin(), lead.end(), s.begin()))
      throw ShapeError("concat_last leading dimensions disagree: " +
                       shape_str(first) + " vs " + shape_str(s));
    lasts.push_back(s.back());
    total_last += s.back();
  }
  const std::size_t rows = detail::shape_size(lead);
  Shape out_shape = lead;
  out_shape.push_back(total_last);
  std::vector<double> out(rows * static_cast<std::size_t>(total_last));
  int offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& pv = parts[p].data();
    const int w = lasts[p];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(pv.begin() + static_cast<std::ptrdiff_t>(r) * w,
                pv.begin() + static_cast<std::ptrdiff_t>(r + 1) * w,
                out.begin() + static_cast<std::ptrdiff_t>(r * total_last + offset));
    offset += w;
  }
  std::vector<NodePtr> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return Tensor::wrap(result_node(
      std::move(out_shape), std::move(out), nodes,
      [nodes, lasts, rows, total_last](TensorNode& self) {
        int off = 0;
        for (std::size_t p = 0; p < nodes.size(); ++p) {
          const int w = lasts[p];
          if (nodes[p]->requires_grad) {
            nodes[p]->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
              for (int j = 0; j < w; ++j)
                nodes[p]->grad[r * w + j] += self.grad[r * total_last + off + j];
          }
          off += w;
        }
      }));
}

Tensor mean_axis(const Tensor& a, int axis) {
  const Shape& s = a.shape();
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw ShapeError("mean_axis: axis out of range for " + shape_str(s));
  const int n = s[axis];
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(s[i]);
  for (int i = axis + 1; i < static_cast<int>(s.size()); ++i)
    inner *= static_cast<std::size_t>(s[i]);
  Shape out_shape;
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  if (out_shape.empty()) out_shape.push_back(1);
  std::vector<double> out(outer * inner, 0.0);
  const auto& av = a.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (int k = 0; k < n; ++k)
      for (std::size_t i = 0; i < inner; ++i)
        out[o * inner + i] += av[(o * n + k) * inner + i];
  for (double& v : out) v /= n;
  auto an = a.node();
  return Tensor::wrap(result_node(
      std::move(out_shape), std::move(out), {an},
      [an, outer, inner, n](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t o = 0; o < outer; ++o)
          for (int k = 0; k < n; ++k)
            for (std::size_t i = 0; i < inner; ++i)
              an->grad[(o * n + k) * inner + i] += self.grad[o * inner + i] / n;
      }));
}

Tensor sum_all(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  auto an = a.node();
  return Tensor::wrap(
      result_node({1}, {total}, {an}, [an](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (double& g : an->grad) g += self.grad[0];
      }));
}

Tensor mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.size());
  double total = 0.0;
  for (double v : a.data()) total += v;
  auto an = a.node();
  return Tensor::wrap(
      result_node({1}, {total * inv}, {an}, [an, inv](TensorNode& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (double& g : an->grad) g += self.grad[0] * inv;
      }));
}

namespace {

Tensor softmax_impl(const Tensor& x, const Tensor* mask) {
  if (x.rank() < 1) throw ShapeError("softmax_rows expects rank >= 1");
  if (mask) {
    if (!detail::same_shape(mask->shape(), x.shape()))
      throw ShapeError("softmax_rows mask shape " + shape_str(mask->shape()) +
                       " does not match input " + shape_str(x.shape()));
  }
  const int d = x.shape().back();
  const std::size_t rows = x.size() / static_cast<std::size_t>(d);
  std::vector<double> out(x.size(), 0.0);
  const auto& xv = x.data();
  const double* mv = mask ? mask->data().data() : nullptr;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * d;
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j)
      if (!mv || mv[base + j] != 0.0) mx = std::max(mx, xv[base + j]);
    if (mx == -std::numeric_limits<double>::infinity())
      throw NumericError("softmax_rows: fully masked row " + std::to_string(r));
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      if (!mv || mv[base + j] != 0.0) {
        out[base + j] = std::exp(xv[base + j] - mx);
        sum += out[base + j];
      }
    }
    for (int j = 0; j < d; ++j) out[base + j] /= sum;
  }
  auto xn = x.node();
  return Tensor::wrap(result_node(
      x.shape(), std::move(out), {xn}, [xn, rows, d](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t base = r * d;
          double dot = 0.0;
          for (int j = 0; j < d; ++j) dot += self.grad[base + j] * self.data[base + j];
          for (int j = 0; j < d; ++j)
            xn->grad[base + j] += self.data[base + j] * (self.grad[base + j] - dot);
        }
      }));
}

}  // namespace

Tensor softmax_rows(const Tensor& x) { return softmax_impl(x, nullptr); }

Tensor softmax_rows(const Tensor& x, const Tensor& mask) {
  return softmax_impl(x, &mask);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  if (gain.rank() != 1 || bias.rank() != 1)
    throw ShapeError("layer_norm gain/bias must be rank 1");
  const int d = x.shape().back();
  if (gain.dim(0) != d || bias.dim(0) != d)
    throw ShapeError("layer_norm gain/bias length must match last dim of " +
                     shape_str(x.shape()));
  const std::size_t rows = x.size() / static_cast<std::size_t>(d);
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_sigma(rows);
  const auto& xv = x.data();
  const auto& gv = gain.data();
  const auto& bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xv[base + j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xv[base + j] - mu;
      var += c * c;
    }
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    for (int j = 0; j < d; ++j) {
      xhat[base + j] = (xv[base + j] - mu) * is;
      out[base + j] = gv[j] * xhat[base + j] + bv[j];
    }
  }
  auto xn = x.node();
  auto gn = gain.node();
  auto bn = bias.node();
  return Tensor::wrap(result_node(
      x.shape(), std::move(out), {xn, gn, bn},
      [xn, gn, bn, rows, d, xhat = std::move(xhat),
       inv_sigma = std::move(inv_sigma)](TensorNode& self) {
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (int j = 0; j < d; ++j) bn->grad[j] += self.grad[r * d + j];
        }
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (int j = 0; j < d; ++j)
              gn->grad[j] += self.grad[r * d + j] * xhat[r * d + j];
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * d;
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < d; ++j) {
              const double dg = self.grad[base + j] * gn->data[j];
              m1 += dg;
              m2 += dg * xhat[base + j];
            }
            m1 /= d;
            m2 /= d;
            for (int j = 0; j < d; ++j) {
              const double dg = self.grad[base + j] * gn->data[j];
              xn->grad[base + j] += (dg - m1 - xhat[base + j] * m2) * inv_sigma[r];
            }
          }
        }
      }));
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  std::vector<double> out(x.size());
  const auto& xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double phi = 0.5 * (1.0 + std::erf(xv[i] * inv_sqrt2));
    out[i] = xv[i] * phi;
  }
  auto xn = x.node();
  return Tensor::wrap(result_node(
      x.shape(), std::move(out), {xn}, [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        constexpr double is2 = 0.70710678118654752440;
        constexpr double is2pi = 0.39894228040143267794;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double v = xn->data[i];
          const double phi = 0.5 * (1.0 + std::erf(v * is2));
          const double pdf = is2pi * std::exp(-0.5 * v * v);
          xn->grad[i] += self.grad[i] * (phi + v * pdf);
        }
      }));
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2)
    throw ShapeError("embedding_lookup expects a rank-2 table, got " +
                     shape_str(table.shape()));
  const int v = table.dim(0), d = table.dim(1);
  for (int id : ids)
    if (id < 0 || id >= v)
      throw DataError("embedding id " + std::to_string(id) +
                      " out of range [0, " + std::to_string(v) + ")");
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw ShapeError("embedding_lookup of zero ids");
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  const auto& tv = table.data();
  for (int i = 0; i < n; ++i)
    std::copy(tv.begin() + static_cast<std::ptrdiff_t>(ids[i]) * d,
              tv.begin() + static_cast<std::ptrdiff_t>(ids[i] + 1) * d,
              out.begin() + static_cast<std::ptrdiff_t>(i) * d);
  auto tn = table.node();
  return Tensor::wrap(result_node(
      {n, d}, std::move(out), {tn}, [tn, ids, d](TensorNode& self) {
        if (!tn->requires_grad) return;
        tn->ensure_grad();
        for (std::size_t i = 0; i < ids.size(); ++i)
          for (int j = 0; j < d; ++j)
            tn->grad[static_cast<std::size_t>(ids[i]) * d + j] +=
                self.grad[i * d + j];
      }));
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& rows) {
  if (x.rank() != 2)
    throw ShapeError("gather_rows expects rank 2, got " + shape_str(x.shape()));
  const int r = x.dim(0), c = x.dim(1);
  for (int i : rows)
    if (i < 0 || i >= r)
      throw ShapeError("gather_rows index " + std::to_string(i) +
                       " out of range [0, " + std::to_string(r) + ")");
  const int k = static_cast<int>(rows.size());
  if (k == 0) throw ShapeError("gather_rows of zero rows");
  std::vector<double> out(static_cast<std::size_t>(k) * c);
  const auto& xv = x.data();
  for (int i = 0; i < k; ++i)
    std::copy(xv.begin() + static_cast<std::ptrdiff_t>(rows[i]) * c,
              xv.begin() + static_cast<std::ptrdiff_t>(rows[i] + 1) * c,
              out.begin() + static_cast<std::ptrdiff_t>(i) * c);
  auto xn = x.node();
  return Tensor::wrap(result_node(
      {k, c}, std::move(out), {xn}, [xn, rows, c](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < rows.size(); ++i)
          for (int j = 0; j < c; ++j)
            xn->grad[static_cast<std::size_t>(rows[i]) * c + j] +=
                self.grad[i * c + j];
      }));
}

Tensor pick_class(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2)
    throw ShapeError("pick_class expects rank 2, got " + shape_str(probs.shape()));
  const int b = probs.dim(0), c = probs.dim(1);
  if (static_cast<int>(labels.size()) != b)
    throw ShapeError("pick_class: labels length " + std::to_string(labels.size()) +
                     " does not match batch " + std::to_string(b));
  for (int l : labels)
    if (l < 0 || l >= c)
      throw DataError("label " + std::to_string(l) + " outside [0, " +
                      std::to_string(c) + ")");
  std::vector<double> out(b);
  const auto& pv = probs.data();
  for (int i = 0; i < b; ++i)
    out[i] = pv[static_cast<std::size_t>(i) * c + labels[i]];
  auto pn = probs.node();
  return Tensor::wrap(result_node(
      {b}, std::move(out), {pn}, [pn, labels, c](TensorNode& self) {
        if (!pn->requires_grad) return;
        pn->ensure_grad();
        for (std::size_t i = 0; i < labels.size(); ++i)
          pn->grad[i * c + labels[i]] += self.grad[i];
      }));
}

Tensor log_clamped(const Tensor& x, double eps) {
  std::vector<double> out(x.size());
  const auto& xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(xv[i], eps));
  auto xn = x.node();
  return Tensor::wrap(result_node(
      x.shape(), std::move(out), {xn}, [xn, eps](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          if (xn->data[i] > eps) xn->grad[i] += self.grad[i] / xn->data[i];
      }));
}

Tensor masked_mean_rows(const Tensor& x, const std::vector<std::uint8_t>& mask) {
  if (x.rank() != 3)
    throw ShapeError("masked_mean_rows expects rank 3, got " + shape_str(x.shape()));
  const int b = x.dim(0), t = x.dim(1), d = x.dim(2);
  if (static_cast<int>(mask.size()) != b * t)
    throw ShapeError("masked_mean_rows: mask length " + std::to_string(mask.size()) +
                     " does not match " + std::to_string(b * t) + " positions");
  std::vector<double> out(static_cast<std::size_t>(b) * d, 0.0);
  std::vector<int> counts(b, 0);
  const auto& xv = x.data();
  for (int i = 0; i < b; ++i) {
    for (int p = 0; p < t; ++p) {
      if (!mask[static_cast<std::size_t>(i) * t + p]) continue;
      ++counts[i];
      const std::size_t base = (static_cast<std::size_t>(i) * t + p) * d;
      for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i) * d + j] += xv[base + j];
    }
    if (counts[i] == 0)
      throw NumericError("masked_mean_rows: example " + std::to_string(i) +
                         " has no unmasked positions");
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i) * d + j] /= counts[i];
  }
  auto xn = x.node();
  return Tensor::wrap(result_node(
      {b, d}, std::move(out), {xn},
      [xn, mask, b, t, d, counts](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (int i = 0; i < b; ++i)
          for (int p = 0; p < t; ++p) {
            if (!mask[static_cast<std::size_t>(i) * t + p]) continue;
            const std::size_t base = (static_cast<std::size_t>(i) * t + p) * d;
            for (int j = 0; j < d; ++j)
              xn->grad[base + j] +=
                  self.grad[static_cast<std::size_t>(i) * d + j] / counts[i];
          }
      }));
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ShapeError("backward on an undefined tensor");
  if (loss.size() != 1)
    throw ShapeError("backward requires a scalar loss, got " +
                     shape_str(loss.shape()));
  auto root = loss.node();

  // Children-before-parents order via iterative post-order DFS.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next].get();
      ++next;
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are per-sweep scratch; leaf grads persist and accumulate.
  for (TensorNode* n : order)
    if (!n->is_leaf()) n->grad.assign(n->data.size(), 0.0);
  root->ensure_grad();
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backprop && n->requires_grad) n->backprop(*n);
  }
}

}  // namespace xscript
