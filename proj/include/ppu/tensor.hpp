// Dense tensors with a small reverse-mode autodiff tape.
//
// Values are stored as `Real` (32-bit float in the production build; the
// gradient-check test build compiles the same sources with PPU_REAL_DOUBLE).
// Reductions over a whole sequence or image accumulate in double; short
// per-position kernel sums run in Real.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ppu::tensor {

#ifdef PPU_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until first touched; same extent as value once allocated
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real fill, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }

  std::span<Real> values() { return node_->value; }
  std::span<const Real> values() const { return node_->value; }
  // Allocates (zeroed) on first access so grad always matches values.
  std::span<Real> grad();
  std::span<const Real> grad() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  Real item() const;
  Real at(std::size_t flat) const { return node_->value.at(flat); }

  // Seeds d(self)/d(self) = 1 (self must be a scalar) and runs the tape.
  void backward();
  void zero_grad();
  // Copy of the values as a new leaf with no history.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- ops -------------------------------------------------------------------

// table [V x k], ids in [0, V) -> [n x k]. Gradient scatter-adds into rows.
Tensor embed(const Tensor& table, std::span<const int> ids);

// x [n x c_in], kernels [w x c_in x c_out], bias [c_out] -> [n x c_out].
// Odd w, zero padding (w-1)/2 on each end.
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias);

// img [h x w x d_in], kernels [kh x kw x d_in x d_out], bias [d_out] -> [h x w x d_out].
Tensor conv2d(const Tensor& img, const Tensor& kernels, const Tensor& bias);

// x [n x c] -> [ceil(n/window) x c]; ties route the gradient to the first max.
Tensor maxpool1d(const Tensor& x, std::size_t window);

// x [n x c] -> [c]; n == 0 gives zeros.
Tensor max_rows(const Tensor& x);

// x [... x a] times W [a x b] plus bias [b] (bias may be undefined).
Tensor affine(const Tensor& x, const Tensor& weights, const Tensor& bias);

// w [m], x [m x c] -> sum_i w_i x_i, shape [c].
Tensor weighted_sum_rows(const Tensor& weights, const Tensor& x);

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real factor);
Tensor sum(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// Concatenates along the last axis; leading extents must agree.
Tensor concat_last(const std::vector<Tensor>& parts);
// v [m] -> [n x m], every row a copy of v.
Tensor broadcast_rows(const Tensor& v, std::size_t n);
// Equal-shape vectors [c] -> [m x c].
Tensor stack_rows(const std::vector<Tensor>& rows);

// s [n x d], e [n x d] -> [n x n x d], pixel (i, j) = s_i * e_j.
Tensor span_outer(const Tensor& starts, const Tensor& ends);

// Softmax along `axis` with max subtraction.
Tensor softmax(const Tensor& x, std::size_t axis);

// probs [... x C] with the class axis last. targets has one entry per row;
// a negative target masks the row. Optional per-row weights. Returns
// sum_r w_r * -log(max(p_r[t_r], 1e-12)) / sum_r w_r.
Tensor cross_entropy(const Tensor& probs, std::span<const int> targets,
                     std::span<const Real> weights = {});

// x [n x c] * gamma[c] + beta[c]
Tensor scale_shift(const Tensor& x, const Tensor& gamma, const Tensor& beta);

struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;
};

// Normalises x [n x c] over rows. In training mode uses the row statistics
// and reports them via `observed`; in eval mode uses `running`.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  const BatchNormStats& running, bool training, BatchNormStats* observed,
                  double eps = 1e-5);

// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, bool training);

}  // namespace ppu::tensor
