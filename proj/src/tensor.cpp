#include "ppu/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ppu::tensor {

namespace {

thread_local bool g_grad_enabled = true;

[[noreturn]] void shape_error(const std::string& op, const std::string& what) {
  throw std::invalid_argument(op + ": " + what);
}

std::shared_ptr<Node> make_node(Shape shape, const char* op,
                                std::initializer_list<const Tensor*> inputs) {
  auto node = std::make_shared<Node>();
  node->value.assign(shape_size(shape), Real(0));
  node->shape = std::move(shape);
  node->op = op;
  if (g_grad_enabled) {
    for (const Tensor* t : inputs) {
      if (t != nullptr && t->defined() && t->requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
    if (node->requires_grad) {
      for (const Tensor* t : inputs) {
        if (t != nullptr && t->defined()) node->parents.push_back(t->shared());
      }
    }
  }
  return node;
}

std::shared_ptr<Node> make_node_list(Shape shape, const char* op,
                                     const std::vector<Tensor>& inputs) {
  auto node = std::make_shared<Node>();
  node->value.assign(shape_size(shape), Real(0));
  node->shape = std::move(shape);
  node->op = op;
  if (g_grad_enabled) {
    node->requires_grad =
        std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (node->requires_grad) {
      for (const auto& t : inputs) node->parents.push_back(t.shared());
    }
  }
  return node;
}

bool wants_grad(const Tensor& t) { return t.defined() && t.requires_grad(); }

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* name) {
  if (!t.defined()) shape_error(op, std::string(name) + " is undefined");
  if (t.rank() != rank) {
    shape_error(op, std::string(name) + " must have rank " + std::to_string(rank) + ", got " +
                        shape_string(t.shape()));
  }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
}

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real(0), requires_grad);
}

Tensor Tensor::full(Shape shape, Real fill, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(shape_size(shape), fill);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    shape_error("Tensor::from", "shape " + shape_string(shape) + " does not match " +
                                    std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(Real v, bool requires_grad) { return from({}, {v}, requires_grad); }

std::span<Real> Tensor::grad() {
  node_->ensure_grad();
  return node_->grad;
}

std::span<const Real> Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }

Real Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

void Tensor::backward() {
  if (size() != 1) throw std::invalid_argument("backward() requires a scalar output");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad();
  node_->grad[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---- embed --------------------------------------------------------------------

Tensor embed(const Tensor& table, std::span<const int> ids) {
  require_rank(table, 2, "embed", "table");
  const std::size_t vocab = table.dim(0), k = table.dim(1), n = ids.size();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range("embed: id " + std::to_string(id) + " outside [0, " +
                              std::to_string(vocab) + ")");
    }
  }
  auto out = make_node({n, k}, "embed", {&table});
  const auto src = table.values();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(ids[i] * k), k,
                out->value.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  if (out->requires_grad) {
    std::vector<int> saved(ids.begin(), ids.end());
    out->backward = [saved = std::move(saved), k](Node& self) {
      Node& tab = *self.parents[0];
      tab.ensure_grad();
      for (std::size_t i = 0; i < saved.size(); ++i) {
        Real* row = tab.grad.data() + saved[i] * k;
        const Real* g = self.grad.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) row[j] += g[j];
      }
    };
  }
  return Tensor(out);
}

// ---- conv1d -------------------------------------------------------------------

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  require_rank(x, 2, "conv1d", "x");
  require_rank(kernels, 3, "conv1d", "kernels");
  require_rank(bias, 1, "conv1d", "bias");
  const std::size_t n = x.dim(0), cin = x.dim(1);
  const std::size_t w = kernels.dim(0), cout = kernels.dim(2);
  if (kernels.dim(1) != cin) {
    shape_error("conv1d", "input has " + std::to_string(cin) + " channels, kernels expect " +
                              std::to_string(kernels.dim(1)));
  }
  if (w % 2 == 0) shape_error("conv1d", "kernel width must be odd");
  if (bias.dim(0) != cout) shape_error("conv1d", "bias extent mismatch");
  const std::size_t pad = w / 2;
  const std::size_t K = w * cin;

  // With the input zero-padded by `pad` rows, the window of output t is the
  // contiguous run xp[t * cin, t * cin + K), laid out like one kernel slice.
  auto padded = [=](const Real* xv) {
    std::vector<Real> xp((n + 2 * pad) * cin, Real(0));
    std::copy(xv, xv + n * cin, xp.begin() + static_cast<std::ptrdiff_t>(pad * cin));
    return xp;
  };
  auto transposed = [=](const Real* kv) {
    std::vector<Real> kt(K * cout);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t o = 0; o < cout; ++o) kt[o * K + k] = kv[k * cout + o];
    return kt;
  };

  auto out = make_node({n, cout}, "conv1d", {&x, &kernels, &bias});
  const Real* bv = bias.values().data();
  {
    const std::vector<Real> xp = padded(x.values().data());
    const std::vector<Real> kt = transposed(kernels.values().data());
    for (std::size_t t = 0; t < n; ++t) {
      const Real* p = xp.data() + t * cin;
      Real* dst = out->value.data() + t * cout;
      for (std::size_t o = 0; o < cout; ++o) {
        const Real* ko = kt.data() + o * K;
        Real s = 0;
#pragma omp simd reduction(+ : s)
        for (std::size_t k = 0; k < K; ++k) s += p[k] * ko[k];
        dst[o] = bv[o] + s;
      }
    }
  }

  if (out->requires_grad) {
    const bool gx = wants_grad(x), gk = wants_grad(kernels), gb = wants_grad(bias);
    out->backward = [n, cin, cout, pad, K, gx, gk, gb, padded, transposed](Node& self) {
      Node& xn = *self.parents[0];
      Node& kn = *self.parents[1];
      Node& bn = *self.parents[2];
      const Real* g = self.grad.data();
      if (gb) {
        bn.ensure_grad();
        for (std::size_t o = 0; o < cout; ++o) {
          double s = 0;
          for (std::size_t t = 0; t < n; ++t) s += g[t * cout + o];
          bn.grad[o] += static_cast<Real>(s);
        }
      }
      if (gk) {
        kn.ensure_grad();
        const std::vector<Real> xp = padded(xn.value.data());
        std::vector<double> gacc(cout * K, 0.0);  // [cout x K]
        for (std::size_t t = 0; t < n; ++t) {
          const Real* p = xp.data() + t * cin;
          for (std::size_t o = 0; o < cout; ++o) {
            const double go = g[t * cout + o];
            if (go == 0.0) continue;
            double* ga = gacc.data() + o * K;
#pragma omp simd
            for (std::size_t k = 0; k < K; ++k) ga[k] += go * p[k];
          }
        }
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t o = 0; o < cout; ++o) kn.grad[k * cout + o] += static_cast<Real>(gacc[o * K + k]);
      }
      if (gx) {
        xn.ensure_grad();
        const std::vector<Real> kt = transposed(kn.value.data());
        std::vector<Real> gp((n + 2 * pad) * cin, Real(0));
        for (std::size_t t = 0; t < n; ++t) {
          Real* dst = gp.data() + t * cin;
          for (std::size_t o = 0; o < cout; ++o) {
            const Real go = g[t * cout + o];
            if (go == Real(0)) continue;
            const Real* ko = kt.data() + o * K;
#pragma omp simd
            for (std::size_t k = 0; k < K; ++k) dst[k] += go * ko[k];
          }
        }
        const Real* src = gp.data() + pad * cin;
        for (std::size_t i = 0; i < n * cin; ++i) xn.grad[i] += src[i];
      }
    };
  }
  return Tensor(out);
}

// ---- conv2d -------------------------------------------------------------------

Tensor conv2d(const Tensor& img, const Tensor& kernels, const Tensor& bias) {
  require_rank(img, 3, "conv2d", "img");
  require_rank(kernels, 4, "conv2d", "kernels");
  require_rank(bias, 1, "conv2d", "bias");
  const std::size_t H = img.dim(0), W = img.dim(1), din = img.dim(2);
  const std::size_t kh = kernels.dim(0), kw = kernels.dim(1), dout = kernels.dim(3);
  if (kernels.dim(2) != din) {
    shape_error("conv2d", "image depth " + std::to_string(din) + " but kernels expect " +
                              std::to_string(kernels.dim(2)));
  }
  if (kh % 2 == 0 || kw % 2 == 0) shape_error("conv2d", "kernel extents must be odd");
  if (bias.dim(0) != dout) shape_error("conv2d", "bias extent mismatch");
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2), pw = static_cast<std::ptrdiff_t>(kw / 2);
  const auto sH = static_cast<std::ptrdiff_t>(H), sW = static_cast<std::ptrdiff_t>(W);
  const std::size_t K = kh * kw * din;

  // Each pixel gathers its zero-padded kh x kw x din patch into a flat
  // buffer, so the kernel work is dot products and axpys of length K.
  auto gather = [=](const Real* iv, std::ptrdiff_t y, std::ptrdiff_t x, Real* patch) {
    for (std::ptrdiff_t dy = 0; dy < static_cast<std::ptrdiff_t>(kh); ++dy) {
      const std::ptrdiff_t yy = y + dy - ph;
      for (std::ptrdiff_t dx = 0; dx < static_cast<std::ptrdiff_t>(kw); ++dx) {
        const std::ptrdiff_t xx = x + dx - pw;
        Real* dst = patch + (static_cast<std::size_t>(dy) * kw + static_cast<std::size_t>(dx)) * din;
        if (yy < 0 || yy >= sH || xx < 0 || xx >= sW) {
          std::fill(dst, dst + din, Real(0));
        } else {
          const Real* src = iv + (yy * sW + xx) * static_cast<std::ptrdiff_t>(din);
          std::copy(src, src + din, dst);
        }
      }
    }
  };
  // kernels as [dout x K]
  auto transposed = [=](const Real* kv) {
    std::vector<Real> kt(K * dout);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t o = 0; o < dout; ++o) kt[o * K + k] = kv[k * dout + o];
    return kt;
  };

  auto out = make_node({H, W, dout}, "conv2d", {&img, &kernels, &bias});
  const Real* iv = img.values().data();
  const Real* bv = bias.values().data();
  const std::vector<Real> kt = transposed(kernels.values().data());
  std::vector<Real> patch(K);
  for (std::ptrdiff_t y = 0; y < sH; ++y) {
    for (std::ptrdiff_t x = 0; x < sW; ++x) {
      gather(iv, y, x, patch.data());
      Real* dst = out->value.data() + (y * sW + x) * static_cast<std::ptrdiff_t>(dout);
      for (std::size_t o = 0; o < dout; ++o) {
        const Real* ko = kt.data() + o * K;
        const Real* p = patch.data();
        Real s = 0;
#pragma omp simd reduction(+ : s)
        for (std::size_t k = 0; k < K; ++k) s += p[k] * ko[k];
        dst[o] = bv[o] + s;
      }
    }
  }

  if (out->requires_grad) {
    const bool gi = wants_grad(img), gk = wants_grad(kernels), gb = wants_grad(bias);
    out->backward = [sH, sW, din, dout, kh, kw, ph, pw, K, gi, gk, gb, gather, transposed](Node& self) {
      Node& in = *self.parents[0];
      Node& kn = *self.parents[1];
      Node& bn = *self.parents[2];
      const Real* g = self.grad.data();
      const std::size_t pixels = static_cast<std::size_t>(sH * sW);
      if (gb) {
        bn.ensure_grad();
        std::vector<double> s(dout, 0.0);
        for (std::size_t p = 0; p < pixels; ++p)
          for (std::size_t o = 0; o < dout; ++o) s[o] += g[p * dout + o];
        for (std::size_t o = 0; o < dout; ++o) bn.grad[o] += static_cast<Real>(s[o]);
      }
      const std::vector<Real> kt = transposed(kn.value.data());
      // Kernel gradient [dout x K]: one image row at a time in Real, folded into double.
      std::vector<double> gacc(gk ? K * dout : 0, 0.0);
      std::vector<Real> grow(gk ? K * dout : 0);
      std::vector<Real> patch(K), pgrad(K);
      if (gi) in.ensure_grad();
      for (std::ptrdiff_t y = 0; y < sH; ++y) {
        if (gk) std::fill(grow.begin(), grow.end(), Real(0));
        bool row_touched = false;
        for (std::ptrdiff_t x = 0; x < sW; ++x) {
          const Real* gp = g + (y * sW + x) * static_cast<std::ptrdiff_t>(dout);
          bool any = false;
          for (std::size_t o = 0; o < dout; ++o) any = any || gp[o] != Real(0);
          if (!any) continue;
          row_touched = true;
          if (gk) {
            gather(in.value.data(), y, x, patch.data());
            for (std::size_t o = 0; o < dout; ++o) {
              const Real go = gp[o];
              Real* gr = grow.data() + o * K;
              const Real* p = patch.data();
#pragma omp simd
              for (std::size_t k = 0; k < K; ++k) gr[k] += go * p[k];
            }
          }
          if (gi) {
            std::fill(pgrad.begin(), pgrad.end(), Real(0));
            for (std::size_t o = 0; o < dout; ++o) {
              const Real go = gp[o];
              const Real* ko = kt.data() + o * K;
              Real* pg = pgrad.data();
#pragma omp simd
              for (std::size_t k = 0; k < K; ++k) pg[k] += go * ko[k];
            }
            for (std::ptrdiff_t dy = 0; dy < static_cast<std::ptrdiff_t>(kh); ++dy) {
              const std::ptrdiff_t yy = y + dy - ph;
              if (yy < 0 || yy >= sH) continue;
              for (std::ptrdiff_t dx = 0; dx < static_cast<std::ptrdiff_t>(kw); ++dx) {
                const std::ptrdiff_t xx = x + dx - pw;
                if (xx < 0 || xx >= sW) continue;
                const Real* src = pgrad.data() + (static_cast<std::size_t>(dy) * kw + static_cast<std::size_t>(dx)) * din;
                Real* ig = in.grad.data() + (yy * sW + xx) * static_cast<std::ptrdiff_t>(din);
                for (std::size_t c = 0; c < din; ++c) ig[c] += src[c];
              }
            }
          }
        }
        if (gk && row_touched)
          for (std::size_t i = 0; i < grow.size(); ++i) gacc[i] += grow[i];
      }
      if (gk) {
        kn.ensure_grad();
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t o = 0; o < dout; ++o) kn.grad[k * dout + o] += static_cast<Real>(gacc[o * K + k]);
      }
    };
  }
  return Tensor(out);
}

// ---- pooling --------------------------------------------------------------------

Tensor maxpool1d(const Tensor& x, std::size_t window) {
  if (window == 0) throw std::invalid_argument("maxpool1d: window must be >= 1");
  require_rank(x, 2, "maxpool1d", "x");
  const std::size_t n = x.dim(0), c = x.dim(1);
  const std::size_t m = (n + window - 1) / window;
  auto out = make_node({m, c}, "maxpool1d", {&x});
  std::vector<std::size_t> argmax(m * c, 0);
  const Real* xv = x.values().data();
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t lo = r * window, hi = std::min(n, lo + window);
    for (std::size_t ch = 0; ch < c; ++ch) {
      std::size_t best = lo;
      for (std::size_t t = lo + 1; t < hi; ++t) {
        if (xv[t * c + ch] > xv[best * c + ch]) best = t;
      }
      argmax[r * c + ch] = best;
      out->value[r * c + ch] = xv[best * c + ch];
    }
  }
  if (out->requires_grad) {
    out->backward = [argmax = std::move(argmax), c](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (std::size_t i = 0; i < argmax.size(); ++i) xn.grad[argmax[i] * c + i % c] += self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor max_rows(const Tensor& x) {
  require_rank(x, 2, "max_rows", "x");
  const std::size_t n = x.dim(0), c = x.dim(1);
  auto out = make_node({c}, "max_rows", {&x});
  if (n == 0) return Tensor(out);
  std::vector<std::size_t> argmax(c, 0);
  const Real* xv = x.values().data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < n; ++t) {
      if (xv[t * c + ch] > xv[best * c + ch]) best = t;
    }
    argmax[ch] = best;
    out->value[ch] = xv[best * c + ch];
  }
  if (out->requires_grad) {
    out->backward = [argmax = std::move(argmax), c](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (std::size_t ch = 0; ch < c; ++ch) xn.grad[argmax[ch] * c + ch] += self.grad[ch];
    };
  }
  return Tensor(out);
}

// ---- dense --------------------------------------------------------------------

Tensor affine(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  require_rank(weights, 2, "affine", "weights");
  if (!x.defined() || x.rank() == 0) shape_error("affine", "x must have rank >= 1");
  const std::size_t a = weights.dim(0), b = weights.dim(1);
  if (x.shape().back() != a) {
    shape_error("affine", "inner extent " + std::to_string(x.shape().back()) + " vs weights " +
                              shape_string(weights.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != b)) shape_error("affine", "bias extent mismatch");
  const std::size_t rows = x.size() / a;
  Shape shape = x.shape();
  shape.back() = b;
  auto out = bias.defined() ? make_node(shape, "affine", {&x, &weights, &bias})
                            : make_node(shape, "affine", {&x, &weights});
  const Real* xv = x.values().data();
  const Real* wv = weights.values().data();
  std::vector<double> acc(b);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < b; ++j) acc[j] = bias.defined() ? bias.values()[j] : 0.0;
    for (std::size_t i = 0; i < a; ++i) {
      const double v = xv[r * a + i];
      if (v == 0.0) continue;
      const Real* wr = wv + i * b;
      for (std::size_t j = 0; j < b; ++j) acc[j] += v * wr[j];
    }
    for (std::size_t j = 0; j < b; ++j) out->value[r * b + j] = static_cast<Real>(acc[j]);
  }
  if (out->requires_grad) {
    const bool gx = wants_grad(x), gw = wants_grad(weights), gb = wants_grad(bias);
    const bool has_bias = bias.defined();
    out->backward = [rows, a, b, gx, gw, gb, has_bias](Node& self) {
      Node& xn = *self.parents[0];
      Node& wn = *self.parents[1];
      const Real* g = self.grad.data();
      if (has_bias && gb) {
        Node& bn = *self.parents[2];
        bn.ensure_grad();
        for (std::size_t j = 0; j < b; ++j) {
          double s = 0;
          for (std::size_t r = 0; r < rows; ++r) s += g[r * b + j];
          bn.grad[j] += static_cast<Real>(s);
        }
      }
      if (gw) {
        wn.ensure_grad();
        std::vector<double> acc(a * b, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < a; ++i) {
            const double v = xn.value[r * a + i];
            if (v == 0.0) continue;
            double* row = acc.data() + i * b;
            for (std::size_t j = 0; j < b; ++j) row[j] += v * g[r * b + j];
          }
        }
        for (std::size_t i = 0; i < acc.size(); ++i) wn.grad[i] += static_cast<Real>(acc[i]);
      }
      if (gx) {
        xn.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < a; ++i) {
            double d = 0;
            const Real* wr = wn.value.data() + i * b;
            for (std::size_t j = 0; j < b; ++j) d += static_cast<double>(g[r * b + j]) * wr[j];
            xn.grad[r * a + i] += static_cast<Real>(d);
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor weighted_sum_rows(const Tensor& weights, const Tensor& x) {
  require_rank(weights, 1, "weighted_sum_rows", "weights");
  require_rank(x, 2, "weighted_sum_rows", "x");
  const std::size_t m = x.dim(0), c = x.dim(1);
  if (weights.dim(0) != m) shape_error("weighted_sum_rows", "weight count mismatch");
  auto out = make_node({c}, "weighted_sum_rows", {&weights, &x});
  for (std::size_t j = 0; j < c; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < m; ++i) s += static_cast<double>(weights.values()[i]) * x.values()[i * c + j];
    out->value[j] = static_cast<Real>(s);
  }
  if (out->requires_grad) {
    const bool gw = wants_grad(weights), gx = wants_grad(x);
    out->backward = [m, c, gw, gx](Node& self) {
      Node& wn = *self.parents[0];
      Node& xn = *self.parents[1];
      if (gw) {
        wn.ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          double s = 0;
          for (std::size_t j = 0; j < c; ++j) s += static_cast<double>(self.grad[j]) * xn.value[i * c + j];
          wn.grad[i] += static_cast<Real>(s);
        }
      }
      if (gx) {
        xn.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) xn.grad[i * c + j] += wn.value[i] * self.grad[j];
      }
    };
  }
  return Tensor(out);
}

// ---- elementwise ----------------------------------------------------------------

Tensor relu(const Tensor& x) {
  auto out = make_node(x.shape(), "relu", {&x});
  const auto xv = x.values();
  for (std::size_t i = 0; i < xv.size(); ++i) out->value[i] = xv[i] > Real(0) ? xv[i] : Real(0);
  if (out->requires_grad) {
    out->backward = [](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (xn.value[i] > Real(0)) xn.grad[i] += self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    shape_error("add", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  auto out = make_node(a.shape(), "add", {&a, &b});
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] + b.values()[i];
  if (out->requires_grad) {
    const bool ga = wants_grad(a), gb = wants_grad(b);
    out->backward = [ga, gb](Node& self) {
      for (int k = 0; k < 2; ++k) {
        if ((k == 0 && !ga) || (k == 1 && !gb)) continue;
        Node& p = *self.parents[static_cast<std::size_t>(k)];
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
      }
    };
  }
  return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    shape_error("mul", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  auto out = make_node(a.shape(), "mul", {&a, &b});
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] * b.values()[i];
  if (out->requires_grad) {
    const bool ga = wants_grad(a), gb = wants_grad(b);
    out->backward = [ga, gb](Node& self) {
      Node& an = *self.parents[0];
      Node& bn = *self.parents[1];
      if (ga) {
        an.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i] * bn.value[i];
      }
      if (gb) {
        bn.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] += self.grad[i] * an.value[i];
      }
    };
  }
  return Tensor(out);
}

Tensor scale(const Tensor& x, Real factor) {
  auto out = make_node(x.shape(), "scale", {&x});
  for (std::size_t i = 0; i < x.size(); ++i) out->value[i] = x.values()[i] * factor;
  if (out->requires_grad) {
    out->backward = [factor](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) xn.grad[i] += self.grad[i] * factor;
    };
  }
  return Tensor(out);
}

Tensor sum(const Tensor& x) {
  auto out = make_node({}, "sum", {&x});
  double s = 0;
  for (Real v : x.values()) s += v;
  out->value[0] = static_cast<Real>(s);
  if (out->requires_grad) {
    out->backward = [](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (auto& g : xn.grad) g += self.grad[0];
    };
  }
  return Tensor(out);
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    shape_error("reshape", shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  auto out = make_node(std::move(shape), "reshape", {&x});
  std::copy(x.values().begin(), x.values().end(), out->value.begin());
  if (out->requires_grad) {
    out->backward = [](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) xn.grad[i] += self.grad[i];
    };
  }
  return Tensor(out);
}

// ---- structural -----------------------------------------------------------------

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_last: no inputs");
  const Shape& first = parts.front().shape();
  if (first.empty()) shape_error("concat_last", "scalars cannot be concatenated");
  const Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      shape_error("concat_last", "leading extents differ: " + shape_string(first) + " vs " + shape_string(s));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  Shape shape = lead;
  shape.push_back(total);
  const std::size_t rows = shape_size(lead);
  auto out = make_node_list(shape, "concat_last", parts);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Real* src = parts[k].values().data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src + r * widths[k], widths[k], out->value.data() + r * total + offset);
    offset += widths[k];
  }
  if (out->requires_grad) {
    out->backward = [widths, rows, total](Node& self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        Node& p = *self.parents[k];
        if (p.requires_grad) {
          p.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < widths[k]; ++j) p.grad[r * widths[k] + j] += self.grad[r * total + off + j];
        }
        off += widths[k];
      }
    };
  }
  return Tensor(out);
}

Tensor broadcast_rows(const Tensor& v, std::size_t n) {
  require_rank(v, 1, "broadcast_rows", "v");
  const std::size_t m = v.dim(0);
  auto out = make_node({n, m}, "broadcast_rows", {&v});
  for (std::size_t r = 0; r < n; ++r) std::copy_n(v.values().data(), m, out->value.data() + r * m);
  if (out->requires_grad) {
    out->backward = [n, m](Node& self) {
      Node& vn = *self.parents[0];
      vn.ensure_grad();
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0;
        for (std::size_t r = 0; r < n; ++r) s += self.grad[r * m + j];
        vn.grad[j] += static_cast<Real>(s);
      }
    };
  }
  return Tensor(out);
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  const std::size_t c = rows.front().size();
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != c) shape_error("stack_rows", "rows must be equal-length vectors");
  }
  auto out = make_node_list({rows.size(), c}, "stack_rows", rows);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(rows[i].values().data(), c, out->value.data() + i * c);
  if (out->requires_grad) {
    out->backward = [c](Node& self) {
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        Node& p = *self.parents[i];
        if (!p.requires_grad) continue;
        p.ensure_grad();
        for (std::size_t j = 0; j < c; ++j) p.grad[j] += self.grad[i * c + j];
      }
    };
  }
  return Tensor(out);
}

Tensor span_outer(const Tensor& starts, const Tensor& ends) {
  require_rank(starts, 2, "span_outer", "starts");
  require_rank(ends, 2, "span_outer", "ends");
  if (starts.shape() != ends.shape()) {
    shape_error("span_outer", shape_string(starts.shape()) + " vs " + shape_string(ends.shape()));
  }
  const std::size_t n = starts.dim(0), d = starts.dim(1);
  auto out = make_node({n, n, d}, "span_outer", {&starts, &ends});
  const Real* sv = starts.values().data();
  const Real* ev = ends.values().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Real* px = out->value.data() + (i * n + j) * d;
      for (std::size_t c = 0; c < d; ++c) px[c] = sv[i * d + c] * ev[j * d + c];
    }
  if (out->requires_grad) {
    const bool gs = wants_grad(starts), ge = wants_grad(ends);
    out->backward = [n, d, gs, ge](Node& self) {
      Node& sn = *self.parents[0];
      Node& en = *self.parents[1];
      std::vector<double> gsacc(gs ? n * d : 0, 0.0), geacc(ge ? n * d : 0, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const Real* g = self.grad.data() + (i * n + j) * d;
          for (std::size_t c = 0; c < d; ++c) {
            if (gs) gsacc[i * d + c] += static_cast<double>(g[c]) * en.value[j * d + c];
            if (ge) geacc[j * d + c] += static_cast<double>(g[c]) * sn.value[i * d + c];
          }
        }
      if (gs) {
        sn.ensure_grad();
        for (std::size_t k = 0; k < gsacc.size(); ++k) sn.grad[k] += static_cast<Real>(gsacc[k]);
      }
      if (ge) {
        en.ensure_grad();
        for (std::size_t k = 0; k < geacc.size(); ++k) en.grad[k] += static_cast<Real>(geacc[k]);
      }
    };
  }
  return Tensor(out);
}

// ---- softmax / loss ---------------------------------------------------------------

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) + " invalid for " +
                                shape_string(x.shape()));
  }
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  auto out = make_node(s, "softmax", {&x});
  const Real* xv = x.values().data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, static_cast<double>(xv[base + k * inner]));
      double z = 0;
      for (std::size_t k = 0; k < len; ++k) z += std::exp(static_cast<double>(xv[base + k * inner]) - mx);
      for (std::size_t k = 0; k < len; ++k)
        out->value[base + k * inner] = static_cast<Real>(std::exp(static_cast<double>(xv[base + k * inner]) - mx) / z);
    }
  if (out->requires_grad) {
    out->backward = [outer, inner, len](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          double dot = 0;
          for (std::size_t k = 0; k < len; ++k)
            dot += static_cast<double>(self.grad[base + k * inner]) * self.value[base + k * inner];
          for (std::size_t k = 0; k < len; ++k) {
            const std::size_t idx = base + k * inner;
            xn.grad[idx] += static_cast<Real>(self.value[idx] * (self.grad[idx] - dot));
          }
        }
    };
  }
  return Tensor(out);
}

Tensor cross_entropy(const Tensor& probs, std::span<const int> targets, std::span<const Real> weights) {
  if (!probs.defined() || probs.rank() == 0) throw std::invalid_argument("cross_entropy: probs must have rank >= 1");
  const std::size_t classes = probs.shape().back();
  const std::size_t rows = probs.size() / classes;
  if (targets.size() != rows) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                                std::to_string(rows) + " rows");
  }
  if (!weights.empty() && weights.size() != rows) throw std::invalid_argument("cross_entropy: weight count mismatch");
  constexpr double kFloor = 1e-12;
  double total = 0, wsum = 0;
  const Real* pv = probs.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = targets[r];
    if (t < 0) continue;
    if (static_cast<std::size_t>(t) >= classes) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
    const double w = weights.empty() ? 1.0 : static_cast<double>(weights[r]);
    total += -w * std::log(std::max(static_cast<double>(pv[r * classes + static_cast<std::size_t>(t)]), kFloor));
    wsum += w;
  }
  auto out = make_node({}, "cross_entropy", {&probs});
  out->value[0] = wsum > 0 ? static_cast<Real>(total / wsum) : Real(0);
  if (out->requires_grad && wsum > 0) {
    std::vector<int> t(targets.begin(), targets.end());
    std::vector<Real> w(weights.begin(), weights.end());
    out->backward = [t = std::move(t), w = std::move(w), classes, wsum](Node& self) {
      Node& pn = *self.parents[0];
      pn.ensure_grad();
      const double g = self.grad[0] / wsum;
      for (std::size_t r = 0; r < t.size(); ++r) {
        if (t[r] < 0) continue;
        const std::size_t idx = r * classes + static_cast<std::size_t>(t[r]);
        const double p = pn.value[idx];
        if (p < kFloor) continue;  // clamped region is flat
        const double wr = w.empty() ? 1.0 : static_cast<double>(w[r]);
        pn.grad[idx] += static_cast<Real>(-g * wr / p);
      }
    };
  }
  return Tensor(out);
}

// ---- normalisation / regularisation ---------------------------------------------------

Tensor scale_shift(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  require_rank(x, 2, "scale_shift", "x");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (gamma.size() != c || beta.size() != c) shape_error("scale_shift", "parameter extent mismatch");
  auto out = make_node(x.shape(), "scale_shift", {&x, &gamma, &beta});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j)
      out->value[r * c + j] = x.values()[r * c + j] * gamma.values()[j] + beta.values()[j];
  if (out->requires_grad) {
    const bool gx = wants_grad(x), gg = wants_grad(gamma), gb = wants_grad(beta);
    out->backward = [n, c, gx, gg, gb](Node& self) {
      Node& xn = *self.parents[0];
      Node& gn = *self.parents[1];
      Node& bn = *self.parents[2];
      if (gx) xn.ensure_grad();
      std::vector<double> dg(c, 0.0), db(c, 0.0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) {
          const double g = self.grad[r * c + j];
          dg[j] += g * xn.value[r * c + j];
          db[j] += g;
          if (gx) xn.grad[r * c + j] += static_cast<Real>(g * gn.value[j]);
        }
      if (gg) {
        gn.ensure_grad();
        for (std::size_t j = 0; j < c; ++j) gn.grad[j] += static_cast<Real>(dg[j]);
      }
      if (gb) {
        bn.ensure_grad();
        for (std::size_t j = 0; j < c; ++j) bn.grad[j] += static_cast<Real>(db[j]);
      }
    };
  }
  return Tensor(out);
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, const BatchNormStats& running,
                  bool training, BatchNormStats* observed, double eps) {
  require_rank(x, 2, "batch_norm", "x");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (gamma.size() != c || beta.size() != c) shape_error("batch_norm", "parameter extent mismatch");
  std::vector<double> mean(c, 0.0), var(c, 1.0);
  if (training && n > 0) {
    std::fill(var.begin(), var.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < c; ++j) mean[j] += x.values()[r * c + j];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = x.values()[r * c + j] - mean[j];
        var[j] += d * d;
      }
    for (auto& v : var) v /= static_cast<double>(n);
    if (observed) *observed = BatchNormStats{mean, var};
  } else if (!training) {
    if (running.mean.size() != c || running.var.size() != c) shape_error("batch_norm", "running stats extent mismatch");
    mean = running.mean;
    var = running.var;
  }
  std::vector<double> inv(c);
  for (std::size_t j = 0; j < c; ++j) inv[j] = 1.0 / std::sqrt(var[j] + eps);
  std::vector<double> xhat(n * c);
  auto out = make_node(x.shape(), "batch_norm", {&x, &gamma, &beta});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (x.values()[r * c + j] - mean[j]) * inv[j];
      xhat[r * c + j] = h;
      out->value[r * c + j] = static_cast<Real>(h * gamma.values()[j] + beta.values()[j]);
    }
  if (out->requires_grad) {
    const bool gx = wants_grad(x), gg = wants_grad(gamma), gb = wants_grad(beta);
    out->backward = [n, c, gx, gg, gb, training, inv = std::move(inv), xhat = std::move(xhat)](Node& self) {
      Node& xn = *self.parents[0];
      Node& gn = *self.parents[1];
      Node& bn = *self.parents[2];
      std::vector<double> dg(c, 0.0), db(c, 0.0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) {
          const double g = self.grad[r * c + j];
          dg[j] += g * xhat[r * c + j];
          db[j] += g;
        }
      if (gg) {
        gn.ensure_grad();
        for (std::size_t j = 0; j < c; ++j) gn.grad[j] += static_cast<Real>(dg[j]);
      }
      if (gb) {
        bn.ensure_grad();
        for (std::size_t j = 0; j < c; ++j) bn.grad[j] += static_cast<Real>(db[j]);
      }
      if (gx) {
        xn.ensure_grad();
        const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t j = 0; j < c; ++j) {
            const double gh = self.grad[r * c + j] * gn.value[j];
            double dx;
            if (training) {
              // d xhat / dx with batch statistics
              dx = inv[j] * (gh - inv_n * db[j] * gn.value[j] - xhat[r * c + j] * inv_n * dg[j] * gn.value[j]);
            } else {
              dx = gh * inv[j];
            }
            xn.grad[r * c + j] += static_cast<Real>(dx);
          }
      }
    };
  }
  return Tensor(out);
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  auto out = make_node(x.shape(), "dropout", {&x});
  std::vector<Real> mask(x.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Real keep = static_cast<Real>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = u(rng) < rate ? Real(0) : keep;
    out->value[i] = x.values()[i] * mask[i];
  }
  if (out->requires_grad) {
    out->backward = [mask = std::move(mask)](Node& self) {
      Node& xn = *self.parents[0];
      xn.ensure_grad();
      for (std::size_t i = 0; i < mask.size(); ++i) xn.grad[i] += self.grad[i] * mask[i];
    };
  }
  return Tensor(out);
}

}  // namespace ppu::tensor
