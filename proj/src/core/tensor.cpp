// Copyright (c) the RKIQT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tape mechanics and the shape-preserving ops. Dense linear algebra and the
// structured operators live in tensor_nn.cpp.

#include "rkiqt/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "rkiqt/core/kernels.hpp"

namespace rkiqt {

idx_t shape_numel(const Shape& s) {
  idx_t n = 1;
  for (idx_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->val.assign(std::size_t(shape_numel(shape)), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::full(Shape shape, Scalar v) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.data().begin(), t.data().end(), v);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<Scalar> data, bool requires_grad) {
  check(idx_t(data.size()) == shape_numel(shape), Err::ShapeMismatch,
        "tensor data size does not match shape " + shape_str(shape));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->val = std::move(data);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::scalar(Scalar v) { return from({1}, {v}); }

Tensor Tensor::detach() const {
  auto n = std::make_shared<TensorNode>();
  n->shape = n_->shape;
  n->val = n_->val;
  return wrap(std::move(n));
}

Tensor detach(const Tensor& x) { return x.detach(); }

namespace detail {

Tensor alloc(Shape shape) { return Tensor::zeros(std::move(shape)); }

// Wires out into the tape when grads are enabled and any input needs them.
void attach(Tensor& out, std::initializer_list<Tensor> parents,
            std::function<void(TensorNode&)> bw) {
  if (!t_grad_enabled) return;
  bool req = false;
  for (const Tensor& p : parents) req = req || p.requires_grad();
  if (!req) return;
  TensorNode* n = out.node().get();
  n->requires_grad = true;
  n->is_leaf = false;
  n->parents.reserve(parents.size());
  for (const Tensor& p : parents)
    if (p.defined()) n->parents.push_back(p.node());
  n->backward_fn = std::move(bw);
}

void acc_grad(TensorNode* dst, const std::vector<Scalar>& g) {
  auto& gd = dst->ensure_grad();
  kern::active().vaxpy(idx_t(g.size()), 1.0, g.data(), gd.data());
}

}  // namespace detail

using detail::acc_grad;
using detail::alloc;
using detail::attach;

void backward(const Tensor& loss) {
  check(loss.defined() && loss.numel() == 1, Err::ShapeMismatch,
        "backward expects a scalar loss");
  TensorNode* root = loss.node().get();
  if (!root->requires_grad) return;

  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  struct Frame {
    TensorNode* n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      TensorNode* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->is_leaf || !n->backward_fn) continue;
    if (n->grad.empty()) continue;  // nothing flowed into this branch
    n->backward_fn(*n);
    if (!n->retain_grad) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

// ---- elementwise --------------------------------------------------------

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check(a.shape() == b.shape(), Err::ShapeMismatch,
        std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
            shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = alloc(a.shape());
  kern::active().vadd(a.numel(), a.data().data(), b.data().data(),
                      out.data().data());
  attach(out, {a, b},
         [pa = a.node().get(), pb = b.node().get()](TensorNode& self) {
           if (pa->requires_grad) acc_grad(pa, self.grad);
           if (pb->requires_grad) acc_grad(pb, self.grad);
         });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = alloc(a.shape());
  kern::active().vsub(a.numel(), a.data().data(), b.data().data(),
                      out.data().data());
  attach(out, {a, b},
         [pa = a.node().get(), pb = b.node().get()](TensorNode& self) {
           if (pa->requires_grad) acc_grad(pa, self.grad);
           if (pb->requires_grad) {
             auto& g = pb->ensure_grad();
             kern::active().vaxpy(idx_t(g.size()), -1.0, self.grad.data(),
                                  g.data());
           }
         });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = alloc(a.shape());
  kern::active().vmul(a.numel(), a.data().data(), b.data().data(),
                      out.data().data());
  attach(out, {a, b},
         [pa = a.node().get(), pb = b.node().get()](TensorNode& self) {
           const idx_t n = idx_t(self.val.size());
           if (pa->requires_grad) {
             auto& g = pa->ensure_grad();
             for (idx_t i = 0; i < n; ++i) g[i] += self.grad[i] * pb->val[i];
           }
           if (pb->requires_grad) {
             auto& g = pb->ensure_grad();
             for (idx_t i = 0; i < n; ++i) g[i] += self.grad[i] * pa->val[i];
           }
         });
  return out;
}

Tensor scale(const Tensor& a, Scalar s) {
  Tensor out = alloc(a.shape());
  kern::active().vscale(a.numel(), s, a.data().data(), out.data().data());
  attach(out, {a}, [pa = a.node().get(), s](TensorNode& self) {
    if (!pa->requires_grad) return;
    auto& g = pa->ensure_grad();
    kern::active().vaxpy(idx_t(g.size()), s, self.grad.data(), g.data());
  });
  return out;
}

Tensor add_scalar(const Tensor& a, Scalar s) {
  Tensor out = alloc(a.shape());
  const idx_t n = a.numel();
  for (idx_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + s;
  attach(out, {a}, [pa = a.node().get()](TensorNode& self) {
    if (pa->requires_grad) acc_grad(pa, self.grad);
  });
  return out;
}

Tensor abs_t(const Tensor& a) {
  Tensor out = alloc(a.shape());
  const idx_t n = a.numel();
  for (idx_t i = 0; i < n; ++i) out.data()[i] = std::abs(a.data()[i]);
  attach(out, {a}, [pa = a.node().get()](TensorNode& self) {
    if (!pa->requires_grad) return;
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Scalar x = pa->val[i];
      g[i] += self.grad[i] * (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0));
    }
  });
  return out;
}

Tensor square(const Tensor& a) {
  Tensor out = alloc(a.shape());
  kern::active().vmul(a.numel(), a.data().data(), a.data().data(),
                      out.data().data());
  attach(out, {a}, [pa = a.node().get()](TensorNode& self) {
    if (!pa->requires_grad) return;
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * 2.0 * pa->val[i];
  });
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = alloc(a.shape());
  kern::active().vrelu(a.numel(), a.data().data(), out.data().data());
  attach(out, {a}, [pa = a.node().get()](TensorNode& self) {
    if (!pa->requires_grad) return;
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (pa->val[i] > 0) g[i] += self.grad[i];
  });
  return out;
}

namespace {
constexpr Scalar kInvSqrt2 = 0.70710678118654752440;
constexpr Scalar kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Tensor gelu(const Tensor& a) {
  Tensor out = alloc(a.shape());
  const idx_t n = a.numel();
  for (idx_t i = 0; i < n; ++i) {
    const Scalar x = a.data()[i];
    out.data()[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  attach(out, {a}, [pa = a.node().get()](TensorNode& self) {
    if (!pa->requires_grad) return;
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Scalar x = pa->val[i];
      const Scalar cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const Scalar pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      g[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
  return out;
}

// ---- reductions ----------------------------------------------------------

Tensor sum_all(const Tensor& x) {
  Tensor out = alloc({1});
  out.data()[0] = kern::active().vsum(x.numel(), x.data().data());
  attach(out, {x}, [px = x.node().get()](TensorNode& self) {
    if (!px->requires_grad) return;
    auto& g = px->ensure_grad();
    const Scalar s = self.grad[0];
    for (auto& v : g) v += s;
  });
  return out;
}

Tensor mean_all(const Tensor& x) {
  const Scalar inv = 1.0 / Scalar(x.numel());
  Tensor out = alloc({1});
  out.data()[0] = kern::active().vsum(x.numel(), x.data().data()) * inv;
  attach(out, {x}, [px = x.node().get(), inv](TensorNode& self) {
    if (!px->requires_grad) return;
    auto& g = px->ensure_grad();
    const Scalar s = self.grad[0] * inv;
    for (auto& v : g) v += s;
  });
  return out;
}

Tensor l1_mean(const Tensor& a, const Tensor& b) {
  return mean_all(abs_t(sub(a, b)));
}

// ---- shape ops -----------------------------------------------------------

Tensor reshape(const Tensor& x, Shape new_shape) {
  check(shape_numel(new_shape) == x.numel(), Err::ShapeMismatch,
        "reshape: element count mismatch " + shape_str(x.shape()) + " -> " +
            shape_str(new_shape));
  Tensor out = alloc(std::move(new_shape));
  out.data() = x.data();
  attach(out, {x}, [px = x.node().get()](TensorNode& self) {
    if (px->requires_grad) acc_grad(px, self.grad);
  });
  return out;
}

Tensor narrow(const Tensor& x, std::size_t axis, idx_t start, idx_t len) {
  check(axis < x.ndim(), Err::ShapeMismatch, "narrow: bad axis");
  check(start >= 0 && len >= 0 && start + len <= x.dim(axis),
        Err::ShapeMismatch, "narrow: slice out of range");
  Shape oshape = x.shape();
  oshape[axis] = len;
  idx_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
  const idx_t dim = x.dim(axis);

  Tensor out = alloc(std::move(oshape));
  const Scalar* src = x.data().data();
  Scalar* dst = out.data().data();
  for (idx_t o = 0; o < outer; ++o)
    std::copy(src + (o * dim + start) * inner, src + (o * dim + start + len) * inner,
              dst + o * len * inner);

  attach(out, {x},
         [px = x.node().get(), outer, inner, dim, start, len](TensorNode& self) {
           if (!px->requires_grad) return;
           auto& g = px->ensure_grad();
           const Scalar* gs = self.grad.data();
           for (idx_t o = 0; o < outer; ++o) {
             Scalar* grow = g.data() + (o * dim + start) * inner;
             const Scalar* srow = gs + o * len * inner;
             for (idx_t i = 0; i < len * inner; ++i) grow[i] += srow[i];
           }
         });
  return out;
}

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis) {
  check(!xs.empty(), Err::InvalidArgument, "concat: empty input list");
  const Tensor& first = xs.front();
  check(axis < first.ndim(), Err::ShapeMismatch, "concat: bad axis");
  Shape oshape = first.shape();
  idx_t total = 0;
  for (const Tensor& t : xs) {
    check(t.ndim() == first.ndim(), Err::ShapeMismatch, "concat: rank mismatch");
    for (std::size_t i = 0; i < first.ndim(); ++i)
      if (i != axis)
        check(t.dim(i) == first.dim(i), Err::ShapeMismatch,
              "concat: dim mismatch");
    total += t.dim(axis);
  }
  oshape[axis] = total;

  idx_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first.dim(i);
  for (std::size_t i = axis + 1; i < first.ndim(); ++i) inner *= first.dim(i);

  Tensor out = alloc(oshape);
  Scalar* dst = out.data().data();
  idx_t off = 0;
  for (const Tensor& t : xs) {
    const idx_t d = t.dim(axis);
    const Scalar* src = t.data().data();
    for (idx_t o = 0; o < outer; ++o)
      std::copy(src + o * d * inner, src + (o + 1) * d * inner,
                dst + (o * total + off) * inner);
    off += d;
  }

  // parents: all inputs, grads routed back by slice position
  bool req = false;
  for (const Tensor& t : xs) req = req || t.requires_grad();
  if (grad_enabled() && req) {
    std::vector<TensorNode*> raw;
    std::vector<idx_t> dims;
    for (const Tensor& t : xs) {
      raw.push_back(t.node().get());
      dims.push_back(t.dim(axis));
    }
    TensorNode* n = out.node().get();
    n->requires_grad = true;
    n->is_leaf = false;
    for (const Tensor& t : xs) n->parents.push_back(t.node());
    n->backward_fn = [raw, dims, outer, inner, total](TensorNode& self) {
      idx_t off2 = 0;
      for (std::size_t j = 0; j < raw.size(); ++j) {
        const idx_t d = dims[j];
        if (raw[j]->requires_grad) {
          auto& g = raw[j]->ensure_grad();
          for (idx_t o = 0; o < outer; ++o) {
            const Scalar* srow = self.grad.data() + (o * total + off2) * inner;
            Scalar* grow = g.data() + o * d * inner;
            for (idx_t i = 0; i < d * inner; ++i) grow[i] += srow[i];
          }
        }
        off2 += d;
      }
    };
  }
  return out;
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm) {
  const std::size_t nd = x.ndim();
  check(perm.size() == nd, Err::ShapeMismatch, "permute: rank mismatch");
  Shape oshape(nd);
  for (std::size_t i = 0; i < nd; ++i) oshape[i] = x.dim(perm[i]);

  std::vector<idx_t> xstride(nd, 1), ostride(nd, 1);
  for (std::size_t i = nd - 1; i > 0; --i)
    xstride[i - 1] = xstride[i] * x.dim(i);
  for (std::size_t i = nd - 1; i > 0; --i)
    ostride[i - 1] = ostride[i] * oshape[i];

  // stride of out dim i in the source layout
  std::vector<idx_t> src_stride(nd);
  for (std::size_t i = 0; i < nd; ++i) src_stride[i] = xstride[perm[i]];

  Tensor out = alloc(oshape);
  const idx_t n = x.numel();
  const Scalar* src = x.data().data();
  Scalar* dst = out.data().data();
  std::vector<idx_t> counter(nd, 0);
  idx_t sidx = 0;
  for (idx_t flat = 0; flat < n; ++flat) {
    dst[flat] = src[sidx];
    for (std::size_t i = nd; i-- > 0;) {
      if (++counter[i] < oshape[i]) {
        sidx += src_stride[i];
        break;
      }
      counter[i] = 0;
      sidx -= src_stride[i] * (oshape[i] - 1);
    }
  }

  attach(out, {x},
         [px = x.node().get(), oshape, src_stride, nd, n](TensorNode& self) {
           if (!px->requires_grad) return;
           auto& g = px->ensure_grad();
           std::vector<idx_t> counter(nd, 0);
           idx_t sidx = 0;
           for (idx_t flat = 0; flat < n; ++flat) {
             g[sidx] += self.grad[flat];
             for (std::size_t i = nd; i-- > 0;) {
               if (++counter[i] < oshape[i]) {
                 sidx += src_stride[i];
                 break;
               }
               counter[i] = 0;
               sidx -= src_stride[i] * (oshape[i] - 1);
             }
           }
         });
  return out;
}

// ---- row-normalizing ops ---------------------------------------------------

Tensor softmax_last(const Tensor& x) {
  check(x.ndim() >= 1, Err::ShapeMismatch, "softmax: rank 0");
  const idx_t d = x.dim(x.ndim() - 1);
  const idx_t rows = x.numel() / d;
  Tensor out = alloc(x.shape());
  const Scalar* src = x.data().data();
  Scalar* dst = out.data().data();
  for (idx_t r = 0; r < rows; ++r) {
    const Scalar* xi = src + r * d;
    Scalar* yi = dst + r * d;
    Scalar mx = xi[0];
    for (idx_t i = 1; i < d; ++i) mx = std::max(mx, xi[i]);
    Scalar sum = 0;
    for (idx_t i = 0; i < d; ++i) {
      yi[i] = std::exp(xi[i] - mx);
      sum += yi[i];
    }
    const Scalar inv = 1.0 / sum;
    for (idx_t i = 0; i < d; ++i) yi[i] *= inv;
  }
  attach(out, {x}, [px = x.node().get(), rows, d](TensorNode& self) {
    if (!px->requires_grad) return;
    auto& g = px->ensure_grad();
    for (idx_t r = 0; r < rows; ++r) {
      const Scalar* y = self.val.data() + r * d;
      const Scalar* go = self.grad.data() + r * d;
      Scalar dot = 0;
      for (idx_t i = 0; i < d; ++i) dot += go[i] * y[i];
      Scalar* gi = g.data() + r * d;
      for (idx_t i = 0; i < d; ++i) gi[i] += y[i] * (go[i] - dot);
    }
  });
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Scalar eps) {
  const idx_t d = x.dim(x.ndim() - 1);
  check(gamma.numel() == d && beta.numel() == d, Err::ShapeMismatch,
        "layernorm: gamma/beta size mismatch");
  const idx_t rows = x.numel() / d;

  auto xhat = std::make_shared<std::vector<Scalar>>(std::size_t(rows * d));
  auto inv_std = std::make_shared<std::vector<Scalar>>(std::size_t(rows));

  Tensor out = alloc(x.shape());
  const Scalar* src = x.data().data();
  const Scalar* gm = gamma.data().data();
  const Scalar* bt = beta.data().data();
  Scalar* dst = out.data().data();
  for (idx_t r = 0; r < rows; ++r) {
    const Scalar* xi = src + r * d;
    Scalar mean = 0;
    for (idx_t i = 0; i < d; ++i) mean += xi[i];
    mean /= Scalar(d);
    Scalar var = 0;
    for (idx_t i = 0; i < d; ++i) {
      const Scalar c = xi[i] - mean;
      var += c * c;
    }
    var /= Scalar(d);
    const Scalar is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[std::size_t(r)] = is;
    Scalar* xh = xhat->data() + r * d;
    Scalar* yo = dst + r * d;
    for (idx_t i = 0; i < d; ++i) {
      xh[i] = (xi[i] - mean) * is;
      yo[i] = xh[i] * gm[i] + bt[i];
    }
  }

  attach(out, {x, gamma, beta},
         [px = x.node().get(), pg = gamma.node().get(), pb = beta.node().get(),
          xhat, inv_std, rows, d](TensorNode& self) {
           const Scalar* go = self.grad.data();
           if (pg->requires_grad) {
             auto& gg = pg->ensure_grad();
             for (idx_t r = 0; r < rows; ++r)
               for (idx_t i = 0; i < d; ++i)
                 gg[i] += go[r * d + i] * (*xhat)[std::size_t(r * d + i)];
           }
           if (pb->requires_grad) {
             auto& gb = pb->ensure_grad();
             for (idx_t r = 0; r < rows; ++r)
               for (idx_t i = 0; i < d; ++i) gb[i] += go[r * d + i];
           }
           if (px->requires_grad) {
             auto& gx = px->ensure_grad();
             const Scalar* gm = pg->val.data();
             for (idx_t r = 0; r < rows; ++r) {
               const Scalar* xh = xhat->data() + r * d;
               const Scalar* g = go + r * d;
               Scalar sum_dxhat = 0, sum_dxhat_xhat = 0;
               for (idx_t i = 0; i < d; ++i) {
                 const Scalar dxh = g[i] * gm[i];
                 sum_dxhat += dxh;
                 sum_dxhat_xhat += dxh * xh[i];
               }
               const Scalar is = (*inv_std)[std::size_t(r)];
               Scalar* gxi = gx.data() + r * d;
               for (idx_t i = 0; i < d; ++i) {
                 const Scalar dxh = g[i] * gm[i];
                 gxi[i] += is * (dxh - (sum_dxhat + xh[i] * sum_dxhat_xhat) /
                                           Scalar(d));
               }
             }
           }
         });
  return out;
}

}  // namespace rkiqt
