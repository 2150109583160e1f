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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rkiqt/core/error.hpp"

namespace rkiqt {

using Scalar = double;
using idx_t = std::int64_t;
using Shape = std::vector<idx_t>;

idx_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One vertex of the reverse-mode tape. Values are dense row-major doubles;
// grad is allocated lazily on first accumulation.
struct TensorNode {
  Shape shape;
  std::vector<Scalar> val;
  std::vector<Scalar> grad;
  bool requires_grad = false;
  bool retain_grad = false;  // keep grad on non-leaf nodes (diagnostics)
  bool is_leaf = true;
  std::vector<NodePtr> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::vector<Scalar>& ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
    return grad;
  }
};

// Value-semantics handle onto a shared node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar v);
  static Tensor from(Shape shape, std::vector<Scalar> data,
                     bool requires_grad = false);
  static Tensor scalar(Scalar v);

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  idx_t numel() const { return idx_t(n_->val.size()); }
  std::size_t ndim() const { return n_->shape.size(); }
  idx_t dim(std::size_t i) const { return n_->shape[i]; }

  std::vector<Scalar>& data() { return n_->val; }
  const std::vector<Scalar>& data() const { return n_->val; }
  std::vector<Scalar>& grad() { return n_->ensure_grad(); }
  bool has_grad() const { return !n_->grad.empty(); }

  bool requires_grad() const { return n_ && n_->requires_grad; }
  void set_requires_grad(bool v) {
    n_->requires_grad = v;
    n_->is_leaf = true;
  }
  void retain_grad() { n_->retain_grad = true; }
  void zero_grad() { n_->grad.clear(); }

  Scalar item() const {
    check(numel() == 1, Err::ShapeMismatch, "item() on non-scalar tensor");
    return n_->val[0];
  }

  Tensor detach() const;  // copy values into a fresh constant leaf
  Tensor clone_values() const { return detach(); }

  NodePtr node() const { return n_; }
  static Tensor wrap(NodePtr n) {
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

 private:
  NodePtr n_;
};

// Reverse pass from a scalar loss. Accumulates into .grad of every
// requires_grad node reachable from it (non-leaves only if retain_grad).
void backward(const Tensor& loss);

bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// ---- differentiable ops ------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Scalar s);
Tensor add_scalar(const Tensor& a, Scalar s);
Tensor abs_t(const Tensor& a);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);

// x:[..., K] * W:[K, N] + b:[N]; leading dims are flattened into rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b = Tensor());
Tensor matmul(const Tensor& a, const Tensor& b);  // strict 2-D

// a:[B,M,K] x b:[B,K,N]  (trans_b: b:[B,N,K], contracted over K)
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b = false);

Tensor softmax_last(const Tensor& x);
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Scalar eps = 1e-6);

Tensor narrow(const Tensor& x, std::size_t axis, idx_t start, idx_t len);
Tensor concat(const std::vector<Tensor>& xs, std::size_t axis);
Tensor reshape(const Tensor& x, Shape new_shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// x:[B,C,H,W] conv w:[Co,Ci,k,k] (+ b:[Co]) stride/pad, zero padding
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, idx_t stride,
              idx_t pad);
Tensor avg_pool(const Tensor& x, idx_t k, idx_t stride);
Tensor spatial_mean(const Tensor& x);  // [B,C,H,W] -> [B,C]

// Site-wise kernels shared across channels of a group:
// x:[B,C,H,W], ker:[B,G,K*K,Ho,Wo] -> [B,C,Ho,Wo]
Tensor involution_apply(const Tensor& x, const Tensor& ker, idx_t ksize,
                        idx_t stride, idx_t pad, idx_t groups);

// x:[B,T,D]; masked tokens are replaced by the learnable fill row.
Tensor mask_tokens(const Tensor& x, const std::vector<std::uint8_t>& mask,
                   const Tensor& fill);

// x:[B, rest...] + p:[rest...], p broadcast over axis 0
Tensor add_broadcast0(const Tensor& x, const Tensor& p);

Tensor detach(const Tensor& x);

// Composite conveniences.
Tensor l1_mean(const Tensor& a, const Tensor& b);  // mean |a-b|

}  // namespace rkiqt
