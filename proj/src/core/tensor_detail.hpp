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

#include <functional>
#include <initializer_list>

#include "rkiqt/core/tensor.hpp"

namespace rkiqt::detail {

Tensor alloc(Shape shape);
void attach(Tensor& out, std::initializer_list<Tensor> parents,
            std::function<void(TensorNode&)> bw);
void acc_grad(TensorNode* dst, const std::vector<Scalar>& g);

}  // namespace rkiqt::detail
