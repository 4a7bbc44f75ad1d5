// include/sslab/numerics/ops.h

// Copyright 2026  The sslab Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Differentiable operations.  Matrices are row-major 2-D tensors; "rows" is
// the time axis everywhere in this library.

#ifndef SSLAB_NUMERICS_OPS_H_
#define SSLAB_NUMERICS_OPS_H_

#include <random>
#include <span>
#include <vector>

#include "sslab/numerics/tensor.h"

namespace sslab::ops {

// Linear algebra.
Tensor MatMul(const Tensor &a, const Tensor &b);          // (m,k)·(k,n)
Tensor MatMulTransB(const Tensor &a, const Tensor &b);    // (m,k)·(n,k)ᵀ
Tensor Transpose(const Tensor &a);
// x·w + b, with x (m,k), w (k,n), b (n).
Tensor Linear(const Tensor &x, const Tensor &w, const Tensor &b);

// Elementwise, identical shapes.
Tensor Add(const Tensor &a, const Tensor &b);
Tensor Sub(const Tensor &a, const Tensor &b);
Tensor Mul(const Tensor &a, const Tensor &b);
// x (m,n) + b (n) broadcast over rows.
Tensor AddRow(const Tensor &x, const Tensor &b);
Tensor Scale(const Tensor &x, double c);
Tensor AddScalar(const Tensor &x, double c);

Tensor Relu(const Tensor &x);
Tensor Sigmoid(const Tensor &x);
Tensor Silu(const Tensor &x);
Tensor Tanh(const Tensor &x);
Tensor Exp(const Tensor &x);
Tensor Log(const Tensor &x);
Tensor Square(const Tensor &x);

// Reductions (64-bit accumulation).
Tensor Sum(const Tensor &x);
Tensor Mean(const Tensor &x);
// (m,n) -> (n): mean over rows.
Tensor MeanRows(const Tensor &x);

// Row-wise normalizations over the last axis of an (m,n) matrix.
Tensor LayerNorm(const Tensor &x, const Tensor &gamma, const Tensor &beta, double eps = 1e-5);
Tensor Softmax(const Tensor &x);
Tensor LogSoftmax(const Tensor &x);
// Throws ContractError on a zero-norm row.
Tensor L2NormalizeRows(const Tensor &x);

// Structural.
Tensor Reshape(const Tensor &x, Shape shape);
Tensor SliceCols(const Tensor &x, int64_t start, int64_t count);
Tensor SliceRows(const Tensor &x, int64_t start, int64_t count);
Tensor ConcatCols(std::span<const Tensor> parts);
Tensor ConcatRows(std::span<const Tensor> parts);
// out[i] = x.flat[index[i]]; backward scatter-adds.
Tensor Gather(const Tensor &x, std::vector<int64_t> index, Shape out_shape);
Tensor GatherRows(const Tensor &x, std::span<const int64_t> rows);
// Rows with replace[r] != 0 become `row` (shape (n)); others pass through.
Tensor ReplaceRows(const Tensor &x, const std::vector<char> &replace, const Tensor &row);

// First half of the columns gated by the sigmoid of the second half.
Tensor Glu(const Tensor &x);
// x (T,C), w (k,C), b (C); zero "same" padding, k odd.
Tensor DepthwiseConv1d(const Tensor &x, const Tensor &w, const Tensor &b);
// x (H,W,Cin) channels-last, w (kh*kw*Cin, Cout) in (kh,kw,cin) order, b (Cout).
// Output (Hout,Wout,Cout) with Hout = floor((H + 2*pad - kh)/stride) + 1.
Tensor Conv2d(const Tensor &x, const Tensor &w, const Tensor &b, int64_t kh, int64_t kw,
              int64_t stride, int64_t pad);

// Inverted dropout.  Identity when p == 0.
Tensor Dropout(const Tensor &x, double p, std::mt19937_64 &rng);

// Mean binary cross-entropy of sigmoid(logits) against {0,1} targets.
Tensor BceWithLogits(const Tensor &logits, const Tensor &targets);

}  // namespace sslab::ops

#endif  // SSLAB_NUMERICS_OPS_H_
