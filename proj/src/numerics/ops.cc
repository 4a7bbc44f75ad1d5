// src/numerics/ops.cc

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

#include "sslab/numerics/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

namespace sslab::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;
using GradBufs = std::span<std::vector<double> *>;

void Require(bool cond, const std::string &msg) {
  if (!cond) throw ContractError(msg);
}

void RequireMatrix(const Tensor &t, const char *op) {
  Require(t.defined() && t.ndim() == 2,
          std::string(op) + ": expected a matrix, got " +
              (t.defined() ? ShapeString(t.shape()) : std::string("<undefined>")));
}

void RequireSameShape(const Tensor &a, const Tensor &b, const char *op) {
  Require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
}

CMap AsMat(const std::vector<double> &v, int64_t r, int64_t c) { return CMap(v.data(), r, c); }
MMap AsMat(std::vector<double> &v, int64_t r, int64_t c) { return MMap(v.data(), r, c); }

template <typename F, typename DF>
Tensor Unary(const Tensor &x, F f, DF df) {
  std::vector<double> out(x.size());
  const auto &xv = x.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return Tensor::MakeOp(x.shape(), std::move(out), {x},
                        [x, df](const std::vector<double> &y, const std::vector<double> &g,
                                GradBufs pg) {
                          const auto &xv = x.values();
                          auto &dx = *pg[0];
                          for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * df(xv[i], y[i]);
                        });
}

double SigmoidScalar(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tensor MatMul(const Tensor &a, const Tensor &b) {
  RequireMatrix(a, "MatMul");
  RequireMatrix(b, "MatMul");
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Require(b.rows() == k, "MatMul: inner dimensions " + ShapeString(a.shape()) + " x " +
                             ShapeString(b.shape()));
  std::vector<double> out(m * n);
  AsMat(out, m, n).noalias() = AsMat(a.values(), m, k) * AsMat(b.values(), k, n);
  return Tensor::MakeOp({m, n}, std::move(out), {a, b},
                        [a, b, m, k, n](const std::vector<double> &, const std::vector<double> &g,
                                        GradBufs pg) {
                          auto dy = AsMat(g, m, n);
                          if (pg[0]) AsMat(*pg[0], m, k).noalias() += dy * AsMat(b.values(), k, n).transpose();
                          if (pg[1]) AsMat(*pg[1], k, n).noalias() += AsMat(a.values(), m, k).transpose() * dy;
                        });
}

Tensor MatMulTransB(const Tensor &a, const Tensor &b) {
  RequireMatrix(a, "MatMulTransB");
  RequireMatrix(b, "MatMulTransB");
  const int64_t m = a.rows(), k = a.cols(), n = b.rows();
  Require(b.cols() == k, "MatMulTransB: inner dimensions " + ShapeString(a.shape()) + " x " +
                             ShapeString(b.shape()) + "^T");
  std::vector<double> out(m * n);
  AsMat(out, m, n).noalias() = AsMat(a.values(), m, k) * AsMat(b.values(), n, k).transpose();
  return Tensor::MakeOp({m, n}, std::move(out), {a, b},
                        [a, b, m, k, n](const std::vector<double> &, const std::vector<double> &g,
                                        GradBufs pg) {
                          auto dy = AsMat(g, m, n);
                          if (pg[0]) AsMat(*pg[0], m, k).noalias() += dy * AsMat(b.values(), n, k);
                          if (pg[1]) AsMat(*pg[1], n, k).noalias() += dy.transpose() * AsMat(a.values(), m, k);
                        });
}

Tensor Transpose(const Tensor &a) {
  RequireMatrix(a, "Transpose");
  const int64_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  AsMat(out, n, m) = AsMat(a.values(), m, n).transpose();
  return Tensor::MakeOp({n, m}, std::move(out), {a},
                        [m, n](const std::vector<double> &, const std::vector<double> &g,
                               GradBufs pg) { AsMat(*pg[0], m, n) += AsMat(g, n, m).transpose(); });
}

Tensor Linear(const Tensor &x, const Tensor &w, const Tensor &b) {
  RequireMatrix(x, "Linear");
  RequireMatrix(w, "Linear");
  const int64_t m = x.rows(), k = x.cols(), n = w.cols();
  Require(w.rows() == k, "Linear: input width " + std::to_string(k) + " vs weight " +
                             ShapeString(w.shape()));
  Require(b.ndim() == 1 && b.dim(0) == n, "Linear: bias " + ShapeString(b.shape()) +
                                              " does not match output width " + std::to_string(n));
  std::vector<double> out(m * n);
  auto y = AsMat(out, m, n);
  y.noalias() = AsMat(x.values(), m, k) * AsMat(w.values(), k, n);
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data(), n);
  return Tensor::MakeOp({m, n}, std::move(out), {x, w, b},
                        [x, w, m, k, n](const std::vector<double> &, const std::vector<double> &g,
                                        GradBufs pg) {
                          auto dy = AsMat(g, m, n);
                          if (pg[0]) AsMat(*pg[0], m, k).noalias() += dy * AsMat(w.values(), k, n).transpose();
                          if (pg[1]) AsMat(*pg[1], k, n).noalias() += AsMat(x.values(), m, k).transpose() * dy;
                          if (pg[2]) Eigen::Map<Eigen::RowVectorXd>(pg[2]->data(), n) += dy.colwise().sum();
                        });
}

Tensor Add(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "Add");
  std::vector<double> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return Tensor::MakeOp(a.shape(), std::move(out), {a, b},
                        [](const std::vector<double> &, const std::vector<double> &g, GradBufs pg) {
                          for (auto *d : pg)
                            if (d)
                              for (size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
                        });
}

Tensor Sub(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "Sub");
  std::vector<double> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return Tensor::MakeOp(a.shape(), std::move(out), {a, b},
                        [](const std::vector<double> &, const std::vector<double> &g, GradBufs pg) {
                          if (pg[0])
                            for (size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
                          if (pg[1])
                            for (size_t i = 0; i < g.size(); ++i) (*pg[1])[i] -= g[i];
                        });
}

Tensor Mul(const Tensor &a, const Tensor &b) {
  RequireSameShape(a, b, "Mul");
  std::vector<double> out(a.size());
  for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return Tensor::MakeOp(a.shape(), std::move(out), {a, b},
                        [a, b](const std::vector<double> &, const std::vector<double> &g,
                               GradBufs pg) {
                          if (pg[0])
                            for (size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * b[i];
                          if (pg[1])
                            for (size_t i = 0; i < g.size(); ++i) (*pg[1])[i] += g[i] * a[i];
                        });
}

Tensor AddRow(const Tensor &x, const Tensor &b) {
  RequireMatrix(x, "AddRow");
  const int64_t m = x.rows(), n = x.cols();
  Require(b.ndim() == 1 && b.dim(0) == n,
          "AddRow: row " + ShapeString(b.shape()) + " vs matrix " + ShapeString(x.shape()));
  std::vector<double> out(x.values());
  for (int64_t r = 0; r < m; ++r)
    for (int64_t c = 0; c < n; ++c) out[r * n + c] += b[c];
  return Tensor::MakeOp(x.shape(), std::move(out), {x, b},
                        [m, n](const std::vector<double> &, const std::vector<double> &g,
                               GradBufs pg) {
                          if (pg[0])
                            for (size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
                          if (pg[1])
                            for (int64_t r = 0; r < m; ++r)
                              for (int64_t c = 0; c < n; ++c) (*pg[1])[c] += g[r * n + c];
                        });
}

Tensor Scale(const Tensor &x, double c) {
  return Unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Tensor AddScalar(const Tensor &x, double c) {
  return Unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor Relu(const Tensor &x) {
  return Unary(x, [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor Sigmoid(const Tensor &x) {
  return Unary(x, SigmoidScalar, [](double, double y) { return y * (1.0 - y); });
}

Tensor Silu(const Tensor &x) {
  return Unary(x, [](double v) { return v * SigmoidScalar(v); },
               [](double v, double) {
                 double s = SigmoidScalar(v);
                 return s * (1.0 + v * (1.0 - s));
               });
}

Tensor Tanh(const Tensor &x) {
  return Unary(x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor Exp(const Tensor &x) {
  return Unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor Log(const Tensor &x) {
  return Unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor Square(const Tensor &x) {
  return Unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor Sum(const Tensor &x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return Tensor::MakeOp({}, {s}, {x},
                        [](const std::vector<double> &, const std::vector<double> &g, GradBufs pg) {
                          for (double &d : *pg[0]) d += g[0];
                        });
}

Tensor Mean(const Tensor &x) {
  Require(x.size() > 0, "Mean of an empty tensor");
  const double inv = 1.0 / static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x.values()) s += v;
  return Tensor::MakeOp({}, {s * inv}, {x},
                        [inv](const std::vector<double> &, const std::vector<double> &g,
                              GradBufs pg) {
                          for (double &d : *pg[0]) d += g[0] * inv;
                        });
}

Tensor MeanRows(const Tensor &x) {
  RequireMatrix(x, "MeanRows");
  const int64_t m = x.rows(), n = x.cols();
  Require(m > 0, "MeanRows over zero rows");
  std::vector<double> out(n, 0.0);
  for (int64_t r = 0; r < m; ++r)
    for (int64_t c = 0; c < n; ++c) out[c] += x[r * n + c];
  for (double &v : out) v /= static_cast<double>(m);
  return Tensor::MakeOp({n}, std::move(out), {x},
                        [m, n](const std::vector<double> &, const std::vector<double> &g,
                               GradBufs pg) {
                          const double inv = 1.0 / static_cast<double>(m);
                          for (int64_t r = 0; r < m; ++r)
                            for (int64_t c = 0; c < n; ++c) (*pg[0])[r * n + c] += g[c] * inv;
                        });
}

Tensor LayerNorm(const Tensor &x, const Tensor &gamma, const Tensor &beta, double eps) {
  RequireMatrix(x, "LayerNorm");
  const int64_t m = x.rows(), n = x.cols();
  Require(gamma.ndim() == 1 && gamma.dim(0) == n && beta.ndim() == 1 && beta.dim(0) == n,
          "LayerNorm: affine parameters do not match width " + std::to_string(n));
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  std::vector<double> out(m * n);
  for (int64_t r = 0; r < m; ++r) {
    const double *row = x.data() + r * n;
    double mu = 0.0;
    for (int64_t c = 0; c < n; ++c) mu += row[c];
    mu /= n;
    double var = 0.0;
    for (int64_t c = 0; c < n; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int64_t c = 0; c < n; ++c) {
      double h = (row[c] - mu) * is;
      (*xhat)[r * n + c] = h;
      out[r * n + c] = gamma[c] * h + beta[c];
    }
  }
  return Tensor::MakeOp(
      x.shape(), std::move(out), {x, gamma, beta},
      [gamma, xhat, inv_std, m, n](const std::vector<double> &, const std::vector<double> &g,
                                   GradBufs pg) {
        std::vector<double> dh(n);
        for (int64_t r = 0; r < m; ++r) {
          const double *h = xhat->data() + r * n;
          const double *gy = g.data() + r * n;
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (int64_t c = 0; c < n; ++c) {
            dh[c] = gy[c] * gamma[c];
            mean_dh += dh[c];
            mean_dh_h += dh[c] * h[c];
            if (pg[1]) (*pg[1])[c] += gy[c] * h[c];
            if (pg[2]) (*pg[2])[c] += gy[c];
          }
          mean_dh /= n;
          mean_dh_h /= n;
          if (pg[0]) {
            double *dx = pg[0]->data() + r * n;
            for (int64_t c = 0; c < n; ++c)
              dx[c] += (*inv_std)[r] * (dh[c] - mean_dh - h[c] * mean_dh_h);
          }
        }
      });
}

Tensor Softmax(const Tensor &x) {
  RequireMatrix(x, "Softmax");
  const int64_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  for (int64_t r = 0; r < m; ++r) {
    const double *row = x.data() + r * n;
    double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (int64_t c = 0; c < n; ++c) z += (out[r * n + c] = std::exp(row[c] - mx));
    for (int64_t c = 0; c < n; ++c) out[r * n + c] /= z;
  }
  return Tensor::MakeOp(x.shape(), std::move(out), {x},
                        [m, n](const std::vector<double> &y, const std::vector<double> &g,
                               GradBufs pg) {
                          for (int64_t r = 0; r < m; ++r) {
                            double dot = 0.0;
                            for (int64_t c = 0; c < n; ++c) dot += g[r * n + c] * y[r * n + c];
                            for (int64_t c = 0; c < n; ++c)
                              (*pg[0])[r * n + c] += y[r * n + c] * (g[r * n + c] - dot);
                          }
                        });
}

Tensor LogSoftmax(const Tensor &x) {
  RequireMatrix(x, "LogSoftmax");
  const int64_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  for (int64_t r = 0; r < m; ++r) {
    const double *row = x.data() + r * n;
    double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (int64_t c = 0; c < n; ++c) z += std::exp(row[c] - mx);
    const double lse = mx + std::log(z);
    for (int64_t c = 0; c < n; ++c) out[r * n + c] = row[c] - lse;
  }
  return Tensor::MakeOp(x.shape(), std::move(out), {x},
                        [m, n](const std::vector<double> &y, const std::vector<double> &g,
                               GradBufs pg) {
                          for (int64_t r = 0; r < m; ++r) {
                            double gs = 0.0;
                            for (int64_t c = 0; c < n; ++c) gs += g[r * n + c];
                            for (int64_t c = 0; c < n; ++c)
                              (*pg[0])[r * n + c] += g[r * n + c] - std::exp(y[r * n + c]) * gs;
                          }
                        });
}

Tensor L2NormalizeRows(const Tensor &x) {
  RequireMatrix(x, "L2NormalizeRows");
  const int64_t m = x.rows(), n = x.cols();
  auto norms = std::make_shared<std::vector<double>>(m);
  std::vector<double> out(m * n);
  for (int64_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (int64_t c = 0; c < n; ++c) s += x[r * n + c] * x[r * n + c];
    const double nrm = std::sqrt(s);
    Require(nrm > 0.0 && std::isfinite(nrm),
            "L2NormalizeRows: row " + std::to_string(r) + " has zero or non-finite norm");
    (*norms)[r] = nrm;
    for (int64_t c = 0; c < n; ++c) out[r * n + c] = x[r * n + c] / nrm;
  }
  return Tensor::MakeOp(x.shape(), std::move(out), {x},
                        [norms, m, n](const std::vector<double> &y, const std::vector<double> &g,
                                      GradBufs pg) {
                          for (int64_t r = 0; r < m; ++r) {
                            double dot = 0.0;
                            for (int64_t c = 0; c < n; ++c) dot += y[r * n + c] * g[r * n + c];
                            for (int64_t c = 0; c < n; ++c)
                              (*pg[0])[r * n + c] += (g[r * n + c] - y[r * n + c] * dot) / (*norms)[r];
                          }
                        });
}

Tensor Reshape(const Tensor &x, Shape shape) {
  Require(NumElements(shape) == x.size(),
          "Reshape: " + ShapeString(x.shape()) + " -> " + ShapeString(shape));
  return Tensor::MakeOp(std::move(shape), x.values(), {x},
                        [](const std::vector<double> &, const std::vector<double> &g, GradBufs pg) {
                          for (size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
                        });
}

Tensor SliceCols(const Tensor &x, int64_t start, int64_t count) {
  RequireMatrix(x, "SliceCols");
  const int64_t m = x.rows(), n = x.cols();
  Require(start >= 0 && count >= 0 && start + count <= n, "SliceCols: range out of bounds");
  std::vector<double> out(m * count);
  for (int64_t r = 0; r < m; ++r)
    std::copy_n(x.data() + r * n + start, count, out.data() + r * count);
  return Tensor::MakeOp({m, count}, std::move(out), {x},
                        [m, n, start, count](const std::vector<double> &,
                                             const std::vector<double> &g, GradBufs pg) {
                          for (int64_t r = 0; r < m; ++r)
                            for (int64_t c = 0; c < count; ++c)
                              (*pg[0])[r * n + start + c] += g[r * count + c];
                        });
}

Tensor SliceRows(const Tensor &x, int64_t start, int64_t count) {
  RequireMatrix(x, "SliceRows");
  const int64_t m = x.rows(), n = x.cols();
  Require(start >= 0 && count >= 0 && start + count <= m, "SliceRows: range out of bounds");
  std::vector<double> out(x.data() + start * n, x.data() + (start + count) * n);
  return Tensor::MakeOp({count, n}, std::move(out), {x},
                        [n, start](const std::vector<double> &, const std::vector<double> &g,
                                   GradBufs pg) {
                          for (size_t i = 0; i < g.size(); ++i) (*pg[0])[start * n + i] += g[i];
                        });
}

Tensor ConcatCols(std::span<const Tensor> parts) {
  Require(!parts.empty(), "ConcatCols: no inputs");
  const int64_t m = parts[0].rows();
  std::vector<int64_t> offs;
  int64_t n = 0;
  for (const Tensor &p : parts) {
    RequireMatrix(p, "ConcatCols");
    Require(p.rows() == m, "ConcatCols: row count mismatch");
    offs.push_back(n);
    n += p.cols();
  }
  std::vector<double> out(m * n);
  for (size_t k = 0; k < parts.size(); ++k) {
    const int64_t w = parts[k].cols();
    for (int64_t r = 0; r < m; ++r)
      std::copy_n(parts[k].data() + r * w, w, out.data() + r * n + offs[k]);
  }
  std::vector<int64_t> widths;
  for (const Tensor &p : parts) widths.push_back(p.cols());
  return Tensor::MakeOp({m, n}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                        [m, n, offs, widths](const std::vector<double> &,
                                             const std::vector<double> &g, GradBufs pg) {
                          for (size_t k = 0; k < pg.size(); ++k) {
                            if (!pg[k]) continue;
                            const int64_t w = widths[k];
                            for (int64_t r = 0; r < m; ++r)
                              for (int64_t c = 0; c < w; ++c)
                                (*pg[k])[r * w + c] += g[r * n + offs[k] + c];
                          }
                        });
}

Tensor ConcatRows(std::span<const Tensor> parts) {
  Require(!parts.empty(), "ConcatRows: no inputs");
  const int64_t n = parts[0].cols();
  int64_t m = 0;
  std::vector<double> out;
  std::vector<int64_t> offs;
  for (const Tensor &p : parts) {
    RequireMatrix(p, "ConcatRows");
    Require(p.cols() == n, "ConcatRows: column count mismatch");
    offs.push_back(m * n);
    m += p.rows();
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return Tensor::MakeOp({m, n}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                        [offs](const std::vector<double> &, const std::vector<double> &g,
                               GradBufs pg) {
                          for (size_t k = 0; k < pg.size(); ++k) {
                            if (!pg[k]) continue;
                            for (size_t i = 0; i < pg[k]->size(); ++i) (*pg[k])[i] += g[offs[k] + i];
                          }
                        });
}

Tensor Gather(const Tensor &x, std::vector<int64_t> index, Shape out_shape) {
  Require(NumElements(out_shape) == static_cast<int64_t>(index.size()),
          "Gather: index count does not match output shape");
  std::vector<double> out(index.size());
  for (size_t i = 0; i < index.size(); ++i) {
    Require(index[i] >= 0 && index[i] < x.size(), "Gather: index out of range");
    out[i] = x[index[i]];
  }
  auto idx = std::make_shared<std::vector<int64_t>>(std::move(index));
  return Tensor::MakeOp(std::move(out_shape), std::move(out), {x},
                        [idx](const std::vector<double> &, const std::vector<double> &g,
                              GradBufs pg) {
                          for (size_t i = 0; i < idx->size(); ++i) (*pg[0])[(*idx)[i]] += g[i];
                        });
}

Tensor GatherRows(const Tensor &x, std::span<const int64_t> rows) {
  RequireMatrix(x, "GatherRows");
  const int64_t n = x.cols();
  std::vector<int64_t> index;
  index.reserve(rows.size() * n);
  for (int64_t r : rows) {
    Require(r >= 0 && r < x.rows(), "GatherRows: row out of range");
    for (int64_t c = 0; c < n; ++c) index.push_back(r * n + c);
  }
  return Gather(x, std::move(index), {static_cast<int64_t>(rows.size()), n});
}

Tensor ReplaceRows(const Tensor &x, const std::vector<char> &replace, const Tensor &row) {
  RequireMatrix(x, "ReplaceRows");
  const int64_t m = x.rows(), n = x.cols();
  Require(static_cast<int64_t>(replace.size()) == m, "ReplaceRows: mask length mismatch");
  Require(row.ndim() == 1 && row.dim(0) == n, "ReplaceRows: row width mismatch");
  std::vector<double> out(x.values());
  for (int64_t r = 0; r < m; ++r)
    if (replace[r]) std::copy_n(row.data(), n, out.data() + r * n);
  return Tensor::MakeOp(x.shape(), std::move(out), {x, row},
                        [replace, m, n](const std::vector<double> &, const std::vector<double> &g,
                                        GradBufs pg) {
                          for (int64_t r = 0; r < m; ++r) {
                            auto *dst = replace[r] ? pg[1] : pg[0];
                            if (!dst) continue;
                            const int64_t base = replace[r] ? 0 : r * n;
                            for (int64_t c = 0; c < n; ++c) (*dst)[base + c] += g[r * n + c];
                          }
                        });
}

Tensor Glu(const Tensor &x) {
  RequireMatrix(x, "Glu");
  const int64_t m = x.rows(), n2 = x.cols();
  Require(n2 % 2 == 0, "Glu: odd width");
  const int64_t n = n2 / 2;
  std::vector<double> out(m * n);
  for (int64_t r = 0; r < m; ++r)
    for (int64_t c = 0; c < n; ++c)
      out[r * n + c] = x[r * n2 + c] * SigmoidScalar(x[r * n2 + n + c]);
  return Tensor::MakeOp({m, n}, std::move(out), {x},
                        [x, m, n, n2](const std::vector<double> &, const std::vector<double> &g,
                                      GradBufs pg) {
                          for (int64_t r = 0; r < m; ++r)
                            for (int64_t c = 0; c < n; ++c) {
                              const double a = x[r * n2 + c];
                              const double s = SigmoidScalar(x[r * n2 + n + c]);
                              const double gy = g[r * n + c];
                              (*pg[0])[r * n2 + c] += gy * s;
                              (*pg[0])[r * n2 + n + c] += gy * a * s * (1.0 - s);
                            }
                        });
}

Tensor DepthwiseConv1d(const Tensor &x, const Tensor &w, const Tensor &b) {
  RequireMatrix(x, "DepthwiseConv1d");
  RequireMatrix(w, "DepthwiseConv1d");
  const int64_t t_len = x.rows(), ch = x.cols(), k = w.rows();
  Require(w.cols() == ch && b.ndim() == 1 && b.dim(0) == ch,
          "DepthwiseConv1d: kernel/bias do not match channels");
  Require(k % 2 == 1, "DepthwiseConv1d: kernel size must be odd");
  const int64_t pad = k / 2;
  std::vector<double> out(t_len * ch);
  for (int64_t t = 0; t < t_len; ++t)
    for (int64_t c = 0; c < ch; ++c) {
      double s = b[c];
      for (int64_t j = 0; j < k; ++j) {
        const int64_t src = t + j - pad;
        if (src >= 0 && src < t_len) s += w[j * ch + c] * x[src * ch + c];
      }
      out[t * ch + c] = s;
    }
  return Tensor::MakeOp({t_len, ch}, std::move(out), {x, w, b},
                        [x, w, t_len, ch, k, pad](const std::vector<double> &,
                                                  const std::vector<double> &g, GradBufs pg) {
                          for (int64_t t = 0; t < t_len; ++t)
                            for (int64_t c = 0; c < ch; ++c) {
                              const double gy = g[t * ch + c];
                              if (pg[2]) (*pg[2])[c] += gy;
                              for (int64_t j = 0; j < k; ++j) {
                                const int64_t src = t + j - pad;
                                if (src < 0 || src >= t_len) continue;
                                if (pg[0]) (*pg[0])[src * ch + c] += gy * w[j * ch + c];
                                if (pg[1]) (*pg[1])[j * ch + c] += gy * x[src * ch + c];
                              }
                            }
                        });
}

Tensor Conv2d(const Tensor &x, const Tensor &w, const Tensor &b, int64_t kh, int64_t kw,
              int64_t stride, int64_t pad) {
  Require(x.defined() && x.ndim() == 3, "Conv2d: expected (H,W,C) input");
  const int64_t h = x.dim(0), wd = x.dim(1), cin = x.dim(2);
  RequireMatrix(w, "Conv2d");
  const int64_t patch = kh * kw * cin, cout = w.cols();
  Require(w.rows() == patch, "Conv2d: weight rows " + std::to_string(w.rows()) +
                                 " vs patch size " + std::to_string(patch));
  Require(b.ndim() == 1 && b.dim(0) == cout, "Conv2d: bias mismatch");
  const int64_t ho = (h + 2 * pad - kh) / stride + 1;
  const int64_t wo = (wd + 2 * pad - kw) / stride + 1;
  Require(ho > 0 && wo > 0, "Conv2d: input too small");
  // im2col: one row per output pixel.
  auto cols = std::make_shared<std::vector<double>>(ho * wo * patch, 0.0);
  for (int64_t oy = 0; oy < ho; ++oy)
    for (int64_t ox = 0; ox < wo; ++ox) {
      double *dst = cols->data() + (oy * wo + ox) * patch;
      for (int64_t i = 0; i < kh; ++i) {
        const int64_t iy = oy * stride + i - pad;
        if (iy < 0 || iy >= h) continue;
        for (int64_t j = 0; j < kw; ++j) {
          const int64_t ix = ox * stride + j - pad;
          if (ix < 0 || ix >= wd) continue;
          std::copy_n(x.data() + (iy * wd + ix) * cin, cin, dst + (i * kw + j) * cin);
        }
      }
    }
  const int64_t npix = ho * wo;
  std::vector<double> out(npix * cout);
  auto y = AsMat(out, npix, cout);
  y.noalias() = AsMat(*cols, npix, patch) * AsMat(w.values(), patch, cout);
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data(), cout);
  return Tensor::MakeOp(
      {ho, wo, cout}, std::move(out), {x, w, b},
      [w, cols, h, wd, cin, kh, kw, stride, pad, ho, wo, patch, cout, npix](
          const std::vector<double> &, const std::vector<double> &g, GradBufs pg) {
        auto dy = AsMat(g, npix, cout);
        if (pg[1]) AsMat(*pg[1], patch, cout).noalias() += AsMat(*cols, npix, patch).transpose() * dy;
        if (pg[2]) Eigen::Map<Eigen::RowVectorXd>(pg[2]->data(), cout) += dy.colwise().sum();
        if (pg[0]) {
          std::vector<double> dcols(npix * patch);
          AsMat(dcols, npix, patch).noalias() = dy * AsMat(w.values(), patch, cout).transpose();
          auto &dx = *pg[0];
          for (int64_t oy = 0; oy < ho; ++oy)
            for (int64_t ox = 0; ox < wo; ++ox) {
              const double *src = dcols.data() + (oy * wo + ox) * patch;
              for (int64_t i = 0; i < kh; ++i) {
                const int64_t iy = oy * stride + i - pad;
                if (iy < 0 || iy >= h) continue;
                for (int64_t j = 0; j < kw; ++j) {
                  const int64_t ix = ox * stride + j - pad;
                  if (ix < 0 || ix >= wd) continue;
                  double *d = dx.data() + (iy * wd + ix) * cin;
                  const double *s = src + (i * kw + j) * cin;
                  for (int64_t c = 0; c < cin; ++c) d[c] += s[c];
                }
              }
            }
        }
      });
}

Tensor Dropout(const Tensor &x, double p, std::mt19937_64 &rng) {
  Require(p >= 0.0 && p < 1.0, "Dropout: p must lie in [0,1)");
  if (p == 0.0) return x;
  auto mask = std::make_shared<std::vector<double>>(x.size());
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  std::vector<double> out(x.size());
  for (int64_t i = 0; i < x.size(); ++i) {
    (*mask)[i] = keep(rng) ? scale : 0.0;
    out[i] = x[i] * (*mask)[i];
  }
  return Tensor::MakeOp(x.shape(), std::move(out), {x},
                        [mask](const std::vector<double> &, const std::vector<double> &g,
                               GradBufs pg) {
                          for (size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * (*mask)[i];
                        });
}

Tensor BceWithLogits(const Tensor &logits, const Tensor &targets) {
  RequireSameShape(logits, targets, "BceWithLogits");
  Require(logits.size() > 0, "BceWithLogits: empty input");
  const double inv = 1.0 / static_cast<double>(logits.size());
  double s = 0.0;
  for (int64_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], t = targets[i];
    s += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  return Tensor::MakeOp({}, {s * inv}, {logits, targets},
                        [logits, targets, inv](const std::vector<double> &,
                                               const std::vector<double> &g, GradBufs pg) {
                          for (int64_t i = 0; i < logits.size(); ++i) {
                            const double z = logits[i], t = targets[i];
                            if (pg[0]) (*pg[0])[i] += g[0] * inv * (SigmoidScalar(z) - t);
                            if (pg[1]) (*pg[1])[i] += g[0] * inv * (-z);
                          }
                        });
}

}  // namespace sslab::ops
