// Copyright 2026 The OPVForge Authors.
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

#include "opvforge/ad/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace opv::ad {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;
using Stride = Eigen::OuterStride<>;
template <typename T>
using StridedMap = Eigen::Map<Mat<T>, 0, Stride>;
template <typename T>
using ConstStridedMap = Eigen::Map<const Mat<T>, 0, Stride>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename T>
void require_same_shape(Var<T> a, Var<T> b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                      " vs " + shape_string(b.shape()));
}

template <typename T>
void accumulate(Tape<T>& tape, int id, const Tensor<T>& g, T factor = T(1)) {
  if (!tape.requires_grad(id)) return;
  Tensor<T>& buf = tape.grad_buffer(id);
  T* dst = buf.data();
  const T* src = g.data();
  const int64_t n = g.size();
  if (factor == T(1)) {
    for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
  } else {
    for (int64_t i = 0; i < n; ++i) dst[i] += factor * src[i];
  }
}

// y = f(x) elementwise with dy/dx = df(x, y).
template <typename T, typename F, typename DF>
Var<T> unary(Var<T> x, F f, DF df) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (int64_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, df](Tape<T>& t, const Tensor<T>& g, const Tensor<T>& y) {
    const Tensor<T>& xv = t.value(xid);
    Tensor<T>& gx = t.grad_buffer(xid);
    for (int64_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], y[i]);
  });
}


template <typename T>
int64_t leading(const Tensor<T>& t) {
  return t.shape().back() == 0 ? 0 : t.size() / t.shape().back();
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require(av.rank() >= 2 && bv.rank() >= 2, "matmul: operands need rank >= 2");
  const int64_t m = av.dim(-2), k = av.dim(-1), n = bv.dim(-1);
  require(bv.dim(-2) == k, "matmul: inner dimensions " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  const bool shared = bv.rank() == 2;
  if (!shared) {
    require(bv.rank() == av.rank() &&
                std::equal(av.shape().begin(), av.shape().end() - 2, bv.shape().begin()),
            "matmul: batch dimensions " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  const int64_t batch = m * k == 0 ? 0 : av.size() / (m * k);
  Shape out_shape = av.shape();
  out_shape.back() = n;
  Tensor<T> out(out_shape);
  if (shared) {
    MatMap<T>(out.data(), batch * m, n).noalias() =
        ConstMatMap<T>(av.data(), batch * m, k) * ConstMatMap<T>(bv.data(), k, n);
  } else {
    for (int64_t i = 0; i < batch; ++i) {
      MatMap<T>(out.data() + i * m * n, m, n).noalias() =
          ConstMatMap<T>(av.data() + i * m * k, m, k) * ConstMatMap<T>(bv.data() + i * k * n, k, n);
    }
  }
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b},
                         [aid, bid, shared, batch, m, k, n](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    const Tensor<T>& av = t.value(aid);
    const Tensor<T>& bv = t.value(bid);
    if (shared) {
      ConstMatMap<T> G(g.data(), batch * m, n);
      if (t.requires_grad(aid)) {
        MatMap<T>(t.grad_buffer(aid).data(), batch * m, k).noalias() += G * ConstMatMap<T>(bv.data(), k, n).transpose();
      }
      if (t.requires_grad(bid)) {
        MatMap<T>(t.grad_buffer(bid).data(), k, n).noalias() += ConstMatMap<T>(av.data(), batch * m, k).transpose() * G;
      }
      return;
    }
    for (int64_t i = 0; i < batch; ++i) {
      ConstMatMap<T> G(g.data() + i * m * n, m, n);
      if (t.requires_grad(aid)) {
        MatMap<T>(t.grad_buffer(aid).data() + i * m * k, m, k).noalias() +=
            G * ConstMatMap<T>(bv.data() + i * k * n, k, n).transpose();
      }
      if (t.requires_grad(bid)) {
        MatMap<T>(t.grad_buffer(bid).data() + i * k * n, k, n).noalias() +=
            ConstMatMap<T>(av.data() + i * m * k, m, k).transpose() * G;
      }
    }
  });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> bias) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = w.value();
  require(wv.rank() == 2 && xv.rank() >= 1 && xv.dim(-1) == wv.dim(0),
          "linear: " + shape_string(xv.shape()) + " x " + shape_string(wv.shape()));
  const int64_t in = wv.dim(0), outw = wv.dim(1);
  const int64_t rows = leading(xv);
  if (bias.valid()) require(bias.value().size() == outw, "linear: bias width");
  Shape out_shape = xv.shape();
  out_shape.back() = outw;
  Tensor<T> out(out_shape);
  MatMap<T> O(out.data(), rows, outw);
  O.noalias() = ConstMatMap<T>(xv.data(), rows, in) * ConstMatMap<T>(wv.data(), in, outw);
  if (bias.valid()) {
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bvec(bias.value().data(), outw);
    O.rowwise() += bvec;
  }
  const int xid = x.id(), wid = w.id(), bid = bias.valid() ? bias.id() : -1;
  std::vector<Var<T>> inputs{x, w};
  if (bias.valid()) inputs.push_back(bias);
  return x.tape().record(std::move(out), inputs,
                         [xid, wid, bid, rows, in, outw](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    ConstMatMap<T> G(g.data(), rows, outw);
    if (t.requires_grad(xid)) {
      MatMap<T>(t.grad_buffer(xid).data(), rows, in).noalias() +=
          G * ConstMatMap<T>(t.value(wid).data(), in, outw).transpose();
    }
    if (t.requires_grad(wid)) {
      MatMap<T>(t.grad_buffer(wid).data(), in, outw).noalias() +=
          ConstMatMap<T>(t.value(xid).data(), rows, in).transpose() * G;
    }
    if (bid >= 0 && t.requires_grad(bid)) {
      // Row by row, so the summation order does not depend on buffer alignment.
      T* gb = t.grad_buffer(bid).data();
      for (int64_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * outw;
        for (int64_t c = 0; c < outw; ++c) gb[c] += gr[c];
      }
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = a.value();
  const Tensor<T>& bv = b.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    accumulate(t, aid, g);
    accumulate(t, bid, g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out = a.value();
  const Tensor<T>& bv = b.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    accumulate(t, aid, g);
    accumulate(t, bid, g, T(-1));
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out = a.value();
  const Tensor<T>& bv = b.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    if (t.requires_grad(aid)) {
      Tensor<T>& ga = t.grad_buffer(aid);
      const Tensor<T>& bv = t.value(bid);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bid)) {
      Tensor<T>& gb = t.grad_buffer(bid);
      const Tensor<T>& av = t.value(aid);
      for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b) {
  const Tensor<T>& xv = x.value();
  const int64_t f = xv.dim(-1);
  require(b.value().size() == f, "add_bias: bias width " + shape_string(b.shape()) + " vs " + shape_string(xv.shape()));
  Tensor<T> out = xv;
  const Tensor<T>& bv = b.value();
  const int64_t rows = leading(xv);
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < f; ++j) out[r * f + j] += bv[j];
  }
  const int xid = x.id(), bid = b.id();
  return x.tape().record(std::move(out), {x, b}, [xid, bid, rows, f](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    accumulate(t, xid, g);
    if (t.requires_grad(bid)) {
      Tensor<T>& gb = t.grad_buffer(bid);
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t j = 0; j < f; ++j) gb[j] += g[r * f + j];
      }
    }
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tensor<T> out = x.value();
  for (T& v : out.vec()) v *= factor;
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, factor](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    accumulate(t, xid, g, factor);
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return unary(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> elu(Var<T> x) {
  return unary(x, [](T v) { return v > T(0) ? v : std::expm1(v); },
               [](T v, T y) { return v > T(0) ? T(1) : y + T(1); });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  using Array = Eigen::Array<T, Eigen::Dynamic, 1>;
  constexpr T kC = T(0.7978845608028654);  // sqrt(2 / pi)
  constexpr T kA = T(0.044715);
  const Tensor<T>& xv = x.value();
  Eigen::Map<const Array> xa(xv.data(), xv.size());
  auto th = std::make_shared<Array>((kC * (xa + kA * xa.cube())).tanh());
  Tensor<T> out(xv.shape());
  Eigen::Map<Array>(out.data(), out.size()) = T(0.5) * xa * (T(1) + *th);
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, th, kC = kC, kA = kA](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    const Tensor<T>& xv = t.value(xid);
    Eigen::Map<const Array> xa(xv.data(), xv.size());
    Eigen::Map<const Array> ga(g.data(), g.size());
    Tensor<T>& gx = t.grad_buffer(xid);
    Eigen::Map<Array>(gx.data(), gx.size()) +=
        ga * (T(0.5) * (T(1) + *th) +
              T(0.5) * xa * (T(1) - th->square()) * kC * (T(1) + T(3) * kA * xa.square()));
  });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  return unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  return unary(x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope) {
  return unary(x, [slope](T v) { return v > T(0) ? v : slope * v; },
               [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> exp(Var<T> x) {
  return unary(x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> log(Var<T> x) {
  return unary(x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Var<T> square(Var<T> x) {
  return unary(x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Var<T> softmax(Var<T> x, int axis) {
  const Tensor<T>& xv = x.value();
  const int rank = xv.rank();
  if (axis < 0) axis += rank;
  require(axis >= 0 && axis < rank, "softmax: axis out of range");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= xv.dim(i);
  for (int i = axis + 1; i < rank; ++i) inner *= xv.dim(i);
  const int64_t len = xv.dim(axis);
  Tensor<T> out(xv.shape());
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      const int64_t base = o * len * inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (int64_t j = 0; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
      T total = 0;
      for (int64_t j = 0; j < len; ++j) {
        const T e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      for (int64_t j = 0; j < len; ++j) out[base + j * inner] /= total;
    }
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x},
                         [xid, outer, inner, len](Tape<T>& t, const Tensor<T>& g, const Tensor<T>& y) {
    Tensor<T>& gx = t.grad_buffer(xid);
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t in = 0; in < inner; ++in) {
        const int64_t base = o * len * inner + in;
        T dot = 0;
        for (int64_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
        for (int64_t j = 0; j < len; ++j) {
          const int64_t idx = base + j * inner;
          gx[idx] += y[idx] * (g[idx] - dot);
        }
      }
    }
  });
}

template <typename T>
Var<T> log_softmax(Var<T> x) {
  const Tensor<T>& xv = x.value();
  const int64_t v = xv.dim(-1);
  const int64_t rows = leading(xv);
  Tensor<T> out(xv.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * v;
    const T mx = *std::max_element(row, row + v);
    T total = 0;
    for (int64_t j = 0; j < v; ++j) total += std::exp(row[j] - mx);
    const T lse = mx + std::log(total);
    for (int64_t j = 0; j < v; ++j) out[r * v + j] = row[j] - lse;
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, rows, v](Tape<T>& t, const Tensor<T>& g, const Tensor<T>& y) {
    Tensor<T>& gx = t.grad_buffer(xid);
    for (int64_t r = 0; r < rows; ++r) {
      T gsum = 0;
      for (int64_t j = 0; j < v; ++j) gsum += g[r * v + j];
      for (int64_t j = 0; j < v; ++j) gx[r * v + j] += g[r * v + j] - std::exp(y[r * v + j]) * gsum;
    }
  });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const Tensor<T>& xv = x.value();
  const int64_t f = xv.dim(-1);
  require(gain.value().size() == f && bias.value().size() == f,
          "layer_norm: gain/bias must match last axis of " + shape_string(xv.shape()));
  const int64_t rows = leading(xv);
  const Tensor<T>& gv = gain.value();
  const Tensor<T>& bv = bias.value();
  Tensor<T> out(xv.shape());
  std::vector<T> xhat(static_cast<size_t>(xv.size()));
  std::vector<T> rstd(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * f;
    T mu = 0;
    for (int64_t j = 0; j < f; ++j) mu += row[j];
    mu /= static_cast<T>(f);
    T var = 0;
    for (int64_t j = 0; j < f; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(f);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (int64_t j = 0; j < f; ++j) {
      const T h = (row[j] - mu) * rs;
      xhat[r * f + j] = h;
      out[r * f + j] = gv[j] * h + bv[j];
    }
  }
  const int xid = x.id(), gid = gain.id(), bid = bias.id();
  return x.tape().record(std::move(out), {x, gain, bias},
                         [xid, gid, bid, rows, f, xhat = std::move(xhat), rstd = std::move(rstd)](
                             Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    const Tensor<T>& gv = t.value(gid);
    if (t.requires_grad(gid)) {
      Tensor<T>& gg = t.grad_buffer(gid);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < f; ++j) gg[j] += g[r * f + j] * xhat[r * f + j];
    }
    if (t.requires_grad(bid)) {
      Tensor<T>& gb = t.grad_buffer(bid);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < f; ++j) gb[j] += g[r * f + j];
    }
    if (t.requires_grad(xid)) {
      Tensor<T>& gx = t.grad_buffer(xid);
      for (int64_t r = 0; r < rows; ++r) {
        T mean_d = 0, mean_dh = 0;
        for (int64_t j = 0; j < f; ++j) {
          const T d = g[r * f + j] * gv[j];
          mean_d += d;
          mean_dh += d * xhat[r * f + j];
        }
        mean_d /= static_cast<T>(f);
        mean_dh /= static_cast<T>(f);
        for (int64_t j = 0; j < f; ++j) {
          const T d = g[r * f + j] * gv[j];
          gx[r * f + j] += rstd[r] * (d - mean_d - xhat[r * f + j] * mean_dh);
        }
      }
    }
  });
}

template <typename T>
Var<T> pick_log_softmax(Var<T> logits, const std::vector<int>& targets) {
  const Tensor<T>& lv = logits.value();
  require(lv.rank() == 2, "pick_log_softmax: logits must be [N, V]");
  const int64_t n = lv.dim(0), v = lv.dim(1);
  require(static_cast<int64_t>(targets.size()) == n, "pick_log_softmax: target count");
  for (int tgt : targets) {
    if (tgt < -1 || tgt >= v) throw ShapeError("IndexOutOfRange: target " + std::to_string(tgt) + " for " + std::to_string(v) + " classes");
  }
  Tensor<T> out({n});
  std::vector<T> lse(static_cast<size_t>(n), T(0));
  for (int64_t r = 0; r < n; ++r) {
    if (targets[r] < 0) continue;
    const T* row = lv.data() + r * v;
    const T mx = *std::max_element(row, row + v);
    T total = 0;
    for (int64_t j = 0; j < v; ++j) total += std::exp(row[j] - mx);
    lse[r] = mx + std::log(total);
    out[r] = row[targets[r]] - lse[r];
  }
  const int lid = logits.id();
  return logits.tape().record(std::move(out), {logits},
                              [lid, n, v, targets, lse = std::move(lse)](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    const Tensor<T>& lv = t.value(lid);
    Tensor<T>& gl = t.grad_buffer(lid);
    for (int64_t r = 0; r < n; ++r) {
      if (targets[r] < 0 || g[r] == T(0)) continue;
      const T* row = lv.data() + r * v;
      T* grow = gl.data() + r * v;
      for (int64_t j = 0; j < v; ++j) grow[j] -= g[r] * std::exp(row[j] - lse[r]);
      grow[targets[r]] += g[r];
    }
  });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, const std::vector<int>& targets) {
  const auto count = std::count_if(targets.begin(), targets.end(), [](int t) { return t >= 0; });
  require(count > 0, "cross_entropy: no targets");
  return scale(sum(pick_log_softmax(logits, targets)), T(-1) / static_cast<T>(count));
}

template <typename T>
Var<T> sum(Var<T> x) {
  T total = 0;
  for (T v : x.value().vec()) total += v;
  const int xid = x.id();
  return x.tape().record(Tensor<T>::scalar(total), {x}, [xid](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    Tensor<T>& gx = t.grad_buffer(xid);
    const T gv = g[0];
    for (T& v : gx.vec()) v += gv;
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  require(x.value().size() > 0, "mean: empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(x.value().size()));
}

template <typename T>
Var<T> mse_loss(Var<T> pred, const Tensor<T>& target) {
  require(pred.value().size() == target.size(), "mse_loss: size mismatch");
  Tensor<T> t = target;
  t.reshape(pred.shape());
  Var<T> diff = sub(pred, pred.tape().constant(std::move(t)));
  return mean(square(diff));
}

template <typename T>
Var<T> dropout(Var<T> x, double rate, Rng* rng, bool training) {
  if (!training || rate <= 0.0) return x;
  require(rate < 1.0, "dropout: rate must be < 1");
  require(rng != nullptr, "dropout: training mode needs an Rng");
  const T keep_scale = T(1) / static_cast<T>(1.0 - rate);
  Tensor<T> out = x.value();
  std::vector<T> mask(static_cast<size_t>(out.size()));
  for (int64_t i = 0; i < out.size(); ++i) {
    mask[i] = rng->uniform() < rate ? T(0) : keep_scale;
    out[i] *= mask[i];
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, mask = std::move(mask)](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    Tensor<T>& gx = t.grad_buffer(xid);
    for (int64_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

template <typename T>
Var<T> embedding(Var<T> table, const std::vector<int>& ids) {
  const Tensor<T>& tv = table.value();
  require(tv.rank() == 2, "embedding: table must be [V, D]");
  const int64_t vocab = tv.dim(0), d = tv.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= vocab) throw ShapeError("IndexOutOfRange: embedding id " + std::to_string(id));
  }
  const int64_t n = static_cast<int64_t>(ids.size());
  Tensor<T> out({n, d});
  for (int64_t i = 0; i < n; ++i) std::copy_n(tv.data() + ids[i] * d, d, out.data() + i * d);
  const int tid = table.id();
  return table.tape().record(std::move(out), {table}, [tid, ids, d](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    Tensor<T>& gt = t.grad_buffer(tid);
    for (size_t i = 0; i < ids.size(); ++i) {
      T* dst = gt.data() + ids[i] * d;
      const T* src = g.data() + static_cast<int64_t>(i) * d;
      for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& first = parts[0].shape();
  const int64_t rows = leading(parts[0].value());
  std::vector<int64_t> widths;
  int64_t total = 0;
  for (const Var<T>& p : parts) {
    const Shape& s = p.shape();
    require(s.size() == first.size() && std::equal(s.begin(), s.end() - 1, first.begin()),
            "concat: leading dims " + shape_string(s) + " vs " + shape_string(first));
    widths.push_back(s.back());
    total += s.back();
  }
  Shape out_shape = first;
  out_shape.back() = total;
  Tensor<T> out(out_shape);
  int64_t offset = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const Tensor<T>& v = parts[p].value();
    for (int64_t r = 0; r < rows; ++r) std::copy_n(v.data() + r * widths[p], widths[p], out.data() + r * total + offset);
    offset += widths[p];
  }
  std::vector<int> ids;
  for (const Var<T>& p : parts) ids.push_back(p.id());
  return parts[0].tape().record(std::move(out), parts,
                                [ids, widths, rows, total](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    int64_t offset = 0;
    for (size_t p = 0; p < ids.size(); ++p) {
      if (t.requires_grad(ids[p])) {
        Tensor<T>& gp = t.grad_buffer(ids[p]);
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t j = 0; j < widths[p]; ++j) gp[r * widths[p] + j] += g[r * total + offset + j];
      }
      offset += widths[p];
    }
  });
}

template <typename T>
Var<T> slice_last(Var<T> x, int64_t begin, int64_t end) {
  const Tensor<T>& xv = x.value();
  const int64_t f = xv.dim(-1);
  require(0 <= begin && begin <= end && end <= f, "slice_last: bad range");
  const int64_t rows = leading(xv);
  const int64_t w = end - begin;
  Shape s = xv.shape();
  s.back() = w;
  Tensor<T> out(s);
  for (int64_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * f + begin, w, out.data() + r * w);
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, rows, f, begin, w](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    Tensor<T>& gx = t.grad_buffer(xid);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t j = 0; j < w; ++j) gx[r * f + begin + j] += g[r * w + j];
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value();
  out.reshape(std::move(shape));
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    accumulate(t, xid, g);
  });
}

template <typename T>
Var<T> index_rows(Var<T> x, const std::vector<int>& idx) {
  const Tensor<T>& xv = x.value();
  require(xv.rank() >= 1, "index_rows: rank 0");
  const int64_t n = xv.dim(0);
  const int64_t row = n == 0 ? 0 : xv.size() / n;
  for (int i : idx) {
    if (i < -1 || i >= n) throw ShapeError("IndexOutOfRange: row " + std::to_string(i));
  }
  Shape s = xv.shape();
  s[0] = static_cast<int64_t>(idx.size());
  Tensor<T> out(s);
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= 0) std::copy_n(xv.data() + idx[r] * row, row, out.data() + static_cast<int64_t>(r) * row);
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, idx, row](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    Tensor<T>& gx = t.grad_buffer(xid);
    for (size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] < 0) continue;
      T* dst = gx.data() + idx[r] * row;
      const T* src = g.data() + static_cast<int64_t>(r) * row;
      for (int64_t j = 0; j < row; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var<T> scatter_add_rows(Var<T> x, const std::vector<int>& idx, int64_t rows) {
  const Tensor<T>& xv = x.value();
  const int64_t e = xv.dim(0);
  require(static_cast<int64_t>(idx.size()) == e, "scatter_add_rows: index count");
  const int64_t row = e == 0 ? 0 : xv.size() / e;
  for (int i : idx) {
    if (i < -1 || i >= rows) throw ShapeError("IndexOutOfRange: scatter row " + std::to_string(i));
  }
  Shape s = xv.shape();
  s[0] = rows;
  Tensor<T> out(s);
  for (int64_t r = 0; r < e; ++r) {
    if (idx[r] < 0) continue;
    T* dst = out.data() + idx[r] * row;
    const T* src = xv.data() + r * row;
    for (int64_t j = 0; j < row; ++j) dst[j] += src[j];
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, idx, row](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    Tensor<T>& gx = t.grad_buffer(xid);
    for (size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] < 0) continue;
      const T* src = g.data() + idx[r] * row;
      T* dst = gx.data() + static_cast<int64_t>(r) * row;
      for (int64_t j = 0; j < row; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var<T> segment_softmax(Var<T> scores, const std::vector<int>& segment, int64_t segments) {
  const Tensor<T>& sv = scores.value();
  require(sv.rank() == 2 && sv.dim(0) == static_cast<int64_t>(segment.size()), "segment_softmax: shape");
  const int64_t e = sv.dim(0), h = sv.dim(1);
  std::vector<T> mx(static_cast<size_t>(segments * h), -std::numeric_limits<T>::infinity());
  for (int64_t r = 0; r < e; ++r) {
    if (segment[r] < 0 || segment[r] >= segments) throw ShapeError("IndexOutOfRange: segment id");
    for (int64_t c = 0; c < h; ++c) mx[segment[r] * h + c] = std::max(mx[segment[r] * h + c], sv[r * h + c]);
  }
  std::vector<T> total(static_cast<size_t>(segments * h), T(0));
  Tensor<T> out(sv.shape());
  for (int64_t r = 0; r < e; ++r)
    for (int64_t c = 0; c < h; ++c) {
      const T ev = std::exp(sv[r * h + c] - mx[segment[r] * h + c]);
      out[r * h + c] = ev;
      total[segment[r] * h + c] += ev;
    }
  for (int64_t r = 0; r < e; ++r)
    for (int64_t c = 0; c < h; ++c) out[r * h + c] /= total[segment[r] * h + c];
  const int sid = scores.id();
  return scores.tape().record(std::move(out), {scores},
                              [sid, segment, segments, e, h](Tape<T>& t, const Tensor<T>& g, const Tensor<T>& y) {
    std::vector<T> dot(static_cast<size_t>(segments * h), T(0));
    for (int64_t r = 0; r < e; ++r)
      for (int64_t c = 0; c < h; ++c) dot[segment[r] * h + c] += g[r * h + c] * y[r * h + c];
    Tensor<T>& gs = t.grad_buffer(sid);
    for (int64_t r = 0; r < e; ++r)
      for (int64_t c = 0; c < h; ++c) gs[r * h + c] += y[r * h + c] * (g[r * h + c] - dot[segment[r] * h + c]);
  });
}

template <typename T>
Var<T> segment_mean(Var<T> x, const std::vector<int>& segment, int64_t segments) {
  const Tensor<T>& xv = x.value();
  require(xv.rank() == 2 && xv.dim(0) == static_cast<int64_t>(segment.size()), "segment_mean: shape");
  const int64_t n = xv.dim(0), f = xv.dim(1);
  std::vector<T> counts(static_cast<size_t>(segments), T(0));
  for (int s : segment) {
    if (s < 0 || s >= segments) throw ShapeError("IndexOutOfRange: segment id");
    counts[s] += T(1);
  }
  for (T c : counts) require(c > T(0), "segment_mean: empty segment");
  Tensor<T> out({segments, f});
  for (int64_t r = 0; r < n; ++r)
    for (int64_t j = 0; j < f; ++j) out[segment[r] * f + j] += xv[r * f + j];
  for (int64_t s = 0; s < segments; ++s)
    for (int64_t j = 0; j < f; ++j) out[s * f + j] /= counts[s];
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, segment, counts, n, f](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    Tensor<T>& gx = t.grad_buffer(xid);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t j = 0; j < f; ++j) gx[r * f + j] += g[segment[r] * f + j] / counts[segment[r]];
  });
}

template <typename T>
Var<T> head_dot(Var<T> x, Var<T> a, int heads) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& av = a.value();
  require(xv.rank() == 2 && av.size() == xv.dim(1) && heads > 0 && xv.dim(1) % heads == 0, "head_dot: shape");
  const int64_t e = xv.dim(0), hc = xv.dim(1), c = hc / heads;
  Tensor<T> out({e, static_cast<int64_t>(heads)});
  for (int64_t r = 0; r < e; ++r)
    for (int64_t h = 0; h < heads; ++h) {
      T acc = 0;
      for (int64_t j = 0; j < c; ++j) acc += xv[r * hc + h * c + j] * av[h * c + j];
      out[r * heads + h] = acc;
    }
  const int xid = x.id(), aid = a.id();
  return x.tape().record(std::move(out), {x, a}, [xid, aid, e, hc, c, heads](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    const Tensor<T>& xv = t.value(xid);
    const Tensor<T>& av = t.value(aid);
    if (t.requires_grad(xid)) {
      Tensor<T>& gx = t.grad_buffer(xid);
      for (int64_t r = 0; r < e; ++r)
        for (int64_t h = 0; h < heads; ++h)
          for (int64_t j = 0; j < c; ++j) gx[r * hc + h * c + j] += g[r * heads + h] * av[h * c + j];
    }
    if (t.requires_grad(aid)) {
      Tensor<T>& ga = t.grad_buffer(aid);
      for (int64_t r = 0; r < e; ++r)
        for (int64_t h = 0; h < heads; ++h)
          for (int64_t j = 0; j < c; ++j) ga[h * c + j] += g[r * heads + h] * xv[r * hc + h * c + j];
    }
  });
}

template <typename T>
Var<T> head_scale(Var<T> alpha, Var<T> x) {
  const Tensor<T>& alv = alpha.value();
  const Tensor<T>& xv = x.value();
  require(alv.rank() == 2 && xv.rank() == 2 && alv.dim(0) == xv.dim(0) && xv.dim(1) % alv.dim(1) == 0,
          "head_scale: shape");
  const int64_t e = xv.dim(0), hc = xv.dim(1), heads = alv.dim(1), c = hc / heads;
  Tensor<T> out(xv.shape());
  for (int64_t r = 0; r < e; ++r)
    for (int64_t h = 0; h < heads; ++h)
      for (int64_t j = 0; j < c; ++j) out[r * hc + h * c + j] = alv[r * heads + h] * xv[r * hc + h * c + j];
  const int alid = alpha.id(), xid = x.id();
  return x.tape().record(std::move(out), {alpha, x}, [alid, xid, e, hc, heads, c](Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    const Tensor<T>& alv = t.value(alid);
    const Tensor<T>& xv = t.value(xid);
    if (t.requires_grad(alid)) {
      Tensor<T>& ga = t.grad_buffer(alid);
      for (int64_t r = 0; r < e; ++r)
        for (int64_t h = 0; h < heads; ++h) {
          T acc = 0;
          for (int64_t j = 0; j < c; ++j) acc += g[r * hc + h * c + j] * xv[r * hc + h * c + j];
          ga[r * heads + h] += acc;
        }
    }
    if (t.requires_grad(xid)) {
      Tensor<T>& gx = t.grad_buffer(xid);
      for (int64_t r = 0; r < e; ++r)
        for (int64_t h = 0; h < heads; ++h)
          for (int64_t j = 0; j < c; ++j) gx[r * hc + h * c + j] += g[r * hc + h * c + j] * alv[r * heads + h];
    }
  });
}

template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, int heads, const AttentionOptions<T>& options) {
  const Tensor<T>& qv = q.value();
  const Tensor<T>& kv = k.value();
  const Tensor<T>& vv = v.value();
  require(qv.rank() == 3 && kv.rank() == 3 && vv.rank() == 3, "attention: inputs must be [B, T, D]");
  const int64_t b = qv.dim(0), tq = qv.dim(1), d = qv.dim(2), tk = kv.dim(1);
  require(kv.shape() == vv.shape() && kv.dim(0) == b && kv.dim(2) == d, "attention: key/value shape");
  require(heads > 0 && d % heads == 0, "attention: heads must divide width");
  require(options.key_lengths.empty() || static_cast<int64_t>(options.key_lengths.size()) == b,
          "attention: key_lengths size");
  const int64_t dh = d / heads;
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(dh));
  const bool use_dropout = options.training && options.dropout > 0.0;
  if (use_dropout) require(options.rng != nullptr, "attention: dropout needs an Rng");
  const T keep_scale = use_dropout ? T(1) / static_cast<T>(1.0 - options.dropout) : T(1);

  std::vector<int> lengths(static_cast<size_t>(b), static_cast<int>(tk));
  if (!options.key_lengths.empty()) lengths = options.key_lengths;
  for (int len : lengths) {
    if (len < 1 || len > tk) throw ShapeError("EmptyNodeSet: attention key length " + std::to_string(len));
  }

  const int64_t plane = tq * tk;
  auto probs = std::make_shared<std::vector<T>>(static_cast<size_t>(b * heads * plane), T(0));
  std::shared_ptr<std::vector<T>> drop_mask;
  if (use_dropout) drop_mask = std::make_shared<std::vector<T>>(probs->size());

  Tensor<T> out(qv.shape());
  Mat<T> scores(tq, tk);
  Mat<T> dropped;
  for (int64_t bi = 0; bi < b; ++bi) {
    const int64_t klen = lengths[bi];
    for (int64_t h = 0; h < heads; ++h) {
      ConstStridedMap<T> Q(qv.data() + bi * tq * d + h * dh, tq, dh, Stride(d));
      ConstStridedMap<T> K(kv.data() + bi * tk * d + h * dh, tk, dh, Stride(d));
      ConstStridedMap<T> V(vv.data() + bi * tk * d + h * dh, tk, dh, Stride(d));
      scores.noalias() = (Q * K.transpose()) * scale_factor;
      T* p = probs->data() + (bi * heads + h) * plane;
      for (int64_t i = 0; i < tq; ++i) {
        const int64_t limit = options.causal ? std::min<int64_t>(klen, i + 1) : klen;
        T mx = -std::numeric_limits<T>::infinity();
        for (int64_t j = 0; j < limit; ++j) mx = std::max(mx, scores(i, j));
        T total = 0;
        for (int64_t j = 0; j < limit; ++j) {
          const T ev = std::exp(scores(i, j) - mx);
          p[i * tk + j] = ev;
          total += ev;
        }
        for (int64_t j = 0; j < limit; ++j) p[i * tk + j] /= total;
      }
      MatMap<T> P(p, tq, tk);
      StridedMap<T> O(out.data() + bi * tq * d + h * dh, tq, dh, Stride(d));
      if (use_dropout) {
        T* m = drop_mask->data() + (bi * heads + h) * plane;
        for (int64_t i = 0; i < plane; ++i) m[i] = options.rng->uniform() < options.dropout ? T(0) : keep_scale;
        dropped = P.cwiseProduct(MatMap<T>(m, tq, tk));
        O.noalias() = dropped * V;
      } else {
        O.noalias() = P * V;
      }
    }
  }
  if (options.weights_out) *options.weights_out = Tensor<T>({b, static_cast<int64_t>(heads), tq, tk}, *probs);

  const int qid = q.id(), kid = k.id(), vid = v.id();
  return q.tape().record(std::move(out), {q, k, v},
                         [qid, kid, vid, b, tq, tk, d, dh, heads, scale_factor, probs, drop_mask](
                             Tape<T>& t, const Tensor<T>& g, const Tensor<T>&) {
    const Tensor<T>& qv = t.value(qid);
    const Tensor<T>& kv = t.value(kid);
    const Tensor<T>& vv = t.value(vid);
    const bool gq = t.requires_grad(qid), gk = t.requires_grad(kid), gv = t.requires_grad(vid);
    T* dq = gq ? t.grad_buffer(qid).data() : nullptr;
    T* dk = gk ? t.grad_buffer(kid).data() : nullptr;
    T* dv = gv ? t.grad_buffer(vid).data() : nullptr;
    const int64_t plane = tq * tk;
    Mat<T> dp(tq, tk), ds(tq, tk), pd;
    for (int64_t bi = 0; bi < b; ++bi) {
      for (int64_t h = 0; h < heads; ++h) {
        const int64_t off_q = bi * tq * d + h * dh;
        const int64_t off_k = bi * tk * d + h * dh;
        ConstStridedMap<T> Q(qv.data() + off_q, tq, dh, Stride(d));
        ConstStridedMap<T> K(kv.data() + off_k, tk, dh, Stride(d));
        ConstStridedMap<T> V(vv.data() + off_k, tk, dh, Stride(d));
        ConstStridedMap<T> G(g.data() + off_q, tq, dh, Stride(d));
        ConstMatMap<T> P(probs->data() + (bi * heads + h) * plane, tq, tk);
        dp.noalias() = G * V.transpose();
        if (drop_mask) {
          ConstMatMap<T> M(drop_mask->data() + (bi * heads + h) * plane, tq, tk);
          if (gv) {
            pd = P.cwiseProduct(M);
            StridedMap<T>(dv + off_k, tk, dh, Stride(d)).noalias() += pd.transpose() * G;
          }
          dp = dp.cwiseProduct(M);
        } else if (gv) {
          StridedMap<T>(dv + off_k, tk, dh, Stride(d)).noalias() += P.transpose() * G;
        }
        for (int64_t i = 0; i < tq; ++i) {
          T dot = 0;
          for (int64_t j = 0; j < tk; ++j) dot += dp(i, j) * P(i, j);
          for (int64_t j = 0; j < tk; ++j) ds(i, j) = P(i, j) * (dp(i, j) - dot) * scale_factor;
        }
        if (gq) StridedMap<T>(dq + off_q, tq, dh, Stride(d)).noalias() += ds * K;
        if (gk) StridedMap<T>(dk + off_k, tk, dh, Stride(d)).noalias() += ds.transpose() * Q;
      }
    }
  });
}

#define OPV_INSTANTIATE_OPS(T)                                                                  \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                    \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                            \
  template Var<T> add<T>(Var<T>, Var<T>);                                                       \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                       \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                       \
  template Var<T> add_bias<T>(Var<T>, Var<T>);                                                  \
  template Var<T> scale<T>(Var<T>, T);                                                          \
  template Var<T> relu<T>(Var<T>);                                                              \
  template Var<T> elu<T>(Var<T>);                                                               \
  template Var<T> gelu<T>(Var<T>);                                                              \
  template Var<T> tanh<T>(Var<T>);                                                              \
  template Var<T> sigmoid<T>(Var<T>);                                                           \
  template Var<T> leaky_relu<T>(Var<T>, T);                                                     \
  template Var<T> exp<T>(Var<T>);                                                               \
  template Var<T> log<T>(Var<T>);                                                               \
  template Var<T> square<T>(Var<T>);                                                            \
  template Var<T> softmax<T>(Var<T>, int);                                                      \
  template Var<T> log_softmax<T>(Var<T>);                                                       \
  template Var<T> layer_norm<T>(Var<T>, Var<T>, Var<T>, T);                                     \
  template Var<T> pick_log_softmax<T>(Var<T>, const std::vector<int>&);                         \
  template Var<T> cross_entropy<T>(Var<T>, const std::vector<int>&);                            \
  template Var<T> sum<T>(Var<T>);                                                               \
  template Var<T> mean<T>(Var<T>);                                                              \
  template Var<T> mse_loss<T>(Var<T>, const Tensor<T>&);                                        \
  template Var<T> dropout<T>(Var<T>, double, Rng*, bool);                                       \
  template Var<T> embedding<T>(Var<T>, const std::vector<int>&);                                \
  template Var<T> concat<T>(const std::vector<Var<T>>&);                                        \
  template Var<T> slice_last<T>(Var<T>, int64_t, int64_t);                                      \
  template Var<T> reshape<T>(Var<T>, Shape);                                                    \
  template Var<T> index_rows<T>(Var<T>, const std::vector<int>&);                               \
  template Var<T> scatter_add_rows<T>(Var<T>, const std::vector<int>&, int64_t);                \
  template Var<T> segment_softmax<T>(Var<T>, const std::vector<int>&, int64_t);                 \
  template Var<T> segment_mean<T>(Var<T>, const std::vector<int>&, int64_t);                    \
  template Var<T> head_dot<T>(Var<T>, Var<T>, int);                                             \
  template Var<T> head_scale<T>(Var<T>, Var<T>);                                                \
  template Var<T> attention<T>(Var<T>, Var<T>, Var<T>, int, const AttentionOptions<T>&);

OPV_INSTANTIATE_OPS(float)
OPV_INSTANTIATE_OPS(double)

}  // namespace opv::ad
