#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "anchormt/kernels.hpp"
#include "anchormt/rng.hpp"
#include "anchormt/tensor.hpp"

namespace anchormt::num {

template <class S>
struct NodeT {
  TensorT<S> value;
  TensorT<S> grad;  // allocated iff requires_grad
  bool requires_grad = false;

  void ensure_grad() {
    if (!grad.defined()) {
      grad = TensorT<S>(value.shape);
    }
  }
  void zero_grad() {
    if (grad.defined()) grad.fill(S(0));
  }
};

template <class S>
using NodeRefT = std::shared_ptr<NodeT<S>>;

template <class S>
NodeRefT<S> make_param(TensorT<S> value) {
  auto n = std::make_shared<NodeT<S>>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->ensure_grad();
  return n;
}

template <class S>
NodeRefT<S> make_const(TensorT<S> value) {
  auto n = std::make_shared<NodeT<S>>();
  n->value = std::move(value);
  return n;
}

// Reverse-mode tape. Forward ops record backward closures; backward() runs
// them in reverse. One tape per training step; clear() drops the graph.
template <class S>
class TapeT {
 public:
  using Node = NodeT<S>;
  using Ref = NodeRefT<S>;

  Ref matmul(Ref a, Ref b) {
    require(a->value.ndim() == 2 && b->value.ndim() == 2, "matmul: rank");
    int M = a->value.dim(0), K = a->value.dim(1), N = b->value.dim(1);
    require(b->value.dim(0) == K, "matmul: inner dims");
    Ref out = fresh({M, N}, {a, b});
    gemm_nn(a->value.data(), b->value.data(), out->value.data(), M, K, N);
    check_finite("matmul", out->value);
    record(out, [=] {
      if (a->requires_grad)
        gemm_nt(out->grad.data(), b->value.data(), a->grad.data(), M, N, K, true);
      if (b->requires_grad)
        gemm_tn(a->value.data(), out->grad.data(), b->grad.data(), M, K, N, true);
    });
    return out;
  }

  // A (M,K) x B^T with B (N,K)
  Ref matmul_nt(Ref a, Ref b) {
    require(a->value.ndim() == 2 && b->value.ndim() == 2, "matmul_nt: rank");
    int M = a->value.dim(0), K = a->value.dim(1), N = b->value.dim(0);
    require(b->value.dim(1) == K, "matmul_nt: inner dims");
    Ref out = fresh({M, N}, {a, b});
    gemm_nt(a->value.data(), b->value.data(), out->value.data(), M, K, N);
    check_finite("matmul_nt", out->value);
    record(out, [=] {
      if (a->requires_grad)
        gemm_nn(out->grad.data(), b->value.data(), a->grad.data(), M, N, K, true);
      if (b->requires_grad)
        gemm_tn(out->grad.data(), a->value.data(), b->grad.data(), M, N, K, true);
    });
    return out;
  }

  Ref bmm(Ref a, Ref b) {
    require(a->value.ndim() == 3 && b->value.ndim() == 3, "bmm: rank");
    int B = a->value.dim(0), M = a->value.dim(1), K = a->value.dim(2), N = b->value.dim(2);
    require(b->value.dim(0) == B && b->value.dim(1) == K, "bmm: dims");
    Ref out = fresh({B, M, N}, {a, b});
    const int64_t sa = static_cast<int64_t>(M) * K, sb = static_cast<int64_t>(K) * N,
                  sc = static_cast<int64_t>(M) * N;
#pragma omp parallel for schedule(static) if (B > 1 && static_cast<int64_t>(B) * sa * N > kParThreshold)
    for (int i = 0; i < B; ++i)
      gemm_nn(a->value.data() + i * sa, b->value.data() + i * sb, out->value.data() + i * sc,
              M, K, N);
    check_finite("bmm", out->value);
    record(out, [=] {
      for (int i = 0; i < B; ++i) {
        if (a->requires_grad)
          gemm_nt(out->grad.data() + i * sc, b->value.data() + i * sb,
                  a->grad.data() + i * sa, M, N, K, true);
        if (b->requires_grad)
          gemm_tn(a->value.data() + i * sa, out->grad.data() + i * sc,
                  b->grad.data() + i * sb, M, K, N, true);
      }
    });
    return out;
  }

  // A (B,M,K) x B^T with b (B,N,K)
  Ref bmm_nt(Ref a, Ref b) {
    require(a->value.ndim() == 3 && b->value.ndim() == 3, "bmm_nt: rank");
    int B = a->value.dim(0), M = a->value.dim(1), K = a->value.dim(2), N = b->value.dim(1);
    require(b->value.dim(0) == B && b->value.dim(2) == K, "bmm_nt: dims");
    Ref out = fresh({B, M, N}, {a, b});
    const int64_t sa = static_cast<int64_t>(M) * K, sb = static_cast<int64_t>(N) * K,
                  sc = static_cast<int64_t>(M) * N;
#pragma omp parallel for schedule(static) if (B > 1 && static_cast<int64_t>(B) * sa * N > kParThreshold)
    for (int i = 0; i < B; ++i)
      gemm_nt(a->value.data() + i * sa, b->value.data() + i * sb, out->value.data() + i * sc,
              M, K, N);
    check_finite("bmm_nt", out->value);
    record(out, [=] {
      for (int i = 0; i < B; ++i) {
        if (a->requires_grad)
          gemm_nn(out->grad.data() + i * sc, b->value.data() + i * sb,
                  a->grad.data() + i * sa, M, N, K, true);
        if (b->requires_grad)
          gemm_tn(out->grad.data() + i * sc, a->value.data() + i * sa,
                  b->grad.data() + i * sb, M, N, K, true);
      }
    });
    return out;
  }

  Ref add(Ref a, Ref b) {
    require(a->value.shape == b->value.shape, "add: shape mismatch");
    Ref out = fresh(a->value.shape, {a, b});
    const S* pa = a->value.data();
    const S* pb = b->value.data();
    S* po = out->value.data();
    for (int64_t i = 0, n = out->value.numel(); i < n; ++i) po[i] = pa[i] + pb[i];
    check_finite("add", out->value);
    record(out, [=] {
      const S* g = out->grad.data();
      int64_t n = out->grad.numel();
      if (a->requires_grad) {
        S* ga = a->grad.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (b->requires_grad) {
        S* gb = b->grad.data();
        for (int64_t i = 0; i < n; ++i) gb[i] += g[i];
      }
    });
    return out;
  }

  // x (R,C) + bias (C) broadcast over rows
  Ref bias_add(Ref x, Ref b) {
    require(x->value.ndim() >= 1 && b->value.ndim() == 1, "bias_add: rank");
    int C = b->value.dim(0);
    require(x->value.shape.back() == C, "bias_add: width");
    int64_t R = x->value.numel() / C;
    Ref out = fresh(x->value.shape, {x, b});
    const S* px = x->value.data();
    const S* pb = b->value.data();
    S* po = out->value.data();
    for (int64_t r = 0; r < R; ++r)
      for (int j = 0; j < C; ++j) po[r * C + j] = px[r * C + j] + pb[j];
    check_finite("bias_add", out->value);
    record(out, [=] {
      const S* g = out->grad.data();
      if (x->requires_grad) {
        S* gx = x->grad.data();
        for (int64_t i = 0, n = out->grad.numel(); i < n; ++i) gx[i] += g[i];
      }
      if (b->requires_grad) {
        S* gb = b->grad.data();
        for (int64_t r = 0; r < R; ++r)
          for (int j = 0; j < C; ++j) gb[j] += g[r * C + j];
      }
    });
    return out;
  }

  Ref mul(Ref a, Ref b) {
    require(a->value.shape == b->value.shape, "mul: shape mismatch");
    Ref out = fresh(a->value.shape, {a, b});
    const S* pa = a->value.data();
    const S* pb = b->value.data();
    S* po = out->value.data();
    for (int64_t i = 0, n = out->value.numel(); i < n; ++i) po[i] = pa[i] * pb[i];
    check_finite("mul", out->value);
    record(out, [=] {
      const S* g = out->grad.data();
      int64_t n = out->grad.numel();
      if (a->requires_grad) {
        S* ga = a->grad.data();
        const S* pb2 = b->value.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * pb2[i];
      }
      if (b->requires_grad) {
        S* gb = b->grad.data();
        const S* pa2 = a->value.data();
        for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * pa2[i];
      }
    });
    return out;
  }

  Ref scale(Ref x, S c) {
    Ref out = fresh(x->value.shape, {x});
    const S* px = x->value.data();
    S* po = out->value.data();
    for (int64_t i = 0, n = out->value.numel(); i < n; ++i) po[i] = px[i] * c;
    check_finite("scale", out->value);
    record(out, [=] {
      if (!x->requires_grad) return;
      const S* g = out->grad.data();
      S* gx = x->grad.data();
      for (int64_t i = 0, n = out->grad.numel(); i < n; ++i) gx[i] += g[i] * c;
    });
    return out;
  }

  Ref relu(Ref x) {
    Ref out = fresh(x->value.shape, {x});
    const S* px = x->value.data();
    S* po = out->value.data();
    for (int64_t i = 0, n = out->value.numel(); i < n; ++i) po[i] = px[i] > S(0) ? px[i] : S(0);
    record(out, [=] {
      if (!x->requires_grad) return;
      const S* g = out->grad.data();
      const S* px2 = x->value.data();
      S* gx = x->grad.data();
      for (int64_t i = 0, n = out->grad.numel(); i < n; ++i)
        if (px2[i] > S(0)) gx[i] += g[i];
    });
    return out;
  }

  // Softmax over the last dimension.
  Ref softmax_rows(Ref x) {
    require(x->value.ndim() >= 1, "softmax: rank");
    int C = x->value.shape.back();
    int64_t R = x->value.numel() / C;
    Ref out = fresh(x->value.shape, {x});
    const S* px = x->value.data();
    S* po = out->value.data();
#pragma omp parallel for schedule(static) if (R * C > kParThreshold)
    for (int64_t r = 0; r < R; ++r) {
      const S* xi = px + r * C;
      S* yi = po + r * C;
      for (int j = 0; j < C; ++j) yi[j] = xi[j];
      softmax_row(yi, C);
    }
    check_finite("softmax", out->value);
    record(out, [=] {
      if (!x->requires_grad) return;
      const S* g = out->grad.data();
      const S* y = out->value.data();
      S* gx = x->grad.data();
      for (int64_t r = 0; r < R; ++r) {
        const S* gi = g + r * C;
        const S* yi = y + r * C;
        S dot = S(0);
        for (int j = 0; j < C; ++j) dot += gi[j] * yi[j];
        S* gxi = gx + r * C;
        for (int j = 0; j < C; ++j) gxi[j] += (gi[j] - dot) * yi[j];
      }
    });
    return out;
  }

  // Layer norm over the last dimension with affine gain/bias.
  Ref layer_norm(Ref x, Ref gain, Ref bias) {
    int C = x->value.shape.back();
    require(gain->value.numel() == C && bias->value.numel() == C, "layer_norm: affine dims");
    int64_t R = x->value.numel() / C;
    Ref out = fresh(x->value.shape, {x, gain, bias});
    auto xhat = std::make_shared<std::vector<S>>(x->value.numel());
    auto inv_std = std::make_shared<std::vector<S>>(R);
    const S eps = S(1e-5);
    const S* px = x->value.data();
    const S* pg = gain->value.data();
    const S* pb = bias->value.data();
    S* po = out->value.data();
    for (int64_t r = 0; r < R; ++r) {
      const S* xi = px + r * C;
      S mu = S(0);
      for (int j = 0; j < C; ++j) mu += xi[j];
      mu /= S(C);
      S var = S(0);
      for (int j = 0; j < C; ++j) {
        S d = xi[j] - mu;
        var += d * d;
      }
      var /= S(C);
      S inv = S(1) / std::sqrt(var + eps);
      (*inv_std)[r] = inv;
      S* xh = xhat->data() + r * C;
      S* yi = po + r * C;
      for (int j = 0; j < C; ++j) {
        xh[j] = (xi[j] - mu) * inv;
        yi[j] = xh[j] * pg[j] + pb[j];
      }
    }
    check_finite("layer_norm", out->value);
    record(out, [=] {
      const S* g = out->grad.data();
      const S* pg2 = gain->value.data();
      if (gain->requires_grad || bias->requires_grad) {
        S* gg = gain->requires_grad ? gain->grad.data() : nullptr;
        S* gb = bias->requires_grad ? bias->grad.data() : nullptr;
        for (int64_t r = 0; r < R; ++r) {
          const S* gi = g + r * C;
          const S* xh = xhat->data() + r * C;
          for (int j = 0; j < C; ++j) {
            if (gg) gg[j] += gi[j] * xh[j];
            if (gb) gb[j] += gi[j];
          }
        }
      }
      if (!x->requires_grad) return;
      S* gx = x->grad.data();
      for (int64_t r = 0; r < R; ++r) {
        const S* gi = g + r * C;
        const S* xh = xhat->data() + r * C;
        const S inv = (*inv_std)[r];
        S sum_dxhat = S(0), sum_dxhat_xhat = S(0);
        for (int j = 0; j < C; ++j) {
          S dxh = gi[j] * pg2[j];
          sum_dxhat += dxh;
          sum_dxhat_xhat += dxh * xh[j];
        }
        S* gxi = gx + r * C;
        for (int j = 0; j < C; ++j) {
          S dxh = gi[j] * pg2[j];
          gxi[j] += inv / S(C) * (S(C) * dxh - sum_dxhat - xh[j] * sum_dxhat_xhat);
        }
      }
    });
    return out;
  }

  // Rows of table gathered by id. ids are captured by value.
  Ref embedding(Ref table, std::vector<int> ids) {
    require(table->value.ndim() == 2, "embedding: table rank");
    int V = table->value.dim(0), D = table->value.dim(1);
    for (int id : ids)
      require(id >= 0 && id < V, "embedding: id out of range");
    Ref out = fresh({static_cast<int>(ids.size()), D}, {table});
    const S* pt = table->value.data();
    S* po = out->value.data();
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < D; ++j) po[i * D + j] = pt[static_cast<int64_t>(ids[i]) * D + j];
    record(out, [=, ids = std::move(ids)] {
      if (!table->requires_grad) return;
      const S* g = out->grad.data();
      S* gt = table->grad.data();
      for (size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < D; ++j) gt[static_cast<int64_t>(ids[i]) * D + j] += g[i * D + j];
    });
    return out;
  }

  // Inverted dropout with an explicit RNG stream; identity when p == 0.
  Ref dropout(Ref x, double p, Rng& rng) {
    if (p <= 0.0) return x;
    require(p < 1.0, "dropout: p must be < 1");
    auto mask = std::make_shared<std::vector<S>>(x->value.numel());
    std::bernoulli_distribution keep(1.0 - p);
    const S scale_v = S(1.0 / (1.0 - p));
    for (auto& m : *mask) m = keep(rng) ? scale_v : S(0);
    Ref out = fresh(x->value.shape, {x});
    const S* px = x->value.data();
    S* po = out->value.data();
    for (int64_t i = 0, n = out->value.numel(); i < n; ++i) po[i] = px[i] * (*mask)[i];
    record(out, [=] {
      if (!x->requires_grad) return;
      const S* g = out->grad.data();
      S* gx = x->grad.data();
      for (int64_t i = 0, n = out->grad.numel(); i < n; ++i) gx[i] += g[i] * (*mask)[i];
    });
    return out;
  }

  // (A,B,C,D) -> (A,C,B,D)
  Ref transpose_0213(Ref x) {
    require(x->value.ndim() == 4, "transpose_0213: rank");
    int A = x->value.dim(0), B = x->value.dim(1), C = x->value.dim(2), D = x->value.dim(3);
    Ref out = fresh({A, C, B, D}, {x});
    const S* px = x->value.data();
    S* po = out->value.data();
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const S* src = px + (((static_cast<int64_t>(a) * B + b) * C) + c) * D;
          S* dst = po + (((static_cast<int64_t>(a) * C + c) * B) + b) * D;
          for (int d = 0; d < D; ++d) dst[d] = src[d];
        }
    record(out, [=] {
      if (!x->requires_grad) return;
      const S* g = out->grad.data();
      S* gx = x->grad.data();
      for (int a = 0; a < A; ++a)
        for (int c = 0; c < C; ++c)
          for (int b = 0; b < B; ++b) {
            const S* src = g + (((static_cast<int64_t>(a) * C + c) * B) + b) * D;
            S* dst = gx + (((static_cast<int64_t>(a) * B + b) * C) + c) * D;
            for (int d = 0; d < D; ++d) dst[d] += src[d];
          }
    });
    return out;
  }

  // Zero-copy view; value and grad buffers are shared with the input.
  Ref reshape(Ref x, std::vector<int> shape) {
    require(TensorT<S>::numel_of(shape) == x->value.numel(), "reshape: numel mismatch");
    auto out = std::make_shared<Node>();
    out->value.shape = shape;
    out->value.buf = x->value.buf;
    out->requires_grad = x->requires_grad;
    if (x->requires_grad) {
      out->grad.shape = std::move(shape);
      out->grad.buf = x->grad.buf;
    }
    keepalive_.push_back(out);
    return out;
  }

  // scores (B*H, Tq, Tk) plus a constant additive mask (B, Tq, Tk), broadcast
  // over heads. Gradient passes straight through.
  Ref add_attn_mask(Ref scores, const TensorT<S>& mask, int heads) {
    require(scores->value.ndim() == 3 && mask.ndim() == 3, "add_attn_mask: rank");
    int BH = scores->value.dim(0), Tq = scores->value.dim(1), Tk = scores->value.dim(2);
    require(mask.dim(1) == Tq && mask.dim(2) == Tk && mask.dim(0) * heads == BH,
            "add_attn_mask: dims");
    Ref out = fresh(scores->value.shape, {scores});
    const int64_t plane = static_cast<int64_t>(Tq) * Tk;
    const S* px = scores->value.data();
    const S* pm = mask.data();
    S* po = out->value.data();
    for (int bh = 0; bh < BH; ++bh) {
      const S* m = pm + (bh / heads) * plane;
      const S* xi = px + bh * plane;
      S* yi = po + bh * plane;
      for (int64_t i = 0; i < plane; ++i) yi[i] = xi[i] + m[i];
    }
    record(out, [=] {
      if (!scores->requires_grad) return;
      const S* g = out->grad.data();
      S* gx = scores->grad.data();
      for (int64_t i = 0, n = out->grad.numel(); i < n; ++i) gx[i] += g[i];
    });
    return out;
  }

  // Teacher-forced token loss: mean negative log-likelihood over positions
  // whose target differs from ignore_index.
  Ref cross_entropy(Ref logits, std::vector<int> targets, int ignore_index) {
    require(logits->value.ndim() == 2, "cross_entropy: logits rank");
    int N = logits->value.dim(0), V = logits->value.dim(1);
    require(static_cast<int>(targets.size()) == N, "cross_entropy: target count");
    int64_t counted = 0;
    for (int t : targets) {
      if (t == ignore_index) continue;
      require(t >= 0 && t < V, "cross_entropy: target out of range");
      ++counted;
    }
    require(counted > 0, "cross_entropy: all positions ignored");
    Ref out = fresh({1}, {logits});
    auto lse = std::make_shared<std::vector<S>>(N);
    const S* pl = logits->value.data();
    double loss = 0.0;
    for (int i = 0; i < N; ++i) {
      if (targets[i] == ignore_index) continue;
      const S* row = pl + static_cast<int64_t>(i) * V;
      S mx = row[0];
      for (int j = 1; j < V; ++j) mx = row[j] > mx ? row[j] : mx;
      S sum = S(0);
      for (int j = 0; j < V; ++j) sum += std::exp(row[j] - mx);
      S l = mx + std::log(sum);
      (*lse)[i] = l;
      loss += static_cast<double>(l - row[targets[i]]);
    }
    out->value.data()[0] = static_cast<S>(loss / static_cast<double>(counted));
    check_finite("cross_entropy", out->value);
    record(out, [=, targets = std::move(targets)] {
      if (!logits->requires_grad) return;
      const S g = out->grad.data()[0] / static_cast<S>(counted);
      const S* pl2 = logits->value.data();
      S* gl = logits->grad.data();
      for (int i = 0; i < N; ++i) {
        if (targets[i] == ignore_index) continue;
        const S* row = pl2 + static_cast<int64_t>(i) * V;
        S* grow = gl + static_cast<int64_t>(i) * V;
        const S l = (*lse)[i];
        for (int j = 0; j < V; ++j) {
          S p = std::exp(row[j] - l);
          grow[j] += g * (p - (j == targets[i] ? S(1) : S(0)));
        }
      }
    });
    return out;
  }

  Ref sum_all(Ref x) {
    Ref out = fresh({1}, {x});
    const S* px = x->value.data();
    S acc = S(0);
    for (int64_t i = 0, n = x->value.numel(); i < n; ++i) acc += px[i];
    out->value.data()[0] = acc;
    record(out, [=] {
      if (!x->requires_grad) return;
      const S g = out->grad.data()[0];
      S* gx = x->grad.data();
      for (int64_t i = 0, n = x->value.numel(); i < n; ++i) gx[i] += g;
    });
    return out;
  }

  Ref constant(TensorT<S> value) {
    auto n = make_const(std::move(value));
    keepalive_.push_back(n);
    return n;
  }
  Ref input(TensorT<S> value) { return constant(std::move(value)); }

  void backward(Ref loss) {
    require(loss->value.numel() == 1, "backward: loss must be scalar");
    if (back_done_) throw UsageError("backward called twice without reset");
    back_done_ = true;
    if (!loss->requires_grad) return;
    loss->grad.data()[0] = S(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  void clear() {
    ops_.clear();
    keepalive_.clear();
    back_done_ = false;
  }

  size_t num_ops() const { return ops_.size(); }

 private:
  static void require(bool ok, const char* msg) {
    if (!ok) throw UsageError(msg);
  }

  Ref fresh(std::vector<int> shape, std::initializer_list<Ref> inputs) {
    auto out = std::make_shared<Node>();
    out->value = TensorT<S>(std::move(shape));
    for (const Ref& in : inputs) out->requires_grad |= in->requires_grad;
    if (out->requires_grad) out->ensure_grad();
    keepalive_.push_back(out);
    return out;
  }

  void record(Ref out, std::function<void()> fn) {
    if (out->requires_grad) ops_.push_back(std::move(fn));
  }

  std::vector<std::function<void()>> ops_;
  std::vector<Ref> keepalive_;
  bool back_done_ = false;
};

using Tensor = TensorT<float>;
using Node = NodeT<float>;
using NodeRef = NodeRefT<float>;
using Tape = TapeT<float>;

}  // namespace anchormt::num
