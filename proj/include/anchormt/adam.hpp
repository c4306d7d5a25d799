#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "anchormt/tape.hpp"
#include "anchormt/tensor.hpp"

namespace anchormt::num {

// Adam with bias correction. Effective lr ramps linearly over warmup_steps,
// then decays as inverse square root.
template <class S>
struct AdamStateT {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t warmup_steps = 4000;
  double clip_norm = 0.0;  // 0 disables clipping
  int64_t step = 0;
  int64_t skipped = 0;  // steps dropped on non-finite gradients
  std::vector<TensorT<S>> m, v;

  double lr_at(int64_t t) const {
    int64_t w = warmup_steps > 0 ? warmup_steps : 1;
    double scale = std::min(static_cast<double>(t) / static_cast<double>(w),
                            std::sqrt(static_cast<double>(w) / static_cast<double>(t)));
    return lr * scale;
  }
};

using AdamState = AdamStateT<float>;

// One update over the parameter list. Gradients are consumed (zeroed).
// Returns false when any gradient is non-finite; the step is skipped whole.
template <class S>
bool adam_step(std::vector<NodeRefT<S>>& params, AdamStateT<S>& st) {
  if (st.m.empty()) {
    for (auto& p : params) {
      st.m.emplace_back(p->value.shape);
      st.v.emplace_back(p->value.shape);
    }
  }
  for (auto& p : params) {
    if (!p->grad.defined() || !all_finite(p->grad)) {
      ++st.skipped;
      for (auto& q : params) q->zero_grad();
      return false;
    }
  }

  double clip_scale = 1.0;
  if (st.clip_norm > 0.0) {
    double sq = 0.0;
    for (auto& p : params) {
      const S* g = p->grad.data();
      for (int64_t i = 0, n = p->grad.numel(); i < n; ++i)
        sq += static_cast<double>(g[i]) * static_cast<double>(g[i]);
    }
    double norm = std::sqrt(sq);
    if (norm > st.clip_norm) clip_scale = st.clip_norm / norm;
  }

  ++st.step;
  const double t = static_cast<double>(st.step);
  const double lr_eff = st.lr_at(st.step);
  const double bc1 = 1.0 - std::pow(st.beta1, t);
  const double bc2 = 1.0 - std::pow(st.beta2, t);
  for (size_t k = 0; k < params.size(); ++k) {
    S* w = params[k]->value.data();
    S* g = params[k]->grad.data();
    S* m = st.m[k].data();
    S* v = st.v[k].data();
    for (int64_t i = 0, n = params[k]->value.numel(); i < n; ++i) {
      double gi = static_cast<double>(g[i]) * clip_scale;
      double mi = st.beta1 * m[i] + (1.0 - st.beta1) * gi;
      double vi = st.beta2 * v[i] + (1.0 - st.beta2) * gi * gi;
      m[i] = static_cast<S>(mi);
      v[i] = static_cast<S>(vi);
      double mhat = mi / bc1;
      double vhat = vi / bc2;
      w[i] = static_cast<S>(w[i] - lr_eff * mhat / (std::sqrt(vhat) + st.eps));
      g[i] = S(0);
    }
  }
  return true;
}

}  // namespace anchormt::num
