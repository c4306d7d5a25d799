#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "anchormt/errors.hpp"

namespace anchormt::num {

// Dense row-major tensor. The buffer is shared so reshapes can alias.
template <class S>
struct TensorT {
  std::vector<int> shape;
  std::shared_ptr<std::vector<S>> buf;

  TensorT() = default;
  explicit TensorT(std::vector<int> shp)
      : shape(std::move(shp)),
        buf(std::make_shared<std::vector<S>>(numel_of(shape), S(0))) {}

  static int64_t numel_of(const std::vector<int>& shp) {
    int64_t n = 1;
    for (int d : shp) n *= d;
    return n;
  }

  static TensorT zeros(std::vector<int> shp) { return TensorT(std::move(shp)); }
  static TensorT full(std::vector<int> shp, S v) {
    TensorT t(std::move(shp));
    std::fill(t.buf->begin(), t.buf->end(), v);
    return t;
  }
  static TensorT from(std::vector<int> shp, std::vector<S> data) {
    TensorT t;
    t.shape = std::move(shp);
    if (numel_of(t.shape) != static_cast<int64_t>(data.size()))
      throw UsageError("tensor: shape/data size mismatch");
    t.buf = std::make_shared<std::vector<S>>(std::move(data));
    return t;
  }

  int64_t numel() const { return buf ? static_cast<int64_t>(buf->size()) : 0; }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  S* data() { return buf->data(); }
  const S* data() const { return buf->data(); }
  bool defined() const { return static_cast<bool>(buf); }

  TensorT clone() const {
    TensorT t;
    t.shape = shape;
    t.buf = std::make_shared<std::vector<S>>(*buf);
    return t;
  }
  void fill(S v) { std::fill(buf->begin(), buf->end(), v); }
};

inline std::atomic<bool>& finite_checks() {
  static std::atomic<bool> on{true};
  return on;
}

template <class S>
void check_finite(const char* op, const TensorT<S>& t) {
  if (!finite_checks().load(std::memory_order_relaxed)) return;
  const S* p = t.data();
  int64_t n = t.numel();
  // x * 0 is NaN exactly for non-finite x; the accumulation vectorizes.
  S acc = S(0);
  for (int64_t i = 0; i < n; ++i) acc += p[i] * S(0);
  if (!(acc == S(0)))
    throw NumericError(std::string("non-finite value in op ") + op);
}

template <class S>
bool all_finite(const TensorT<S>& t) {
  const S* p = t.data();
  for (int64_t i = 0, n = t.numel(); i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

}  // namespace anchormt::num
