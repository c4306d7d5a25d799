#pragma once

#include <string>
#include <utility>
#include <vector>

#include "anchormt/tensor.hpp"

namespace anchormt::num {

// Single binary file, little endian. Layout:
//   u8 version | u8 scalar_width | u32 tensor count |
//   per tensor: u16 name_len, name, u8 rank, u64 dims[rank] |
//   raw buffers in table order (f32 or f64 per scalar_width).
struct NamedTensor {
  std::string name;
  TensorT<double> tensor;  // held in double; converted on save/load
};

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors,
                     int scalar_width = 4);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

template <class S>
NamedTensor to_named(std::string name, const TensorT<S>& t) {
  NamedTensor nt;
  nt.name = std::move(name);
  nt.tensor = TensorT<double>(t.shape);
  const S* src = t.data();
  double* dst = nt.tensor.data();
  for (int64_t i = 0, n = t.numel(); i < n; ++i) dst[i] = static_cast<double>(src[i]);
  return nt;
}

template <class S>
void copy_into(const NamedTensor& nt, TensorT<S>& dst) {
  if (nt.tensor.shape != dst.shape)
    throw DataError("checkpoint tensor " + nt.name + ": shape mismatch, file " +
                    shape_str(nt.tensor.shape) + " vs model " + shape_str(dst.shape));
  const double* src = nt.tensor.data();
  S* d = dst.data();
  for (int64_t i = 0, n = dst.numel(); i < n; ++i) d[i] = static_cast<S>(src[i]);
}

}  // namespace anchormt::num
