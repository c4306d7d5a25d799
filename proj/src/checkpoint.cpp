#include "anchormt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace anchormt::num {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors,
                     int scalar_width) {
  if (scalar_width != 4 && scalar_width != 8)
    throw UsageError("checkpoint: scalar_width must be 4 or 8");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  put<uint8_t>(out, 1);  // version
  put<uint8_t>(out, static_cast<uint8_t>(scalar_width));
  put<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > 0xFFFF) throw UsageError("checkpoint: tensor name too long");
    put<uint16_t>(out, static_cast<uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<uint8_t>(out, static_cast<uint8_t>(t.tensor.ndim()));
    for (int d : t.tensor.shape) put<uint64_t>(out, static_cast<uint64_t>(d));
  }
  for (const auto& t : tensors) {
    const double* p = t.tensor.data();
    int64_t n = t.tensor.numel();
    if (scalar_width == 8) {
      out.write(reinterpret_cast<const char*>(p), n * 8);
    } else {
      std::vector<float> tmp(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) tmp[static_cast<size_t>(i)] = static_cast<float>(p[i]);
      out.write(reinterpret_cast<const char*>(tmp.data()), n * 4);
    }
  }
  if (!out) throw DataError("I/O error writing " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  auto version = get<uint8_t>(in);
  if (version != 1) throw DataError("checkpoint: unsupported version");
  auto width = get<uint8_t>(in);
  if (width != 4 && width != 8) throw DataError("checkpoint: bad scalar width");
  auto count = get<uint32_t>(in);
  std::vector<NamedTensor> tensors(count);
  for (auto& t : tensors) {
    auto name_len = get<uint16_t>(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    auto rank = get<uint8_t>(in);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(get<uint64_t>(in));
    t.tensor = TensorT<double>(std::move(shape));
    if (!in) throw DataError("checkpoint: truncated header");
  }
  for (auto& t : tensors) {
    int64_t n = t.tensor.numel();
    if (width == 8) {
      in.read(reinterpret_cast<char*>(t.tensor.data()), n * 8);
    } else {
      std::vector<float> tmp(static_cast<size_t>(n));
      in.read(reinterpret_cast<char*>(tmp.data()), n * 4);
      for (int64_t i = 0; i < n; ++i) t.tensor.data()[i] = tmp[static_cast<size_t>(i)];
    }
    if (!in) throw DataError("checkpoint: truncated buffers");
  }
  return tensors;
}

}  // namespace anchormt::num
