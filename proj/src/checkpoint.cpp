#include "xscript/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "xscript/errors.hpp"

namespace xscript {

namespace {

constexpr char kMagic[8] = {'X', 'S', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("checkpoint truncated: " + path);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const NamedTensors& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_raw<std::uint64_t>(os, params.size());
  for (const auto& [name, tensor] : params) {
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& shape = tensor.shape();
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) write_raw<std::int32_t>(os, d);
    const auto& data = tensor.data();
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

NamedTensors load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  const auto count = read_raw<std::uint64_t>(is, path);
  NamedTensors out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw DataError("checkpoint truncated: " + path);
    const auto rank = read_raw<std::uint32_t>(is, path);
    Shape shape(rank);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = read_raw<std::int32_t>(is, path);
      if (shape[d] <= 0) throw DataError("bad dimension in checkpoint: " + path);
      n *= static_cast<std::size_t>(shape[d]);
    }
    std::vector<double> data(n);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw DataError("checkpoint truncated: " + path);
    out.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(data)));
  }
  return out;
}

void load_checkpoint_into(const std::string& path, NamedTensors& params) {
  NamedTensors stored = load_checkpoint(path);
  std::map<std::string, Tensor> by_name;
  for (auto& [name, tensor] : stored) {
    if (!by_name.emplace(name, tensor).second)
      throw DataError("duplicate checkpoint entry '" + name + "' in " + path);
  }
  for (auto& [name, tensor] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw DataError("checkpoint " + path + " is missing parameter '" + name + "'");
    if (it->second.shape() != tensor.shape())
      throw DataError("checkpoint shape mismatch for '" + name + "' in " + path);
    tensor.mutable_data() = it->second.data();
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw DataError("checkpoint " + path + " has unexpected parameter '" +
                    by_name.begin()->first + "'");
}

}  // namespace xscript
