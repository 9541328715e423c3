#include "compresslab/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace compresslab {
namespace {

constexpr char kMagic[8] = {'C', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw NumericError("checkpoint truncated");
  return value;
}

std::string get_string(std::istream& in, std::uint64_t length) {
  if (length > (std::uint64_t{1} << 32)) throw NumericError("checkpoint: implausible string length");
  std::string text(length, '\0');
  if (length > 0 && !in.read(text.data(), static_cast<std::streamsize>(length)))
    throw NumericError("checkpoint truncated");
  return text;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::string& config,
                      std::span<const Parameter* const> parameters) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config.size());
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  put<std::uint64_t>(out, parameters.size());
  for (const Parameter* p : parameters) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t dim : p->value.shape()) put<std::uint64_t>(out, dim);
    out.write(reinterpret_cast<const char*>(p->value.values().data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw NumericError("checkpoint write failed");
}

void write_checkpoint(const std::filesystem::path& path, const std::string& config,
                      std::span<const Parameter* const> parameters) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot write checkpoint " + path.string());
  write_checkpoint(out, config, parameters);
}

CheckpointContents read_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw NumericError("not a checkpoint file (bad magic)");
  CheckpointContents contents;
  contents.version = get<std::uint32_t>(in);
  if (contents.version != kCheckpointVersion)
    throw NumericError("unsupported checkpoint version " + std::to_string(contents.version));
  contents.config = get_string(in, get<std::uint64_t>(in));
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t t = 0; t < count; ++t) {
    std::string name = get_string(in, get<std::uint32_t>(in));
    const auto rank = get<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw NumericError("checkpoint: bad rank for " + name);
    Shape shape;
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(get<std::uint64_t>(in));
      total *= shape.back();
    }
    if (total > (std::uint64_t{1} << 32)) throw NumericError("checkpoint: implausible tensor size");
    std::vector<double> data(total);
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(total * sizeof(double))))
      throw NumericError("checkpoint truncated in tensor " + name);
    contents.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return contents;
}

CheckpointContents read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void assign_parameters(const CheckpointContents& contents,
                       std::span<Parameter* const> parameters) {
  std::map<std::string, const Tensor*> stored;
  for (const auto& [name, tensor] : contents.tensors) stored[name] = &tensor;
  for (Parameter* p : parameters) {
    auto it = stored.find(p->name);
    if (it == stored.end()) throw NumericError("checkpoint lacks parameter " + p->name);
    if (it->second->shape() != p->value.shape())
      throw ShapeError("checkpoint shape " + shape_string(it->second->shape()) +
                       " for parameter " + p->name + ", expected " +
                       shape_string(p->value.shape()));
    p->value = *it->second;
    p->grad = Tensor(p->value.shape());
  }
}

}  // namespace compresslab
