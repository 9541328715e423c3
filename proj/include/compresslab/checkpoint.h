#ifndef COMPRESSLAB_CHECKPOINT_H_
#define COMPRESSLAB_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compresslab/tensor.h"

namespace compresslab {

// Binary checkpoint layout (little-endian):
//   magic "CLABCKPT", u32 version, u64 config length, config bytes (JSON),
//   u64 tensor count, then per tensor:
//   u32 name length, name, u32 rank, u64 dims[rank], f64 data[product(dims)].
// Values are stored as raw IEEE-754 bits, so a round trip is bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointContents {
  std::uint32_t version = kCheckpointVersion;
  std::string config;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_checkpoint(std::ostream& out, const std::string& config,
                      std::span<const Parameter* const> parameters);
void write_checkpoint(const std::filesystem::path& path, const std::string& config,
                      std::span<const Parameter* const> parameters);

CheckpointContents read_checkpoint(std::istream& in);
CheckpointContents read_checkpoint(const std::filesystem::path& path);

// Copies stored tensors into parameters by name. Every parameter must be
// present with a matching shape.
void assign_parameters(const CheckpointContents& contents,
                       std::span<Parameter* const> parameters);

}  // namespace compresslab

#endif  // COMPRESSLAB_CHECKPOINT_H_
