#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "saec/tensor.hpp"

namespace saec {

class Trainer;

inline constexpr char kCheckpointMagic[4] = {'S', 'A', 'E', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One named array. Dimensions may be zero (an empty replay buffer).
struct TensorRecord {
  std::string name;
  Shape dims;
  std::vector<double> data;
};

struct CheckpointFile {
  std::uint64_t iteration = 0;
  std::vector<TensorRecord> records;
};

/// Layout: "SAEC", u32 version, u64 iteration, u64 record count, then per
/// record u32 name length, name bytes, u32 rank, u64 dims, f64 data. All
/// integers and floats little-endian.
std::string encode_checkpoint(const CheckpointFile& file);
CheckpointFile decode_checkpoint(const std::string& bytes);

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file);
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

/// Every parameter set, the temperature, optimizer moments and, optionally,
/// the replay buffer.
CheckpointFile capture_trainer(const Trainer& trainer, bool include_replay);
/// Validates names and shapes against the trainer's own layout before
/// touching any state.
void restore_trainer(const CheckpointFile& file, Trainer& trainer);

void save_checkpoint(const std::filesystem::path& path, const Trainer& trainer, bool include_replay);
void load_checkpoint(const std::filesystem::path& path, Trainer& trainer);

}  // namespace saec
