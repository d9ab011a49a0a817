#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hcc/corpus.hpp"
#include "hcc/model.hpp"

namespace hcc {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointInfo {
  Vocabulary vocabulary;
  std::vector<std::string> phases;  // completed phases, e.g. {"P0", "P1", "P2", "P3"}
  std::uint64_t seed = 0;
};

struct Checkpoint {
  HybridModel model;
  CheckpointInfo info;
};

// "HCC1", u64 LE manifest length, JSON manifest, f32 LE payload.
std::string serialize_checkpoint(HybridModel& model, const CheckpointInfo& info);
// Throws FormatError (magic / manifest), VersionError, CorruptionError
// (truncation, digest mismatch, missing or duplicate tensors).
Checkpoint parse_checkpoint(std::string_view bytes, int reader_version = kCheckpointVersion);

void save_checkpoint(HybridModel& model, const CheckpointInfo& info,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           int reader_version = kCheckpointVersion);

std::string read_file(const std::filesystem::path& path);   // IoError
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hcc
