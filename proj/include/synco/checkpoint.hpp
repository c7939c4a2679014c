#pragma once

// Binary checkpoint container (little-endian), layout documented in docs/FORMATS.md:
//   "SYNCOCKP" | u32 version | u64 seed | u64 epoch | u64 step | f64 key momentum
//   | u32 layer count + 1 | u64 layer sizes... | query params | key params | velocity
//   | u64 queue capacity | u64 queue dim | u64 queue size | f64 queue rows, oldest first

#include <cstdint>
#include <filesystem>

#include "synco/trainer.hpp"

namespace synco {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const TrainState& state);

/// Throws IoError when the file cannot be read and FormatError on a malformed payload.
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace synco
