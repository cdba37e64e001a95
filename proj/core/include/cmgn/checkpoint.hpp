#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cmgn/trainer.hpp"

namespace cmgn {

// Binary checkpoint, little-endian throughout:
//
//   "CMGN"            magic
//   u32               format version (kCheckpointVersion)
//   u32 L             number of MLP layers
//   L x {u32 out, u32 in, u8 activation}
//   u32 d, u32 n      classifier shape
//   f64[...]          per layer: weights (row-major), biases; then classifier (row-major)
//   u8                1 if a velocity block follows, else 0
//   f64[...]          velocity, same layout as the parameters
//   f64 t, f64 momentum, u64 iteration_k, u8 statistic_kind, u8 momentum_placement
//   u64               epochs completed
//
// Reals are stored as raw IEEE-754 bits, so a round trip is bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const TrainingSnapshot& snapshot);
// Throws ParseError carrying the byte offset of the first bad field.
TrainingSnapshot decode_checkpoint(const std::string& bytes);

void save_checkpoint(const TrainingSnapshot& snapshot, const std::filesystem::path& path);
TrainingSnapshot load_checkpoint(const std::filesystem::path& path);

}  // namespace cmgn
