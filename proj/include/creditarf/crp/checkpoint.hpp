#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "creditarf/numerics.hpp"

namespace creditarf::crp {

struct TrainingMeta {
  std::uint64_t spec_digest = 0;
  std::uint32_t epochs = 0;
  double final_lr = 0.0;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

// CARF file: "CARF", u16 version, u32 tensor count; per tensor a u16
// length-prefixed name, u8 rank, rank x u32 dims and little-endian float32
// data; then u32 CRC-32 of every preceding byte.
//
// Metadata travels as three extra tensors after the parameters. Integers are
// split into 16-bit chunks, each exact in float32:
//   meta.spec_digest [4], meta.epochs [2], meta.final_lr [4] (IEEE-754 double bits)
struct Checkpoint {
  static constexpr std::uint16_t kVersion = 1;

  std::vector<std::pair<std::string, nx::Tensor<float>>> tensors;  // parameters, in model order
  TrainingMeta meta;

  static Checkpoint capture(const nx::ParameterSet<float>& params, const TrainingMeta& meta);
  // Copies values into `params`. Names, order and shapes must match exactly.
  void restore(nx::ParameterSet<float>& params) const;

  std::vector<std::uint8_t> serialize() const;
  // Throws InputError on bad magic, version, CRC, truncation or missing metadata.
  static Checkpoint parse(const std::vector<std::uint8_t>& bytes, const std::string& what = "checkpoint");

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace creditarf::crp
