#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "creditarf/arf/encoder.hpp"
#include "creditarf/crp/model.hpp"
#include "creditarf/fnf/encoders.hpp"
#include "creditarf/train/trainer.hpp"

namespace creditarf::app {

// Offsets into the master seed: stream k uses nx::derive_seed(master, k).
enum class SeedStream : std::uint64_t {
  split = 0,
  validation = 1,
  smote = 2,
  model_init = 3,
  projection = 4,
  training = 5,
  embedding = 6,        // hash provider
  report_encoder = 7,   // frozen encoder used by embed
  synth = 8,
};

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream);

struct SplitSettings {
  double train_fraction = 0.75;
};

struct SmoteSettings {
  bool enabled = true;
  std::size_t k_neighbors = 5;
};

// Default locations for command inputs; command-line flags take precedence.
struct PathSettings {
  std::string csv;
  std::string reports;
  std::string store;
  std::string ckpt;
};

// One JSON document, one section per module. Unknown keys are rejected.
// Module seeds are not configurable: they derive from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  fnf::FnfConfig fnf;
  arf::ArfConfig arf;
  crp::CrpConfig crp;
  train::TrainConfig train;
  SmoteSettings smote;
  SplitSettings split;
  PathSettings paths;

  void validate() const;
  // Copy with every module seed derived from `seed`.
  RunConfig with_derived_seeds() const;
  crp::ModelSpec model_spec(std::size_t n_features, std::size_t arf_input_dim) const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace creditarf::app
