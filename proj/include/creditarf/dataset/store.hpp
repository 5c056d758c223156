#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "creditarf/dataset/preprocess.hpp"
#include "creditarf/dataset/sample.hpp"

namespace creditarf::data {

struct Provenance {
  std::string csv;
  std::string reports;
  std::string arfe_cache;
};

// On disk: <dir>/samples.jsonl (one sample per line) and <dir>/stats.json.
struct DatasetStore {
  std::vector<Sample> samples;
  std::vector<std::string> feature_names;
  std::size_t arf_dim = 0;  // 0 when samples carry no arf vector
  std::uint64_t seed = 0;
  Provenance provenance;
  std::optional<Standardization> standardization;  // fitted on the train split only
  std::optional<SplitIndices> split;
  std::vector<std::string> warnings;

  // Throws InputError when a sample disagrees with feature_names or arf_dim.
  void validate() const;
};

void save_store(const DatasetStore& store, const std::filesystem::path& dir);
DatasetStore load_store(const std::filesystem::path& dir);

}  // namespace creditarf::data
