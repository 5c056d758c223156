#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "creditarf/dataset/financial_csv.hpp"

namespace creditarf::app {

// Synthetic corpus with a tunable split of class signal between channels.
// rho = 0: reports are class-independent noise. rho = 1: financial values
// are class-independent noise.
struct SynthSpec {
  std::size_t samples_per_class = 60;
  double rho = 0.5;
  std::size_t signal_features = 16;  // leading ratio columns that carry class means, >= 7
  double separation = 5.0;           // norm of a class's mean offset at rho = 0, in noise standard deviations
  std::size_t sentences_per_report = 40;
  std::size_t keywords_per_class = 2;
  std::size_t filler_vocabulary = 400;
  int first_year = 2010;
  std::size_t years = 10;

  void validate() const;
};

SynthSpec parse_synth_spec(const nlohmann::json& j);
SynthSpec load_synth_spec(const std::filesystem::path& path);
nlohmann::json to_json(const SynthSpec& s);

struct SynthCorpus {
  std::vector<data::FinancialRecord> records;
  std::vector<std::pair<std::string, std::string>> reports;  // file name, text
};

SynthCorpus generate_synth(const SynthSpec& spec, std::uint64_t seed);

// <dir>/financials.csv and <dir>/reports/<slug>_<year>.txt
void write_synth(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace creditarf::app
