#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "creditarf/app/run_config.hpp"
#include "creditarf/app/synth.hpp"
#include "creditarf/dataset/store.hpp"
#include "creditarf/train/metrics.hpp"

namespace creditarf::app {

namespace fs = std::filesystem;

// Each command writes only under `out` and reports progress on `log`.
// Errors surface as InputError, NumericError or ModeError; see exit_code().

// financial CSV + report directory -> dataset store
data::DatasetStore cmd_ingest(const RunConfig& config, const fs::path& csv, const fs::path& reports,
                              const fs::path& out, std::ostream& log);

// provider is "hash" or "cache:<ARFE path>". Writes the store with report
// vectors plus embeddings.arfe holding the sentence embeddings.
data::DatasetStore cmd_embed(const RunConfig& config, const fs::path& store, const std::string& provider,
                             const fs::path& out, std::ostream& log);

struct TrainOutcome {
  train::TrainResult result;
  std::size_t train_count = 0;  // after oversampling
  std::size_t validation_count = 0;
  std::size_t test_count = 0;
};

// split -> standardize -> validation carve -> SMOTE -> fit. Writes
// model.carf, run.json and history.csv.
TrainOutcome cmd_train(const RunConfig& config, const fs::path& store, const fs::path& out, std::ostream& log);

// Evaluates a checkpoint (model.carf with run.json beside it) on the held-out
// split recorded at training time. Writes report.json and confusion.csv.
train::EvalReport cmd_eval(const fs::path& ckpt, const fs::path& store, const fs::path& out, std::ostream& log);

// a and b are report.json files or directories holding one. Writes
// comparison.txt and comparison.csv.
train::Comparison cmd_compare(const fs::path& a, const fs::path& b, const fs::path& out, std::ostream& log);

void cmd_synth(const SynthSpec& spec, std::uint64_t seed, const fs::path& out, std::ostream& log);

// 0 success, 2 input or schema, 3 numeric failure, 4 mode mismatch
int exit_code(const std::exception& e);

// Full command-line entry point; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace creditarf::app
