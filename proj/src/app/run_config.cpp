#include "creditarf/app/run_config.hpp"

#include <fstream>

#include "creditarf/config.hpp"
#include "creditarf/error.hpp"

namespace creditarf::app {
namespace {

using config::StrictObject;
using nlohmann::json;

void read_train(const json& j, const std::string& path, train::TrainConfig& c) {
  StrictObject o(j, path);
  o.get("epochs", c.epochs);
  o.get("batch_size", c.batch_size);
  o.get("lr", c.lr);
  o.get("weight_decay", c.weight_decay);
  o.get("plateau_factor", c.plateau_factor);
  o.get("plateau_patience", c.plateau_patience);
  o.get("min_lr", c.min_lr);
  o.get("validation_fraction", c.validation_fraction);
  o.finish();
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, SeedStream stream) {
  return nx::derive_seed(master, static_cast<std::uint64_t>(stream));
}

void RunConfig::validate() const {
  fnf.validate();
  arf.validate();
  crp.validate();
  train.validate();
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
    throw InputError("split config: train_fraction must be in (0, 1)");
  }
  if (smote.k_neighbors == 0) throw InputError("smote config: k_neighbors must be >= 1");
}

RunConfig RunConfig::with_derived_seeds() const {
  RunConfig c = *this;
  c.arf.provider_seed = stream_seed(seed, SeedStream::embedding);
  c.train.seed = stream_seed(seed, SeedStream::training);
  return c;
}

crp::ModelSpec RunConfig::model_spec(std::size_t n_features, std::size_t arf_input_dim) const {
  const RunConfig c = with_derived_seeds();
  crp::ModelSpec s;
  s.fnf = c.fnf;
  s.arf = c.arf;
  s.crp = c.crp;
  s.n_features = n_features;
  s.arf_input_dim = arf_input_dim;
  s.init_seed = stream_seed(seed, SeedStream::model_init);
  s.projection_seed = stream_seed(seed, SeedStream::projection);
  return s;
}

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  StrictObject root(j, "");
  root.get("seed", c.seed);
  if (const json* s = root.child("fnf")) config::read(*s, "fnf", c.fnf);
  if (const json* s = root.child("arf")) {
    if (s->is_object() && s->contains("provider_seed")) {
      throw InputError("config: 'arf.provider_seed' is derived from the master seed and cannot be set");
    }
    config::read(*s, "arf", c.arf);
  }
  if (const json* s = root.child("crp")) config::read(*s, "crp", c.crp);
  if (const json* s = root.child("train")) read_train(*s, "train", c.train);
  if (const json* s = root.child("smote")) {
    StrictObject o(*s, "smote");
    o.get("enabled", c.smote.enabled);
    o.get("k_neighbors", c.smote.k_neighbors);
    o.finish();
  }
  if (const json* s = root.child("split")) {
    StrictObject o(*s, "split");
    o.get("train_fraction", c.split.train_fraction);
    o.finish();
  }
  if (const json* s = root.child("paths")) {
    StrictObject o(*s, "paths");
    o.get("csv", c.paths.csv);
    o.get("reports", c.paths.reports);
    o.get("store", c.paths.store);
    o.get("ckpt", c.paths.ckpt);
    o.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& c) {
  auto arf = config::to_json(c.arf);
  arf.erase("provider_seed");
  return {{"seed", c.seed},
          {"fnf", config::to_json(c.fnf)},
          {"arf", arf},
          {"crp", config::to_json(c.crp)},
          {"train",
           {{"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size},
            {"lr", c.train.lr},
            {"weight_decay", c.train.weight_decay},
            {"plateau_factor", c.train.plateau_factor},
            {"plateau_patience", c.train.plateau_patience},
            {"min_lr", c.train.min_lr},
            {"validation_fraction", c.train.validation_fraction}}},
          {"smote", {{"enabled", c.smote.enabled}, {"k_neighbors", c.smote.k_neighbors}}},
          {"split", {{"train_fraction", c.split.train_fraction}}},
          {"paths", {{"csv", c.paths.csv}, {"reports", c.paths.reports}, {"store", c.paths.store}, {"ckpt", c.paths.ckpt}}}};
}

}  // namespace creditarf::app
