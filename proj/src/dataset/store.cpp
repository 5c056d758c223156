#include "creditarf/dataset/store.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "creditarf/error.hpp"

namespace creditarf::data {
namespace {

using nlohmann::json;

json sample_to_json(const Sample& s) {
  json j;
  j["corporation"] = s.corporation;
  j["year"] = s.year;
  j["agency"] = s.agency;
  j["raw_rating"] = s.raw_rating;
  j["label"] = std::string(class_name(s.label));
  j["report"] = s.report;
  j["financial"] = s.financial;
  j["arf"] = s.arf ? json(*s.arf) : json(nullptr);
  return j;
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.corporation = j.at("corporation").get<std::string>();
  s.year = j.at("year").get<int>();
  s.agency = j.at("agency").get<std::string>();
  s.raw_rating = j.at("raw_rating").get<std::string>();
  s.label = class_from_name(j.at("label").get<std::string>());
  s.report = j.at("report").get<std::string>();
  s.financial = j.at("financial").get<std::vector<double>>();
  if (!j.at("arf").is_null()) s.arf = j.at("arf").get<std::vector<float>>();
  return s;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace

void DatasetStore::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.financial.size() != feature_names.size()) {
      throw InputError("sample " + std::to_string(i) + " has " + std::to_string(s.financial.size()) +
                       " financial values, expected " + std::to_string(feature_names.size()));
    }
    const std::size_t got = s.arf ? s.arf->size() : 0;
    if (got != arf_dim) {
      throw InputError("sample " + std::to_string(i) + " has arf dimension " + std::to_string(got) + ", expected " +
                       std::to_string(arf_dim));
    }
  }
}

void save_store(const DatasetStore& store, const std::filesystem::path& dir) {
  store.validate();
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "samples.jsonl", std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / "samples.jsonl").string());
    for (const auto& s : store.samples) out << sample_to_json(s).dump() << '\n';
  }
  json stats;
  stats["feature_names"] = store.feature_names;
  stats["arf_dim"] = store.arf_dim;
  stats["seed"] = store.seed;
  stats["count"] = store.samples.size();
  json hist = json::object();
  const auto h = class_histogram(store.samples);
  for (std::size_t c = 0; c < kNumClasses; ++c) hist[std::string(kClassNames[c])] = h[c];
  stats["class_histogram"] = hist;
  stats["provenance"] = {{"csv", store.provenance.csv},
                         {"reports", store.provenance.reports},
                         {"arfe_cache", store.provenance.arfe_cache}};
  if (store.standardization) {
    stats["standardization"] = {{"mean", store.standardization->mean}, {"std", store.standardization->std}};
  } else {
    stats["standardization"] = nullptr;
  }
  if (store.split) {
    stats["split"] = {{"train", store.split->train}, {"test", store.split->test}};
  } else {
    stats["split"] = nullptr;
  }
  stats["warnings"] = store.warnings;
  std::ofstream out(dir / "stats.json", std::ios::binary);
  if (!out) throw InputError("cannot write " + (dir / "stats.json").string());
  out << stats.dump(2) << '\n';
}

DatasetStore load_store(const std::filesystem::path& dir) {
  DatasetStore store;
  const json stats = read_json_file(dir / "stats.json");
  try {
    store.feature_names = stats.at("feature_names").get<std::vector<std::string>>();
    store.arf_dim = stats.at("arf_dim").get<std::size_t>();
    store.seed = stats.at("seed").get<std::uint64_t>();
    const auto& p = stats.at("provenance");
    store.provenance = {p.at("csv").get<std::string>(), p.at("reports").get<std::string>(),
                        p.at("arfe_cache").get<std::string>()};
    if (!stats.at("standardization").is_null()) {
      Standardization s;
      s.mean = stats["standardization"].at("mean").get<std::vector<double>>();
      s.std = stats["standardization"].at("std").get<std::vector<double>>();
      store.standardization = std::move(s);
    }
    if (stats.contains("split") && !stats["split"].is_null()) {
      store.split = SplitIndices{stats["split"].at("train").get<std::vector<std::size_t>>(),
                                 stats["split"].at("test").get<std::vector<std::size_t>>()};
    }
    if (stats.contains("warnings")) store.warnings = stats["warnings"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError((dir / "stats.json").string() + ": " + e.what());
  }

  const auto path = dir / "samples.jsonl";
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      store.samples.push_back(sample_from_json(json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  store.validate();
  return store;
}

}  // namespace creditarf::data
