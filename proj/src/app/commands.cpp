#include "creditarf/app/commands.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "creditarf/arf/embedding.hpp"
#include "creditarf/arf/encoder.hpp"
#include "creditarf/arf/text.hpp"
#include "creditarf/config.hpp"
#include "creditarf/crp/checkpoint.hpp"
#include "creditarf/dataset/financial_csv.hpp"
#include "creditarf/dataset/preprocess.hpp"
#include "creditarf/dataset/sample.hpp"
#include "creditarf/error.hpp"
#include "creditarf/io/binary.hpp"

namespace creditarf::app {
namespace {

using nlohmann::json;

constexpr const char* kCheckpointFile = "model.carf";
constexpr const char* kRunFile = "run.json";
constexpr const char* kCacheFile = "embeddings.arfe";

void print_histogram(const std::vector<data::Sample>& samples, std::ostream& log) {
  const auto h = data::class_histogram(samples);
  log << "class histogram:";
  for (std::size_t c = 0; c < data::kNumClasses; ++c) log << ' ' << data::kClassNames[c] << '=' << h[c];
  log << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

bool needs_report_vectors(const crp::ModelSpec& spec) { return !spec.crp.financial_only; }

// Sentence embeddings for end_to_end runs, taken from the store's cache.
std::optional<arf::ArfeCache> load_sentences(const crp::ModelSpec& spec, const data::DatasetStore& store) {
  if (!needs_report_vectors(spec) || spec.crp.mode != crp::PipelineMode::end_to_end) return std::nullopt;
  if (store.provenance.arfe_cache.empty()) {
    throw ModeError("end_to_end mode needs sentence embeddings; run `creditarf embed` on the store first");
  }
  return arf::ArfeCache::load(store.provenance.arfe_cache);
}

// A financial-only model ignores report vectors; dropping them keeps
// oversampling in the space the model actually sees.
void strip_report_vectors(std::vector<data::Sample>& samples) {
  for (auto& s : samples) s.arf.reset();
}

fs::path checkpoint_path(const fs::path& ckpt) {
  return fs::is_directory(ckpt) ? ckpt / kCheckpointFile : ckpt;
}

fs::path report_path(const fs::path& p) { return fs::is_directory(p) ? p / "report.json" : p; }

}  // namespace

data::DatasetStore cmd_ingest(const RunConfig& config, const fs::path& csv, const fs::path& reports,
                              const fs::path& out, std::ostream& log) {
  if (!fs::is_regular_file(csv)) throw InputError("financial CSV not found: " + csv.string());
  if (!fs::is_directory(reports)) throw InputError("report directory not found: " + reports.string());

  std::ifstream in(csv, std::ios::binary);
  if (!in) throw InputError("cannot open " + csv.string());
  const auto records = data::parse_financial_csv(in);
  auto joined = data::join_reports(records, data::index_reports(reports));

  data::DatasetStore store;
  store.samples = std::move(joined.samples);
  store.feature_names = data::kRatioColumns;
  store.seed = config.seed;
  store.provenance.csv = csv.string();
  store.provenance.reports = reports.string();
  store.warnings = std::move(joined.warnings);
  data::save_store(store, out);

  log << "ingested " << store.samples.size() << " samples from " << records.size() << " records\n";
  print_histogram(store.samples, log);
  for (const auto& w : store.warnings) log << "warning: " << w << '\n';
  return store;
}

data::DatasetStore cmd_embed(const RunConfig& config, const fs::path& store_dir, const std::string& provider,
                             const fs::path& out, std::ostream& log) {
  const RunConfig cfg = config.with_derived_seeds();
  auto store = data::load_store(store_dir);

  std::unique_ptr<arf::EmbeddingProvider> embedder;
  if (provider == "hash") {
    embedder = std::make_unique<arf::HashEmbedder>(cfg.arf.embed_dim, cfg.arf.provider_seed);
  } else if (provider.rfind("cache:", 0) == 0) {
    const fs::path path = provider.substr(6);
    embedder = std::make_unique<arf::CachedEmbedder>(arf::ArfeCache::load(path), cfg.arf.embed_dim, path.string());
  } else {
    throw InputError("unknown provider '" + provider + "', expected 'hash' or 'cache:<path>'");
  }

  // Frozen encoder: its weights come from the master seed, not from training.
  nx::ParameterSet<float> params;
  nx::Rng rng(stream_seed(cfg.seed, SeedStream::report_encoder));
  const arf::ReportEncoder<float> encoder(params, "arf.encoder", cfg.arf, rng);

  arf::ArfeCache cache;
  cache.dim = static_cast<std::uint32_t>(cfg.arf.embed_dim);
  const fs::path reports = store.provenance.reports;
  for (auto& s : store.samples) {
    const fs::path doc_path = reports / s.report;
    if (!fs::is_regular_file(doc_path)) {
      throw InputError("missing document " + doc_path.string() + " for (" + s.corporation + ", " +
                       std::to_string(s.year) + ")");
    }
    const auto doc = arf::make_document(s.corporation, s.year, io::read_text(doc_path), cfg.arf.min_tokens,
                                        cfg.arf.max_tokens);
    nx::Tensor<float> rows;
    try {
      rows = embedder->embed(doc);
    } catch (const InputError& e) {
      throw InputError("no sentence embeddings for (" + s.corporation + ", " + std::to_string(s.year) +
                       "): " + e.what());
    }
    s.arf = arf::extract_arf(encoder, *embedder, doc);
    cache.insert(doc.key(), std::move(rows));
  }

  fs::create_directories(out);
  const fs::path cache_path = out / kCacheFile;
  cache.save(cache_path);
  store.arf_dim = cfg.arf.output_dim;
  store.provenance.arfe_cache = cache_path.string();
  data::save_store(store, out);

  log << "embedded " << store.samples.size() << " reports with " << embedder->identity() << '\n';
  log << "ARF coverage: " << store.samples.size() << '/' << store.samples.size() << " (100%)\n";
  return store;
}

TrainOutcome cmd_train(const RunConfig& config, const fs::path& store_dir, const fs::path& out, std::ostream& log) {
  const RunConfig cfg = config.with_derived_seeds();
  auto store = data::load_store(store_dir);
  const auto spec = cfg.model_spec(store.feature_names.size(), store.arf_dim);

  if (needs_report_vectors(spec) && spec.crp.mode == crp::PipelineMode::precompute && store.arf_dim == 0) {
    throw ModeError("precompute mode needs report vectors; run `creditarf embed` on the store first");
  }
  const auto sentences = load_sentences(spec, store);

  const auto split = data::stratified_split(store.samples, cfg.split.train_fraction,
                                            stream_seed(cfg.seed, SeedStream::split));
  auto train_all = data::gather(store.samples, split.train);
  const auto stats = data::Standardization::fit(train_all);
  data::standardize(train_all, stats);
  if (!needs_report_vectors(spec)) strip_report_vectors(train_all);

  const auto carve = data::stratified_split(train_all, 1.0 - cfg.train.validation_fraction,
                                            stream_seed(cfg.seed, SeedStream::validation));
  auto fit_set = data::gather(train_all, carve.train);
  const auto validation = data::gather(train_all, carve.test);

  if (cfg.smote.enabled) {
    if (sentences) {
      log << "SMOTE skipped: end_to_end samples have no fixed-length report vector to interpolate\n";
    } else {
      auto res = data::smote(fit_set, {cfg.smote.k_neighbors, stream_seed(cfg.seed, SeedStream::smote)});
      for (const auto& w : res.warnings) log << "warning: " << w << '\n';
      fit_set = std::move(res.samples);
    }
  }

  log << "train " << fit_set.size() << ", validation " << validation.size() << ", test " << split.test.size()
      << " (" << fnf::to_string(spec.fnf.kind) << ", " << crp::to_string(spec.crp.mode)
      << (spec.crp.financial_only ? ", financial only" : ", with ARF") << ")\n";

  crp::CreditModel<float> model(spec);
  const auto epochs = cfg.train.epochs;
  auto result = train::fit(model, fit_set, validation, cfg.train, sentences ? &*sentences : nullptr,
                           [&](const train::EpochRecord& r) {
                             if (r.epoch % 10 != 0 && r.epoch != epochs) return;
                             char line[128];
                             std::snprintf(line, sizeof line, "epoch %zu/%zu train %.4f val %.4f lr %.3g\n", r.epoch,
                                           epochs, r.train_loss, r.val_loss, r.lr);
                             log << line;
                           });

  fs::create_directories(out);
  crp::Checkpoint::capture(model.parameters(), result.meta).save(out / kCheckpointFile);
  io::write_text(out / "history.csv", train::history_csv(result.history));

  json test_keys = json::array();
  for (auto i : split.test) test_keys.push_back(store.samples[i].key());
  json run;
  run["spec"] = config::to_json(spec);
  run["spec_digest"] = spec.digest();
  run["config"] = to_json(config);
  run["split"] = {{"train", split.train}, {"test", split.test}};
  run["test_keys"] = test_keys;
  run["standardization"] = {{"mean", stats.mean}, {"std", stats.std}};
  run["counts"] = {{"train", fit_set.size()}, {"validation", validation.size()}, {"test", split.test.size()}};
  run["epochs"] = result.meta.epochs;
  run["final_lr"] = result.meta.final_lr;
  write_json(out / kRunFile, run);

  log << "wrote " << (out / kCheckpointFile).string() << '\n';
  return {std::move(result), fit_set.size(), validation.size(), split.test.size()};
}

train::EvalReport cmd_eval(const fs::path& ckpt, const fs::path& store_dir, const fs::path& out, std::ostream& log) {
  if (!fs::exists(ckpt)) throw InputError("checkpoint not found: " + ckpt.string());
  const fs::path ckpt_file = checkpoint_path(ckpt);
  const json run = read_json(ckpt_file.parent_path() / kRunFile);

  crp::ModelSpec spec;
  data::Standardization stats;
  std::vector<std::size_t> test_idx;
  std::vector<std::string> test_keys;
  try {
    config::read(run.at("spec"), "spec", spec);
    stats.mean = run.at("standardization").at("mean").get<std::vector<double>>();
    stats.std = run.at("standardization").at("std").get<std::vector<double>>();
    test_idx = run.at("split").at("test").get<std::vector<std::size_t>>();
    test_keys = run.at("test_keys").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw InputError(kRunFile + std::string(": ") + e.what());
  }
  if (test_keys.size() != test_idx.size()) throw InputError("run.json: test_keys and split.test differ in length");

  const auto checkpoint = crp::Checkpoint::load(ckpt_file);
  if (checkpoint.meta.spec_digest != spec.digest()) {
    throw InputError(ckpt_file.string() + " was not produced by the run described in run.json");
  }

  const auto store = data::load_store(store_dir);
  std::vector<data::Sample> test;
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    if (test_idx[i] >= store.samples.size() || store.samples[test_idx[i]].key() != test_keys[i]) {
      throw InputError("store " + store_dir.string() + " differs from the one the checkpoint was trained on");
    }
    test.push_back(store.samples[test_idx[i]]);
  }
  data::standardize(test, stats);
  if (!needs_report_vectors(spec)) strip_report_vectors(test);
  const auto sentences = load_sentences(spec, store);

  crp::CreditModel<float> model(spec);
  checkpoint.restore(model.parameters());
  const auto report = train::evaluate(model, test, sentences ? &*sentences : nullptr);

  fs::create_directories(out);
  write_json(out / "report.json", train::to_json(report));
  io::write_text(out / "confusion.csv", train::confusion_csv(report.confusion));

  char line[96];
  std::snprintf(line, sizeof line, "accuracy %.4f, macro F1 %.4f on %zu samples\n", report.accuracy,
                report.macro_f1, report.count());
  log << line;
  return report;
}

train::Comparison cmd_compare(const fs::path& a, const fs::path& b, const fs::path& out, std::ostream& log) {
  auto load = [](const fs::path& p) {
    const auto path = report_path(p);
    try {
      return train::report_from_json(read_json(path));
    } catch (const json::exception& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  };
  const auto cmp = train::compare_runs(load(a), load(b));
  const auto table = train::comparison_table(cmp);
  fs::create_directories(out);
  io::write_text(out / "comparison.txt", table);
  io::write_text(out / "comparison.csv", train::comparison_csv(cmp));
  log << table;
  return cmp;
}

void cmd_synth(const SynthSpec& spec, std::uint64_t seed, const fs::path& out, std::ostream& log) {
  const auto corpus = generate_synth(spec, stream_seed(seed, SeedStream::synth));
  write_synth(corpus, out);
  log << "wrote " << corpus.records.size() << " records and " << corpus.reports.size() << " reports to "
      << out.string() << '\n';
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const ModeError*>(&e)) return 4;
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Credit rating prediction from financial ratios and annual report text", "creditarf"};
  app.set_version_flag("--version", std::string(CREDITARF_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--out", out_dir, "output directory");

  std::string csv, reports, store, provider = "hash", ckpt, a, b, spec_path;
  auto* ingest = app.add_subcommand("ingest", "financial CSV + reports -> dataset store");
  ingest->add_option("--csv", csv, "financial CSV");
  ingest->add_option("--reports", reports, "directory of <slug>_<year>.txt reports");
  auto* embed = app.add_subcommand("embed", "attach report vectors to a store");
  embed->add_option("--store", store, "dataset store directory");
  embed->add_option("--provider", provider, "hash or cache:<ARFE path>");
  auto* trn = app.add_subcommand("train", "train a model on a store");
  trn->add_option("--store", store, "dataset store directory");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on its held-out split");
  eval->add_option("--ckpt", ckpt, "checkpoint file or training output directory");
  eval->add_option("--store", store, "dataset store directory");
  auto* cmp = app.add_subcommand("compare", "compare a baseline run with an ARF run");
  cmp->add_option("--a", a, "baseline report.json or eval directory")->required();
  cmp->add_option("--b", b, "ARF report.json or eval directory")->required();
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--spec", spec_path, "synth spec (JSON); defaults when omitted");
  for (auto* sub : {ingest, embed, trn, eval, cmp, synth}) sub->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << CREDITARF_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "creditarf: " << e.what() << '\n';
    return 2;
  }

  auto pick = [](const std::string& flag, const std::string& fallback, const char* name) {
    const std::string v = flag.empty() ? fallback : flag;
    if (v.empty()) throw InputError(std::string("missing --") + name);
    return fs::path(v);
  };

  try {
    // Parsed before any command runs, so a bad config writes nothing.
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) config.seed = *seed;
    const fs::path out_path = pick(out_dir, "", "out");

    if (*ingest) {
      cmd_ingest(config, pick(csv, config.paths.csv, "csv"), pick(reports, config.paths.reports, "reports"), out_path,
                 out);
    } else if (*embed) {
      cmd_embed(config, pick(store, config.paths.store, "store"), provider, out_path, out);
    } else if (*trn) {
      cmd_train(config, pick(store, config.paths.store, "store"), out_path, out);
    } else if (*eval) {
      cmd_eval(pick(ckpt, config.paths.ckpt, "ckpt"), pick(store, config.paths.store, "store"), out_path, out);
    } else if (*cmp) {
      cmd_compare(a, b, out_path, out);
    } else if (*synth) {
      const SynthSpec spec = spec_path.empty() ? SynthSpec{} : load_synth_spec(spec_path);
      cmd_synth(spec, config.seed, out_path, out);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "creditarf: " << e.what() << '\n';
    return exit_code(e);
  }
}

}  // namespace creditarf::app
