#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "creditarf/app/commands.hpp"
#include "creditarf/arf/embedding.hpp"
#include "creditarf/dataset/financial_csv.hpp"
#include "creditarf/dataset/sample.hpp"
#include "creditarf/error.hpp"
#include "creditarf/io/binary.hpp"

namespace creditarf {
namespace {

namespace fs = std::filesystem;
using app::RunConfig;

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("creditarf_app_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

int cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = app::run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

RunConfig quick_config(std::uint64_t seed = 11) {
  RunConfig c;
  c.seed = seed;
  c.train.epochs = 3;
  return c;
}

app::SynthSpec small_spec(double rho = 0.5) {
  app::SynthSpec s;
  s.samples_per_class = 8;
  s.rho = rho;
  return s;
}

// synth -> ingest -> embed, returning the embedded store directory.
fs::path embedded_store(const fs::path& root, const RunConfig& config, double rho = 0.5) {
  std::ostringstream log;
  app::cmd_synth(small_spec(rho), config.seed, root / "syn", log);
  app::cmd_ingest(config, root / "syn" / "financials.csv", root / "syn" / "reports", root / "store", log);
  app::cmd_embed(config, root / "store", "hash", root / "emb", log);
  return root / "emb";
}

void write_file(const fs::path& p, const std::string& text) { io::write_text(p, text); }

std::string mini_csv(bool with_rating = true) {
  std::string h = with_rating ? "Rating Agency,Corporation,Rating,Rating Date" : "Rating Agency,Corporation,Rating Date";
  for (const auto& c : data::kRatioColumns) h += "," + c;
  h += "\n";
  auto row = [&](const std::string& corp, const std::string& rating, const std::string& date) {
    std::string r = "Fitch Ratings," + corp + (with_rating ? "," + rating : "") + "," + date;
    for (std::size_t i = 0; i < data::kRatioColumns.size(); ++i) r += "," + std::to_string(0.5 + i);
    return r + "\n";
  };
  return h + row("Acme Corp", "AA+", "2015-03-01") + row("Beta Inc", "BB-", "2016-06-30") +
         row("Gamma LLC", "CCC", "2017-01-15");
}

void write_mini_fixture(const fs::path& root, bool with_rating = true) {
  write_file(root / "fin.csv", mini_csv(with_rating));
  fs::create_directories(root / "reports");
  write_file(root / "reports" / "acme-corp_2015.txt", "Revenue grew strongly this year. Margins held steady overall.\n");
  write_file(root / "reports" / "beta-inc_2016.txt", "The company faced weak demand. Debt levels rose again.\n");
}

// ---------------------------------------------------------------- config

TEST(RunConfigTest, DefaultsValidateAndRoundTrip) {
  RunConfig c;
  c.seed = 99;
  c.crp.financial_only = true;
  c.train.epochs = 7;
  const auto back = app::parse_run_config(app::to_json(c));
  EXPECT_EQ(app::to_json(back), app::to_json(c));
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.train.epochs, 7u);
}

TEST(RunConfigTest, UnknownKeysRejectedAtEveryLevel) {
  for (const char* text : {R"({"sede": 1})", R"({"train": {"epoch": 3}})", R"({"smote": {"k": 3}})",
                           R"({"fnf": {"kind": "cnn", "chanels": 3}})", R"({"paths": {"csvs": "x"}})"}) {
    EXPECT_THROW(app::parse_run_config(nlohmann::json::parse(text)), InputError) << text;
  }
}

TEST(RunConfigTest, ModuleSeedsAreDerivedNotConfigurable) {
  EXPECT_THROW(app::parse_run_config(nlohmann::json::parse(R"({"arf": {"provider_seed": 3}})")), InputError);
  RunConfig a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NE(a.with_derived_seeds().train.seed, b.with_derived_seeds().train.seed);
  EXPECT_NE(a.model_spec(16, 0).init_seed, a.model_spec(16, 0).projection_seed);
  EXPECT_EQ(a.model_spec(16, 0).digest(), a.model_spec(16, 0).digest());
}

TEST(RunConfigTest, BadConfigWritesNothing) {
  const auto root = temp_dir("badcfg");
  write_file(root / "cfg.json", R"({"train": {"epochs": 3, "learning_rate": 0.1}})");
  std::string err;
  EXPECT_EQ(cli({"synth", "--config", (root / "cfg.json").string(), "--out", (root / "out").string()}, &err), 2);
  EXPECT_NE(err.find("train.learning_rate"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(root / "out"));
}

// ---------------------------------------------------------------- cli surface

TEST(CliTest, VersionAndUsage) {
  std::ostringstream out, err;
  EXPECT_EQ(app::run_cli({"--version"}, out, err), 0);
  EXPECT_EQ(out.str(), std::string(CREDITARF_VERSION) + "\n");
  EXPECT_EQ(cli({}), 2);
  EXPECT_EQ(cli({"frobnicate"}), 2);
  EXPECT_EQ(cli({"synth"}), 2);  // no --out
}

TEST(CliTest, ExitCodesFollowErrorKind) {
  EXPECT_EQ(app::exit_code(InputError("x")), 2);
  EXPECT_EQ(app::exit_code(ShapeError("x")), 2);
  EXPECT_EQ(app::exit_code(NumericError("x")), 3);
  EXPECT_EQ(app::exit_code(ModeError("x")), 4);
  EXPECT_EQ(app::exit_code(std::runtime_error("x")), 1);
}

TEST(CliTest, SeedFlagOverridesConfig) {
  const auto root = temp_dir("seedflag");
  write_file(root / "cfg.json", R"({"seed": 5})");
  const auto cfg = (root / "cfg.json").string();
  ASSERT_EQ(cli({"synth", "--config", cfg, "--out", (root / "a").string()}), 0);
  ASSERT_EQ(cli({"--seed", "5", "synth", "--out", (root / "b").string()}), 0);
  ASSERT_EQ(cli({"synth", "--config", cfg, "--seed", "6", "--out", (root / "c").string()}), 0);
  EXPECT_EQ(tree(root / "a"), tree(root / "b"));
  EXPECT_NE(tree(root / "a"), tree(root / "c"));
}

// ---------------------------------------------------------------- ingest

TEST(IngestTest, MiniFixtureJoinsTwoOfThree) {
  const auto root = temp_dir("mini");
  write_mini_fixture(root);
  std::ostringstream log;
  const auto store = app::cmd_ingest(RunConfig{}, root / "fin.csv", root / "reports", root / "store", log);
  ASSERT_EQ(store.samples.size(), 2u);
  EXPECT_EQ(store.samples[0].corporation, "Acme Corp");
  EXPECT_EQ(store.samples[0].label, data::RatingClass::AA);
  EXPECT_EQ(store.samples[1].label, data::RatingClass::BB);
  EXPECT_EQ(store.arf_dim, 0u);
  EXPECT_NE(log.str().find("ingested 2 samples"), std::string::npos);
  EXPECT_NE(log.str().find("AA=1"), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "store" / "samples.jsonl"));
  EXPECT_TRUE(fs::exists(root / "store" / "stats.json"));
}

TEST(IngestTest, RerunIsByteIdentical) {
  const auto root = temp_dir("rerun");
  write_mini_fixture(root);
  std::ostringstream log;
  app::cmd_ingest(RunConfig{}, root / "fin.csv", root / "reports", root / "s1", log);
  app::cmd_ingest(RunConfig{}, root / "fin.csv", root / "reports", root / "s2", log);
  EXPECT_EQ(tree(root / "s1"), tree(root / "s2"));
}

TEST(IngestTest, MissingRatingColumnExitsTwoNamingIt) {
  const auto root = temp_dir("norating");
  write_mini_fixture(root, false);
  std::string err;
  EXPECT_EQ(cli({"ingest", "--csv", (root / "fin.csv").string(), "--reports", (root / "reports").string(), "--out",
                 (root / "store").string()},
                &err),
            2);
  EXPECT_NE(err.find("'Rating'"), std::string::npos) << err;
}

TEST(IngestTest, MissingPathsExitTwo) {
  const auto root = temp_dir("nopaths");
  EXPECT_EQ(cli({"ingest", "--csv", (root / "none.csv").string(), "--reports", root.string(), "--out",
                 (root / "s").string()}),
            2);
}

// ---------------------------------------------------------------- embed

TEST(EmbedTest, FullCoverageAndDeterministic) {
  const auto root = temp_dir("embed");
  const auto config = quick_config();
  std::ostringstream log;
  app::cmd_synth(small_spec(), config.seed, root / "syn", log);
  app::cmd_ingest(config, root / "syn" / "financials.csv", root / "syn" / "reports", root / "store", log);
  const auto a = app::cmd_embed(config, root / "store", "hash", root / "e1", log);
  app::cmd_embed(config, root / "store", "hash", root / "e2", log);
  EXPECT_NE(log.str().find("(100%)"), std::string::npos);
  EXPECT_EQ(a.arf_dim, config.arf.output_dim);
  for (const auto& s : a.samples) {
    ASSERT_TRUE(s.arf.has_value());
    EXPECT_EQ(s.arf->size(), config.arf.output_dim);
  }
  EXPECT_EQ(slurp(root / "e1" / "samples.jsonl"), slurp(root / "e2" / "samples.jsonl"));
  EXPECT_EQ(slurp(root / "e1" / "embeddings.arfe"), slurp(root / "e2" / "embeddings.arfe"));
  const auto cache = arf::ArfeCache::load(root / "e1" / "embeddings.arfe");
  EXPECT_EQ(cache.dim, config.arf.embed_dim);
  EXPECT_EQ(cache.entries.size(), a.samples.size());
}

TEST(EmbedTest, CacheProviderReproducesHashVectors) {
  const auto root = temp_dir("embed_cache");
  const auto config = quick_config();
  std::ostringstream log;
  embedded_store(root, config);
  const auto via_cache =
      app::cmd_embed(config, root / "store", "cache:" + (root / "emb" / "embeddings.arfe").string(), root / "e2", log);
  const auto via_hash = data::load_store(root / "emb");
  ASSERT_EQ(via_cache.samples.size(), via_hash.samples.size());
  for (std::size_t i = 0; i < via_hash.samples.size(); ++i) EXPECT_EQ(*via_cache.samples[i].arf, *via_hash.samples[i].arf);
}

TEST(EmbedTest, CacheWithAbsentKeyNamesCorporationAndYear) {
  const auto root = temp_dir("embed_absent");
  write_mini_fixture(root);
  std::ostringstream log;
  app::cmd_ingest(RunConfig{}, root / "fin.csv", root / "reports", root / "store", log);
  arf::ArfeCache cache;
  cache.dim = static_cast<std::uint32_t>(RunConfig{}.arf.embed_dim);
  cache.insert("acme-corp:2015", nx::Tensor<float>({2, cache.dim}, 0.1f));
  cache.save(root / "partial.arfe");
  try {
    app::cmd_embed(RunConfig{}, root / "store", "cache:" + (root / "partial.arfe").string(), root / "emb", log);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("(Beta Inc, 2016)"), std::string::npos) << e.what();
  }
}

TEST(EmbedTest, WrongCacheDimensionAndUnknownProvider) {
  const auto root = temp_dir("embed_dim");
  write_mini_fixture(root);
  std::ostringstream log;
  app::cmd_ingest(RunConfig{}, root / "fin.csv", root / "reports", root / "store", log);
  arf::ArfeCache cache;
  cache.dim = 5;
  cache.save(root / "five.arfe");
  EXPECT_THROW(app::cmd_embed(RunConfig{}, root / "store", "cache:" + (root / "five.arfe").string(), root / "e", log),
               InputError);
  EXPECT_THROW(app::cmd_embed(RunConfig{}, root / "store", "finbert", root / "e", log), InputError);
}

TEST(EmbedTest, MissingDocumentIsInputError) {
  const auto root = temp_dir("embed_missing");
  write_mini_fixture(root);
  std::ostringstream log;
  app::cmd_ingest(RunConfig{}, root / "fin.csv", root / "reports", root / "store", log);
  fs::remove(root / "reports" / "beta-inc_2016.txt");
  EXPECT_THROW(app::cmd_embed(RunConfig{}, root / "store", "hash", root / "emb", log), InputError);
}

// ---------------------------------------------------------------- train / eval / compare

TEST(PipelineTest, WritesEveryArtifactAndRerunsByteIdentical) {
  const auto root = temp_dir("pipeline");
  const auto config = quick_config();
  const auto store = embedded_store(root, config);
  std::ostringstream log;
  const auto outcome = app::cmd_train(config, store, root / "run1", log);
  app::cmd_train(config, store, root / "run2", log);
  EXPECT_EQ(outcome.result.history.size(), 3u);
  EXPECT_EQ(outcome.train_count % data::kNumClasses, 0u);  // SMOTE balanced every class
  for (const char* f : {"model.carf", "run.json", "history.csv"}) {
    ASSERT_TRUE(fs::exists(root / "run1" / f)) << f;
  }
  EXPECT_EQ(tree(root / "run1"), tree(root / "run2"));

  const auto report = app::cmd_eval(root / "run1", store, root / "ev1", log);
  app::cmd_eval(root / "run2" / "model.carf", store, root / "ev2", log);
  EXPECT_EQ(report.count(), outcome.test_count);
  for (const char* f : {"report.json", "confusion.csv"}) ASSERT_TRUE(fs::exists(root / "ev1" / f)) << f;
  EXPECT_EQ(tree(root / "ev1"), tree(root / "ev2"));
  EXPECT_EQ(train::report_from_json(nlohmann::json::parse(slurp(root / "ev1" / "report.json"))), report);
}

TEST(PipelineTest, PrecomputeWithoutReportVectorsExitsFour) {
  const auto root = temp_dir("mode");
  const auto config = quick_config();
  std::ostringstream log;
  app::cmd_synth(small_spec(), config.seed, root / "syn", log);
  app::cmd_ingest(config, root / "syn" / "financials.csv", root / "syn" / "reports", root / "store", log);
  EXPECT_THROW(app::cmd_train(config, root / "store", root / "run", log), ModeError);

  auto end_to_end = config;
  end_to_end.crp.mode = crp::PipelineMode::end_to_end;
  EXPECT_THROW(app::cmd_train(end_to_end, root / "store", root / "run", log), ModeError);

  // A financial-only run needs no report vectors.
  auto fin = config;
  fin.crp.financial_only = true;
  EXPECT_NO_THROW(app::cmd_train(fin, root / "store", root / "run", log));
}

TEST(PipelineTest, EvalRefusesAForeignStore) {
  const auto root = temp_dir("foreign");
  const auto config = quick_config();
  const auto store = embedded_store(root, config);
  std::ostringstream log;
  app::cmd_train(config, store, root / "run", log);
  const auto other = embedded_store(root / "other", quick_config(12));
  EXPECT_THROW(app::cmd_eval(root / "run", other, root / "ev", log), InputError);
}

TEST(PipelineTest, EndToEndModeTrainsFromSentenceCache) {
  const auto root = temp_dir("e2e");
  auto config = quick_config();
  config.train.epochs = 1;
  config.crp.mode = crp::PipelineMode::end_to_end;
  const auto store = embedded_store(root, config);
  std::ostringstream log;
  app::cmd_train(config, store, root / "run", log);
  EXPECT_NE(log.str().find("SMOTE skipped"), std::string::npos);
  const auto report = app::cmd_eval(root / "run", store, root / "ev", log);
  EXPECT_GT(report.count(), 0u);
}

TEST(PipelineTest, CompareThroughCliAndRefusal) {
  const auto root = temp_dir("compare");
  auto config = quick_config();
  const auto store = embedded_store(root, config);
  std::ostringstream log;
  auto fin = config;
  fin.crp.financial_only = true;
  app::cmd_train(fin, store, root / "base", log);
  app::cmd_train(config, store, root / "arf", log);
  app::cmd_eval(root / "base", store, root / "ev_base", log);
  app::cmd_eval(root / "arf", store, root / "ev_arf", log);
  ASSERT_EQ(cli({"compare", "--a", (root / "ev_base").string(), "--b", (root / "ev_arf" / "report.json").string(),
                 "--out", (root / "cmp").string()}),
            0);
  const auto table = slurp(root / "cmp" / "comparison.txt");
  EXPECT_NE(table.find("+ ARF"), std::string::npos);
  EXPECT_EQ(slurp(root / "cmp" / "comparison.csv").rfind("scope,metric,baseline,with_arf,delta\n", 0), 0u);

  // A different train fraction gives a test set of another size.
  auto wide = config;
  wide.split.train_fraction = 0.5;
  app::cmd_train(wide, store, root / "wide", log);
  app::cmd_eval(root / "wide", store, root / "ev_wide", log);
  std::string err;
  EXPECT_EQ(cli({"compare", "--a", (root / "ev_base").string(), "--b", (root / "ev_wide").string(), "--out",
                 (root / "cmp2").string()},
                &err),
            2);
  EXPECT_NE(err.find("different test sets"), std::string::npos) << err;

  // Same size, different class mix: move one true sample from AAA to CCC.
  auto shifted = train::report_from_json(nlohmann::json::parse(slurp(root / "ev_arf" / "report.json")));
  auto cm = shifted.confusion;
  std::size_t from = 0;
  while (cm.counts[0][from] == 0) ++from;
  --cm.counts[0][from];
  ++cm.counts[data::kNumClasses - 1][from];
  write_file(root / "shifted.json", train::to_json(train::report_from_confusion(cm)).dump(2));
  EXPECT_EQ(cli({"compare", "--a", (root / "ev_base").string(), "--b", (root / "shifted.json").string(), "--out",
                 (root / "cmp3").string()},
                &err),
            2);
  EXPECT_NE(err.find("histogram mismatch"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(root / "cmp3"));
}

// ---------------------------------------------------------------- synth

TEST(SynthTest, SpecStrictAndValidated) {
  EXPECT_THROW(app::parse_synth_spec(nlohmann::json::parse(R"({"rhoo": 0.5})")), InputError);
  EXPECT_THROW(app::parse_synth_spec(nlohmann::json::parse(R"({"rho": 1.5})")), InputError);
  EXPECT_THROW(app::parse_synth_spec(nlohmann::json::parse(R"({"signal_features": 3})")), InputError);
  const auto s = app::parse_synth_spec(nlohmann::json::parse(R"({"rho": 0.25, "samples_per_class": 9})"));
  EXPECT_EQ(app::to_json(app::parse_synth_spec(app::to_json(s))), app::to_json(s));
}

TEST(SynthTest, SameSeedSameTree) {
  const auto root = temp_dir("synth_det");
  std::ostringstream log;
  app::cmd_synth(small_spec(), 4, root / "a", log);
  app::cmd_synth(small_spec(), 4, root / "b", log);
  app::cmd_synth(small_spec(), 5, root / "c", log);
  EXPECT_EQ(tree(root / "a"), tree(root / "b"));
  EXPECT_NE(tree(root / "a"), tree(root / "c"));
}

TEST(SynthTest, OutputFollowsSchemaAndNaming) {
  const auto root = temp_dir("synth_schema");
  std::ostringstream log;
  app::cmd_synth(small_spec(), 3, root, log);
  std::ifstream in(root / "financials.csv");
  const auto records = data::parse_financial_csv(in);
  ASSERT_EQ(records.size(), 7u * 8u);
  const auto index = data::index_reports(root / "reports");
  EXPECT_EQ(index.size(), records.size());
  EXPECT_EQ(data::join_reports(records, index).samples.size(), records.size());
}

// Words that occur often yet only within one class's reports.
std::size_t class_exclusive_words(const app::SynthCorpus& corpus) {
  std::map<std::string, std::set<std::size_t>> classes;
  std::map<std::string, std::size_t> count;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    std::istringstream words(corpus.reports[i].second);
    for (std::string w; words >> w;) {
      if (!w.empty() && w.back() == '.') w.pop_back();
      classes[w].insert(data::index_of(corpus.records[i].rating));
      ++count[w];
    }
  }
  std::size_t n = 0;
  for (const auto& [w, cs] : classes) n += cs.size() == 1 && count[w] >= 10;
  return n;
}

// Largest |class mean - overall mean| / overall std over the ratio columns.
double max_class_shift(const app::SynthCorpus& corpus) {
  double worst = 0.0;
  for (std::size_t j = 0; j < data::kRatioColumns.size(); ++j) {
    std::vector<double> sum(data::kNumClasses, 0.0), n(data::kNumClasses, 0.0);
    double total = 0.0, sq = 0.0;
    for (const auto& r : corpus.records) {
      const auto c = data::index_of(r.rating);
      sum[c] += r.ratios[j];
      n[c] += 1;
      total += r.ratios[j];
      sq += r.ratios[j] * r.ratios[j];
    }
    const double count = static_cast<double>(corpus.records.size());
    const double mean = total / count;
    const double sd = std::sqrt(sq / count - mean * mean);
    for (std::size_t c = 0; c < data::kNumClasses; ++c) worst = std::max(worst, std::abs(sum[c] / n[c] - mean) / sd);
  }
  return worst;
}

TEST(SynthTest, SignalSplitEndpoints) {
  app::SynthSpec spec;  // 7 x 60
  for (std::uint64_t seed : {1, 2, 3}) {
    spec.rho = 0.0;
    const auto text_free = app::generate_synth(spec, seed);
    EXPECT_EQ(class_exclusive_words(text_free), 0u) << seed;
    EXPECT_GT(max_class_shift(text_free), 1.0) << seed;

    spec.rho = 1.0;
    const auto numbers_free = app::generate_synth(spec, seed);
    EXPECT_GE(class_exclusive_words(numbers_free), data::kNumClasses) << seed;
    // Class means within ~5 standard errors of the pooled mean.
    EXPECT_LT(max_class_shift(numbers_free), 0.65) << seed;
  }
}

}  // namespace
}  // namespace creditarf
