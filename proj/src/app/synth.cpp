#include "creditarf/app/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "creditarf/config.hpp"
#include "creditarf/dataset/sample.hpp"
#include "creditarf/error.hpp"
#include "creditarf/io/binary.hpp"
#include "creditarf/numerics/rng.hpp"

namespace creditarf::app {
namespace {

using nlohmann::json;

// Agency grades per consolidated class, in class order.
const std::vector<std::vector<std::string>> kGradesByClass = {
    {"AAA"},
    {"AA+", "AA", "AA-"},
    {"A+", "A", "A-"},
    {"BBB+", "BBB", "BBB-"},
    {"BB+", "BB", "BB-"},
    {"B+", "B", "B-"},
    {"CCC+", "CCC", "CCC-", "CC", "C", "D"},
};

const std::vector<std::string> kAgencies = {"Moody's", "Standard & Poor's", "Fitch Ratings"};

const std::vector<std::string> kSubjects = {"the company", "management", "the group", "the board", "our business"};
const std::vector<std::string> kVerbs = {"reported", "observed", "expects", "reviewed", "noted", "maintained"};

std::string pseudo_word(nx::Rng& rng, std::size_t syllables) {
  static const char* consonants = "bcdfghklmnprstvz";
  static const char* vowels = "aeiou";
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += consonants[rng.below(16)];
    w += vowels[rng.below(5)];
  }
  return w;
}

// Distinct words; `taken` prevents overlap between vocabularies.
std::vector<std::string> vocabulary(nx::Rng& rng, std::size_t n, std::size_t syllables, std::set<std::string>& taken) {
  std::vector<std::string> out;
  while (out.size() < n) {
    auto w = pseudo_word(rng, syllables);
    if (taken.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

template <class V>
const V& pick(nx::Rng& rng, const std::vector<V>& items) {
  return items[rng.below(items.size())];
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

void SynthSpec::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("synth spec: " + what);
  };
  need(samples_per_class >= 1, "samples_per_class must be >= 1");
  need(rho >= 0.0 && rho <= 1.0, "rho must be in [0, 1]");
  need(signal_features >= data::kNumClasses && signal_features <= data::kRatioColumns.size(),
       "signal_features must be in [" + std::to_string(data::kNumClasses) + ", " +
           std::to_string(data::kRatioColumns.size()) + "]");
  need(separation >= 0.0, "separation must be >= 0");
  need(sentences_per_report >= 1, "sentences_per_report must be >= 1");
  need(keywords_per_class >= 1, "keywords_per_class must be >= 1");
  need(filler_vocabulary >= 10, "filler_vocabulary must be >= 10");
  need(years >= 1, "years must be >= 1");
  need(first_year >= 1900 && first_year + static_cast<int>(years) <= 9999, "years must stay within 1900..9999");
}

SynthSpec parse_synth_spec(const json& j) {
  SynthSpec s;
  config::StrictObject o(j, "synth");
  o.get("samples_per_class", s.samples_per_class);
  o.get("rho", s.rho);
  o.get("signal_features", s.signal_features);
  o.get("separation", s.separation);
  o.get("sentences_per_report", s.sentences_per_report);
  o.get("keywords_per_class", s.keywords_per_class);
  o.get("filler_vocabulary", s.filler_vocabulary);
  o.get("first_year", s.first_year);
  o.get("years", s.years);
  o.finish();
  s.validate();
  return s;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open synth spec " + path.string());
  try {
    return parse_synth_spec(json::parse(in));
  } catch (const json::exception& e) {
    throw InputError("synth spec " + path.string() + ": " + e.what());
  }
}

json to_json(const SynthSpec& s) {
  return {{"samples_per_class", s.samples_per_class},
          {"rho", s.rho},
          {"signal_features", s.signal_features},
          {"separation", s.separation},
          {"sentences_per_report", s.sentences_per_report},
          {"keywords_per_class", s.keywords_per_class},
          {"filler_vocabulary", s.filler_vocabulary},
          {"first_year", s.first_year},
          {"years", s.years}};
}

SynthCorpus generate_synth(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  nx::Rng rng(seed);
  const std::size_t n_ratio = data::kRatioColumns.size();

  // Per-column location and scale so values look like ratios.
  std::vector<double> base(n_ratio), scale(n_ratio);
  for (std::size_t j = 0; j < n_ratio; ++j) {
    base[j] = rng.uniform(-0.5, 2.0);
    scale[j] = rng.uniform(0.05, 1.0);
  }
  // Signal column j belongs to class j % 7. A class shifts its own columns
  // so that its mean offset has norm fin_strength; supports are disjoint, so
  // every pair of classes sits the same distance apart. The offset shrinks as
  // signal moves into the text.
  const double fin_strength = spec.separation * (1.0 - spec.rho);
  std::vector<std::size_t> owned(data::kNumClasses, 0);
  for (std::size_t j = 0; j < spec.signal_features; ++j) ++owned[j % data::kNumClasses];
  std::vector<double> shift(spec.signal_features);
  for (std::size_t j = 0; j < spec.signal_features; ++j) {
    shift[j] = fin_strength / std::sqrt(static_cast<double>(owned[j % data::kNumClasses]));
  }

  std::set<std::string> taken;
  const auto filler = vocabulary(rng, spec.filler_vocabulary, 3, taken);
  std::vector<std::vector<std::string>> keywords;
  for (std::size_t c = 0; c < data::kNumClasses; ++c) keywords.push_back(vocabulary(rng, spec.keywords_per_class, 4, taken));

  SynthCorpus out;
  std::size_t id = 0;
  for (std::size_t c = 0; c < data::kNumClasses; ++c) {
    for (std::size_t i = 0; i < spec.samples_per_class; ++i, ++id) {
      data::FinancialRecord r;
      char name[64];
      std::snprintf(name, sizeof name, "Synthetic Holdings %04zu", id + 1);
      r.corporation = name;
      r.rating_agency = pick(rng, kAgencies);
      r.raw_rating = pick(rng, kGradesByClass[c]);
      r.rating = data::class_from_index(c);
      r.year = spec.first_year + static_cast<int>(rng.below(spec.years));
      char date[16];
      std::snprintf(date, sizeof date, "%04d-%02zu-%02zu", r.year, 1 + rng.below(12), 1 + rng.below(28));
      r.rating_date = date;
      for (std::size_t j = 0; j < n_ratio; ++j) {
        const bool own = j < spec.signal_features && j % data::kNumClasses == c;
        const double z = (own ? shift[j] : 0.0) + rng.normal();
        r.ratios.push_back(round4(base[j] + scale[j] * z));
      }

      std::string text;
      for (std::size_t s = 0; s < spec.sentences_per_report; ++s) {
        std::vector<std::string> words = {pick(rng, kSubjects), pick(rng, kVerbs)};
        const std::size_t n_fill = 4 + rng.below(5);
        for (std::size_t k = 0; k < n_fill; ++k) words.push_back(pick(rng, filler));
        // Each sentence carries a class keyword with probability rho.
        if (rng.uniform() < spec.rho) {
          const std::size_t at = 2 + rng.below(words.size() - 1);
          words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), pick(rng, keywords[c]));
        }
        for (std::size_t k = 0; k < words.size(); ++k) text += (k ? " " : "") + words[k];
        text += ".\n";
      }
      out.reports.emplace_back(data::report_file_name(r.corporation, r.year), std::move(text));
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

void write_synth(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "reports");
  {
    std::ofstream csv(dir / "financials.csv", std::ios::binary);
    if (!csv) throw InputError("cannot write " + (dir / "financials.csv").string());
    data::write_financial_csv(csv, corpus.records);
  }
  for (const auto& [name, text] : corpus.reports) io::write_text(dir / "reports" / name, text);
}

}  // namespace creditarf::app
