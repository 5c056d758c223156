#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "creditarf/dataset/financial_csv.hpp"
#include "creditarf/dataset/rating.hpp"

namespace creditarf::data {

// One (corporation, year) unit.
struct Sample {
  std::string corporation;
  int year = 0;
  std::string agency;
  std::string raw_rating;
  std::string report;  // report file name, relative to the reports directory
  std::vector<double> financial;
  std::optional<std::vector<float>> arf;
  RatingClass label = RatingClass::AAA;

  // "<corporation-slug>:<year>"
  std::string key() const;
};

// Lowercase; runs of non-alphanumerics become one hyphen; no leading or
// trailing hyphen.
std::string slugify(const std::string& name);

// "<slug>_<year>.txt"
std::string report_file_name(const std::string& corporation, int year);

using ReportKey = std::pair<std::string, int>;  // (slug, year)
using ReportIndex = std::map<ReportKey, std::filesystem::path>;

// Indexes `<slug>_<year>.txt` files in a directory; other files are skipped.
ReportIndex index_reports(const std::filesystem::path& dir);

struct JoinResult {
  std::vector<Sample> samples;
  std::vector<std::string> warnings;
};

// Keeps records whose (corporation slug, year) has a report. The first record
// of each pair in file order wins; a repeated (corporation, year, agency)
// triple is reported as a warning.
JoinResult join_reports(const std::vector<FinancialRecord>& records, const ReportIndex& reports);

std::vector<std::size_t> class_histogram(const std::vector<Sample>& samples);

}  // namespace creditarf::data
