#include "creditarf/dataset/sample.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <tuple>

#include "creditarf/error.hpp"

namespace creditarf::data {

std::string Sample::key() const { return slugify(corporation) + ":" + std::to_string(year); }

std::string slugify(const std::string& name) {
  std::string out;
  bool pending_hyphen = false;
  for (unsigned char ch : name) {
    if (std::isalnum(ch)) {
      if (pending_hyphen && !out.empty()) out += '-';
      pending_hyphen = false;
      out += static_cast<char>(std::tolower(ch));
    } else {
      pending_hyphen = true;
    }
  }
  return out;
}

std::string report_file_name(const std::string& corporation, int year) {
  return slugify(corporation) + "_" + std::to_string(year) + ".txt";
}

ReportIndex index_reports(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("reports directory not found: " + dir.string());
  ReportIndex index;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string stem = entry.path().stem().string();
    const auto us = stem.rfind('_');
    if (us == std::string::npos || us == 0) continue;
    int year = 0;
    const char* begin = stem.data() + us + 1;
    const char* end = stem.data() + stem.size();
    auto res = std::from_chars(begin, end, year);
    if (res.ec != std::errc() || res.ptr != end) continue;
    const std::string slug = stem.substr(0, us);
    if (slugify(slug) != slug) continue;
    index.emplace(ReportKey{slug, year}, entry.path());
  }
  return index;
}

JoinResult join_reports(const std::vector<FinancialRecord>& records, const ReportIndex& reports) {
  JoinResult result;
  std::set<ReportKey> used;
  std::set<std::tuple<std::string, int, std::string>> seen;
  for (const auto& r : records) {
    const std::string slug = slugify(r.corporation);
    if (!seen.emplace(slug, r.year, r.rating_agency).second) {
      result.warnings.push_back("duplicate rating for (" + r.corporation + ", " + std::to_string(r.year) + ", " +
                                r.rating_agency + ") at row " + std::to_string(r.row) + "; first kept");
      continue;
    }
    const ReportKey key{slug, r.year};
    auto it = reports.find(key);
    if (it == reports.end() || !used.insert(key).second) continue;
    Sample s;
    s.corporation = r.corporation;
    s.year = r.year;
    s.agency = r.rating_agency;
    s.raw_rating = r.raw_rating;
    s.report = it->second.filename().string();
    s.financial = r.ratios;
    s.label = r.rating;
    result.samples.push_back(std::move(s));
  }
  return result;
}

std::vector<std::size_t> class_histogram(const std::vector<Sample>& samples) {
  std::vector<std::size_t> h(kNumClasses, 0);
  for (const auto& s : samples) ++h[index_of(s.label)];
  return h;
}

}  // namespace creditarf::data
