#include "creditarf/dataset/financial_csv.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <ostream>

#include "creditarf/error.hpp"

namespace creditarf::data {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

int parse_year(const std::string& date, std::size_t row) {
  // YYYY-MM-DD
  int y = 0, m = 0, d = 0;
  const bool shape_ok = date.size() == 10 && date[4] == '-' && date[7] == '-';
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    auto res = std::from_chars(date.data() + pos, date.data() + pos + len, out);
    return res.ec == std::errc() && res.ptr == date.data() + pos + len;
  };
  if (!shape_ok || !num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d) || m < 1 || m > 12 || d < 1 || d > 31) {
    throw InputError("row " + std::to_string(row) + ", column 'Rating Date': expected YYYY-MM-DD, got '" + date +
                     "'");
  }
  return y;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::vector<FinancialRecord> parse_financial_csv(std::istream& in, const std::vector<std::string>& ratio_columns) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("financial CSV is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(trim(header[i]), i);
  auto column = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw InputError("financial CSV is missing column '" + name + "'");
    return it->second;
  };
  const std::size_t agency_col = column("Rating Agency");
  const std::size_t corp_col = column("Corporation");
  const std::size_t rating_col = column("Rating");
  const std::size_t date_col = column("Rating Date");
  std::vector<std::size_t> ratio_pos;
  for (const auto& name : ratio_columns) ratio_pos.push_back(column(name));

  std::vector<FinancialRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    FinancialRecord r;
    r.row = row;
    r.rating_agency = trim(cells[agency_col]);
    r.corporation = trim(cells[corp_col]);
    r.raw_rating = trim(cells[rating_col]);
    r.rating_date = trim(cells[date_col]);
    if (r.corporation.empty()) throw InputError("row " + std::to_string(row) + ", column 'Corporation': empty");
    try {
      r.rating = map_rating(r.raw_rating);
    } catch (const InputError& e) {
      throw InputError("row " + std::to_string(row) + ", column 'Rating': " + e.what());
    }
    r.year = parse_year(r.rating_date, row);
    r.ratios.reserve(ratio_pos.size());
    for (std::size_t k = 0; k < ratio_pos.size(); ++k) {
      const std::string cell = trim(cells[ratio_pos[k]]);
      double v = 0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw InputError("row " + std::to_string(row) + ", column '" + ratio_columns[k] + "': '" + cell +
                         "' is not a finite number");
      }
      r.ratios.push_back(v);
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_financial_csv(std::ostream& out, const std::vector<FinancialRecord>& records,
                         const std::vector<std::string>& ratio_columns) {
  bool first = true;
  for (const auto& name : kIdentityColumns) {
    out << (first ? "" : ",") << quote_if_needed(name);
    first = false;
  }
  for (const auto& name : ratio_columns) out << ',' << quote_if_needed(name);
  out << '\n';
  char buf[64];
  for (const auto& r : records) {
    out << quote_if_needed(r.rating_agency) << ',' << quote_if_needed(r.corporation) << ','
        << quote_if_needed(r.raw_rating) << ',' << r.rating_date;
    for (double v : r.ratios) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace creditarf::data
