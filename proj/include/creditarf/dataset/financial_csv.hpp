#pragma once

#include <istream>
#include <string>
#include <vector>

#include "creditarf/dataset/rating.hpp"

namespace creditarf::data {

inline const std::vector<std::string> kIdentityColumns = {"Rating Agency", "Corporation", "Rating", "Rating Date"};

// Financial ratio columns in their fixed order.
inline const std::vector<std::string> kRatioColumns = {
    "Current Ratio",
    "Long-term Debt / Capital",
    "Debt/Equity Ratio",
    "Gross Margin",
    "Operating Margin",
    "EBIT Margin",
    "EBITDA Margin",
    "Pre-Tax Profit Margin",
    "Net Profit Margin",
    "Asset Turnover",
    "ROE - Return On Equity",
    "Return On Tangible Equity",
    "ROA - Return On Assets",
    "ROI - Return On Investment",
    "Operating Cash Flow Per Share",
    "Free Cash Flow Per Share",
};

struct FinancialRecord {
  std::string rating_agency;
  std::string corporation;
  std::string raw_rating;
  std::string rating_date;  // YYYY-MM-DD
  int year = 0;
  RatingClass rating = RatingClass::AAA;
  std::vector<double> ratios;
  std::size_t row = 0;  // 1-based line number, header is row 1
};

// One comma-separated line with RFC 4180 quoting.
std::vector<std::string> split_csv_line(const std::string& line);

// Parses the financial CSV. The header must contain the identity columns and
// every name in `ratio_columns` (extra columns are ignored); ratios are
// returned in `ratio_columns` order. Errors name the column and row.
std::vector<FinancialRecord> parse_financial_csv(std::istream& in,
                                                 const std::vector<std::string>& ratio_columns = kRatioColumns);

// Writes records with the identity columns followed by `ratio_columns`.
void write_financial_csv(std::ostream& out, const std::vector<FinancialRecord>& records,
                         const std::vector<std::string>& ratio_columns = kRatioColumns);

}  // namespace creditarf::data
