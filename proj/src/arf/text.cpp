#include "creditarf/arf/text.hpp"

#include <cctype>

#include "creditarf/dataset/sample.hpp"
#include "creditarf/error.hpp"

namespace creditarf::arf {

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char ch : sentence) {
    if (std::isspace(ch)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(ch));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text, std::size_t min_tokens) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const auto first = cur.find_first_not_of(" \t\r\f\v");
    if (first != std::string::npos) {
      const auto last = cur.find_last_not_of(" \t\r\f\v");
      std::string s = cur.substr(first, last - first + 1);
      if (tokenize(s).size() >= min_tokens) out.push_back(std::move(s));
    }
    cur.clear();
  };
  for (char ch : text) {
    if (ch == '.' || ch == '!' || ch == '?' || ch == '\n') {
      flush();
    } else {
      cur += ch;
    }
  }
  flush();
  if (out.empty()) throw InputError("document has no sentence with at least " + std::to_string(min_tokens) + " tokens");
  return out;
}

std::string truncate_tokens(std::string_view sentence, std::size_t max_tokens) {
  std::string out;
  std::size_t kept = 0;
  std::size_t i = 0;
  while (i < sentence.size() && kept < max_tokens) {
    while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    const std::size_t start = i;
    while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    if (i > start) {
      if (kept++) out += ' ';
      out.append(sentence.substr(start, i - start));
    }
  }
  return out;
}

std::vector<BatchRange> batch_ranges(std::size_t count, std::size_t batch_size) {
  if (batch_size == 0) throw InputError("batch size must be positive");
  std::vector<BatchRange> out;
  for (std::size_t b = 0; b < count; b += batch_size) out.push_back({b, std::min(count, b + batch_size)});
  return out;
}

std::string ReportDocument::key() const { return data::slugify(corporation) + ":" + std::to_string(year); }

ReportDocument make_document(const std::string& corporation, int year, std::string_view text, std::size_t min_tokens,
                             std::size_t max_tokens) {
  ReportDocument doc{corporation, year, split_sentences(text, min_tokens)};
  for (auto& s : doc.sentences) s = truncate_tokens(s, max_tokens);
  return doc;
}

}  // namespace creditarf::arf
