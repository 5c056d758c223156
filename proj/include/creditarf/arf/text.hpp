#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace creditarf::arf {

// Lowercased whitespace tokens.
std::vector<std::string> tokenize(std::string_view sentence);

// Splits on '.', '!', '?' and newline, trims, and drops pieces with fewer
// than `min_tokens` tokens. Throws InputError when nothing survives.
std::vector<std::string> split_sentences(std::string_view text, std::size_t min_tokens = 2);

// Keeps the first `max_tokens` whitespace tokens, joined by single spaces.
std::string truncate_tokens(std::string_view sentence, std::size_t max_tokens);

// Consecutive [begin, end) ranges of at most `batch_size` items.
struct BatchRange {
  std::size_t begin;
  std::size_t end;
};
std::vector<BatchRange> batch_ranges(std::size_t count, std::size_t batch_size = 50);

template <class T>
std::vector<std::vector<T>> batch_sentences(const std::vector<T>& sentences, std::size_t batch_size = 50) {
  std::vector<std::vector<T>> out;
  for (const auto& r : batch_ranges(sentences.size(), batch_size)) {
    out.emplace_back(sentences.begin() + static_cast<std::ptrdiff_t>(r.begin),
                     sentences.begin() + static_cast<std::ptrdiff_t>(r.end));
  }
  return out;
}

struct ReportDocument {
  std::string corporation;
  int year = 0;
  std::vector<std::string> sentences;  // split, filtered and truncated

  // "<corporation-slug>:<year>", the embedding cache key
  std::string key() const;
};

ReportDocument make_document(const std::string& corporation, int year, std::string_view text,
                             std::size_t min_tokens = 2, std::size_t max_tokens = 512);

}  // namespace creditarf::arf
