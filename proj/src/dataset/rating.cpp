#include "creditarf/dataset/rating.hpp"

#include <algorithm>
#include <cctype>

#include "creditarf/error.hpp"

namespace creditarf::data {

std::string_view class_name(RatingClass c) { return kClassNames.at(index_of(c)); }

RatingClass class_from_index(std::size_t i) {
  if (i >= kNumClasses) throw std::out_of_range("rating class index " + std::to_string(i) + " out of range");
  return static_cast<RatingClass>(i);
}

RatingClass class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return static_cast<RatingClass>(i);
  }
  throw InputError("unknown rating class '" + std::string(name) + "'");
}

RatingClass map_rating(std::string_view raw) {
  std::string token;
  for (char ch : raw) {
    if (!std::isspace(static_cast<unsigned char>(ch))) token += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  if (std::find(kAgencyGrades.begin(), kAgencyGrades.end(), token) == kAgencyGrades.end()) {
    throw InputError("unknown rating grade '" + std::string(raw) + "'");
  }
  while (!token.empty() && (token.back() == '+' || token.back() == '-')) token.pop_back();
  if (token == "CC" || token == "C" || token == "D") return RatingClass::CCC;
  return class_from_name(token);
}

}  // namespace creditarf::data
