#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace creditarf::data {

// Consolidated rating classes; the index order is the label order used in
// confusion matrices and reports.
enum class RatingClass : std::size_t { AAA = 0, AA, A, BBB, BB, B, CCC };

inline constexpr std::size_t kNumClasses = 7;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {"AAA", "AA", "A", "BBB",
                                                                          "BB",  "B",  "CCC"};

// The agency grade vocabulary accepted by map_rating.
inline constexpr std::array<std::string_view, 23> kAgencyGrades = {
    "AAA", "AA+", "AA", "AA-", "A+",  "A",   "A-",   "BBB+", "BBB", "BBB-", "BB+", "BB",
    "BB-", "B+",  "B",  "B-",  "CCC+", "CCC", "CCC-", "CC+",  "CC",  "C",    "D"};

inline constexpr std::size_t index_of(RatingClass c) { return static_cast<std::size_t>(c); }

std::string_view class_name(RatingClass c);
RatingClass class_from_index(std::size_t i);
RatingClass class_from_name(std::string_view name);

// Strips the +/- modifier from an agency grade. Everything below CCC
// (CC+, CC, C, D) collapses into CCC. Throws InputError on unknown tokens.
RatingClass map_rating(std::string_view raw);

}  // namespace creditarf::data
