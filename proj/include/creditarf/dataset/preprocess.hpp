#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "creditarf/dataset/sample.hpp"

namespace creditarf::data {

// Per-feature population mean and standard deviation.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> std;

  static Standardization fit(const std::vector<Sample>& train);

  // Features with std == 0 map to 0.
  std::vector<double> apply(const std::vector<double>& x) const;
  std::vector<double> invert(const std::vector<double>& z) const;
};

void standardize(std::vector<Sample>& samples, const Standardization& stats);

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Per class: round(fraction * n) train samples clamped to [1, n-1]; a class
// with fewer than 2 samples goes wholly to train.
SplitIndices stratified_split(const std::vector<RatingClass>& labels, double train_fraction, std::uint64_t seed);
SplitIndices stratified_split(const std::vector<Sample>& samples, double train_fraction, std::uint64_t seed);

template <typename T>
std::vector<T> gather(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items.at(i));
  return out;
}

struct SmoteConfig {
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;
};

struct SmoteOrigin {
  std::size_t base;
  std::size_t neighbor;  // equal to base for a duplicated singleton
};

struct SmoteResult {
  std::vector<Sample> samples;  // originals first, then synthetic points
  std::vector<SmoteOrigin> origins;  // one per synthetic point, indexes the input
  std::vector<std::string> warnings;
};

// Joint input vector used for oversampling: financial followed by arf.
std::vector<double> joint_features(const Sample& s);

// Oversamples every class to the majority count in the joint space.
SmoteResult smote(const std::vector<Sample>& train, const SmoteConfig& config);

}  // namespace creditarf::data
