#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "creditarf/dataset/rating.hpp"
#include "creditarf/train/trainer.hpp"

namespace creditarf::train {

using data::kNumClasses;
using data::RatingClass;

// counts[true][predicted], index order AAA..CCC
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t true_class) const;
  std::uint64_t col_sum(std::size_t predicted_class) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(std::span<const RatingClass> predictions, std::span<const RatingClass> labels);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // true count

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

// Zero denominators give 0, and F1 = 0 when precision + recall = 0.
struct EvalReport {
  double accuracy = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;

  std::uint64_t count() const { return confusion.total(); }
  std::array<std::uint64_t, kNumClasses> class_histogram() const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport report_from_confusion(const ConfusionMatrix& cm);

// Throws InputError on an empty test set.
EvalReport evaluate(const crp::CreditModel<float>& model, const std::vector<data::Sample>& test_set,
                    const arf::ArfeCache* sentences = nullptr);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// 7x7 with a header row and column of class names.
std::string confusion_csv(const ConfusionMatrix& cm);
// epoch,train_loss,val_loss,lr
std::string history_csv(const std::vector<EpochRecord>& history);

struct MetricDelta {
  std::string scope;   // "All" or a class name
  std::string metric;  // "Rec", "Acc" or "F1"
  double baseline = 0.0;
  double with_arf = 0.0;
  double delta = 0.0;
};

// Per-class "Acc" is precision; "All" uses accuracy and macro recall / F1.
struct Comparison {
  std::vector<MetricDelta> rows;  // All first, then AAA..CCC; Rec, Acc, F1 within each
};

// Refuses reports whose sample counts or class histograms differ.
Comparison compare_runs(const EvalReport& baseline, const EvalReport& with_arf);

// Signed, three decimals: "+0.090", "-0.012", "+0.000".
std::string format_delta(double delta);
std::string comparison_table(const Comparison& c);
std::string comparison_csv(const Comparison& c);

}  // namespace creditarf::train
