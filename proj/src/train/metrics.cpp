#include "creditarf/train/metrics.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include "creditarf/error.hpp"

namespace creditarf::train {
namespace {

using nlohmann::json;

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string general(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr std::array<const char*, 3> kMetricNames = {"Rec", "Acc", "F1"};

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) t += counts[i][i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t true_class) const {
  std::uint64_t t = 0;
  for (auto v : counts.at(true_class)) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted_class) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row.at(predicted_class);
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const RatingClass> predictions, std::span<const RatingClass> labels) {
  if (predictions.size() != labels.size()) {
    throw InputError("confusion matrix needs equal-length lists, got " + std::to_string(predictions.size()) +
                     " predictions and " + std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) ++cm.counts[data::index_of(labels[i])][data::index_of(predictions[i])];
  return cm;
}

std::array<std::uint64_t, kNumClasses> EvalReport::class_histogram() const {
  std::array<std::uint64_t, kNumClasses> h{};
  for (std::size_t c = 0; c < kNumClasses; ++c) h[c] = confusion.row_sum(c);
  return h;
}

EvalReport report_from_confusion(const ConfusionMatrix& cm) {
  EvalReport r;
  r.confusion = cm;
  r.accuracy = ratio(cm.trace(), cm.total());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = r.per_class[c];
    const auto tp = cm.counts[c][c];
    m.support = cm.row_sum(c);
    m.precision = ratio(tp, cm.col_sum(c));
    m.recall = ratio(tp, m.support);
    const double s = m.precision + m.recall;
    m.f1 = s == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / s;
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
  }
  r.macro_precision /= kNumClasses;
  r.macro_recall /= kNumClasses;
  r.macro_f1 /= kNumClasses;
  return r;
}

EvalReport evaluate(const crp::CreditModel<float>& model, const std::vector<data::Sample>& test_set,
                    const arf::ArfeCache* sentences) {
  if (test_set.empty()) throw InputError("test set is empty");
  const auto preds = predict(model, test_set, sentences);
  std::vector<RatingClass> labels;
  labels.reserve(test_set.size());
  for (const auto& s : test_set) labels.push_back(s.label);
  return report_from_confusion(confusion_matrix(preds, labels));
}

json to_json(const EvalReport& r) {
  json per_class = json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    per_class.push_back({{"class", std::string(data::kClassNames[c])},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  json confusion = json::array();
  for (const auto& row : r.confusion.counts) confusion.push_back(row);
  std::vector<std::string> names(data::kClassNames.begin(), data::kClassNames.end());
  return {{"count", r.count()},
          {"accuracy", r.accuracy},
          {"macro", {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}}},
          {"per_class", per_class},
          {"classes", names},
          {"confusion", confusion}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  try {
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.at("macro").at("precision").get<double>();
    r.macro_recall = j.at("macro").at("recall").get<double>();
    r.macro_f1 = j.at("macro").at("f1").get<double>();
    const auto& pc = j.at("per_class");
    if (!pc.is_array() || pc.size() != kNumClasses) throw InputError("report: per_class must list 7 classes");
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (pc[c].at("class").get<std::string>() != data::kClassNames[c]) {
        throw InputError("report: per_class entry " + std::to_string(c) + " is not " +
                         std::string(data::kClassNames[c]));
      }
      r.per_class[c] = {pc[c].at("precision").get<double>(), pc[c].at("recall").get<double>(),
                        pc[c].at("f1").get<double>(), pc[c].at("support").get<std::uint64_t>()};
    }
    const auto& cm = j.at("confusion");
    if (!cm.is_array() || cm.size() != kNumClasses) throw InputError("report: confusion must be 7x7");
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      r.confusion.counts[i] = cm[i].get<std::array<std::uint64_t, kNumClasses>>();
    }
    if (j.at("count").get<std::uint64_t>() != r.confusion.total()) {
      throw InputError("report: count disagrees with the confusion matrix total");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
  return r;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "true\\pred";
  for (auto name : data::kClassNames) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    os << data::kClassNames[i];
    for (auto v : cm.counts[i]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss,lr\n";
  for (const auto& h : history) {
    os << h.epoch << ',' << general(h.train_loss) << ',' << general(h.val_loss) << ',' << general(h.lr) << '\n';
  }
  return os.str();
}

Comparison compare_runs(const EvalReport& baseline, const EvalReport& with_arf) {
  if (baseline.count() != with_arf.count()) {
    throw InputError("reports cover different test sets: " + std::to_string(baseline.count()) + " vs " +
                     std::to_string(with_arf.count()) + " samples");
  }
  if (baseline.class_histogram() != with_arf.class_histogram()) {
    throw InputError("reports cover different test sets: class histogram mismatch");
  }
  Comparison c;
  auto add = [&](std::string scope, const char* metric, double a, double b) {
    c.rows.push_back({std::move(scope), metric, a, b, b - a});
  };
  add("All", kMetricNames[0], baseline.macro_recall, with_arf.macro_recall);
  add("All", kMetricNames[1], baseline.accuracy, with_arf.accuracy);
  add("All", kMetricNames[2], baseline.macro_f1, with_arf.macro_f1);
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const std::string scope(data::kClassNames[k]);
    const auto& a = baseline.per_class[k];
    const auto& b = with_arf.per_class[k];
    add(scope, kMetricNames[0], a.recall, b.recall);
    add(scope, kMetricNames[1], a.precision, b.precision);
    add(scope, kMetricNames[2], a.f1, b.f1);
  }
  return c;
}

std::string format_delta(double delta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", delta);
  std::string s = buf;
  if (s == "-0.000") s = "+0.000";
  return s;
}

std::string comparison_table(const Comparison& c) {
  // One column per scope, three lines (baseline, + ARF, delta) per metric.
  std::vector<std::string> scopes;
  for (const auto& r : c.rows) {
    if (scopes.empty() || scopes.back() != r.scope) scopes.push_back(r.scope);
  }
  auto find = [&](const std::string& scope, const std::string& metric) -> const MetricDelta& {
    for (const auto& r : c.rows) {
      if (r.scope == scope && r.metric == metric) return r;
    }
    throw InputError("comparison lacks " + scope + " " + metric);
  };
  std::ostringstream os;
  os << std::left << std::setw(7) << "metric" << std::setw(10) << "run";
  for (const auto& s : scopes) os << std::right << std::setw(8) << s;
  os << '\n';
  for (const char* metric : kMetricNames) {
    for (int line = 0; line < 3; ++line) {
      os << std::left << std::setw(7) << metric << std::setw(10)
         << (line == 0 ? "baseline" : line == 1 ? "+ ARF" : "delta");
      for (const auto& s : scopes) {
        const auto& r = find(s, metric);
        os << std::right << std::setw(8)
           << (line == 0 ? fixed3(r.baseline) : line == 1 ? fixed3(r.with_arf) : format_delta(r.delta));
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string comparison_csv(const Comparison& c) {
  std::ostringstream os;
  os << "scope,metric,baseline,with_arf,delta\n";
  for (const auto& r : c.rows) {
    os << r.scope << ',' << r.metric << ',' << fixed3(r.baseline) << ',' << fixed3(r.with_arf) << ','
       << format_delta(r.delta) << '\n';
  }
  return os.str();
}

}  // namespace creditarf::train
