#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "creditarf/arf/embedding.hpp"
#include "creditarf/crp/checkpoint.hpp"
#include "creditarf/crp/model.hpp"
#include "creditarf/dataset/sample.hpp"

namespace creditarf::train {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  double plateau_factor = 0.5;
  std::size_t plateau_patience = 3;
  double min_lr = 1e-6;
  double validation_fraction = 0.1;  // of the training split, carved before oversampling
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
};

struct TrainResult {
  std::vector<EpochRecord> history;
  crp::TrainingMeta meta;
};

// Shuffled minibatch cross-entropy with Adam. After each epoch the plateau
// scheduler sees the validation loss, or the dropout-free loss over the
// training set when `validation` is empty. A non-finite loss or gradient
// throws NumericError naming the epoch and batch.
TrainResult fit(crp::CreditModel<float>& model, const std::vector<data::Sample>& train_set,
                const std::vector<data::Sample>& validation, const TrainConfig& config,
                const arf::ArfeCache* sentences = nullptr,
                const std::function<void(const EpochRecord&)>& on_epoch = {});

// Mean cross-entropy without dropout or gradient recording.
double mean_loss(const crp::CreditModel<float>& model, const std::vector<data::Sample>& samples,
                 const arf::ArfeCache* sentences = nullptr);

// Class predictions in evaluation mode.
std::vector<data::RatingClass> predict(const crp::CreditModel<float>& model, const std::vector<data::Sample>& samples,
                                       const arf::ArfeCache* sentences = nullptr);

// Multinomial logistic regression: identity encoder, no hidden layers; the
// report channel and mode are kept from `base`.
crp::ModelSpec logistic_regression_spec(crp::ModelSpec base);

struct TrainedModel {
  crp::CreditModel<float> model;
  TrainResult result;
};

TrainedModel lr_baseline_train(const crp::ModelSpec& base, const std::vector<data::Sample>& train_set,
                               const std::vector<data::Sample>& validation, const TrainConfig& config,
                               const arf::ArfeCache* sentences = nullptr);

}  // namespace creditarf::train
