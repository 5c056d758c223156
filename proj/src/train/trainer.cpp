#include "creditarf/train/trainer.hpp"

#include <cmath>
#include <numeric>

#include "creditarf/crp/model.hpp"
#include "creditarf/error.hpp"

namespace creditarf::train {
namespace {

constexpr std::size_t kEvalChunk = 256;

std::string at_step(std::size_t epoch, std::size_t batch) {
  return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch);
}

}  // namespace

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("train config: " + what);
  };
  need(epochs >= 1, "epochs must be >= 1");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(lr > 0.0, "lr must be > 0");
  need(weight_decay >= 0.0, "weight_decay must be >= 0");
  need(plateau_factor > 0.0 && plateau_factor < 1.0, "plateau_factor must be in (0, 1)");
  need(plateau_patience >= 1, "plateau_patience must be >= 1");
  need(min_lr > 0.0 && min_lr <= lr, "min_lr must be in (0, lr]");
  need(validation_fraction > 0.0 && validation_fraction < 1.0, "validation_fraction must be in (0, 1)");
}

double mean_loss(const crp::CreditModel<float>& model, const std::vector<data::Sample>& samples,
                 const arf::ArfeCache* sentences) {
  if (samples.empty()) throw InputError("cannot compute a loss over no samples");
  nx::NoGradGuard no_grad;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, samples.size() - start);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), start);
    const auto batch = crp::make_batch<float>(samples, idx, model.spec(), sentences);
    const auto loss = nx::cross_entropy(model.probabilities(batch), batch.labels);
    total += static_cast<double>(loss.value()[0]) * static_cast<double>(n);
  }
  return total / static_cast<double>(samples.size());
}

std::vector<data::RatingClass> predict(const crp::CreditModel<float>& model, const std::vector<data::Sample>& samples,
                                       const arf::ArfeCache* sentences) {
  nx::NoGradGuard no_grad;
  std::vector<data::RatingClass> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, samples.size() - start);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), start);
    const auto probs = model.probabilities(crp::make_batch<float>(samples, idx, model.spec(), sentences)).value();
    for (std::size_t r = 0; r < n; ++r) {
      out.push_back(crp::predict_class<float>(probs.span().subspan(r * data::kNumClasses, data::kNumClasses)));
    }
  }
  return out;
}

TrainResult fit(crp::CreditModel<float>& model, const std::vector<data::Sample>& train_set,
                const std::vector<data::Sample>& validation, const TrainConfig& config,
                const arf::ArfeCache* sentences, const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw InputError("training set is empty");

  auto& params = model.parameters();
  auto adam = nx::make_adam_state(params);
  nx::PlateauScheduler scheduler(config.lr, {config.plateau_factor, config.plateau_patience, config.min_lr});
  nx::Rng shuffle_rng(nx::derive_seed(config.seed, 0));
  nx::Rng dropout_rng(nx::derive_seed(config.seed, 1));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    const double lr = scheduler.lr();
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      ++batch_no;
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      const auto batch = crp::make_batch<float>(train_set, std::span(order).subspan(start, n), model.spec(), sentences);
      const auto loss = nx::cross_entropy(model.probabilities(batch, true, &dropout_rng), batch.labels);
      const double value = static_cast<double>(loss.value()[0]);
      if (!std::isfinite(value)) throw NumericError("non-finite training loss at " + at_step(epoch, batch_no));
      nx::backward(loss);
      try {
        nx::adam_step(params, adam, lr, config.weight_decay);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + at_step(epoch, batch_no));
      }
      loss_sum += value * static_cast<double>(n);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = mean_loss(model, validation.empty() ? train_set : validation, sentences);
    if (!std::isfinite(rec.val_loss)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    rec.lr = lr;
    scheduler.step(rec.val_loss);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.meta.spec_digest = model.spec().digest();
  result.meta.epochs = static_cast<std::uint32_t>(config.epochs);
  result.meta.final_lr = scheduler.lr();
  return result;
}

crp::ModelSpec logistic_regression_spec(crp::ModelSpec base) {
  base.fnf.kind = fnf::EncoderKind::identity;
  base.crp.hidden.clear();
  return base;
}

TrainedModel lr_baseline_train(const crp::ModelSpec& base, const std::vector<data::Sample>& train_set,
                               const std::vector<data::Sample>& validation, const TrainConfig& config,
                               const arf::ArfeCache* sentences) {
  TrainedModel t{crp::CreditModel<float>(logistic_regression_spec(base)), {}};
  t.result = fit(t.model, train_set, validation, config, sentences);
  return t;
}

}  // namespace creditarf::train
