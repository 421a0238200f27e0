#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "metaemb/errors.hpp"

namespace metaemb {

template <typename Model>
TrainHistory fit(Model& model, const DataSplit& split, const TrainConfig& config, std::uint64_t shuffle_seed,
                 const std::function<double(Model&, const IndexList&, Rng&)>& step,
                 const std::function<double(const Model&, const IndexList&)>& validate) {
  config.validate();
  if (split.train.empty()) throw ContractError("no training rows");

  Rng shuffle_rng(shuffle_seed);
  Rng dropout_rng(derive_seed(shuffle_seed, "dropout"));

  TrainHistory history;
  std::optional<Model> best;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto batches = make_batches(split.train, config.batch_size, shuffle_rng);
    double total = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const double loss = step(model, batches[b], dropout_rng);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b));
      }
      total += loss;
    }
    const double train = validate(model, split.train);
    const double val = split.validation.empty() ? train : validate(model, split.validation);
    if (!std::isfinite(val) || !std::isfinite(train)) {
      throw TrainingError("non-finite evaluation loss at epoch " + std::to_string(epoch));
    }
    history.epochs.push_back({epoch, train, val, total / static_cast<double>(batches.size())});

    if (val < best_loss) {
      best_loss = val;
      best = model;
      history.best_epoch = epoch;
      since_best = 0;
    } else if (config.early_stop_patience > 0 && ++since_best >= config.early_stop_patience) {
      history.stopped_early = true;
      break;
    }
  }
  if (best) model = std::move(*best);
  return history;
}

}  // namespace metaemb
