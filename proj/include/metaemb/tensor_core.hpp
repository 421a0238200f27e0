#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "metaemb/types.hpp"

namespace metaemb {

using Rng = std::mt19937_64;

/// Derive an independent stream seed from a run seed and a stream label.
/// splitmix64(seed ^ fnv1a(label)); stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

enum class Activation { Identity, Tanh, SoftmaxRows };

std::string to_string(Activation a);
Activation parse_activation(std::string_view s);

/// y = act(x W + b), W is in_dim x out_dim.
struct DenseLayer {
  Matrix weight;
  RowVector bias;
  Activation activation = Activation::Identity;

  Index in_dim() const noexcept { return weight.rows(); }
  Index out_dim() const noexcept { return weight.cols(); }
};

/// Stack of dense layers. Dropout acts on the output of every layer except
/// the last; set `dropout_output` to also drop the last layer's output (used
/// when the net is an encoder whose output feeds another head).
struct FeedForwardNet {
  std::vector<DenseLayer> layers;
  double dropout_p = 0.0;
  bool dropout_output = false;

  Index in_dim() const;
  Index out_dim() const;
  std::size_t parameter_count() const;
  /// Throws ContractError if dims do not chain or dropout_p is outside [0,1).
  void validate() const;
  bool all_finite() const;
  bool applies_dropout(std::size_t layer) const {
    return dropout_p > 0.0 && (layer + 1 < layers.size() || dropout_output);
  }
};

/// Hyperparameters shared by every trainable method.
struct TrainConfig {
  std::vector<Index> hidden_dims{200};
  Index batch_size = 32;
  int epochs = 50;
  double learning_rate = 0.1;
  double dropout_p = 0.2;
  double init_mean = 0.0;
  double init_std = 1.0;
  std::uint64_t seed = 13;
  int early_stop_patience = 5;
  double validation_fraction = 0.1;
  double lambda = 1.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  Index hidden_dim() const { return hidden_dims.empty() ? 200 : hidden_dims.front(); }
};

struct Batch {
  Matrix inputs;
  Matrix targets;
  Index size() const noexcept { return inputs.rows(); }
};

/// Entries drawn from N(mean, std^2) with a generator seeded by `seed`.
Matrix init_normal(Index rows, Index cols, double mean, double std, std::uint64_t seed);
Matrix init_normal(Index rows, Index cols, double mean, double std, Rng& rng);

/// Builds dims[0] -> dims[1] -> ... with the given per-layer activations.
/// Weights ~ N(mean, std^2); biases start at zero.
FeedForwardNet make_net(const std::vector<Index>& dims, const std::vector<Activation>& activations,
                        double dropout_p, double init_mean, double init_std, Rng& rng);

/// Activations from a forward pass. outputs[0] is the input; outputs[l+1]
/// is layer l's output after dropout and activated[l] the same output before
/// dropout. masks[l] is empty when layer l had no dropout applied.
struct Activations {
  std::vector<Matrix> outputs;
  std::vector<Matrix> activated;
  std::vector<Matrix> masks;

  const Matrix& input() const { return outputs.front(); }
  const Matrix& output() const { return outputs.back(); }
};

using DropoutMasks = std::vector<Matrix>;

Activations forward(const FeedForwardNet& net, const Matrix& inputs, bool train_mode, Rng* rng);
/// Forward pass reusing previously sampled dropout masks.
Activations forward_with_masks(const FeedForwardNet& net, const Matrix& inputs, const DropoutMasks& masks);
/// Evaluation-mode output only.
Matrix predict(const FeedForwardNet& net, const Matrix& inputs);

/// Inverted-dropout mask: each entry is 0 with probability p, else 1/(1-p).
Matrix sample_dropout_mask(Index rows, Index cols, double p, Rng& rng);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<RowVector> bias;
  Matrix input;  // d loss / d inputs

  static Gradients zeros_like(const FeedForwardNet& net);
  Gradients& operator+=(const Gradients& other);
};

/// `loss_grad` is d loss / d (final output), shape M x out_dim.
Gradients backward(const FeedForwardNet& net, const Activations& acts, const Matrix& loss_grad);

/// theta <- theta - lr * grad. Throws TrainingError naming the first layer
/// with a non-finite gradient; the net is left untouched in that case.
void sgd_step(FeedForwardNet& net, const Gradients& grads, double learning_rate, std::string_view net_name = "net");

/// Scalar loss together with its gradient w.r.t. the quantity it was given.
struct LossValue {
  double value = 0.0;
  Matrix grad;
};

/// |a - n| / max(1e-5, |a| + |n|)
double relative_gradient_error(double analytic, double numeric);

/// A single scalar parameter exposed to the finite-difference harness.
struct ParamRef {
  std::string name;
  double* value;
  double analytic;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t parameters_checked = 0;
};

/// Central differences (L(p+eps) - L(p-eps)) / 2eps for each parameter,
/// compared against its analytic derivative. `loss` must be a pure function
/// of the current parameter values.
GradCheckReport check_gradients(std::vector<ParamRef> params, const std::function<double()>& loss, double epsilon);

using OutputLoss = std::function<LossValue(const Matrix& output, const Batch& batch)>;

/// Finite-difference check of backward() for `net` under `loss_fn`. Dropout
/// masks are sampled once with `mask_seed` and held fixed.
GradCheckReport finite_diff_check(FeedForwardNet net, const OutputLoss& loss_fn, const Batch& batch, double epsilon,
                                  std::uint64_t mask_seed = 0);

/// Lists every weight and bias entry of `net` with its analytic gradient.
std::vector<ParamRef> parameter_refs(FeedForwardNet& net, const Gradients& grads, std::string_view prefix);

/// train_loss and validation_loss are eval-mode (dropout off) losses after
/// the epoch; batch_loss is the mean of the training-mode mini-batch losses.
struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double batch_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  bool stopped_early = false;

  double best_validation_loss() const;
};

/// Deterministic train/validation split of 0..n-1 using the given seed.
struct DataSplit {
  IndexList train;
  IndexList validation;
};
DataSplit split_indices(Index n, double validation_fraction, std::uint64_t seed);

/// Mini-batch partition of a shuffled copy of `indices`.
std::vector<IndexList> make_batches(IndexList indices, Index batch_size, Rng& rng);

/// Generic SGD loop with early stopping. `step` runs one mini-batch update and
/// returns its loss; `validate` returns the loss on the held-out rows. The
/// model is restored to its best-validation state on return.
template <typename Model>
TrainHistory fit(Model& model, const DataSplit& split, const TrainConfig& config, std::uint64_t shuffle_seed,
                 const std::function<double(Model&, const IndexList&, Rng&)>& step,
                 const std::function<double(const Model&, const IndexList&)>& validate);

}  // namespace metaemb

#include "metaemb/detail/fit.ipp"
