#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "metaemb/checkpoint.hpp"
#include "metaemb/distance.hpp"
#include "metaemb/meta_embedding.hpp"
#include "metaemb/recon_loss.hpp"
#include "metaemb/word_pairs.hpp"

namespace metaemb {

/// Supervised word-similarity loss.
///
///   NLL    soft-label binary cross-entropy against yhat = exp(-d)
///   Brier  mean (y - exp(-d))^2
///   OLS    mean (y - (1 - d))^2, a linear unclamped readout of d
enum class SimLossKind { NLL, OLS, Brier };

std::string to_string(SimLossKind k);
SimLossKind parse_sim_loss(std::string_view s);

struct MtlKinds {
  ReconLossKind recon = ReconLossKind::SCP;
  SimLossKind sim = SimLossKind::Brier;
  DistanceKind distance = DistanceKind::Cosine;
};

/// Layer widths of the siamese multi-task network. hidden = 0 takes the
/// width from TrainConfig::hidden_dim().
struct MtlShape {
  Index hidden = 0;
  Index tower_hidden = 50;
  Index tower_out = 10;
};

/// Shared tanh layer h1 (the meta-embedding), a linear decoder that
/// reconstructs the input from h1, and a tanh tower h1 -> h2 -> h3 applied
/// with tied weights to both words of a pair. Dropout acts on h1 only.
struct MtlModel {
  FeedForwardNet shared;
  FeedForwardNet decoder;
  FeedForwardNet tower;
  MtlKinds kinds;
  double lambda = 1.0;
  double dropout_p = 0.2;

  Index input_dim() const { return shared.in_dim(); }
  /// Eval-mode h1 for rows of the normalized concatenation.
  Matrix encode(const Matrix& x) const;
  /// Eval-mode h3.
  Matrix tower_output(const Matrix& x) const;
};

MtlModel init_mtl(Index input_dim, const MtlKinds& kinds, const TrainConfig& config, const MtlShape& shape = {});

/// yhat = exp(-d(tower(shared(x1)), tower(shared(x2)))), dropout off.
double similarity_forward(const MtlModel& model, const RowVector& x1, const RowVector& x2);

/// M pairs of concatenated ensemble rows. `supervised[i] == false` marks a
/// pair that only contributes to reconstruction (its y is ignored).
struct PairBatch {
  Matrix x1;
  Matrix x2;
  Vector y;
  std::vector<bool> supervised;

  Index size() const noexcept { return x1.rows(); }
  bool is_supervised(Index i) const { return supervised.empty() || supervised[static_cast<std::size_t>(i)]; }
};

/// Dropout masks on h1 for the first and second words of each pair.
struct MtlMasks {
  Matrix first;
  Matrix second;
};

struct MtlObjective {
  double value = 0.0;
  double reconstruction = 0.0;  // already multiplied by lambda
  double supervised = 0.0;
  std::size_t clamped = 0;  // asymmetric distances clamped at 0
  Gradients shared;
  Gradients decoder;
  Gradients tower;
};

/// L = L_r + L_s with
///   L_r = lambda / (2M) * sum over the 2M words of the per-row
///         reconstruction loss (MSE gives the squared-error form exactly),
///   L_s = mean over supervised pairs of the SimLossKind loss.
/// `masks == nullptr` evaluates without dropout.
MtlObjective mtl_objective(const MtlModel& model, const PairBatch& batch, const MtlMasks* masks = nullptr);

MtlMasks sample_mtl_masks(const MtlModel& model, Index pairs, Rng& rng);

/// Eval-mode total loss with the given kinds substituted into the model.
double mtl_loss(const MtlModel& model, const PairBatch& batch, SimLossKind sim, ReconLossKind recon);

/// Unweighted reconstruction loss (mean per row) of the decoder over `x`.
double mtl_reconstruction_loss(const MtlModel& model, const Matrix& x);

struct MtlResult {
  MtlModel model;
  MetaEmbedding meta;  // l2-normalized h1 over the full vocabulary
  TrainHistory history;
  std::size_t train_pairs = 0;
  std::size_t dropped_pairs = 0;  // unresolvable training pairs
  std::size_t heldout_pairs = 0;  // held-out pairs used for reconstruction only
};

/// Joint SGD on mtl_objective. Pairs from `train_sets` are mixed uniformly;
/// held-out pairs enter batches as reconstruction-only pairs. Throws
/// ProtocolError if a training pair (unordered) also occurs in `held_out`.
MtlResult train_mtl(const std::vector<WordPairDataset>& train_sets, const WordPairDataset& held_out,
                    const EmbeddingEnsemble& ensemble, const MtlKinds& kinds, const TrainConfig& config,
                    const MtlShape& shape = {});

MetaEmbedding mtl_meta(const MtlModel& model, const EmbeddingEnsemble& ensemble, const TrainConfig& config);

Checkpoint to_checkpoint(const MtlModel& model);
MtlModel mtl_from_checkpoint(const Checkpoint& ckpt);

}  // namespace metaemb
