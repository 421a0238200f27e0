#pragma once

#include <string>
#include <vector>

#include "metaemb/checkpoint.hpp"
#include "metaemb/meta_embedding.hpp"
#include "metaemb/recon_loss.hpp"

namespace metaemb {

enum class AemeArchitecture { Coupled, Decoupled };

std::string to_string(AemeArchitecture a);

/// Autoencoded meta-embedding.
///
/// Coupled (CAEME): one tanh encoder k -> hidden over the concatenated
/// sources and one linear decoder hidden -> k.
///
/// Decoupled (DAEME): one encoder/decoder pair per source; source i gets a
/// code of width daeme_code_widths(hidden, N)[i] and the meta-embedding is
/// the concatenation of the per-source codes. The training objective adds
/// `discrepancy_weight` times the mean over source pairs of the batch-mean
/// squared distance between codes (shorter codes zero-padded).
///
/// Dropout is applied to the codes between encoder and decoder during
/// training only.
struct AemeModel {
  AemeArchitecture architecture = AemeArchitecture::Coupled;
  ReconLossKind loss = ReconLossKind::MSE;
  std::vector<FeedForwardNet> encoders;
  std::vector<FeedForwardNet> decoders;
  std::vector<Index> source_dims;
  double dropout_p = 0.2;
  double discrepancy_weight = 1.0;

  Index hidden_dim() const;
  std::size_t branch_count() const noexcept { return encoders.size(); }

  /// Per-branch codes (eval mode) for rows of the normalized concatenation.
  std::vector<Matrix> branch_codes(const Matrix& x) const;
  /// Concatenated codes, not normalized.
  Matrix codes(const Matrix& x) const;
  /// Eval-mode reconstruction of the normalized concatenation.
  Matrix reconstruct(const Matrix& x) const;
};

/// floor(hidden / n) per source, the remainder added to the first source.
std::vector<Index> daeme_code_widths(Index hidden, std::size_t n);

/// Loss and parameter gradients for one batch of the normalized
/// concatenation. `masks` holds one dropout mask per branch (empty = eval
/// mode, no dropout).
struct AemeObjective {
  double value = 0.0;
  double reconstruction = 0.0;
  double discrepancy = 0.0;
  std::vector<Gradients> encoder_grads;
  std::vector<Gradients> decoder_grads;
};
AemeObjective aeme_objective(const AemeModel& model, const Matrix& x, const std::vector<Matrix>& masks);

/// Draws one dropout mask per branch for a batch of `rows` rows.
std::vector<Matrix> sample_aeme_masks(const AemeModel& model, Index rows, Rng& rng);

struct AemeResult {
  MetaEmbedding meta;
  AemeModel model;
  TrainHistory history;
};

/// Untrained model with freshly initialized parameters.
AemeModel init_aeme(AemeArchitecture arch, const std::vector<Index>& source_dims, ReconLossKind kind,
                    const TrainConfig& config, double discrepancy_weight = 1.0);

AemeResult train_caeme(const EmbeddingEnsemble& ensemble, ReconLossKind kind, const TrainConfig& config);
AemeResult train_daeme(const EmbeddingEnsemble& ensemble, ReconLossKind kind, const TrainConfig& config,
                       double discrepancy_weight = 1.0);

/// l2-normalized codes for the given words (dropout off).
Matrix encode(const AemeModel& model, const EmbeddingEnsemble& ensemble, const std::vector<std::string>& words);

/// Meta-embedding over the full vocabulary from a trained model.
MetaEmbedding aeme_meta(const AemeModel& model, const EmbeddingEnsemble& ensemble, const TrainConfig& config);

/// Mean over words and source pairs of the distance between unit-normalized
/// branch codes (zero-padded to equal width). Zero for a coupled model.
double mean_branch_code_distance(const AemeModel& model, const Matrix& x);

Checkpoint to_checkpoint(const AemeModel& model);
AemeModel aeme_from_checkpoint(const Checkpoint& ckpt);

}  // namespace metaemb
