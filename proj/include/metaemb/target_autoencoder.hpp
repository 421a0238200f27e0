#pragma once

#include <vector>

#include "metaemb/checkpoint.hpp"
#include "metaemb/meta_embedding.hpp"
#include "metaemb/recon_loss.hpp"

namespace metaemb {

/// Target autoencoder: maps the concatenation of every source except
/// `target_index` through a tanh hidden layer of width d_t to a linear
/// prediction of the target source (width d_t).
struct TaeModel {
  std::size_t target_index = 0;
  FeedForwardNet net;
  ReconLossKind loss = ReconLossKind::MSE;
  std::vector<Index> source_dims;

  Index target_dim() const { return source_dims.at(target_index); }
  /// Eval-mode hidden codes for rows of the normalized concatenation.
  Matrix hidden(const Matrix& x) const;
  /// Eval-mode prediction of the target block.
  Matrix predict_target(const Matrix& x) const;
};

/// Non-target column blocks of `x`, in source order.
Matrix tae_inputs(const Matrix& x, const std::vector<Index>& source_dims, std::size_t target_index);
/// Target column block of `x`.
Matrix tae_target(const Matrix& x, const std::vector<Index>& source_dims, std::size_t target_index);

struct TaeResult {
  TaeModel model;
  TrainHistory history;
};

TaeResult train_tae(const EmbeddingEnsemble& ensemble, std::size_t target_index, ReconLossKind kind,
                    const TrainConfig& config);

/// Per word: [normalize(hidden code) || normalize(target row)], then the whole
/// row normalized. Width 2 * d_t.
MetaEmbedding tae_meta(const TaeModel& model, const EmbeddingEnsemble& ensemble);

struct MteResult {
  MetaEmbedding meta;
  std::vector<TaeModel> models;
  std::vector<TrainHistory> histories;
};

/// One TAE per target choice (seed + target index for branch t), meta rows are
/// the l2-normalized elementwise mean of the N hidden codes. Requires equal
/// source dims. Up to `jobs` branches train concurrently.
MteResult mte_meta(const EmbeddingEnsemble& ensemble, ReconLossKind kind, const TrainConfig& config,
                   unsigned jobs = 1);

/// Mean hidden code across models; rows normalized.
MetaEmbedding mte_combine(const std::vector<TaeModel>& models, const EmbeddingEnsemble& ensemble,
                          const TrainConfig& config);

Checkpoint to_checkpoint(const std::vector<TaeModel>& models, const std::string& kind);
std::vector<TaeModel> tae_from_checkpoint(const Checkpoint& ckpt);

}  // namespace metaemb
