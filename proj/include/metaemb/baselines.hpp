#pragma once

#include <vector>

#include "metaemb/meta_embedding.hpp"

namespace metaemb {

/// Concatenation of the l2-normalized sources.
MetaEmbedding meta_conc(const EmbeddingEnsemble& ensemble);

/// Mean of the l2-normalized sources, each zero-padded to the widest source.
MetaEmbedding meta_avg(const EmbeddingEnsemble& ensemble);

/// Top-k singular triples of a matrix, singular values non-increasing. Each
/// right-singular vector is oriented so its first nonzero entry is positive.
struct TruncatedSvd {
  Matrix u;                // rows x k, orthonormal columns
  Vector singular_values;  // k
  Matrix v;                // cols x k, orthonormal columns

  Matrix scores() const;       // U_k Sigma_k
  Matrix reconstruct() const;  // U_k Sigma_k V_k^T
};

TruncatedSvd truncated_svd(const Matrix& x, Index k);

/// Rows of U_k Sigma_k for the normalized concatenation.
MetaEmbedding meta_svd(const EmbeddingEnsemble& ensemble, Index k_out);

/// 1TON: free per-word meta vectors Z plus one linear map P_i per source,
/// fitted so that Z P_i approximates source i.
struct OneToNModel {
  Matrix meta;                      // |V| x k_out
  std::vector<Matrix> projections;  // k_out x d_i
};

struct OneToNOptions {
  /// Start every P_i at the rectangular identity instead of random values.
  bool identity_init = false;
  /// Keep the projections at their initial values and fit Z only.
  bool freeze_projections = false;
};

struct OneToNResult {
  MetaEmbedding meta;
  OneToNModel model;
  TrainHistory history;
};

/// Sum over the given words of sum_i ||Z_w P_i - X_{w,i}||^2, with gradients
/// w.r.t. those rows of Z and every P_i.
struct OneToNLoss {
  double value = 0.0;
  Matrix meta_grad;  // rows.size() x k_out
  std::vector<Matrix> projection_grads;
};
OneToNLoss one_to_n_loss(const OneToNModel& model, const EmbeddingEnsemble& normalized, const IndexList& rows);

/// Trains on every word (no validation split: the meta vectors are free
/// parameters, so held-out words would never be fitted). Epoch losses are
/// per-word means over the full vocabulary.
OneToNResult meta_1ton(const EmbeddingEnsemble& ensemble, Index k_out, const TrainConfig& config,
                       const OneToNOptions& options = {});

}  // namespace metaemb
