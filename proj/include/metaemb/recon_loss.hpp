#pragma once

#include <string>
#include <string_view>

#include "metaemb/tensor_core.hpp"

namespace metaemb {

/// Reconstruction losses for autoencoded meta-embeddings.
enum class ReconLossKind { MSE, MAE, KL, SCP };

std::string to_string(ReconLossKind k);
ReconLossKind parse_recon_loss(std::string_view s);

/// Loss and gradient w.r.t. `predicted` (both M x k).
///
///   MSE  (1/M) sum_i sum_j (X_ij - Xhat_ij)^2
///   MAE  (1/M) sum_i sum_j |X_ij - Xhat_ij|      (subgradient 0 at a tie)
///   KL   (1/M) sum_i sum_j p_ij (log p_ij - log phat_ij), p = softmax(X_i),
///        phat = softmax(Xhat_i)
///   SCP  sum_i (1 - cos(Xhat_i, X_i))^2           (summed over the batch)
///
/// SCP throws LossError if any row of either matrix is zero.
LossValue recon_loss(ReconLossKind kind, const Matrix& predicted, const Matrix& target);

/// Same losses expressed as a mean over rows for every kind. Identical to
/// recon_loss() except for SCP, which is divided by M.
LossValue recon_loss_mean(ReconLossKind kind, const Matrix& predicted, const Matrix& target);

}  // namespace metaemb
