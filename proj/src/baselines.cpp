#include "metaemb/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "metaemb/errors.hpp"

namespace metaemb {

MetaEmbedding meta_conc(const EmbeddingEnsemble& ensemble) {
  const auto normalized = normalize_l2(ensemble);
  MetaEmbedding meta;
  meta.matrix = concat_rows(normalized);
  meta.vocab = ensemble.vocab_ptr();
  meta.method = {"conc", "", "", ""};
  meta.flagged = ensemble.flagged_rows();
  return meta;
}

MetaEmbedding meta_avg(const EmbeddingEnsemble& ensemble) {
  const auto normalized = normalize_l2(ensemble);
  const auto dims = ensemble.dims();
  const Index d_max = *std::max_element(dims.begin(), dims.end());
  Matrix sum = Matrix::Zero(ensemble.word_count(), d_max);
  for (const auto& s : normalized.sources()) sum.leftCols(s.dim()) += s.rows;
  MetaEmbedding meta;
  meta.matrix = sum / static_cast<double>(ensemble.source_count());
  meta.vocab = ensemble.vocab_ptr();
  meta.method = {"avg", "", "", "zero-pad"};
  meta.flagged = ensemble.flagged_rows();
  return meta;
}

Matrix TruncatedSvd::scores() const { return u * singular_values.asDiagonal(); }

Matrix TruncatedSvd::reconstruct() const { return scores() * v.transpose(); }

TruncatedSvd truncated_svd(const Matrix& x, Index k) {
  const Index max_rank = std::min(x.rows(), x.cols());
  if (k < 1 || k > max_rank) {
    throw ContractError("svd rank " + std::to_string(k) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  // Column-major copy: BDCSVD works on column-major storage internally.
  const Eigen::MatrixXd xc = x;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd out;
  out.u = svd.matrixU().leftCols(k);
  out.v = svd.matrixV().leftCols(k);
  out.singular_values = svd.singularValues().head(k);
  for (Index j = 0; j < k; ++j) {
    const double scale = out.v.col(j).cwiseAbs().maxCoeff();
    for (Index i = 0; i < out.v.rows(); ++i) {
      const double e = out.v(i, j);
      if (std::abs(e) > 1e-12 * scale) {
        if (e < 0.0) {
          out.v.col(j) *= -1.0;
          out.u.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

MetaEmbedding meta_svd(const EmbeddingEnsemble& ensemble, Index k_out) {
  const Matrix x = concat_rows(normalize_l2(ensemble));
  MetaEmbedding meta;
  meta.matrix = truncated_svd(x, k_out).scores();
  meta.vocab = ensemble.vocab_ptr();
  meta.method = {"svd", "", "", "k=" + std::to_string(k_out) + ",normalized-concat"};
  meta.flagged = ensemble.flagged_rows();
  return meta;
}

OneToNLoss one_to_n_loss(const OneToNModel& model, const EmbeddingEnsemble& normalized, const IndexList& rows) {
  OneToNLoss out;
  const Matrix z = gather_rows(model.meta, rows);
  out.meta_grad = Matrix::Zero(z.rows(), z.cols());
  for (std::size_t i = 0; i < normalized.source_count(); ++i) {
    const Matrix& p = model.projections[i];
    const Matrix residual = z * p - gather_rows(normalized.source(i).rows, rows);
    out.value += residual.squaredNorm();
    out.meta_grad += 2.0 * residual * p.transpose();
    out.projection_grads.push_back(2.0 * z.transpose() * residual);
  }
  return out;
}

OneToNResult meta_1ton(const EmbeddingEnsemble& ensemble, Index k_out, const TrainConfig& config,
                       const OneToNOptions& options) {
  config.validate();
  if (k_out < 1) throw ContractError("1TON meta dimension must be positive");
  const auto normalized = normalize_l2(ensemble);
  const Index n = ensemble.word_count();

  Rng init_rng(derive_seed(config.seed, "1ton/init"));
  OneToNModel model;
  model.meta = init_normal(n, k_out, config.init_mean, config.init_std, init_rng);
  for (const auto& s : normalized.sources()) {
    if (options.identity_init) {
      model.projections.push_back(Matrix::Identity(k_out, s.dim()));
    } else {
      model.projections.push_back(
          init_normal(k_out, s.dim(), 0.0, config.init_std / std::sqrt(static_cast<double>(k_out)), init_rng));
    }
  }

  DataSplit split;
  split.train.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) split.train[static_cast<std::size_t>(i)] = i;

  const double lr = config.learning_rate;
  auto step = [&](OneToNModel& m, const IndexList& rows, Rng&) {
    const auto loss = one_to_n_loss(m, normalized, rows);
    if (!std::isfinite(loss.value) || !loss.meta_grad.allFinite()) {
      throw TrainingError("1TON diverged (non-finite loss)");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      m.meta.row(rows[r]) -= lr * loss.meta_grad.row(static_cast<Index>(r));
    }
    // Each Z row sees only its own word; the shared projections see the whole
    // batch, so their gradient is averaged to keep the step size batch-independent.
    if (!options.freeze_projections) {
      const double scale = lr / static_cast<double>(rows.size());
      for (std::size_t i = 0; i < m.projections.size(); ++i) m.projections[i] -= scale * loss.projection_grads[i];
    }
    return loss.value / static_cast<double>(rows.size());
  };
  auto validate = [&](const OneToNModel& m, const IndexList& rows) {
    return one_to_n_loss(m, normalized, rows).value / static_cast<double>(rows.size());
  };

  TrainHistory history = fit<OneToNModel>(model, split, config, derive_seed(config.seed, "1ton/shuffle"), step, validate);

  OneToNResult result;
  result.meta.matrix = model.meta;
  result.meta.vocab = ensemble.vocab_ptr();
  result.meta.method = {"1ton", "l2", config_digest(config), "k=" + std::to_string(k_out)};
  result.meta.flagged = ensemble.flagged_rows();
  result.model = std::move(model);
  result.history = std::move(history);
  return result;
}

}  // namespace metaemb
