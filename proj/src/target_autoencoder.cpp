#include "metaemb/target_autoencoder.hpp"

#include <future>
#include <numeric>
#include <sstream>

#include "metaemb/errors.hpp"

namespace metaemb {

namespace {

Index block_offset(const std::vector<Index>& dims, std::size_t i) {
  return std::accumulate(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(i), Index{0});
}

}  // namespace

Matrix tae_inputs(const Matrix& x, const std::vector<Index>& source_dims, std::size_t target_index) {
  const Index k = std::accumulate(source_dims.begin(), source_dims.end(), Index{0});
  if (x.cols() != k) throw ContractError("tae_inputs: matrix width does not match source dims");
  Matrix out(x.rows(), k - source_dims.at(target_index));
  Index dst = 0;
  for (std::size_t i = 0; i < source_dims.size(); ++i) {
    if (i == target_index) continue;
    out.middleCols(dst, source_dims[i]) = x.middleCols(block_offset(source_dims, i), source_dims[i]);
    dst += source_dims[i];
  }
  return out;
}

Matrix tae_target(const Matrix& x, const std::vector<Index>& source_dims, std::size_t target_index) {
  return x.middleCols(block_offset(source_dims, target_index), source_dims.at(target_index));
}

Matrix TaeModel::hidden(const Matrix& x) const {
  const Activations acts = forward(net, tae_inputs(x, source_dims, target_index), false, nullptr);
  return acts.outputs[1];
}

Matrix TaeModel::predict_target(const Matrix& x) const {
  return predict(net, tae_inputs(x, source_dims, target_index));
}

TaeResult train_tae(const EmbeddingEnsemble& ensemble, std::size_t target_index, ReconLossKind kind,
                    const TrainConfig& config) {
  config.validate();
  if (ensemble.source_count() < 2) throw ContractError("target autoencoder needs at least 2 sources");
  if (target_index >= ensemble.source_count()) {
    throw ContractError("target index " + std::to_string(target_index) + " out of range");
  }
  const Matrix x = concat_rows(normalize_l2(ensemble));
  const auto dims = ensemble.dims();
  const Matrix inputs = tae_inputs(x, dims, target_index);
  const Matrix targets = tae_target(x, dims, target_index);

  TaeModel model;
  model.target_index = target_index;
  model.loss = kind;
  model.source_dims = dims;
  const Index d_t = dims[target_index];
  Rng init_rng(derive_seed(config.seed, "tae/init"));
  model.net = make_net({inputs.cols(), d_t, d_t}, {Activation::Tanh, Activation::Identity}, config.dropout_p,
                       config.init_mean, config.init_std, init_rng);

  const DataSplit split =
      split_indices(ensemble.word_count(), config.validation_fraction, derive_seed(config.seed, "tae/split"));
  const double lr = config.learning_rate;
  auto step = [&](TaeModel& m, const IndexList& rows, Rng& rng) {
    const Activations acts = forward(m.net, gather_rows(inputs, rows), true, &rng);
    const LossValue lv = recon_loss(m.loss, acts.output(), gather_rows(targets, rows));
    if (!std::isfinite(lv.value)) return lv.value;
    sgd_step(m.net, backward(m.net, acts, lv.grad), lr, "tae");
    return lv.value;
  };
  auto validate = [&](const TaeModel& m, const IndexList& rows) {
    return recon_loss(m.loss, predict(m.net, gather_rows(inputs, rows)), gather_rows(targets, rows)).value;
  };

  TaeResult result;
  result.history = fit<TaeModel>(model, split, config, derive_seed(config.seed, "tae/shuffle"), step, validate);
  result.model = std::move(model);
  return result;
}

MetaEmbedding tae_meta(const TaeModel& model, const EmbeddingEnsemble& ensemble) {
  const Matrix x = concat_rows(normalize_l2(ensemble));
  Matrix code = model.hidden(x);
  Matrix target = tae_target(x, model.source_dims, model.target_index);
  normalize_rows_l2(code);
  normalize_rows_l2(target);
  MetaEmbedding meta;
  meta.matrix.resize(x.rows(), code.cols() + target.cols());
  meta.matrix << code, target;
  normalize_rows_l2(meta.matrix);
  meta.vocab = ensemble.vocab_ptr();
  meta.flagged = ensemble.flagged_rows();
  meta.method = {"tae", to_string(model.loss), "",
                 "target=" + std::to_string(model.target_index) + ",blockwise-normalized"};
  return meta;
}

MetaEmbedding mte_combine(const std::vector<TaeModel>& models, const EmbeddingEnsemble& ensemble,
                          const TrainConfig& config) {
  if (models.empty()) throw ContractError("mte needs at least one model");
  const Matrix x = concat_rows(normalize_l2(ensemble));
  Matrix sum = models.front().hidden(x);
  for (std::size_t i = 1; i < models.size(); ++i) sum += models[i].hidden(x);
  MetaEmbedding meta;
  meta.matrix = sum / static_cast<double>(models.size());
  normalize_rows_l2(meta.matrix);
  meta.vocab = ensemble.vocab_ptr();
  meta.flagged = ensemble.flagged_rows();
  meta.method = {"mte", to_string(models.front().loss), config_digest(config), "leave-one-out"};
  return meta;
}

MteResult mte_meta(const EmbeddingEnsemble& ensemble, ReconLossKind kind, const TrainConfig& config, unsigned jobs) {
  const auto dims = ensemble.dims();
  for (auto d : dims) {
    if (d != dims.front()) {
      throw ContractError("mte requires equal source dims; pad or project the sources first");
    }
  }
  if (ensemble.source_count() < 2) throw ContractError("mte needs at least 2 sources");
  const std::size_t n = ensemble.source_count();
  std::vector<TaeResult> results(n);
  auto run = [&](std::size_t t) {
    TrainConfig branch = config;
    branch.seed = config.seed + t;
    return train_tae(ensemble, t, kind, branch);
  };
  if (jobs <= 1) {
    for (std::size_t t = 0; t < n; ++t) results[t] = run(t);
  } else {
    for (std::size_t start = 0; start < n; start += jobs) {
      std::vector<std::future<TaeResult>> pending;
      for (std::size_t t = start; t < std::min(n, start + jobs); ++t) pending.push_back(std::async(std::launch::async, run, t));
      for (std::size_t i = 0; i < pending.size(); ++i) results[start + i] = pending[i].get();
    }
  }
  MteResult out;
  for (auto& r : results) {
    out.models.push_back(std::move(r.model));
    out.histories.push_back(std::move(r.history));
  }
  out.meta = mte_combine(out.models, ensemble, config);
  return out;
}

Checkpoint to_checkpoint(const std::vector<TaeModel>& models, const std::string& kind) {
  if (models.empty()) throw ContractError("no target autoencoders to save");
  Checkpoint ckpt;
  ckpt.kind = kind;
  std::ostringstream dims;
  for (std::size_t i = 0; i < models.front().source_dims.size(); ++i) {
    dims << (i ? "," : "") << models.front().source_dims[i];
  }
  ckpt.metadata = {{"loss", to_string(models.front().loss)}, {"source_dims", dims.str()},
                   {"models", std::to_string(models.size())}};
  for (std::size_t i = 0; i < models.size(); ++i) {
    ckpt.metadata.emplace_back("target" + std::to_string(i), std::to_string(models[i].target_index));
    ckpt.nets.emplace_back("tae" + std::to_string(i), models[i].net);
  }
  return ckpt;
}

std::vector<TaeModel> tae_from_checkpoint(const Checkpoint& ckpt) {
  auto need = [&](const std::string& key) -> const std::string& {
    if (const auto* v = ckpt.find_metadata(key)) return *v;
    throw IoError("checkpoint missing metadata '" + key + "'");
  };
  std::vector<Index> dims;
  std::istringstream ds(need("source_dims"));
  for (std::string tok; std::getline(ds, tok, ',');) dims.push_back(std::stoll(tok));
  const auto loss = parse_recon_loss(need("loss"));
  const auto count = std::stoul(need("models"));
  std::vector<TaeModel> models;
  for (std::size_t i = 0; i < count; ++i) {
    TaeModel m;
    m.target_index = std::stoul(need("target" + std::to_string(i)));
    m.loss = loss;
    m.source_dims = dims;
    m.net = ckpt.net("tae" + std::to_string(i));
    models.push_back(std::move(m));
  }
  return models;
}

}  // namespace metaemb
