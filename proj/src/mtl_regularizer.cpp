#include "metaemb/mtl_regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "metaemb/errors.hpp"

namespace metaemb {

namespace {

constexpr double kLogGuard = 1e-12;

}  // namespace

std::string to_string(SimLossKind k) {
  switch (k) {
    case SimLossKind::NLL: return "nll";
    case SimLossKind::OLS: return "ols";
    case SimLossKind::Brier: return "brier";
  }
  return "brier";
}

SimLossKind parse_sim_loss(std::string_view s) {
  if (s == "nll" || s == "ce") return SimLossKind::NLL;
  if (s == "ols") return SimLossKind::OLS;
  if (s == "brier") return SimLossKind::Brier;
  throw ConfigError("unknown similarity loss '" + std::string(s) + "' (expected nll, ols or brier)");
}

Matrix MtlModel::encode(const Matrix& x) const { return predict(shared, x); }

Matrix MtlModel::tower_output(const Matrix& x) const { return predict(tower, encode(x)); }

MtlModel init_mtl(Index input_dim, const MtlKinds& kinds, const TrainConfig& config, const MtlShape& shape) {
  config.validate();
  MtlModel model;
  model.kinds = kinds;
  model.lambda = config.lambda;
  model.dropout_p = config.dropout_p;
  Rng rng(derive_seed(config.seed, "mtl/init"));
  const double mu = config.init_mean;
  const double sd = config.init_std;
  const Index hidden = shape.hidden > 0 ? shape.hidden : config.hidden_dim();
  model.shared = make_net({input_dim, hidden}, {Activation::Tanh}, 0.0, mu, sd, rng);
  model.decoder = make_net({hidden, input_dim}, {Activation::Identity}, 0.0, mu, sd, rng);
  model.tower = make_net({hidden, shape.tower_hidden, shape.tower_out}, {Activation::Tanh, Activation::Tanh},
                         0.0, mu, sd, rng);
  return model;
}

double similarity_forward(const MtlModel& model, const RowVector& x1, const RowVector& x2) {
  Matrix both(2, x1.size());
  both.row(0) = x1;
  both.row(1) = x2;
  const Matrix h = model.tower_output(both);
  return std::exp(-pair_distance(model.kinds.distance, h.row(0), h.row(1)));
}

MtlMasks sample_mtl_masks(const MtlModel& model, Index pairs, Rng& rng) {
  MtlMasks masks;
  if (model.dropout_p <= 0.0) return masks;
  masks.first = sample_dropout_mask(pairs, model.shared.out_dim(), model.dropout_p, rng);
  masks.second = sample_dropout_mask(pairs, model.shared.out_dim(), model.dropout_p, rng);
  return masks;
}

MtlObjective mtl_objective(const MtlModel& model, const PairBatch& batch, const MtlMasks* masks) {
  const Index m = batch.size();
  if (m < 1) throw ContractError("mtl batch must contain at least one pair");
  if (batch.x2.rows() != m || batch.x1.cols() != batch.x2.cols()) throw ContractError("mtl batch shape mismatch");
  if (batch.y.size() != m) throw ContractError("mtl batch needs one target per pair");
  if (!batch.supervised.empty() && batch.supervised.size() != static_cast<std::size_t>(m)) {
    throw ContractError("mtl batch supervision flags size mismatch");
  }
  const bool dropout = masks && masks->first.size() > 0;

  // Shared layer for both members of each pair.
  const Activations c1 = forward(model.shared, batch.x1, false, nullptr);
  const Activations c2 = forward(model.shared, batch.x2, false, nullptr);
  Matrix h1a = c1.output();
  Matrix h1b = c2.output();
  if (dropout) {
    h1a.array() *= masks->first.array();
    h1b.array() *= masks->second.array();
  }

  MtlObjective obj;

  // Reconstruction of all 2M words.
  Matrix stacked_h(2 * m, h1a.cols());
  stacked_h << h1a, h1b;
  Matrix stacked_x(2 * m, batch.x1.cols());
  stacked_x << batch.x1, batch.x2;
  const Activations dec = forward(model.decoder, stacked_h, false, nullptr);
  LossValue recon = recon_loss_mean(model.kinds.recon, dec.output(), stacked_x);
  obj.reconstruction = model.lambda * recon.value;
  recon.grad *= model.lambda;
  obj.decoder = backward(model.decoder, dec, recon.grad);
  Matrix grad_h1a = obj.decoder.input.topRows(m);
  Matrix grad_h1b = obj.decoder.input.bottomRows(m);

  // Siamese similarity head.
  const Activations t1 = forward(model.tower, h1a, false, nullptr);
  const Activations t2 = forward(model.tower, h1b, false, nullptr);
  Matrix grad_t1 = Matrix::Zero(m, model.tower.out_dim());
  Matrix grad_t2 = Matrix::Zero(m, model.tower.out_dim());
  Index supervised = 0;
  for (Index i = 0; i < m; ++i) supervised += batch.is_supervised(i) ? 1 : 0;
  if (supervised > 0) {
    const double inv = 1.0 / static_cast<double>(supervised);
    for (Index i = 0; i < m; ++i) {
      if (!batch.is_supervised(i)) continue;
      const DistanceValue d = pair_distance_grad(model.kinds.distance, t1.output().row(i), t2.output().row(i));
      if (d.clamped) ++obj.clamped;
      const double y = batch.y(i);
      double loss = 0.0;
      double dloss_dd = 0.0;
      switch (model.kinds.sim) {
        case SimLossKind::NLL: {
          const double yhat = std::exp(-d.value);
          loss = -(y * std::log(yhat + kLogGuard) + (1.0 - y) * std::log(1.0 - yhat + kLogGuard));
          const double dloss_dyhat = -(y / (yhat + kLogGuard) - (1.0 - y) / (1.0 - yhat + kLogGuard));
          dloss_dd = dloss_dyhat * -yhat;
          break;
        }
        case SimLossKind::Brier: {
          const double yhat = std::exp(-d.value);
          loss = (y - yhat) * (y - yhat);
          dloss_dd = 2.0 * (yhat - y) * -yhat;
          break;
        }
        case SimLossKind::OLS: {
          const double yhat = 1.0 - d.value;
          loss = (y - yhat) * (y - yhat);
          dloss_dd = 2.0 * (yhat - y) * -1.0;
          break;
        }
      }
      obj.supervised += inv * loss;
      grad_t1.row(i) = inv * dloss_dd * d.grad_a;
      grad_t2.row(i) = inv * dloss_dd * d.grad_b;
    }
  }
  obj.tower = backward(model.tower, t1, grad_t1);
  Gradients tower_b = backward(model.tower, t2, grad_t2);
  grad_h1a += obj.tower.input;
  grad_h1b += tower_b.input;
  obj.tower += tower_b;

  if (dropout) {
    grad_h1a.array() *= masks->first.array();
    grad_h1b.array() *= masks->second.array();
  }
  obj.shared = backward(model.shared, c1, grad_h1a);
  obj.shared += backward(model.shared, c2, grad_h1b);

  obj.value = obj.reconstruction + obj.supervised;
  return obj;
}

double mtl_loss(const MtlModel& model, const PairBatch& batch, SimLossKind sim, ReconLossKind recon) {
  MtlModel m = model;
  m.kinds.sim = sim;
  m.kinds.recon = recon;
  return mtl_objective(m, batch, nullptr).value;
}

double mtl_reconstruction_loss(const MtlModel& model, const Matrix& x) {
  return recon_loss_mean(model.kinds.recon, predict(model.decoder, model.encode(x)), x).value;
}

namespace {

struct ResolvedPair {
  Index w1;
  Index w2;
  double y;
  bool supervised;
};

std::pair<std::string, std::string> unordered(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

PairBatch make_pair_batch(const Matrix& x, const std::vector<ResolvedPair>& pairs, const IndexList& rows) {
  PairBatch batch;
  const auto m = static_cast<Index>(rows.size());
  batch.x1.resize(m, x.cols());
  batch.x2.resize(m, x.cols());
  batch.y.resize(m);
  batch.supervised.resize(rows.size());
  for (Index i = 0; i < m; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
    batch.x1.row(i) = x.row(p.w1);
    batch.x2.row(i) = x.row(p.w2);
    batch.y(i) = p.y;
    batch.supervised[static_cast<std::size_t>(i)] = p.supervised;
  }
  return batch;
}

}  // namespace

MtlResult train_mtl(const std::vector<WordPairDataset>& train_sets, const WordPairDataset& held_out,
                    const EmbeddingEnsemble& ensemble, const MtlKinds& kinds, const TrainConfig& config,
                    const MtlShape& shape) {
  config.validate();
  const Matrix x = concat_rows(normalize_l2(ensemble));
  const auto& vocab = ensemble.vocab();

  std::set<std::pair<std::string, std::string>> held_keys;
  for (const auto& p : held_out.pairs) held_keys.insert(unordered(p.w1, p.w2));

  MtlResult result;
  std::vector<ResolvedPair> supervised;
  for (const auto& ds : train_sets) {
    if (ds.name == held_out.name) {
      throw ProtocolError("held-out dataset '" + held_out.name + "' is also listed for training");
    }
    for (const auto& p : ds.pairs) {
      if (held_keys.count(unordered(p.w1, p.w2))) {
        throw ProtocolError("training pair (" + p.w1 + ", " + p.w2 + ") from '" + ds.name +
                            "' also occurs in held-out dataset '" + held_out.name + "'");
      }
      const auto a = vocab.lookup(p.w1);
      const auto b = vocab.lookup(p.w2);
      if (!a || !b) {
        ++result.dropped_pairs;
        continue;
      }
      supervised.push_back({*a, *b, p.y, true});
    }
  }
  if (supervised.empty()) throw ProtocolError("no resolvable training pairs");

  const DataSplit sup_split = split_indices(static_cast<Index>(supervised.size()), config.validation_fraction,
                                            derive_seed(config.seed, "mtl/split"));
  std::vector<ResolvedPair> pairs = supervised;
  for (const auto& p : held_out.pairs) {
    const auto a = vocab.lookup(p.w1);
    const auto b = vocab.lookup(p.w2);
    if (a && b) pairs.push_back({*a, *b, 0.0, false});
  }
  result.train_pairs = sup_split.train.size();
  result.heldout_pairs = pairs.size() - supervised.size();

  DataSplit split;
  split.validation = sup_split.validation;
  split.train = sup_split.train;
  for (std::size_t i = supervised.size(); i < pairs.size(); ++i) split.train.push_back(static_cast<Index>(i));

  MtlModel model = init_mtl(x.cols(), kinds, config, shape);
  const double lr = config.learning_rate;
  auto step = [&](MtlModel& m, const IndexList& rows, Rng& rng) {
    const PairBatch batch = make_pair_batch(x, pairs, rows);
    const MtlMasks masks = sample_mtl_masks(m, batch.size(), rng);
    const MtlObjective obj = mtl_objective(m, batch, &masks);
    if (!std::isfinite(obj.value)) return obj.value;
    sgd_step(m.shared, obj.shared, lr, "shared");
    sgd_step(m.decoder, obj.decoder, lr, "decoder");
    sgd_step(m.tower, obj.tower, lr, "tower");
    return obj.value;
  };
  auto validate = [&](const MtlModel& m, const IndexList& rows) {
    return mtl_objective(m, make_pair_batch(x, pairs, rows), nullptr).value;
  };
  result.history = fit<MtlModel>(model, split, config, derive_seed(config.seed, "mtl/shuffle"), step, validate);
  result.meta = mtl_meta(model, ensemble, config);
  result.model = std::move(model);
  return result;
}

MetaEmbedding mtl_meta(const MtlModel& model, const EmbeddingEnsemble& ensemble, const TrainConfig& config) {
  MetaEmbedding meta;
  meta.matrix = model.encode(concat_rows(normalize_l2(ensemble)));
  normalize_rows_l2(meta.matrix);
  meta.vocab = ensemble.vocab_ptr();
  meta.flagged = ensemble.flagged_rows();
  std::ostringstream notes;
  notes << "distance=" << to_string(model.kinds.distance) << ",lambda=" << model.lambda;
  if (model.kinds.sim == SimLossKind::OLS) notes << ",ols=linear-readout";
  meta.method = {"mtl", to_string(model.kinds.recon) + "-" + to_string(model.kinds.sim), config_digest(config),
                 notes.str()};
  return meta;
}

Checkpoint to_checkpoint(const MtlModel& model) {
  Checkpoint ckpt;
  ckpt.kind = "mtl";
  std::ostringstream lambda, dropout;
  lambda.precision(17);
  dropout.precision(17);
  lambda << model.lambda;
  dropout << model.dropout_p;
  ckpt.metadata = {{"recon", to_string(model.kinds.recon)},
                   {"sim", to_string(model.kinds.sim)},
                   {"distance", to_string(model.kinds.distance)},
                   {"lambda", lambda.str()},
                   {"dropout", dropout.str()}};
  ckpt.nets = {{"shared", model.shared}, {"decoder", model.decoder}, {"tower", model.tower}};
  return ckpt;
}

MtlModel mtl_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "mtl") throw IoError("checkpoint kind '" + ckpt.kind + "' is not an mtl model");
  auto need = [&](const std::string& key) -> const std::string& {
    if (const auto* v = ckpt.find_metadata(key)) return *v;
    throw IoError("checkpoint missing metadata '" + key + "'");
  };
  MtlModel model;
  model.kinds.recon = parse_recon_loss(need("recon"));
  model.kinds.sim = parse_sim_loss(need("sim"));
  model.kinds.distance = parse_distance_kind(need("distance"));
  model.lambda = std::stod(need("lambda"));
  model.dropout_p = std::stod(need("dropout"));
  model.shared = ckpt.net("shared");
  model.decoder = ckpt.net("decoder");
  model.tower = ckpt.net("tower");
  return model;
}

}  // namespace metaemb
