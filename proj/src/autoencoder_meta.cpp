#include "metaemb/autoencoder_meta.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "metaemb/errors.hpp"

namespace metaemb {

std::string to_string(AemeArchitecture a) { return a == AemeArchitecture::Coupled ? "coupled" : "decoupled"; }

std::vector<Index> daeme_code_widths(Index hidden, std::size_t n) {
  if (n == 0) throw ContractError("daeme needs at least one source");
  const auto count = static_cast<Index>(n);
  if (hidden < count) throw ContractError("hidden width smaller than the number of sources");
  std::vector<Index> widths(n, hidden / count);
  widths.front() += hidden % count;
  return widths;
}

Index AemeModel::hidden_dim() const {
  Index h = 0;
  for (const auto& e : encoders) h += e.out_dim();
  return h;
}

namespace {

// Column blocks of the concatenated input seen by each branch.
std::vector<std::pair<Index, Index>> branch_blocks(const AemeModel& model) {
  std::vector<std::pair<Index, Index>> blocks;
  if (model.architecture == AemeArchitecture::Coupled) {
    const Index k = std::accumulate(model.source_dims.begin(), model.source_dims.end(), Index{0});
    blocks.emplace_back(0, k);
  } else {
    Index offset = 0;
    for (auto d : model.source_dims) {
      blocks.emplace_back(offset, d);
      offset += d;
    }
  }
  return blocks;
}

void check_input(const AemeModel& model, const Matrix& x) {
  const Index k = std::accumulate(model.source_dims.begin(), model.source_dims.end(), Index{0});
  if (x.cols() != k) {
    throw ContractError("autoencoder input width " + std::to_string(x.cols()) + " != ensemble width " +
                        std::to_string(k));
  }
  if (model.encoders.size() != model.decoders.size() || model.encoders.empty()) {
    throw ContractError("autoencoder has mismatched encoder/decoder lists");
  }
}

}  // namespace

std::vector<Matrix> AemeModel::branch_codes(const Matrix& x) const {
  check_input(*this, x);
  const auto blocks = branch_blocks(*this);
  std::vector<Matrix> out;
  for (std::size_t b = 0; b < encoders.size(); ++b) {
    out.push_back(predict(encoders[b], x.middleCols(blocks[b].first, blocks[b].second)));
  }
  return out;
}

Matrix AemeModel::codes(const Matrix& x) const {
  const auto parts = branch_codes(x);
  Matrix out(x.rows(), hidden_dim());
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p;
    offset += p.cols();
  }
  return out;
}

Matrix AemeModel::reconstruct(const Matrix& x) const {
  const auto parts = branch_codes(x);
  const auto blocks = branch_blocks(*this);
  Matrix out(x.rows(), x.cols());
  for (std::size_t b = 0; b < parts.size(); ++b) {
    out.middleCols(blocks[b].first, blocks[b].second) = predict(decoders[b], parts[b]);
  }
  return out;
}

std::vector<Matrix> sample_aeme_masks(const AemeModel& model, Index rows, Rng& rng) {
  std::vector<Matrix> masks;
  if (model.dropout_p <= 0.0) return masks;
  for (const auto& e : model.encoders) masks.push_back(sample_dropout_mask(rows, e.out_dim(), model.dropout_p, rng));
  return masks;
}

AemeObjective aeme_objective(const AemeModel& model, const Matrix& x, const std::vector<Matrix>& masks) {
  check_input(model, x);
  const std::size_t n = model.branch_count();
  if (!masks.empty() && masks.size() != n) throw ContractError("one dropout mask per branch expected");
  const auto blocks = branch_blocks(model);
  const double m = static_cast<double>(x.rows());

  std::vector<Activations> enc_acts;
  std::vector<Matrix> code_grads;
  AemeObjective obj;
  for (std::size_t b = 0; b < n; ++b) {
    enc_acts.push_back(forward(model.encoders[b], x.middleCols(blocks[b].first, blocks[b].second), false, nullptr));
    code_grads.push_back(Matrix::Zero(x.rows(), model.encoders[b].out_dim()));
  }

  for (std::size_t b = 0; b < n; ++b) {
    Matrix h = enc_acts[b].output();
    if (!masks.empty()) h.array() *= masks[b].array();
    const Activations dec = forward(model.decoders[b], h, false, nullptr);
    const LossValue lv = recon_loss(model.loss, dec.output(), x.middleCols(blocks[b].first, blocks[b].second));
    obj.reconstruction += lv.value;
    Gradients g = backward(model.decoders[b], dec, lv.grad);
    Matrix gh = g.input;
    if (!masks.empty()) gh.array() *= masks[b].array();
    code_grads[b] += gh;
    obj.decoder_grads.push_back(std::move(g));
  }

  if (n > 1 && model.discrepancy_weight > 0.0) {
    Index width = 0;
    for (const auto& e : model.encoders) width = std::max(width, e.out_dim());
    const double pairs = static_cast<double>(n * (n - 1) / 2);
    const double coef = model.discrepancy_weight / pairs;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        Matrix diff = Matrix::Zero(x.rows(), width);
        const Matrix& ci = enc_acts[i].output();
        const Matrix& cj = enc_acts[j].output();
        diff.leftCols(ci.cols()) += ci;
        diff.leftCols(cj.cols()) -= cj;
        obj.discrepancy += coef * diff.squaredNorm() / m;
        code_grads[i] += (2.0 * coef / m) * diff.leftCols(ci.cols());
        code_grads[j] -= (2.0 * coef / m) * diff.leftCols(cj.cols());
      }
    }
  }

  for (std::size_t b = 0; b < n; ++b) obj.encoder_grads.push_back(backward(model.encoders[b], enc_acts[b], code_grads[b]));
  obj.value = obj.reconstruction + obj.discrepancy;
  return obj;
}

AemeModel init_aeme(AemeArchitecture arch, const std::vector<Index>& source_dims, ReconLossKind kind,
                    const TrainConfig& config, double discrepancy_weight) {
  config.validate();
  if (source_dims.empty()) throw ContractError("autoencoder needs at least one source");
  AemeModel model;
  model.architecture = arch;
  model.loss = kind;
  model.source_dims = source_dims;
  model.dropout_p = config.dropout_p;
  model.discrepancy_weight = discrepancy_weight;

  Rng rng(derive_seed(config.seed, "aeme/init"));
  const Index hidden = config.hidden_dim();
  auto add_branch = [&](Index in, Index code) {
    model.encoders.push_back(make_net({in, code}, {Activation::Tanh}, 0.0, config.init_mean, config.init_std, rng));
    model.decoders.push_back(
        make_net({code, in}, {Activation::Identity}, 0.0, config.init_mean, config.init_std, rng));
  };
  if (arch == AemeArchitecture::Coupled) {
    add_branch(std::accumulate(source_dims.begin(), source_dims.end(), Index{0}), hidden);
  } else {
    const auto widths = daeme_code_widths(hidden, source_dims.size());
    for (std::size_t i = 0; i < source_dims.size(); ++i) add_branch(source_dims[i], widths[i]);
  }
  return model;
}

namespace {

AemeResult train_aeme(const EmbeddingEnsemble& ensemble, AemeArchitecture arch, ReconLossKind kind,
                      const TrainConfig& config, double discrepancy_weight) {
  const auto normalized = normalize_l2(ensemble);
  const Matrix x = concat_rows(normalized);
  AemeModel model = init_aeme(arch, ensemble.dims(), kind, config, discrepancy_weight);

  const DataSplit split = split_indices(ensemble.word_count(), config.validation_fraction,
                                        derive_seed(config.seed, "aeme/split"));
  const double lr = config.learning_rate;
  auto step = [&](AemeModel& m, const IndexList& rows, Rng& rng) {
    const Matrix xb = gather_rows(x, rows);
    const auto masks = sample_aeme_masks(m, xb.rows(), rng);
    const AemeObjective obj = aeme_objective(m, xb, masks);
    if (!std::isfinite(obj.value)) return obj.value;
    for (std::size_t b = 0; b < m.branch_count(); ++b) {
      sgd_step(m.encoders[b], obj.encoder_grads[b], lr, "encoder" + std::to_string(b));
      sgd_step(m.decoders[b], obj.decoder_grads[b], lr, "decoder" + std::to_string(b));
    }
    return obj.value;
  };
  auto validate = [&](const AemeModel& m, const IndexList& rows) {
    return aeme_objective(m, gather_rows(x, rows), {}).value;
  };

  AemeResult result;
  result.history = fit<AemeModel>(model, split, config, derive_seed(config.seed, "aeme/shuffle"), step, validate);
  result.meta = aeme_meta(model, ensemble, config);
  result.model = std::move(model);
  return result;
}

}  // namespace

AemeResult train_caeme(const EmbeddingEnsemble& ensemble, ReconLossKind kind, const TrainConfig& config) {
  return train_aeme(ensemble, AemeArchitecture::Coupled, kind, config, 0.0);
}

AemeResult train_daeme(const EmbeddingEnsemble& ensemble, ReconLossKind kind, const TrainConfig& config,
                       double discrepancy_weight) {
  return train_aeme(ensemble, AemeArchitecture::Decoupled, kind, config, discrepancy_weight);
}

Matrix encode(const AemeModel& model, const EmbeddingEnsemble& ensemble, const std::vector<std::string>& words) {
  IndexList rows;
  rows.reserve(words.size());
  for (const auto& w : words) rows.push_back(ensemble.vocab().at(w));
  Matrix z = model.codes(gather_rows(concat_rows(normalize_l2(ensemble)), rows));
  normalize_rows_l2(z);
  return z;
}

MetaEmbedding aeme_meta(const AemeModel& model, const EmbeddingEnsemble& ensemble, const TrainConfig& config) {
  MetaEmbedding meta;
  meta.matrix = model.codes(concat_rows(normalize_l2(ensemble)));
  normalize_rows_l2(meta.matrix);
  meta.vocab = ensemble.vocab_ptr();
  meta.flagged = ensemble.flagged_rows();
  const bool coupled = model.architecture == AemeArchitecture::Coupled;
  std::ostringstream notes;
  if (!coupled) notes << "discrepancy=pairwise-sqdist,w=" << model.discrepancy_weight;
  meta.method = {coupled ? "caeme" : "daeme", to_string(model.loss), config_digest(config), notes.str()};
  return meta;
}

double mean_branch_code_distance(const AemeModel& model, const Matrix& x) {
  const auto parts = model.branch_codes(x);
  const std::size_t n = parts.size();
  if (n < 2 || x.rows() == 0) return 0.0;
  Index width = 0;
  for (const auto& p : parts) width = std::max(width, p.cols());
  std::vector<Matrix> padded;
  for (const auto& p : parts) {
    Matrix q = Matrix::Zero(p.rows(), width);
    q.leftCols(p.cols()) = p;
    normalize_rows_l2(q);
    padded.push_back(std::move(q));
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      total += (padded[i] - padded[j]).rowwise().norm().sum();
      count += static_cast<std::size_t>(x.rows());
    }
  }
  return total / static_cast<double>(count);
}

Checkpoint to_checkpoint(const AemeModel& model) {
  Checkpoint ckpt;
  ckpt.kind = model.architecture == AemeArchitecture::Coupled ? "caeme" : "daeme";
  std::ostringstream dims;
  for (std::size_t i = 0; i < model.source_dims.size(); ++i) dims << (i ? "," : "") << model.source_dims[i];
  std::ostringstream p, w;
  p.precision(17);
  w.precision(17);
  p << model.dropout_p;
  w << model.discrepancy_weight;
  ckpt.metadata = {{"loss", to_string(model.loss)},
                   {"source_dims", dims.str()},
                   {"dropout", p.str()},
                   {"discrepancy_weight", w.str()}};
  for (std::size_t b = 0; b < model.branch_count(); ++b) {
    ckpt.nets.emplace_back("encoder" + std::to_string(b), model.encoders[b]);
    ckpt.nets.emplace_back("decoder" + std::to_string(b), model.decoders[b]);
  }
  return ckpt;
}

namespace {

const std::string& require_meta(const Checkpoint& ckpt, const std::string& key) {
  if (const auto* v = ckpt.find_metadata(key)) return *v;
  throw IoError("checkpoint missing metadata '" + key + "'");
}

}  // namespace

AemeModel aeme_from_checkpoint(const Checkpoint& ckpt) {
  AemeModel model;
  if (ckpt.kind == "caeme") {
    model.architecture = AemeArchitecture::Coupled;
  } else if (ckpt.kind == "daeme") {
    model.architecture = AemeArchitecture::Decoupled;
  } else {
    throw IoError("checkpoint kind '" + ckpt.kind + "' is not an autoencoder");
  }
  model.loss = parse_recon_loss(require_meta(ckpt, "loss"));
  std::istringstream dims(require_meta(ckpt, "source_dims"));
  for (std::string tok; std::getline(dims, tok, ',');) model.source_dims.push_back(std::stoll(tok));
  model.dropout_p = std::stod(require_meta(ckpt, "dropout"));
  model.discrepancy_weight = std::stod(require_meta(ckpt, "discrepancy_weight"));
  const std::size_t branches = model.architecture == AemeArchitecture::Coupled ? 1 : model.source_dims.size();
  for (std::size_t b = 0; b < branches; ++b) {
    model.encoders.push_back(ckpt.net("encoder" + std::to_string(b)));
    model.decoders.push_back(ckpt.net("decoder" + std::to_string(b)));
  }
  return model;
}

}  // namespace metaemb
