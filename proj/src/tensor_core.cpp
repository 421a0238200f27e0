#include "metaemb/tensor_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metaemb/errors.hpp"

namespace metaemb {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::SoftmaxRows: return "softmax-rows";
  }
  return "identity";
}

Activation parse_activation(std::string_view s) {
  if (s == "identity") return Activation::Identity;
  if (s == "tanh") return Activation::Tanh;
  if (s == "softmax-rows") return Activation::SoftmaxRows;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

Index FeedForwardNet::in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
Index FeedForwardNet::out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

std::size_t FeedForwardNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void FeedForwardNet::validate() const {
  if (layers.empty()) throw ContractError("network has no layers");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ContractError("dropout probability must be in [0, 1)");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.out_dim()) {
      throw ContractError("layer " + std::to_string(i) + ": bias width does not match weight columns");
    }
    if (i + 1 < layers.size() && l.out_dim() != layers[i + 1].in_dim()) {
      throw ContractError("layer " + std::to_string(i) + " output dim " + std::to_string(l.out_dim()) +
                          " does not match layer " + std::to_string(i + 1) + " input dim " +
                          std::to_string(layers[i + 1].in_dim()));
    }
  }
}

bool FeedForwardNet::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

void TrainConfig::validate() const {
  for (auto h : hidden_dims) {
    if (h <= 0) throw ConfigError("hidden dims must be positive");
  }
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(init_std >= 0.0)) throw ConfigError("init_std must be non-negative");
  if (early_stop_patience < 0) throw ConfigError("early_stop_patience must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must be in [0, 1)");
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
}

Matrix init_normal(Index rows, Index cols, double mean, double std, Rng& rng) {
  if (!(std >= 0.0)) throw ContractError("init_normal: std must be non-negative");
  Matrix m(rows, cols);
  if (std == 0.0) {
    m.setConstant(mean);
    return m;
  }
  std::normal_distribution<double> dist(mean, std);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix init_normal(Index rows, Index cols, double mean, double std, std::uint64_t seed) {
  Rng rng(seed);
  return init_normal(rows, cols, mean, std, rng);
}

FeedForwardNet make_net(const std::vector<Index>& dims, const std::vector<Activation>& activations,
                        double dropout_p, double init_mean, double init_std, Rng& rng) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw ContractError("make_net: need one activation per layer");
  }
  FeedForwardNet net;
  net.dropout_p = dropout_p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    layer.weight = init_normal(dims[i], dims[i + 1], init_mean, init_std, rng);
    layer.bias = RowVector::Zero(dims[i + 1]);
    layer.activation = activations[i];
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

namespace {

void softmax_rows_inplace(Matrix& z) {
  for (Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - mx).exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
}

Matrix activate(const DenseLayer& layer, const Matrix& input) {
  Matrix z = input * layer.weight;
  z.rowwise() += layer.bias;
  switch (layer.activation) {
    case Activation::Identity: break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::SoftmaxRows: softmax_rows_inplace(z); break;
  }
  return z;
}

Activations run_forward(const FeedForwardNet& net, const Matrix& inputs, const DropoutMasks* fixed_masks,
                        bool train_mode, Rng* rng) {
  net.validate();
  if (inputs.cols() != net.in_dim()) {
    throw ContractError("input dim " + std::to_string(inputs.cols()) + " does not match network input dim " +
                        std::to_string(net.in_dim()));
  }
  Activations acts;
  acts.outputs.reserve(net.layers.size() + 1);
  acts.outputs.push_back(inputs);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix a = activate(net.layers[l], acts.outputs.back());
    Matrix mask;
    if (fixed_masks) {
      if (l < fixed_masks->size()) mask = (*fixed_masks)[l];
    } else if (train_mode && net.applies_dropout(l)) {
      if (!rng) throw ContractError("train-mode forward with dropout needs an rng");
      mask = sample_dropout_mask(a.rows(), a.cols(), net.dropout_p, *rng);
    }
    Matrix out = a;
    if (mask.size() > 0) {
      if (mask.rows() != a.rows() || mask.cols() != a.cols()) throw ContractError("dropout mask shape mismatch");
      out.array() *= mask.array();
    }
    acts.activated.push_back(std::move(a));
    acts.masks.push_back(std::move(mask));
    acts.outputs.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

Matrix sample_dropout_mask(Index rows, Index cols, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ContractError("dropout probability must be in [0, 1)");
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  Matrix mask(rows, cols);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
  return mask;
}

Activations forward(const FeedForwardNet& net, const Matrix& inputs, bool train_mode, Rng* rng) {
  return run_forward(net, inputs, nullptr, train_mode, rng);
}

Activations forward_with_masks(const FeedForwardNet& net, const Matrix& inputs, const DropoutMasks& masks) {
  return run_forward(net, inputs, &masks, true, nullptr);
}

Matrix predict(const FeedForwardNet& net, const Matrix& inputs) {
  return forward(net, inputs, false, nullptr).outputs.back();
}

Gradients Gradients::zeros_like(const FeedForwardNet& net) {
  Gradients g;
  for (const auto& l : net.layers) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(RowVector::Zero(l.bias.size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weight.size() != weight.size()) throw ContractError("gradient layer count mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  if (input.size() == 0) {
    input = other.input;
  } else if (other.input.size() > 0) {
    input += other.input;
  }
  return *this;
}

Gradients backward(const FeedForwardNet& net, const Activations& acts, const Matrix& loss_grad) {
  const std::size_t n_layers = net.layers.size();
  if (acts.outputs.size() != n_layers + 1 || acts.activated.size() != n_layers) {
    throw ContractError("activations do not come from this network");
  }
  if (loss_grad.rows() != acts.output().rows() || loss_grad.cols() != acts.output().cols()) {
    throw ContractError("loss gradient shape does not match network output");
  }
  Gradients grads;
  grads.weight.resize(n_layers);
  grads.bias.resize(n_layers);

  Matrix g = loss_grad;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = net.layers[l];
    if (acts.masks[l].size() > 0) g.array() *= acts.masks[l].array();
    const Matrix& a = acts.activated[l];
    switch (layer.activation) {
      case Activation::Identity: break;
      case Activation::Tanh: g.array() *= (1.0 - a.array().square()); break;
      case Activation::SoftmaxRows: {
        const Eigen::VectorXd dots = (g.array() * a.array()).rowwise().sum();
        g = (a.array() * (g.array().colwise() - dots.array())).matrix();
        break;
      }
    }
    grads.weight[l] = acts.outputs[l].transpose() * g;
    grads.bias[l] = g.colwise().sum();
    g = g * layer.weight.transpose();
  }
  grads.input = std::move(g);
  return grads;
}

void sgd_step(FeedForwardNet& net, const Gradients& grads, double learning_rate, std::string_view net_name) {
  if (grads.weight.size() != net.layers.size() || grads.bias.size() != net.layers.size()) {
    throw ContractError("gradient layer count does not match network");
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (grads.weight[l].rows() != layer.weight.rows() || grads.weight[l].cols() != layer.weight.cols() ||
        grads.bias[l].size() != layer.bias.size()) {
      throw ContractError("gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!grads.weight[l].allFinite() || !grads.bias[l].allFinite()) {
      throw TrainingError("non-finite gradient in " + std::string(net_name) + " layer " + std::to_string(l));
    }
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    net.layers[l].weight -= learning_rate * grads.weight[l];
    net.layers[l].bias -= learning_rate * grads.bias[l];
  }
}

double relative_gradient_error(double analytic, double numeric) {
  // The floor sits above central-difference round-off, so an exact zero gradient
  // is not scored against noise.
  return std::abs(analytic - numeric) / std::max(1e-5, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport check_gradients(std::vector<ParamRef> params, const std::function<double()>& loss, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("finite-difference epsilon must be positive");
  GradCheckReport report;
  for (auto& p : params) {
    const double saved = *p.value;
    *p.value = saved + epsilon;
    const double up = loss();
    *p.value = saved - epsilon;
    const double down = loss();
    *p.value = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = relative_gradient_error(p.analytic, numeric);
    ++report.parameters_checked;
    if (report.worst_parameter.empty() || err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_parameter = p.name;
    }
  }
  return report;
}

std::vector<ParamRef> parameter_refs(FeedForwardNet& net, const Gradients& grads, std::string_view prefix) {
  std::vector<ParamRef> refs;
  refs.reserve(net.parameter_count());
  const std::string base(prefix);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    for (Index i = 0; i < layer.weight.rows(); ++i) {
      for (Index j = 0; j < layer.weight.cols(); ++j) {
        refs.push_back({base + ".layer" + std::to_string(l) + ".W[" + std::to_string(i) + "," + std::to_string(j) + "]",
                        &layer.weight(i, j), grads.weight[l](i, j)});
      }
    }
    for (Index j = 0; j < layer.bias.size(); ++j) {
      refs.push_back({base + ".layer" + std::to_string(l) + ".b[" + std::to_string(j) + "]", &layer.bias(j),
                      grads.bias[l](j)});
    }
  }
  return refs;
}

GradCheckReport finite_diff_check(FeedForwardNet net, const OutputLoss& loss_fn, const Batch& batch, double epsilon,
                                  std::uint64_t mask_seed) {
  Rng rng(mask_seed);
  const Activations acts = forward(net, batch.inputs, true, &rng);
  const DropoutMasks masks = acts.masks;
  const LossValue lv = loss_fn(acts.output(), batch);
  const Gradients grads = backward(net, acts, lv.grad);
  auto refs = parameter_refs(net, grads, "net");
  return check_gradients(std::move(refs),
                         [&] { return loss_fn(forward_with_masks(net, batch.inputs, masks).output(), batch).value; },
                         epsilon);
}

double TrainHistory::best_validation_loss() const {
  for (const auto& e : epochs) {
    if (e.epoch == best_epoch) return e.validation_loss;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

DataSplit split_indices(Index n, double validation_fraction, std::uint64_t seed) {
  IndexList all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  auto n_val = static_cast<Index>(std::floor(validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  if (n_val < 0) n_val = 0;
  DataSplit split;
  split.validation.assign(all.begin(), all.begin() + n_val);
  split.train.assign(all.begin() + n_val, all.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<IndexList> make_batches(IndexList indices, Index batch_size, Rng& rng) {
  if (batch_size <= 0) throw ContractError("batch size must be positive");
  std::shuffle(indices.begin(), indices.end(), rng);
  std::vector<IndexList> batches;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(start),
                         indices.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

}  // namespace metaemb
