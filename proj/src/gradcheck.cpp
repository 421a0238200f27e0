#include "metaemb/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "metaemb/autoencoder_meta.hpp"
#include "metaemb/errors.hpp"
#include "metaemb/mtl_regularizer.hpp"
#include "metaemb/recon_loss.hpp"

namespace metaemb {

void GradCheckSpec::validate() const {
  for (Index d : {input_dim, hidden_dim, tower_hidden, tower_out}) {
    if (d < 1 || d > 16) throw ConfigError("gradcheck widths must lie in [1, 16]");
  }
  if (batch < 1 || batch > 8) throw ConfigError("gradcheck batch must lie in [1, 8]");
  if (!(epsilon > 0.0) || !(tolerance > 0.0)) throw ConfigError("gradcheck epsilon and tolerance must be positive");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("gradcheck dropout must lie in [0, 1)");
}

bool GradCheckSuite::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.passed; });
}

const GradCheckCase* GradCheckSuite::worst() const {
  const GradCheckCase* w = nullptr;
  for (const auto& c : cases) {
    if (!w || c.report.max_relative_error > w->report.max_relative_error) w = &c;
  }
  return w;
}

namespace {

void corrupt(std::vector<ParamRef>& refs, const GradCheckSpec& spec) {
  if (!spec.corrupt_parameter) return;
  for (auto& r : refs) {
    if (r.name == *spec.corrupt_parameter) r.analytic += 1.0 + 0.5 * std::abs(r.analytic);
  }
}

void append(std::vector<ParamRef>& out, std::vector<ParamRef> more) {
  out.insert(out.end(), more.begin(), more.end());
}

TrainConfig small_config(const GradCheckSpec& spec, std::uint64_t salt) {
  TrainConfig c;
  c.hidden_dims = {spec.hidden_dim};
  c.dropout_p = spec.dropout_p;
  c.init_std = spec.init_std;
  c.seed = derive_seed(spec.seed, "gradcheck/" + std::to_string(salt));
  return c;
}

Matrix positive_rows(Index rows, Index cols, Rng& rng) {
  // Away from zero so SCP's cosine is well defined.
  Matrix x = init_normal(rows, cols, 0.0, 1.0, rng);
  for (Index i = 0; i < rows; ++i) x(i, 0) += 2.0;
  return x;
}

GradCheckCase recon_case(const GradCheckSpec& spec, ReconLossKind kind, Rng& rng) {
  FeedForwardNet net = make_net({spec.input_dim, spec.hidden_dim, spec.input_dim},
                                {Activation::Tanh, Activation::Identity}, spec.dropout_p, 0.0, spec.init_std, rng);
  Batch batch;
  batch.inputs = positive_rows(spec.batch, spec.input_dim, rng);
  batch.targets = batch.inputs;
  const auto loss = [kind](const Matrix& out, const Batch& b) { return recon_loss_mean(kind, out, b.targets); };
  Rng mask_rng(rng());
  const Activations acts = forward(net, batch.inputs, true, &mask_rng);
  const Gradients grads = backward(net, acts, loss(acts.output(), batch).grad);
  auto refs = parameter_refs(net, grads, "ae");
  corrupt(refs, spec);
  GradCheckCase c{"recon/" + to_string(kind), {}, false};
  c.report = check_gradients(
      std::move(refs), [&] { return loss(forward_with_masks(net, batch.inputs, acts.masks).output(), batch).value; },
      spec.epsilon);
  return c;
}

GradCheckCase aeme_case(const GradCheckSpec& spec, AemeArchitecture arch, ReconLossKind kind, Rng& rng,
                        std::uint64_t salt) {
  const Index d0 = spec.input_dim / 2, d1 = spec.input_dim - d0;
  AemeModel model = init_aeme(arch, {d0, d1}, kind, small_config(spec, salt), 0.7);
  const Matrix x = positive_rows(spec.batch, spec.input_dim, rng);
  const auto masks = sample_aeme_masks(model, spec.batch, rng);
  const AemeObjective obj = aeme_objective(model, x, masks);
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < model.encoders.size(); ++i) {
    append(refs, parameter_refs(model.encoders[i], obj.encoder_grads[i], "encoder" + std::to_string(i)));
    append(refs, parameter_refs(model.decoders[i], obj.decoder_grads[i], "decoder" + std::to_string(i)));
  }
  corrupt(refs, spec);
  GradCheckCase c{to_string(arch) + "/" + to_string(kind), {}, false};
  c.report = check_gradients(std::move(refs), [&] { return aeme_objective(model, x, masks).value; }, spec.epsilon);
  return c;
}

GradCheckCase mtl_case(const GradCheckSpec& spec, SimLossKind sim, DistanceKind dist, ReconLossKind recon, Rng& rng,
                       std::uint64_t salt) {
  MtlKinds kinds{recon, sim, dist};
  TrainConfig config = small_config(spec, salt);
  config.lambda = 0.8;
  MtlModel model = init_mtl(spec.input_dim, kinds, config, {spec.hidden_dim, spec.tower_hidden, spec.tower_out});
  PairBatch batch;
  batch.x1 = positive_rows(spec.batch, spec.input_dim, rng);
  batch.x2 = positive_rows(spec.batch, spec.input_dim, rng);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  batch.y.resize(spec.batch);
  for (Index i = 0; i < spec.batch; ++i) batch.y(i) = unit(rng);
  const MtlMasks masks = sample_mtl_masks(model, spec.batch, rng);
  const MtlObjective obj = mtl_objective(model, batch, &masks);
  std::vector<ParamRef> refs;
  append(refs, parameter_refs(model.shared, obj.shared, "shared"));
  append(refs, parameter_refs(model.decoder, obj.decoder, "decoder"));
  append(refs, parameter_refs(model.tower, obj.tower, "tower"));
  corrupt(refs, spec);
  GradCheckCase c{"mtl/" + to_string(sim) + "/" + to_string(dist) + "/" + to_string(recon), {}, false};
  c.report = check_gradients(std::move(refs), [&] { return mtl_objective(model, batch, &masks).value; }, spec.epsilon);
  return c;
}

}  // namespace

GradCheckSuite run_gradcheck_suite(const GradCheckSpec& spec) {
  spec.validate();
  GradCheckSuite suite;
  suite.tolerance = spec.tolerance;
  Rng rng(derive_seed(spec.seed, "gradcheck"));
  const ReconLossKind recon_kinds[] = {ReconLossKind::MSE, ReconLossKind::MAE, ReconLossKind::KL, ReconLossKind::SCP};
  std::uint64_t salt = 0;
  for (auto k : recon_kinds) suite.cases.push_back(recon_case(spec, k, rng));
  for (auto arch : {AemeArchitecture::Coupled, AemeArchitecture::Decoupled}) {
    for (auto k : recon_kinds) suite.cases.push_back(aeme_case(spec, arch, k, rng, ++salt));
  }
  std::size_t r = 0;
  for (auto sim : {SimLossKind::NLL, SimLossKind::OLS, SimLossKind::Brier}) {
    for (auto dist : {DistanceKind::Manhattan, DistanceKind::Euclidean, DistanceKind::Cosine,
                      DistanceKind::AsymmetricCosine}) {
      // Cycle the reconstruction term so every pairing of the two heads appears.
      suite.cases.push_back(mtl_case(spec, sim, dist, recon_kinds[r++ % 4], rng, ++salt));
    }
  }
  for (auto& c : suite.cases) c.passed = c.report.max_relative_error < spec.tolerance;
  return suite;
}

}  // namespace metaemb
