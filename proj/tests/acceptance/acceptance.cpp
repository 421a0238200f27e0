// Acceptance suite: one line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "metaemb/analogy_eval.hpp"
#include "metaemb/autoencoder_meta.hpp"
#include "metaemb/baselines.hpp"
#include "metaemb/gradcheck.hpp"
#include "metaemb/mtl_regularizer.hpp"
#include "metaemb/target_autoencoder.hpp"
#include "metaemb/wordsim_eval.hpp"
#include "support/synthetic.hpp"

using namespace metaemb;
using namespace metaemb::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- oracles ---------------------------------------------------------------

double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rank = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::string brute_cosadd(const Matrix& z, const std::vector<std::string>& words, std::size_t a, std::size_t b,
                         std::size_t c) {
  std::vector<double> q(static_cast<std::size_t>(z.cols()));
  for (Index j = 0; j < z.cols(); ++j) {
    q[static_cast<std::size_t>(j)] = z(static_cast<Index>(b), j) - z(static_cast<Index>(a), j) + z(static_cast<Index>(c), j);
  }
  std::string best;
  double best_score = -2.0;
  for (std::size_t d = 0; d < words.size(); ++d) {
    if (d == a || d == b || d == c) continue;
    double dot = 0, nq = 0, nd = 0;
    for (Index j = 0; j < z.cols(); ++j) {
      const double zd = z(static_cast<Index>(d), j);
      dot += q[static_cast<std::size_t>(j)] * zd;
      nq += q[static_cast<std::size_t>(j)] * q[static_cast<std::size_t>(j)];
      nd += zd * zd;
    }
    const double s = dot / std::sqrt(nq * nd);
    if (s > best_score || (s == best_score && words[d] < best)) {
      best_score = s;
      best = words[d];
    }
  }
  return best;
}

// ---- shared fixtures -------------------------------------------------------

struct PlantedSimilarity {
  EmbeddingEnsemble ensemble;
  WordPairDataset train;
  WordPairDataset held_out;
};

// 200 unit-norm 20-dim words e; sources e and e R; 500 distinct unordered
// pairs with y = exp(-||e1 - e2||), split 400 / 100.
PlantedSimilarity planted_similarity(std::uint64_t seed) {
  const Index n = 200, d = 20;
  const auto words = make_words(n);
  Matrix e = gaussian(n, d, seed);
  normalize_rows_l2(e);
  std::vector<EmbeddingSource> raw;
  raw.push_back(make_source("plain", words, e));
  raw.push_back(make_source("rotated", words, e * random_rotation(d, seed + 1)));
  PlantedSimilarity out{align_vocabulary(std::move(raw), VocabPolicy::Intersection), {}, {}};

  Rng rng(seed + 2);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::set<std::pair<Index, Index>> seen;
  std::vector<WordPair> pairs;
  while (pairs.size() < 500) {
    Index a = pick(rng), b = pick(rng);
    if (a == b || !seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
    const double y = std::exp(-(e.row(a) - e.row(b)).norm());
    pairs.push_back({words[static_cast<std::size_t>(a)], words[static_cast<std::size_t>(b)], y, y});
  }
  out.train.name = "planted-train";
  out.held_out.name = "planted-heldout";
  out.train.pairs.assign(pairs.begin(), pairs.begin() + 400);
  out.held_out.pairs.assign(pairs.begin() + 400, pairs.end());
  return out;
}

TrainConfig mtl_config(std::uint64_t seed, double lambda) {
  TrainConfig c;
  c.seed = seed;
  c.lambda = lambda;
  c.epochs = 50;
  return c;
}

// ---- criteria --------------------------------------------------------------

Outcome gradient_correctness() {
  GradCheckSpec spec;
  spec.input_dim = 8;
  spec.hidden_dim = 8;
  spec.tower_hidden = 6;
  spec.tower_out = 4;
  spec.batch = 4;
  spec.epsilon = 1e-5;
  const auto suite = run_gradcheck_suite(spec);
  const auto* w = suite.worst();
  return {suite.passed(), std::to_string(suite.cases.size()) + " cases, max rel err " +
                              fmt("%.3g", w->report.max_relative_error) + " (" + w->name + ")"};
}

Outcome spearman_oracle() {
  Rng rng(2024);
  std::uniform_int_distribution<int> small(0, 30);
  std::normal_distribution<double> n01;
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(100), y(100);
    for (std::size_t i = 0; i < 100; ++i) {
      x[i] = n01(rng);
      y[i] = 0.5 * x[i] + n01(rng);
    }
    // Overwrite 25% of the entries with copies of others to force ties.
    for (std::size_t i = 0; i < 25; ++i) {
      x[static_cast<std::size_t>(small(rng)) + 40] = x[static_cast<std::size_t>(small(rng))];
      y[static_cast<std::size_t>(small(rng)) + 40] = y[static_cast<std::size_t>(small(rng))];
    }
    worst = std::max(worst, std::abs(spearman(x, y) - brute_spearman(x, y)));
  }
  // Rank differences (-1, 1, -1, 1, 0): 1 - 6 * 4 / (5 * 24) = 0.8.
  const double hand = spearman(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 1, 4, 3, 5});
  const double closed_form = 1.0 - 6.0 * 4.0 / (5.0 * 24.0);
  const bool ok = worst <= 1e-12 && std::abs(hand - closed_form) <= 1e-12;
  return {ok, "max |diff| " + fmt("%.3g", worst) + ", hand case " + fmt("%.15g", hand) + " (closed form " +
                  fmt("%.15g", closed_form) + ")"};
}

Outcome svd_oracle() {
  Rng rng(77);
  std::uniform_int_distribution<Index> rows(13, 30), dim(2, 6);
  double worst_err = 0, worst_orth = 0;
  for (int t = 0; t < 50; ++t) {
    const Index n = rows(rng), d0 = dim(rng), d1 = dim(rng);
    const auto words = make_words(n);
    std::vector<EmbeddingSource> raw;
    raw.push_back(make_source("a", words, gaussian(n, d0, 1000 + t)));
    raw.push_back(make_source("b", words, gaussian(n, d1, 2000 + t)));
    const auto ens = align_vocabulary(std::move(raw), VocabPolicy::Intersection);
    const Index k = 1 + t % (d0 + d1 - 1);

    const Matrix x = concat_rows(normalize_l2(ens));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(x.transpose() * x);
    const Vector lam = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double oracle = std::sqrt(lam.tail(lam.size() - k).sum());

    const auto svd = truncated_svd(x, k);
    const double direct = (x - svd.reconstruct()).norm();
    const auto meta = meta_svd(ens, k);
    const double via_scores = std::sqrt(std::max(0.0, x.squaredNorm() - meta.matrix.squaredNorm()));
    worst_err = std::max({worst_err, std::abs(direct - oracle), std::abs(via_scores - oracle)});
    worst_orth = std::max(worst_orth, (svd.u.transpose() * svd.u - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());
  }
  return {worst_err <= 1e-8 && worst_orth <= 1e-8,
          "max |err - oracle| " + fmt("%.3g", worst_err) + ", max |U'U - I| " + fmt("%.3g", worst_orth)};
}

Outcome caeme_convergence() {
  const auto ens = correlated_ensemble(200, 10, 2, 4);
  const auto result = train_caeme(ens, ReconLossKind::SCP, TrainConfig{});
  const auto& ep = result.history.epochs;
  bool trend = true;
  for (std::size_t i = 1; i < ep.size(); ++i) trend = trend && ep[i].train_loss <= ep[i - 1].train_loss * 1.02;
  const Matrix x = concat_rows(normalize_l2(ens));
  const double cos = mean_row_cosine(x, result.model.reconstruct(x));
  return {trend && cos > 0.95, std::to_string(ep.size()) + " epochs, trend " + (trend ? "ok" : "violated") +
                                   ", loss " + fmt("%.4g", ep.front().train_loss) + " -> " +
                                   fmt("%.4g", ep.back().train_loss) + ", mean cosine " + fmt("%.4f", cos)};
}

Outcome daeme_agreement() {
  const Index n = 200, d = 10;
  const auto words = make_words(n);
  const Matrix e = gaussian(n, d, 5);
  std::vector<EmbeddingSource> raw;
  raw.push_back(make_source("a", words, e));
  raw.push_back(make_source("b", words, e));
  const auto ens = align_vocabulary(std::move(raw), VocabPolicy::Intersection);
  // Trained to convergence: early stopping off, 300 epochs.
  TrainConfig c;
  c.epochs = 300;
  c.early_stop_patience = 0;
  const auto result = train_daeme(ens, ReconLossKind::SCP, c);
  const double dist = mean_branch_code_distance(result.model, concat_rows(normalize_l2(ens)));
  return {dist < 0.05, "mean inter-branch distance " + fmt("%.4f", dist) + " after " +
                           std::to_string(result.history.epochs.size()) + " epochs"};
}

Outcome tae_copy() {
  const Index n = 200, d = 10;
  const auto words = make_words(n);
  const Matrix e = gaussian(n, d, 6);
  std::vector<EmbeddingSource> raw;
  raw.push_back(make_source("a", words, e));
  raw.push_back(make_source("b", words, gaussian(n, d, 7)));
  raw.push_back(make_source("target", words, e));
  const auto ens = align_vocabulary(std::move(raw), VocabPolicy::Intersection);
  // Trained to convergence: early stopping off, 1500 epochs.
  TrainConfig c;
  c.epochs = 1500;
  c.early_stop_patience = 0;
  const auto result = train_tae(ens, 2, ReconLossKind::SCP, c);
  const Matrix x = concat_rows(normalize_l2(ens));
  const double cos = mean_row_cosine(result.model.predict_target(x), tae_target(x, ens.dims(), 2));
  return {cos > 0.99, "mean reconstruction cosine " + fmt("%.4f", cos)};
}

double heldout_rho(const MtlResult& r, const WordPairDataset& held_out) {
  return eval_wordsim(r.meta, held_out, DistanceKind::Cosine).rho_s;
}

Outcome mtl_recovery() {
  const auto fx = planted_similarity(31);
  const auto r = train_mtl({fx.train}, fx.held_out, fx.ensemble, {ReconLossKind::SCP, SimLossKind::Brier,
                                                                   DistanceKind::Cosine},
                           mtl_config(13, 1.0));
  const double rho = heldout_rho(r, fx.held_out);
  return {rho >= 0.9, "held-out rho_s " + fmt("%.4f", rho) + " after " + std::to_string(r.history.epochs.size()) +
                          " epochs"};
}

Outcome lambda_effect() {
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed : {13u, 14u, 15u}) {
    const auto fx = planted_similarity(31);
    const Matrix x = concat_rows(normalize_l2(fx.ensemble));
    const MtlKinds kinds{ReconLossKind::SCP, SimLossKind::Brier, DistanceKind::Cosine};
    const auto on = train_mtl({fx.train}, fx.held_out, fx.ensemble, kinds, mtl_config(seed, 1.0));
    const auto off = train_mtl({fx.train}, fx.held_out, fx.ensemble, kinds, mtl_config(seed, 0.0));
    const double l_on = mtl_reconstruction_loss(on.model, x);
    const double l_off = mtl_reconstruction_loss(off.model, x);
    ok = ok && l_on < l_off;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": " + fmt("%.4g", l_on) +
              " vs " + fmt("%.4g", l_off);
  }
  return {ok, "recon loss lambda=1 vs 0: " + detail};
}

Outcome analogy_oracle() {
  const Index n = 50;
  const auto words = make_words(n);
  const Matrix z = gaussian(n, 8, 9);
  MetaEmbedding meta{z, std::make_shared<const Vocabulary>(words), {"random", "", "", ""}, {}};
  Rng rng(10);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  int agree = 0;
  for (int q = 0; q < 30; ++q) {
    std::size_t a, b, c;
    do {
      a = pick(rng), b = pick(rng), c = pick(rng);
    } while (a == b || b == c || a == c);
    const auto top = cosadd_answer(meta, words[a], words[b], words[c], words);
    agree += top && *top == brute_cosadd(z, words, a, b, c);
  }

  // Planted offsets: country = capital + v for a shared v.
  const Index k = 12, d = 16;
  const auto capitals = make_words(k, "cap");
  const auto countries = make_words(k, "cty");
  const Matrix cap = gaussian(k, d, 11);
  const RowVector v = gaussian(1, d, 12).row(0);
  std::vector<std::string> vocab(capitals);
  vocab.insert(vocab.end(), countries.begin(), countries.end());
  Matrix planted(2 * k, d);
  planted.topRows(k) = cap;
  planted.bottomRows(k) = cap.rowwise() + v;
  MetaEmbedding pm{planted, std::make_shared<const Vocabulary>(vocab), {"planted", "", "", ""}, {}};
  AnalogyDataset ds;
  ds.name = "planted";
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (i == j) continue;
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      ds.questions.push_back({capitals[ui], countries[ui], capitals[uj], countries[uj], "capital-country"});
    }
  }
  const auto report = eval_analogy(pm, ds);
  return {agree == 30 && report.accuracy == 1.0,
          std::to_string(agree) + "/30 agree with exhaustive scorer, planted accuracy " + fmt("%.4f", report.accuracy)};
}

Outcome asymmetry_witness() {
  TrainConfig c;
  c.seed = 3;
  MtlModel model = init_mtl(6, {ReconLossKind::MSE, SimLossKind::Brier, DistanceKind::AsymmetricCosine}, c,
                            {8, 6, 4});
  RowVector x1(6), x2(6);
  x1 << 0.9, -0.2, 0.4, 0.1, -0.5, 0.3;
  x2 << 0.1, 0.6, -0.3, 0.8, 0.2, -0.4;
  const double f = similarity_forward(model, x1, x2);
  const double r = similarity_forward(model, x2, x1);
  double sym_gap = 0;
  for (auto k : {DistanceKind::Manhattan, DistanceKind::Euclidean, DistanceKind::Cosine}) {
    model.kinds.distance = k;
    sym_gap = std::max(sym_gap, std::abs(similarity_forward(model, x1, x2) - similarity_forward(model, x2, x1)));
  }
  return {f != r && sym_gap <= 1e-12, "asymmetric " + fmt("%.6f", f) + " vs " + fmt("%.6f", r) +
                                          ", symmetric max gap " + fmt("%.3g", sym_gap)};
}

std::string export_bytes(const MetaEmbedding& meta) {
  std::ostringstream out;
  write_word2vec_text(out, *meta.vocab, meta.matrix);
  return out.str();
}

Outcome determinism() {
  const auto ens = correlated_ensemble(60, 6, 2, 21);
  TrainConfig c;
  c.hidden_dims = {12};
  c.epochs = 5;
  const auto a = train_caeme(ens, ReconLossKind::KL, c);
  const auto b = train_caeme(ens, ReconLossKind::KL, c);
  const auto fx = planted_similarity(40);
  c.epochs = 3;
  const MtlKinds kinds{ReconLossKind::SCP, SimLossKind::NLL, DistanceKind::Euclidean};
  const auto m1 = train_mtl({fx.train}, fx.held_out, fx.ensemble, kinds, c);
  const auto m2 = train_mtl({fx.train}, fx.held_out, fx.ensemble, kinds, c);
  const bool ok = export_bytes(a.meta) == export_bytes(b.meta) && export_bytes(m1.meta) == export_bytes(m2.meta);
  return {ok, ok ? "caeme and mtl exports byte-identical across two runs" : "exports differ"};
}

Outcome round_trip() {
  const auto ens = correlated_ensemble(80, 7, 3, 22);
  const auto meta = meta_svd(ens, 5);
  std::istringstream in(export_bytes(meta));
  const auto back = parse_text_embeddings(in, EmbeddingFormat::Word2VecText, "back");
  const bool ok = back.vocab->tokens() == meta.vocab->tokens() && back.rows == meta.matrix;
  return {ok, ok ? "all entries bit-identical" : "values differ after reload"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double time_limit_s;  // 0 = unbounded
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness, 30},
      {2, "spearman oracle", spearman_oracle, 0},
      {3, "svd oracle", svd_oracle, 0},
      {4, "caeme convergence", caeme_convergence, 60},
      {5, "daeme branch agreement", daeme_agreement, 0},
      {6, "tae copy task", tae_copy, 0},
      {7, "mtl planted-similarity recovery", mtl_recovery, 120},
      {8, "lambda regularization effect", lambda_effect, 0},
      {9, "analogy oracle", analogy_oracle, 0},
      {10, "asymmetry witness", asymmetry_witness, 0},
      {11, "determinism", determinism, 0},
      {12, "round-trip", round_trip, 0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += "; over time limit";
    }
    failures += !o.pass;
    std::printf("[%s] %2d %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("[SKIP] 13 full-data reproduction: optional, needs the original sources and datasets\n");
  return failures == 0 ? 0 : 1;
}
