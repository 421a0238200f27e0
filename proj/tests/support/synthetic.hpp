#pragma once

// Synthetic fixtures shared by the unit and acceptance tests.

#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "metaemb/embedding_store.hpp"
#include "metaemb/tensor_core.hpp"
#include "metaemb/word_pairs.hpp"

namespace metaemb::testing {

inline std::vector<std::string> make_words(Index n, const std::string& prefix = "w") {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::string num = std::to_string(i);
    out.push_back(prefix + std::string(4 - std::min<std::size_t>(4, num.size()), '0') + num);
  }
  return out;
}

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed, double std = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, std);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Matrix random_rotation(Index d, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(d, d, seed));
  return qr.householderQ();
}

inline EmbeddingSource make_source(std::string name, const std::vector<std::string>& words, Matrix rows) {
  EmbeddingSource s;
  s.name = std::move(name);
  s.vocab = std::make_shared<const Vocabulary>(words);
  s.rows = std::move(rows);
  return s;
}

/// Sources that are noisy rotations of one latent table, so they share
/// structure by construction.
inline EmbeddingEnsemble correlated_ensemble(Index words, Index dim, std::size_t sources, std::uint64_t seed,
                                             double noise = 0.05) {
  const auto vocab = make_words(words);
  const Matrix latent = gaussian(words, dim, seed);
  std::vector<EmbeddingSource> raw;
  for (std::size_t s = 0; s < sources; ++s) {
    Matrix rows = latent * random_rotation(dim, seed + 100 + s) + gaussian(words, dim, seed + 200 + s, noise);
    raw.push_back(make_source("src" + std::to_string(s), vocab, std::move(rows)));
  }
  return align_vocabulary(std::move(raw), VocabPolicy::Intersection);
}

/// Word pairs over `words` with y = exp(-||e1 - e2||) computed on the raw
/// latent vectors.
inline WordPairDataset planted_pairs(const std::vector<std::string>& words, const Matrix& latent, std::size_t count,
                                     std::uint64_t seed, std::string name) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  WordPairDataset ds;
  ds.name = std::move(name);
  ds.range = {0.0, 1.0};
  while (ds.pairs.size() < count) {
    const auto a = pick(rng), b = pick(rng);
    if (a == b) continue;
    const double y = std::exp(-(latent.row(static_cast<Index>(a)) - latent.row(static_cast<Index>(b))).norm());
    ds.pairs.push_back({words[a], words[b], y, y});
  }
  return ds;
}

}  // namespace metaemb::testing
