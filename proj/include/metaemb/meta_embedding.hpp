#pragma once

#include <string>
#include <vector>

#include "metaemb/embedding_store.hpp"
#include "metaemb/tensor_core.hpp"

namespace metaemb {

/// Provenance of a meta-embedding: method, loss and a digest of the
/// configuration that produced it. `notes` records interpretive choices
/// (e.g. which normalization was applied before SVD).
struct MethodTag {
  std::string method;
  std::string loss;
  std::string config_digest;
  std::string notes;

  /// "method[/loss][@digest][;notes]"
  std::string str() const;
};

/// One learned vector per vocabulary word.
struct MetaEmbedding {
  Matrix matrix;
  VocabularyPtr vocab;
  MethodTag method;
  std::vector<bool> flagged;  // rows built from zero-filled source rows

  Index dim() const noexcept { return matrix.cols(); }
  Index word_count() const noexcept { return matrix.rows(); }
  bool is_flagged(Index w) const { return !flagged.empty() && flagged[static_cast<std::size_t>(w)]; }

  /// Throws ContractError if rows/vocab disagree or entries are non-finite.
  void validate() const;
  /// Rows for the given tokens; LookupError lists the first unknown token.
  Matrix rows_for(const std::vector<std::string>& words) const;
};

/// 16 hex digits of FNV-1a over a canonical rendering of the config.
std::string config_digest(const TrainConfig& config);
std::string fnv1a_hex(std::string_view bytes);

/// Mean over rows of cos(a_i, b_i). Zero rows contribute 0.
double mean_row_cosine(const Matrix& a, const Matrix& b);

/// Rows indexed by `rows` gathered into a new matrix.
Matrix gather_rows(const Matrix& m, const IndexList& rows);

}  // namespace metaemb
