#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "metaemb/types.hpp"

namespace metaemb {

/// Ordered set of unique tokens with a token -> row index map.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws ContractError on a duplicate token.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& token(Index i) const { return tokens_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::optional<Index> lookup(std::string_view token) const;
  bool contains(std::string_view token) const { return lookup(token).has_value(); }
  /// Like lookup(), but throws LookupError naming the token.
  Index at(std::string_view token) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Index, Hash, std::equal_to<>> index_;
};

using VocabularyPtr = std::shared_ptr<const Vocabulary>;

/// One pre-trained embedding table. `flagged[i]` marks rows that carry no
/// real information: zero-filled during alignment, or all-zero on input.
struct EmbeddingSource {
  std::string name;
  VocabularyPtr vocab;
  Matrix rows;
  std::vector<bool> flagged;

  Index dim() const noexcept { return rows.cols(); }
  Index word_count() const noexcept { return rows.rows(); }
};

enum class EmbeddingFormat { Word2VecText, GloveText };
enum class VocabPolicy { Intersection, UnionZeroFill };

std::string to_string(EmbeddingFormat f);
std::string to_string(VocabPolicy p);
EmbeddingFormat parse_embedding_format(std::string_view s);
VocabPolicy parse_vocab_policy(std::string_view s);

/// Parse a text embedding table. Duplicate tokens keep their first
/// occurrence; a message for each is appended to `warnings` if given.
EmbeddingSource parse_text_embeddings(std::istream& in, EmbeddingFormat format, const std::string& name,
                                      std::vector<std::string>* warnings = nullptr);

EmbeddingSource load_text_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                                     std::vector<std::string>* warnings = nullptr);

/// word2vec when the first line is exactly two non-negative integers
/// ("count dim"), GloVe otherwise.
EmbeddingFormat detect_embedding_format(const std::filesystem::path& path);

/// word2vec text layout: "count dim" header, then "token v1 ... vd". Values
/// are written in shortest round-trip form, so a reload is bit-exact.
void write_word2vec_text(std::ostream& out, const Vocabulary& vocab, const Matrix& rows);
void save_word2vec_text(const std::filesystem::path& path, const Vocabulary& vocab, const Matrix& rows);

/// N sources over one shared vocabulary; column block i of the concatenation
/// belongs to source i.
class EmbeddingEnsemble {
 public:
  explicit EmbeddingEnsemble(std::vector<EmbeddingSource> sources);

  std::size_t source_count() const noexcept { return sources_.size(); }
  const std::vector<EmbeddingSource>& sources() const noexcept { return sources_; }
  const EmbeddingSource& source(std::size_t i) const { return sources_.at(i); }

  const Vocabulary& vocab() const noexcept { return *vocab_; }
  const VocabularyPtr& vocab_ptr() const noexcept { return vocab_; }
  Index word_count() const noexcept { return static_cast<Index>(vocab_->size()); }

  std::vector<Index> dims() const;
  Index total_dim() const noexcept { return total_dim_; }
  Index block_offset(std::size_t i) const { return offsets_.at(i); }

  /// True when any source row for word `w` is flagged.
  bool flagged(Index w) const;
  std::vector<bool> flagged_rows() const;

 private:
  std::vector<EmbeddingSource> sources_;
  VocabularyPtr vocab_;
  std::vector<Index> offsets_;
  Index total_dim_ = 0;
};

/// Requires at least two sources. Output vocabulary is sorted
/// lexicographically (byte order).
EmbeddingEnsemble align_vocabulary(std::vector<EmbeddingSource> raw_sources, VocabPolicy policy);

/// Scale every nonzero row to unit norm. Zero rows stay zero and are flagged.
EmbeddingSource normalize_l2(const EmbeddingSource& source);
EmbeddingEnsemble normalize_l2(const EmbeddingEnsemble& ensemble);

/// In-place row normalization on a bare matrix; zero rows are left alone.
void normalize_rows_l2(Matrix& m);

/// Row-wise concatenation of all sources, blocks in source order.
Matrix concat_rows(const EmbeddingEnsemble& ensemble);

}  // namespace metaemb
