#include "metaemb/embedding_store.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "metaemb/errors.hpp"

namespace metaemb {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<Index>(i));
    if (!inserted) throw ContractError("duplicate token in vocabulary: '" + tokens_[i] + "'");
  }
}

std::optional<Index> Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index Vocabulary::at(std::string_view token) const {
  if (auto i = lookup(token)) return *i;
  throw LookupError("unknown token: '" + std::string(token) + "'");
}

std::string to_string(EmbeddingFormat f) {
  return f == EmbeddingFormat::Word2VecText ? "word2vec-text" : "glove-text";
}

std::string to_string(VocabPolicy p) {
  return p == VocabPolicy::Intersection ? "intersection" : "union-zero-fill";
}

EmbeddingFormat parse_embedding_format(std::string_view s) {
  if (s == "word2vec-text" || s == "word2vec") return EmbeddingFormat::Word2VecText;
  if (s == "glove-text" || s == "glove") return EmbeddingFormat::GloveText;
  throw ConfigError("unknown embedding format '" + std::string(s) + "' (expected word2vec-text or glove-text)");
}

VocabPolicy parse_vocab_policy(std::string_view s) {
  if (s == "intersection") return VocabPolicy::Intersection;
  if (s == "union-zero-fill" || s == "union") return VocabPolicy::UnionZeroFill;
  throw ConfigError("unknown vocabulary policy '" + std::string(s) + "' (expected intersection or union-zero-fill)");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

std::string_view strip_terminator(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

bool parse_double(std::string_view field, double& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace

EmbeddingSource parse_text_embeddings(std::istream& in, EmbeddingFormat format, const std::string& name,
                                      std::vector<std::string>* warnings) {
  std::vector<std::string> tokens;
  std::vector<double> values;
  std::set<std::string, std::less<>> seen;

  std::size_t line_no = 0;
  long long dim = -1;
  long long declared_count = -1;
  long long rows_read = 0;
  std::string line;

  if (format == EmbeddingFormat::Word2VecText) {
    if (!std::getline(in, line)) throw ParseError(name, 1, "missing word2vec header");
    ++line_no;
    auto header = split_fields(strip_terminator(line));
    if (header.size() != 2 || !parse_int(header[0], declared_count) || !parse_int(header[1], dim) ||
        declared_count < 0 || dim <= 0) {
      throw ParseError(name, line_no, "expected header \"count dim\"");
    }
    tokens.reserve(static_cast<std::size_t>(declared_count));
    values.reserve(static_cast<std::size_t>(declared_count * dim));
  }

  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(strip_terminator(line));
    if (fields.empty()) continue;
    if (fields.size() < 2) throw ParseError(name, line_no, "line has a token but no values");

    const long long row_dim = static_cast<long long>(fields.size()) - 1;
    if (dim < 0) dim = row_dim;
    if (row_dim != dim) {
      throw FormatError(name, line_no,
                        "expected " + std::to_string(dim) + " values, found " + std::to_string(row_dim));
    }
    ++rows_read;

    std::string token(fields[0]);
    const bool duplicate = !seen.insert(token).second;
    if (duplicate) {
      if (warnings) {
        warnings->push_back(name + ":" + std::to_string(line_no) + ": duplicate token '" + token +
                            "' ignored (first occurrence kept)");
      }
    }
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw ParseError(name, line_no, "non-numeric or non-finite value '" + std::string(fields[j]) + "'");
      }
      if (!duplicate) values.push_back(v);
    }
    if (!duplicate) tokens.push_back(std::move(token));
  }

  if (declared_count >= 0 && rows_read != declared_count) {
    throw FormatError(name, line_no,
                      "header declares " + std::to_string(declared_count) + " rows, found " +
                          std::to_string(rows_read));
  }
  if (dim <= 0) throw FormatError(name, line_no, "no embedding rows found");

  EmbeddingSource src;
  src.name = name;
  const auto n = static_cast<Index>(tokens.size());
  src.rows = Eigen::Map<const Matrix>(values.data(), n, static_cast<Index>(dim));
  src.flagged.resize(tokens.size());
  for (Index i = 0; i < n; ++i) src.flagged[static_cast<std::size_t>(i)] = src.rows.row(i).squaredNorm() == 0.0;
  src.vocab = std::make_shared<const Vocabulary>(std::move(tokens));
  return src;
}

EmbeddingSource load_text_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                                     std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  auto src = parse_text_embeddings(in, format, path.string(), warnings);
  src.name = path.stem().string();
  return src;
}

EmbeddingFormat detect_embedding_format(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream ls(line);
  std::vector<std::string> tok;
  for (std::string t; ls >> t;) tok.push_back(std::move(t));
  const auto is_count = [](const std::string& t) {
    return !t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  return tok.size() == 2 && is_count(tok[0]) && is_count(tok[1]) ? EmbeddingFormat::Word2VecText
                                                                 : EmbeddingFormat::GloveText;
}

void write_word2vec_text(std::ostream& out, const Vocabulary& vocab, const Matrix& rows) {
  if (static_cast<std::size_t>(rows.rows()) != vocab.size()) {
    throw ContractError("row count does not match vocabulary size");
  }
  out << rows.rows() << ' ' << rows.cols() << '\n';
  char buf[64];
  for (Index i = 0; i < rows.rows(); ++i) {
    out << vocab.token(i);
    for (Index j = 0; j < rows.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, rows(i, j));
      out << ' ';
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void save_word2vec_text(const std::filesystem::path& path, const Vocabulary& vocab, const Matrix& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_word2vec_text(out, vocab, rows);
  if (!out) throw IoError("write failed for " + path.string());
}

EmbeddingEnsemble::EmbeddingEnsemble(std::vector<EmbeddingSource> sources) : sources_(std::move(sources)) {
  if (sources_.empty()) throw ContractError("ensemble needs at least one source");
  vocab_ = sources_.front().vocab;
  if (!vocab_) throw ContractError("source '" + sources_.front().name + "' has no vocabulary");
  for (const auto& s : sources_) {
    if (s.vocab != vocab_ && !(s.vocab && *s.vocab == *vocab_)) {
      throw ContractError("source '" + s.name + "' does not share the ensemble vocabulary");
    }
    if (s.word_count() != static_cast<Index>(vocab_->size())) {
      throw ContractError("source '" + s.name + "' row count does not match vocabulary size");
    }
    if (s.dim() <= 0) throw ContractError("source '" + s.name + "' has no columns");
    if (!s.rows.allFinite()) throw ContractError("source '" + s.name + "' contains non-finite values");
    offsets_.push_back(total_dim_);
    total_dim_ += s.dim();
  }
  for (auto& s : sources_) {
    s.vocab = vocab_;
    s.flagged.resize(vocab_->size(), false);
  }
}

std::vector<Index> EmbeddingEnsemble::dims() const {
  std::vector<Index> d;
  d.reserve(sources_.size());
  for (const auto& s : sources_) d.push_back(s.dim());
  return d;
}

bool EmbeddingEnsemble::flagged(Index w) const {
  const auto i = static_cast<std::size_t>(w);
  return std::any_of(sources_.begin(), sources_.end(), [i](const auto& s) { return s.flagged[i]; });
}

std::vector<bool> EmbeddingEnsemble::flagged_rows() const {
  std::vector<bool> out(vocab_->size());
  for (Index w = 0; w < word_count(); ++w) out[static_cast<std::size_t>(w)] = flagged(w);
  return out;
}

EmbeddingEnsemble align_vocabulary(std::vector<EmbeddingSource> raw_sources, VocabPolicy policy) {
  if (raw_sources.size() < 2) throw ContractError("align_vocabulary needs at least 2 sources");

  std::vector<std::string> shared;
  if (policy == VocabPolicy::Intersection) {
    shared = raw_sources.front().vocab->tokens();
    std::sort(shared.begin(), shared.end());
    for (std::size_t s = 1; s < raw_sources.size(); ++s) {
      const auto& v = *raw_sources[s].vocab;
      std::erase_if(shared, [&v](const std::string& t) { return !v.contains(t); });
    }
    if (shared.empty()) throw AlignmentError("sources have no token in common");
  } else {
    std::set<std::string, std::less<>> all;
    for (const auto& src : raw_sources) all.insert(src.vocab->tokens().begin(), src.vocab->tokens().end());
    shared.assign(all.begin(), all.end());
  }

  auto vocab = std::make_shared<const Vocabulary>(std::move(shared));
  const auto n = static_cast<Index>(vocab->size());

  std::vector<EmbeddingSource> aligned;
  aligned.reserve(raw_sources.size());
  for (auto& raw : raw_sources) {
    EmbeddingSource out;
    out.name = raw.name;
    out.vocab = vocab;
    out.rows = Matrix::Zero(n, raw.dim());
    out.flagged.assign(vocab->size(), false);
    for (Index w = 0; w < n; ++w) {
      const auto slot = static_cast<std::size_t>(w);
      if (auto r = raw.vocab->lookup(vocab->token(w))) {
        out.rows.row(w) = raw.rows.row(*r);
        out.flagged[slot] = raw.flagged.empty() ? false : raw.flagged[static_cast<std::size_t>(*r)];
      } else {
        out.flagged[slot] = true;
      }
    }
    aligned.push_back(std::move(out));
  }
  return EmbeddingEnsemble(std::move(aligned));
}

void normalize_rows_l2(Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) m.row(i) /= norm;
  }
}

EmbeddingSource normalize_l2(const EmbeddingSource& source) {
  EmbeddingSource out = source;
  out.flagged.resize(static_cast<std::size_t>(out.word_count()), false);
  for (Index i = 0; i < out.rows.rows(); ++i) {
    const double norm = out.rows.row(i).norm();
    if (norm > 0.0) {
      out.rows.row(i) /= norm;
    } else {
      out.flagged[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

EmbeddingEnsemble normalize_l2(const EmbeddingEnsemble& ensemble) {
  std::vector<EmbeddingSource> out;
  out.reserve(ensemble.source_count());
  for (const auto& s : ensemble.sources()) out.push_back(normalize_l2(s));
  return EmbeddingEnsemble(std::move(out));
}

Matrix concat_rows(const EmbeddingEnsemble& ensemble) {
  Matrix x(ensemble.word_count(), ensemble.total_dim());
  for (std::size_t i = 0; i < ensemble.source_count(); ++i) {
    const auto& s = ensemble.source(i);
    x.middleCols(ensemble.block_offset(i), s.dim()) = s.rows;
  }
  return x;
}

}  // namespace metaemb
