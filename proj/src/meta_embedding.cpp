#include "metaemb/meta_embedding.hpp"

#include <cstdio>
#include <sstream>

#include "metaemb/errors.hpp"

namespace metaemb {

std::string MethodTag::str() const {
  std::string s = method;
  if (!loss.empty()) s += "/" + loss;
  if (!config_digest.empty()) s += "@" + config_digest;
  if (!notes.empty()) s += ";" + notes;
  return s;
}

void MetaEmbedding::validate() const {
  if (!vocab) throw ContractError("meta-embedding has no vocabulary");
  if (static_cast<std::size_t>(matrix.rows()) != vocab->size()) {
    throw ContractError("meta-embedding row count does not match vocabulary");
  }
  if (!matrix.allFinite()) throw ContractError("meta-embedding contains non-finite entries");
  if (!flagged.empty() && flagged.size() != vocab->size()) throw ContractError("flag vector size mismatch");
}

Matrix MetaEmbedding::rows_for(const std::vector<std::string>& words) const {
  Matrix out(static_cast<Index>(words.size()), matrix.cols());
  for (std::size_t i = 0; i < words.size(); ++i) out.row(static_cast<Index>(i)) = matrix.row(vocab->at(words[i]));
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "hidden=";
  for (auto h : c.hidden_dims) os << h << ',';
  os << ";batch=" << c.batch_size << ";epochs=" << c.epochs << ";lr=" << c.learning_rate << ";dropout=" << c.dropout_p
     << ";init=" << c.init_mean << ',' << c.init_std << ";seed=" << c.seed << ";patience=" << c.early_stop_patience
     << ";val=" << c.validation_fraction << ";lambda=" << c.lambda;
  return fnv1a_hex(os.str());
}

double mean_row_cosine(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("mean_row_cosine: shape mismatch");
  if (a.rows() == 0) return 0.0;
  double total = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    const double na = a.row(i).norm();
    const double nb = b.row(i).norm();
    if (na > 0.0 && nb > 0.0) total += a.row(i).dot(b.row(i)) / (na * nb);
  }
  return total / static_cast<double>(a.rows());
}

Matrix gather_rows(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace metaemb
