#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "metaemb/distance.hpp"
#include "metaemb/meta_embedding.hpp"
#include "metaemb/word_pairs.hpp"

namespace metaemb {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws EvaluationError for
/// unequal lengths, fewer than two values, or a constant sequence.
double spearman(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  std::string dataset;
  std::string method;
  DistanceKind measure = DistanceKind::Cosine;
  double rho_s = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_dropped = 0;
};

/// Spearman correlation between human scores and model similarity. Pairs
/// with an out-of-vocabulary word, a flagged (zero-filled) row, or a zero
/// vector under a cosine measure are dropped and counted.
EvalReport eval_wordsim(const MetaEmbedding& meta, const WordPairDataset& dataset,
                        DistanceKind measure = DistanceKind::Cosine);

/// CSV with header "dataset,method,measure,rho_s,pairs_used,pairs_dropped";
/// rho_s is scaled by 100.
void write_eval_csv(std::ostream& out, const std::vector<EvalReport>& reports);
/// Aligned-column text table with the same columns.
void write_eval_table(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace metaemb
