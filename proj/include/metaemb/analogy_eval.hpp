#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaemb/meta_embedding.hpp"

namespace metaemb {

struct AnalogyQuestion {
  std::string a;
  std::string b;
  std::string c;
  std::string answer;
  std::string relation;  // section name, empty before the first ":" line
};

enum class CandidatePolicy { FullVocab, ProvidedList };

std::string to_string(CandidatePolicy p);

struct AnalogyDataset {
  std::string name;
  std::vector<AnalogyQuestion> questions;
  CandidatePolicy policy = CandidatePolicy::FullVocab;
  std::vector<std::string> candidates;  // used for ProvidedList only
};

/// Google/MSR text format: four whitespace-separated tokens per line; a
/// line starting with ':' opens a relation section.
AnalogyDataset parse_analogy(std::istream& in, std::string name, const std::string& path = "<stream>");
AnalogyDataset load_analogy(const std::string& path);
/// One candidate token per line; blank lines and '#' comments skipped.
std::vector<std::string> load_candidate_list(const std::string& path);

using RankedCandidates = std::vector<std::pair<std::string, double>>;

/// Candidates ranked by cos(Z(b) - Z(a) + Z(c), Z(d)), best first, ties
/// broken lexicographically. a, b, c, unknown tokens, flagged rows and zero
/// rows are excluded. Returns nullopt if the query vector is zero.
/// Throws LookupError if a, b or c is not in the vocabulary.
std::optional<RankedCandidates> cosadd_rank(const MetaEmbedding& meta, const std::string& a, const std::string& b,
                                            const std::string& c, const std::vector<std::string>& candidates);

/// Top-1 answer, or nullopt if the query is zero or no candidate remains.
std::optional<std::string> cosadd_answer(const MetaEmbedding& meta, const std::string& a, const std::string& b,
                                         const std::string& c, const std::vector<std::string>& candidates);

struct RelationScore {
  std::size_t correct = 0;
  std::size_t scored = 0;
  double accuracy() const { return scored ? static_cast<double>(correct) / static_cast<double>(scored) : 0.0; }
};

struct AnalogyReport {
  std::string dataset;
  std::string method;
  CandidatePolicy policy = CandidatePolicy::FullVocab;
  double accuracy = 0.0;      // correct / scored
  std::size_t correct = 0;
  std::size_t scored = 0;
  std::size_t dropped = 0;    // a token is unknown or flagged
  std::size_t zero_query = 0; // Z(b) - Z(a) + Z(c) == 0
  std::map<std::string, RelationScore> per_relation;
};

/// Throws EvaluationError if no question can be scored.
AnalogyReport eval_analogy(const MetaEmbedding& meta, const AnalogyDataset& dataset);

/// CSV header "dataset,method,policy,accuracy,correct,scored,dropped,zero_query";
/// accuracy is scaled by 100.
void write_analogy_csv(std::ostream& out, const std::vector<AnalogyReport>& reports);
void write_analogy_table(std::ostream& out, const std::vector<AnalogyReport>& reports);

}  // namespace metaemb
