#include "metaemb/analogy_eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "metaemb/errors.hpp"

namespace metaemb {

std::string to_string(CandidatePolicy p) {
  return p == CandidatePolicy::FullVocab ? "full-vocab" : "provided-list";
}

AnalogyDataset parse_analogy(std::istream& in, std::string name, const std::string& path) {
  AnalogyDataset ds;
  ds.name = std::move(name);
  std::string relation;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == ':') {
      std::istringstream rs(line.substr(first + 1));
      relation.clear();
      rs >> relation;
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(std::move(t));
    if (tok.size() != 4) {
      throw FormatError(path, lineno, "expected 4 tokens, found " + std::to_string(tok.size()));
    }
    ds.questions.push_back({tok[0], tok[1], tok[2], tok[3], relation});
  }
  return ds;
}

namespace {

std::string file_stem(const std::string& path) {
  auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

}  // namespace

AnalogyDataset load_analogy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open analogy file '" + path + "'");
  return parse_analogy(in, file_stem(path), path);
}

std::vector<std::string> load_candidate_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open candidate list '" + path + "'");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok.front() == '#') continue;
    out.push_back(tok);
  }
  return out;
}

std::optional<RankedCandidates> cosadd_rank(const MetaEmbedding& meta, const std::string& a, const std::string& b,
                                            const std::string& c, const std::vector<std::string>& candidates) {
  const Index ia = meta.vocab->at(a);
  const Index ib = meta.vocab->at(b);
  const Index ic = meta.vocab->at(c);
  const RowVector query = meta.matrix.row(ib) - meta.matrix.row(ia) + meta.matrix.row(ic);
  const double qn = query.norm();
  if (qn == 0.0) return std::nullopt;

  RankedCandidates ranked;
  ranked.reserve(candidates.size());
  for (const auto& d : candidates) {
    if (d == a || d == b || d == c) continue;
    const auto id = meta.vocab->lookup(d);
    if (!id || meta.is_flagged(*id)) continue;
    const double dn = meta.matrix.row(*id).norm();
    if (dn == 0.0) continue;
    ranked.emplace_back(d, query.dot(meta.matrix.row(*id)) / (qn * dn));
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  ranked.erase(std::unique(ranked.begin(), ranked.end()), ranked.end());
  return ranked;
}

std::optional<std::string> cosadd_answer(const MetaEmbedding& meta, const std::string& a, const std::string& b,
                                         const std::string& c, const std::vector<std::string>& candidates) {
  auto ranked = cosadd_rank(meta, a, b, c, candidates);
  if (!ranked || ranked->empty()) return std::nullopt;
  return ranked->front().first;
}

namespace {

// Best candidate in a single pass, same ordering as cosadd_rank.
std::optional<std::string> best_candidate(const MetaEmbedding& meta, Index ia, Index ib, Index ic,
                                          const std::vector<Index>& pool, bool& zero_query) {
  const RowVector query = meta.matrix.row(ib) - meta.matrix.row(ia) + meta.matrix.row(ic);
  const double qn = query.norm();
  zero_query = qn == 0.0;
  if (zero_query) return std::nullopt;
  const Vocabulary& vocab = *meta.vocab;
  std::optional<Index> best;
  double best_score = 0.0;
  for (Index id : pool) {
    if (id == ia || id == ib || id == ic) continue;
    const double dn = meta.matrix.row(id).norm();
    if (dn == 0.0) continue;
    const double s = query.dot(meta.matrix.row(id)) / (qn * dn);
    if (!best || s > best_score || (s == best_score && vocab.token(id) < vocab.token(*best))) {
      best = id;
      best_score = s;
    }
  }
  if (!best) return std::nullopt;
  return vocab.token(*best);
}

}  // namespace

AnalogyReport eval_analogy(const MetaEmbedding& meta, const AnalogyDataset& dataset) {
  meta.validate();
  AnalogyReport report;
  report.dataset = dataset.name;
  report.method = meta.method.str();
  report.policy = dataset.policy;

  std::vector<Index> pool;
  if (dataset.policy == CandidatePolicy::FullVocab) {
    for (Index i = 0; i < static_cast<Index>(meta.vocab->size()); ++i) {
      if (!meta.is_flagged(i)) pool.push_back(i);
    }
  } else {
    for (const auto& w : dataset.candidates) {
      if (auto id = meta.vocab->lookup(w); id && !meta.is_flagged(*id)) pool.push_back(*id);
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }

  auto usable = [&](const std::string& w) -> std::optional<Index> {
    auto id = meta.vocab->lookup(w);
    if (!id || meta.is_flagged(*id)) return std::nullopt;
    return id;
  };

  for (const auto& q : dataset.questions) {
    const auto ia = usable(q.a), ib = usable(q.b), ic = usable(q.c), id = usable(q.answer);
    if (!ia || !ib || !ic || !id) {
      ++report.dropped;
      continue;
    }
    bool zero = false;
    const auto answer = best_candidate(meta, *ia, *ib, *ic, pool, zero);
    if (zero) {
      ++report.zero_query;
      continue;
    }
    auto& rel = report.per_relation[q.relation];
    ++report.scored;
    ++rel.scored;
    if (answer && *answer == q.answer) {
      ++report.correct;
      ++rel.correct;
    }
  }
  if (report.scored == 0) {
    throw EvaluationError("analogy dataset '" + dataset.name + "': no question could be scored (" +
                          std::to_string(report.dropped) + " dropped, " + std::to_string(report.zero_query) +
                          " zero queries)");
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.scored);
  return report;
}

namespace {

const std::vector<std::string> kColumns = {"dataset", "method",  "policy",  "accuracy",
                                           "correct", "scored",  "dropped", "zero_query"};

std::vector<std::string> report_row(const AnalogyReport& r) {
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.2f", 100.0 * r.accuracy);
  return {r.dataset,
          r.method,
          to_string(r.policy),
          acc,
          std::to_string(r.correct),
          std::to_string(r.scored),
          std::to_string(r.dropped),
          std::to_string(r.zero_query)};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_analogy_csv(std::ostream& out, const std::vector<AnalogyReport>& reports) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& r : reports) {
    const auto row = report_row(r);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
  }
}

void write_analogy_table(std::ostream& out, const std::vector<AnalogyReport>& reports) {
  std::vector<std::vector<std::string>> rows{kColumns};
  for (const auto& r : reports) rows.push_back(report_row(r));
  std::vector<std::size_t> width(kColumns.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      out << row[i];
      if (i + 1 < row.size()) out << std::string(width[i] - row[i].size(), ' ');
    }
    out << '\n';
  }
}

}  // namespace metaemb
