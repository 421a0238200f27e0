#include "metaemb/wordsim_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "metaemb/errors.hpp"

namespace metaemb {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw EvaluationError("spearman: sequences differ in length");
  if (x.size() < 2) throw EvaluationError("spearman: need at least two observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw EvaluationError("spearman: undefined for a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport eval_wordsim(const MetaEmbedding& meta, const WordPairDataset& dataset, DistanceKind measure) {
  meta.validate();
  EvalReport report;
  report.dataset = dataset.name;
  report.method = meta.method.str();
  report.measure = measure;

  std::vector<double> model, human;
  for (const auto& p : dataset.pairs) {
    const auto a = meta.vocab->lookup(p.w1);
    const auto b = meta.vocab->lookup(p.w2);
    if (!a || !b || meta.is_flagged(*a) || meta.is_flagged(*b)) {
      ++report.pairs_dropped;
      continue;
    }
    try {
      model.push_back(pair_similarity(measure, meta.matrix.row(*a), meta.matrix.row(*b)));
    } catch (const DistanceError&) {
      ++report.pairs_dropped;
      continue;
    }
    human.push_back(p.y);
    ++report.pairs_used;
  }
  if (report.pairs_used == 0) {
    throw EvaluationError("dataset '" + dataset.name + "': every pair was dropped (out of vocabulary)");
  }
  report.rho_s = spearman(model, human);
  return report;
}

namespace {

std::vector<std::string> report_row(const EvalReport& r) {
  char rho[32];
  std::snprintf(rho, sizeof rho, "%.2f", 100.0 * r.rho_s);
  return {r.dataset, r.method, to_string(r.measure), rho, std::to_string(r.pairs_used),
          std::to_string(r.pairs_dropped)};
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

const std::vector<std::string> kColumns = {"dataset", "method", "measure", "rho_s", "pairs_used", "pairs_dropped"};

}  // namespace

void write_eval_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& r : reports) {
    const auto row = report_row(r);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
  }
}

void write_eval_table(std::ostream& out, const std::vector<EvalReport>& reports) {
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
