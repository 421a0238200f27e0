#include "metaemb/word_pairs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "metaemb/errors.hpp"

namespace metaemb {

std::vector<double> normalize_scores(std::span<const double> raw, double min, double max) {
  if (!(max > min)) throw NormalizationError("score range must satisfy max > min");
  std::vector<double> y;
  y.reserve(raw.size());
  for (double r : raw) {
    if (r < min || r > max) {
      throw NormalizationError("score " + std::to_string(r) + " outside range [" + std::to_string(min) + ", " +
                               std::to_string(max) + "]");
    }
    y.push_back((r - min) / (max - min));
  }
  return y;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_record(std::string_view line) {
  std::vector<std::string_view> out;
  char sep = 0;
  if (line.find('\t') != std::string_view::npos) {
    sep = '\t';
  } else if (line.find(',') != std::string_view::npos) {
    sep = ',';
  }
  if (sep) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(sep, start);
      out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && line[i] == ' ') ++i;
      const std::size_t begin = i;
      while (i < line.size() && line[i] != ' ') ++i;
      if (i > begin) out.push_back(line.substr(begin, i - begin));
    }
  }
  return out;
}

bool to_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

WordPairDataset parse_word_pairs(std::istream& in, const std::string& name, std::optional<ScoreRange> range) {
  WordPairDataset ds;
  ds.name = name;
  std::string line;
  std::size_t line_no = 0;
  bool seen_record = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_record(body);
    if (fields.size() < 3 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(name, line_no, "expected word1, word2 and score");
    }
    double score = 0.0;
    if (!to_double(fields[2], score)) {
      if (!seen_record) {
        seen_record = true;  // header row
        continue;
      }
      throw ParseError(name, line_no, "non-numeric score '" + std::string(fields[2]) + "'");
    }
    seen_record = true;
    ds.pairs.push_back({std::string(fields[0]), std::string(fields[1]), score, 0.0});
  }
  if (ds.pairs.empty()) throw ParseError(name, line_no, "no word pairs found");

  std::vector<double> raw;
  raw.reserve(ds.pairs.size());
  for (const auto& p : ds.pairs) raw.push_back(p.raw);
  if (range) {
    ds.range = *range;
  } else {
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    ds.range = {*lo, *hi};
    ds.range_inferred = true;
  }
  const auto y = normalize_scores(raw, ds.range.min, ds.range.max);
  for (std::size_t i = 0; i < y.size(); ++i) ds.pairs[i].y = y[i];
  return ds;
}

WordPairDataset load_word_pairs(const std::filesystem::path& path, std::optional<ScoreRange> range,
                                std::optional<std::string> name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word-pair file " + path.string());
  auto ds = parse_word_pairs(in, path.string(), range);
  ds.name = name ? *name : path.stem().string();
  return ds;
}

}  // namespace metaemb
