#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metaemb {

struct WordPair {
  std::string w1;
  std::string w2;
  double raw = 0.0;
  double y = 0.0;  // (raw - min) / (max - min)
};

struct ScoreRange {
  double min = 0.0;
  double max = 1.0;
};

/// Human-rated word pairs with scores mapped to [0, 1].
struct WordPairDataset {
  std::string name;
  std::vector<WordPair> pairs;
  ScoreRange range;
  bool range_inferred = false;

  std::size_t size() const noexcept { return pairs.size(); }
};

/// Affine map of raw scores onto [0, 1]. Throws NormalizationError when
/// max <= min or a score lies outside [min, max].
std::vector<double> normalize_scores(std::span<const double> raw, double min, double max);

/// One record per line: "word1 SEP word2 SEP score" with SEP a tab or a
/// comma (whitespace is accepted when neither occurs). Lines starting with
/// '#' and blank lines are skipped; a first record whose score is not
/// numeric is treated as a column header. Without `range` the observed
/// min/max is used and `range_inferred` is set.
WordPairDataset parse_word_pairs(std::istream& in, const std::string& name,
                                 std::optional<ScoreRange> range = std::nullopt);
WordPairDataset load_word_pairs(const std::filesystem::path& path, std::optional<ScoreRange> range = std::nullopt,
                                std::optional<std::string> name = std::nullopt);

}  // namespace metaemb
