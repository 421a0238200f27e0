#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metaemb/distance.hpp"
#include "metaemb/embedding_store.hpp"
#include "metaemb/mtl_regularizer.hpp"
#include "metaemb/recon_loss.hpp"
#include "metaemb/word_pairs.hpp"

namespace metaemb::cli {

struct SourceSpec {
  std::string path;
  std::optional<EmbeddingFormat> format;  // sniffed from the file when unset
};

struct DatasetSpec {
  std::string path;
  std::optional<ScoreRange> range;  // inferred from the data when unset
};

enum class Method { Conc, Avg, Svd, OneToN, Caeme, Daeme, Tae, Mte, Mtl };

std::string to_string(Method m);
Method parse_method(std::string_view s);
bool is_trainable(Method m);

/// Everything a train/export run needs. Settings are flat "key = value"
/// pairs; `train.*` keys map onto TrainConfig, `method.*` keys onto
/// method-specific knobs.
struct RunConfig {
  std::vector<SourceSpec> sources;
  VocabPolicy vocab_policy = VocabPolicy::Intersection;
  std::optional<Method> method;
  ReconLossKind recon_loss = ReconLossKind::SCP;
  SimLossKind sim_loss = SimLossKind::Brier;
  DistanceKind distance = DistanceKind::Cosine;
  TrainConfig train;
  std::optional<Index> k;  // svd / 1ton output width; defaults to min(hidden, rank bound)
  double discrepancy_weight = 1.0;
  std::size_t tae_target = 0;
  std::vector<DatasetSpec> datasets;
  std::string held_out;  // dataset name, or "all" for every leave-one-out split
  std::string output;    // path prefix of the written files
  unsigned jobs = 1;

  /// Sets one key. Throws ConfigError naming the key on an unknown key or a
  /// malformed value. Repeatable keys (source, dataset) append.
  void set(const std::string& key, const std::string& value);
  /// Method-specific required fields. Throws ConfigError.
  void validate() const;
  /// Canonical key/value listing; feeding it back through set() reproduces
  /// this config.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  std::string to_text() const;
};

/// Reads "key = value" lines; '#' starts a comment, blank lines are
/// skipped. Errors carry the file name and line number.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// "path" or "format:path" with format word2vec|glove (or the -text
/// spellings written by to_pairs()).
SourceSpec parse_source_spec(const std::string& text);
/// "path" or "path min max".
DatasetSpec parse_dataset_spec(const std::string& text);

}  // namespace metaemb::cli
