#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metaemb/gradcheck.hpp"
#include "run_config.hpp"

namespace metaemb::cli {

struct IngestOptions {
  std::vector<SourceSpec> sources;
  VocabPolicy policy = VocabPolicy::Intersection;
  std::string output_dir;  // optional copy of the aligned sources
};

struct EvalOptions {
  std::vector<std::string> meta_paths;
  std::vector<DatasetSpec> wordsim;
  std::vector<std::string> analogy;
  std::string candidates;  // switches analogy scoring to provided-list
  DistanceKind measure = DistanceKind::Cosine;
  std::string output;  // report prefix; stdout only when empty
};

struct ExportOptions {
  std::string checkpoint;
  std::vector<SourceSpec> sources;  // overrides the sources recorded in the checkpoint
  std::string output;
};

struct ReportOptions {
  std::vector<std::string> manifests;
  std::string output;
};

int cmd_ingest(const IngestOptions& opts, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_eval(const EvalOptions& opts, std::ostream& out);
int cmd_gradcheck(const GradCheckSpec& spec, std::ostream& out);
int cmd_export(const ExportOptions& opts, std::ostream& out);
int cmd_report(const ReportOptions& opts, std::ostream& out);

}  // namespace metaemb::cli
