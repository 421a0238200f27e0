#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "metaemb/errors.hpp"

using namespace metaemb;
using namespace metaemb::cli;

namespace {

// Flags that map one-to-one onto configuration keys. Values are kept as
// strings and applied through RunConfig::set after the config file, so the
// command line wins and every value is validated by the same code path.
struct FlagBinding {
  const char* flag;
  const char* key;
  const char* help;
  const char* default_value;
};

const FlagBinding kTrainFlags[] = {
    {"--vocab-policy", "vocab_policy", "intersection | union-zero-fill", "intersection"},
    {"--method", "method", "conc | avg | svd | 1ton | caeme | daeme | tae | mte | mtl", ""},
    {"--recon-loss", "recon_loss", "mse | mae | kl | scp", "scp"},
    {"--sim-loss", "sim_loss", "nll | ols | brier (mtl)", "brier"},
    {"--distance", "distance", "manhattan | euclidean | cosine | asymmetric-cosine (mtl)", "cosine"},
    {"--seed", "seed", "master seed; every module derives its streams from it", "13"},
    {"--hidden", "train.hidden", "hidden / meta-embedding width", "200"},
    {"--batch-size", "train.batch_size", "mini-batch size", "32"},
    {"--epochs", "train.epochs", "maximum epochs", "50"},
    {"--lr", "train.learning_rate", "SGD learning rate", "0.1"},
    {"--dropout", "train.dropout", "dropout probability", "0.2"},
    {"--init-mean", "train.init_mean", "weight init mean", "0"},
    {"--init-std", "train.init_std", "weight init standard deviation", "1"},
    {"--patience", "train.patience", "early-stopping patience in epochs (0 disables)", "5"},
    {"--validation-fraction", "train.validation_fraction", "held-out fraction for early stopping", "0.1"},
    {"--lambda", "train.lambda", "reconstruction weight (mtl)", "1"},
    {"--k", "method.k", "output width for svd / 1ton (default: min(hidden, rank bound))", ""},
    {"--discrepancy-weight", "method.discrepancy_weight", "daeme code-agreement weight", "1"},
    {"--tae-target", "method.tae_target", "target source index (tae)", "0"},
    {"--held-out", "held_out", "held-out dataset name, or 'all' for leave-one-out (mtl)", ""},
    {"--output", "output", "output path prefix", ""},
    {"--jobs", "jobs", "concurrent leave-one-out runs / mte branches", "1"},
};

int exit_code(ErrorCategory c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metaemb: word meta-embeddings from multiple pre-trained sources"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "metaemb 0.1.0");

  // ingest
  IngestOptions ingest;
  std::vector<std::string> ingest_sources;
  std::string ingest_policy = "intersection";
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse and align sources; fills the METAEMB_CACHE entry");
  ingest_cmd->add_option("--source", ingest_sources, "[word2vec:|glove:]path, repeatable")->required();
  ingest_cmd->add_option("--vocab-policy", ingest_policy, "intersection | union-zero-fill")->capture_default_str();
  ingest_cmd->add_option("--output-dir", ingest.output_dir, "also write the aligned sources here");

  // train
  std::string config_path;
  std::vector<std::string> train_sources, train_datasets;
  std::vector<std::optional<std::string>> train_values(std::size(kTrainFlags));
  auto* train_cmd = app.add_subcommand("train", "Build a meta-embedding; writes <output>.txt, .ckpt, .manifest.json");
  train_cmd->add_option("--config", config_path, "flat 'key = value' config file; flags override it");
  train_cmd->add_option("--source", train_sources, "[word2vec:|glove:]path, repeatable (replaces config sources)");
  train_cmd->add_option("--dataset", train_datasets, "'path' or 'path min max', repeatable (mtl)");
  for (std::size_t i = 0; i < std::size(kTrainFlags); ++i) {
    auto* opt = train_cmd->add_option(kTrainFlags[i].flag, train_values[i], kTrainFlags[i].help);
    if (*kTrainFlags[i].default_value) opt->default_str(kTrainFlags[i].default_value);
  }

  // eval
  EvalOptions eval;
  std::vector<std::string> eval_wordsim;
  std::string eval_measure = "cosine";
  auto* eval_cmd = app.add_subcommand("eval", "Spearman word-similarity and CosAdd analogy evaluation");
  eval_cmd->add_option("--meta", eval.meta_paths, "meta-embedding file, repeatable")->required();
  eval_cmd->add_option("--wordsim", eval_wordsim, "'path' or 'path min max', repeatable");
  eval_cmd->add_option("--analogy", eval.analogy, "Google/MSR analogy file, repeatable");
  eval_cmd->add_option("--candidates", eval.candidates, "candidate list file (provided-list scoring)");
  eval_cmd->add_option("--measure", eval_measure, "cosine | euclidean | manhattan | asymmetric-cosine")
      ->capture_default_str();
  eval_cmd->add_option("--output", eval.output, "report prefix: <prefix>.{wordsim,analogy}.{csv,txt}");

  // gradcheck
  GradCheckSpec spec;
  std::string corrupt;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every loss and distance kind");
  grad_cmd->add_option("--input-dim", spec.input_dim, "input width (<= 16)")->capture_default_str();
  grad_cmd->add_option("--hidden", spec.hidden_dim, "shared hidden width (<= 16)")->capture_default_str();
  grad_cmd->add_option("--tower-hidden", spec.tower_hidden, "tower hidden width (<= 16)")->capture_default_str();
  grad_cmd->add_option("--tower-out", spec.tower_out, "tower output width (<= 16)")->capture_default_str();
  grad_cmd->add_option("--batch", spec.batch, "batch size (<= 8)")->capture_default_str();
  grad_cmd->add_option("--epsilon", spec.epsilon, "central-difference step")->capture_default_str();
  grad_cmd->add_option("--tolerance", spec.tolerance, "max relative error")->capture_default_str();
  grad_cmd->add_option("--dropout", spec.dropout_p, "dropout (masks held fixed)")->capture_default_str();
  grad_cmd->add_option("--seed", spec.seed, "seed")->capture_default_str();
  grad_cmd->add_option("--corrupt-gradient", corrupt, "perturb this parameter's analytic gradient")->group("");

  // export
  ExportOptions exp;
  std::vector<std::string> export_sources;
  auto* export_cmd = app.add_subcommand("export", "Re-export a meta-embedding from a checkpoint");
  export_cmd->add_option("--checkpoint", exp.checkpoint, "checkpoint written by train")->required();
  export_cmd->add_option("--source", export_sources, "override the sources recorded in the checkpoint");
  export_cmd->add_option("--output", exp.output, "word2vec text output")->required();

  // report
  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Summarize run manifests");
  report_cmd->add_option("manifests", report.manifests, "manifest JSON files")->required();
  report_cmd->add_option("--output", report.output, "also write the summary as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorCategory::Usage);
  }

  try {
    if (*ingest_cmd) {
      for (const auto& s : ingest_sources) ingest.sources.push_back(parse_source_spec(s));
      ingest.policy = parse_vocab_policy(ingest_policy);
      return cmd_ingest(ingest, std::cout);
    }
    if (*train_cmd) {
      RunConfig cfg;
      if (!config_path.empty()) {
        for (const auto& [k, v] : read_config_file(config_path)) cfg.set(k, v);
      }
      if (!train_sources.empty()) {
        cfg.sources.clear();
        for (const auto& s : train_sources) cfg.set("source", s);
      }
      if (!train_datasets.empty()) {
        cfg.datasets.clear();
        for (const auto& d : train_datasets) cfg.set("dataset", d);
      }
      for (std::size_t i = 0; i < std::size(kTrainFlags); ++i) {
        if (train_values[i]) cfg.set(kTrainFlags[i].key, *train_values[i]);
      }
      return cmd_train(cfg, std::cout);
    }
    if (*eval_cmd) {
      for (const auto& d : eval_wordsim) eval.wordsim.push_back(parse_dataset_spec(d));
      eval.measure = parse_distance_kind(eval_measure);
      return cmd_eval(eval, std::cout);
    }
    if (*grad_cmd) {
      if (!corrupt.empty()) spec.corrupt_parameter = corrupt;
      return cmd_gradcheck(spec, std::cout);
    }
    if (*export_cmd) {
      for (const auto& s : export_sources) exp.sources.push_back(parse_source_spec(s));
      return cmd_export(exp, std::cout);
    }
    if (*report_cmd) return cmd_report(report, std::cout);
  } catch (const Error& e) {
    std::cerr << "metaemb: error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "metaemb: error: " << e.what() << '\n';
    return exit_code(ErrorCategory::Data);
  } catch (const std::exception& e) {
    std::cerr << "metaemb: internal error: " << e.what() << '\n';
    return exit_code(ErrorCategory::Training);
  }
  return exit_code(ErrorCategory::Usage);
}
