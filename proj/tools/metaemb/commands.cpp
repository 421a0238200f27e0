#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "artifacts.hpp"
#include "metaemb/analogy_eval.hpp"
#include "metaemb/autoencoder_meta.hpp"
#include "metaemb/baselines.hpp"
#include "metaemb/errors.hpp"
#include "metaemb/target_autoencoder.hpp"
#include "metaemb/wordsim_eval.hpp"

namespace metaemb::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// ---- inputs ----------------------------------------------------------------

struct InputRecord {
  std::string kind;  // source | dataset | checkpoint
  std::string path;
  std::string digest;
};

struct LoadedEnsemble {
  EmbeddingEnsemble ensemble;
  std::vector<InputRecord> inputs;
  std::vector<std::string> warnings;
  std::string cache_key;
  bool from_cache = false;
};

EmbeddingFormat format_of(const SourceSpec& s) {
  return s.format ? *s.format : detect_embedding_format(s.path);
}

std::optional<fs::path> cache_root() {
  const char* env = std::getenv("METAEMB_CACHE");
  if (!env || !*env) return std::nullopt;
  return fs::path(env);
}

EmbeddingEnsemble read_cached(const fs::path& dir, std::size_t count) {
  std::vector<EmbeddingSource> sources;
  for (std::size_t i = 0; i < count; ++i) {
    sources.push_back(load_text_embeddings(dir / ("source" + std::to_string(i) + ".txt"), EmbeddingFormat::Word2VecText));
  }
  std::ifstream names(dir / "names.txt");
  for (auto& s : sources) std::getline(names, s.name);
  return EmbeddingEnsemble(std::move(sources));
}

void write_aligned(const fs::path& dir, const EmbeddingEnsemble& ens) {
  fs::create_directories(dir);
  std::ofstream names(dir / "names.txt");
  for (std::size_t i = 0; i < ens.source_count(); ++i) {
    save_word2vec_text(dir / ("source" + std::to_string(i) + ".txt"), ens.vocab(), ens.source(i).rows);
    names << ens.source(i).name << '\n';
  }
}

LoadedEnsemble load_ensemble(const std::vector<SourceSpec>& specs, VocabPolicy policy) {
  if (specs.empty()) throw ConfigError("no embedding sources given");
  std::vector<InputRecord> inputs;
  std::string key_material = to_string(policy);
  std::vector<EmbeddingFormat> formats;
  for (const auto& s : specs) {
    const auto fmt = format_of(s);
    formats.push_back(fmt);
    inputs.push_back({"source", s.path, git_blob_digest(s.path)});
    key_material += "\n" + to_string(fmt) + " " + inputs.back().digest;
  }
  const std::string key = git_blob_digest_bytes(key_material).substr(0, 16);

  const auto root = cache_root();
  if (root && fs::exists(*root / key / "complete")) {
    return {read_cached(*root / key, specs.size()), inputs, {}, key, true};
  }

  std::vector<std::string> warnings;
  std::vector<EmbeddingSource> raw;
  for (std::size_t i = 0; i < specs.size(); ++i) raw.push_back(load_text_embeddings(specs[i].path, formats[i], &warnings));
  EmbeddingEnsemble ens = raw.size() == 1 ? EmbeddingEnsemble(std::move(raw)) : align_vocabulary(std::move(raw), policy);

  if (root) {
    // Written under a scratch name and renamed so readers never see a partial entry.
    const fs::path scratch = *root / (key + ".partial");
    fs::remove_all(scratch);
    write_aligned(scratch, ens);
    std::ofstream(scratch / "complete") << key << '\n';
    std::error_code ec;
    fs::rename(scratch, *root / key, ec);
    if (ec) fs::remove_all(scratch);
  }
  return {std::move(ens), inputs, warnings, key, false};
}

std::vector<WordPairDataset> load_datasets(const std::vector<DatasetSpec>& specs, std::vector<InputRecord>& inputs) {
  std::vector<WordPairDataset> out;
  for (const auto& d : specs) {
    out.push_back(load_word_pairs(d.path, d.range));
    inputs.push_back({"dataset", d.path, git_blob_digest(d.path)});
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (out[i].name == out[j].name) throw ConfigError("two datasets share the name '" + out[i].name + "'");
    }
  }
  return out;
}

// ---- method dispatch -------------------------------------------------------

struct RunOutcome {
  MetaEmbedding meta;
  std::optional<Checkpoint> checkpoint;
  std::vector<std::pair<std::string, TrainHistory>> histories;
  json extras = json::object();
};

Index default_k(const RunConfig& cfg, const EmbeddingEnsemble& ens, Method m) {
  if (cfg.k) return *cfg.k;
  Index k = cfg.train.hidden_dim();
  if (m == Method::Svd) k = std::min({k, ens.word_count(), ens.total_dim()});
  return k;
}

Checkpoint one_to_n_checkpoint(const OneToNModel& model) {
  Checkpoint c;
  c.kind = "1ton";
  c.matrices.emplace_back("meta", model.meta);
  for (std::size_t i = 0; i < model.projections.size(); ++i) {
    c.matrices.emplace_back("projection" + std::to_string(i), model.projections[i]);
  }
  return c;
}

RunOutcome run_method(const RunConfig& cfg, const EmbeddingEnsemble& ens, const std::vector<WordPairDataset>& datasets,
                      const std::string& held_out) {
  const Method m = *cfg.method;
  RunOutcome r;
  switch (m) {
    case Method::Conc:
      r.meta = meta_conc(ens);
      break;
    case Method::Avg:
      r.meta = meta_avg(ens);
      break;
    case Method::Svd:
      r.meta = meta_svd(ens, default_k(cfg, ens, m));
      break;
    case Method::OneToN: {
      auto res = meta_1ton(ens, default_k(cfg, ens, m), cfg.train);
      r.meta = std::move(res.meta);
      r.checkpoint = one_to_n_checkpoint(res.model);
      r.histories.emplace_back("1ton", std::move(res.history));
      break;
    }
    case Method::Caeme:
    case Method::Daeme: {
      auto res = m == Method::Caeme ? train_caeme(ens, cfg.recon_loss, cfg.train)
                                    : train_daeme(ens, cfg.recon_loss, cfg.train, cfg.discrepancy_weight);
      r.meta = std::move(res.meta);
      r.checkpoint = to_checkpoint(res.model);
      r.histories.emplace_back(to_string(m), std::move(res.history));
      break;
    }
    case Method::Tae: {
      auto res = train_tae(ens, cfg.tae_target, cfg.recon_loss, cfg.train);
      r.meta = tae_meta(res.model, ens);
      r.checkpoint = to_checkpoint(std::vector<TaeModel>{res.model}, "tae");
      r.histories.emplace_back("tae", std::move(res.history));
      break;
    }
    case Method::Mte: {
      auto res = mte_meta(ens, cfg.recon_loss, cfg.train, cfg.jobs);
      r.meta = std::move(res.meta);
      r.checkpoint = to_checkpoint(res.models, "mte");
      for (std::size_t t = 0; t < res.histories.size(); ++t) {
        r.histories.emplace_back("tae" + std::to_string(t), std::move(res.histories[t]));
      }
      break;
    }
    case Method::Mtl: {
      const WordPairDataset* test = nullptr;
      std::vector<WordPairDataset> train_sets;
      for (const auto& d : datasets) {
        if (d.name == held_out) {
          test = &d;
        } else {
          train_sets.push_back(d);
        }
      }
      if (!test) throw ConfigError("held_out '" + held_out + "' does not name a dataset");
      auto res = train_mtl(train_sets, *test, ens, {cfg.recon_loss, cfg.sim_loss, cfg.distance}, cfg.train);
      r.meta = std::move(res.meta);
      r.checkpoint = to_checkpoint(res.model);
      r.histories.emplace_back("mtl", std::move(res.history));
      r.extras["held_out"] = held_out;
      r.extras["train_pairs"] = res.train_pairs;
      r.extras["dropped_pairs"] = res.dropped_pairs;
      r.extras["heldout_pairs"] = res.heldout_pairs;
      break;
    }
  }
  return r;
}

json history_json(const std::string& name, const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_loss", e.validation_loss},
                      {"batch_loss", e.batch_loss}});
  }
  return {{"name", name}, {"best_epoch", h.best_epoch}, {"stopped_early", h.stopped_early}, {"epochs", epochs}};
}

json inputs_json(const std::vector<InputRecord>& inputs) {
  json out = json::array();
  for (const auto& i : inputs) out.push_back({{"kind", i.kind}, {"path", i.path}, {"digest", i.digest}});
  return out;
}

json config_json(const RunConfig& cfg) {
  json out = json::array();
  for (const auto& [k, v] : cfg.to_pairs()) out.push_back({k, v});
  return out;
}

std::string export_text(const MetaEmbedding& meta) {
  std::ostringstream s;
  write_word2vec_text(s, *meta.vocab, meta.matrix);
  return s.str();
}

// Stages the export, checkpoint and manifest for one run under `prefix`.
void stage_run(OutputSet& outputs, const std::string& prefix, const RunConfig& cfg, const LoadedEnsemble& loaded,
               const std::vector<InputRecord>& inputs, RunOutcome& run) {
  const std::string embedding = prefix + ".txt";
  const std::string text = export_text(run.meta);
  outputs.write(embedding, [&](std::ostream& o) { o << text; });

  json files = {{"embedding", embedding}, {"embedding_digest", git_blob_digest_bytes(text)}};
  if (run.checkpoint) {
    run.checkpoint->metadata.emplace_back("config", cfg.to_text());
    run.checkpoint->metadata.emplace_back("method_tag", run.meta.method.str());
    const std::string ckpt = prefix + ".ckpt";
    outputs.write(ckpt, [&](std::ostream& o) { write_checkpoint(o, *run.checkpoint); });
    files["checkpoint"] = ckpt;
  }
  std::size_t flagged = std::count(run.meta.flagged.begin(), run.meta.flagged.end(), true);

  json manifest = {{"tool", "metaemb"},
                   {"version", kToolVersion},
                   {"command", "train"},
                   {"config", config_json(cfg)},
                   {"config_text", cfg.to_text()},
                   {"inputs", inputs_json(inputs)},
                   {"ensemble_cache_key", loaded.cache_key},
                   {"method_tag", run.meta.method.str()},
                   {"vocab_size", run.meta.word_count()},
                   {"dim", run.meta.dim()},
                   {"flagged_rows", flagged},
                   {"outputs", files}};
  json histories = json::array();
  for (const auto& [name, h] : run.histories) histories.push_back(history_json(name, h));
  manifest["histories"] = histories;
  if (!run.extras.empty()) manifest["extras"] = run.extras;
  if (!loaded.warnings.empty()) manifest["warnings"] = loaded.warnings;
  outputs.write(prefix + ".manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
}

void print_summary(std::ostream& out, const std::string& prefix, const RunOutcome& run) {
  out << prefix << ": " << run.meta.method.str() << ", " << run.meta.word_count() << " words x " << run.meta.dim()
      << " dims";
  for (const auto& [name, h] : run.histories) {
    if (h.epochs.empty()) continue;
    char buf[128];
    std::snprintf(buf, sizeof buf, "; %s: %zu epochs, best %d, final train loss %.6g", name.c_str(), h.epochs.size(),
                  h.best_epoch, h.epochs.back().train_loss);
    out << buf;
  }
  out << '\n';
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

MetaEmbedding load_meta(const std::string& path) {
  const auto src = load_text_embeddings(path, detect_embedding_format(path));
  MetaEmbedding meta{src.rows, src.vocab, {src.name, "", "", ""}, src.flagged};
  meta.validate();
  return meta;
}

}  // namespace

// ---- commands --------------------------------------------------------------

int cmd_ingest(const IngestOptions& opts, std::ostream& out) {
  if (opts.sources.size() < 2) throw ConfigError("ingest needs at least two sources");
  const auto loaded = load_ensemble(opts.sources, opts.policy);
  if (!opts.output_dir.empty()) {
    OutputSet outputs;
    const fs::path dir(opts.output_dir);
    for (std::size_t i = 0; i < loaded.ensemble.source_count(); ++i) {
      const auto& s = loaded.ensemble.source(i);
      outputs.write(dir / (s.name + ".aligned.txt"),
                    [&](std::ostream& o) { write_word2vec_text(o, loaded.ensemble.vocab(), s.rows); });
    }
    outputs.commit();
  }
  const auto flagged = loaded.ensemble.flagged_rows();
  out << "aligned " << loaded.ensemble.source_count() << " sources (" << to_string(opts.policy) << "): "
      << loaded.ensemble.word_count() << " words, total dim " << loaded.ensemble.total_dim() << ", "
      << std::count(flagged.begin(), flagged.end(), true) << " flagged rows"
      << (loaded.from_cache ? " [cache hit " : " [cache key ") << loaded.cache_key << "]\n";
  for (std::size_t i = 0; i < loaded.ensemble.source_count(); ++i) {
    const auto& s = loaded.ensemble.source(i);
    out << "  " << s.name << ": dim " << s.dim() << ", digest " << loaded.inputs[i].digest << '\n';
  }
  for (const auto& w : loaded.warnings) out << "warning: " << w << '\n';
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  config.validate();
  auto loaded = load_ensemble(config.sources, config.vocab_policy);
  std::vector<InputRecord> inputs = loaded.inputs;
  const auto datasets = load_datasets(config.datasets, inputs);

  OutputSet outputs;
  if (config.method == Method::Mtl && config.held_out == "all") {
    // Leave-one-out: one independent run per held-out dataset, up to `jobs` at a time.
    std::vector<RunOutcome> runs(datasets.size());
    for (std::size_t start = 0; start < datasets.size(); start += config.jobs) {
      std::vector<std::future<RunOutcome>> batch;
      const std::size_t end = std::min(datasets.size(), start + config.jobs);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(std::async(std::launch::async, [&, i] {
          return run_method(config, loaded.ensemble, datasets, datasets[i].name);
        }));
      }
      for (std::size_t i = start; i < end; ++i) runs[i] = batch[i - start].get();
    }
    for (std::size_t i = 0; i < datasets.size(); ++i) {
      const std::string prefix = config.output + "." + datasets[i].name;
      stage_run(outputs, prefix, config, loaded, inputs, runs[i]);
      print_summary(out, prefix, runs[i]);
    }
  } else {
    auto run = run_method(config, loaded.ensemble, datasets, config.held_out);
    stage_run(outputs, config.output, config, loaded, inputs, run);
    print_summary(out, config.output, run);
  }
  outputs.commit();
  return 0;
}

int cmd_eval(const EvalOptions& opts, std::ostream& out) {
  if (opts.meta_paths.empty()) throw ConfigError("eval needs at least one --meta file");
  if (opts.wordsim.empty() && opts.analogy.empty()) throw ConfigError("eval needs --wordsim and/or --analogy datasets");

  std::vector<MetaEmbedding> metas;
  for (const auto& p : opts.meta_paths) metas.push_back(load_meta(p));
  std::vector<WordPairDataset> wordsim;
  for (const auto& d : opts.wordsim) wordsim.push_back(load_word_pairs(d.path, d.range));
  std::vector<AnalogyDataset> analogy;
  std::vector<std::string> candidates;
  if (!opts.candidates.empty()) candidates = load_candidate_list(opts.candidates);
  for (const auto& p : opts.analogy) {
    analogy.push_back(load_analogy(p));
    if (!opts.candidates.empty()) {
      analogy.back().policy = CandidatePolicy::ProvidedList;
      analogy.back().candidates = candidates;
    }
  }

  std::vector<EvalReport> ws_reports;
  std::vector<AnalogyReport> an_reports;
  for (const auto& meta : metas) {
    for (const auto& d : wordsim) ws_reports.push_back(eval_wordsim(meta, d, opts.measure));
    for (const auto& d : analogy) an_reports.push_back(eval_analogy(meta, d));
  }

  OutputSet outputs;
  if (!ws_reports.empty()) {
    write_eval_table(out, ws_reports);
    if (!opts.output.empty()) {
      outputs.write(opts.output + ".wordsim.csv", [&](std::ostream& o) { write_eval_csv(o, ws_reports); });
      outputs.write(opts.output + ".wordsim.txt", [&](std::ostream& o) { write_eval_table(o, ws_reports); });
    }
  }
  if (!an_reports.empty()) {
    if (!ws_reports.empty()) out << '\n';
    write_analogy_table(out, an_reports);
    if (!opts.output.empty()) {
      outputs.write(opts.output + ".analogy.csv", [&](std::ostream& o) { write_analogy_csv(o, an_reports); });
      outputs.write(opts.output + ".analogy.txt", [&](std::ostream& o) { write_analogy_table(o, an_reports); });
    }
  }
  outputs.commit();
  return 0;
}

int cmd_gradcheck(const GradCheckSpec& spec, std::ostream& out) {
  const auto suite = run_gradcheck_suite(spec);
  for (const auto& c : suite.cases) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %-40s max_rel_err %.3e  params %zu  worst %s\n", c.passed ? "PASS" : "FAIL",
                  c.name.c_str(), c.report.max_relative_error, c.report.parameters_checked,
                  c.report.worst_parameter.c_str());
    out << buf;
  }
  const auto* worst = suite.worst();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: %zu cases, max relative error %.3e (%s), tolerance %.1e\n",
                suite.passed() ? "gradcheck passed" : "gradcheck FAILED", suite.cases.size(),
                worst ? worst->report.max_relative_error : 0.0, worst ? worst->name.c_str() : "-", spec.tolerance);
  out << buf;
  return suite.passed() ? 0 : static_cast<int>(ErrorCategory::Training);
}

int cmd_export(const ExportOptions& opts, std::ostream& out) {
  if (opts.checkpoint.empty() || opts.output.empty()) throw ConfigError("export needs --checkpoint and --output");
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  RunConfig cfg;
  if (const auto* text = ckpt.find_metadata("config")) {
    std::istringstream in(*text);
    for (std::string line; std::getline(in, line);) {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) cfg.set(line.substr(0, eq), line.substr(eq + 3));
    }
  }
  if (!opts.sources.empty()) cfg.sources = opts.sources;

  const auto loaded = load_ensemble(cfg.sources, cfg.vocab_policy);
  const auto& ens = loaded.ensemble;
  MetaEmbedding meta;
  if (ckpt.kind == "1ton") {
    const Index k = ckpt.matrix("meta").cols();
    meta = {ckpt.matrix("meta"), ens.vocab_ptr(), {"1ton", "l2", config_digest(cfg.train), "k=" + std::to_string(k)},
            ens.flagged_rows()};
  } else if (ckpt.kind == "caeme" || ckpt.kind == "daeme") {
    meta = aeme_meta(aeme_from_checkpoint(ckpt), ens, cfg.train);
  } else if (ckpt.kind == "tae") {
    meta = tae_meta(tae_from_checkpoint(ckpt).front(), ens);
  } else if (ckpt.kind == "mte") {
    meta = mte_combine(tae_from_checkpoint(ckpt), ens, cfg.train);
  } else if (ckpt.kind == "mtl") {
    meta = mtl_meta(mtl_from_checkpoint(ckpt), ens, cfg.train);
  } else {
    throw FormatError(opts.checkpoint, 0, "unknown checkpoint kind '" + ckpt.kind + "'");
  }
  meta.validate();
  if (const auto* tag = ckpt.find_metadata("method_tag")) {
    if (*tag != meta.method.str()) out << "note: checkpoint tag " << *tag << " differs from " << meta.method.str() << '\n';
  }
  OutputSet outputs;
  outputs.write(opts.output, [&](std::ostream& o) { write_word2vec_text(o, *meta.vocab, meta.matrix); });
  outputs.commit();
  out << "exported " << meta.word_count() << " x " << meta.dim() << " (" << meta.method.str() << ") to " << opts.output
      << '\n';
  return 0;
}

int cmd_report(const ReportOptions& opts, std::ostream& out) {
  if (opts.manifests.empty()) throw ConfigError("report needs at least one manifest");
  std::vector<std::vector<std::string>> rows = {
      {"run", "method", "words", "dim", "history", "epochs", "best_epoch", "final_train_loss", "best_validation_loss"}};
  for (const auto& path : opts.manifests) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path + "'");
    json m;
    try {
      in >> m;
    } catch (const json::exception& e) {
      throw FormatError(path, 0, std::string("invalid manifest JSON: ") + e.what());
    }
    const std::string run = m.value("outputs", json::object()).value("embedding", path);
    const std::string method = m.value("method_tag", "");
    const std::string words = std::to_string(m.value("vocab_size", 0));
    const std::string dim = std::to_string(m.value("dim", 0));
    const auto histories = m.value("histories", json::array());
    if (histories.empty()) rows.push_back({run, method, words, dim, "-", "0", "-", "-", "-"});
    for (const auto& h : histories) {
      const auto& epochs = h.at("epochs");
      std::string final_loss = "-", best_val = "-";
      char buf[64];
      if (!epochs.empty()) {
        std::snprintf(buf, sizeof buf, "%.6g", epochs.back().at("train_loss").get<double>());
        final_loss = buf;
      }
      for (const auto& e : epochs) {
        if (e.at("epoch").get<int>() == h.at("best_epoch").get<int>()) {
          std::snprintf(buf, sizeof buf, "%.6g", e.at("validation_loss").get<double>());
          best_val = buf;
        }
      }
      rows.push_back({run, method, words, dim, h.at("name").get<std::string>(), std::to_string(epochs.size()),
                      std::to_string(h.at("best_epoch").get<int>()), final_loss, best_val});
    }
  }

  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << (i ? "  " : "") << r[i];
      if (i + 1 < r.size()) out << std::string(width[i] - r[i].size(), ' ');
    }
    out << '\n';
  }
  if (!opts.output.empty()) {
    OutputSet outputs;
    outputs.write(opts.output, [&](std::ostream& o) {
      for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << csv_field(r[i]);
        o << '\n';
      }
    });
    outputs.commit();
  }
  return 0;
}

}  // namespace metaemb::cli
