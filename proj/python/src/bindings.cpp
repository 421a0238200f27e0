#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "metaemb/analogy_eval.hpp"
#include "metaemb/autoencoder_meta.hpp"
#include "metaemb/baselines.hpp"
#include "metaemb/embedding_store.hpp"
#include "metaemb/errors.hpp"
#include "metaemb/gradcheck.hpp"
#include "metaemb/mtl_regularizer.hpp"
#include "metaemb/target_autoencoder.hpp"
#include "metaemb/wordsim_eval.hpp"

namespace py = pybind11;
using namespace metaemb;

namespace {

VocabularyPtr make_vocab(std::vector<std::string> words) {
  return std::make_shared<const Vocabulary>(std::move(words));
}

EmbeddingSource make_source(std::string name, std::vector<std::string> words, Matrix rows) {
  if (rows.rows() != static_cast<Index>(words.size())) throw ContractError("rows and words differ in length");
  EmbeddingSource s;
  s.name = std::move(name);
  s.vocab = make_vocab(std::move(words));
  s.rows = std::move(rows);
  s.flagged.assign(s.vocab->size(), false);
  return s;
}

MetaEmbedding make_meta(std::vector<std::string> words, Matrix matrix, std::string method) {
  MetaEmbedding m;
  m.vocab = make_vocab(std::move(words));
  m.matrix = std::move(matrix);
  m.method.method = std::move(method);
  m.flagged.assign(m.vocab->size(), false);
  m.validate();
  return m;
}

MetaEmbedding load_meta(const std::filesystem::path& path) {
  auto src = load_text_embeddings(path, detect_embedding_format(path));
  MetaEmbedding m;
  m.vocab = src.vocab;
  m.matrix = std::move(src.rows);
  m.flagged = std::move(src.flagged);
  m.method.method = path.stem().string();
  return m;
}

TrainConfig make_config(Index hidden, Index batch_size, int epochs, double learning_rate, double dropout,
                        double init_mean, double init_std, std::uint64_t seed, int patience,
                        double validation_fraction, double lambda) {
  TrainConfig c;
  c.hidden_dims = {hidden};
  c.batch_size = batch_size;
  c.epochs = epochs;
  c.learning_rate = learning_rate;
  c.dropout_p = dropout;
  c.init_mean = init_mean;
  c.init_std = init_std;
  c.seed = seed;
  c.early_stop_patience = patience;
  c.validation_fraction = validation_fraction;
  c.lambda = lambda;
  c.validate();
  return c;
}

py::list history_list(const TrainHistory& h) {
  py::list out;
  for (const auto& e : h.epochs) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["train_loss"] = e.train_loss;
    d["validation_loss"] = e.validation_loss;
    d["batch_loss"] = e.batch_loss;
    out.append(d);
  }
  return out;
}

py::dict trained(const MetaEmbedding& meta, const TrainHistory& history) {
  py::dict d;
  d["meta"] = meta;
  d["history"] = history_list(history);
  d["best_epoch"] = history.best_epoch;
  return d;
}

py::dict wordsim_dict(const EvalReport& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["method"] = r.method;
  d["measure"] = to_string(r.measure);
  d["rho_s"] = r.rho_s;
  d["pairs_used"] = r.pairs_used;
  d["pairs_dropped"] = r.pairs_dropped;
  return d;
}

py::dict analogy_dict(const AnalogyReport& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["method"] = r.method;
  d["policy"] = to_string(r.policy);
  d["accuracy"] = r.accuracy;
  d["correct"] = r.correct;
  d["scored"] = r.scored;
  d["dropped"] = r.dropped;
  d["zero_query"] = r.zero_query;
  py::dict rel;
  for (const auto& [name, s] : r.per_relation) rel[py::str(name)] = s.accuracy();
  d["per_relation"] = rel;
  return d;
}

}  // namespace

PYBIND11_MODULE(_metaemb, m) {
  m.doc() = "Word meta-embeddings from multiple pre-trained sources";

  static py::exception<Error> base(m, "MetaembError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = base;
      exc.attr("category") = static_cast<int>(e.category());
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  py::class_<EmbeddingSource>(m, "EmbeddingSource")
      .def(py::init(&make_source), py::arg("name"), py::arg("words"), py::arg("rows"))
      .def_readonly("name", &EmbeddingSource::name)
      .def_property_readonly("words", [](const EmbeddingSource& s) { return s.vocab->tokens(); })
      .def_readonly("rows", &EmbeddingSource::rows)
      .def_readonly("flagged", &EmbeddingSource::flagged)
      .def_property_readonly("dim", &EmbeddingSource::dim)
      .def("__len__", [](const EmbeddingSource& s) { return s.word_count(); });

  py::class_<EmbeddingEnsemble>(m, "Ensemble")
      .def_property_readonly("words", [](const EmbeddingEnsemble& e) { return e.vocab().tokens(); })
      .def_property_readonly("dims", &EmbeddingEnsemble::dims)
      .def_property_readonly("sources", &EmbeddingEnsemble::sources)
      .def_property_readonly("flagged", &EmbeddingEnsemble::flagged_rows)
      .def("concat", [](const EmbeddingEnsemble& e) { return concat_rows(e); })
      .def("normalized", [](const EmbeddingEnsemble& e) { return normalize_l2(e); })
      .def("__len__", &EmbeddingEnsemble::word_count);

  py::class_<MetaEmbedding>(m, "MetaEmbedding")
      .def(py::init(&make_meta), py::arg("words"), py::arg("matrix"), py::arg("method") = "external")
      .def_property_readonly("words", [](const MetaEmbedding& e) { return e.vocab->tokens(); })
      .def_readonly("matrix", &MetaEmbedding::matrix)
      .def_readonly("flagged", &MetaEmbedding::flagged)
      .def_property_readonly("method", [](const MetaEmbedding& e) { return e.method.str(); })
      .def_property_readonly("dim", &MetaEmbedding::dim)
      .def("rows", &MetaEmbedding::rows_for, py::arg("words"))
      .def("save", [](const MetaEmbedding& e, const std::filesystem::path& p) { save_word2vec_text(p, *e.vocab, e.matrix); },
           py::arg("path"))
      .def("__len__", &MetaEmbedding::word_count);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init(&make_config), py::arg("hidden") = 200, py::arg("batch_size") = 32, py::arg("epochs") = 50,
           py::arg("learning_rate") = 0.1, py::arg("dropout") = 0.2, py::arg("init_mean") = 0.0,
           py::arg("init_std") = 1.0, py::arg("seed") = 13, py::arg("patience") = 5,
           py::arg("validation_fraction") = 0.1, py::arg("lam") = 1.0)
      .def_property_readonly("hidden", &TrainConfig::hidden_dim)
      .def_readonly("batch_size", &TrainConfig::batch_size)
      .def_readonly("epochs", &TrainConfig::epochs)
      .def_readonly("learning_rate", &TrainConfig::learning_rate)
      .def_readonly("dropout", &TrainConfig::dropout_p)
      .def_readonly("seed", &TrainConfig::seed);

  py::class_<WordPairDataset>(m, "WordPairDataset")
      .def_readonly("name", &WordPairDataset::name)
      .def_readonly("range_inferred", &WordPairDataset::range_inferred)
      .def_property_readonly("pairs",
                             [](const WordPairDataset& d) {
                               py::list out;
                               for (const auto& p : d.pairs) out.append(py::make_tuple(p.w1, p.w2, p.y));
                               return out;
                             })
      .def("__len__", &WordPairDataset::size);

  m.def(
      "load_embeddings",
      [](const std::filesystem::path& path, std::optional<std::string> format) {
        const auto f = format ? parse_embedding_format(*format) : detect_embedding_format(path);
        return load_text_embeddings(path, f);
      },
      py::arg("path"), py::arg("format") = py::none(),
      "Read a word2vec or GloVe text table; the format is sniffed when omitted.");
  m.def(
      "align",
      [](std::vector<EmbeddingSource> sources, const std::string& policy) {
        if (sources.size() == 1) return EmbeddingEnsemble(std::move(sources));
        return align_vocabulary(std::move(sources), parse_vocab_policy(policy));
      },
      py::arg("sources"), py::arg("policy") = "intersection");
  m.def("load_meta", &load_meta, py::arg("path"));
  m.def(
      "load_word_pairs",
      [](const std::filesystem::path& path, std::optional<std::pair<double, double>> range) {
        std::optional<ScoreRange> r;
        if (range) r = ScoreRange{range->first, range->second};
        return load_word_pairs(path, r);
      },
      py::arg("path"), py::arg("score_range") = py::none());

  m.def("conc", &meta_conc, py::arg("ensemble"));
  m.def("avg", &meta_avg, py::arg("ensemble"));
  m.def("svd", &meta_svd, py::arg("ensemble"), py::arg("k"));
  m.def(
      "one_to_n",
      [](const EmbeddingEnsemble& e, Index k, const TrainConfig& c) {
        auto r = meta_1ton(e, k, c);
        return trained(r.meta, r.history);
      },
      py::arg("ensemble"), py::arg("k"), py::arg("config") = TrainConfig{});
  m.def(
      "caeme",
      [](const EmbeddingEnsemble& e, const std::string& loss, const TrainConfig& c) {
        auto r = train_caeme(e, parse_recon_loss(loss), c);
        return trained(r.meta, r.history);
      },
      py::arg("ensemble"), py::arg("loss") = "scp", py::arg("config") = TrainConfig{});
  m.def(
      "daeme",
      [](const EmbeddingEnsemble& e, const std::string& loss, const TrainConfig& c, double weight) {
        auto r = train_daeme(e, parse_recon_loss(loss), c, weight);
        return trained(r.meta, r.history);
      },
      py::arg("ensemble"), py::arg("loss") = "scp", py::arg("config") = TrainConfig{},
      py::arg("discrepancy_weight") = 1.0);
  m.def(
      "tae",
      [](const EmbeddingEnsemble& e, std::size_t target, const std::string& loss, const TrainConfig& c) {
        auto r = train_tae(e, target, parse_recon_loss(loss), c);
        return trained(tae_meta(r.model, e), r.history);
      },
      py::arg("ensemble"), py::arg("target") = 0, py::arg("loss") = "scp", py::arg("config") = TrainConfig{});
  m.def(
      "mte",
      [](const EmbeddingEnsemble& e, const std::string& loss, const TrainConfig& c, unsigned jobs) {
        py::gil_scoped_release release;
        auto r = mte_meta(e, parse_recon_loss(loss), c, jobs);
        return r.meta;
      },
      py::arg("ensemble"), py::arg("loss") = "scp", py::arg("config") = TrainConfig{}, py::arg("jobs") = 1);
  m.def(
      "mtl",
      [](const std::vector<WordPairDataset>& train_sets, const WordPairDataset& held_out, const EmbeddingEnsemble& e,
         const std::string& recon, const std::string& sim, const std::string& distance, const TrainConfig& c) {
        MtlKinds kinds{parse_recon_loss(recon), parse_sim_loss(sim), parse_distance_kind(distance)};
        auto r = train_mtl(train_sets, held_out, e, kinds, c);
        py::dict d = trained(r.meta, r.history);
        d["train_pairs"] = r.train_pairs;
        d["dropped_pairs"] = r.dropped_pairs;
        d["heldout_pairs"] = r.heldout_pairs;
        return d;
      },
      py::arg("train_sets"), py::arg("held_out"), py::arg("ensemble"), py::arg("recon") = "scp",
      py::arg("sim") = "brier", py::arg("distance") = "cosine", py::arg("config") = TrainConfig{});

  m.def(
      "spearman", [](std::vector<double> x, std::vector<double> y) { return spearman(x, y); }, py::arg("x"),
      py::arg("y"));
  m.def(
      "eval_wordsim",
      [](const MetaEmbedding& meta, const WordPairDataset& ds, const std::string& measure) {
        return wordsim_dict(eval_wordsim(meta, ds, parse_distance_kind(measure)));
      },
      py::arg("meta"), py::arg("dataset"), py::arg("measure") = "cosine");
  m.def(
      "eval_analogy",
      [](const MetaEmbedding& meta, const std::string& path, std::optional<std::vector<std::string>> candidates) {
        auto ds = load_analogy(path);
        if (candidates) {
          ds.policy = CandidatePolicy::ProvidedList;
          ds.candidates = std::move(*candidates);
        }
        return analogy_dict(eval_analogy(meta, ds));
      },
      py::arg("meta"), py::arg("path"), py::arg("candidates") = py::none());
  m.def(
      "cosadd_rank",
      [](const MetaEmbedding& meta, const std::string& a, const std::string& b, const std::string& c,
         std::optional<std::vector<std::string>> candidates) {
        return cosadd_rank(meta, a, b, c, candidates ? *candidates : meta.vocab->tokens());
      },
      py::arg("meta"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("candidates") = py::none(),
      "Candidates ranked by cos(b - a + c, d), or None for a zero query.");

  m.def(
      "gradcheck",
      [](Index input_dim, Index hidden, Index batch, double epsilon, double tolerance, std::uint64_t seed) {
        GradCheckSpec spec;
        spec.input_dim = input_dim;
        spec.hidden_dim = hidden;
        spec.batch = batch;
        spec.epsilon = epsilon;
        spec.tolerance = tolerance;
        spec.seed = seed;
        const auto suite = run_gradcheck_suite(spec);
        py::dict cases;
        for (const auto& c : suite.cases) cases[py::str(c.name)] = c.report.max_relative_error;
        py::dict d;
        d["passed"] = suite.passed();
        d["cases"] = cases;
        return d;
      },
      py::arg("input_dim") = 6, py::arg("hidden") = 8, py::arg("batch") = 4, py::arg("epsilon") = 1e-5,
      py::arg("tolerance") = 1e-4, py::arg("seed") = 13,
      "Finite-difference check of every loss and distance kind; returns per-case max relative error.");
}
