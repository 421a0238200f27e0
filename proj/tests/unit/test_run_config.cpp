#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "artifacts.hpp"
#include "metaemb/errors.hpp"
#include "run_config.hpp"

using namespace metaemb;
using namespace metaemb::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "metaemb_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig valid_caeme() {
  RunConfig c;
  c.set("source", "a.txt");
  c.set("method", "caeme");
  c.set("output", "out/run");
  return c;
}

}  // namespace

TEST(RunConfig, Defaults) {
  RunConfig c;
  EXPECT_EQ(c.train.hidden_dim(), 200);
  EXPECT_EQ(c.train.batch_size, 32);
  EXPECT_EQ(c.train.epochs, 50);
  EXPECT_DOUBLE_EQ(c.train.dropout_p, 0.2);
  EXPECT_EQ(c.train.seed, 13u);
  EXPECT_EQ(c.distance, DistanceKind::Cosine);
}

TEST(RunConfig, SetKeys) {
  RunConfig c;
  c.set("train.hidden", "64");
  c.set("train.learning_rate", "0.05");
  c.set("seed", "7");
  c.set("recon_loss", "kl");
  c.set("source", "glove:b.txt");
  c.set("source", "word2vec:a.txt");
  c.set("dataset", "rg.tsv 0 4");
  EXPECT_EQ(c.train.hidden_dim(), 64);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.05);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.recon_loss, ReconLossKind::KL);
  ASSERT_EQ(c.sources.size(), 2u);
  EXPECT_EQ(c.sources[0].format, EmbeddingFormat::GloveText);
  EXPECT_EQ(c.sources[1].path, "a.txt");
  ASSERT_TRUE(c.datasets[0].range);
  EXPECT_DOUBLE_EQ(c.datasets[0].range->max, 4.0);
}

TEST(RunConfig, UnknownKeyAndBadValues) {
  RunConfig c;
  EXPECT_THROW(c.set("train.hiden", "3"), ConfigError);
  EXPECT_THROW(c.set("train.epochs", "ten"), ConfigError);
  EXPECT_THROW(c.set("method", "pca"), ConfigError);
  c.set("train.dropout", "1.5");
  EXPECT_THROW(c.train.validate(), ConfigError);
  try {
    c.set("bogus", "1");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST(RunConfig, MethodSpecificValidation) {
  EXPECT_NO_THROW(valid_caeme().validate());

  RunConfig none;
  none.set("output", "x");
  EXPECT_THROW(none.validate(), ConfigError);

  auto tae = valid_caeme();
  tae.set("method", "tae");
  EXPECT_THROW(tae.validate(), ConfigError);  // needs two sources
  tae.set("source", "b.txt");
  EXPECT_NO_THROW(tae.validate());
  tae.set("method.tae_target", "2");
  EXPECT_THROW(tae.validate(), ConfigError);

  auto mtl = valid_caeme();
  mtl.set("source", "b.txt");
  mtl.set("method", "mtl");
  mtl.set("dataset", "a.tsv");
  EXPECT_THROW(mtl.validate(), ConfigError);  // needs two datasets and held_out
  mtl.set("dataset", "b.tsv");
  mtl.set("held_out", "a");
  EXPECT_NO_THROW(mtl.validate());

  auto no_out = valid_caeme();
  no_out.output.clear();
  EXPECT_THROW(no_out.validate(), ConfigError);
}

TEST(RunConfig, PairsRoundTrip) {
  auto c = valid_caeme();
  c.set("train.epochs", "12");
  c.set("method.discrepancy_weight", "0.25");
  c.set("distance", "manhattan");
  c.set("source", "glove:b.txt");
  RunConfig back;
  for (const auto& [k, v] : c.to_pairs()) back.set(k, v);
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.train.epochs, 12);
  EXPECT_EQ(back.sources[1].format, EmbeddingFormat::GloveText);
  EXPECT_EQ(back.sources[1].path, "b.txt");
}

TEST(RunConfig, ConfigFileParsing) {
  auto dir = scratch("cfg");
  {
    std::ofstream(dir / "ok.cfg") << "# comment\nmethod = svd\n\nsource = a.txt  \nsource=b.txt\ntrain.hidden = 10\n";
    std::ofstream(dir / "bad.cfg") << "method = svd\nnot a pair\n";
  }
  auto pairs = read_config_file(dir / "ok.cfg");
  ASSERT_EQ(pairs.size(), 4u);
  EXPECT_EQ(pairs[1], (std::pair<std::string, std::string>{"source", "a.txt"}));
  try {
    read_config_file(dir / "bad.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg:2"), std::string::npos);
  }
}

TEST(RunConfig, SpecParsers) {
  auto s = parse_source_spec("a.txt");
  EXPECT_FALSE(s.format);
  // Only known format prefixes are stripped; anything else is a path.
  EXPECT_EQ(parse_source_spec("fasttext:a.txt").path, "fasttext:a.txt");
  EXPECT_EQ(parse_source_spec("glove:c:/x.txt").path, "c:/x.txt");
  EXPECT_EQ(parse_source_spec("word2vec-text:a.txt").format, EmbeddingFormat::Word2VecText);
  auto d = parse_dataset_spec("x.tsv");
  EXPECT_FALSE(d.range);
  EXPECT_THROW(parse_dataset_spec("x.tsv 5 1"), ConfigError);
}

TEST(Artifacts, GitBlobDigest) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(git_blob_digest_bytes("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  // `git hash-object /dev/null`
  EXPECT_EQ(git_blob_digest_bytes(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Artifacts, OutputSetCommitsOrCleansUp) {
  auto dir = scratch("outputs");
  {
    OutputSet out;
    out.write(dir / "a.txt", [](std::ostream& o) { o << "a"; });
    out.commit();
  }
  EXPECT_TRUE(fs::exists(dir / "a.txt"));
  try {
    OutputSet out;
    out.write(dir / "b.txt", [](std::ostream& o) { o << "b"; });
    throw std::runtime_error("fail before commit");
  } catch (const std::runtime_error&) {
  }
  EXPECT_FALSE(fs::exists(dir / "b.txt"));
  for (const auto& entry : fs::directory_iterator(dir)) {
    EXPECT_EQ(entry.path().filename(), "a.txt");
  }
}
