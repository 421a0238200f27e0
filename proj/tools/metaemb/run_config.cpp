#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "metaemb/errors.hpp"

namespace metaemb::cli {

namespace {

const std::pair<Method, const char*> kMethods[] = {
    {Method::Conc, "conc"},   {Method::Avg, "avg"},   {Method::Svd, "svd"},
    {Method::OneToN, "1ton"}, {Method::Caeme, "caeme"}, {Method::Daeme, "daeme"},
    {Method::Tae, "tae"},     {Method::Mte, "mte"},   {Method::Mtl, "mtl"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("invalid value for '" + key + "': '" + value + "'");
  return out;
}

// Vocabulary/format parsers throw their own categories; report them as config errors.
template <typename F>
auto as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ConfigError("invalid value for '" + key + "': " + e.what());
  }
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& [k, name] : kMethods) {
    if (k == m) return name;
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (const auto& [k, name] : kMethods) {
    if (s == name) return k;
  }
  throw ConfigError("unknown method '" + std::string(s) + "' (expected conc, avg, svd, 1ton, caeme, daeme, tae, mte, mtl)");
}

bool is_trainable(Method m) { return m != Method::Conc && m != Method::Avg && m != Method::Svd; }

SourceSpec parse_source_spec(const std::string& text) {
  SourceSpec spec;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string prefix = text.substr(0, colon);
    if (prefix == "word2vec" || prefix == "glove" || prefix == "word2vec-text" || prefix == "glove-text") {
      spec.format = parse_embedding_format(prefix);
      spec.path = text.substr(colon + 1);
      return spec;
    }
  }
  spec.path = text;
  return spec;
}

DatasetSpec parse_dataset_spec(const std::string& text) {
  std::istringstream in(text);
  DatasetSpec spec;
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(std::move(t));
  if (tok.size() != 1 && tok.size() != 3) {
    throw ConfigError("dataset must be 'path' or 'path min max', got '" + text + "'");
  }
  spec.path = tok[0];
  if (tok.size() == 3) {
    spec.range = ScoreRange{parse_number<double>("dataset", tok[1]), parse_number<double>("dataset", tok[2])};
    if (!(spec.range->max > spec.range->min)) {
      throw ConfigError("dataset score range needs min < max, got '" + text + "'");
    }
  }
  return spec;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto& t = train;
  if (key == "source") {
    sources.push_back(parse_source_spec(value));
  } else if (key == "vocab_policy") {
    vocab_policy = as_config(key, [&] { return parse_vocab_policy(value); });
  } else if (key == "method") {
    method = parse_method(value);
  } else if (key == "recon_loss") {
    recon_loss = as_config(key, [&] { return parse_recon_loss(value); });
  } else if (key == "sim_loss") {
    sim_loss = as_config(key, [&] { return parse_sim_loss(value); });
  } else if (key == "distance") {
    distance = as_config(key, [&] { return parse_distance_kind(value); });
  } else if (key == "seed") {
    t.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "output") {
    output = value;
  } else if (key == "jobs") {
    jobs = parse_number<unsigned>(key, value);
  } else if (key == "held_out") {
    held_out = value;
  } else if (key == "dataset") {
    datasets.push_back(parse_dataset_spec(value));
  } else if (key == "train.hidden") {
    t.hidden_dims = {parse_number<Index>(key, value)};
  } else if (key == "train.batch_size") {
    t.batch_size = parse_number<Index>(key, value);
  } else if (key == "train.epochs") {
    t.epochs = parse_number<int>(key, value);
  } else if (key == "train.learning_rate") {
    t.learning_rate = parse_number<double>(key, value);
  } else if (key == "train.dropout") {
    t.dropout_p = parse_number<double>(key, value);
  } else if (key == "train.init_mean") {
    t.init_mean = parse_number<double>(key, value);
  } else if (key == "train.init_std") {
    t.init_std = parse_number<double>(key, value);
  } else if (key == "train.patience") {
    t.early_stop_patience = parse_number<int>(key, value);
  } else if (key == "train.validation_fraction") {
    t.validation_fraction = parse_number<double>(key, value);
  } else if (key == "train.lambda") {
    t.lambda = parse_number<double>(key, value);
  } else if (key == "method.k") {
    k = parse_number<Index>(key, value);
  } else if (key == "method.discrepancy_weight") {
    discrepancy_weight = parse_number<double>(key, value);
  } else if (key == "method.tae_target") {
    tae_target = parse_number<std::size_t>(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (!method) throw ConfigError("missing required field 'method'");
  const Method m = *method;
  const std::size_t min_sources = m == Method::Caeme || m == Method::Daeme ? 1 : 2;
  if (sources.size() < min_sources) {
    throw ConfigError("method " + to_string(m) + " needs at least " + std::to_string(min_sources) + " sources");
  }
  if (output.empty()) throw ConfigError("missing required field 'output'");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (k && *k < 1) throw ConfigError("method.k must be positive");
  if (discrepancy_weight < 0.0) throw ConfigError("method.discrepancy_weight must be non-negative");
  if (m == Method::Tae && tae_target >= sources.size()) {
    throw ConfigError("method.tae_target " + std::to_string(tae_target) + " is out of range for " +
                      std::to_string(sources.size()) + " sources");
  }
  if (m == Method::Mtl) {
    if (datasets.size() < 2) throw ConfigError("method mtl needs at least two datasets (training + held out)");
    if (held_out.empty()) throw ConfigError("method mtl needs 'held_out' (a dataset name or 'all')");
  }
  try {
    train.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sources) out.emplace_back("source", (s.format ? to_string(*s.format) + ":" : "") + s.path);
  out.emplace_back("vocab_policy", to_string(vocab_policy));
  if (method) out.emplace_back("method", to_string(*method));
  out.emplace_back("recon_loss", to_string(recon_loss));
  out.emplace_back("sim_loss", to_string(sim_loss));
  out.emplace_back("distance", to_string(distance));
  out.emplace_back("seed", std::to_string(train.seed));
  out.emplace_back("train.hidden", std::to_string(train.hidden_dim()));
  out.emplace_back("train.batch_size", std::to_string(train.batch_size));
  out.emplace_back("train.epochs", std::to_string(train.epochs));
  out.emplace_back("train.learning_rate", fmt_double(train.learning_rate));
  out.emplace_back("train.dropout", fmt_double(train.dropout_p));
  out.emplace_back("train.init_mean", fmt_double(train.init_mean));
  out.emplace_back("train.init_std", fmt_double(train.init_std));
  out.emplace_back("train.patience", std::to_string(train.early_stop_patience));
  out.emplace_back("train.validation_fraction", fmt_double(train.validation_fraction));
  out.emplace_back("train.lambda", fmt_double(train.lambda));
  if (k) out.emplace_back("method.k", std::to_string(*k));
  out.emplace_back("method.discrepancy_weight", fmt_double(discrepancy_weight));
  out.emplace_back("method.tae_target", std::to_string(tae_target));
  for (const auto& d : datasets) {
    out.emplace_back("dataset", d.path + (d.range ? " " + fmt_double(d.range->min) + " " + fmt_double(d.range->max) : ""));
  }
  if (!held_out.empty()) out.emplace_back("held_out", held_out);
  if (!output.empty()) out.emplace_back("output", output);
  out.emplace_back("jobs", std::to_string(jobs));
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_pairs()) out += k + " = " + v + "\n";
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

}  // namespace metaemb::cli
