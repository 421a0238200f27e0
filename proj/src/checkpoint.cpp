#include "metaemb/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "metaemb/errors.hpp"

namespace metaemb {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'E', 'M', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint64_t kMaxCount = 1ULL << 40;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated checkpoint");
  return v;
}

std::uint64_t get_count(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > kMaxCount) throw IoError("corrupt checkpoint: implausible count");
  return n;
}

std::string get_string(std::istream& in) {
  std::string s(get_count(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  if (!in) throw IoError("truncated checkpoint");
  return s;
}

Matrix get_matrix(std::istream& in) {
  const auto rows = static_cast<Index>(get_count(in));
  const auto cols = static_cast<Index>(get_count(in));
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw IoError("truncated checkpoint");
  return m;
}

}  // namespace

const std::string* Checkpoint::find_metadata(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

const FeedForwardNet& Checkpoint::net(const std::string& name) const {
  for (const auto& [k, v] : nets) {
    if (k == name) return v;
  }
  throw LookupError("checkpoint has no network named '" + name + "'");
}

const Matrix& Checkpoint::matrix(const std::string& name) const {
  for (const auto& [k, v] : matrices) {
    if (k == name) return v;
  }
  throw LookupError("checkpoint has no matrix named '" + name + "'");
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, Checkpoint::kVersion);
  put_string(out, ckpt.kind);
  put<std::uint64_t>(out, ckpt.metadata.size());
  for (const auto& [k, v] : ckpt.metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put<std::uint64_t>(out, ckpt.nets.size());
  for (const auto& [name, net] : ckpt.nets) {
    put_string(out, name);
    put<double>(out, net.dropout_p);
    put<std::uint8_t>(out, net.dropout_output ? 1 : 0);
    put<std::uint64_t>(out, net.layers.size());
    for (const auto& layer : net.layers) {
      put<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
      put_matrix(out, layer.weight);
      put_matrix(out, Matrix(layer.bias));
    }
  }
  put<std::uint64_t>(out, ckpt.matrices.size());
  for (const auto& [name, m] : ckpt.matrices) {
    put_string(out, name);
    put_matrix(out, m);
  }
  if (!out) throw IoError("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != Checkpoint::kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.kind = get_string(in);
  for (auto n = get_count(in); n > 0; --n) {
    auto k = get_string(in);
    auto v = get_string(in);
    ckpt.metadata.emplace_back(std::move(k), std::move(v));
  }
  for (auto n = get_count(in); n > 0; --n) {
    auto name = get_string(in);
    FeedForwardNet net;
    net.dropout_p = get<double>(in);
    net.dropout_output = get<std::uint8_t>(in) != 0;
    for (auto l = get_count(in); l > 0; --l) {
      DenseLayer layer;
      const auto act = get<std::uint8_t>(in);
      if (act > static_cast<std::uint8_t>(Activation::SoftmaxRows)) throw IoError("corrupt checkpoint: activation");
      layer.activation = static_cast<Activation>(act);
      layer.weight = get_matrix(in);
      Matrix bias = get_matrix(in);
      if (bias.rows() != 1) throw IoError("corrupt checkpoint: bias shape");
      layer.bias = bias.row(0);
      net.layers.push_back(std::move(layer));
    }
    net.validate();
    ckpt.nets.emplace_back(std::move(name), std::move(net));
  }
  for (auto n = get_count(in); n > 0; --n) {
    auto name = get_string(in);
    ckpt.matrices.emplace_back(std::move(name), get_matrix(in));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace metaemb
