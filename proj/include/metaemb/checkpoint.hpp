#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "metaemb/tensor_core.hpp"

namespace metaemb {

/// Versioned binary container for trained parameters.
///
/// Layout (little-endian): magic "MEMBCKPT", u32 version, then the kind
/// string, key/value metadata, named networks (dropout, activation kinds,
/// dims, row-major weights and biases) and named bare matrices. Strings are
/// u64 length + bytes; doubles are raw IEEE-754, so write-then-read is
/// bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, FeedForwardNet>> nets;
  std::vector<std::pair<std::string, Matrix>> matrices;

  const std::string* find_metadata(const std::string& key) const;
  const FeedForwardNet& net(const std::string& name) const;
  const Matrix& matrix(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metaemb
