#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace metaemb::cli {

/// Git blob id of a file's contents: SHA-1 over "blob <size>\0" + bytes.
std::string git_blob_digest(const std::filesystem::path& path);
std::string git_blob_digest_bytes(const std::string& bytes);

/// Files written by one command. Each is staged under a temporary name and
/// renamed into place by commit(); anything not committed is deleted when
/// the set is destroyed.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet();

  /// Stages `path`; the writer receives a binary stream for its contents.
  void write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);
  void commit();
  const std::vector<std::filesystem::path>& paths() const noexcept { return final_; }

 private:
  std::vector<std::filesystem::path> staged_;
  std::vector<std::filesystem::path> final_;
  bool committed_ = false;
};

}  // namespace metaemb::cli
