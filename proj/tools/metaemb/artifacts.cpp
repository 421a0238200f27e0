#include "artifacts.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <memory>

#include "metaemb/errors.hpp"

namespace metaemb::cli {

std::string git_blob_digest_bytes(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw IoError("sha1 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string git_blob_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for digest");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return git_blob_digest_bytes(bytes);
}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& p : staged_) std::filesystem::remove(p, ec);
}

void OutputSet::write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
  if (committed_) throw ContractError("output set already committed");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".partial";
  staged_.push_back(tmp);
  final_.push_back(path);
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + tmp.string() + "'");
  writer(out);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void OutputSet::commit() {
  for (std::size_t i = 0; i < staged_.size(); ++i) std::filesystem::rename(staged_[i], final_[i]);
  committed_ = true;
}

}  // namespace metaemb::cli
