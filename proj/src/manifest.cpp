#include "rfap/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "rfap/common.hpp"

namespace rfap::io {

std::string sha1_hex(const void* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (EVP_Digest(data, len, digest, &digest_len, EVP_sha1(), nullptr) != 1)
    throw NumericError("sha1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string git_blob_digest(const std::string& content) {
  std::string framed = "blob " + std::to_string(content.size());
  framed.push_back('\0');
  framed += content;
  return sha1_hex(framed.data(), framed.size());
}

std::string file_blob_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for digest: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return git_blob_digest(buf.str());
}

RunManifest::RunManifest(std::string out_dir, std::string config_hash, std::uint64_t seed)
    : out_dir_(std::move(out_dir)), config_hash_(std::move(config_hash)), seed_(seed) {
  std::filesystem::create_directories(out_dir_);
}

void RunManifest::write_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::path(out_dir_) / name;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  out.close();
  entries_.emplace_back(name, git_blob_digest(content));
}

void RunManifest::record_existing(const std::string& name) {
  const auto path = std::filesystem::path(out_dir_) / name;
  entries_.emplace_back(name, file_blob_digest(path.string()));
}

void RunManifest::finalize() const {
  nlohmann::json j;
  j["config_hash"] = config_hash_;
  j["seed"] = seed_;
  nlohmann::json files = nlohmann::json::object();
  for (const auto& [name, digest] : entries_) files[name] = digest;
  j["files"] = files;
  std::ofstream out(std::filesystem::path(out_dir_) / "manifest.json");
  if (!out) throw DataError("cannot write run manifest in " + out_dir_);
  out << j.dump(2) << "\n";
}

}  // namespace rfap::io
