#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rfap::io {

std::string sha1_hex(const void* data, std::size_t len);

/// Git-style blob digest: sha1("blob <size>\0" + content).
std::string git_blob_digest(const std::string& content);
std::string file_blob_digest(const std::string& path);

/// Collects artifact digests for one run and writes <out_dir>/manifest.json
/// with the config hash, seed and per-file git-style content digests.
/// Identical configs and seeds reproduce identical digests.
class RunManifest {
 public:
  RunManifest(std::string out_dir, std::string config_hash, std::uint64_t seed);

  /// Writes `content` to <out_dir>/<name> and records its digest.
  void write_file(const std::string& name, const std::string& content);
  /// Records an already-written file below out_dir.
  void record_existing(const std::string& name);

  void finalize() const;  // writes manifest.json

 private:
  std::string out_dir_;
  std::string config_hash_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::string>> entries_;  // name -> digest
};

}  // namespace rfap::io
