#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rfap::config {

/// Plain-text key = value configuration with dotted-path keys. Lines are
/// `key = value`; '#' starts a comment; later assignments win. Overrides use
/// the same dotted paths.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  /// Sorted `key = value` lines; the canonical form that gets hashed into
  /// artifact manifests.
  std::string canonical() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace rfap::config
