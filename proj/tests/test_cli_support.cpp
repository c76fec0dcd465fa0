#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rfap/config.hpp"
#include "rfap/manifest.hpp"

using namespace rfap;

TEST_CASE("key-value config parses comments, whitespace and overrides") {
  auto cfg = config::KeyValueConfig::from_string(
      "# experiment\n"
      "seed = 7\n"
      "dataset.source = synthetic   # trailing comment\n"
      "cluster.ramp_lambda = 5.0\n"
      "dataset.classes = 1, 2, 3\n"
      "flag = true\n");
  CHECK(cfg.get_uint64("seed", 0) == 7);
  CHECK(cfg.get_string("dataset.source", "") == "synthetic");
  CHECK(cfg.get_double("cluster.ramp_lambda", 0) == 5.0);
  CHECK(cfg.get_int_list("dataset.classes", {}) == std::vector<int>{1, 2, 3});
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_int("missing", 42) == 42);

  cfg.set("dataset.source", "highd");
  CHECK(cfg.get_string("dataset.source", "") == "highd");
}

TEST_CASE("malformed config lines and values raise config errors") {
  CHECK_THROWS_AS(config::KeyValueConfig::from_string("no equals sign\n"), ConfigError);
  auto cfg = config::KeyValueConfig::from_string("x = abc\n");
  CHECK_THROWS_AS(cfg.get_int("x", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("x", false), ConfigError);
}

TEST_CASE("canonical form is sorted and stable") {
  auto a = config::KeyValueConfig::from_string("b = 2\na = 1\n");
  auto b = config::KeyValueConfig::from_string("a = 1\nb = 2\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.canonical() == "a = 1\nb = 2\n");
}

TEST_CASE("git blob digests match git's own values") {
  // Empty blob and "hello\n" are well-known git object ids.
  CHECK(io::git_blob_digest("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(io::git_blob_digest("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("run manifest reproduces identical digests for identical content") {
  const auto dir =
      (std::filesystem::temp_directory_path() / "rfap_manifest_test").string();
  std::filesystem::remove_all(dir);

  auto write_run = [&](const std::string& subdir) {
    io::RunManifest manifest(dir + "/" + subdir, "cfg-hash-1", 7);
    manifest.write_file("metrics.json", "{\"acc\": 0.8}\n");
    manifest.write_file("log.jsonl", "{\"epoch\": 0}\n");
    manifest.finalize();
    std::ifstream in(dir + "/" + subdir + "/manifest.json");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const auto a = write_run("a");
  const auto b = write_run("b");
  CHECK(a == b);
  CHECK(a.find("config_hash") != std::string::npos);
}
