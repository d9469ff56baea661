#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "config.hpp"
#include "experiments.hpp"

using namespace mdiqp::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mdiqp_test_tools_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = Config::parse(R"(
# comment
experiment = readout-gap   # trailing
name = "a # b"
sizes = [64, 128, 256]
names = ["x", "y,z"]
flag = true
x = 2.5e-3
)");
  CHECK(c.str("experiment", "") == "readout-gap");
  CHECK(c.str("name", "") == "a # b");
  CHECK(c.integers("sizes", {}) == std::vector<std::int64_t>{64, 128, 256});
  CHECK(c.strs("names", {}) == std::vector<std::string>{"x", "y,z"});
  CHECK(c.boolean("flag", false));
  CHECK(c.num("x", 0) == doctest::Approx(2.5e-3));
  CHECK(c.num("missing", 7) == 7);
  CHECK_NOTHROW(c.reject_unused());

  CHECK_THROWS_AS(Config::parse("a = 1\na = 2"), ConfigError);
  CHECK_THROWS_AS(Config::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a = [1, 2"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a = \"open"), ConfigError);
  CHECK_THROWS_AS(Config::parse("bad key = 1"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a =").num("a", 0), ConfigError);

  const auto d = Config::parse("n = 12x\nl = [1, , 2]\nb = maybe\nunread = 1");
  CHECK_THROWS_AS(d.integer("n", 0), ConfigError);
  CHECK_THROWS_AS(d.integers("l", {}), ConfigError);
  CHECK_THROWS_AS(d.boolean("b", false), ConfigError);
  CHECK_THROWS_AS(d.reject_unused(), ConfigError);
}

TEST_CASE("sha256 test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("registry lists every experiment once") {
  std::set<std::string> names;
  for (const auto& e : registry()) {
    CHECK(!e.description.empty());
    CHECK(names.insert(e.name).second);
    CHECK(find_experiment(e.name) == &e);
  }
  CHECK(names.size() == 7);
  CHECK(find_experiment("nope") == nullptr);
}

TEST_CASE("runs are deterministic across thread counts") {
  auto cfg = Config::parse("experiment = anticoncentration\nwidths = [2, 3]\ninstances = 4");
  std::ostringstream log;
  const auto a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run_experiment(cfg, {a.string(), 11, true, 1}, log) == 0);
  REQUIRE(run_experiment(cfg, {b.string(), 11, true, 3}, log) == 0);
  for (const auto* f : {"manifest.json", "collision.csv", "metadata.json"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(!fs::exists(a.string() + ".partial"));

  const auto c = scratch("det_c");
  REQUIRE(run_experiment(cfg, {c.string(), 12, true, 1}, log) == 0);
  CHECK(slurp(a / "collision.csv") != slurp(c / "collision.csv"));
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("usage and configuration errors write nothing") {
  std::ostringstream log;
  const auto out = scratch("bad");
  const auto rejected = [&](const std::string& text) {
    const auto cfg = Config::parse(text);
    const int rc = run_experiment(cfg, {out.string(), 1, true, 1}, log);
    CHECK(!fs::exists(out));
    CHECK(!fs::exists(out.string() + ".partial"));
    return rc;
  };
  CHECK(rejected("experiment = nope") == 2);
  CHECK(rejected("widths = [2]") == 2);
  CHECK(rejected("experiment = anticoncentration\nwidths = [9]") == 2);
  CHECK(rejected("experiment = anticoncentration\nwidht = 3") == 2);
  CHECK(rejected("experiment = tv-sweep\nmodel = thermal") == 2);
  CHECK(rejected("experiment = reservoir-bench\nfamilies = [\"ising\"]") == 2);

  const auto cfg = Config::parse("experiment = readout-gap\nseeds = 1\nepsilons = [0]");
  CHECK(run_experiment(cfg, {"", 1, true, 1}, log) == 2);
  fs::create_directories(out / "x");
  CHECK(run_experiment(cfg, {out.string(), 1, true, 1}, log) == 2);
  fs::remove_all(out);
}

TEST_CASE("manifest hashes match the written files") {
  std::ostringstream log;
  const auto out = scratch("manifest");
  const auto cfg = Config::parse("experiment = readout-gap\nseeds = 2\nepsilons = [0, 0.01]");
  REQUIRE(run_experiment(cfg, {out.string(), 5, true, 1}, log) == 0);
  const auto manifest = slurp(out / "manifest.json");
  for (const auto* f : {"gaps.csv", "metadata.json", "run.log"}) {
    CHECK(manifest.find(f) != std::string::npos);
    CHECK(manifest.find(sha256_hex(slurp(out / f))) != std::string::npos);
  }
  fs::remove_all(out);
}
