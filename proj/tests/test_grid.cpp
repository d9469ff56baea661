#include <doctest.h>

#include <set>

#include "mdiqp/grid.hpp"

using namespace mdiqp;

namespace {
std::vector<int> encode(const GridLayout& g, const HamiltonianPath& p) {
  std::vector<int> out;
  for (auto s : p) out.push_back(static_cast<int>(g.index(s)));
  return out;
}
}  // namespace

TEST_CASE("checkerboard role counts") {
  auto one = checkerboard_layout(1, 1);
  CHECK(one.count(Role::system) == 1);
  auto two = checkerboard_layout(2, 2);
  CHECK(two.count(Role::system) == 2);
  CHECK(two.count(Role::auxiliary) == 2);
  auto big = checkerboard_layout(41, 41);
  CHECK(big.count(Role::system) == 841);
  CHECK(big.count(Role::auxiliary) == 840);
  CHECK(big.role(Site{0, 0}) == Role::system);
  CHECK_THROWS(checkerboard_layout(0, 3));
}

TEST_CASE("neighbors and alternation") {
  auto g = checkerboard_layout(5, 4);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto nb = g.neighbors(g.site(i));
    CHECK(nb.size() >= 2);
    CHECK(nb.size() <= 4);
    for (auto s : nb) CHECK(g.role(s) != g.role(i));
  }
}

TEST_CASE("system grid layout holds W*H system qubits") {
  auto g = system_grid_layout(3, 2);
  CHECK(g.width() == 6);
  CHECK(g.count(Role::system) == 6);
  CHECK(g.role(Site{2, 0}) == Role::system);
  CHECK(g.role(Site{3, 1}) == Role::system);
}

TEST_CASE("straight grids have one path") {
  auto g = checkerboard_layout(1, 7);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_hamiltonian_path(g, 100, seed);
    CHECK(validate_path(g, p));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i].y == static_cast<int>(p.size() - 1 - i));
  }
}

TEST_CASE("zero iterations returns the zig-zag") {
  auto g = checkerboard_layout(4, 4);
  auto p = random_hamiltonian_path(g, 0, 1);
  REQUIRE(validate_path(g, p));
  std::vector<Site> expect;
  for (int y = 0; y < 4; ++y)
    for (int k = 0; k < 4; ++k) expect.push_back({y % 2 == 0 ? 3 - k : k, y});
  // The path is traversed from the free end of the zig-zag.
  if (!(p.front() == expect.front())) std::reverse(expect.begin(), expect.end());
  CHECK(p == expect);
  CHECK(p.front() == default_path_start(4, 4));
}

TEST_CASE("validate_path rejects broken paths") {
  auto g = checkerboard_layout(3, 3);
  auto p = random_hamiltonian_path(g, 0, 0);
  CHECK(validate_path(g, p));
  auto repeated = p;
  repeated[4] = repeated[3];
  CHECK_FALSE(validate_path(g, repeated));
  auto hop = p;
  std::swap(hop[1], hop[5]);
  CHECK_FALSE(validate_path(g, hop));
  CHECK_FALSE(validate_path(g, HamiltonianPath(p.begin(), p.end() - 1)));
}

TEST_CASE("rerouted paths are valid, deterministic and diverse") {
  auto g = checkerboard_layout(4, 4);
  std::set<std::vector<int>> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto p = random_hamiltonian_path(g, 2000, seed);
    CHECK(validate_path(g, p));
    CHECK(p.front() == default_path_start(4, 4));
    seen.insert(encode(g, p));
  }
  CHECK(seen.size() >= 2);
  CHECK(random_hamiltonian_path(g, 2000, 7) == random_hamiltonian_path(g, 2000, 7));
}

TEST_CASE("paths stay valid across shapes") {
  for (int w = 1; w <= 20; w += 3)
    for (int h = 1; h <= 20; h += 4) {
      if (w * h < 2) continue;
      auto g = checkerboard_layout(w, h);
      for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto p = random_hamiltonian_path(g, 200, seed * 31 + w);
        CHECK(validate_path(g, p));
      }
    }
}

TEST_CASE("6x6 path diversity") {
  auto g = checkerboard_layout(6, 6);
  std::set<std::vector<int>> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed) seen.insert(encode(g, random_hamiltonian_path(g, 2000, seed)));
  CHECK(seen.size() >= 25);
}

TEST_CASE("start at the other zig-zag end") {
  auto g = checkerboard_layout(4, 3);
  auto zig = random_hamiltonian_path(g, 0, 0);
  auto p = random_hamiltonian_path(g, zig.back(), 500, 3);
  CHECK(validate_path(g, p));
  CHECK(p.front() == zig.back());
  CHECK_THROWS(random_hamiltonian_path(g, Site{1, 1}, 10, 0));
}

TEST_CASE("path json round trip") {
  auto g = checkerboard_layout(3, 4);
  auto p = random_hamiltonian_path(g, 100, 9);
  CHECK(path_from_json(path_to_json(p)) == p);
}
