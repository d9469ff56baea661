#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mdiqp {

enum class Role : std::uint8_t { system, auxiliary };

struct Site {
  int x = 0;
  int y = 0;
  friend bool operator==(const Site&, const Site&) = default;
};

// Rectangular lattice, sites indexed row-major (index = y * width + x).
class GridLayout {
 public:
  GridLayout(int width, int height, std::vector<Role> roles);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return roles_.size(); }
  Role role(Site s) const { return roles_[index(s)]; }
  Role role(std::size_t i) const { return roles_[i]; }
  std::size_t index(Site s) const { return static_cast<std::size_t>(s.y) * width_ + s.x; }
  Site site(std::size_t i) const { return {static_cast<int>(i % width_), static_cast<int>(i / width_)}; }
  bool in_bounds(Site s) const { return s.x >= 0 && s.y >= 0 && s.x < width_ && s.y < height_; }
  std::vector<Site> neighbors(Site s) const;
  std::size_t count(Role r) const;

 private:
  int width_;
  int height_;
  std::vector<Role> roles_;
};

// Site (0,0) is a system site; roles alternate.
GridLayout checkerboard_layout(int width, int height);

// Lattice holding a W x H grid of system qubits: a 2W x H checkerboard, so
// every row carries W system and W auxiliary sites. System qubit (x, y) of
// the system grid sits at lattice column 2x + (y & 1).
GridLayout system_grid_layout(int width, int height);

bool adjacent(Site a, Site b);

using HamiltonianPath = std::vector<Site>;

// The free end of the initial zig-zag, where the path starts.
Site default_path_start(int width, int height);

// Random directed Hamiltonian path by split-and-mend rerouting of the
// row-by-row zig-zag. `start` must be an end of the zig-zag; the returned
// path begins there. iterations = 0 returns the zig-zag itself.
HamiltonianPath random_hamiltonian_path(const GridLayout& layout, Site start, int iterations, std::uint64_t seed);
HamiltonianPath random_hamiltonian_path(const GridLayout& layout, int iterations, std::uint64_t seed);

bool validate_path(const GridLayout& layout, const HamiltonianPath& p);

std::string path_to_json(const HamiltonianPath& p);
HamiltonianPath path_from_json(const std::string& text);

}  // namespace mdiqp
