#include "mdiqp/grid.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mdiqp/rng.hpp"

namespace mdiqp {

GridLayout::GridLayout(int width, int height, std::vector<Role> roles)
    : width_(width), height_(height), roles_(std::move(roles)) {
  if (width < 1 || height < 1) throw std::invalid_argument("grid dimensions must be >= 1");
  if (roles_.size() != static_cast<std::size_t>(width) * height) throw std::invalid_argument("role count mismatch");
}

std::vector<Site> GridLayout::neighbors(Site s) const {
  std::vector<Site> out;
  const Site cand[4] = {{s.x, s.y + 1}, {s.x, s.y - 1}, {s.x + 1, s.y}, {s.x - 1, s.y}};
  for (auto c : cand)
    if (in_bounds(c)) out.push_back(c);
  return out;
}

std::size_t GridLayout::count(Role r) const { return static_cast<std::size_t>(std::count(roles_.begin(), roles_.end(), r)); }

GridLayout checkerboard_layout(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("checkerboard_layout: zero dimension");
  std::vector<Role> roles(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      roles[static_cast<std::size_t>(y) * width + x] = ((x + y) & 1) ? Role::auxiliary : Role::system;
  return GridLayout(width, height, std::move(roles));
}

GridLayout system_grid_layout(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("system_grid_layout: zero dimension");
  return checkerboard_layout(2 * width, height);
}

bool adjacent(Site a, Site b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1; }

namespace {

enum Dir : std::uint8_t { NORTH, SOUTH, EAST, WEST, NOWHERE };

Site step(Site s, Dir d) {
  switch (d) {
    case NORTH: return {s.x, s.y + 1};
    case SOUTH: return {s.x, s.y - 1};
    case EAST: return {s.x + 1, s.y};
    case WEST: return {s.x - 1, s.y};
    default: return s;
  }
}

Dir toward(Site from, Site to) {
  if (to.y == from.y + 1) return NORTH;
  if (to.y == from.y - 1) return SOUTH;
  if (to.x == from.x + 1) return EAST;
  return WEST;
}

struct Field {
  int w, h;
  std::vector<Dir> dir;
  std::size_t at(Site s) const { return static_cast<std::size_t>(s.y) * w + s.x; }
  Site site(std::size_t i) const { return {static_cast<int>(i % w), static_cast<int>(i / w)}; }
  bool in(Site s) const { return s.x >= 0 && s.y >= 0 && s.x < w && s.y < h; }
  Site next(Site s) const { return step(s, dir[at(s)]); }
};

Field zigzag(int w, int h) {
  Field f{w, h, std::vector<Dir>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Dir d;
      if (y % 2 == 0) d = x == 0 ? NORTH : WEST;
      else d = x == w - 1 ? NORTH : EAST;
      f.dir[f.at({x, y})] = d;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!f.in(f.next({x, y}))) f.dir[f.at({x, y})] = NOWHERE;
  return f;
}

// Pair of diagonal corners of a 2x2 square whose stored directions point
// into the square along antiparallel edges.
struct Pair {
  Site p, q;
};

void square_pairs(const Field& f, int x, int y, std::vector<Pair>& out) {
  const Site a{x, y}, b{x + 1, y}, c{x, y + 1}, d{x + 1, y + 1};
  auto da = f.dir[f.at(a)], db = f.dir[f.at(b)], dc = f.dir[f.at(c)], dd = f.dir[f.at(d)];
  if ((da == EAST && dd == WEST) || (da == NORTH && dd == SOUTH)) out.push_back({a, d});
  if ((db == WEST && dc == EAST) || (db == NORTH && dc == SOUTH)) out.push_back({b, c});
}

// Rotates both pointers of a pair by a quarter turn within their square.
void flip(Field& f, Pair pr) {
  for (Site s : {pr.p, pr.q}) {
    const Site other = s == pr.p ? pr.q : pr.p;
    const Dir d = f.dir[f.at(s)];
    const bool vertical = d == NORTH || d == SOUTH;
    const Site corner = vertical ? Site{other.x, s.y} : Site{s.x, other.y};
    f.dir[f.at(s)] = toward(s, corner);
  }
}

// Follows pointers from `from` (exclusive) and collects sites until `to` is
// reached; empty when the walk ends first.
std::vector<std::size_t> walk(const Field& f, Site from, Site to) {
  std::vector<std::size_t> seen;
  Site s = from;
  for (std::size_t steps = 0; steps < f.dir.size(); ++steps) {
    if (f.dir[f.at(s)] == NOWHERE) return {};
    s = f.next(s);
    seen.push_back(f.at(s));
    if (s == to) return seen;
  }
  return {};
}

}  // namespace

Site default_path_start(int width, int height) {
  const Field f = zigzag(width, height);
  for (std::size_t i = 0; i < f.dir.size(); ++i)
    if (f.dir[i] == NOWHERE) return f.site(i);
  throw std::logic_error("zig-zag has no terminal site");
}

HamiltonianPath random_hamiltonian_path(const GridLayout& layout, Site start, int iterations, std::uint64_t seed) {
  const int w = layout.width(), h = layout.height();
  if (layout.size() < 2) throw std::invalid_argument("random_hamiltonian_path: grid needs >= 2 sites");
  if (!layout.in_bounds(start)) throw std::invalid_argument("random_hamiltonian_path: start out of bounds");
  Field f = zigzag(w, h);
  const Site head = default_path_start(w, h);
  if (!(start == head)) {
    // Reverse the zig-zag so that `start` becomes the pointer sink.
    std::vector<std::size_t> indeg(f.dir.size(), 0);
    for (std::size_t i = 0; i < f.dir.size(); ++i)
      if (f.dir[i] != NOWHERE) ++indeg[f.at(f.next(f.site(i)))];
    if (indeg[f.at(start)] != 0) throw std::invalid_argument("random_hamiltonian_path: start must be an end of the zig-zag");
    std::vector<Dir> rev(f.dir.size(), NOWHERE);
    for (std::size_t i = 0; i < f.dir.size(); ++i)
      if (f.dir[i] != NOWHERE) {
        const Site s = f.site(i), t = f.next(s);
        rev[f.at(t)] = toward(t, s);
      }
    f.dir = std::move(rev);
  }

  auto rng = make_rng(seed);
  std::vector<Pair> cands;
  std::vector<std::uint8_t> in_loop(f.dir.size(), 0);
  for (int it = 0; it < iterations; ++it) {
    cands.clear();
    for (int y = 0; y + 1 < h; ++y)
      for (int x = 0; x + 1 < w; ++x) square_pairs(f, x, y, cands);
    if (cands.empty()) continue;  // nothing to split (1-wide grids)
    Pair pq = cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng)];
    auto loop = walk(f, pq.p, pq.q);
    if (loop.empty()) {
      std::swap(pq.p, pq.q);
      loop = walk(f, pq.p, pq.q);
    }
    if (loop.empty()) continue;
    flip(f, pq);

    std::fill(in_loop.begin(), in_loop.end(), 0);
    for (auto i : loop) in_loop[i] = 1;
    cands.clear();
    std::vector<Pair> mend;
    for (int y = 0; y + 1 < h; ++y)
      for (int x = 0; x + 1 < w; ++x) {
        cands.clear();
        square_pairs(f, x, y, cands);
        for (auto c : cands)
          if (in_loop[f.at(c.p)] != in_loop[f.at(c.q)]) mend.push_back(c);
      }
    Pair uv = mend.empty() ? pq : mend[std::uniform_int_distribution<std::size_t>(0, mend.size() - 1)(rng)];
    flip(f, uv);
  }

  std::vector<std::size_t> indeg(f.dir.size(), 0);
  for (std::size_t i = 0; i < f.dir.size(); ++i)
    if (f.dir[i] != NOWHERE) ++indeg[f.at(f.next(f.site(i)))];
  const auto tail = std::find(indeg.begin(), indeg.end(), 0);
  HamiltonianPath path;
  Site s = f.site(static_cast<std::size_t>(tail - indeg.begin()));
  for (std::size_t steps = 0; steps <= f.dir.size(); ++steps) {
    path.push_back(s);
    if (f.dir[f.at(s)] == NOWHERE) break;
    s = f.next(s);
  }
  std::reverse(path.begin(), path.end());
  if (!validate_path(layout, path)) throw std::logic_error("random_hamiltonian_path: rerouting produced an invalid path");
  return path;
}

HamiltonianPath random_hamiltonian_path(const GridLayout& layout, int iterations, std::uint64_t seed) {
  return random_hamiltonian_path(layout, default_path_start(layout.width(), layout.height()), iterations, seed);
}

bool validate_path(const GridLayout& layout, const HamiltonianPath& p) {
  if (p.size() != layout.size()) return false;
  std::vector<std::uint8_t> seen(layout.size(), 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!layout.in_bounds(p[i])) return false;
    auto& flag = seen[layout.index(p[i])];
    if (flag) return false;
    flag = 1;
    if (i > 0 && !adjacent(p[i - 1], p[i])) return false;
  }
  return true;
}

std::string path_to_json(const HamiltonianPath& p) {
  nlohmann::json j = nlohmann::json::array();
  for (auto s : p) j.push_back({s.x, s.y});
  return j.dump();
}

HamiltonianPath path_from_json(const std::string& text) {
  HamiltonianPath p;
  for (const auto& e : nlohmann::json::parse(text)) p.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  return p;
}

}  // namespace mdiqp
