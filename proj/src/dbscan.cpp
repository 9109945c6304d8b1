#include "bevforge/dbscan.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "bevforge/error.hpp"

namespace bevforge {

namespace {

// Two 32-bit cell coordinates packed into one hash key.  Coordinates come
// from floor(x / eps), far inside 32-bit range for any metric input.
std::uint64_t cell_key(double x, double z, double eps) {
  auto cx = static_cast<std::int64_t>(std::floor(x / eps));
  auto cz = static_cast<std::int64_t>(std::floor(z / eps));
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(cz));
}

std::uint64_t shifted_key(std::uint64_t key, int dx, int dz) {
  auto cx = static_cast<std::uint32_t>(key >> 32) + static_cast<std::uint32_t>(dx);
  auto cz = static_cast<std::uint32_t>(key) + static_cast<std::uint32_t>(dz);
  return (static_cast<std::uint64_t>(cx) << 32) | static_cast<std::uint64_t>(cz);
}

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }

  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }

  // Union by smaller root index keeps the representative deterministic.
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;
    else parent[a] = b;
  }
};

}  // namespace

DbscanResult dbscan(const std::vector<PointXZ>& points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw_error(ErrorCode::InvalidValue, "eps must be > 0");
  if (min_pts < 1) throw_error(ErrorCode::InvalidValue, "min_pts must be >= 1");
  std::size_t n = points.size();
  DbscanResult result;
  result.labels.assign(n, -1);
  if (n == 0) return result;

  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[cell_key(points[i].x, points[i].z, eps)].push_back(static_cast<int>(i));
  }

  double eps2 = eps * eps;
  // Every neighbor within eps lies in the 3x3 block of eps-sized cells.
  auto for_neighbors = [&](std::size_t i, auto&& fn) {
    std::uint64_t key = cell_key(points[i].x, points[i].z, eps);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dz = -1; dz <= 1; ++dz) {
        auto it = grid.find(shifted_key(key, dx, dz));
        if (it == grid.end()) continue;
        for (int j : it->second) {
          double ddx = points[i].x - points[static_cast<std::size_t>(j)].x;
          double ddz = points[i].z - points[static_cast<std::size_t>(j)].z;
          if (ddx * ddx + ddz * ddz <= eps2) fn(j);
        }
      }
    }
  };

  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for_neighbors(i, [&](int) { ++count; });
    core[i] = count >= min_pts;
  }

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for_neighbors(i, [&](int j) {
      if (core[static_cast<std::size_t>(j)]) uf.unite(static_cast<int>(i), j);
    });
  }

  // Dense ids in order of each component's smallest core index.
  std::vector<int> component_id(n, -1);
  int next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    int root = uf.find(static_cast<int>(i));
    if (component_id[static_cast<std::size_t>(root)] == -1) {
      component_id[static_cast<std::size_t>(root)] = next_id++;
    }
    result.labels[i] = component_id[static_cast<std::size_t>(root)];
  }
  result.cluster_count = static_cast<std::size_t>(next_id);

  // Border points: nearest core within eps, ties toward the lower index.
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    int best_core = -1;
    for_neighbors(i, [&](int j) {
      if (!core[static_cast<std::size_t>(j)]) return;
      double ddx = points[i].x - points[static_cast<std::size_t>(j)].x;
      double ddz = points[i].z - points[static_cast<std::size_t>(j)].z;
      double d2 = ddx * ddx + ddz * ddz;
      if (d2 < best || (d2 == best && j < best_core)) {
        best = d2;
        best_core = j;
      }
    });
    if (best_core >= 0) result.labels[i] = result.labels[static_cast<std::size_t>(best_core)];
  }
  return result;
}

}  // namespace bevforge
