#pragma once

#include <cstddef>
#include <vector>

namespace bevforge {

// Ground-plane point (anchor-frame x right, z forward).
struct PointXZ {
  double x = 0.0;
  double z = 0.0;
};

struct DbscanResult {
  std::vector<int> labels;  // -1 = noise, otherwise dense cluster id
  std::size_t cluster_count = 0;
};

// Deterministic DBSCAN.  Definitions are order-free so the partition never
// depends on scan order:
//   - core point: >= min_pts neighbors within eps (self included, distance <= eps);
//   - clusters: connected components of the core-core adjacency;
//   - border point: joins the cluster of its nearest core within eps
//     (ties broken toward the lower point index); otherwise noise.
// Cluster ids are dense and ordered by each cluster's smallest core index.
// Neighbor lookups go through a uniform grid of eps-sized cells.
DbscanResult dbscan(const std::vector<PointXZ>& points, double eps, std::size_t min_pts);

}  // namespace bevforge
