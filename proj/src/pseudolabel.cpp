#include "bevforge/pseudolabel.hpp"

#include <algorithm>
#include <cmath>

#include "bevforge/log.hpp"
#include "bevforge/morphology.hpp"
#include "bevforge/parallel.hpp"
#include "bevforge/rng.hpp"

namespace bevforge {

SemanticPointCloud lift_semantics(const SemanticMap& semantics, const Tensor<float>& depth,
                                  const CameraIntrinsics& k, const Pose& anchor_from_frame,
                                  std::uint32_t source_id) {
  require_shape(semantics, {k.height, k.width}, "semantic map");
  if (depth.shape() != semantics.shape()) {
    throw_error(ErrorCode::ShapeMismatch, "depth " + shape_to_string(depth.shape()) +
                                              " does not match semantics " +
                                              shape_to_string(semantics.shape()));
  }
  SemanticPointCloud cloud;
  for (std::size_t row = 0; row < k.height; ++row) {
    for (std::size_t col = 0; col < k.width; ++col) {
      std::uint8_t label = semantics(row, col);
      if (label == classes::kVoid) continue;
      double d = depth(row, col);
      if (!(d > 0.0)) continue;  // no return at this pixel
      Vec3 p = unproject(k, Pixel{static_cast<double>(col), static_cast<double>(row)}, d);
      cloud.append(transform(anchor_from_frame, p), label, source_id);
    }
  }
  return cloud;
}

SemanticPointCloud accumulate_window(const FrameWindow& window, const CameraIntrinsics& k,
                                     std::size_t jobs) {
  if (window.frames.empty()) throw_error(ErrorCode::EmptyWindow, "window has no frames");
  std::size_t n = window.frames.size();
  std::vector<SemanticPointCloud> partial(n);
  const Pose& world_from_anchor = window.frames[0].world_from_cam;
  parallel_for(n, jobs, [&](std::size_t i) {
    Pose anchor_from_frame = relative(world_from_anchor, window.frames[i].world_from_cam);
    partial[i] = lift_semantics(window.frames[i].semantics, window.frames[i].depth, k,
                                anchor_from_frame, static_cast<std::uint32_t>(i));
  });
  SemanticPointCloud cloud;
  std::size_t total = 0;
  for (const SemanticPointCloud& part : partial) total += part.size();
  cloud.points.reserve(total);
  cloud.labels.reserve(total);
  cloud.sources.reserve(total);
  for (const SemanticPointCloud& part : partial) {
    cloud.points.insert(cloud.points.end(), part.points.begin(), part.points.end());
    cloud.labels.insert(cloud.labels.end(), part.labels.begin(), part.labels.end());
    cloud.sources.insert(cloud.sources.end(), part.sources.begin(), part.sources.end());
  }
  log(LogLevel::Debug, "accumulated ", cloud.size(), " points from ", n, " frames");
  return cloud;
}

SemanticPointCloud filter_dynamic(const SemanticPointCloud& cloud,
                                  const SemanticMap& anchor_semantics,
                                  const CameraIntrinsics& k,
                                  const std::vector<std::uint8_t>& dynamic_classes) {
  require_shape(anchor_semantics, {k.height, k.width}, "anchor semantic map");
  auto is_dynamic = [&](std::uint8_t label) {
    return std::find(dynamic_classes.begin(), dynamic_classes.end(), label) !=
           dynamic_classes.end();
  };
  SemanticPointCloud kept;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    std::uint8_t label = cloud.labels[i];
    std::uint32_t source = cloud.sources[i];
    if (!is_dynamic(label)) {
      kept.append(p, label, source);
      continue;
    }
    // A dynamic point must reappear at its own class in the anchor view;
    // points from objects that moved between frames fail this check.
    if (!(p.z > 0.0)) {
      ++dropped;
      continue;
    }
    double u = k.fx * p.x / p.z + k.cx;
    double v = k.fy * p.y / p.z + k.cy;
    long long iu = std::llround(u);
    long long iv = std::llround(v);
    if (iu < 0 || iv < 0 || iu >= static_cast<long long>(k.width) ||
        iv >= static_cast<long long>(k.height)) {
      ++dropped;
      continue;
    }
    if (anchor_semantics(static_cast<std::size_t>(iv), static_cast<std::size_t>(iu)) == label) {
      kept.append(p, label, source);
    } else {
      ++dropped;
    }
  }
  log(LogLevel::Debug, "dynamic filter dropped ", dropped, " of ", cloud.size(), " points");
  return kept;
}

BevMap rasterize_static(const SemanticPointCloud& cloud, const BevSpec& bev) {
  BevMap map({bev.nx, bev.nz}, classes::kVoid);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::uint8_t label = cloud.labels[i];
    auto priority = classes::static_priority(label);
    if (!priority) continue;
    std::size_t ix = 0, iz = 0;
    if (!bev.cell_of(cloud.points[i].x, cloud.points[i].z, ix, iz)) continue;
    std::uint8_t current = map(ix, iz);
    if (current == classes::kVoid || *classes::static_priority(current) < *priority) {
      map(ix, iz) = label;
    }
  }
  return map;
}

BevMap densify_static(const BevMap& sparse, std::size_t closing_iters) {
  if (sparse.ndim() != 2) {
    throw_error(ErrorCode::ShapeMismatch,
                "map must be 2-d, got " + shape_to_string(sparse.shape()));
  }
  BevMap out = sparse;
  // Ascending priority: later (higher-priority) closures overwrite earlier ones.
  const std::uint8_t order[4] = {classes::kRoad, classes::kTerrain, classes::kSidewalk,
                                 classes::kBuilding};
  for (std::uint8_t cls : order) {
    Tensor<std::uint8_t> mask(sparse.shape());
    for (std::size_t i = 0; i < sparse.size(); ++i) mask[i] = sparse[i] == cls ? 1 : 0;
    Tensor<std::uint8_t> closed = binary_close(mask, closing_iters);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (closed[i]) out[i] = cls;
    }
  }
  return out;
}

std::vector<DynamicInstance> fit_dynamic_instances(const SemanticPointCloud& cloud,
                                                   const PseudolabelParams& params) {
  // Fixed ascending class order (not the config's list order) so the output
  // never depends on how dynamic_classes was written.
  std::vector<std::uint8_t> order = params.dynamic_classes;
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());

  struct FitTask {
    std::uint8_t cls;
    std::size_t cluster;
    std::vector<PointXZ> pts;
  };
  std::vector<FitTask> tasks;
  for (std::uint8_t cls : order) {
    std::vector<PointXZ> pts;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.labels[i] == cls) pts.push_back({cloud.points[i].x, cloud.points[i].z});
    }
    if (pts.empty()) continue;
    DbscanResult clusters = dbscan(pts, params.dbscan_eps, params.dbscan_min_pts);
    std::vector<FitTask> per_class(clusters.cluster_count);
    for (std::size_t c = 0; c < clusters.cluster_count; ++c) {
      per_class[c].cls = cls;
      per_class[c].cluster = c;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int id = clusters.labels[i];
      if (id >= 0) per_class[static_cast<std::size_t>(id)].pts.push_back(pts[i]);
    }
    for (FitTask& task : per_class) tasks.push_back(std::move(task));
  }

  double min_axis = params.bev.cell / 2.0;
  std::vector<DynamicInstance> instances(tasks.size());
  parallel_for(tasks.size(), params.jobs, [&](std::size_t t) {
    const FitTask& task = tasks[t];
    // Independent stream per (class, cluster): byte-stable under any jobs.
    std::uint64_t seed = mix_seed(params.seed, task.cls, task.cluster);
    RansacParams rp{params.ransac_iters, params.ransac_tol};
    Ellipse moments = fit_ellipse_pca(task.pts);
    Ellipse shape = moments;
    if (task.pts.size() >= 5) {
      Ellipse fitted = fit_ellipse_ransac(task.pts, rp, seed);
      // Sampson consensus assumes perimeter samples; on a filled cluster an
      // arc through the interior can out-vote the true boundary.  Keep the
      // consensus fit only while it stays compatible with the cluster's
      // moments, otherwise stick with the moment ellipse.
      double slack = std::max(0.5 * moments.a, params.bev.cell);
      bool plausible = std::hypot(fitted.x - moments.x, fitted.z - moments.z) <= slack &&
                       fitted.a <= 2.0 * moments.a + params.bev.cell &&
                       fitted.b <= 2.0 * moments.b + params.bev.cell;
      if (plausible) shape = fitted;
    }
    shape.a = std::max(shape.a, min_axis);
    shape.b = std::max(shape.b, min_axis);
    instances[t] = DynamicInstance{task.cls, shape, task.pts.size()};
  });
  log(LogLevel::Debug, "fitted ", instances.size(), " dynamic instances");
  return instances;
}

BevMap rasterize_dynamic(const std::vector<DynamicInstance>& instances, const BevSpec& bev) {
  // Ascending footprint area; stable sort keeps (class, cluster) order on ties.
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
    const Ellipse& a = instances[lhs].shape;
    const Ellipse& b = instances[rhs].shape;
    return a.a * a.b < b.a * b.b;
  });

  BevMap map({bev.nx, bev.nz}, classes::kVoid);
  for (std::size_t idx : order) {
    const DynamicInstance& inst = instances[idx];
    const Ellipse& e = inst.shape;
    double c = std::cos(e.theta), s = std::sin(e.theta);
    // Conservative candidate range: the box fits in a radius-sqrt(a^2+b^2) disc.
    double radius = std::hypot(e.a, e.b);
    double fx_lo = std::floor((e.x - radius - bev.origin_x) / bev.cell + 0.5);
    double fx_hi = std::floor((e.x + radius - bev.origin_x) / bev.cell + 0.5);
    double fz_lo = std::floor((e.z - radius - bev.origin_z) / bev.cell + 0.5);
    double fz_hi = std::floor((e.z + radius - bev.origin_z) / bev.cell + 0.5);
    auto clamp_cell = [](double f, std::size_t n) {
      if (f < 0.0) return static_cast<std::size_t>(0);
      if (f >= static_cast<double>(n)) return n == 0 ? std::size_t{0} : n - 1;
      return static_cast<std::size_t>(f);
    };
    std::size_t x_lo = clamp_cell(fx_lo, bev.nx), x_hi = clamp_cell(fx_hi, bev.nx);
    std::size_t z_lo = clamp_cell(fz_lo, bev.nz), z_hi = clamp_cell(fz_hi, bev.nz);
    if (fx_hi < 0.0 || fz_hi < 0.0 || fx_lo >= static_cast<double>(bev.nx) ||
        fz_lo >= static_cast<double>(bev.nz)) {
      continue;  // footprint entirely off the lattice
    }
    for (std::size_t ix = x_lo; ix <= x_hi; ++ix) {
      for (std::size_t iz = z_lo; iz <= z_hi; ++iz) {
        double dx = bev.center_x(ix) - e.x;
        double dz = bev.center_z(iz) - e.z;
        // Into box-local coordinates (rotate by -theta); half-open membership
        // so abutting boxes never double-claim a cell.
        double lx = c * dx + s * dz;
        double lz = -s * dx + c * dz;
        if (lx >= -e.a && lx < e.a && lz >= -e.b && lz < e.b) {
          map(ix, iz) = inst.cls;
        }
      }
    }
  }
  return map;
}

BevMap merge_maps(const BevMap& statics, const BevMap& dynamics) {
  if (!statics.same_shape(dynamics)) {
    throw_error(ErrorCode::LatticeMismatch, "static map " + shape_to_string(statics.shape()) +
                                                " vs dynamic map " +
                                                shape_to_string(dynamics.shape()));
  }
  BevMap out = statics;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (dynamics[i] != classes::kVoid) out[i] = dynamics[i];
  }
  return out;
}

PseudolabelResult generate_pseudolabel(const FrameWindow& window, const CameraIntrinsics& k,
                                       const PseudolabelParams& params) {
  if (window.frames.empty()) throw_error(ErrorCode::EmptyWindow, "window has no frames");
  SemanticPointCloud cloud = accumulate_window(window, k, params.jobs);
  SemanticPointCloud kept =
      filter_dynamic(cloud, window.frames[0].semantics, k, params.dynamic_classes);

  PseudolabelResult result;
  result.static_map = densify_static(rasterize_static(kept, params.bev), params.closing_iters);
  result.instances = fit_dynamic_instances(kept, params);
  result.dynamic_map = rasterize_dynamic(result.instances, params.bev);
  result.map = merge_maps(result.static_map, result.dynamic_map);
  return result;
}

}  // namespace bevforge
