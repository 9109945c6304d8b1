#pragma once

#include <cstdint>
#include <vector>

#include "bevforge/classes.hpp"
#include "bevforge/dbscan.hpp"
#include "bevforge/ellipse.hpp"
#include "bevforge/geometry.hpp"
#include "bevforge/tensor.hpp"

namespace bevforge {

// Labeled 3-d points in the anchor camera frame (structure-of-arrays), each
// tagged with the index of the window frame it was lifted from.
struct SemanticPointCloud {
  std::vector<Vec3> points;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint32_t> sources;

  std::size_t size() const { return points.size(); }

  void append(const Vec3& p, std::uint8_t label, std::uint32_t source) {
    points.push_back(p);
    labels.push_back(label);
    sources.push_back(source);
  }
};

// One observed frame: semantic image, per-pixel metric depth (<= 0 means no
// return), and the camera-to-world pose.  `id` is the frame's index in its
// sequence, carried for bookkeeping only.
struct Frame {
  SemanticMap semantics;
  Tensor<float> depth;
  Pose world_from_cam;
  std::size_t id = 0;
};

// frames[0] is the anchor everything is expressed relative to; anchor_id and
// stride record where the window came from in its sequence.
struct FrameWindow {
  std::vector<Frame> frames;
  std::size_t anchor_id = 0;
  std::size_t stride = 1;
};

// A clustered dynamic object: fitted ground-plane ellipse plus the class and
// the number of supporting points.
struct DynamicInstance {
  std::uint8_t cls = 0;
  Ellipse shape;
  std::size_t support = 0;
};

struct PseudolabelParams {
  BevSpec bev;
  std::vector<std::uint8_t> dynamic_classes{classes::kDefaultDynamic.begin(),
                                            classes::kDefaultDynamic.end()};
  double dbscan_eps = 0.8;
  std::size_t dbscan_min_pts = 8;
  std::size_t closing_iters = 2;
  std::size_t ransac_iters = 200;
  double ransac_tol = 0.05;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Back-projects every labeled pixel with a depth return into 3-d and maps it
// through `anchor_from_frame`.  Points appear in row-major pixel order and
// carry `source_id` as their origin tag.
SemanticPointCloud lift_semantics(const SemanticMap& semantics, const Tensor<float>& depth,
                                  const CameraIntrinsics& k, const Pose& anchor_from_frame,
                                  std::uint32_t source_id = 0);

// Lifts every frame of the window into the anchor frame and concatenates the
// clouds in frame order (framewise lifting runs on `jobs` threads; the output
// does not depend on the thread count).
SemanticPointCloud accumulate_window(const FrameWindow& window, const CameraIntrinsics& k,
                                     std::size_t jobs = 1);

// Moving-object rejection: a point of a dynamic class survives only if it
// projects into the anchor image and the anchor's semantic map agrees with
// its label at the nearest pixel.  Points of other classes pass through.
SemanticPointCloud filter_dynamic(const SemanticPointCloud& cloud,
                                  const SemanticMap& anchor_semantics,
                                  const CameraIntrinsics& k,
                                  const std::vector<std::uint8_t>& dynamic_classes);

// Nearest-cell rasterization of the static classes; overlaps resolve by class
// priority (road < terrain < sidewalk < building), so the result is
// independent of point order.  Untouched cells are 255.
BevMap rasterize_static(const SemanticPointCloud& cloud, const BevSpec& bev);

// Morphological closing per static class, overlaid in ascending priority so
// higher-priority closures win overlap cells.
BevMap densify_static(const BevMap& sparse, std::size_t closing_iters);

// Clusters each dynamic class on the ground plane and fits one ellipse per
// cluster: a robust conic fit for clusters of >= 5 points, falling back to
// the second-moment fit when the consensus ellipse drifts away from the
// cluster's moments (dense filled clusters can reward an arc through their
// interior) or when the cluster is too small for a conic.  Axes are floored
// at half a cell so every instance covers at least one cell.  Each fit draws
// from its own seed stream derived from (seed, class, cluster), so results
// are stable under `jobs`.
std::vector<DynamicInstance> fit_dynamic_instances(const SemanticPointCloud& cloud,
                                                   const PseudolabelParams& params);

// Paints each instance's oriented box (the ellipse's center/axes/angle as a
// rectangle footprint, half-open in local coordinates) into an empty map.
// Instances are painted in ascending area so larger footprints overwrite
// smaller ones on overlap.
BevMap rasterize_dynamic(const std::vector<DynamicInstance>& instances, const BevSpec& bev);

// Dynamic cells overwrite static ones; both maps must share the lattice.
BevMap merge_maps(const BevMap& statics, const BevMap& dynamics);

// The full pipeline: accumulate -> filter -> (rasterize + densify statics) and
// (cluster + fit + rasterize dynamics) -> merge.  Intermediates are returned
// for inspection and debug output.
struct PseudolabelResult {
  BevMap map;
  BevMap static_map;
  BevMap dynamic_map;
  std::vector<DynamicInstance> instances;
};

PseudolabelResult generate_pseudolabel(const FrameWindow& window, const CameraIntrinsics& k,
                                       const PseudolabelParams& params);

}  // namespace bevforge
