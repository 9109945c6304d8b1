#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bevforge/classes.hpp"
#include "bevforge/geometry.hpp"
#include "bevforge/tensor.hpp"

namespace bevforge {

// ---- BTR1 binary tensors ---------------------------------------------------
// Layout: magic "BTR1", one dtype byte (0 = uint8, 1 = float32 little-endian),
// one ndim byte, ndim uint32 little-endian dims, then the row-major payload.

Tensor<float> read_tensor_f32(const std::filesystem::path& path);
Tensor<std::uint8_t> read_tensor_u8(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor<float>& t);
void write_tensor(const std::filesystem::path& path, const Tensor<std::uint8_t>& t);

// ---- Images -----------------------------------------------------------------
// Binary PGM (P5) with maxval 255 carries class-id maps; binary PPM (P6) is
// write-only for color renders.

SemanticMap read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Tensor<std::uint8_t>& image);

// rgb must be H x W x 3.
void write_ppm(const std::filesystem::path& path, const Tensor<std::uint8_t>& rgb);

// Class-id map -> H x W x 3 palette render (unknown ids -> black).
Tensor<std::uint8_t> colorize_labels(const Tensor<std::uint8_t>& labels);

// ---- Camera & poses ----------------------------------------------------------

// Single line "fx fy cx cy width height".
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

// One line per frame: "index r11 r12 r13 t1 r21 r22 r23 t2 r31 r32 r33 t3",
// row-major camera-to-world transform.  Indices must run 0..N-1 in order.
// Rotation blocks are validated (orthonormal within 1e-4, no reflections) and
// then snapped to the nearest exact rotation.
std::vector<Pose> read_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path, const std::vector<Pose>& world_from_cam);

// ---- Run configuration --------------------------------------------------------
// key=value lines, '#' comments, blank lines ignored.  Unknown keys are errors
// (misspelled keys must not silently fall back to defaults).

struct RunConfig {
  std::string in_dir;
  std::string out_dir;

  std::size_t window_size = 10;
  std::size_t window_stride = 2;

  std::size_t grid_x = 96, grid_y = 8, grid_z = 96;
  double grid_cell = 0.5;
  double grid_origin_x = -23.75, grid_origin_y = -0.75, grid_origin_z = 0.25;

  std::size_t bev_x = 96, bev_z = 96;
  double bev_cell = 0.5;
  double bev_origin_x = -23.75, bev_origin_z = 0.25;

  std::size_t depth_bins = 48;
  double depth_min = 1.0, depth_max = 49.0;
  std::size_t ray_count = 48;
  double ray_min = 1.0, ray_max = 49.0;

  double dbscan_eps = 0.8;
  std::size_t dbscan_min_pts = 8;
  std::size_t closing_iters = 2;
  std::size_t ransac_iters = 200;
  double ransac_tol = 0.05;

  std::uint64_t seed = 0;
  std::vector<std::uint8_t> dynamic_classes{4, 5, 6, 7};

  GridSpec grid_spec() const {
    return GridSpec{grid_x, grid_y, grid_z, grid_cell,
                    Vec3{grid_origin_x, grid_origin_y, grid_origin_z}};
  }
  BevSpec bev_spec() const { return BevSpec{bev_x, bev_z, bev_cell, bev_origin_x, bev_origin_z}; }
};

// Defaults overlaid with the file's assignments; cross-field ranges are
// enforced after the last line is applied.
RunConfig parse_config(const std::filesystem::path& path);

// Applies one "key=value" assignment (the unit parse_config is built from).
void apply_config_line(RunConfig& config, const std::string& line);

// Full round-trippable dump of every key, one per line, in registry order.
std::string render_config(const RunConfig& config);
void write_effective_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace bevforge
