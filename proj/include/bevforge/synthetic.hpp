#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevforge/classes.hpp"
#include "bevforge/geometry.hpp"
#include "bevforge/tensor.hpp"

namespace bevforge::synth {

// Axis-aligned box obstacle in world coordinates.  The footprint is centered
// at (cx, cz) with half extents (hx, hz); the body spans the `height` meters
// directly above the ground plane.  (vx, vz) displace the footprint once per
// frame, so frame i sees the center at (cx + i*vx, cz + i*vz).
struct Box {
  std::uint8_t cls = classes::kBuilding;
  double cx = 0.0, cz = 0.0;
  double hx = 1.0, hz = 1.0;
  double height = 1.0;
  double vx = 0.0, vz = 0.0;

  double cx_at(std::size_t frame) const { return cx + static_cast<double>(frame) * vx; }
  double cz_at(std::size_t frame) const { return cz + static_cast<double>(frame) * vz; }
  bool moving() const { return vx != 0.0 || vz != 0.0; }
};

// Vertical cylinder standing on the ground plane.
struct Cylinder {
  std::uint8_t cls = classes::kPerson;
  double cx = 0.0, cz = 0.0;
  double radius = 0.3;
  double height = 1.7;
  double vx = 0.0, vz = 0.0;

  double cx_at(std::size_t frame) const { return cx + static_cast<double>(frame) * vx; }
  double cz_at(std::size_t frame) const { return cz + static_cast<double>(frame) * vz; }
};

// A fully determined street scene: flat ground bands (road flanked by
// sidewalks, then terrain, then nothing) along the world z axis, plus box and
// cylinder obstacles and one camera pose per frame.  The world frame
// coincides with the first camera frame; y points down, so the ground plane
// sits at y = +camera_height.
struct Scene {
  std::uint64_t seed = 0;
  CameraIntrinsics camera;
  double camera_height = 1.55;
  double road_half = 3.5;
  double sidewalk_width = 2.0;
  double terrain_width = 8.0;
  double depth_noise_sigma = 0.0;
  std::vector<Box> boxes;
  std::vector<Cylinder> cylinders;
  std::vector<Pose> world_from_cam;

  std::size_t frames() const { return world_from_cam.size(); }
};

// Knobs for generate_scene; everything else is drawn from the seed.
struct SceneConfig {
  std::size_t frames = 12;
  double spacing = 0.8;        // forward meters between consecutive poses
  double arc_degrees = 0.0;    // total heading change across the trajectory
  bool moving = false;         // give at least one vehicle a velocity
  double depth_noise_sigma = 0.0;
  std::size_t width = 256;
  std::size_t height = 96;
  double focal = 110.0;
  double camera_height = 1.55;
};

// Draws a random street: band widths, 2-6 buildings beyond the sidewalks,
// 1-5 parked vehicles on the road, 0-3 persons or 2-wheelers on the
// sidewalks, and a straight (or gently arcing) trajectory.  The same seed and
// config always produce the same scene.
Scene generate_scene(std::uint64_t seed, const SceneConfig& config = {});

struct RenderedFrame {
  SemanticMap semantics;  // H x W class ids; 255 where no surface is hit
  Tensor<float> depth;    // H x W camera-frame z of the hit; 0 where none
};

// Ray-casts the frame's camera against the scene: one ray per pixel center,
// nearest surface wins, depth measured along the camera z axis.
RenderedFrame render_frame(const Scene& scene, std::size_t frame_index);

// Ground-truth class of every lattice cell center on the anchor frame's
// bird's-eye lattice at the anchor instant, regardless of what any camera
// can see.  Obstacles paint over ground bands; vehicles and walkers paint
// over buildings.
BevMap render_bev_gt(const Scene& scene, std::size_t anchor_index, const BevSpec& bev);

// Writes the rendered sequence under `dir`:
//   intrinsics.txt, poses.txt, scene.txt,
//   semantic/NNNN.pgm, depth/NNNN.btr (f32), bev_gt/NNNN.pgm.
void write_sequence(const Scene& scene, const std::string& dir, const BevSpec& bev);

}  // namespace bevforge::synth
