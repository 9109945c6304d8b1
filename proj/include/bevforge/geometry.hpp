#pragma once

#include <cmath>
#include <cstddef>

#include "bevforge/error.hpp"

namespace bevforge {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Row-major 3x3 matrix; m[3*row + col].
struct Mat3 {
  double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }

  double operator()(std::size_t row, std::size_t col) const { return m[3 * row + col]; }
  double& operator()(std::size_t row, std::size_t col) { return m[3 * row + col]; }
};

inline Vec3 operator*(const Mat3& a, const Vec3& p) {
  return {a.m[0] * p.x + a.m[1] * p.y + a.m[2] * p.z,
          a.m[3] * p.x + a.m[4] * p.y + a.m[5] * p.z,
          a.m[6] * p.x + a.m[7] * p.y + a.m[8] * p.z};
}

Mat3 operator*(const Mat3& a, const Mat3& b);
Mat3 transpose(const Mat3& a);
double determinant(const Mat3& a);

// Rotation about +y (camera convention below: x right, y down, z forward), so a
// positive angle turns the forward axis toward +x.
Mat3 rotation_y(double radians);

// Max-abs entry of R^T R - I; zero for an exact rotation.
double orthonormality_error(const Mat3& r);

// Throws NonRigidRotation when the block is not a proper rotation to within
// `tol` (default matches the pose-file contract) or has negative determinant.
void validate_rotation(const Mat3& r, double tol = 1e-4);

// Nearest proper rotation in the Frobenius sense (polar factor via SVD).
// Reflections are rejected, not repaired.
Mat3 orthonormalize_rotation(const Mat3& r);

// Pinhole camera: x right, y down, z forward (optical axis).
struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  std::size_t width = 0, height = 0;
};

struct Pixel {
  double u = 0.0, v = 0.0;
};

// Perspective projection; the point must be strictly in front of the camera.
Pixel project(const CameraIntrinsics& k, const Vec3& p);

// Inverse of project at the given (positive) camera-frame depth z.
Vec3 unproject(const CameraIntrinsics& k, const Pixel& px, double depth);

// True when (u, v) lies inside [0, W-1] x [0, H-1], i.e. the region where
// bilinear interpolation is fully supported by real pixels.
bool pixel_in_image(const CameraIntrinsics& k, const Pixel& px);

/// Rigid transform taking source-frame coordinates to target-frame coordinates:
// p_target = r * p_source + t.
struct Pose {
  Mat3 r;
  Vec3 t;

  static Pose identity() { return Pose{}; }
};

inline Vec3 transform(const Pose& pose, const Vec3& p) { return pose.r * p + pose.t; }

// compose(a, b) applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& pose);

// Given world-from-target and world-from-source camera poses, the transform
// taking source-frame points into the target frame.
Pose relative(const Pose& world_from_target, const Pose& world_from_source);

// Voxel lattice over the camera frame of its anchor frame.  `origin` is the
// center of voxel (0, 0, 0); voxel (ix, iy, iz) is centered at
// origin + cell * (ix, iy, iz).
struct GridSpec {
  std::size_t nx = 96, ny = 8, nz = 96;
  double cell = 0.5;
  Vec3 origin{-23.75, -0.75, 0.25};

  std::size_t volume() const { return nx * ny * nz; }

  Vec3 cell_center(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return {origin.x + cell * static_cast<double>(ix), origin.y + cell * static_cast<double>(iy),
            origin.z + cell * static_cast<double>(iz)};
  }

  // Continuous lattice coordinates of a metric point; (0,0,0) at the origin
  // voxel center, one unit per cell.
  Vec3 index_coords(const Vec3& p) const {
    return {(p.x - origin.x) / cell, (p.y - origin.y) / cell, (p.z - origin.z) / cell};
  }

  bool operator==(const GridSpec& other) const = default;
};

// Ground-plane (x, z) lattice for maps; `origin_x/origin_z` is the center of
// cell (0, 0).  Cell (ix, iz) covers the half-open square
// [center - cell/2, center + cell/2) on both axes.
struct BevSpec {
  std::size_t nx = 96, nz = 96;
  double cell = 0.5;
  double origin_x = -23.75, origin_z = 0.25;

  double center_x(std::size_t ix) const { return origin_x + cell * static_cast<double>(ix); }
  double center_z(std::size_t iz) const { return origin_z + cell * static_cast<double>(iz); }

  // Nearest-cell binning; false when (x, z) falls outside the lattice.
  bool cell_of(double x, double z, std::size_t& ix, std::size_t& iz) const {
    double fx = std::floor((x - origin_x) / cell + 0.5);
    double fz = std::floor((z - origin_z) / cell + 0.5);
    if (fx < 0.0 || fz < 0.0 || fx >= static_cast<double>(nx) || fz >= static_cast<double>(nz))
      return false;
    ix = static_cast<std::size_t>(fx);
    iz = static_cast<std::size_t>(fz);
    return true;
  }

  bool operator==(const BevSpec& other) const = default;
};

}  // namespace bevforge
