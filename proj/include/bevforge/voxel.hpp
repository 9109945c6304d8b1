#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "bevforge/geometry.hpp"
#include "bevforge/tensor.hpp"

namespace bevforge {

// Latent feature volume over a camera-frame lattice, C x X x Y x Z row-major
// (channel slabs are contiguous X*Y*Z blocks).
struct VoxelGrid {
  Tensor<double> data;
  GridSpec spec;

  static VoxelGrid zeros(std::size_t channels, const GridSpec& spec) {
    return {Tensor<double>({channels, spec.nx, spec.ny, spec.nz}), spec};
  }

  std::size_t channels() const { return data.dim(0); }
};

// Per-pixel categorical distribution over D depth bins; data is D x H x W and
// bin_edges holds the D+1 strictly increasing bin boundaries in meters.
struct DepthDistribution {
  Tensor<double> data;
  std::vector<double> bin_edges;

  std::size_t bins() const { return data.dim(0); }
  double bin_center(std::size_t j) const { return 0.5 * (bin_edges[j] + bin_edges[j + 1]); }
};

// D+1 evenly spaced edges spanning [depth_min, depth_max].
std::vector<double> uniform_bin_edges(std::size_t bins, double depth_min, double depth_max);

// Throws InvalidValue unless bin_edges is strictly increasing with D+1 entries
// and every pixel's bin mass is non-negative and sums to 1 within `tol`.
// Kept separate from lift_features: file-loaded inputs get checked once at
// the boundary, not on every call.
void validate_depth_distribution(const DepthDistribution& dist, double tol = 1e-5);

// Likelihood of metric depth `d` at pixel (row, col): linear interpolation
// between adjacent bin-center masses, clamped flat outside the center span.
double depth_likelihood(const DepthDistribution& dist, std::size_t row, std::size_t col,
                        double d);

// Dense affine map: K output classes from C_in concatenated features.
struct LinearHead {
  Tensor<double> weight;      // K x C_in
  std::vector<double> bias;   // K

  std::size_t out_dim() const { return weight.dim(0); }
  std::size_t in_dim() const { return weight.dim(1); }
};

// Frustum ray sampling for the front-view head: ray_count depths evenly
// spaced over [ray_min, ray_max] inclusive.
struct FvSpec {
  std::size_t ray_count = 48;
  double ray_min = 1.0;
  double ray_max = 49.0;

  double ray_depth(std::size_t j) const {
    if (ray_count == 1) return 0.5 * (ray_min + ray_max);
    return ray_min + static_cast<double>(j) * (ray_max - ray_min) /
                         static_cast<double>(ray_count - 1);
  }
};

// ---- Interpolation stencils --------------------------------------------------
// Shared by the forward samplers and the hand-written backward passes, so the
// gradients scatter through exactly the weights the forward pass gathered.

// Eight-corner trilinear stencil into an nx*ny*nz slab laid out (ix*ny+iy)*nz+iz.
// Out-of-range corners read/write nothing: the volume is zero-padded.
struct TrilinearStencil {
  std::array<std::size_t, 8> offsets;
  std::array<double, 8> weights;
  std::array<bool, 8> valid;
};

TrilinearStencil trilinear_stencil(std::size_t nx, std::size_t ny, std::size_t nz,
                                   const Vec3& index_coords);

inline double sample_slab(const double* slab, const TrilinearStencil& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    if (s.valid[i]) acc += s.weights[i] * slab[s.offsets[i]];
  }
  return acc;
}

inline void scatter_slab(double* slab, const TrilinearStencil& s, double g) {
  for (std::size_t i = 0; i < 8; ++i) {
    if (s.valid[i]) slab[s.offsets[i]] += s.weights[i] * g;
  }
}

// Four-corner bilinear stencil into an h*w image plane.  `inside` is false
// unless (u, v) lies in [0, w-1] x [0, h-1]; samples outside contribute zero.
struct BilinearStencil {
  std::array<std::size_t, 4> offsets;
  std::array<double, 4> weights;
  bool inside = false;
};

BilinearStencil bilinear_stencil(std::size_t height, std::size_t width, double u, double v);

inline double sample_plane(const double* plane, const BilinearStencil& s) {
  if (!s.inside) return 0.0;
  return s.weights[0] * plane[s.offsets[0]] + s.weights[1] * plane[s.offsets[1]] +
         s.weights[2] * plane[s.offsets[2]] + s.weights[3] * plane[s.offsets[3]];
}

// ---- Volume operators ----------------------------------------------------------

// Lifts C x H x W image features into the voxel grid: each voxel center is
// projected into the image; its value is the bilinear feature sample scaled by
// the bilinear depth-likelihood sample at the voxel's camera depth.  Voxels
// behind the camera or projecting outside the image get zero.
VoxelGrid lift_features(const Tensor<double>& features, const DepthDistribution& dist,
                        const CameraIntrinsics& k, const GridSpec& spec);

// Resamples the volume into the target frame's lattice (inverse mapping with
// trilinear interpolation, zero padding): out(q) = in(T^-1 centered at q).
// `target_from_source` maps source-frame coordinates to target-frame ones.
VoxelGrid warp_grid(const VoxelGrid& grid, const Pose& target_from_source);

// Front-view head: for every pixel, samples the volume at ray_count depths
// along the pixel ray, concatenates [ray0 C channels, ray1 C channels, ...],
// and applies the affine head.  Returns K x H x W logits.
Tensor<double> fv_head(const VoxelGrid& grid, const CameraIntrinsics& k, const FvSpec& spec,
                       const LinearHead& head);

// Bird's-eye-view head: for every (ix, iz) column, concatenates
// [y0 C channels, y1 C channels, ...] and applies the affine head.
// Returns K x X x Z logits.
Tensor<double> bev_head(const VoxelGrid& grid, const LinearHead& head);

}  // namespace bevforge
