#include "bevforge/voxel.hpp"

#include <cmath>
#include <sstream>

namespace bevforge {

std::vector<double> uniform_bin_edges(std::size_t bins, double depth_min, double depth_max) {
  std::vector<double> edges(bins + 1);
  double width = (depth_max - depth_min) / static_cast<double>(bins);
  for (std::size_t j = 0; j <= bins; ++j) {
    edges[j] = depth_min + static_cast<double>(j) * width;
  }
  edges[bins] = depth_max;
  return edges;
}

void validate_depth_distribution(const DepthDistribution& dist, double tol) {
  if (dist.data.ndim() != 3) {
    throw_error(ErrorCode::ShapeMismatch, "depth distribution must be D x H x W, got " +
                                              shape_to_string(dist.data.shape()));
  }
  std::size_t d = dist.data.dim(0), h = dist.data.dim(1), w = dist.data.dim(2);
  if (dist.bin_edges.size() != d + 1) {
    throw_error(ErrorCode::ShapeMismatch,
                std::to_string(d) + " bins need " + std::to_string(d + 1) + " edges, got " +
                    std::to_string(dist.bin_edges.size()));
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!(dist.bin_edges[j + 1] > dist.bin_edges[j])) {
      throw_error(ErrorCode::InvalidValue, "bin edges must increase strictly");
    }
  }
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) {
      double sum = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double p = dist.data(j, row, col);
        if (p < 0.0) {
          std::ostringstream msg;
          msg << "negative bin mass " << p << " at pixel (" << row << ", " << col << ")";
          throw_error(ErrorCode::InvalidValue, msg.str());
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) {
        std::ostringstream msg;
        msg << "bin mass at pixel (" << row << ", " << col << ") sums to " << sum;
        throw_error(ErrorCode::InvalidValue, msg.str());
      }
    }
  }
}

double depth_likelihood(const DepthDistribution& dist, std::size_t row, std::size_t col,
                        double d) {
  std::size_t bins = dist.bins();
  if (bins == 1 || d <= dist.bin_center(0)) return dist.data(0, row, col);
  if (d >= dist.bin_center(bins - 1)) return dist.data(bins - 1, row, col);
  // Find j with center(j) <= d < center(j+1); edges may be non-uniform.
  std::size_t lo = 0, hi = bins - 1;
  while (hi - lo > 1) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (dist.bin_center(mid) <= d) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double c0 = dist.bin_center(lo), c1 = dist.bin_center(lo + 1);
  double t = (d - c0) / (c1 - c0);
  return (1.0 - t) * dist.data(lo, row, col) + t * dist.data(lo + 1, row, col);
}

TrilinearStencil trilinear_stencil(std::size_t nx, std::size_t ny, std::size_t nz,
                                   const Vec3& index_coords) {
  TrilinearStencil s{};
  double fx = std::floor(index_coords.x);
  double fy = std::floor(index_coords.y);
  double fz = std::floor(index_coords.z);
  double tx = index_coords.x - fx;
  double ty = index_coords.y - fy;
  double tz = index_coords.z - fz;
  // Base corner can sit one cell outside on any axis and still touch the
  // volume through its +1 neighbors.
  long long bx = static_cast<long long>(fx);
  long long by = static_cast<long long>(fy);
  long long bz = static_cast<long long>(fz);
  const double wx[2] = {1.0 - tx, tx};
  const double wy[2] = {1.0 - ty, ty};
  const double wz[2] = {1.0 - tz, tz};
  std::size_t corner = 0;
  for (long long dx = 0; dx < 2; ++dx) {
    for (long long dy = 0; dy < 2; ++dy) {
      for (long long dz = 0; dz < 2; ++dz, ++corner) {
        long long ix = bx + dx, iy = by + dy, iz = bz + dz;
        bool ok = ix >= 0 && iy >= 0 && iz >= 0 && ix < static_cast<long long>(nx) &&
                  iy < static_cast<long long>(ny) && iz < static_cast<long long>(nz);
        s.valid[corner] = ok;
        s.weights[corner] = wx[dx] * wy[dy] * wz[dz];
        s.offsets[corner] =
            ok ? (static_cast<std::size_t>(ix) * ny + static_cast<std::size_t>(iy)) * nz +
                     static_cast<std::size_t>(iz)
               : 0;
      }
    }
  }
  return s;
}

BilinearStencil bilinear_stencil(std::size_t height, std::size_t width, double u, double v) {
  BilinearStencil s{};
  double umax = static_cast<double>(width) - 1.0;
  double vmax = static_cast<double>(height) - 1.0;
  if (!(u >= 0.0 && v >= 0.0 && u <= umax && v <= vmax)) {
    s.inside = false;
    return s;
  }
  s.inside = true;
  // Clamp the base so u0+1/v0+1 always index real pixels; at the far edge the
  // fractional weight becomes exactly 1 on the clamped corner.
  std::size_t u0 = static_cast<std::size_t>(u);
  std::size_t v0 = static_cast<std::size_t>(v);
  if (width >= 2 && u0 > width - 2) u0 = width - 2;
  if (height >= 2 && v0 > height - 2) v0 = height - 2;
  std::size_t u1 = (width >= 2) ? u0 + 1 : u0;
  std::size_t v1 = (height >= 2) ? v0 + 1 : v0;
  double tu = u - static_cast<double>(u0);
  double tv = v - static_cast<double>(v0);
  s.offsets = {v0 * width + u0, v0 * width + u1, v1 * width + u0, v1 * width + u1};
  s.weights = {(1.0 - tu) * (1.0 - tv), tu * (1.0 - tv), (1.0 - tu) * tv, tu * tv};
  return s;
}

VoxelGrid lift_features(const Tensor<double>& features, const DepthDistribution& dist,
                        const CameraIntrinsics& k, const GridSpec& spec) {
  if (features.ndim() != 3) {
    throw_error(ErrorCode::ShapeMismatch,
                "features must be C x H x W, got " + shape_to_string(features.shape()));
  }
  std::size_t channels = features.dim(0);
  std::size_t h = features.dim(1), w = features.dim(2);
  if (h != k.height || w != k.width) {
    throw_error(ErrorCode::ShapeMismatch, "features are " + shape_to_string(features.shape()) +
                                              " but the camera is " + std::to_string(k.width) +
                                              "x" + std::to_string(k.height));
  }
  if (dist.data.ndim() != 3 || dist.data.dim(1) != h || dist.data.dim(2) != w) {
    throw_error(ErrorCode::ShapeMismatch, "depth distribution " +
                                              shape_to_string(dist.data.shape()) +
                                              " does not cover the image plane");
  }

  VoxelGrid out = VoxelGrid::zeros(channels, spec);
  std::size_t volume = spec.volume();
  const std::size_t plane = h * w;
  for (std::size_t ix = 0; ix < spec.nx; ++ix) {
    for (std::size_t iy = 0; iy < spec.ny; ++iy) {
      for (std::size_t iz = 0; iz < spec.nz; ++iz) {
        Vec3 p = spec.cell_center(ix, iy, iz);
        if (!(p.z > 0.0)) continue;
        Pixel px{k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
        BilinearStencil s = bilinear_stencil(h, w, px.u, px.v);
        if (!s.inside) continue;
        // Bilinear blend of the four neighbors' likelihood at this depth.
        double lik = 0.0;
        for (std::size_t c4 = 0; c4 < 4; ++c4) {
          std::size_t row = s.offsets[c4] / w, col = s.offsets[c4] % w;
          lik += s.weights[c4] * depth_likelihood(dist, row, col, p.z);
        }
        std::size_t voxel = (ix * spec.ny + iy) * spec.nz + iz;
        for (std::size_t c = 0; c < channels; ++c) {
          double feat = sample_plane(features.data() + c * plane, s);
          out.data[c * volume + voxel] = feat * lik;
        }
      }
    }
  }
  return out;
}

VoxelGrid warp_grid(const VoxelGrid& grid, const Pose& target_from_source) {
  const GridSpec& spec = grid.spec;
  std::size_t channels = grid.channels();
  std::size_t volume = spec.volume();
  VoxelGrid out = VoxelGrid::zeros(channels, spec);
  Pose source_from_target = invert(target_from_source);
  for (std::size_t ix = 0; ix < spec.nx; ++ix) {
    for (std::size_t iy = 0; iy < spec.ny; ++iy) {
      for (std::size_t iz = 0; iz < spec.nz; ++iz) {
        Vec3 p_source = transform(source_from_target, spec.cell_center(ix, iy, iz));
        TrilinearStencil s =
            trilinear_stencil(spec.nx, spec.ny, spec.nz, spec.index_coords(p_source));
        std::size_t voxel = (ix * spec.ny + iy) * spec.nz + iz;
        for (std::size_t c = 0; c < channels; ++c) {
          out.data[c * volume + voxel] = sample_slab(grid.data.data() + c * volume, s);
        }
      }
    }
  }
  return out;
}

Tensor<double> fv_head(const VoxelGrid& grid, const CameraIntrinsics& k, const FvSpec& spec,
                       const LinearHead& head) {
  if (spec.ray_count == 0) throw_error(ErrorCode::InvalidValue, "ray_count must be >= 1");
  std::size_t channels = grid.channels();
  std::size_t in_dim = channels * spec.ray_count;
  if (head.in_dim() != in_dim || head.bias.size() != head.out_dim()) {
    throw_error(ErrorCode::ShapeMismatch,
                "front-view head wants " + std::to_string(in_dim) + " inputs, weight is " +
                    shape_to_string(head.weight.shape()) + " with " +
                    std::to_string(head.bias.size()) + " biases");
  }
  std::size_t n_class = head.out_dim();
  std::size_t h = k.height, w = k.width;
  std::size_t volume = grid.spec.volume();
  Tensor<double> logits({n_class, h, w});
  std::vector<double> phi(in_dim);
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) {
      for (std::size_t j = 0; j < spec.ray_count; ++j) {
        double d = spec.ray_depth(j);
        Vec3 p = unproject(k, Pixel{static_cast<double>(col), static_cast<double>(row)}, d);
        TrilinearStencil s =
            trilinear_stencil(grid.spec.nx, grid.spec.ny, grid.spec.nz, grid.spec.index_coords(p));
        for (std::size_t c = 0; c < channels; ++c) {
          phi[j * channels + c] = sample_slab(grid.data.data() + c * volume, s);
        }
      }
      for (std::size_t cls = 0; cls < n_class; ++cls) {
        double acc = head.bias[cls];
        const double* wrow = head.weight.data() + cls * in_dim;
        for (std::size_t s = 0; s < in_dim; ++s) acc += wrow[s] * phi[s];
        logits(cls, row, col) = acc;
      }
    }
  }
  return logits;
}

Tensor<double> bev_head(const VoxelGrid& grid, const LinearHead& head) {
  const GridSpec& spec = grid.spec;
  std::size_t channels = grid.channels();
  std::size_t in_dim = channels * spec.ny;
  if (head.in_dim() != in_dim || head.bias.size() != head.out_dim()) {
    throw_error(ErrorCode::ShapeMismatch,
                "bird's-eye head wants " + std::to_string(in_dim) + " inputs, weight is " +
                    shape_to_string(head.weight.shape()) + " with " +
                    std::to_string(head.bias.size()) + " biases");
  }
  std::size_t n_class = head.out_dim();
  std::size_t volume = spec.volume();
  Tensor<double> logits({n_class, spec.nx, spec.nz});
  std::vector<double> phi(in_dim);
  for (std::size_t ix = 0; ix < spec.nx; ++ix) {
    for (std::size_t iz = 0; iz < spec.nz; ++iz) {
      for (std::size_t iy = 0; iy < spec.ny; ++iy) {
        std::size_t voxel = (ix * spec.ny + iy) * spec.nz + iz;
        for (std::size_t c = 0; c < channels; ++c) {
          phi[iy * channels + c] = grid.data[c * volume + voxel];
        }
      }
      for (std::size_t cls = 0; cls < n_class; ++cls) {
        double acc = head.bias[cls];
        const double* wrow = head.weight.data() + cls * in_dim;
        for (std::size_t s = 0; s < in_dim; ++s) acc += wrow[s] * phi[s];
        logits(cls, ix, iz) = acc;
      }
    }
  }
  return logits;
}

}  // namespace bevforge
