#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bevforge/dbscan.hpp"

namespace bevforge {

// Ground-plane ellipse: center (x, z), semi-major a >= semi-minor b,
// major-axis angle theta in [0, pi) measured from +x toward +z.
struct Ellipse {
  double x = 0.0;
  double z = 0.0;
  double a = 0.0;
  double b = 0.0;
  double theta = 0.0;
};

// General conic A x^2 + B xz + C z^2 + D x + E z + F = 0.
struct Conic {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0, f = 0.0;
};

// Exact conic through five points (null space of the 5x6 design matrix).
// False when the points are degenerate (e.g. three collinear).
bool conic_from_five(const std::array<PointXZ, 5>& pts, Conic& out);

// Direct least-squares ellipse-specific conic fit (ellipse constraint imposed
// via the generalized eigenproblem).  False when the scatter is degenerate.
bool fit_conic_direct(const std::vector<PointXZ>& pts, Conic& out);

// First-order geometric (Sampson) distance |Q(p)| / |grad Q(p)|; conic-scale
// invariant.  Degenerate gradients yield +inf so such points never count as
// inliers.
double sampson_distance(const Conic& conic, const PointXZ& p);

// Center/axes/angle of a conic that is a real ellipse; false otherwise.
bool ellipse_from_conic(const Conic& conic, Ellipse& out);

// Second-moment fallback: center = mean, axes along the principal directions
// with semi-lengths twice the per-axis standard deviation.
Ellipse fit_ellipse_pca(const std::vector<PointXZ>& pts);

struct RansacParams {
  std::size_t iters = 200;
  double tol = 0.05;  // Sampson-distance inlier threshold (meters)
};

// Robust ellipse fit: `iters` rounds of 5-point hypotheses scored by Sampson
// inlier count (ties keep the earlier round), then a direct least-squares
// refit on the winner's inliers.  Falls back to the winning 5-point conic if
// the refit degenerates, and to the PCA fit if no round produces a real
// ellipse.  Throws Degenerate for fewer than 5 points.  The RNG stream is
// fully determined by `seed`.
Ellipse fit_ellipse_ransac(const std::vector<PointXZ>& pts, const RansacParams& params,
                           std::uint64_t seed);

}  // namespace bevforge
