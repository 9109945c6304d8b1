#include "bevforge/ellipse.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "bevforge/error.hpp"
#include "bevforge/rng.hpp"

namespace bevforge {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_axis_angle(double theta) {
  while (theta < 0.0) theta += kPi;
  while (theta >= kPi) theta -= kPi;
  return theta;
}

}  // namespace

bool conic_from_five(const std::array<PointXZ, 5>& pts, Conic& out) {
  Eigen::Matrix<double, 5, 6> design;
  for (int i = 0; i < 5; ++i) {
    double x = pts[static_cast<std::size_t>(i)].x;
    double z = pts[static_cast<std::size_t>(i)].z;
    design(i, 0) = x * x;
    design(i, 1) = x * z;
    design(i, 2) = z * z;
    design(i, 3) = x;
    design(i, 4) = z;
    design(i, 5) = 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 6>> svd(design, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Rank below 5 leaves a >1-dimensional null space: no unique conic.
  if (sv(4) <= 1e-12 * sv(0)) return false;
  Eigen::Matrix<double, 6, 1> v = svd.matrixV().col(5);
  out = {v(0), v(1), v(2), v(3), v(4), v(5)};
  return true;
}

bool fit_conic_direct(const std::vector<PointXZ>& pts, Conic& out) {
  if (pts.size() < 5) return false;
  auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd d1(n, 3), d2(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = pts[static_cast<std::size_t>(i)].x;
    double z = pts[static_cast<std::size_t>(i)].z;
    d1(i, 0) = x * x;
    d1(i, 1) = x * z;
    d1(i, 2) = z * z;
    d2(i, 0) = x;
    d2(i, 1) = z;
    d2(i, 2) = 1.0;
  }
  Eigen::Matrix3d s1 = d1.transpose() * d1;
  Eigen::Matrix3d s2 = d1.transpose() * d2;
  Eigen::Matrix3d s3 = d2.transpose() * d2;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
  if (!lu.isInvertible()) return false;
  Eigen::Matrix3d t = -lu.solve(s2.transpose());
  Eigen::Matrix3d m = s1 + s2 * t;
  // Premultiply by the inverse of the ellipse-constraint matrix
  // [[0,0,2],[0,-1,0],[2,0,0]]: rows become (m2/2, -m1, m0/2).
  Eigen::Matrix3d reduced;
  reduced.row(0) = m.row(2) / 2.0;
  reduced.row(1) = -m.row(1);
  reduced.row(2) = m.row(0) / 2.0;
  Eigen::EigenSolver<Eigen::Matrix3d> eig(reduced);
  if (eig.info() != Eigen::Success) return false;
  // Exactly one eigenvector satisfies the ellipse constraint 4ac - b^2 > 0.
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d a1 = eig.eigenvectors().col(i).real();
    double cond = 4.0 * a1(0) * a1(2) - a1(1) * a1(1);
    if (cond > 0.0) {
      Eigen::Vector3d a2 = t * a1;
      out = {a1(0), a1(1), a1(2), a2(0), a2(1), a2(2)};
      return true;
    }
  }
  return false;
}

double sampson_distance(const Conic& conic, const PointXZ& p) {
  double q = conic.a * p.x * p.x + conic.b * p.x * p.z + conic.c * p.z * p.z + conic.d * p.x +
             conic.e * p.z + conic.f;
  double gx = 2.0 * conic.a * p.x + conic.b * p.z + conic.d;
  double gz = conic.b * p.x + 2.0 * conic.c * p.z + conic.e;
  double g2 = gx * gx + gz * gz;
  if (g2 < 1e-300) return std::numeric_limits<double>::infinity();
  return std::abs(q) / std::sqrt(g2);
}

bool ellipse_from_conic(const Conic& conic, Ellipse& out) {
  Conic q = conic;
  double disc = q.b * q.b - 4.0 * q.a * q.c;
  if (!(disc < 0.0)) return false;
  // Normalize the free scale so the quadratic form is positive definite.
  if (q.a + q.c < 0.0) {
    q = {-q.a, -q.b, -q.c, -q.d, -q.e, -q.f};
  }
  double det = 4.0 * q.a * q.c - q.b * q.b;  // > 0 here
  double xc = (q.b * q.e - 2.0 * q.c * q.d) / det;
  double zc = (q.b * q.d - 2.0 * q.a * q.e) / det;
  double at_center =
      q.a * xc * xc + q.b * xc * zc + q.c * zc * zc + q.d * xc + q.e * zc + q.f;
  // Real (non-imaginary, non-point) ellipse needs Q(center) < 0.
  if (!(at_center < 0.0)) return false;

  Eigen::Matrix2d form;
  form << q.a, q.b / 2.0, q.b / 2.0, q.c;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(form);
  if (eig.info() != Eigen::Success) return false;
  double l0 = eig.eigenvalues()(0);  // ascending; both positive after normalization
  double l1 = eig.eigenvalues()(1);
  if (!(l0 > 0.0)) return false;
  out.x = xc;
  out.z = zc;
  // Smaller eigenvalue -> longer axis.
  out.a = std::sqrt(-at_center / l0);
  out.b = std::sqrt(-at_center / l1);
  Eigen::Vector2d major = eig.eigenvectors().col(0);
  out.theta = wrap_axis_angle(std::atan2(major(1), major(0)));
  return true;
}

Ellipse fit_ellipse_pca(const std::vector<PointXZ>& pts) {
  if (pts.empty()) throw_error(ErrorCode::Degenerate, "no points to fit");
  double n = static_cast<double>(pts.size());
  double mx = 0.0, mz = 0.0;
  for (const PointXZ& p : pts) {
    mx += p.x;
    mz += p.z;
  }
  mx /= n;
  mz /= n;
  double sxx = 0.0, sxz = 0.0, szz = 0.0;
  for (const PointXZ& p : pts) {
    double dx = p.x - mx, dz = p.z - mz;
    sxx += dx * dx;
    sxz += dx * dz;
    szz += dz * dz;
  }
  Eigen::Matrix2d cov;
  cov << sxx / n, sxz / n, sxz / n, szz / n;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  double l0 = std::max(eig.eigenvalues()(0), 0.0);
  double l1 = std::max(eig.eigenvalues()(1), 0.0);
  Ellipse out;
  out.x = mx;
  out.z = mz;
  // Semi-axes at two standard deviations along the principal directions.
  out.a = 2.0 * std::sqrt(l1);
  out.b = 2.0 * std::sqrt(l0);
  Eigen::Vector2d major = eig.eigenvectors().col(1);
  out.theta = wrap_axis_angle(std::atan2(major(1), major(0)));
  return out;
}

Ellipse fit_ellipse_ransac(const std::vector<PointXZ>& pts, const RansacParams& params,
                           std::uint64_t seed) {
  std::size_t n = pts.size();
  if (n < 5) {
    throw_error(ErrorCode::Degenerate,
                "ellipse fit needs >= 5 points, got " + std::to_string(n));
  }
  if (params.iters < 1) throw_error(ErrorCode::InvalidValue, "iters must be >= 1");
  if (!(params.tol > 0.0)) throw_error(ErrorCode::InvalidValue, "tol must be > 0");

  Rng rng(seed);
  bool have_best = false;
  Conic best_conic;
  std::size_t best_inliers = 0;
  for (std::size_t iter = 0; iter < params.iters; ++iter) {
    // Five distinct sample indices; rejection keeps the stream deterministic.
    std::array<std::size_t, 5> idx{};
    std::size_t got = 0;
    while (got < 5) {
      std::size_t candidate = rng.below(n);
      bool dup = false;
      for (std::size_t k = 0; k < got; ++k) dup = dup || idx[k] == candidate;
      if (!dup) idx[got++] = candidate;
    }
    std::array<PointXZ, 5> sample{};
    for (std::size_t k = 0; k < 5; ++k) sample[k] = pts[idx[k]];
    Conic conic;
    Ellipse shape;
    if (!conic_from_five(sample, conic)) continue;
    if (!ellipse_from_conic(conic, shape)) continue;  // hyperbola/parabola/degenerate
    std::size_t inliers = 0;
    for (const PointXZ& p : pts) {
      if (sampson_distance(conic, p) < params.tol) ++inliers;
    }
    // Strict improvement only: ties keep the earlier round.
    if (inliers > best_inliers || !have_best) {
      have_best = true;
      best_inliers = inliers;
      best_conic = conic;
    }
  }
  if (!have_best) return fit_ellipse_pca(pts);

  std::vector<PointXZ> inliers;
  inliers.reserve(best_inliers);
  for (const PointXZ& p : pts) {
    if (sampson_distance(best_conic, p) < params.tol) inliers.push_back(p);
  }
  Ellipse refined;
  Conic direct;
  if (inliers.size() >= 5 && fit_conic_direct(inliers, direct) &&
      ellipse_from_conic(direct, refined)) {
    return refined;
  }
  Ellipse fallback;
  if (ellipse_from_conic(best_conic, fallback)) return fallback;
  return fit_ellipse_pca(pts);
}

}  // namespace bevforge
