#include "bevforge/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace bevforge {

Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (std::size_t row = 0; row < 3; ++row) {
    for (std::size_t col = 0; col < 3; ++col) {
      out(row, col) =
          a(row, 0) * b(0, col) + a(row, 1) * b(1, col) + a(row, 2) * b(2, col);
    }
  }
  return out;
}

Mat3 transpose(const Mat3& a) {
  Mat3 out;
  for (std::size_t row = 0; row < 3; ++row)
    for (std::size_t col = 0; col < 3; ++col) out(row, col) = a(col, row);
  return out;
}

double determinant(const Mat3& a) {
  return a.m[0] * (a.m[4] * a.m[8] - a.m[5] * a.m[7]) -
         a.m[1] * (a.m[3] * a.m[8] - a.m[5] * a.m[6]) +
         a.m[2] * (a.m[3] * a.m[7] - a.m[4] * a.m[6]);
}

Mat3 rotation_y(double radians) {
  double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r.m[0] = c;
  r.m[1] = 0.0;
  r.m[2] = s;
  r.m[3] = 0.0;
  r.m[4] = 1.0;
  r.m[5] = 0.0;
  r.m[6] = -s;
  r.m[7] = 0.0;
  r.m[8] = c;
  return r;
}

double orthonormality_error(const Mat3& r) {
  Mat3 g = transpose(r) * r;
  double worst = 0.0;
  for (std::size_t row = 0; row < 3; ++row) {
    for (std::size_t col = 0; col < 3; ++col) {
      double target = (row == col) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(g(row, col) - target));
    }
  }
  return worst;
}

void validate_rotation(const Mat3& r, double tol) {
  double err = orthonormality_error(r);
  if (err > tol) {
    std::ostringstream msg;
    msg << "rotation block deviates from orthonormal by " << err << " (tolerance " << tol << ")";
    throw_error(ErrorCode::NonRigidRotation, msg.str());
  }
  if (determinant(r) < 0.0) {
    throw_error(ErrorCode::NonRigidRotation, "rotation block is a reflection (det < 0)");
  }
}

Mat3 orthonormalize_rotation(const Mat3& r) {
  Eigen::Matrix3d m;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) m(row, col) = r(row, col);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < 0.0) {
    throw_error(ErrorCode::NonRigidRotation,
                "nearest orthogonal factor is a reflection (det < 0)");
  }
  Mat3 out;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) out(row, col) = q(row, col);
  return out;
}

Pixel project(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z > 0.0)) {
    std::ostringstream msg;
    msg << "cannot project point with depth " << p.z;
    throw_error(ErrorCode::NonPositiveDepth, msg.str());
  }
  return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

Vec3 unproject(const CameraIntrinsics& k, const Pixel& px, double depth) {
  if (!(depth > 0.0)) {
    std::ostringstream msg;
    msg << "cannot unproject at depth " << depth;
    throw_error(ErrorCode::NonPositiveDepth, msg.str());
  }
  return {(px.u - k.cx) / k.fx * depth, (px.v - k.cy) / k.fy * depth, depth};
}

bool pixel_in_image(const CameraIntrinsics& k, const Pixel& px) {
  return px.u >= 0.0 && px.v >= 0.0 && px.u <= static_cast<double>(k.width) - 1.0 &&
         px.v <= static_cast<double>(k.height) - 1.0;
}

Pose compose(const Pose& a, const Pose& b) { return {a.r * b.r, a.r * b.t + a.t}; }

Pose invert(const Pose& pose) {
  Mat3 rt = transpose(pose.r);
  return {rt, -1.0 * (rt * pose.t)};
}

Pose relative(const Pose& world_from_target, const Pose& world_from_source) {
  return compose(invert(world_from_target), world_from_source);
}

}  // namespace bevforge
