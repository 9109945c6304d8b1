#include <cmath>

#include "bevforge/geometry.hpp"
#include "bevforge/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bevforge;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mat3 rotation_z(double radians) {
  double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r(0, 0) = c;
  r(0, 1) = -s;
  r(0, 2) = 0.0;
  r(1, 0) = s;
  r(1, 1) = c;
  r(1, 2) = 0.0;
  r(2, 0) = 0.0;
  r(2, 1) = 0.0;
  r(2, 2) = 1.0;
  return r;
}

double max_abs_diff(const Mat3& a, const Mat3& b) {
  double worst = 0.0;
  for (int i = 0; i < 9; ++i) worst = std::max(worst, std::abs(a.m[i] - b.m[i]));
  return worst;
}

double pose_diff(const Pose& a, const Pose& b) {
  return std::max(max_abs_diff(a.r, b.r), norm(a.t - b.t));
}

}  // namespace

TEST_CASE("project maps camera points onto the expected pixels") {
  CameraIntrinsics k{100.0, 100.0, 50.0, 50.0, 101, 101};

  Pixel on_axis = project(k, Vec3{0.0, 0.0, 10.0});
  CHECK(on_axis.u == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(on_axis.v == doctest::Approx(50.0).epsilon(1e-12));

  Pixel off_axis = project(k, Vec3{1.0, 0.0, 10.0});
  CHECK(off_axis.u == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(off_axis.v == doctest::Approx(50.0).epsilon(1e-12));

  CHECK_ERROR_CODE(project(k, Vec3{0.0, 0.0, -1.0}), ErrorCode::NonPositiveDepth);
  CHECK_ERROR_CODE(project(k, Vec3{0.0, 0.0, 0.0}), ErrorCode::NonPositiveDepth);
}

TEST_CASE("unproject inverts project") {
  CameraIntrinsics k{100.0, 100.0, 50.0, 50.0, 101, 101};

  Vec3 p = unproject(k, Pixel{60.0, 50.0}, 10.0);
  CHECK(p.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.z == doctest::Approx(10.0).epsilon(1e-12));

  Vec3 axis = unproject(k, Pixel{50.0, 50.0}, 7.0);
  CHECK(axis.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(axis.z == doctest::Approx(7.0).epsilon(1e-12));

  CHECK_ERROR_CODE(unproject(k, Pixel{50.0, 50.0}, 0.0), ErrorCode::NonPositiveDepth);
}

TEST_CASE("round trip over 1000 random points is 1e-9-tight") {
  CameraIntrinsics k{320.5, 240.25, 160.0, 120.0, 320, 240};
  Rng rng(12345);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double z = rng.uniform(0.1, 100.0);
    Vec3 p{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), z};
    Pixel px = project(k, p);
    Vec3 q = unproject(k, px, z);
    double scale = std::max({std::abs(p.x), std::abs(p.y), std::abs(p.z), 1.0});
    worst = std::max(worst, norm(q - p) / scale);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("pixel_in_image bounds are the bilinear support") {
  CameraIntrinsics k{100.0, 100.0, 50.0, 50.0, 64, 48};
  CHECK(pixel_in_image(k, Pixel{0.0, 0.0}));
  CHECK(pixel_in_image(k, Pixel{63.0, 47.0}));
  CHECK_FALSE(pixel_in_image(k, Pixel{63.001, 10.0}));
  CHECK_FALSE(pixel_in_image(k, Pixel{-0.001, 10.0}));
}

TEST_CASE("pose composition and inversion") {
  Pose rz90{rotation_z(kPi / 2.0), Vec3{}};
  Pose shift{Mat3::identity(), Vec3{1.0, 2.0, 3.0}};

  CHECK(pose_diff(compose(shift, Pose::identity()), shift) < 1e-15);

  Pose rz180 = compose(rz90, rz90);
  CHECK(max_abs_diff(rz180.r, rotation_z(kPi)) < 1e-12);

  CHECK(pose_diff(compose(shift, invert(shift)), Pose::identity()) < 1e-9);
  CHECK(pose_diff(compose(rz90, invert(rz90)), Pose::identity()) < 1e-9);

  CHECK(pose_diff(invert(Pose::identity()), Pose::identity()) < 1e-15);
  Pose inv_shift = invert(shift);
  CHECK(norm(inv_shift.t - Vec3{-1.0, -2.0, -3.0}) < 1e-12);
  CHECK(max_abs_diff(invert(rz90).r, rotation_z(-kPi / 2.0)) < 1e-12);
}

TEST_CASE("transform applies R p + t in order") {
  CHECK(norm(transform(Pose::identity(), Vec3{1.0, 2.0, 3.0}) - Vec3{1.0, 2.0, 3.0}) == 0.0);
  Pose shift{Mat3::identity(), Vec3{1.0, 2.0, 3.0}};
  CHECK(norm(transform(shift, Vec3{}) - Vec3{1.0, 2.0, 3.0}) == 0.0);
  Pose rz90{rotation_z(kPi / 2.0), Vec3{}};
  CHECK(norm(transform(rz90, Vec3{1.0, 0.0, 0.0}) - Vec3{0.0, 1.0, 0.0}) < 1e-12);
}

TEST_CASE("pose group laws hold to 1e-9") {
  Rng rng(777);
  auto random_pose = [&] {
    Pose p;
    p.r = rotation_y(rng.uniform(-kPi, kPi));
    Mat3 rz = rotation_z(rng.uniform(-kPi, kPi));
    p.r = p.r * rz;
    p.t = Vec3{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    return p;
  };
  for (int round = 0; round < 20; ++round) {
    Pose a = random_pose(), b = random_pose(), c = random_pose();
    CHECK(pose_diff(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-9);
    CHECK(pose_diff(compose(invert(a), a), Pose::identity()) < 1e-9);
  }
}

TEST_CASE("orthonormality survives 100 compositions") {
  Rng rng(99);
  Pose acc = Pose::identity();
  for (int i = 0; i < 100; ++i) {
    Pose step{rotation_y(rng.uniform(-0.5, 0.5)) * rotation_z(rng.uniform(-0.5, 0.5)),
              Vec3{rng.uniform(-1.0, 1.0), 0.0, rng.uniform(-1.0, 1.0)}};
    acc = compose(acc, step);
  }
  CHECK(orthonormality_error(acc.r) < 1e-8);
}

TEST_CASE("relative maps source frame into target frame") {
  // Both cameras observe the same world point; relative() must reproduce the
  // target camera's view of the source camera's coordinates.
  Pose world_from_a{rotation_y(0.3), Vec3{1.0, 0.0, 2.0}};
  Pose world_from_b{rotation_y(-0.2), Vec3{-0.5, 0.1, 4.0}};
  Vec3 in_b{0.4, -0.2, 6.0};
  Vec3 world = transform(world_from_b, in_b);
  Vec3 in_a = transform(invert(world_from_a), world);
  Pose a_from_b = relative(world_from_a, world_from_b);
  CHECK(norm(transform(a_from_b, in_b) - in_a) < 1e-12);
}

TEST_CASE("rotation_y turns the forward axis toward +x") {
  Vec3 turned = rotation_y(kPi / 2.0) * Vec3{0.0, 0.0, 1.0};
  CHECK(turned.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(turned.y) < 1e-12);
  CHECK(std::abs(turned.z) < 1e-12);
}

TEST_CASE("rotation validation rejects scaled matrices and repairs drift") {
  Mat3 doubled = Mat3::identity();
  for (double& v : doubled.m) v *= 2.0;
  CHECK_ERROR_CODE(validate_rotation(doubled), ErrorCode::NonRigidRotation);

  Mat3 reflection = Mat3::identity();
  reflection(0, 0) = -1.0;  // determinant -1
  CHECK_ERROR_CODE(validate_rotation(reflection), ErrorCode::NonRigidRotation);

  Mat3 drifted = rotation_y(0.7);
  drifted(0, 0) += 3e-5;
  validate_rotation(drifted);  // inside the pose-file tolerance
  Mat3 snapped = orthonormalize_rotation(drifted);
  CHECK(orthonormality_error(snapped) < 1e-12);
  CHECK(determinant(snapped) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("grid spec index math round-trips") {
  GridSpec spec;  // defaults
  Vec3 center = spec.cell_center(3, 2, 40);
  Vec3 idx = spec.index_coords(center);
  CHECK(idx.x == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(idx.y == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(idx.z == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(spec.volume() == 96 * 8 * 96);
}

TEST_CASE("bev spec bins nearest cell with half-open edges") {
  BevSpec bev{4, 4, 1.0, 0.0, 0.0};
  std::size_t ix = 99, iz = 99;

  REQUIRE(bev.cell_of(0.0, 0.0, ix, iz));
  CHECK(ix == 0);
  CHECK(iz == 0);

  // Exactly on the upper edge of cell 0 -> cell 1 (half-open interval).
  REQUIRE(bev.cell_of(0.5, 0.0, ix, iz));
  CHECK(ix == 1);

  REQUIRE(bev.cell_of(0.49999, 3.4999, ix, iz));
  CHECK(ix == 0);
  CHECK(iz == 3);

  CHECK_FALSE(bev.cell_of(3.5, 0.0, ix, iz));   // past the last cell's half-open edge
  CHECK_FALSE(bev.cell_of(-0.51, 0.0, ix, iz));  // below the first cell
  CHECK(bev.center_x(2) == doctest::Approx(2.0));
}
