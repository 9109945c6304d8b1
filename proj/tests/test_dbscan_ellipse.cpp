#include <algorithm>
#include <cmath>
#include <numeric>

#include "bevforge/dbscan.hpp"
#include "bevforge/ellipse.hpp"
#include "bevforge/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bevforge;

namespace {

std::vector<PointXZ> blob(double cx, double cz, double radius, std::size_t n, Rng& rng) {
  std::vector<PointXZ> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ang = rng.uniform(0.0, 2.0 * M_PI);
    double r = radius * std::sqrt(rng.uniform());
    pts.push_back({cx + r * std::cos(ang), cz + r * std::sin(ang)});
  }
  return pts;
}

std::vector<PointXZ> ellipse_points(const Ellipse& e, std::size_t n) {
  std::vector<PointXZ> pts;
  pts.reserve(n);
  double ct = std::cos(e.theta), st = std::sin(e.theta);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    double lx = e.a * std::cos(t), lz = e.b * std::sin(t);
    pts.push_back({e.x + ct * lx - st * lz, e.z + st * lx + ct * lz});
  }
  return pts;
}

double angle_diff_mod_pi(double lhs, double rhs) {
  double d = std::fmod(std::abs(lhs - rhs), M_PI);
  return std::min(d, M_PI - d);
}

}  // namespace

TEST_CASE("two well-separated blobs form two clusters") {
  Rng rng(501);
  std::vector<PointXZ> pts = blob(0.0, 0.0, 0.3, 20, rng);
  std::vector<PointXZ> other = blob(10.0, 0.0, 0.3, 20, rng);
  pts.insert(pts.end(), other.begin(), other.end());
  DbscanResult res = dbscan(pts, 1.0, 4);
  CHECK(res.cluster_count == 2);
  CHECK(std::count(res.labels.begin(), res.labels.end(), -1) == 0);
  // Points from the same blob share a label.
  for (std::size_t i = 1; i < 20; ++i) CHECK(res.labels[i] == res.labels[0]);
  for (std::size_t i = 21; i < 40; ++i) CHECK(res.labels[i] == res.labels[20]);
  CHECK(res.labels[0] != res.labels[20]);
}

TEST_CASE("a chain reachable only through its middle core still clusters") {
  std::vector<PointXZ> pts = {{0.0, 0.0}, {0.5, 0.0}, {1.0, 0.0}};
  DbscanResult res = dbscan(pts, 0.6, 3);
  CHECK(res.cluster_count == 1);
  CHECK(res.labels == std::vector<int>{0, 0, 0});
}

TEST_CASE("an isolated point is noise") {
  DbscanResult res = dbscan({{2.0, 3.0}}, 1.0, 2);
  CHECK(res.cluster_count == 0);
  CHECK(res.labels == std::vector<int>{-1});

  DbscanResult empty = dbscan({}, 1.0, 2);
  CHECK(empty.cluster_count == 0);
  CHECK(empty.labels.empty());
}

TEST_CASE("dbscan validates its parameters") {
  std::vector<PointXZ> pts = {{0.0, 0.0}};
  CHECK_ERROR_CODE(dbscan(pts, 0.0, 2), ErrorCode::InvalidValue);
  CHECK_ERROR_CODE(dbscan(pts, -1.0, 2), ErrorCode::InvalidValue);
  CHECK_ERROR_CODE(dbscan(pts, 1.0, 0), ErrorCode::InvalidValue);
}

TEST_CASE("grid-accelerated dbscan agrees exactly with the quadratic reference") {
  Rng rng(502);
  for (int round = 0; round < 20; ++round) {
    std::size_t n = 30 + rng.below(170);
    std::vector<PointXZ> pts;
    pts.reserve(n);
    std::size_t centers = 1 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t which = rng.below(centers);
      double cx = static_cast<double>(which) * 4.0;
      double cz = static_cast<double>(which % 2) * 3.0;
      pts.push_back({cx + rng.normal() * 0.6, cz + rng.normal() * 0.6});
    }
    double eps = rng.uniform(0.3, 1.2);
    std::size_t min_pts = 2 + rng.below(6);
    DbscanResult fast = dbscan(pts, eps, min_pts);
    DbscanResult slow = oracle::dbscan(pts, eps, min_pts);
    // Both implementations order cluster ids by their smallest core index, so
    // the labeling matches exactly, not merely up to permutation.
    CHECK(fast.cluster_count == slow.cluster_count);
    CHECK(fast.labels == slow.labels);
    CHECK(oracle::clusterings_match(fast.labels, slow.labels));
  }
}

TEST_CASE("cluster structure is preserved under point permutation") {
  Rng rng(503);
  std::vector<PointXZ> pts = blob(0.0, 0.0, 0.4, 25, rng);
  std::vector<PointXZ> other = blob(3.0, 1.0, 0.4, 25, rng);
  pts.insert(pts.end(), other.begin(), other.end());
  DbscanResult base = dbscan(pts, 0.8, 4);

  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<PointXZ> shuffled(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) shuffled[i] = pts[perm[i]];

  DbscanResult permuted = dbscan(shuffled, 0.8, 4);
  DbscanResult unshuffled;
  unshuffled.cluster_count = permuted.cluster_count;
  unshuffled.labels.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) unshuffled.labels[perm[i]] = permuted.labels[i];
  CHECK(oracle::clusterings_match(base.labels, unshuffled.labels));
}

TEST_CASE("five points determine a conic through all of them") {
  Ellipse truth{3.0, 4.0, 2.0, 2.0, 0.0};
  std::vector<PointXZ> ring = ellipse_points(truth, 7);
  std::array<PointXZ, 5> five;
  std::copy_n(ring.begin(), 5, five.begin());
  Conic conic;
  REQUIRE(conic_from_five(five, conic));
  for (const PointXZ& p : ring) {
    double q = conic.a * p.x * p.x + conic.b * p.x * p.z + conic.c * p.z * p.z + conic.d * p.x +
               conic.e * p.z + conic.f;
    double scale = std::abs(conic.a) + std::abs(conic.b) + std::abs(conic.c);
    CHECK(std::abs(q) / scale < 1e-9);
  }

  std::array<PointXZ, 5> collinear = {
      {{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}, {4.0, 4.0}}};
  Conic unused;
  CHECK_FALSE(conic_from_five(collinear, unused));
}

TEST_CASE("a sampled circle is recovered exactly") {
  Ellipse truth{3.0, 4.0, 2.0, 2.0, 0.0};
  std::vector<PointXZ> pts = ellipse_points(truth, 50);
  Ellipse fit = fit_ellipse_ransac(pts, RansacParams{}, 11);
  CHECK(std::abs(fit.x - 3.0) < 1e-6);
  CHECK(std::abs(fit.z - 4.0) < 1e-6);
  CHECK(std::abs(fit.a - 2.0) < 1e-6);
  CHECK(std::abs(fit.b - 2.0) < 1e-6);
}

TEST_CASE("a noiseless axis-aligned ellipse is recovered to fine tolerance") {
  Ellipse truth{0.0, 0.0, 4.0, 1.0, 0.0};
  std::vector<PointXZ> pts = ellipse_points(truth, 100);
  Ellipse fit = fit_ellipse_ransac(pts, RansacParams{}, 12);
  CHECK(std::abs(fit.x) < 1e-6);
  CHECK(std::abs(fit.z) < 1e-6);
  CHECK(std::abs(fit.a - 4.0) < 1e-6);
  CHECK(std::abs(fit.b - 1.0) < 1e-6);
  CHECK(angle_diff_mod_pi(fit.theta, 0.0) < 1e-6);
}

TEST_CASE("fewer than five points cannot seat a conic hypothesis") {
  std::vector<PointXZ> four = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  CHECK_ERROR_CODE(fit_ellipse_ransac(four, RansacParams{}, 1), ErrorCode::Degenerate);
  std::vector<PointXZ> five = ellipse_points(Ellipse{0, 0, 2, 1, 0.3}, 5);
  CHECK_ERROR_CODE(fit_ellipse_ransac(five, RansacParams{0, 0.05}, 1), ErrorCode::InvalidValue);
  CHECK_ERROR_CODE(fit_ellipse_ransac(five, RansacParams{10, -1.0}, 1), ErrorCode::InvalidValue);
}

TEST_CASE("block-reduced direct fit agrees with the generalized eigensolver") {
  Rng rng(504);
  for (int round = 0; round < 10; ++round) {
    Ellipse truth{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(1.5, 4.0),
                  rng.uniform(0.5, 1.4), rng.uniform(0.0, M_PI)};
    std::vector<PointXZ> pts = ellipse_points(truth, 60);
    Conic direct;
    REQUIRE(fit_conic_direct(pts, direct));
    Conic eigen;
    REQUIRE(oracle::fit_conic_eigen(pts, eigen));
    Ellipse from_direct, from_eigen;
    REQUIRE(ellipse_from_conic(direct, from_direct));
    REQUIRE(ellipse_from_conic(eigen, from_eigen));
    CHECK(std::abs(from_direct.x - from_eigen.x) < 1e-6);
    CHECK(std::abs(from_direct.z - from_eigen.z) < 1e-6);
    CHECK(std::abs(from_direct.a - from_eigen.a) < 1e-6);
    CHECK(std::abs(from_direct.b - from_eigen.b) < 1e-6);
    CHECK(angle_diff_mod_pi(from_direct.theta, from_eigen.theta) < 1e-6);
    // And both agree with the generator.
    CHECK(std::abs(from_direct.a - truth.a) < 1e-6);
    CHECK(std::abs(from_direct.b - truth.b) < 1e-6);
  }
}

TEST_CASE("sampson distance vanishes on the conic and ignores conic scale") {
  Ellipse truth{1.0, -2.0, 3.0, 1.5, 0.7};
  std::vector<PointXZ> pts = ellipse_points(truth, 40);
  Conic conic;
  REQUIRE(fit_conic_direct(pts, conic));
  for (const PointXZ& p : pts) CHECK(sampson_distance(conic, p) < 1e-8);

  PointXZ off{truth.x + 5.0, truth.z};
  Conic scaled{conic.a * 7.0, conic.b * 7.0, conic.c * 7.0,
               conic.d * 7.0, conic.e * 7.0, conic.f * 7.0};
  double d1 = sampson_distance(conic, off);
  double d2 = sampson_distance(scaled, off);
  CHECK(d1 > 0.0);
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));

  Conic null{};
  CHECK(std::isinf(sampson_distance(null, off)));
}

TEST_CASE("ellipse_from_conic rejects non-ellipses") {
  Conic hyperbola{1.0, 0.0, -1.0, 0.0, 0.0, -1.0};  // x^2 - z^2 = 1
  Ellipse out;
  CHECK_FALSE(ellipse_from_conic(hyperbola, out));

  Conic unit_circle{1.0, 0.0, 1.0, 0.0, 0.0, -1.0};
  REQUIRE(ellipse_from_conic(unit_circle, out));
  CHECK(out.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.b == doctest::Approx(1.0).epsilon(1e-12));

  // Negated coefficients describe the same locus.
  Conic negated{-1.0, 0.0, -1.0, 0.0, 0.0, 1.0};
  REQUIRE(ellipse_from_conic(negated, out));
  CHECK(out.a == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the second-moment fallback uses two standard deviations per axis") {
  std::vector<PointXZ> pts = {{3.0, 3.0}, {1.0, 3.0}, {2.0, 3.5}, {2.0, 2.5}};
  Ellipse fit = fit_ellipse_pca(pts);
  CHECK(fit.x == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.z == doctest::Approx(3.0).epsilon(1e-12));
  // Population variances: 0.5 along x, 0.125 along z.
  CHECK(fit.a == doctest::Approx(2.0 * std::sqrt(0.5)).epsilon(1e-12));
  CHECK(fit.b == doctest::Approx(2.0 * std::sqrt(0.125)).epsilon(1e-12));
  CHECK(angle_diff_mod_pi(fit.theta, 0.0) < 1e-12);

  CHECK_ERROR_CODE(fit_ellipse_pca({}), ErrorCode::Degenerate);
}

TEST_CASE("the robust fit is equivariant under rigid motions of the data") {
  Ellipse truth{0.5, -1.0, 3.0, 1.2, 0.4};
  std::vector<PointXZ> pts = ellipse_points(truth, 80);

  double dx = 2.5, dz = -4.0, rot = 0.9;
  double cr = std::cos(rot), sr = std::sin(rot);
  std::vector<PointXZ> moved;
  moved.reserve(pts.size());
  for (const PointXZ& p : pts) {
    moved.push_back({cr * p.x - sr * p.z + dx, sr * p.x + cr * p.z + dz});
  }

  Ellipse base = fit_ellipse_ransac(pts, RansacParams{}, 21);
  Ellipse shifted = fit_ellipse_ransac(moved, RansacParams{}, 21);
  double ex = cr * base.x - sr * base.z + dx;
  double ez = sr * base.x + cr * base.z + dz;
  CHECK(std::abs(shifted.x - ex) < 1e-6);
  CHECK(std::abs(shifted.z - ez) < 1e-6);
  CHECK(std::abs(shifted.a - base.a) < 1e-6);
  CHECK(std::abs(shifted.b - base.b) < 1e-6);
  CHECK(angle_diff_mod_pi(shifted.theta, base.theta + rot) < 1e-6);
}

TEST_CASE("the robust fit shrugs off gross outliers") {
  Rng rng(506);
  Ellipse truth{2.0, 6.0, 2.5, 1.0, 0.3};
  std::vector<PointXZ> pts = ellipse_points(truth, 80);
  for (int i = 0; i < 16; ++i) {
    pts.push_back({rng.uniform(-10.0, 14.0), rng.uniform(-6.0, 18.0)});
  }
  Ellipse fit = fit_ellipse_ransac(pts, RansacParams{400, 0.05}, 77);
  CHECK(std::abs(fit.x - truth.x) < 0.05);
  CHECK(std::abs(fit.z - truth.z) < 0.05);
  CHECK(std::abs(fit.a - truth.a) < 0.1);
  CHECK(std::abs(fit.b - truth.b) < 0.1);
  CHECK(angle_diff_mod_pi(fit.theta, truth.theta) < 0.05);
}

TEST_CASE("ransac with a fixed seed is reproducible") {
  Rng rng(507);
  std::vector<PointXZ> pts = ellipse_points(Ellipse{1.0, 2.0, 3.0, 1.0, 0.2}, 60);
  for (int i = 0; i < 10; ++i) pts.push_back({rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)});
  Ellipse a = fit_ellipse_ransac(pts, RansacParams{}, 99);
  Ellipse b = fit_ellipse_ransac(pts, RansacParams{}, 99);
  CHECK(a.x == b.x);
  CHECK(a.z == b.z);
  CHECK(a.a == b.a);
  CHECK(a.b == b.b);
  CHECK(a.theta == b.theta);
}
