#include "bevforge/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "bevforge/io.hpp"
#include "bevforge/log.hpp"
#include "bevforge/rng.hpp"

namespace bevforge::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Substream tag for per-pixel depth noise, so scene generation and noise
// never share draws.
constexpr std::uint64_t kNoiseTag = 0x6e6f697365ull;

std::string frame_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu.%s", index, ext);
  return buf;
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  std::uint8_t cls = classes::kVoid;

  void consider(double candidate, std::uint8_t candidate_cls) {
    if (candidate > 1e-9 && candidate < t) {
      t = candidate;
      cls = candidate_cls;
    }
  }
};

// Ray/AABB slab test over x and z plus the vertical extent; the box occupies
// y in [ground - height, ground].
void intersect_box(const Vec3& origin, const Vec3& dir, const Box& box, std::size_t frame,
                   double ground, Hit& hit) {
  double cx = box.cx_at(frame), cz = box.cz_at(frame);
  double lo[3] = {cx - box.hx, ground - box.height, cz - box.hz};
  double hi[3] = {cx + box.hx, ground, cz + box.hz};
  double o[3] = {origin.x, origin.y, origin.z};
  double d[3] = {dir.x, dir.y, dir.z};
  double t_enter = 0.0, t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a];
    double t1 = (hi[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return;
  }
  hit.consider(t_enter, box.cls);
}

// Lateral surface and top cap of a vertical cylinder spanning
// y in [ground - height, ground].
void intersect_cylinder(const Vec3& origin, const Vec3& dir, const Cylinder& cyl,
                        std::size_t frame, double ground, Hit& hit) {
  double cx = cyl.cx_at(frame), cz = cyl.cz_at(frame);
  double y_top = ground - cyl.height;
  double ox = origin.x - cx, oz = origin.z - cz;
  double a = dir.x * dir.x + dir.z * dir.z;
  if (a > 0.0) {
    double b = 2.0 * (ox * dir.x + oz * dir.z);
    double c = ox * ox + oz * oz - cyl.radius * cyl.radius;
    double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      double root = std::sqrt(disc);
      for (double t : {(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)}) {
        double y = origin.y + t * dir.y;
        if (y >= y_top && y <= ground) hit.consider(t, cyl.cls);
      }
    }
  }
  if (dir.y != 0.0) {
    double t = (y_top - origin.y) / dir.y;
    double x = origin.x + t * dir.x - cx;
    double z = origin.z + t * dir.z - cz;
    if (x * x + z * z <= cyl.radius * cyl.radius) hit.consider(t, cyl.cls);
  }
}

// Class of the flat ground at lateral offset |x| from the road's centerline;
// kVoid past the terrain band.
std::uint8_t ground_class(const Scene& scene, double x) {
  double ax = std::abs(x);
  if (ax <= scene.road_half) return classes::kRoad;
  if (ax <= scene.road_half + scene.sidewalk_width) return classes::kSidewalk;
  if (ax <= scene.road_half + scene.sidewalk_width + scene.terrain_width) {
    return classes::kTerrain;
  }
  return classes::kVoid;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& config) {
  Scene scene;
  scene.seed = seed;
  scene.camera_height = config.camera_height;
  scene.depth_noise_sigma = config.depth_noise_sigma;
  scene.camera.fx = config.focal;
  scene.camera.fy = config.focal;
  scene.camera.cx = static_cast<double>(config.width) / 2.0;
  scene.camera.cy = static_cast<double>(config.height) / 3.0;
  scene.camera.width = config.width;
  scene.camera.height = config.height;

  Rng rng(mix_seed(seed, 0x7363656Eull));
  scene.road_half = rng.uniform(3.0, 4.5);
  scene.sidewalk_width = rng.uniform(1.5, 2.5);
  scene.terrain_width = rng.uniform(5.0, 10.0);

  // Buildings: boxes beyond the sidewalk on either side, non-overlapping
  // along z on the same side.
  std::size_t n_buildings = 2 + static_cast<std::size_t>(rng.below(5));
  for (std::size_t i = 0; i < n_buildings; ++i) {
    Box b;
    b.cls = classes::kBuilding;
    double side = rng.below(2) == 0 ? -1.0 : 1.0;
    b.hx = rng.uniform(2.0, 4.0);
    b.hz = rng.uniform(3.0, 6.0);
    b.height = rng.uniform(6.0, 14.0);
    double gap = rng.uniform(0.2, 1.2);
    b.cx = side * (scene.road_half + scene.sidewalk_width + gap + b.hx);
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      b.cz = rng.uniform(4.0, 44.0);
      placed = true;
      for (const Box& other : scene.boxes) {
        bool same_side = (other.cx < 0.0) == (b.cx < 0.0);
        if (same_side && std::abs(other.cz - b.cz) < other.hz + b.hz + 1.0) {
          placed = false;
          break;
        }
      }
    }
    if (placed) scene.boxes.push_back(b);
  }

  // Vehicles: low-profile slabs on the road.  Keeping the body shallow means
  // the camera mostly sees the footprint's top face, which spreads the lifted
  // points across the whole footprint instead of concentrating them on one
  // face line -- that keeps clustering and box fitting well-conditioned.
  std::size_t first_vehicle = scene.boxes.size();
  std::size_t n_vehicles = 1 + static_cast<std::size_t>(rng.below(5));
  for (std::size_t i = 0; i < n_vehicles; ++i) {
    Box v;
    v.cls = classes::kCar;
    v.hx = 0.9;
    v.hz = 2.0;
    v.height = rng.uniform(0.02, 0.05);
    double side = rng.below(2) == 0 ? -1.0 : 1.0;
    double lane_max = scene.road_half - v.hx - 0.1;
    v.cx = side * rng.uniform(1.6, lane_max);
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      v.cz = rng.uniform(6.0, 16.0);
      placed = true;
      for (std::size_t j = first_vehicle; j < scene.boxes.size(); ++j) {
        const Box& other = scene.boxes[j];
        if (std::abs(other.cx - v.cx) < other.hx + v.hx + 1.2 &&
            std::abs(other.cz - v.cz) < other.hz + v.hz + 1.2) {
          placed = false;
          break;
        }
      }
    }
    if (placed) scene.boxes.push_back(v);
  }

  if (config.moving) {
    bool any_mover = false;
    for (std::size_t j = first_vehicle; j < scene.boxes.size(); ++j) {
      if (rng.below(2) == 0) {
        double sign = rng.below(2) == 0 ? 1.0 : -1.0;
        scene.boxes[j].vz = sign * rng.uniform(0.4, 0.8);
        any_mover = true;
      }
    }
    if (!any_mover && scene.boxes.size() > first_vehicle) {
      scene.boxes[first_vehicle].vz = rng.uniform(0.4, 0.8);
    }
  }

  // Walkers: cylinders on the sidewalks.
  std::size_t n_cylinders = static_cast<std::size_t>(rng.below(4));
  for (std::size_t i = 0; i < n_cylinders; ++i) {
    Cylinder c;
    if (rng.below(2) == 0) {
      c.cls = classes::kPerson;
      c.radius = rng.uniform(0.25, 0.35);
      c.height = 1.7;
    } else {
      c.cls = classes::kTwoWheeler;
      c.radius = rng.uniform(0.4, 0.6);
      c.height = 1.2;
    }
    double side = rng.below(2) == 0 ? -1.0 : 1.0;
    double inner = scene.road_half + c.radius + 0.1;
    double outer = scene.road_half + scene.sidewalk_width - c.radius - 0.1;
    c.cx = side * rng.uniform(inner, std::max(inner, outer));
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      c.cz = rng.uniform(5.0, 14.0);
      placed = true;
      for (const Cylinder& other : scene.cylinders) {
        double dx = other.cx - c.cx, dz = other.cz - c.cz;
        double min_gap = other.radius + c.radius + 0.5;
        if (dx * dx + dz * dz < min_gap * min_gap) {
          placed = false;
          break;
        }
      }
    }
    if (placed) scene.cylinders.push_back(c);
  }

  // Trajectory: forward steps of `spacing`, heading swept linearly over the
  // configured arc.
  double arc = config.arc_degrees * kPi / 180.0;
  Vec3 position{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < config.frames; ++i) {
    double heading = config.frames > 1
                         ? arc * static_cast<double>(i) / static_cast<double>(config.frames - 1)
                         : 0.0;
    scene.world_from_cam.push_back(Pose{rotation_y(heading), position});
    position = position + rotation_y(heading) * Vec3{0.0, 0.0, config.spacing};
  }
  return scene;
}

RenderedFrame render_frame(const Scene& scene, std::size_t frame_index) {
  if (frame_index >= scene.frames()) {
    throw_error(ErrorCode::OutOfRange, "frame " + std::to_string(frame_index) + " of " +
                                           std::to_string(scene.frames()));
  }
  const CameraIntrinsics& k = scene.camera;
  const Pose& pose = scene.world_from_cam[frame_index];
  double ground = scene.camera_height;

  RenderedFrame out;
  out.semantics = SemanticMap({k.height, k.width}, classes::kVoid);
  out.depth = Tensor<float>({k.height, k.width});

  for (std::size_t row = 0; row < k.height; ++row) {
    for (std::size_t col = 0; col < k.width; ++col) {
      // Unit-z camera ray through the pixel center; its parameter t is the
      // camera-frame depth of the hit.
      Vec3 dir_cam{(static_cast<double>(col) - k.cx) / k.fx,
                   (static_cast<double>(row) - k.cy) / k.fy, 1.0};
      Vec3 dir = pose.r * dir_cam;
      const Vec3& origin = pose.t;

      Hit hit;
      if (dir.y > 0.0) {
        double t = (ground - origin.y) / dir.y;
        double x = origin.x + t * dir.x;
        std::uint8_t cls = ground_class(scene, x);
        if (cls != classes::kVoid) hit.consider(t, cls);
      }
      for (const Box& box : scene.boxes) {
        intersect_box(origin, dir, box, frame_index, ground, hit);
      }
      for (const Cylinder& cyl : scene.cylinders) {
        intersect_cylinder(origin, dir, cyl, frame_index, ground, hit);
      }

      if (hit.cls == classes::kVoid) continue;
      double depth = hit.t;
      if (scene.depth_noise_sigma > 0.0) {
        Rng noise(mix_seed(scene.seed ^ kNoiseTag, frame_index, row * k.width + col));
        depth = std::max(0.1, depth + scene.depth_noise_sigma * noise.normal());
      }
      out.semantics(row, col) = hit.cls;
      out.depth(row, col) = static_cast<float>(depth);
    }
  }
  return out;
}

BevMap render_bev_gt(const Scene& scene, std::size_t anchor_index, const BevSpec& bev) {
  if (anchor_index >= scene.frames()) {
    throw_error(ErrorCode::OutOfRange, "anchor " + std::to_string(anchor_index) + " of " +
                                           std::to_string(scene.frames()));
  }
  const Pose& pose = scene.world_from_cam[anchor_index];
  BevMap map({bev.nx, bev.nz}, classes::kVoid);
  for (std::size_t ix = 0; ix < bev.nx; ++ix) {
    for (std::size_t iz = 0; iz < bev.nz; ++iz) {
      // The lattice lives in the anchor camera's ground plane; rotation about
      // y keeps (x, z) planar, so this is exact.
      Vec3 p = transform(pose, Vec3{bev.center_x(ix), 0.0, bev.center_z(iz)});
      std::uint8_t cls = ground_class(scene, p.x);
      for (const Box& box : scene.boxes) {
        if (!classes::is_static_class(box.cls)) continue;
        if (std::abs(p.x - box.cx_at(anchor_index)) <= box.hx &&
            std::abs(p.z - box.cz_at(anchor_index)) <= box.hz) {
          cls = box.cls;
        }
      }
      for (const Box& box : scene.boxes) {
        if (classes::is_static_class(box.cls)) continue;
        if (std::abs(p.x - box.cx_at(anchor_index)) <= box.hx &&
            std::abs(p.z - box.cz_at(anchor_index)) <= box.hz) {
          cls = box.cls;
        }
      }
      for (const Cylinder& cyl : scene.cylinders) {
        double dx = p.x - cyl.cx_at(anchor_index), dz = p.z - cyl.cz_at(anchor_index);
        if (dx * dx + dz * dz <= cyl.radius * cyl.radius) cls = cyl.cls;
      }
      map(ix, iz) = cls;
    }
  }
  return map;
}

void write_sequence(const Scene& scene, const std::string& dir, const BevSpec& bev) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"", "/semantic", "/depth", "/bev_gt"}) {
    fs::create_directories(dir + sub, ec);
    if (ec) throw_error(ErrorCode::IoFailure, "cannot create " + dir + sub + ": " + ec.message());
  }

  write_intrinsics(dir + "/intrinsics.txt", scene.camera);
  write_poses(dir + "/poses.txt", scene.world_from_cam);

  std::ofstream manifest(dir + "/scene.txt");
  if (!manifest) throw_error(ErrorCode::IoFailure, "cannot write " + dir + "/scene.txt");
  manifest.precision(17);
  manifest << "seed=" << scene.seed << "\n";
  manifest << "frames=" << scene.frames() << "\n";
  manifest << "camera_height=" << scene.camera_height << "\n";
  manifest << "road_half=" << scene.road_half << "\n";
  manifest << "sidewalk_width=" << scene.sidewalk_width << "\n";
  manifest << "terrain_width=" << scene.terrain_width << "\n";
  manifest << "depth_noise_sigma=" << scene.depth_noise_sigma << "\n";
  for (const Box& b : scene.boxes) {
    manifest << "box=" << static_cast<int>(b.cls) << " " << b.cx << " " << b.cz << " " << b.hx
             << " " << b.hz << " " << b.height << " " << b.vx << " " << b.vz << "\n";
  }
  for (const Cylinder& c : scene.cylinders) {
    manifest << "cylinder=" << static_cast<int>(c.cls) << " " << c.cx << " " << c.cz << " "
             << c.radius << " " << c.height << " " << c.vx << " " << c.vz << "\n";
  }
  if (!manifest.flush()) throw_error(ErrorCode::IoFailure, "failed writing " + dir + "/scene.txt");

  for (std::size_t i = 0; i < scene.frames(); ++i) {
    RenderedFrame frame = render_frame(scene, i);
    write_pgm(dir + "/semantic/" + frame_name(i, "pgm"), frame.semantics);
    write_tensor(dir + "/depth/" + frame_name(i, "btr"), frame.depth);
    write_pgm(dir + "/bev_gt/" + frame_name(i, "pgm"), render_bev_gt(scene, i, bev));
  }
  log(LogLevel::Info, "wrote ", scene.frames(), "-frame sequence to ", dir);
}

}  // namespace bevforge::synth
