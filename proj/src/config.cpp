#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "bevforge/io.hpp"

namespace bevforge {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
  throw_error(ErrorCode::OutOfRange, "config key '" + key + "': value '" + value + "' " + why);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    bad_value(key, value, "is not an unsigned integer");
  }
  errno = 0;
  char* end = nullptr;
  unsigned long long parsed = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end != value.c_str() + value.size()) {
    bad_value(key, value, "is not an unsigned integer");
  }
  return parsed;
}

double parse_double(const std::string& key, const std::string& value) {
  if (value.empty()) bad_value(key, value, "is not a number");
  errno = 0;
  char* end = nullptr;
  double parsed = std::strtod(value.c_str(), &end);
  if (errno != 0 || end != value.c_str() + value.size() || !std::isfinite(parsed)) {
    bad_value(key, value, "is not a finite number");
  }
  return parsed;
}

using Apply = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Render = std::function<std::string(const RunConfig&)>;

struct KeyEntry {
  const char* name;
  Apply apply;
  Render render;
};

std::string render_double(double v) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << v;
  return out.str();
}

KeyEntry string_key(const char* name, std::string RunConfig::* field) {
  return {name,
          [field](RunConfig& c, const std::string&, const std::string& value) {
            c.*field = value;
          },
          [field](const RunConfig& c) { return c.*field; }};
}

KeyEntry size_key(const char* name, std::size_t RunConfig::* field, std::size_t min_value) {
  return {name,
          [field, min_value](RunConfig& c, const std::string& key, const std::string& value) {
            std::uint64_t v = parse_u64(key, value);
            if (v < min_value) {
              bad_value(key, value, "must be >= " + std::to_string(min_value));
            }
            if (v > std::numeric_limits<std::uint32_t>::max()) {
              bad_value(key, value, "is too large");
            }
            c.*field = static_cast<std::size_t>(v);
          },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

KeyEntry double_key(const char* name, double RunConfig::* field, bool positive) {
  return {name,
          [field, positive](RunConfig& c, const std::string& key, const std::string& value) {
            double v = parse_double(key, value);
            if (positive && !(v > 0.0)) bad_value(key, value, "must be > 0");
            c.*field = v;
          },
          [field](const RunConfig& c) { return render_double(c.*field); }};
}

KeyEntry seed_key() {
  return {"seed",
          [](RunConfig& c, const std::string& key, const std::string& value) {
            c.seed = parse_u64(key, value);
          },
          [](const RunConfig& c) { return std::to_string(c.seed); }};
}

KeyEntry dynamic_classes_key() {
  return {"dynamic_classes",
          [](RunConfig& c, const std::string& key, const std::string& value) {
            std::vector<std::uint8_t> ids;
            std::string trimmed = trim(value);
            if (!trimmed.empty()) {
              std::istringstream parts(trimmed);
              std::string token;
              while (std::getline(parts, token, ',')) {
                std::string t = trim(token);
                std::uint64_t id = parse_u64(key, t);
                if (id >= 8) bad_value(key, t, "is not a class id (0..7)");
                ids.push_back(static_cast<std::uint8_t>(id));
              }
            }
            c.dynamic_classes = std::move(ids);
          },
          [](const RunConfig& c) {
            std::string joined;
            for (std::size_t i = 0; i < c.dynamic_classes.size(); ++i) {
              if (i) joined += ",";
              joined += std::to_string(c.dynamic_classes[i]);
            }
            return joined;
          }};
}

// Registry order is also the render order of config.effective.txt.
const std::vector<KeyEntry>& registry() {
  static const std::vector<KeyEntry> keys = {
      string_key("in_dir", &RunConfig::in_dir),
      string_key("out_dir", &RunConfig::out_dir),
      size_key("window_size", &RunConfig::window_size, 1),
      size_key("window_stride", &RunConfig::window_stride, 1),
      size_key("grid_x", &RunConfig::grid_x, 1),
      size_key("grid_y", &RunConfig::grid_y, 1),
      size_key("grid_z", &RunConfig::grid_z, 1),
      double_key("grid_cell", &RunConfig::grid_cell, true),
      double_key("grid_origin_x", &RunConfig::grid_origin_x, false),
      double_key("grid_origin_y", &RunConfig::grid_origin_y, false),
      double_key("grid_origin_z", &RunConfig::grid_origin_z, false),
      size_key("bev_x", &RunConfig::bev_x, 1),
      size_key("bev_z", &RunConfig::bev_z, 1),
      double_key("bev_cell", &RunConfig::bev_cell, true),
      double_key("bev_origin_x", &RunConfig::bev_origin_x, false),
      double_key("bev_origin_z", &RunConfig::bev_origin_z, false),
      size_key("depth_bins", &RunConfig::depth_bins, 1),
      double_key("depth_min", &RunConfig::depth_min, true),
      double_key("depth_max", &RunConfig::depth_max, true),
      size_key("ray_count", &RunConfig::ray_count, 1),
      double_key("ray_min", &RunConfig::ray_min, true),
      double_key("ray_max", &RunConfig::ray_max, true),
      double_key("dbscan_eps", &RunConfig::dbscan_eps, true),
      size_key("dbscan_min_pts", &RunConfig::dbscan_min_pts, 1),
      size_key("closing_iters", &RunConfig::closing_iters, 0),
      size_key("ransac_iters", &RunConfig::ransac_iters, 1),
      double_key("ransac_tol", &RunConfig::ransac_tol, true),
      seed_key(),
      dynamic_classes_key(),
  };
  return keys;
}

void check_cross_field(const RunConfig& c) {
  if (!(c.depth_max > c.depth_min)) {
    throw_error(ErrorCode::OutOfRange, "config: depth_max must exceed depth_min");
  }
  if (!(c.ray_max > c.ray_min)) {
    throw_error(ErrorCode::OutOfRange, "config: ray_max must exceed ray_min");
  }
}

}  // namespace

void apply_config_line(RunConfig& config, const std::string& line) {
  std::size_t eq = line.find('=');
  if (eq == std::string::npos) {
    throw_error(ErrorCode::MalformedLine, "config line has no '=': '" + line + "'");
  }
  std::string key = trim(line.substr(0, eq));
  std::string value = trim(line.substr(eq + 1));
  if (key.empty()) {
    throw_error(ErrorCode::MalformedLine, "config line has an empty key: '" + line + "'");
  }
  for (const KeyEntry& entry : registry()) {
    if (key == entry.name) {
      entry.apply(config, key, value);
      return;
    }
  }
  throw_error(ErrorCode::UnknownKey, "config key '" + key + "' is not recognized");
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::IoFailure, "cannot open " + path.string() + " for reading");
  RunConfig config;
  std::string line;
  while (std::getline(in, line)) {
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    apply_config_line(config, stripped);
  }
  check_cross_field(config);
  return config;
}

std::string render_config(const RunConfig& config) {
  std::ostringstream out;
  for (const KeyEntry& entry : registry()) {
    out << entry.name << "=" << entry.render(config) << "\n";
  }
  return out.str();
}

void write_effective_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << render_config(config);
  if (!out) throw_error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace bevforge
