#include "bevforge/io.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "bevforge/classes.hpp"

namespace bevforge {

namespace {

constexpr char kTensorMagic[4] = {'B', 'T', 'R', '1'};
constexpr std::uint8_t kDtypeU8 = 0;
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::size_t kMaxRank = 8;

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw_error(ErrorCode::IoFailure, "cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw_error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  return out;
}

void read_exact(std::istream& in, void* dst, std::size_t n, const std::filesystem::path& path) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw_error(ErrorCode::TruncatedPayload,
                path.string() + " ends before the expected " + std::to_string(n) + " bytes");
  }
}

void require_eof(std::istream& in, const std::filesystem::path& path) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw_error(ErrorCode::BadHeader, path.string() + " has trailing bytes after the payload");
  }
}

std::uint32_t decode_u32le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void encode_u32le(std::uint32_t v, unsigned char* b) {
  b[0] = static_cast<unsigned char>(v & 0xff);
  b[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  b[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  b[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

// Reads magic, dtype, and dims; leaves the stream at the payload.
std::vector<std::size_t> read_tensor_header(std::istream& in, const std::filesystem::path& path,
                                            std::uint8_t expected_dtype) {
  char magic[4];
  read_exact(in, magic, 4, path);
  if (std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw_error(ErrorCode::BadMagic, path.string() + " does not start with BTR1");
  }
  unsigned char meta[2];
  read_exact(in, meta, 2, path);
  std::uint8_t dtype = meta[0];
  if (dtype != kDtypeU8 && dtype != kDtypeF32) {
    throw_error(ErrorCode::UnsupportedDtype,
                path.string() + " has unknown dtype byte " + std::to_string(dtype));
  }
  if (dtype != expected_dtype) {
    throw_error(ErrorCode::UnsupportedDtype,
                path.string() + " holds dtype " + (dtype == kDtypeU8 ? "uint8" : "float32") +
                    ", not the requested one");
  }
  std::size_t ndim = meta[1];
  if (ndim == 0 || ndim > kMaxRank) {
    throw_error(ErrorCode::BadHeader,
                path.string() + " has unsupported rank " + std::to_string(ndim));
  }
  std::vector<std::size_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    unsigned char raw[4];
    read_exact(in, raw, 4, path);
    dims[i] = decode_u32le(raw);
  }
  return dims;
}

void write_tensor_header(std::ostream& out, std::uint8_t dtype,
                         const std::vector<std::size_t>& dims,
                         const std::filesystem::path& path) {
  if (dims.empty() || dims.size() > kMaxRank) {
    throw_error(ErrorCode::InvalidValue,
                "tensor rank " + std::to_string(dims.size()) + " not writable to " +
                    path.string());
  }
  out.write(kTensorMagic, 4);
  unsigned char meta[2] = {dtype, static_cast<unsigned char>(dims.size())};
  out.write(reinterpret_cast<const char*>(meta), 2);
  for (std::size_t d : dims) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw_error(ErrorCode::InvalidValue, "dimension too large for the tensor format");
    }
    unsigned char raw[4];
    encode_u32le(static_cast<std::uint32_t>(d), raw);
    out.write(reinterpret_cast<const char*>(raw), 4);
  }
}

std::size_t element_count(const std::vector<std::size_t>& dims,
                          const std::filesystem::path& path) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d) {
      throw_error(ErrorCode::BadHeader, path.string() + " dims overflow");
    }
    n *= d;
  }
  return n;
}

// Skips whitespace and '#'-to-end-of-line comments, then reads one
// unsigned decimal token from a PNM header.
std::size_t read_pnm_number(std::istream& in, const std::filesystem::path& path) {
  int c = in.get();
  while (c != std::char_traits<char>::eof()) {
    if (c == '#') {
      while (c != std::char_traits<char>::eof() && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == std::char_traits<char>::eof() || !std::isdigit(c)) {
    throw_error(ErrorCode::BadHeader, path.string() + " has a malformed image header");
  }
  std::size_t value = 0;
  while (c != std::char_traits<char>::eof() && std::isdigit(c)) {
    value = value * 10 + static_cast<std::size_t>(c - '0');
    if (value > std::numeric_limits<std::uint32_t>::max()) {
      throw_error(ErrorCode::BadHeader, path.string() + " header number too large");
    }
    c = in.get();
  }
  if (c != std::char_traits<char>::eof()) in.unget();
  return value;
}

std::ostream& full_precision(std::ostream& out) {
  out.precision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace

Tensor<float> read_tensor_f32(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::binary);
  std::vector<std::size_t> dims = read_tensor_header(in, path, kDtypeF32);
  std::size_t n = element_count(dims, path);
  Tensor<float> t(dims);
  std::vector<unsigned char> raw(n * 4);
  read_exact(in, raw.data(), raw.size(), path);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = decode_u32le(raw.data() + 4 * i);
    float value;
    std::memcpy(&value, &bits, 4);
    t[i] = value;
  }
  require_eof(in, path);
  return t;
}

Tensor<std::uint8_t> read_tensor_u8(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::binary);
  std::vector<std::size_t> dims = read_tensor_header(in, path, kDtypeU8);
  std::size_t n = element_count(dims, path);
  Tensor<std::uint8_t> t(dims);
  read_exact(in, t.data(), n, path);
  require_eof(in, path);
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor<float>& t) {
  std::ofstream out = open_output(path, std::ios::binary);
  write_tensor_header(out, kDtypeF32, t.shape(), path);
  std::vector<unsigned char> raw(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &t[i], 4);
    encode_u32le(bits, raw.data() + 4 * i);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw_error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void write_tensor(const std::filesystem::path& path, const Tensor<std::uint8_t>& t) {
  std::ofstream out = open_output(path, std::ios::binary);
  write_tensor_header(out, kDtypeU8, t.shape(), path);
  out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size()));
  if (!out) throw_error(ErrorCode::IoFailure, "write failed for " + path.string());
}

SemanticMap read_pgm(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::binary);
  char magic[2];
  read_exact(in, magic, 2, path);
  if (magic[0] != 'P' || magic[1] != '5') {
    throw_error(ErrorCode::BadHeader, path.string() + " is not a binary PGM (P5)");
  }
  std::size_t width = read_pnm_number(in, path);
  std::size_t height = read_pnm_number(in, path);
  std::size_t maxval = read_pnm_number(in, path);
  if (maxval != 255) {
    throw_error(ErrorCode::BadMaxval,
                path.string() + " has maxval " + std::to_string(maxval) + ", expected 255");
  }
  if (width == 0 || height == 0) {
    throw_error(ErrorCode::BadHeader, path.string() + " has a zero image dimension");
  }
  int sep = in.get();
  if (sep == std::char_traits<char>::eof() || !std::isspace(sep)) {
    throw_error(ErrorCode::BadHeader, path.string() + " missing whitespace before pixel data");
  }
  SemanticMap image({height, width});
  read_exact(in, image.data(), image.size(), path);
  require_eof(in, path);
  return image;
}

void write_pgm(const std::filesystem::path& path, const Tensor<std::uint8_t>& image) {
  if (image.ndim() != 2) {
    throw_error(ErrorCode::ShapeMismatch,
                "PGM wants a 2-d tensor, got " + shape_to_string(image.shape()));
  }
  std::ofstream out = open_output(path, std::ios::binary);
  out << "P5\n" << image.dim(1) << " " << image.dim(0) << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data()),
            static_cast<std::streamsize>(image.size()));
  if (!out) throw_error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Tensor<std::uint8_t>& rgb) {
  if (rgb.ndim() != 3 || rgb.dim(2) != 3) {
    throw_error(ErrorCode::ShapeMismatch,
                "PPM wants an H x W x 3 tensor, got " + shape_to_string(rgb.shape()));
  }
  std::ofstream out = open_output(path, std::ios::binary);
  out << "P6\n" << rgb.dim(1) << " " << rgb.dim(0) << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) throw_error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Tensor<std::uint8_t> colorize_labels(const Tensor<std::uint8_t>& labels) {
  if (labels.ndim() != 2) {
    throw_error(ErrorCode::ShapeMismatch,
                "colorize wants a 2-d tensor, got " + shape_to_string(labels.shape()));
  }
  Tensor<std::uint8_t> rgb({labels.dim(0), labels.dim(1), 3});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto color = classes::class_color(labels[i]);
    rgb[3 * i + 0] = color[0];
    rgb[3 * i + 1] = color[1];
    rgb[3 * i + 2] = color[2];
  }
  return rgb;
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::in);
  std::string line;
  // First non-blank, non-comment line carries the six numbers.
  while (std::getline(in, line)) {
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream tokens(line);
    CameraIntrinsics k;
    double width = 0.0, height = 0.0;
    if (!(tokens >> k.fx >> k.fy >> k.cx >> k.cy >> width >> height)) {
      throw_error(ErrorCode::MalformedLine, path.string() + ": expected 6 numbers, got '" +
                                                line + "'");
    }
    std::string extra;
    if (tokens >> extra) {
      throw_error(ErrorCode::MalformedLine,
                  path.string() + ": trailing token '" + extra + "'");
    }
    if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
      throw_error(ErrorCode::OutOfRange, path.string() + ": focal lengths must be positive");
    }
    if (width < 1.0 || height < 1.0 || width != std::floor(width) ||
        height != std::floor(height)) {
      throw_error(ErrorCode::OutOfRange, path.string() + ": image size must be positive integers");
    }
    k.width = static_cast<std::size_t>(width);
    k.height = static_cast<std::size_t>(height);
    return k;
  }
  throw_error(ErrorCode::BadHeader, path.string() + " has no intrinsics line");
}

void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k) {
  std::ofstream out = open_output(path, std::ios::out);
  full_precision(out) << k.fx << " " << k.fy << " " << k.cx << " " << k.cy << " " << k.width
                      << " " << k.height << "\n";
  if (!out) throw_error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<Pose> read_poses(const std::filesystem::path& path) {
  std::ifstream in = open_input(path, std::ios::in);
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream tokens(line);
    long long index = -1;
    double v[12];
    if (!(tokens >> index)) {
      throw_error(ErrorCode::MalformedLine,
                  path.string() + ":" + std::to_string(line_no) + " has no frame index");
    }
    for (double& value : v) {
      if (!(tokens >> value)) {
        throw_error(ErrorCode::MalformedLine, path.string() + ":" + std::to_string(line_no) +
                                                  " needs 13 numbers (index + 12 transform)");
      }
    }
    std::string extra;
    if (tokens >> extra) {
      throw_error(ErrorCode::MalformedLine, path.string() + ":" + std::to_string(line_no) +
                                                " has trailing token '" + extra + "'");
    }
    if (index != static_cast<long long>(poses.size())) {
      throw_error(ErrorCode::MalformedLine, path.string() + ":" + std::to_string(line_no) +
                                                " frame index " + std::to_string(index) +
                                                " out of order (expected " +
                                                std::to_string(poses.size()) + ")");
    }
    // Row layout: r11 r12 r13 t1  r21 r22 r23 t2  r31 r32 r33 t3.
    Pose pose;
    for (std::size_t row = 0; row < 3; ++row) {
      pose.r(row, 0) = v[4 * row + 0];
      pose.r(row, 1) = v[4 * row + 1];
      pose.r(row, 2) = v[4 * row + 2];
    }
    pose.t = {v[3], v[7], v[11]};
    validate_rotation(pose.r);
    pose.r = orthonormalize_rotation(pose.r);
    poses.push_back(pose);
  }
  return poses;
}

void write_poses(const std::filesystem::path& path, const std::vector<Pose>& world_from_cam) {
  std::ofstream out = open_output(path, std::ios::out);
  full_precision(out);
  for (std::size_t i = 0; i < world_from_cam.size(); ++i) {
    const Pose& p = world_from_cam[i];
    out << i;
    for (std::size_t row = 0; row < 3; ++row) {
      out << " " << p.r(row, 0) << " " << p.r(row, 1) << " " << p.r(row, 2);
      out << " " << (row == 0 ? p.t.x : row == 1 ? p.t.y : p.t.z);
    }
    out << "\n";
  }
  if (!out) throw_error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace bevforge
