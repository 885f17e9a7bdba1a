#include "probfuse/dataset_io.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "probfuse/error.hpp"

namespace fs = std::filesystem;

namespace probfuse {

Intrinsics tum_freiburg1_intrinsics() {
  Intrinsics k;
  k.fx = 517.3;
  k.fy = 516.5;
  k.cx = 318.6;
  k.cy = 255.3;
  k.width = 640;
  k.height = 480;
  return k;
}

Pose pose_from_tum(double tx, double ty, double tz, double qx, double qy, double qz,
                   double qw) {
  const Eigen::Quaterniond q = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
  Pose world_from_cam;
  world_from_cam.rotation = q.toRotationMatrix();
  world_from_cam.translation = {tx, ty, tz};
  return world_from_cam.inverse();
}

namespace {

struct StampedPath {
  double timestamp;
  std::string path;
};

std::ifstream open_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  return in;
}

template <typename Fn>
void for_each_data_line(std::istream& in, Fn&& fn) {
  std::string line;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream fields(line);
    fn(fields);
  }
}

std::vector<StampedPath> read_stamped_list(const fs::path& path) {
  auto in = open_text(path);
  std::vector<StampedPath> out;
  for_each_data_line(in, [&](std::istringstream& fields) {
    StampedPath entry;
    if (fields >> entry.timestamp >> entry.path) out.push_back(entry);
  });
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

// Index of the entry nearest `t` in a timestamp-sorted list, if within tolerance.
template <typename T, typename Stamp>
std::optional<std::size_t> nearest(const std::vector<T>& sorted, double t, double tol,
                                   Stamp&& stamp) {
  if (sorted.empty()) return std::nullopt;
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t,
                                   [&](const T& e, double v) { return stamp(e) < v; });
  std::size_t best = sorted.size();
  double best_dt = std::numeric_limits<double>::infinity();
  for (auto cand : {it, it == sorted.begin() ? it : std::prev(it)}) {
    if (cand == sorted.end()) continue;
    const double dt = std::abs(stamp(*cand) - t);
    if (dt < best_dt) {
      best_dt = dt;
      best = static_cast<std::size_t>(cand - sorted.begin());
    }
  }
  if (best_dt > tol) return std::nullopt;
  return best;
}

}  // namespace

SequenceIndex load_tum_sequence(const fs::path& dir, double tolerance) {
  SequenceIndex seq;
  seq.root = dir;
  const std::vector<StampedPath> rgb = read_stamped_list(dir / "rgb.txt");
  std::vector<StampedPath> depth;
  if (fs::exists(dir / "depth.txt")) depth = read_stamped_list(dir / "depth.txt");

  struct StampedPose {
    double timestamp;
    Pose pose;
  };
  std::vector<StampedPose> poses;
  {
    auto in = open_text(dir / "groundtruth.txt");
    for_each_data_line(in, [&](std::istringstream& fields) {
      double t, tx, ty, tz, qx, qy, qz, qw;
      if (fields >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw) {
        poses.push_back({t, pose_from_tum(tx, ty, tz, qx, qy, qz, qw)});
      }
    });
    std::sort(poses.begin(), poses.end(),
              [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }

  seq.intrinsics = tum_freiburg1_intrinsics();
  if (fs::exists(dir / "intrinsics.txt")) {
    auto in = open_text(dir / "intrinsics.txt");
    bool parsed = false;
    for_each_data_line(in, [&](std::istringstream& fields) {
      Intrinsics k;
      if (!parsed && fields >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height) {
        seq.intrinsics = k;
        parsed = true;
      }
    });
    if (!parsed) throw Error(ErrorCode::kInvalidConfig, "malformed intrinsics.txt");
  }
  seq.intrinsics.validate();

  for (const StampedPath& frame : rgb) {
    if (!seq.frames.empty() && frame.timestamp <= seq.frames.back().timestamp) continue;
    const auto pose_idx = nearest(poses, frame.timestamp, tolerance,
                                  [](const StampedPose& p) { return p.timestamp; });
    if (!pose_idx) continue;
    FrameRecord record;
    record.timestamp = frame.timestamp;
    record.rgb_path = dir / frame.path;
    record.pose = poses[*pose_idx].pose;
    const auto depth_idx = nearest(depth, frame.timestamp, tolerance,
                                   [](const StampedPath& p) { return p.timestamp; });
    if (depth_idx) record.depth_path = dir / depth[*depth_idx].path;
    seq.frames.push_back(std::move(record));
  }
  if (seq.frames.empty()) {
    throw Error(ErrorCode::kEmptyAssociation,
                "no rgb frame has a pose within tolerance in " + dir.string());
  }
  return seq;
}

void write_tum_index(const fs::path& dir, const SequenceIndex& seq) {
  std::ofstream rgb(dir / "rgb.txt");
  std::ofstream depth(dir / "depth.txt");
  std::ofstream gt(dir / "groundtruth.txt");
  std::ofstream intr(dir / "intrinsics.txt");
  if (!rgb || !depth || !gt || !intr) {
    throw Error(ErrorCode::kIoFailure, "cannot write index files in " + dir.string());
  }
  rgb << "# timestamp filename\n";
  depth << "# timestamp filename\n";
  gt << "# timestamp tx ty tz qx qy qz qw\n";
  for (const FrameRecord& f : seq.frames) {
    std::ostringstream stamp;
    stamp << std::fixed << std::setprecision(6) << f.timestamp;
    rgb << stamp.str() << ' ' << fs::relative(f.rgb_path, dir).generic_string() << '\n';
    if (f.depth_path) {
      depth << stamp.str() << ' ' << fs::relative(*f.depth_path, dir).generic_string()
            << '\n';
    }
    const Pose world_from_cam = f.pose.inverse();
    const Eigen::Quaterniond q(world_from_cam.rotation);
    gt << stamp.str() << std::setprecision(17);
    for (double v : {world_from_cam.translation.x(), world_from_cam.translation.y(),
                     world_from_cam.translation.z(), q.x(), q.y(), q.z(), q.w()}) {
      gt << ' ' << v;
    }
    gt << '\n';
  }
  const Intrinsics& k = seq.intrinsics;
  intr << std::setprecision(17) << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy
       << ' ' << k.width << ' ' << k.height << '\n';
}

RgbImage load_rgb_png(const fs::path& path) {
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  RgbImage img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img(x, y) = {static_cast<double>(row[x][2]), static_cast<double>(row[x][1]),
                   static_cast<double>(row[x][0])};
    }
  }
  return img;
}

void save_rgb_png(const RgbImage& img, const fs::path& path) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        row[x][2 - c] = cv::saturate_cast<uchar>(std::lround(img(x, y)[c]));
      }
    }
  }
  if (!cv::imwrite(path.string(), bgr)) {
    throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  }
}

DepthMap load_depth_png(const fs::path& path, double scale) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH);
  if (raw.empty()) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  if (raw.type() != CV_16UC1) {
    throw Error(ErrorCode::kIoFailure, "depth image is not 16-bit: " + path.string());
  }
  DepthMap d(raw.cols, raw.rows, 0.0);
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<std::uint16_t>(y);
    for (int x = 0; x < raw.cols; ++x) d(x, y) = row[x] / scale;
  }
  return d;
}

int export_depth_png(const DepthMap& d, const fs::path& path, double scale) {
  cv::Mat out(d.height(), d.width(), CV_16UC1);
  int clamped = 0;
  for (int y = 0; y < d.height(); ++y) {
    auto* row = out.ptr<std::uint16_t>(y);
    for (int x = 0; x < d.width(); ++x) {
      const double v = d(x, y);
      if (!is_valid_depth(v)) {
        row[x] = 0;
        continue;
      }
      const double scaled = std::round(v * scale);
      if (scaled > 65535.0) {
        row[x] = 65535;
        ++clamped;
      } else {
        row[x] = static_cast<std::uint16_t>(scaled);
      }
    }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), out);
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  return clamped;
}

RgbImage downsample_rgb(const RgbImage& img, int width, int height) {
  if (img.same_shape(width, height)) return img;
  cv::Mat src(img.height(), img.width(), CV_64FC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = src.ptr<cv::Vec3d>(y);
    for (int x = 0; x < img.width(); ++x) {
      row[x] = {img(x, y)[0], img(x, y)[1], img(x, y)[2]};
    }
  }
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_AREA);
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto* row = dst.ptr<cv::Vec3d>(y);
    for (int x = 0; x < width; ++x) out(x, y) = {row[x][0], row[x][1], row[x][2]};
  }
  return out;
}

DepthMap downsample_depth(const DepthMap& d, int width, int height) {
  if (d.same_shape(width, height)) return d;
  DepthMap out(width, height, 0.0);
  const double sx = static_cast<double>(d.width()) / width;
  const double sy = static_cast<double>(d.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double cx = (x + 0.5) * sx - 0.5;
      const double cy = (y + 0.5) * sy - 0.5;
      const int x0 = static_cast<int>(std::floor(x * sx));
      const int x1 = std::min(d.width() - 1, static_cast<int>(std::ceil((x + 1) * sx)) - 1);
      const int y0 = static_cast<int>(std::floor(y * sy));
      const int y1 = std::min(d.height() - 1, static_cast<int>(std::ceil((y + 1) * sy)) - 1);
      double best = std::numeric_limits<double>::infinity();
      for (int v = y0; v <= y1; ++v) {
        for (int u = x0; u <= x1; ++u) {
          if (!is_valid_depth(d(u, v))) continue;
          const double dist = (u - cx) * (u - cx) + (v - cy) * (v - cy);
          if (dist < best) {
            best = dist;
            out(x, y) = d(u, v);
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary formats

namespace {

constexpr std::size_t kMagicSize = 5;

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const fs::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void expect_magic(std::string_view m) {
    if (bytes_.size() < kMagicSize ||
        std::memcmp(bytes_.data(), m.data(), kMagicSize) != 0) {
      throw Error(ErrorCode::kBadMagic,
                  "expected magic " + std::string(m) + " in " + path_.string());
    }
    pos_ = kMagicSize;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
  double f64() { return std::bit_cast<double>(get(8)); }

  void expect_remaining(std::size_t n) const {
    if (bytes_.size() - pos_ != n) {
      std::ostringstream msg;
      msg << path_.string() << ": payload is " << bytes_.size() - pos_
          << " bytes, expected " << n;
      throw Error(ErrorCode::kSizeMismatch, msg.str());
    }
  }

 private:
  std::uint64_t get(int n) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::kSizeMismatch, "truncated header in " + path_.string());
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  fs::path path_;
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::pair<int, int> read_image_header(ByteReader& in, std::string_view magic) {
  in.expect_magic(magic);
  const std::uint32_t w = in.u32();
  const std::uint32_t h = in.u32();
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw Error(ErrorCode::kSizeMismatch, "implausible image size in header");
  }
  return {static_cast<int>(w), static_cast<int>(h)};
}

float read_finite(ByteReader& in) {
  const float v = in.f32();
  if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValues, "non-finite value in payload");
  return v;
}

double ray_sum(std::span<const float> ray) {
  double s = 0.0;
  for (float v : ray) s += v;
  return s;
}

constexpr double kCanonicalSumTol = 1e-10;
constexpr double kLoadSumTol = 1e-4;

// Rounds a normalised ray to float so that its double-precision sum is 1
// within kCanonicalSumTol, correcting the largest entries first.
void canonical_float_ray(std::span<const double> ray, std::span<float> out) {
  for (std::size_t k = 0; k < ray.size(); ++k) out[k] = static_cast<float>(ray[k]);
  double residual = 1.0 - ray_sum(out);
  if (std::abs(residual) <= kCanonicalSumTol) return;
  std::vector<std::size_t> order(ray.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return out[a] > out[b]; });
  for (int pass = 0; pass < 4 && std::abs(residual) > kCanonicalSumTol; ++pass) {
    for (std::size_t k : order) {
      if (out[k] == 0.0f) break;
      const float adjusted =
          static_cast<float>(std::max(0.0, static_cast<double>(out[k]) + residual));
      out[k] = adjusted;
      residual = 1.0 - ray_sum(out);
      if (std::abs(residual) <= kCanonicalSumTol) return;
    }
  }
}

}  // namespace

void save_prior(const ProbabilityVolume& vol, const fs::path& path) {
  ByteWriter out;
  out.magic("PVOL1");
  out.u32(static_cast<std::uint32_t>(vol.width()));
  out.u32(static_cast<std::uint32_t>(vol.height()));
  out.u32(static_cast<std::uint32_t>(vol.k_count()));
  out.f64(vol.binning().d_min());
  out.f64(vol.binning().d_max());
  std::vector<float> ray(vol.k_count());
  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    canonical_float_ray(vol.ray(i), ray);
    for (float v : ray) out.f32(v);
  }
  out.write(path);
}

ProbabilityVolume load_prior(const fs::path& path) {
  ByteReader in(path);
  const auto [w, h] = read_image_header(in, "PVOL1");
  const std::uint32_t kc = in.u32();
  const double d_min = in.f64();
  const double d_max = in.f64();
  if (kc < 2 || kc > 4096) throw Error(ErrorCode::kSizeMismatch, "implausible bin count");
  ProbabilityVolume vol(w, h, make_binning(d_min, d_max, static_cast<int>(kc)));
  in.expect_remaining(vol.data().size() * sizeof(float));
  std::vector<float> raw(kc);
  for (std::size_t i = 0; i < vol.pixel_count(); ++i) {
    for (float& v : raw) {
      v = read_finite(in);
      if (v < 0.0f) throw Error(ErrorCode::kNonFiniteValues, "negative probability");
    }
    const double sum = ray_sum(raw);
    if (std::abs(sum - 1.0) > kLoadSumTol) {
      std::ostringstream msg;
      msg << "ray " << i << " sums to " << std::setprecision(10) << sum;
      throw Error(ErrorCode::kUnnormalizedRay, msg.str());
    }
    auto ray = vol.ray(i);
    const double scale = std::abs(sum - 1.0) > kCanonicalSumTol ? 1.0 / sum : 1.0;
    for (std::uint32_t k = 0; k < kc; ++k) ray[k] = raw[k] * scale;
  }
  return vol;
}

void save_normals(const NormalMap& normals, const fs::path& path) {
  ByteWriter out;
  out.magic("NRML1");
  out.u32(static_cast<std::uint32_t>(normals.width()));
  out.u32(static_cast<std::uint32_t>(normals.height()));
  for (const Eigen::Vector3d& n : normals.values()) {
    for (int c = 0; c < 3; ++c) out.f32(static_cast<float>(n[c]));
  }
  out.write(path);
}

NormalMap load_normals(const fs::path& path) {
  ByteReader in(path);
  const auto [w, h] = read_image_header(in, "NRML1");
  NormalMap normals(w, h);
  in.expect_remaining(normals.size() * 3 * sizeof(float));
  for (std::size_t i = 0; i < normals.size(); ++i) {
    Eigen::Vector3d n;
    for (int c = 0; c < 3; ++c) n[c] = read_finite(in);
    const double norm = n.norm();
    if (norm == 0.0) {
      normals[i] = Eigen::Vector3d::Zero();
      continue;
    }
    if (std::abs(norm - 1.0) > 1e-4) {
      std::ostringstream msg;
      msg << "normal " << i << " has norm " << norm;
      throw Error(ErrorCode::kNonUnitNormal, msg.str());
    }
    normals[i] = n / norm;
  }
  return normals;
}

void save_boundary(const BoundaryProbMap& prob, const fs::path& path) {
  ByteWriter out;
  out.magic("OBND1");
  out.u32(static_cast<std::uint32_t>(prob.width()));
  out.u32(static_cast<std::uint32_t>(prob.height()));
  for (double p : prob.values()) out.f32(static_cast<float>(p));
  out.write(path);
}

BoundaryProbMap load_boundary(const fs::path& path) {
  ByteReader in(path);
  const auto [w, h] = read_image_header(in, "OBND1");
  BoundaryProbMap prob(w, h);
  in.expect_remaining(prob.size() * sizeof(float));
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const float v = read_finite(in);
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kOutOfRange, "boundary probability outside [0, 1]");
    }
    prob[i] = v;
  }
  return prob;
}

}  // namespace probfuse
