#include "offroad/geometry.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "offroad/error.hpp"

namespace offroad::geometry {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::config, "rig key '" + key + "': not a number: '" + s + "'");
}

std::pair<double, double> parse_pair(const std::string& key, const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw Error(Errc::config, "rig key '" + key + "': expected 'a, b'");
  return {parse_double(key, trim(s.substr(0, comma))), parse_double(key, trim(s.substr(comma + 1)))};
}

}  // namespace

void CameraRig::validate() const {
  if (!(focal_length_px > 0)) throw Error(Errc::config, "focal_length_px must be > 0");
  if (!(baseline_m > 0)) throw Error(Errc::config, "baseline_m must be > 0");
  if (!(camera_height_m > 0)) throw Error(Errc::config, "camera_height_m must be > 0");
  if (image_size.width <= 0 || image_size.height <= 0) throw Error(Errc::config, "image_size must be positive");
  if (!(principal_point.u >= 0 && principal_point.u < image_size.width && principal_point.v >= 0 &&
        principal_point.v < image_size.height))
    throw Error(Errc::config, "principal_point outside image bounds");
  if (!std::isfinite(pitch_rad) || std::abs(pitch_rad) >= M_PI / 2) throw Error(Errc::config, "pitch_rad out of range");
}

std::string CameraRig::to_text() const {
  std::ostringstream os;
  os << "focal_length_px = " << fmt_double(focal_length_px) << "\n"
     << "baseline_m = " << fmt_double(baseline_m) << "\n"
     << "principal_point = " << fmt_double(principal_point.u) << ", " << fmt_double(principal_point.v) << "\n"
     << "camera_height_m = " << fmt_double(camera_height_m) << "\n"
     << "image_size = " << image_size.width << ", " << image_size.height << "\n"
     << "pitch_rad = " << fmt_double(pitch_rad) << "\n";
  return os.str();
}

CameraRig CameraRig::from_text(const std::string& text) {
  CameraRig rig;
  std::istringstream is(text);
  std::string line;
  std::map<std::string, std::string> kv;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::config, "rig line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const auto& [key, value] : kv) {
    if (key == "focal_length_px") {
      rig.focal_length_px = parse_double(key, value);
    } else if (key == "baseline_m") {
      rig.baseline_m = parse_double(key, value);
    } else if (key == "principal_point") {
      auto [u, v] = parse_pair(key, value);
      rig.principal_point = {u, v};
    } else if (key == "camera_height_m") {
      rig.camera_height_m = parse_double(key, value);
    } else if (key == "image_size") {
      auto [w, h] = parse_pair(key, value);
      rig.image_size = {static_cast<int>(w), static_cast<int>(h)};
    } else if (key == "pitch_rad") {
      rig.pitch_rad = parse_double(key, value);
    } else {
      throw Error(Errc::config, "unknown rig key '" + key + "'");
    }
  }
  rig.validate();
  return rig;
}

CameraRig CameraRig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read rig file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void CameraRig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write rig file " + path.string());
  out << to_text();
}

std::uint64_t CameraRig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double depth_from_disparity(double disparity, const CameraRig& rig) {
  if (!(disparity > 0)) throw Error(Errc::invalid_disparity, "disparity must be > 0, got " + std::to_string(disparity));
  return rig.focal_length_px * rig.baseline_m / disparity;
}

double disparity_from_depth(double depth, const CameraRig& rig) {
  if (!(depth > 0)) throw Error(Errc::invalid_disparity, "depth must be > 0");
  return rig.focal_length_px * rig.baseline_m / depth;
}

Point3 reproject_pixel(double u, double v, double disparity, const CameraRig& rig) {
  const double z = depth_from_disparity(disparity, rig);
  return {(u - rig.principal_point.u) * z / rig.focal_length_px, (v - rig.principal_point.v) * z / rig.focal_length_px,
          z};
}

double point_height(const Point3& p, const CameraRig& rig) {
  if (rig.pitch_rad == 0.0) return rig.camera_height_m - p.y;
  // World "up" expressed in the pitched camera frame.
  return rig.camera_height_m - (std::cos(rig.pitch_rad) * p.y + std::sin(rig.pitch_rad) * p.z);
}

}  // namespace offroad::geometry
