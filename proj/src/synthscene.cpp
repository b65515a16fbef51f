#include "offroad/synthscene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

namespace offroad::synth {
namespace {

using geometry::cross;
using geometry::dot;
using json = nlohmann::json;

Point3 add(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Point3 scale(const Point3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
Point3 normalized(const Point3& a) {
  const double n = std::sqrt(dot(a, a));
  return {a.x / n, a.y / n, a.z / n};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Lattice value in [-1, 1].
double lattice(std::uint64_t seed, std::int64_t i, std::int64_t j) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  h = splitmix64(h ^ static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Prepared primitive: a clipped plane n.P = c or an axis-aligned box.
struct Surface {
  const Primitive* prim = nullptr;
  std::uint64_t tex_seed = 0;
  double cell = 0.05;
  bool is_box = false;
  Point3 n;
  double c = 0.0;
  Point3 t1, t2;
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int surface = -1;
  Point3 p;
  Point3 n;
  double s = 0.0;
  double r = 0.0;
};

std::vector<Surface> prepare(const SceneSpec& spec, const geometry::CameraRig& rig) {
  std::vector<Surface> out;
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    const Primitive& p = spec.primitives[i];
    Surface s;
    s.prim = &p;
    s.tex_seed = splitmix64(spec.seed * 0x100000001b3ull + i);
    s.cell = p.texture.cell_m > 0 ? p.texture.cell_m : 0.05;
    switch (p.type) {
      case Primitive::Type::fronto:
        if (!(p.depth > 0)) throw Error(Errc::range, "fronto plane depth must be positive");
        s.n = {0, 0, -1};
        s.c = -p.depth;
        if (!(p.texture.cell_m > 0)) s.cell = p.depth / rig.focal_length_px;
        break;
      case Primitive::Type::ground:
        s.n = {0, -std::cos(rig.pitch_rad), -std::sin(rig.pitch_rad)};
        s.c = -rig.camera_height_m;
        break;
      case Primitive::Type::slanted: {
        if (dot(p.normal, p.normal) <= 0) throw Error(Errc::config, "slanted plane normal is zero");
        s.n = normalized(p.normal);
        s.c = dot(s.n, p.point);
        if (s.c == 0) throw Error(Errc::range, "slanted plane passes through the camera");
        if (s.c > 0) {
          s.n = scale(s.n, -1);
          s.c = -s.c;
        }
        break;
      }
      case Primitive::Type::box:
        s.is_box = true;
        if (p.bounds.contains({0, 0, 0}) || p.bounds.contains({rig.baseline_m, 0, 0}))
          throw Error(Errc::range, "box primitive contains a camera centre");
        break;
    }
    if (!s.is_box) {
      const Point3 a = std::abs(s.n.y) > 0.9 ? Point3{0, 0, 1} : Point3{0, 1, 0};
      s.t1 = normalized(cross(s.n, a));
      s.t2 = normalized(cross(s.n, s.t1));
    }
    out.push_back(s);
  }
  return out;
}

bool intersect_plane(const Surface& s, const Point3& o, const Point3& dir, Hit& hit) {
  const double denom = dot(s.n, dir);
  if (std::abs(denom) < 1e-15) return false;
  const double t = (s.c - dot(s.n, o)) / denom;
  if (!(t > 0) || t >= hit.t) return false;
  const Point3 p = add(o, scale(dir, t));
  if (!s.prim->bounds.contains(p)) return false;
  hit.t = t;
  hit.p = p;
  hit.n = s.n;
  hit.s = dot(p, s.t1);
  hit.r = dot(p, s.t2);
  return true;
}

bool intersect_box(const Surface& s, const Point3& o, const Point3& dir, Hit& hit) {
  const Box3& b = s.prim->bounds;
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {dir.x, dir.y, dir.z};
  const double lo[3] = {b.min.x, b.min.y, b.min.z};
  const double hi[3] = {b.max.x, b.max.y, b.max.z};
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(ds[k]) < 1e-15) {
      if (os[k] < lo[k] || os[k] > hi[k]) return false;
      continue;
    }
    double t0 = (lo[k] - os[k]) / ds[k];
    double t1 = (hi[k] - os[k]) / ds[k];
    double face_sign = -1;  // entering through the min face
    if (t0 > t1) {
      std::swap(t0, t1);
      face_sign = 1;
    }
    if (t0 > t_enter) {
      t_enter = t0;
      axis = k;
      sign = face_sign;
    }
    t_exit = std::min(t_exit, t1);
  }
  if (axis < 0 || t_enter > t_exit || !(t_enter > 0) || t_enter >= hit.t) return false;
  const Point3 p = add(o, scale(dir, t_enter));
  hit.t = t_enter;
  hit.p = p;
  hit.n = {axis == 0 ? sign : 0.0, axis == 1 ? sign : 0.0, axis == 2 ? sign : 0.0};
  const double ps[3] = {p.x, p.y, p.z};
  hit.s = ps[(axis + 1) % 3];
  hit.r = ps[(axis + 2) % 3];
  return true;
}

Hit cast(const std::vector<Surface>& surfaces, const Point3& o, const Point3& dir) {
  Hit hit;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const bool got = surfaces[i].is_box ? intersect_box(surfaces[i], o, dir, hit)
                                        : intersect_plane(surfaces[i], o, dir, hit);
    if (got) hit.surface = static_cast<int>(i);
  }
  return hit;
}

double texture_value(const Surface& s, double u, double v) {
  const double a = u / s.cell;
  const double b = v / s.cell;
  const double fa = std::floor(a);
  const double fb = std::floor(b);
  const auto i = static_cast<std::int64_t>(fa);
  const auto j = static_cast<std::int64_t>(fb);
  if (s.prim->texture.kind == Texture::Kind::checker) return ((i + j) & 1) ? 1.0 : -1.0;
  const double ta = a - fa;
  const double tb = b - fb;
  const double v00 = lattice(s.tex_seed, i, j);
  const double v10 = lattice(s.tex_seed, i + 1, j);
  const double v01 = lattice(s.tex_seed, i, j + 1);
  const double v11 = lattice(s.tex_seed, i + 1, j + 1);
  return (v00 * (1 - ta) + v10 * ta) * (1 - tb) + (v01 * (1 - ta) + v11 * ta) * tb;
}

std::array<double, 3> shade(const std::vector<Surface>& surfaces, const Hit& hit, const Color& sky) {
  if (hit.surface < 0) return {double(sky[0]), double(sky[1]), double(sky[2])};
  const Surface& s = surfaces[hit.surface];
  const double f = 1.0 + s.prim->texture.amplitude * texture_value(s, hit.s, hit.r);
  return {s.prim->color[0] * f, s.prim->color[1] * f, s.prim->color[2] * f};
}

// Box-Muller over mt19937_64 so the noise sequence is library independent.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0;
    do {
      u1 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    } while (u1 <= 0);
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0;
  bool has_spare_ = false;
};

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

RgbImage render_view(const std::vector<Surface>& surfaces, const SceneSpec& spec, const geometry::CameraRig& rig,
                     const Point3& origin, std::uint64_t noise_seed) {
  const int w = rig.image_size.width;
  const int h = rig.image_size.height;
  RgbImage img(w, h);
  Gaussian noise(noise_seed);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const Point3 dir{(u - rig.principal_point.u) / rig.focal_length_px,
                       (v - rig.principal_point.v) / rig.focal_length_px, 1.0};
      const auto c = shade(surfaces, cast(surfaces, origin, dir), spec.sky_color);
      const double n = spec.noise_sigma > 0 ? spec.noise_sigma * noise() : 0.0;
      auto* px = img.px(u, v);
      for (int k = 0; k < 3; ++k) px[k] = quantize(c[k] + n);
    }
  return img;
}

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }
Point3 json_point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

std::string_view type_name(Primitive::Type t) {
  switch (t) {
    case Primitive::Type::fronto: return "fronto";
    case Primitive::Type::ground: return "ground";
    case Primitive::Type::slanted: return "slanted";
    case Primitive::Type::box: return "box";
  }
  return "?";
}

}  // namespace

RenderedScene render_scene(const SceneSpec& spec, const geometry::CameraRig& rig) {
  rig.validate();
  const auto surfaces = prepare(spec, rig);
  const int w = rig.image_size.width;
  const int h = rig.image_size.height;
  const Point3 left_origin{0, 0, 0};
  const Point3 right_origin{rig.baseline_m, 0, 0};

  RenderedScene out;
  out.left = render_view(surfaces, spec, rig, left_origin, splitmix64(spec.seed ^ 0x4c454654ull));
  out.right = render_view(surfaces, spec, rig, right_origin, splitmix64(spec.seed ^ 0x52494748ull));

  GroundTruth& gt = out.gt;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  gt.disparity = stereo::DisparityMap(w, h);
  gt.points.assign(n, {});
  gt.normals.assign(n, {});
  gt.height_m.assign(n, 0.0);
  gt.label = LabelMap(w, h, static_cast<std::uint8_t>(ClassLabel::sky));
  gt.occluded.assign(n, 1);
  const double fb = rig.focal_length_px * rig.baseline_m;

  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const Point3 dir{(u - rig.principal_point.u) / rig.focal_length_px,
                       (v - rig.principal_point.v) / rig.focal_length_px, 1.0};
      const Hit hit = cast(surfaces, left_origin, dir);
      if (hit.surface < 0) continue;
      const auto i = gt.disparity.index(u, v);
      const double d = fb / hit.p.z;
      if (d < 1.0 - 1e-9 || d > 64.0 + 1e-9)
        throw Error(Errc::range, "primitive " + std::to_string(hit.surface) + " visible at disparity " +
                                     std::to_string(d) + " (pixel " + std::to_string(u) + "," + std::to_string(v) +
                                     ")");
      gt.disparity.set(u, v, d);
      gt.points[i] = hit.p;
      gt.normals[i] = hit.n;
      gt.height_m[i] = geometry::point_height(hit.p, rig);
      gt.label.data[i] = static_cast<std::uint8_t>(surfaces[hit.surface].prim->label);

      const double ur = u - d;
      if (ur < -0.5 || ur > w - 0.5) continue;
      // Visible in the right view iff nothing is hit before the point itself.
      const Point3 to_p = hit.p - right_origin;
      const Hit block = cast(surfaces, right_origin, to_p);
      gt.occluded[i] = block.surface >= 0 && block.t < 1.0 - 1e-9 ? 1 : 0;
    }
  return out;
}

SceneSpec fronto_plane_scene(double disparity, const geometry::CameraRig& rig, std::uint64_t seed,
                             double noise_sigma) {
  SceneSpec spec;
  spec.seed = seed;
  spec.noise_sigma = noise_sigma;
  Primitive p;
  p.type = Primitive::Type::fronto;
  p.label = ClassLabel::tree;
  p.depth = geometry::depth_from_disparity(disparity, rig);
  p.color = {128, 128, 128};
  p.texture.amplitude = 0.6;
  spec.primitives.push_back(p);
  return spec;
}

SceneSpec ground_plane_scene(const geometry::CameraRig& rig, std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  Primitive g;
  g.type = Primitive::Type::ground;
  g.label = ClassLabel::grass;
  g.color = {90, 150, 60};
  g.bounds.max.z = rig.focal_length_px * rig.baseline_m / 1.5;
  spec.primitives.push_back(g);
  return spec;
}

SceneSpec depth_edge_scene(double d_back, double d_front, const geometry::CameraRig& rig, std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  Primitive back;
  back.type = Primitive::Type::fronto;
  back.label = ClassLabel::tree;
  back.depth = geometry::depth_from_disparity(d_back, rig);
  back.color = {70, 110, 60};
  back.texture.amplitude = 0.6;
  Primitive front = back;
  front.label = ClassLabel::bush;
  front.depth = geometry::depth_from_disparity(d_front, rig);
  front.color = {170, 140, 100};
  const double z = front.depth;
  const double f = rig.focal_length_px;
  const double cx = rig.principal_point.u;
  const double w = rig.image_size.width;
  front.bounds.min = {(0.3 * w - cx) * z / f, -1e9, -1e9};
  front.bounds.max = {(0.7 * w - cx) * z / f, 1e9, 1e9};
  spec.primitives = {back, front};
  return spec;
}

SceneSpec random_offroad_scene(std::uint64_t seed, const geometry::CameraRig& rig) {
  std::mt19937_64 rng(splitmix64(seed));
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };

  const double f = rig.focal_length_px;
  const double fb = f * rig.baseline_m;
  const double h = rig.camera_height_m;
  const double cx = rig.principal_point.u;
  const double w = rig.image_size.width;
  const double z_far = fb / 1.5;
  const double z_near = fb / 60.0;

  const auto jitter = [&](Color base) {
    Color c;
    for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(std::clamp(base[k] + uni(-12, 12), 0.0, 255.0));
    return c;
  };
  const std::array<Color, kNumClasses> palette{Color{150, 190, 235}, Color{55, 85, 140},  Color{150, 110, 70},
                                               Color{95, 155, 60},   Color{120, 150, 50}, Color{35, 70, 35}};

  SceneSpec spec;
  spec.seed = seed;
  spec.sky_color = jitter(palette[0]);

  // Ground bands, split evenly in disparity so each covers similar rows.
  const int bands = 2 + pick(2);
  const ClassLabel ground_classes[3] = {ClassLabel::water, ClassLabel::dirt, ClassLabel::grass};
  int prev = -1;
  double z_lo = z_near;
  for (int b = 0; b < bands; ++b) {
    const double t = (b + 1.0) / bands;
    const double d_edge = b + 1 == bands ? 1.5 : std::exp(std::log(fb / z_near) * (1 - t) + std::log(1.5) * t);
    const double z_hi = fb / d_edge * (b + 1 == bands ? 1.0 : uni(0.85, 1.15));
    int k = pick(3);
    if (k == prev) k = (k + 1) % 3;
    prev = k;
    Primitive g;
    g.type = Primitive::Type::ground;
    g.label = ground_classes[k];
    g.color = jitter(palette[static_cast<int>(g.label)]);
    g.texture.amplitude = g.label == ClassLabel::water ? 0.15 : 0.35;
    g.texture.cell_m = 0.04;
    g.bounds.min.z = z_lo;
    g.bounds.max.z = std::min(z_hi, z_far);
    spec.primitives.push_back(g);
    z_lo = g.bounds.max.z;
  }

  // Tree line.
  const int trees = 1 + pick(3);
  for (int i = 0; i < trees; ++i) {
    Primitive t;
    t.type = Primitive::Type::fronto;
    t.label = ClassLabel::tree;
    t.color = jitter(palette[static_cast<int>(ClassLabel::tree)]);
    t.depth = uni(0.3, 0.75) * z_far;
    t.texture.cell_m = 0.15;
    t.texture.amplitude = 0.45;
    const double half_fov = std::max(cx, w - cx) * t.depth / f;
    const double x0 = uni(-half_fov, half_fov * 0.6);
    t.bounds.min = {x0, h - uni(4.0, 12.0), -1e9};
    t.bounds.max = {x0 + uni(0.3, 0.9) * half_fov, h, 1e9};
    spec.primitives.push_back(t);
  }

  // Bushes standing on the ground.
  const int bushes = 1 + pick(3);
  for (int i = 0; i < bushes; ++i) {
    Primitive b;
    b.type = Primitive::Type::box;
    b.label = ClassLabel::bush;
    b.color = jitter(palette[static_cast<int>(ClassLabel::bush)]);
    b.texture.cell_m = 0.08;
    b.texture.amplitude = 0.4;
    const double z = uni(std::max(4.0, z_near * 1.5), 0.3 * z_far);
    const double half = 0.8 * std::min(cx, w - cx) * z / f;
    const double x = uni(-half, half);
    const double width = uni(0.8, 2.5);
    b.bounds.min = {x - width / 2, h - uni(0.5, 1.5), z};
    b.bounds.max = {x + width / 2, h, z + uni(0.5, 2.0)};
    spec.primitives.push_back(b);
  }
  return spec;
}

std::string SceneSpec::to_json() const {
  json j;
  j["seed"] = seed;
  j["noise_sigma"] = noise_sigma;
  j["sky_color"] = sky_color;
  j["primitives"] = json::array();
  for (const auto& p : primitives) {
    json q;
    q["type"] = type_name(p.type);
    q["label"] = class_name(p.label);
    q["color"] = p.color;
    q["texture"] = {{"kind", p.texture.kind == Texture::Kind::noise ? "noise" : "checker"},
                    {"cell_m", p.texture.cell_m},
                    {"amplitude", p.texture.amplitude}};
    if (p.type == Primitive::Type::fronto) q["depth"] = p.depth;
    if (p.type == Primitive::Type::slanted) {
      q["normal"] = point_json(p.normal);
      q["point"] = point_json(p.point);
    }
    q["bounds"] = {{"min", point_json(p.bounds.min)}, {"max", point_json(p.bounds.max)}};
    j["primitives"].push_back(q);
  }
  return j.dump(2) + "\n";
}

SceneSpec SceneSpec::from_json(const std::string& text) {
  SceneSpec spec;
  try {
    const json j = json::parse(text);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    if (j.contains("sky_color")) spec.sky_color = j.at("sky_color").get<Color>();
    for (const auto& q : j.at("primitives")) {
      Primitive p;
      const auto type = q.at("type").get<std::string>();
      if (type == "fronto") p.type = Primitive::Type::fronto;
      else if (type == "ground") p.type = Primitive::Type::ground;
      else if (type == "slanted") p.type = Primitive::Type::slanted;
      else if (type == "box") p.type = Primitive::Type::box;
      else throw Error(Errc::format, "unknown primitive type '" + type + "'");
      const auto label = parse_class(q.at("label").get<std::string>());
      if (!label || *label == ClassLabel::ignore) throw Error(Errc::format, "bad primitive label");
      p.label = *label;
      if (q.contains("color")) p.color = q.at("color").get<Color>();
      if (q.contains("texture")) {
        const auto& t = q.at("texture");
        p.texture.kind = t.value("kind", std::string("noise")) == "checker" ? Texture::Kind::checker : Texture::Kind::noise;
        p.texture.cell_m = t.value("cell_m", 0.0);
        p.texture.amplitude = t.value("amplitude", 0.4);
      }
      if (q.contains("depth")) p.depth = q.at("depth").get<double>();
      if (q.contains("normal")) p.normal = json_point(q.at("normal"));
      if (q.contains("point")) p.point = json_point(q.at("point"));
      if (q.contains("bounds")) {
        p.bounds.min = json_point(q.at("bounds").at("min"));
        p.bounds.max = json_point(q.at("bounds").at("max"));
      }
      spec.primitives.push_back(p);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("scene spec: ") + e.what());
  }
  return spec;
}

SceneSpec SceneSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read scene spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void SceneSpec::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write scene spec " + path.string());
  out << to_json();
}

}  // namespace offroad::synth
