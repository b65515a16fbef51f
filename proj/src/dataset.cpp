#include "offroad/dataset.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace offroad::dataset {
namespace {

std::uint32_t pack_rgb(Rgb c) { return (std::uint32_t{c[0]} << 16) | (std::uint32_t{c[1]} << 8) | c[2]; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void Palette::add(Rgb color, ClassLabel label) { table_[pack_rgb(color)] = label; }

std::optional<ClassLabel> Palette::lookup(Rgb color) const {
  const auto it = table_.find(pack_rgb(color));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::optional<Rgb> Palette::color_of(ClassLabel label) const {
  for (const auto& [key, value] : table_)
    if (value == label)
      return Rgb{static_cast<std::uint8_t>(key >> 16), static_cast<std::uint8_t>(key >> 8),
                 static_cast<std::uint8_t>(key)};
  return std::nullopt;
}

Palette Palette::parse(const std::string& text) {
  Palette p;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(trim(f));
    const std::string where = "palette line " + std::to_string(lineno);
    if (fields.size() != 4) throw Error(Errc::format, where + ": expected R,G,B,class_name");
    Rgb c{};
    for (int k = 0; k < 3; ++k) {
      int v = -1;
      try {
        v = std::stoi(fields[k]);
      } catch (const std::exception&) {
      }
      if (v < 0 || v > 255) throw Error(Errc::format, where + ": colour component out of range");
      c[k] = static_cast<std::uint8_t>(v);
    }
    const auto label = parse_class(fields[3]);
    if (!label) throw Error(Errc::format, where + ": unknown class '" + fields[3] + "'");
    p.add(c, *label);
  }
  return p;
}

Palette Palette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read palette " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Palette Palette::default_palette() {
  Palette p;
  p.add({128, 192, 255}, ClassLabel::sky);
  p.add({0, 0, 255}, ClassLabel::water);
  p.add({128, 64, 0}, ClassLabel::dirt);
  p.add({0, 255, 0}, ClassLabel::grass);
  p.add({255, 255, 0}, ClassLabel::bush);
  p.add({0, 96, 0}, ClassLabel::tree);
  return p;
}

IngestResult ingest_label_image(const RgbImage& img, const Palette& palette, bool strict) {
  IngestResult out{LabelMap(img.width, img.height, kIgnoreLabel), 0};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto* p = img.px(x, y);
      const auto label = palette.lookup({p[0], p[1], p[2]});
      if (label) {
        out.labels.at(x, y) = static_cast<std::uint8_t>(*label);
        continue;
      }
      if (strict)
        throw Error(Errc::unknown_color, "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") has colour " +
                                             std::to_string(p[0]) + "," + std::to_string(p[1]) + "," +
                                             std::to_string(p[2]));
      ++out.unknown_pixels;
    }
  return out;
}

RgbImage colorize_labels(const LabelMap& labels, const Palette& palette) {
  RgbImage out(labels.width, labels.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = palette.color_of(static_cast<ClassLabel>(labels.data[i]));
    if (!c) continue;
    for (int k = 0; k < 3; ++k) out.data[i * 3 + k] = (*c)[k];
  }
  return out;
}

Split split_dataset(const std::vector<std::string>& ids, double ratio, std::uint64_t seed) {
  if (ids.empty()) throw Error(Errc::empty_dataset, "no samples to split");
  if (!(ratio >= 0 && ratio <= 1)) throw Error(Errc::config, "split ratio must be in [0, 1]");
  std::vector<std::string> order = ids;
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates with rejection sampling: identical on every stdlib.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = 0;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(order[i - 1], order[r % bound]);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(order.size())));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

Manifest Manifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read manifest " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  Manifest m;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.size() < 3 || f.size() > 4)
      throw Error(Errc::format, path.string() + ":" + std::to_string(lineno) + ": expected 'id image label [right]'");
    if (!seen.insert(f[0]).second)
      throw Error(Errc::format, path.string() + ":" + std::to_string(lineno) + ": duplicate id '" + f[0] + "'");
    Sample s{f[0], resolve(f[1]), resolve(f[2]), std::nullopt};
    if (f.size() == 4) s.right = resolve(f[3]);
    m.samples.push_back(std::move(s));
  }
  return m;
}

void Manifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write manifest " + path.string());
  const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    auto r = std::filesystem::proximate(p, base);
    return r.empty() ? p.generic_string() : r.generic_string();
  };
  for (const auto& s : samples) {
    out << s.id << ' ' << rel(s.image) << ' ' << rel(s.label);
    if (s.right) out << ' ' << rel(*s.right);
    out << '\n';
  }
}

std::vector<std::string> Manifest::ids() const {
  std::vector<std::string> out;
  for (const auto& s : samples) out.push_back(s.id);
  return out;
}

Manifest Manifest::subset(const std::vector<std::string>& ids) const {
  Manifest m;
  for (const auto& id : ids) {
    bool found = false;
    for (const auto& s : samples)
      if (s.id == id) {
        m.samples.push_back(s);
        found = true;
        break;
      }
    if (!found) throw Error(Errc::consistency, "sample id '" + id + "' not in manifest");
  }
  return m;
}

}  // namespace offroad::dataset
