#include "offroad/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "offroad/dataset.hpp"
#include "offroad/image_io.hpp"
#include "offroad/metrics.hpp"
#include "offroad/minisegnet.hpp"
#include "offroad/pipeline.hpp"
#include "offroad/synthscene.hpp"

namespace offroad::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Globals {
  std::string rig_path;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct StereoFlags {
  int d_min = 1;
  int d_max = 64;
  int p1 = 8;
  int p2 = 32;
  int paths = 8;
  int uniqueness = 10;
  int lr_max_diff = 1;
  int radius = 16;
  double gamma_color = 14.0;
  double gamma_spatial = 17.5;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--d-min", d_min, "Minimum disparity (px)")->capture_default_str();
    cmd->add_option("--d-max", d_max, "Maximum disparity (px)")->capture_default_str();
    cmd->add_option("--p1", p1, "SGBM small smoothness penalty")->capture_default_str();
    cmd->add_option("--p2", p2, "SGBM large smoothness penalty")->capture_default_str();
    cmd->add_option("--paths", paths, "SGBM aggregation directions (4 or 8)")->capture_default_str();
    cmd->add_option("--uniqueness", uniqueness, "SGBM uniqueness ratio (percent)")->capture_default_str();
    cmd->add_option("--lr-max-diff", lr_max_diff, "Left-right check tolerance, negative disables")
        ->capture_default_str();
    cmd->add_option("--radius", radius, "ASW window radius (px)")->capture_default_str();
    cmd->add_option("--gamma-color", gamma_color, "ASW colour falloff")->capture_default_str();
    cmd->add_option("--gamma-spatial", gamma_spatial, "ASW spatial falloff")->capture_default_str();
  }

  pipeline::StereoOptions options(int jobs) const {
    pipeline::StereoOptions o;
    o.sgbm.d_min = o.asw.d_min = d_min;
    o.sgbm.d_max = o.asw.d_max = d_max;
    o.sgbm.p1 = p1;
    o.sgbm.p2 = p2;
    o.sgbm.num_paths = paths;
    o.sgbm.uniqueness_ratio = uniqueness;
    o.sgbm.lr_max_diff = o.asw.lr_max_diff = lr_max_diff;
    o.asw.window_radius = radius;
    o.asw.gamma_color = gamma_color;
    o.asw.gamma_spatial = gamma_spatial;
    o.asw.jobs = jobs;
    return o;
  }

  json to_json() const {
    return {{"d_min", d_min},     {"d_max", d_max},
            {"p1", p1},           {"p2", p2},
            {"paths", paths},     {"uniqueness", uniqueness},
            {"lr_max_diff", lr_max_diff}, {"radius", radius},
            {"gamma_color", gamma_color}, {"gamma_spatial", gamma_spatial}};
  }
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  geometry::CameraRig rig() const {
    return globals.rig_path.empty() ? geometry::CameraRig{} : geometry::CameraRig::load(globals.rig_path);
  }

  // One JSON line on stderr per run; written next to directory outputs too.
  void provenance(const std::string& command, json params, const std::optional<fs::path>& dir = std::nullopt) {
    json rec;
    rec["command"] = command;
    rec["version"] = "0.1.0";
    rec["seed"] = globals.seed;
    rec["jobs"] = globals.jobs;
    if (!globals.rig_path.empty()) rec["rig"] = rig().to_text();
    rec["params"] = std::move(params);
    if (globals.verbose) err_ << rec.dump() << "\n";
    if (dir) {
      std::ofstream f(*dir / "provenance.json");
      f << rec.dump(2) << "\n";
    }
  }

  void log(const std::string& msg) {
    if (globals.verbose) err_ << msg << "\n";
  }

  std::ostream& out() { return out_; }

  Globals globals;

 private:
  std::ostream& out_;
  std::ostream& err_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create directory " + dir.string());
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw Error(Errc::io, "missing input " + p.string());
}

encodings::EncodingKind parse_kind(const std::string& kind, const std::string& source) {
  encodings::EncodingKind k{encodings::parse_encoding(kind), encodings::parse_stereo_source(source)};
  if (k.encoding == encodings::Encoding::RGB) k.source = encodings::StereoSource::None;
  else if (k.source == encodings::StereoSource::None) throw Error(Errc::usage, kind + " needs --stereo sgbm|asw");
  return k;
}

// ---- stereo --------------------------------------------------------------

struct StereoCmd {
  std::string left, right, algo = "sgbm", out, vis;
  StereoFlags flags;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("stereo", "Compute a disparity map from a rectified pair");
    c->add_option("--left", left, "Left image (PNG)")->required();
    c->add_option("--right", right, "Right image (PNG)")->required();
    c->add_option("--algo", algo, "sgbm or asw")->check(CLI::IsMember({"sgbm", "asw"}))->capture_default_str();
    c->add_option("--out", out, "16-bit disparity PNG (round(d*256), 0 = invalid)")->required();
    c->add_option("--vis", vis, "Optional false-colour visualisation PNG");
    flags.add_to(c);
  }

  void run(Runner& r) {
    require_file(left);
    require_file(right);
    const auto source = encodings::parse_stereo_source(algo);
    const auto dmap =
        pipeline::compute_disparity(io::read_gray(left), io::read_gray(right), source, flags.options(r.globals.jobs));
    io::write_gray16(out, stereo::to_fixed_point(dmap));
    if (!vis.empty()) io::write_rgb(vis, stereo::colorize(dmap, flags.d_min, flags.d_max));
    r.provenance("stereo", {{"left", left}, {"right", right}, {"algo", algo}, {"out", out}, {"stereo", flags.to_json()}});
    r.log("valid pixels: " + std::to_string(dmap.valid_count()) + "/" + std::to_string(dmap.valid.size()));
  }
};

// ---- encode --------------------------------------------------------------

struct EncodeCmd {
  std::string left, right, out, manifest, out_dir, kind = "rgb", source, export_png, channels_dir;
  StereoFlags flags;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("encode", "Match a pair and pack an RGB-D encoding container");
    c->add_option("--left", left, "Left image (PNG)");
    c->add_option("--right", right, "Right image (PNG)");
    c->add_option("--out", out, "Output container (single pair mode)");
    c->add_option("--manifest", manifest, "Batch mode: manifest with 'id left label right' lines");
    c->add_option("--out-dir", out_dir, "Batch mode: output directory");
    c->add_option("--kind", kind, "rgb, rgbd, rgbh, rgba, rgbn or rgbdha")->capture_default_str();
    c->add_option("--stereo", source, "sgbm or asw (required unless --kind rgb)");
    c->add_option("--export-png", export_png, "Single pair mode: also export the planes as one PNG");
    c->add_option("--channels-dir", channels_dir, "Single pair mode: write each plane as an 8-bit PNG");
    flags.add_to(c);
  }

  void run(Runner& r) {
    const auto k = parse_kind(kind, source);
    const auto rig = r.rig();
    const auto opts = flags.options(manifest.empty() ? r.globals.jobs : 1);
    json params{{"kind", kind}, {"stereo", source}, {"stereo_params", flags.to_json()}};
    if (manifest.empty()) {
      if (left.empty() || out.empty() || (k.encoding != encodings::Encoding::RGB && right.empty()))
        throw Error(Errc::usage, "encode needs --left, --right and --out (or --manifest and --out-dir)");
      require_file(left);
      if (!right.empty()) require_file(right);
      const auto img = pipeline::encode_pair(left, right, rig, k, opts);
      dataset::write_container(img, out, rig.hash());
      if (!export_png.empty()) dataset::export_png(img, export_png);
      if (!channels_dir.empty()) {
        ensure_dir(channels_dir);
        for (int c = 0; c < img.channel_count(); ++c)
          io::write_gray(fs::path(channels_dir) / ("channel_" + std::to_string(c) + ".png"), img.planes[c]);
      }
      params["left"] = left;
      params["right"] = right;
      params["out"] = out;
      r.provenance("encode", params);
      return;
    }
    if (out_dir.empty()) throw Error(Errc::usage, "--manifest needs --out-dir");
    require_file(manifest);
    ensure_dir(out_dir);
    const auto m = dataset::Manifest::load(manifest);
    dataset::Manifest result;
    result.samples.resize(m.samples.size());
    pipeline::parallel_for(m.samples.size(), r.globals.jobs, [&](std::size_t i) {
      const auto& s = m.samples[i];
      if (k.encoding != encodings::Encoding::RGB && !s.right)
        throw Error(Errc::format, "manifest sample '" + s.id + "' has no right image");
      require_file(s.image);
      const auto img = pipeline::encode_pair(s.image, s.right.value_or(fs::path()), rig, k, opts);
      const fs::path container = fs::path(out_dir) / (s.id + ".orc");
      dataset::write_container(img, container, rig.hash());
      result.samples[i] = {s.id, container, s.label, std::nullopt};
    });
    result.save(fs::path(out_dir) / "manifest.txt");
    params["manifest"] = manifest;
    params["out_dir"] = out_dir;
    r.provenance("encode", params, fs::path(out_dir));
    r.log("encoded " + std::to_string(result.samples.size()) + " samples");
  }
};

// ---- render-synthetic ----------------------------------------------------

struct RenderCmd {
  std::string spec, out_dir;
  int random = 0;
  double noise = -1.0;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("render-synthetic", "Render synthetic stereo pairs with analytic ground truth");
    c->add_option("--spec", spec, "Scene spec (JSON)");
    c->add_option("--random", random, "Generate this many random off-road scenes from --seed");
    c->add_option("--noise", noise, "Override the Gaussian intensity noise sigma");
    c->add_option("--out", out_dir, "Output directory")->required();
  }

  static void write_scene(const synth::SceneSpec& spec, const geometry::CameraRig& rig, const fs::path& dir) {
    ensure_dir(dir);
    const auto scene = synth::render_scene(spec, rig);
    io::write_rgb(dir / "left.png", scene.left);
    io::write_rgb(dir / "right.png", scene.right);
    io::write_gray16(dir / "gt_disparity.png", stereo::to_fixed_point(scene.gt.disparity));
    io::write_gray(dir / "labels.png", scene.gt.label);
    spec.save(dir / "scene.json");
    json meta;
    meta["rig"] = rig.to_text();
    meta["width"] = rig.image_size.width;
    meta["height"] = rig.image_size.height;
    std::array<std::uint64_t, kNumClasses> counts{};
    for (auto l : scene.gt.label.data) ++counts[l];
    for (int c = 0; c < kNumClasses; ++c) meta["label_pixels"][std::string(kClassNames[c])] = counts[c];
    meta["valid_disparity_pixels"] = scene.gt.disparity.valid_count();
    std::size_t occluded = 0;
    for (std::size_t i = 0; i < scene.gt.occluded.size(); ++i) occluded += scene.gt.disparity.valid[i] && scene.gt.occluded[i];
    meta["occluded_pixels"] = occluded;
    std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
  }

  void run(Runner& r) {
    if (spec.empty() == (random <= 0)) throw Error(Errc::usage, "give exactly one of --spec or --random N");
    const auto rig = r.rig();
    ensure_dir(out_dir);
    rig.save(fs::path(out_dir) / "rig.txt");
    dataset::Manifest m;
    if (!spec.empty()) {
      require_file(spec);
      auto s = synth::SceneSpec::load(spec);
      if (noise >= 0) s.noise_sigma = noise;
      write_scene(s, rig, out_dir);
      m.samples.push_back({"scene", fs::path(out_dir) / "left.png", fs::path(out_dir) / "labels.png",
                           fs::path(out_dir) / "right.png"});
    } else {
      m.samples.resize(static_cast<std::size_t>(random));
      pipeline::parallel_for(m.samples.size(), r.globals.jobs, [&](std::size_t i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene_%03zu", i);
        auto s = synth::random_offroad_scene(r.globals.seed * 1000003ull + i, rig);
        if (noise >= 0) s.noise_sigma = noise;
        const fs::path dir = fs::path(out_dir) / id;
        write_scene(s, rig, dir);
        m.samples[i] = {id, dir / "left.png", dir / "labels.png", dir / "right.png"};
      });
    }
    m.save(fs::path(out_dir) / "manifest.txt");
    r.provenance("render-synthetic", {{"spec", spec}, {"random", random}, {"noise", noise}, {"out", out_dir}},
                 fs::path(out_dir));
  }
};

// ---- split ---------------------------------------------------------------

struct SplitCmd {
  std::string manifest, out_dir;
  double ratio = 0.8;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("split", "Deterministic train/test split of a manifest");
    c->add_option("--manifest", manifest, "Input manifest")->required();
    c->add_option("--ratio", ratio, "Training fraction")->capture_default_str();
    c->add_option("--out-dir", out_dir, "Directory for train.txt and test.txt (default: manifest dir)");
  }

  void run(Runner& r) {
    require_file(manifest);
    const auto m = dataset::Manifest::load(manifest);
    const auto split = dataset::split_dataset(m.ids(), ratio, r.globals.seed);
    const fs::path dir = out_dir.empty() ? fs::path(manifest).parent_path() : fs::path(out_dir);
    ensure_dir(dir);
    m.subset(split.train).save(dir / "train.txt");
    m.subset(split.test).save(dir / "test.txt");
    r.provenance("split", {{"manifest", manifest}, {"ratio", ratio}, {"train", split.train.size()},
                           {"test", split.test.size()}});
    r.out() << "train " << split.train.size() << " test " << split.test.size() << "\n";
  }
};

// ---- train ---------------------------------------------------------------

std::vector<nn::TrainingSample> load_samples(const dataset::Manifest& m, const dataset::Palette* palette, int jobs) {
  std::vector<nn::TrainingSample> data(m.samples.size());
  pipeline::parallel_for(m.samples.size(), jobs, [&](std::size_t i) {
    require_file(m.samples[i].image);
    require_file(m.samples[i].label);
    data[i].input = nn::to_tensor(dataset::read_container(m.samples[i].image));
    data[i].labels = pipeline::load_labels(m.samples[i].label, palette);
  });
  return data;
}

struct TrainCmd {
  std::string manifest, out, loss_csv, palette;
  nn::TrainConfig cfg;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train", "Train the encoder-decoder classifier on containers");
    c->add_option("--manifest", manifest, "Training manifest ('id container label')")->required();
    c->add_option("--out", out, "Checkpoint path")->required();
    c->add_option("--loss-csv", loss_csv, "Loss curve CSV (iteration,loss)");
    c->add_option("--iterations", cfg.iterations, "SGD iterations (one image each)")->capture_default_str();
    c->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
    c->add_option("--momentum", cfg.momentum, "Momentum")->capture_default_str();
    c->add_option("--palette", palette, "Ingest colour label images with this palette");
  }

  void run(Runner& r) {
    require_file(manifest);
    cfg.seed = r.globals.seed;
    std::optional<dataset::Palette> pal;
    if (!palette.empty()) pal = dataset::Palette::load(palette);
    const auto data = load_samples(dataset::Manifest::load(manifest), pal ? &*pal : nullptr, r.globals.jobs);
    if (data.empty()) throw Error(Errc::empty_dataset, "training manifest is empty");
    const int channels = data.front().input.channels;
    const auto result = nn::train(nn::MiniNet::create(channels, cfg.seed), data, cfg);
    nn::save_checkpoint(result.net, out);
    if (!loss_csv.empty()) nn::write_loss_csv(result.loss_curve, loss_csv);
    r.provenance("train", {{"manifest", manifest}, {"out", out}, {"iterations", cfg.iterations},
                           {"learning_rate", cfg.learning_rate}, {"momentum", cfg.momentum},
                           {"input_channels", channels}});
    if (!result.loss_curve.empty())
      r.log("loss " + std::to_string(result.loss_curve.front()) + " -> " + std::to_string(result.loss_curve.back()));
  }
};

// ---- predict -------------------------------------------------------------

struct PredictCmd {
  std::string checkpoint, manifest, out_dir;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("predict", "Write per-pixel class predictions as label PNGs");
    c->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
    c->add_option("--manifest", manifest, "Manifest of containers to label")->required();
    c->add_option("--out-dir", out_dir, "Output directory for <id>.png")->required();
  }

  void run(Runner& r) {
    require_file(checkpoint);
    require_file(manifest);
    const auto net = nn::load_checkpoint(checkpoint);
    const auto m = dataset::Manifest::load(manifest);
    ensure_dir(out_dir);
    pipeline::parallel_for(m.samples.size(), r.globals.jobs, [&](std::size_t i) {
      require_file(m.samples[i].image);
      const auto x = nn::to_tensor(dataset::read_container(m.samples[i].image));
      io::write_gray(fs::path(out_dir) / (m.samples[i].id + ".png"), nn::predict_labels(net, x));
    });
    r.provenance("predict", {{"checkpoint", checkpoint}, {"manifest", manifest}, {"out_dir", out_dir}},
                 fs::path(out_dir));
  }
};

// ---- eval ----------------------------------------------------------------

struct EvalCmd {
  std::string pred, gt, name, kind, source, out, table, palette;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval", "Score predicted label maps against ground truth");
    c->add_option("--pred", pred, "Directory of predicted label PNGs")->required();
    c->add_option("--gt", gt, "Ground-truth label directory or manifest")->required();
    c->add_option("--name", name, "Row name in the report");
    c->add_option("--kind", kind, "Encoding kind used to name the row");
    c->add_option("--stereo", source, "Stereo source used to name the row");
    c->add_option("--out", out, "Metrics CSV");
    c->add_option("--table", table, "Also write the aligned table here");
    c->add_option("--palette", palette, "Ground truth is colour-coded with this palette");
  }

  void run(Runner& r) {
    require_file(pred);
    require_file(gt);
    std::optional<dataset::Palette> pal;
    if (!palette.empty()) pal = dataset::Palette::load(palette);

    // Pairs of (prediction, ground truth), keyed by id / file name.
    std::vector<std::pair<fs::path, fs::path>> pairs;
    if (fs::is_directory(gt)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(gt))
        if (e.path().extension() == ".png") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) pairs.emplace_back(fs::path(pred) / f.filename(), f);
    } else {
      for (const auto& s : dataset::Manifest::load(gt).samples)
        pairs.emplace_back(fs::path(pred) / (s.id + ".png"), s.label);
    }
    if (pairs.empty()) throw Error(Errc::empty_dataset, "no ground-truth label images found");

    std::vector<metrics::ConfusionMatrix> parts(pairs.size());
    pipeline::parallel_for(pairs.size(), r.globals.jobs, [&](std::size_t i) {
      require_file(pairs[i].first);
      parts[i] = metrics::confusion_matrix(io::read_gray(pairs[i].first),
                                           pipeline::load_labels(pairs[i].second, pal ? &*pal : nullptr));
    });
    metrics::ConfusionMatrix cm;
    for (const auto& p : parts) cm += p;

    std::string row = name;
    if (row.empty()) row = kind.empty() ? "RGB" : parse_kind(kind, source).label();
    const auto report = metrics::make_report(row, cm);
    const auto text = metrics::format_table({report});
    r.out() << text;
    if (!out.empty()) {
      std::ofstream f(out);
      if (!f) throw Error(Errc::io, "cannot write " + out);
      f << metrics::to_csv({report});
    }
    if (!table.empty()) std::ofstream(table) << text;
    r.provenance("eval", {{"pred", pred}, {"gt", gt}, {"name", row}, {"images", pairs.size()}});
  }
};

// ---- report --------------------------------------------------------------

struct ReportCmd {
  std::vector<std::string> inputs;
  std::string out, csv;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Combine metrics CSVs into one table with best values marked");
    c->add_option("metrics", inputs, "Metrics CSV files")->required();
    c->add_option("--out", out, "Write the table here as well as to stdout");
    c->add_option("--csv", csv, "Write the combined CSV here");
  }

  void run(Runner& r) {
    std::vector<metrics::MetricsReport> rows;
    for (const auto& p : inputs) {
      require_file(p);
      std::ifstream f(p);
      std::stringstream ss;
      ss << f.rdbuf();
      for (auto& row : metrics::from_csv(ss.str())) rows.push_back(std::move(row));
    }
    const auto text = metrics::format_table(rows);
    r.out() << text;
    if (!out.empty()) std::ofstream(out) << text;
    if (!csv.empty()) std::ofstream(csv) << metrics::to_csv(rows);
    r.provenance("report", {{"inputs", inputs}});
  }
};

int exit_code(Errc code) {
  switch (code) {
    case Errc::usage: return 2;
    case Errc::io: return 3;
    default: return 1;
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stereo RGB-D feature encoding and off-road segmentation pipeline", "offroad"};
  app.require_subcommand(1);
  app.fallthrough();
  Runner runner(out, err);
  app.add_option("--rig", runner.globals.rig_path, "Camera rig key-value file");
  app.add_option("--jobs", runner.globals.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", runner.globals.seed, "Seed for every randomised stage");
  app.add_flag("--verbose", runner.globals.verbose, "Log parameters and progress to stderr");

  StereoCmd stereo_cmd;
  EncodeCmd encode_cmd;
  RenderCmd render_cmd;
  SplitCmd split_cmd;
  TrainCmd train_cmd;
  PredictCmd predict_cmd;
  EvalCmd eval_cmd;
  ReportCmd report_cmd;
  stereo_cmd.add(app);
  encode_cmd.add(app);
  render_cmd.add(app);
  split_cmd.add(app);
  train_cmd.add(app);
  predict_cmd.add(app);
  eval_cmd.add(app);
  report_cmd.add(app);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("offroad");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "stereo") stereo_cmd.run(runner);
    else if (name == "encode") encode_cmd.run(runner);
    else if (name == "render-synthetic") render_cmd.run(runner);
    else if (name == "split") split_cmd.run(runner);
    else if (name == "train") train_cmd.run(runner);
    else if (name == "predict") predict_cmd.run(runner);
    else if (name == "eval") eval_cmd.run(runner);
    else if (name == "report") report_cmd.run(runner);
  } catch (const Error& e) {
    err << "offroad: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "offroad: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace offroad::cli
