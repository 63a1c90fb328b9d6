// movo: movable-object-aware visual odometry toolkit.
//
// Subcommands: refine (CRF mask refinement), track (RGB-D odometry),
// evaluate (ATE/RPE + improvement), synth (synthetic dataset generation).
// Exit codes: 0 success, 1 evaluation/tracking failure, 2 usage/IO error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "movo/movo.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int g_failCode = kExitUsage;  // exit code for the next thrown std::exception

std::string stem_of(const fs::path& p) { return p.stem().string(); }

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path find_by_stem(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".ppm", ".pgm"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  throw std::runtime_error("no image for stem '" + stem + "' in " + dir.string());
}

// Trajectory format by first data line: 8 fields TUM, 12 fields KITTI.
movo::Trajectory load_trajectory_auto(const std::string& path, const std::string& format) {
  if (format == "tum") return movo::load_trajectory_tum(path);
  if (format == "kitti") return movo::load_trajectory_kitti(path);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int fields = 0;
    std::string tok;
    while (ls >> tok) ++fields;
    if (fields == 12) return movo::load_trajectory_kitti(path);
    return movo::load_trajectory_tum(path);
  }
  throw std::runtime_error("empty trajectory file " + path);
}

void write_trajectory_svg(const movo::Trajectory& gt, const movo::Trajectory& est,
                          const std::string& path) {
  double minX = 1e30, maxX = -1e30, minY = 1e30, maxY = -1e30;
  auto extend = [&](const movo::Trajectory& t) {
    for (const auto& e : t.entries) {
      minX = std::min(minX, e.pose.translation.x());
      maxX = std::max(maxX, e.pose.translation.x());
      minY = std::min(minY, e.pose.translation.y());
      maxY = std::max(maxY, e.pose.translation.y());
    }
  };
  extend(gt);
  extend(est);
  const double span = std::max({maxX - minX, maxY - minY, 1e-6});
  const double margin = 0.05 * span;
  minX -= margin;
  minY -= margin;
  const double scale = 560.0 / (span + 2 * margin);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
  out << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
  auto polyline = [&](const movo::Trajectory& t, const char* color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& e : t.entries) {
      double px = 20 + (e.pose.translation.x() - minX) * scale;
      double py = 580 - (e.pose.translation.y() - minY) * scale;
      out << px << "," << py << " ";
    }
    out << "\"/>\n";
  };
  polyline(gt, "black");
  polyline(est, "red");
  out << "<text x=\"20\" y=\"20\" fill=\"black\">ground truth</text>\n";
  out << "<text x=\"20\" y=\"40\" fill=\"red\">estimate</text>\n";
  out << "</svg>\n";
}

movo::CameraIntrinsics load_calib_if_present(const fs::path& dir) {
  movo::CameraIntrinsics K;  // TUM-ish defaults
  fs::path calib = dir / "calib.txt";
  if (fs::exists(calib)) {
    std::ifstream in(calib);
    if (!(in >> K.fx >> K.fy >> K.cx >> K.cy >> K.depthFactor))
      throw std::runtime_error("bad calib.txt in " + dir.string());
  }
  return K;
}

// ---------------------------------------------------------------------------

struct RefineArgs {
  std::string probDir, rgbDir, depthDir, outDir, kernels = "c";
  std::vector<int> movableLabels = {1};
  movo::CrfParams params;
  int dilate = 0;
  double depthFactor = 5000.0;
};

void setup_refine(CLI::App& app) {
  auto args = std::make_shared<RefineArgs>();
  app.add_option("--probfields", args->probDir, "directory of .pfld soft label fields")->required();
  app.add_option("--rgb", args->rgbDir, "directory of color frames")->required();
  app.add_option("--depth", args->depthDir, "directory of depth frames (required with kernel d)");
  app.add_option("--out", args->outDir, "output mask directory")->required();
  app.add_option("--kernels", args->kernels, "pairwise kernel configuration: c, d or c,d");
  app.add_option("--iterations", args->params.iterations, "mean-field iterations");
  app.add_option("--w-smooth", args->params.wSmooth, "smoothness kernel weight");
  app.add_option("--w-color", args->params.wColor, "color bilateral weight");
  app.add_option("--w-depth", args->params.wDepth, "depth bilateral weight");
  app.add_option("--theta-gamma", args->params.thetaGamma, "smoothness spatial stddev (px)");
  app.add_option("--theta-alpha", args->params.thetaAlpha, "bilateral spatial stddev (px)");
  app.add_option("--theta-beta", args->params.thetaBeta, "color stddev (intensity)");
  app.add_option("--theta-delta", args->params.thetaDelta, "depth stddev (m)");
  app.add_option("--movable-labels", args->movableLabels, "label indices treated as movable");
  app.add_option("--dilate", args->dilate, "mask dilation radius (px)");
  app.add_option("--depth-factor", args->depthFactor, "raw units per meter for depth images");

  app.callback([args]() {
    movo::CrfParams params = args->params;
    movo::apply_kernel_config(args->kernels, params);
    if (params.useDepthKernel && args->depthDir.empty())
      throw std::runtime_error("kernel 'd' requires --depth");
    fs::create_directories(args->outDir);

    movo::MovableClassSet classes;
    classes.labelIndices = args->movableLabels;

    auto fields = list_files(args->probDir, ".pfld");
    if (fields.empty()) throw std::runtime_error("no .pfld files in " + args->probDir);
    for (const fs::path& pf : fields) {
      const std::string stem = stem_of(pf);
      movo::ProbField prob = movo::load_probfield(pf.string());
      movo::ColorImage rgb = movo::load_color(find_by_stem(args->rgbDir, stem).string());
      if (prob.width != rgb.width || prob.height != rgb.height)
        prob = movo::resample_probfield(prob, rgb.width, rgb.height);

      movo::DepthImage depth;
      const movo::DepthImage* depthPtr = nullptr;
      if (params.useDepthKernel) {
        depth = movo::load_depth(find_by_stem(args->depthDir, stem).string(), args->depthFactor);
        depthPtr = &depth;
      }
      movo::ProbField refined = movo::mean_field_infer(prob, &rgb, depthPtr, params);
      movo::BinaryMask mask = movo::binarize_movable(refined, classes);
      if (args->dilate > 0) mask = movo::dilate_mask(mask, args->dilate);
      movo::save_mask(mask, (fs::path(args->outDir) / (stem + ".png")).string());
    }
  });
}

struct TrackArgs {
  std::string datasetDir, masksDir, outFile;
  movo::OdometryParams params;
  double maxDiff = 0.02;
  CLI::Option *fx = nullptr, *fy = nullptr, *cx = nullptr, *cy = nullptr, *df = nullptr;
};

void setup_track(CLI::App& app) {
  auto args = std::make_shared<TrackArgs>();
  app.add_option("--dataset", args->datasetDir, "TUM-layout dataset directory")->required();
  app.add_option("--masks", args->masksDir, "directory of movable-object masks");
  app.add_option("--out", args->outFile, "output trajectory file (TUM format)")->required();
  app.add_option("--maxdiff", args->maxDiff, "rgb/depth association window (s)");
  app.add_option("--nfeatures", args->params.features.nfeatures, "keypoint budget per frame");
  app.add_option("--scale-factor", args->params.features.scaleFactor, "pyramid scale factor");
  app.add_option("--nlevels", args->params.features.nlevels, "pyramid levels");
  app.add_option("--ini-th-fast", args->params.features.iniThFAST, "initial FAST threshold");
  app.add_option("--min-th-fast", args->params.features.minThFAST, "fallback FAST threshold");
  app.add_option("--mask-dilation", args->params.features.maskDilation, "mask dilation (px)");
  app.add_option("--ransac-iterations", args->params.ransacIterations, "RANSAC rounds");
  app.add_option("--inlier-thresh", args->params.inlierThresh, "RANSAC inlier threshold (m)");
  app.add_option("--seed", args->params.seed, "RANSAC seed");
  args->fx = app.add_option("--fx", args->params.intrinsics.fx, "focal length x (px)");
  args->fy = app.add_option("--fy", args->params.intrinsics.fy, "focal length y (px)");
  args->cx = app.add_option("--cx", args->params.intrinsics.cx, "principal point x (px)");
  args->cy = app.add_option("--cy", args->params.intrinsics.cy, "principal point y (px)");
  args->df = app.add_option("--depth-factor", args->params.intrinsics.depthFactor,
                            "raw units per meter for depth images");

  app.callback([args]() {
    fs::path dir(args->datasetDir);
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + args->datasetDir);
    movo::CameraIntrinsics calib = load_calib_if_present(dir);
    movo::OdometryParams params = args->params;
    if (!args->fx->count()) params.intrinsics.fx = calib.fx;
    if (!args->fy->count()) params.intrinsics.fy = calib.fy;
    if (!args->cx->count()) params.intrinsics.cx = calib.cx;
    if (!args->cy->count()) params.intrinsics.cy = calib.cy;
    if (!args->df->count()) params.intrinsics.depthFactor = calib.depthFactor;

    auto rgbList = movo::parse_tum_list_file((dir / "rgb.txt").string());
    auto depthList = movo::parse_tum_list_file((dir / "depth.txt").string());
    auto assoc = movo::associate(rgbList, depthList, args->maxDiff);
    if (assoc.empty()) {
      g_failCode = kExitFailure;
      throw std::runtime_error("empty rgb/depth association");
    }

    std::vector<movo::Frame> frames;
    std::vector<movo::BinaryMask> masks;
    for (const auto& pair : assoc) {
      movo::Frame f;
      f.timestamp = pair.tRgb;
      f.gray = movo::load_gray((dir / pair.rgbPath).string());
      f.depth = movo::load_depth((dir / pair.depthPath).string(), params.intrinsics.depthFactor);
      if (!args->masksDir.empty()) {
        std::string stem = stem_of(fs::path(pair.rgbPath));
        masks.push_back(movo::load_mask(find_by_stem(args->masksDir, stem).string()));
      }
      frames.push_back(std::move(f));
    }

    movo::TrackResult result =
        movo::track_sequence(frames, args->masksDir.empty() ? nullptr : &masks, params);
    for (int idx : result.fallbackFrames)
      std::cerr << "track: frame " << idx << " fell back to constant velocity\n";
    movo::save_trajectory_tum(result.trajectory, args->outFile);
  });
}

struct EvaluateArgs {
  std::string gtFile, estFile, outCsv, outSvg, baselineCsv;
  std::string gtFormat = "auto", estFormat = "auto";
  double maxDiff = 0.02;
  int deltaFrames = 1;
  double deltaSeconds = 0;
};

void setup_evaluate(CLI::App& app) {
  auto args = std::make_shared<EvaluateArgs>();
  app.add_option("--gt", args->gtFile, "ground-truth trajectory")->required();
  app.add_option("--est", args->estFile, "estimated trajectory")->required();
  app.add_option("--gt-format", args->gtFormat, "tum | kitti | auto");
  app.add_option("--est-format", args->estFormat, "tum | kitti | auto");
  app.add_option("--maxdiff", args->maxDiff, "association window (s)");
  app.add_option("--delta", args->deltaFrames, "RPE interval in frames");
  app.add_option("--delta-seconds", args->deltaSeconds,
                 "RPE interval in seconds (overrides --delta)");
  app.add_option("--out", args->outCsv, "output CSV")->required();
  app.add_option("--svg", args->outSvg, "top-down trajectory overlay (SVG)");
  app.add_option("--improve-against", args->baselineCsv, "baseline CSV for the improvement column");

  app.callback([args]() {
    movo::Trajectory gt = load_trajectory_auto(args->gtFile, args->gtFormat);
    movo::Trajectory est = load_trajectory_auto(args->estFile, args->estFormat);
    std::vector<std::pair<std::string, double>> baseline;
    if (!args->baselineCsv.empty()) baseline = movo::read_stats_csv_rmse(args->baselineCsv);

    try {
      auto pairs = movo::associate_poses(gt, est, args->maxDiff);
      if (pairs.empty()) throw std::invalid_argument("empty gt/est association");
      movo::ErrorStats ateStats = movo::ate(pairs);
      movo::RpeDelta delta = args->deltaSeconds > 0
                                 ? movo::RpeDelta::seconds(args->deltaSeconds)
                                 : movo::RpeDelta::frames(args->deltaFrames);
      auto [rpeTrans, rpeRot] = movo::rpe(pairs, delta);

      std::vector<movo::StatsRow> rows = {{"ate", ateStats, std::nullopt},
                                          {"rpe_trans", rpeTrans, std::nullopt},
                                          {"rpe_rot", rpeRot, std::nullopt}};
      for (auto& row : rows)
        for (const auto& [metric, rmse] : baseline)
          if (metric == row.metric) row.improvement = movo::improvement(rmse, row.stats.rmse);
      movo::write_stats_csv(rows, args->outCsv);

      if (!args->outSvg.empty()) write_trajectory_svg(gt, est, args->outSvg);
    } catch (const std::invalid_argument& e) {
      g_failCode = kExitFailure;
      throw std::runtime_error(e.what());
    }
  });
}

struct SynthArgs {
  movo::SynthConfig cfg;
  std::string outDir, camera = "static";
  double step = 0.01, radius = 0.3, degPerFrame = 2.0;
};

void setup_synth(CLI::App& app) {
  auto args = std::make_shared<SynthArgs>();
  app.add_option("--out", args->outDir, "output dataset directory (TUM layout)")->required();
  app.add_option("--seed", args->cfg.seed, "generator seed");
  app.add_option("--frames", args->cfg.numFrames, "number of frames");
  app.add_option("--width", args->cfg.width, "frame width (px)");
  app.add_option("--height", args->cfg.height, "frame height (px)");
  app.add_option("--camera", args->camera, "camera path: static | line | arc");
  app.add_option("--step", args->step, "line path: meters per frame");
  app.add_option("--radius", args->radius, "arc path: radius (m)");
  app.add_option("--deg-per-frame", args->degPerFrame, "arc path: degrees per frame");
  app.add_option("--objects", args->cfg.objectCount, "movable object count");
  app.add_option("--coverage", args->cfg.objectCoverage, "view fraction per object");
  app.add_option("--motion", args->cfg.objectMotion, "object motion (m per frame)");
  app.add_option("--grain", args->cfg.textureGrain, "texture grain (px)");

  app.callback([args]() {
    movo::SynthConfig cfg = args->cfg;
    if (args->camera == "static")
      cfg.cameraPath = movo::CameraPathSpec::staticCamera();
    else if (args->camera == "line")
      cfg.cameraPath = movo::CameraPathSpec::line(args->step);
    else if (args->camera == "arc")
      cfg.cameraPath = movo::CameraPathSpec::arc(args->radius, args->degPerFrame);
    else
      throw std::runtime_error("unknown camera path '" + args->camera + "'");

    movo::SynthSequence seq = movo::synth_sequence(cfg);
    const movo::CameraIntrinsics& K = seq.intrinsics;

    fs::path dir(args->outDir);
    fs::create_directories(dir / "rgb");
    fs::create_directories(dir / "depth");
    fs::create_directories(dir / "masks");
    fs::create_directories(dir / "probfields");

    std::ofstream rgbList(dir / "rgb.txt"), depthList(dir / "depth.txt");
    char name[64];
    for (const auto& frame : seq.frames) {
      std::snprintf(name, sizeof(name), "%.6f", frame.timestamp);
      std::string stem(name);
      movo::save_color(frame.rgb, (dir / "rgb" / (stem + ".png")).string());
      movo::save_depth(frame.depth, K.depthFactor,
                       (dir / "depth" / (stem + ".png")).string());
      movo::save_mask(frame.mask, (dir / "masks" / (stem + ".png")).string());
      movo::save_probfield(frame.prob, (dir / "probfields" / (stem + ".pfld")).string());
      char line[128];
      std::snprintf(line, sizeof(line), "%.6f rgb/%s.png\n", frame.timestamp, name);
      rgbList << line;
      std::snprintf(line, sizeof(line), "%.6f depth/%s.png\n", frame.timestamp, name);
      depthList << line;
    }
    movo::save_trajectory_tum(seq.gtTrajectory, (dir / "groundtruth.txt").string());
    std::ofstream calib(dir / "calib.txt");
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f %.1f\n", K.fx, K.fy, K.cx, K.cy,
                  K.depthFactor);
    calib << buf;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"movable-object-aware visual odometry toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key = value configuration file with [subcommand] sections; flags win");

  setup_refine(*app.add_subcommand("refine", "refine soft labels into movable masks"));
  setup_track(*app.add_subcommand("track", "run RGB-D frame-to-frame odometry"));
  setup_evaluate(*app.add_subcommand("evaluate", "trajectory error statistics"));
  setup_synth(*app.add_subcommand("synth", "generate a synthetic dataset"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const movo::TrackingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return g_failCode;
  }
  return 0;
}
