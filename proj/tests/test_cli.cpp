#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "movo/movo.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = MOVO_CLI_PATH;

int run(const std::string& args) {
  std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("movo_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mask_iou(const movo::BinaryMask& a, const movo::BinaryMask& b) {
  REQUIRE(a.width == b.width);
  double inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] && b.data[i];
    uni += a.data[i] || b.data[i];
  }
  return uni == 0 ? 1.0 : inter / uni;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("") == 2);
  CHECK(run("nonsense") == 2);
  CHECK(run("evaluate --gt /nonexistent --est /nonexistent --out /tmp/x.csv") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("synth writes a deterministic TUM-layout dataset") {
  fs::path a = fresh_dir("synth_a");
  fs::path b = fresh_dir("synth_b");
  std::string common = "synth --frames 3 --width 64 --height 64 --objects 1 "
                       "--coverage 0.1 --motion 0.02 --seed 9 --out ";
  REQUIRE(run(common + a.string()) == 0);
  REQUIRE(run(common + b.string()) == 0);

  for (const char* f : {"rgb.txt", "depth.txt", "groundtruth.txt", "calib.txt"})
    CHECK(slurp(a / f) == slurp(b / f));
  auto rgbList = movo::parse_tum_list_file((a / "rgb.txt").string());
  REQUIRE(rgbList.size() == 3);
  for (const auto& e : rgbList) {
    CHECK(slurp(a / e.path) == slurp(b / e.path));
    CHECK(fs::exists(a / ("depth/" + fs::path(e.path).stem().string() + ".png")));
    CHECK(fs::exists(a / ("masks/" + fs::path(e.path).stem().string() + ".png")));
    CHECK(fs::exists(a / ("probfields/" + fs::path(e.path).stem().string() + ".pfld")));
  }
  auto gt = movo::load_trajectory_tum((a / "groundtruth.txt").string());
  CHECK(gt.size() == 3);

  // Impossible coverage is a usage error.
  CHECK(run("synth --frames 1 --objects 4 --coverage 0.3 --out " +
            fresh_dir("synth_bad").string()) == 2);
  CHECK(run("synth --frames 1 --camera spiral --out " + fresh_dir("synth_bad2").string()) == 2);
}

TEST_CASE("refine beats plain argmax on noisy probability fields") {
  fs::path data = fresh_dir("refine_data");
  REQUIRE(run("synth --frames 2 --width 96 --height 96 --objects 1 --coverage 0.15 "
              "--seed 4 --out " + data.string()) == 0);

  // Corrupt the clean probfields with label-swap noise.
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& e : fs::directory_iterator(data / "probfields")) {
    movo::ProbField f = movo::load_probfield(e.path().string());
    for (std::size_t i = 0; i < f.numPixels(); ++i)
      if (u(rng) < 0.2) std::swap(f.data[i * 2], f.data[i * 2 + 1]);
    movo::save_probfield(f, e.path().string());
  }

  fs::path refined = fresh_dir("refine_out");
  REQUIRE(run("refine --probfields " + (data / "probfields").string() + " --rgb " +
              (data / "rgb").string() + " --out " + refined.string() + " --kernels c") == 0);

  fs::path argmax = fresh_dir("argmax_out");
  REQUIRE(run("refine --probfields " + (data / "probfields").string() + " --rgb " +
              (data / "rgb").string() + " --out " + argmax.string() +
              " --kernels c --iterations 0") == 0);

  auto rgbList = movo::parse_tum_list_file((data / "rgb.txt").string());
  for (const auto& e : rgbList) {
    std::string stem = fs::path(e.path).stem().string();
    movo::BinaryMask truth = movo::load_mask((data / "masks" / (stem + ".png")).string());
    movo::BinaryMask ref = movo::load_mask((refined / (stem + ".png")).string());
    movo::BinaryMask arg = movo::load_mask((argmax / (stem + ".png")).string());
    double iouRef = mask_iou(ref, truth);
    double iouArg = mask_iou(arg, truth);
    INFO("stem " << stem << " refined " << iouRef << " argmax " << iouArg);
    CHECK(iouRef > iouArg);
    CHECK(iouRef > 0.8);
  }

  // The depth kernel demands a depth directory.
  CHECK(run("refine --probfields " + (data / "probfields").string() + " --rgb " +
            (data / "rgb").string() + " --out " + refined.string() + " --kernels c,d") == 2);
  // Depth supplied: runs.
  CHECK(run("refine --probfields " + (data / "probfields").string() + " --rgb " +
            (data / "rgb").string() + " --depth " + (data / "depth").string() +
            " --out " + refined.string() + " --kernels c,d") == 0);
}

TEST_CASE("refine with zero iterations reproduces exact argmax with dilation") {
  fs::path data = fresh_dir("refine_exact");
  REQUIRE(run("synth --frames 1 --width 64 --height 64 --objects 1 --coverage 0.2 "
              "--out " + data.string()) == 0);
  fs::path out = fresh_dir("refine_exact_out");
  REQUIRE(run("refine --probfields " + (data / "probfields").string() + " --rgb " +
              (data / "rgb").string() + " --out " + out.string() +
              " --kernels c --iterations 0 --dilate 2") == 0);
  auto rgbList = movo::parse_tum_list_file((data / "rgb.txt").string());
  std::string stem = fs::path(rgbList[0].path).stem().string();
  movo::BinaryMask produced = movo::load_mask((out / (stem + ".png")).string());
  movo::BinaryMask truth = movo::load_mask((data / "masks" / (stem + ".png")).string());
  movo::BinaryMask expected = movo::dilate_mask(truth, 2);
  CHECK(produced.data == expected.data);
}

TEST_CASE("track then evaluate on a static synthetic dataset") {
  fs::path data = fresh_dir("track_data");
  REQUIRE(run("synth --frames 4 --width 320 --height 240 --seed 2 --out " + data.string()) == 0);

  fs::path est = data / "est.txt";
  REQUIRE(run("track --dataset " + data.string() + " --out " + est.string() +
              " --nfeatures 500") == 0);
  auto traj = movo::load_trajectory_tum(est.string());
  REQUIRE(traj.size() == 4);
  // Static camera: every pose stays at the origin.
  for (const auto& e : traj.entries) CHECK(e.pose.translation.norm() < 1e-3);

  // gt vs gt: zero errors across the CSV, plus an SVG overlay.
  fs::path csv = data / "self.csv";
  fs::path svg = data / "self.svg";
  REQUIRE(run("evaluate --gt " + (data / "groundtruth.txt").string() + " --est " +
              (data / "groundtruth.txt").string() + " --out " + csv.string() + " --svg " +
              svg.string()) == 1);  // static gt is a degenerate (coincident) point set

  CHECK(run("track --dataset /nonexistent --out /tmp/x.txt") == 2);
}

TEST_CASE("evaluate writes stats, improvement column and SVG") {
  fs::path dir = fresh_dir("eval");
  // A square ground-truth path (well conditioned for alignment).
  movo::Trajectory gt;
  std::vector<Eigen::Vector3d> pos = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0.2}, {0, 0.5, 0.4}};
  for (std::size_t i = 0; i < pos.size(); ++i)
    gt.entries.push_back({static_cast<double>(i) * 0.1, movo::Pose(Eigen::Quaterniond::Identity(), pos[i])});
  movo::save_trajectory_tum(gt, (dir / "gt.txt").string());

  movo::Trajectory noisy = gt;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.05);
  for (auto& e : noisy.entries) {
    e.pose.translation += Eigen::Vector3d(n(rng), n(rng), n(rng));
    // A little rotation noise too, so every baseline metric is nonzero.
    e.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(n(rng), Eigen::Vector3d::UnitZ())) *
                      e.pose.rotation;
    e.pose.canonicalize();
  }
  movo::save_trajectory_tum(noisy, (dir / "noisy.txt").string());

  REQUIRE(run("evaluate --gt " + (dir / "gt.txt").string() + " --est " +
              (dir / "noisy.txt").string() + " --out " + (dir / "base.csv").string()) == 0);
  auto base = movo::read_stats_csv_rmse((dir / "base.csv").string());
  REQUIRE(base.size() == 3);
  CHECK(base[0].first == "ate");
  CHECK(base[0].second > 0.0);
  CHECK(base[1].first == "rpe_trans");
  CHECK(base[2].first == "rpe_rot");

  REQUIRE(run("evaluate --gt " + (dir / "gt.txt").string() + " --est " +
              (dir / "gt.txt").string() + " --out " + (dir / "self.csv").string() +
              " --svg " + (dir / "self.svg").string() + " --improve-against " +
              (dir / "base.csv").string()) == 0);
  std::string csv = slurp(dir / "self.csv");
  CHECK(csv.find("ate,0.000000,0.000000,0.000000,0.000000,100.00") != std::string::npos);
  std::string svg = slurp(dir / "self.svg");
  std::size_t first = svg.find("<polyline");
  REQUIRE(first != std::string::npos);
  CHECK(svg.find("<polyline", first + 1) != std::string::npos);
  CHECK(svg.find("stroke=\"black\"") != std::string::npos);
  CHECK(svg.find("stroke=\"red\"") != std::string::npos);

  // KITTI input through the same entry point.
  movo::save_trajectory_kitti(gt, (dir / "gt_kitti.txt").string());
  movo::save_trajectory_kitti(noisy, (dir / "noisy_kitti.txt").string());
  REQUIRE(run("evaluate --gt " + (dir / "gt_kitti.txt").string() + " --est " +
              (dir / "noisy_kitti.txt").string() + " --maxdiff 0.5 --out " +
              (dir / "kitti.csv").string()) == 0);
  auto kittiStats = movo::read_stats_csv_rmse((dir / "kitti.csv").string());
  CHECK(kittiStats[0].second == Catch::Approx(base[0].second).margin(1e-6));
}

TEST_CASE("track exits 1 when nothing associates") {
  fs::path dir = fresh_dir("track_empty");
  std::ofstream(dir / "rgb.txt") << "0.0 rgb/a.png\n";
  std::ofstream(dir / "depth.txt") << "100.0 depth/a.png\n";
  CHECK(run("track --dataset " + dir.string() + " --out " + (dir / "est.txt").string()) == 1);
}

TEST_CASE("subcommands accept a config file") {
  fs::path dir = fresh_dir("config");
  std::ofstream(dir / "synth.cfg") << "[synth]\nframes=2\nwidth=64\nheight=64\nseed=7\n";
  REQUIRE(run("--config " + (dir / "synth.cfg").string() + " synth --out " +
              (dir / "out").string()) == 0);
  auto list = movo::parse_tum_list_file((dir / "out" / "rgb.txt").string());
  CHECK(list.size() == 2);
  CHECK(run("--config " + (dir / "missing.cfg").string() + " synth --out " +
            (dir / "out2").string()) == 2);
}
