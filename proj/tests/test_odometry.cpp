#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "movo/odometry.hpp"
#include "movo/synth.hpp"

using movo::CameraIntrinsics;
using movo::Correspondence3D;
using movo::Frame;
using movo::KeyPoint;
using movo::OdometryParams;
using movo::Pose;

namespace {

std::vector<Correspondence3D> make_correspondences(const Pose& model, int n, unsigned seed,
                                                   int outliers = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Correspondence3D> corr;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d p(g(rng), g(rng), g(rng) + 3.0);
    corr.push_back({p, model.apply(p)});
  }
  for (int i = 0; i < outliers; ++i) {
    Eigen::Vector3d p(g(rng), g(rng), g(rng) + 3.0);
    corr.push_back({p, model.apply(p) + Eigen::Vector3d(1 + i, -2, 1)});
  }
  return corr;
}

}  // namespace

TEST_CASE("back_project inverts the pinhole model") {
  CameraIntrinsics K;
  K.fx = 500;
  K.fy = 400;
  K.cx = 160;
  K.cy = 120;
  movo::DepthImage depth(320, 240, 2.0);

  KeyPoint kp;
  kp.x = 260;
  kp.y = 40;
  auto p = movo::back_project(kp, depth, K);
  REQUIRE(p.has_value());
  CHECK(p->x() == Catch::Approx((260 - 160.0) * 2.0 / 500));
  CHECK(p->y() == Catch::Approx((40 - 120.0) * 2.0 / 400));
  CHECK(p->z() == 2.0);
  // Reproject.
  CHECK(K.fx * p->x() / p->z() + K.cx == Catch::Approx(260.0));
  CHECK(K.fy * p->y() / p->z() + K.cy == Catch::Approx(40.0));

  depth.at(260, 40) = 0.0;
  CHECK_FALSE(movo::back_project(kp, depth, K).has_value());
  kp.x = 1000;
  CHECK_FALSE(movo::back_project(kp, depth, K).has_value());
}

TEST_CASE("ransac_rigid recovers the model despite outliers") {
  Pose truth(Eigen::Quaterniond(Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY())),
             Eigen::Vector3d(0.1, -0.05, 0.3));
  auto corr = make_correspondences(truth, 30, 11, 10);
  auto [model, inliers] = movo::ransac_rigid(corr, 300, 0.05, 0);
  CHECK(inliers.size() == 30);
  for (int i : inliers) CHECK(i < 30);
  CHECK((model.translation - truth.translation).norm() < 1e-9);
  CHECK(movo::rotation_angle(movo::compose(movo::inverse(model), truth)) < 1e-9);
}

TEST_CASE("ransac_rigid is deterministic in the seed") {
  Pose truth(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.2, 0, 0));
  auto corr = make_correspondences(truth, 20, 3, 15);
  auto [m1, in1] = movo::ransac_rigid(corr, 200, 0.05, 42);
  auto [m2, in2] = movo::ransac_rigid(corr, 200, 0.05, 42);
  CHECK(in1 == in2);
  CHECK(m1.translation == m2.translation);
  CHECK(m1.rotation.coeffs() == m2.rotation.coeffs());
}

TEST_CASE("ransac_rigid failure modes") {
  Pose id;
  auto two = make_correspondences(id, 2, 5);
  CHECK_THROWS_AS(movo::ransac_rigid(two, 100, 0.05, 0), movo::TrackingError);

  // All source points collinear: every sample is degenerate.
  std::vector<Correspondence3D> line;
  for (int i = 0; i < 10; ++i)
    line.push_back({Eigen::Vector3d(i, 0, 0), Eigen::Vector3d(i, 0, 0)});
  CHECK_THROWS_AS(movo::ransac_rigid(line, 100, 0.05, 0), movo::TrackingError);
}

TEST_CASE("track_pair recovers a pure camera translation on synthetic frames") {
  movo::SynthConfig cfg;
  cfg.numFrames = 2;
  cfg.width = 320;
  cfg.height = 240;
  cfg.cameraPath = movo::CameraPathSpec::line(0.02);
  auto seq = movo::synth_sequence(cfg);

  OdometryParams params;
  params.intrinsics = seq.intrinsics;
  params.features.nfeatures = 600;

  Frame a{seq.frames[0].timestamp, seq.frames[0].gray, seq.frames[0].depth};
  Frame b{seq.frames[1].timestamp, seq.frames[1].gray, seq.frames[1].depth};
  Pose rel = movo::track_pair(a, b, nullptr, nullptr, params);
  CHECK((rel.translation - Eigen::Vector3d(0.02, 0, 0)).norm() < 0.005);
  CHECK(movo::rotation_angle(rel) < 0.5);
}

TEST_CASE("track_sequence composes poses and flags fallback frames") {
  movo::SynthConfig cfg;
  cfg.numFrames = 4;
  cfg.width = 320;
  cfg.height = 240;
  cfg.cameraPath = movo::CameraPathSpec::line(0.015);
  auto seq = movo::synth_sequence(cfg);

  OdometryParams params;
  params.intrinsics = seq.intrinsics;
  params.features.nfeatures = 600;

  std::vector<Frame> frames;
  for (const auto& f : seq.frames) frames.push_back({f.timestamp, f.gray, f.depth});
  auto result = movo::track_sequence(frames, nullptr, params);
  REQUIRE(result.trajectory.size() == 4);
  CHECK(result.fallbackFrames.empty());
  for (int k = 0; k < 4; ++k) {
    CHECK(result.trajectory.entries[k].timestamp == seq.frames[k].timestamp);
    CHECK((result.trajectory.entries[k].pose.translation -
           seq.gtTrajectory.entries[k].pose.translation)
              .norm() < 0.01);
  }

  // A featureless middle frame cannot be tracked; constant velocity bridges it.
  std::vector<Frame> broken = frames;
  broken[2].gray = movo::GrayImage(320, 240, 128);
  auto fallback = movo::track_sequence(broken, nullptr, params);
  REQUIRE(fallback.trajectory.size() == 4);
  CHECK(fallback.fallbackFrames == std::vector<int>{2, 3});

  CHECK_THROWS_AS(movo::track_sequence({}, nullptr, params), std::invalid_argument);
  std::vector<movo::BinaryMask> wrongMasks(2, movo::BinaryMask(320, 240));
  CHECK_THROWS_AS(movo::track_sequence(frames, &wrongMasks, params), std::invalid_argument);
}

TEST_CASE("masks remove moving-object correspondences from tracking") {
  movo::SynthConfig cfg;
  cfg.numFrames = 2;
  cfg.width = 320;
  cfg.height = 240;
  cfg.objectCount = 1;
  cfg.objectCoverage = 0.4;
  cfg.objectMotion = 0.2;  // large motion: unmasked tracking is badly disturbed
  auto seq = movo::synth_sequence(cfg);

  OdometryParams params;
  params.intrinsics = seq.intrinsics;
  params.features.nfeatures = 600;

  Frame a{seq.frames[0].timestamp, seq.frames[0].gray, seq.frames[0].depth};
  Frame b{seq.frames[1].timestamp, seq.frames[1].gray, seq.frames[1].depth};
  std::vector<movo::BinaryMask> masks = {seq.frames[0].mask, seq.frames[1].mask};

  Pose masked = movo::track_pair(a, b, &masks[0], &masks[1], params);
  // Static camera: the masked estimate stays put.
  CHECK(masked.translation.norm() < 0.005);
}
