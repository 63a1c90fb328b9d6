#ifndef MOVO_ODOMETRY_HPP
#define MOVO_ODOMETRY_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "movo/features.hpp"
#include "movo/geometry.hpp"
#include "movo/image.hpp"

namespace movo {

struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  double depthFactor = 5000.0;

  void validate() const {
    if (fx <= 0 || fy <= 0) throw std::invalid_argument("CameraIntrinsics: fx, fy must be > 0");
  }
};

struct Correspondence3D {
  Eigen::Vector3d pointA;
  Eigen::Vector3d pointB;
};

/// Per-pair tracking failure (too few correspondences or no consensus).
struct TrackingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OdometryParams {
  FeatureParams features;
  CameraIntrinsics intrinsics;
  int ransacIterations = 300;
  double inlierThresh = 0.05;  // meters
  std::uint64_t seed = 0;
  int matchMaxDistance = 64;
};

struct Frame {
  double timestamp = 0;
  GrayImage gray;
  DepthImage depth;
};

/// Pinhole back-projection at the keypoint's rounded position; absent when the
/// depth is missing there.
inline std::optional<Eigen::Vector3d> back_project(const KeyPoint& kp, const DepthImage& depth,
                                                   const CameraIntrinsics& K) {
  const int x = static_cast<int>(std::lround(kp.x));
  const int y = static_cast<int>(std::lround(kp.y));
  if (x < 0 || x >= depth.width || y < 0 || y >= depth.height) return std::nullopt;
  const double d = depth.at(x, y);
  if (d <= 0) return std::nullopt;
  return Eigen::Vector3d((kp.x - K.cx) * d / K.fx, (kp.y - K.cy) * d / K.fy, d);
}

/// Seeded deterministic RANSAC for a rigid model mapping pointA onto pointB.
/// Returns the refit model and its inlier indices.
inline std::pair<Pose, std::vector<int>> ransac_rigid(const std::vector<Correspondence3D>& corr,
                                                      int iterations, double inlierThresh,
                                                      std::uint64_t seed) {
  const int n = static_cast<int>(corr.size());
  if (n < 3) throw TrackingError("ransac_rigid: fewer than 3 correspondences");

  std::mt19937_64 rng(seed);
  auto drawIndex = [&](int bound) { return static_cast<int>(rng() % static_cast<std::uint64_t>(bound)); };

  auto inliersOf = [&](const Pose& model) {
    std::vector<int> inliers;
    for (int i = 0; i < n; ++i) {
      double res = (corr[i].pointB - model.apply(corr[i].pointA)).norm();
      if (res < inlierThresh) inliers.push_back(i);
    }
    return inliers;
  };
  auto refit = [&](const std::vector<int>& inliers) {
    std::vector<Eigen::Vector3d> src, dst;
    src.reserve(inliers.size());
    dst.reserve(inliers.size());
    for (int i : inliers) {
      src.push_back(corr[i].pointA);
      dst.push_back(corr[i].pointB);
    }
    return rigid_align(src, dst);
  };
  auto rmseOf = [&](const Pose& model, const std::vector<int>& inliers) {
    double sum = 0;
    for (int i : inliers) sum += (corr[i].pointB - model.apply(corr[i].pointA)).squaredNorm();
    return std::sqrt(sum / static_cast<double>(inliers.size()));
  };

  bool haveBest = false;
  Pose bestModel;
  std::vector<int> bestInliers;
  double bestRmse = 0;

  for (int it = 0; it < iterations; ++it) {
    int i0 = drawIndex(n), i1, i2;
    do i1 = drawIndex(n);
    while (i1 == i0);
    do i2 = drawIndex(n);
    while (i2 == i0 || i2 == i1);

    Pose model;
    try {
      model = rigid_align({corr[i0].pointA, corr[i1].pointA, corr[i2].pointA},
                          {corr[i0].pointB, corr[i1].pointB, corr[i2].pointB});
    } catch (const std::invalid_argument&) {
      continue;  // degenerate minimal sample
    }
    std::vector<int> inliers = inliersOf(model);
    if (inliers.size() < 3) continue;
    if (haveBest && inliers.size() < bestInliers.size()) continue;

    Pose refitted;
    try {
      refitted = refit(inliers);
    } catch (const std::invalid_argument&) {
      continue;
    }
    std::vector<int> refitInliers = inliersOf(refitted);
    if (refitInliers.size() < 3) continue;
    double rmse = rmseOf(refitted, refitInliers);
    if (!haveBest || refitInliers.size() > bestInliers.size() ||
        (refitInliers.size() == bestInliers.size() && rmse < bestRmse)) {
      haveBest = true;
      bestModel = refitted;
      bestInliers = std::move(refitInliers);
      bestRmse = rmse;
    }
  }

  if (!haveBest || bestInliers.size() < 3)
    throw TrackingError("ransac_rigid: no model with at least 3 inliers");
  return {bestModel, bestInliers};
}

/// Frame-to-frame RGB-D tracking: extract (mask-gated), match, back-project,
/// robust 3D-3D alignment. Returns the pose of B relative to A.
inline Pose track_pair(const Frame& frameA, const Frame& frameB, const BinaryMask* maskA,
                       const BinaryMask* maskB, const OdometryParams& params) {
  params.intrinsics.validate();
  ImagePyramid pyrA = build_pyramid(frameA.gray, params.features.nlevels, params.features.scaleFactor);
  ImagePyramid pyrB = build_pyramid(frameB.gray, params.features.nlevels, params.features.scaleFactor);
  auto [kpsA, descA] = extract(pyrA, maskA, params.features);
  auto [kpsB, descB] = extract(pyrB, maskB, params.features);
  std::vector<Match> matches = match(descA, descB, params.matchMaxDistance);

  std::vector<Correspondence3D> corr;
  corr.reserve(matches.size());
  for (const Match& m : matches) {
    auto pa = back_project(kpsA[m.indexA], frameA.depth, params.intrinsics);
    auto pb = back_project(kpsB[m.indexB], frameB.depth, params.intrinsics);
    if (!pa || !pb) continue;
    corr.push_back({*pa, *pb});
  }
  // The fitted model maps A-frame points onto B-frame points, i.e. it is the
  // pose of A as seen from B; the relative pose of B is its inverse.
  auto [model, inliers] = ransac_rigid(corr, params.ransacIterations, params.inlierThresh,
                                       params.seed);
  (void)inliers;
  return inverse(model);
}

struct TrackResult {
  Trajectory trajectory;
  std::vector<int> fallbackFrames;  // frame indices estimated by constant velocity
};

/// Left-composes per-pair relative poses from identity. Tracking failures fall
/// back to the previous relative pose and flag the frame.
inline TrackResult track_sequence(const std::vector<Frame>& frames,
                                  const std::vector<BinaryMask>* masks,
                                  const OdometryParams& params) {
  if (frames.empty()) throw std::invalid_argument("track_sequence: need at least one frame");
  if (masks && masks->size() != frames.size())
    throw std::invalid_argument("track_sequence: mask count does not match frame count");

  TrackResult result;
  Pose current;  // identity start
  result.trajectory.entries.push_back({frames[0].timestamp, current});
  Pose lastRel;  // identity: first fallback is "no motion"
  for (std::size_t i = 1; i < frames.size(); ++i) {
    Pose rel;
    try {
      const BinaryMask* mA = masks ? &(*masks)[i - 1] : nullptr;
      const BinaryMask* mB = masks ? &(*masks)[i] : nullptr;
      rel = track_pair(frames[i - 1], frames[i], mA, mB, params);
      lastRel = rel;
    } catch (const TrackingError&) {
      rel = lastRel;
      result.fallbackFrames.push_back(static_cast<int>(i));
    }
    current = compose(current, rel);
    result.trajectory.entries.push_back({frames[i].timestamp, current});
  }
  return result;
}

}  // namespace movo

#endif  // MOVO_ODOMETRY_HPP
