#ifndef MOVO_SYNTH_HPP
#define MOVO_SYNTH_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "movo/crf.hpp"
#include "movo/geometry.hpp"
#include "movo/image.hpp"
#include "movo/odometry.hpp"

namespace movo {

struct CameraPathSpec {
  enum class Kind { Static, Line, Arc };
  Kind kind = Kind::Static;
  double stepMeters = 0.01;    // line: translation along +x per frame
  double radiusMeters = 0.3;   // arc: circle radius
  double degPerFrame = 2.0;    // arc: angular step

  static CameraPathSpec staticCamera() { return {Kind::Static, 0, 0, 0}; }
  static CameraPathSpec line(double step) { return {Kind::Line, step, 0, 0}; }
  static CameraPathSpec arc(double radius, double degPerFrame) {
    return {Kind::Arc, 0, radius, degPerFrame};
  }
};

/// Synthetic pinhole scene: a static textured background plane at 3 m and
/// movable textured rectangles at 1.5 m orbiting by objectMotion meters per
/// frame; the camera translates along its path with identity rotation.
struct SynthConfig {
  std::uint64_t seed = 1;
  int numFrames = 1;
  int width = 320;
  int height = 240;
  CameraPathSpec cameraPath;
  int objectCount = 0;
  double objectCoverage = 0.2;  // fraction of the view per object
  double objectMotion = 0.0;    // meters per frame
  int textureGrain = 8;         // px
  // Negative cx/cy: principal point auto-centers on the frame.
  CameraIntrinsics intrinsics{260.0, 260.0, -1.0, -1.0, 5000.0};

  void validate() const {
    if (numFrames < 1) throw std::invalid_argument("SynthConfig: numFrames must be >= 1");
    if (width < 64 || height < 64) throw std::invalid_argument("SynthConfig: frame too small");
    if (objectCoverage < 0 || objectCoverage >= 1)
      throw std::invalid_argument("SynthConfig: coverage must be in [0,1)");
    if (objectCount < 0) throw std::invalid_argument("SynthConfig: negative objectCount");
    if (objectCount > 0 && objectCount * objectCoverage >= 0.85)
      throw std::invalid_argument("SynthConfig: coverage too high to place objects");
    if (textureGrain < 1) throw std::invalid_argument("SynthConfig: textureGrain must be >= 1");
    intrinsics.validate();
  }
};

struct SynthFrame {
  double timestamp = 0;
  ColorImage rgb;
  GrayImage gray;
  DepthImage depth;
  BinaryMask mask;
  ProbField prob;
};

struct SynthSequence {
  std::vector<SynthFrame> frames;
  Trajectory gtTrajectory;
  CameraIntrinsics intrinsics;  // effective values, principal point resolved
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t texture_hash(std::uint64_t seed, std::uint64_t layer, std::int64_t cx,
                                  std::int64_t cy) {
  std::uint64_t h = splitmix64(seed ^ (layer * 0x9E3779B97F4A7C15ull));
  h = splitmix64(h ^ static_cast<std::uint64_t>(cx * 2654435761ll));
  h = splitmix64(h ^ static_cast<std::uint64_t>(cy * 40503ll));
  return h;
}

}  // namespace detail

inline SynthSequence synth_sequence(const SynthConfig& cfg) {
  cfg.validate();
  constexpr double kBackgroundZ = 3.0;
  constexpr double kObjectZ = 1.5;
  CameraIntrinsics K = cfg.intrinsics;
  if (K.cx < 0) K.cx = 0.5 * (cfg.width - 1);
  if (K.cy < 0) K.cy = 0.5 * (cfg.height - 1);

  // Object rectangle world half-extent from the per-object view coverage.
  const double a = std::sqrt(cfg.objectCoverage);
  const double halfW = 0.5 * a * cfg.width * kObjectZ / K.fx;
  const double halfH = 0.5 * a * cfg.height * kObjectZ / K.fy;

  // Grain sizes in world units on each plane; objects carry a finer texture.
  const double bgGrain = cfg.textureGrain * kBackgroundZ / K.fx;
  const double objGrain = std::max(2, cfg.textureGrain / 2) * kObjectZ / K.fx;

  // Object base positions, spread horizontally across the initial view.
  std::vector<Eigen::Vector2d> baseCenters;
  for (int o = 0; o < cfg.objectCount; ++o) {
    double x = (o - 0.5 * (cfg.objectCount - 1)) * (2.4 * halfW);
    baseCenters.emplace_back(x, 0.0);
  }

  // Orbit radius so per-frame displacement magnitude matches objectMotion.
  const double orbitStep =
      cfg.numFrames > 1 ? 2.0 * M_PI / static_cast<double>(cfg.numFrames) : 0.0;
  const double orbitRadius =
      (cfg.objectMotion > 0 && orbitStep > 0) ? cfg.objectMotion / orbitStep : 0.0;

  SynthSequence seq;
  seq.intrinsics = K;
  for (int k = 0; k < cfg.numFrames; ++k) {
    Eigen::Vector3d cam(0, 0, 0);
    switch (cfg.cameraPath.kind) {
      case CameraPathSpec::Kind::Static:
        break;
      case CameraPathSpec::Kind::Line:
        cam.x() = cfg.cameraPath.stepMeters * k;
        break;
      case CameraPathSpec::Kind::Arc: {
        double th = cfg.cameraPath.degPerFrame * M_PI / 180.0 * k;
        cam.x() = cfg.cameraPath.radiusMeters * (std::cos(th) - 1.0);
        cam.y() = cfg.cameraPath.radiusMeters * std::sin(th);
        break;
      }
    }

    std::vector<Eigen::Vector2d> centers(baseCenters);
    if (orbitRadius > 0) {
      double phi = orbitStep * k;
      Eigen::Vector2d off(orbitRadius * (std::cos(phi) - 1.0), orbitRadius * std::sin(phi));
      for (auto& c : centers) c += off;
    }

    SynthFrame frame;
    frame.timestamp = k / 30.0;
    frame.rgb = ColorImage(cfg.width, cfg.height);
    frame.depth = DepthImage(cfg.width, cfg.height);
    frame.mask = BinaryMask(cfg.width, cfg.height);
    frame.prob = ProbField(cfg.width, cfg.height, 2);

    for (int y = 0; y < cfg.height; ++y)
      for (int x = 0; x < cfg.width; ++x) {
        const double dx = (x - K.cx) / K.fx;
        const double dy = (y - K.cy) / K.fy;

        // Try the object plane first, then fall back to the background.
        bool onObject = false;
        std::uint64_t h = 0;
        double depth = 0;
        {
          const double s = kObjectZ - cam.z();
          const double wx = cam.x() + s * dx;
          const double wy = cam.y() + s * dy;
          for (std::size_t o = 0; o < centers.size() && !onObject; ++o) {
            const double lx = wx - centers[o].x();
            const double ly = wy - centers[o].y();
            if (std::abs(lx) <= halfW && std::abs(ly) <= halfH) {
              onObject = true;
              // Texture anchored to the object so it travels with it.
              std::int64_t cxq = static_cast<std::int64_t>(std::floor((lx + halfW) / objGrain));
              std::int64_t cyq = static_cast<std::int64_t>(std::floor((ly + halfH) / objGrain));
              h = detail::texture_hash(cfg.seed, o + 1, cxq, cyq);
              depth = s;
            }
          }
        }
        if (!onObject) {
          const double s = kBackgroundZ - cam.z();
          const double wx = cam.x() + s * dx;
          const double wy = cam.y() + s * dy;
          std::int64_t cxq = static_cast<std::int64_t>(std::floor(wx / bgGrain));
          std::int64_t cyq = static_cast<std::int64_t>(std::floor(wy / bgGrain));
          h = detail::texture_hash(cfg.seed, 0, cxq, cyq);
          depth = s;
        }

        std::uint8_t* px = frame.rgb.px(x, y);
        px[0] = static_cast<std::uint8_t>(h & 0xFF);
        px[1] = static_cast<std::uint8_t>((h >> 8) & 0xFF);
        px[2] = static_cast<std::uint8_t>((h >> 16) & 0xFF);
        frame.depth.at(x, y) = depth;
        frame.mask.at(x, y) = onObject ? 1 : 0;
        frame.prob.at(x, y, 1) = onObject ? 0.9 : 0.1;
        frame.prob.at(x, y, 0) = onObject ? 0.1 : 0.9;
      }

    frame.gray = to_gray(frame.rgb);
    seq.frames.push_back(std::move(frame));
    seq.gtTrajectory.entries.push_back({k / 30.0, Pose(Eigen::Quaterniond::Identity(), cam)});
  }
  return seq;
}

}  // namespace movo

#endif  // MOVO_SYNTH_HPP
