#ifndef MOVO_FEATURES_HPP
#define MOVO_FEATURES_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "movo/crf.hpp"
#include "movo/image.hpp"

namespace movo {

constexpr int kEdgeThreshold = 19;     // orientation + rotated descriptor support
constexpr int kOrientationRadius = 15;
constexpr int kCellSize = 30;

struct KeyPoint {
  double x = 0;  // level-0 frame coordinates
  double y = 0;
  int octave = 0;
  double response = 0;
  double angle = 0;  // radians in [0, 2pi)
};

/// 256-bit binary descriptor.
struct Descriptor {
  std::array<std::uint64_t, 4> bits{};

  void set(int i) { bits[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  bool test(int i) const { return (bits[i >> 6] >> (i & 63)) & 1; }
};

inline int hamming_distance(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a.bits[i] ^ b.bits[i]);
  return d;
}

struct FeatureParams {
  int nfeatures = 1000;
  double scaleFactor = 1.2;
  int nlevels = 8;
  int iniThFAST = 20;
  int minThFAST = 7;
  int maskDilation = 8;  // px at level 0; 0 recovers raw-mask gating

  void validate() const {
    if (nfeatures <= 0) throw std::invalid_argument("FeatureParams: nfeatures must be > 0");
    if (minThFAST <= 0 || iniThFAST < minThFAST)
      throw std::invalid_argument("FeatureParams: need iniThFAST >= minThFAST > 0");
    if (nlevels < 1 || scaleFactor <= 1.0)
      throw std::invalid_argument("FeatureParams: bad pyramid settings");
    if (maskDilation < 0) throw std::invalid_argument("FeatureParams: negative maskDilation");
  }
};

struct Match {
  int indexA = 0;
  int indexB = 0;
  int distance = 0;
};

namespace detail {

// 16-pixel Bresenham circle of radius 3.
constexpr std::array<std::array<int, 2>, 16> kFastCircle = {{{0, -3},
                                                             {1, -3},
                                                             {2, -2},
                                                             {3, -1},
                                                             {3, 0},
                                                             {3, 1},
                                                             {2, 2},
                                                             {1, 3},
                                                             {0, 3},
                                                             {-1, 3},
                                                             {-2, 2},
                                                             {-3, 1},
                                                             {-3, 0},
                                                             {-3, -1},
                                                             {-2, -2},
                                                             {-1, -3}}};

// FAST-9/16 segment test; returns the corner score (0 when not a corner).
// Score: best contiguous qualifying arc's summed excess over the threshold.
inline double fast_score(const GrayImage& img, int x, int y, int threshold) {
  const int p = img.at(x, y);
  std::array<int, 32> diff;  // circle walked twice for wrap-around arcs
  for (int i = 0; i < 16; ++i) {
    diff[i] = static_cast<int>(img.at(x + kFastCircle[i][0], y + kFastCircle[i][1])) - p;
    diff[i + 16] = diff[i];
  }
  double best = 0;
  for (int sign = 0; sign < 2; ++sign) {
    int run = 0;
    double acc = 0;
    for (int i = 0; i < 32; ++i) {
      int d = sign == 0 ? diff[i] : -diff[i];
      if (d > threshold) {
        ++run;
        acc += d - threshold;
        if (run >= 9 && run <= 16) best = std::max(best, acc);
        if (run > 16) break;  // whole circle qualifies; arc of 16 already scored
      } else {
        run = 0;
        acc = 0;
      }
    }
  }
  return best;
}

struct Rect {
  double minX, minY, maxX, maxY;
};

// FAST detection with nonmax suppression restricted to [x0,x1]x[y0,y1]
// (inclusive). The caller guarantees the circle fits (coordinates >= 3 from
// the image edge).
inline std::vector<KeyPoint> detect_fast_region(const GrayImage& img, int x0, int y0, int x1,
                                                int y1, int threshold) {
  std::vector<KeyPoint> out;
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  if (w <= 0 || h <= 0) return out;
  std::vector<double> score(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      score[static_cast<std::size_t>(y - y0) * w + (x - x0)] = fast_score(img, x, y, threshold);

  auto sc = [&](int x, int y) -> double {
    if (x < x0 || x > x1 || y < y0 || y > y1) return 0.0;
    return score[static_cast<std::size_t>(y - y0) * w + (x - x0)];
  };
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      double s = sc(x, y);
      if (s <= 0) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy)
        for (int dx = -1; dx <= 1 && keep; ++dx) {
          if (dx == 0 && dy == 0) continue;
          double sn = sc(x + dx, y + dy);
          if (sn > s) keep = false;
          // Equal scores: the lexicographically earlier pixel wins.
          if (sn == s && (dy < 0 || (dy == 0 && dx < 0))) keep = false;
        }
      if (keep) {
        KeyPoint kp;
        kp.x = x;
        kp.y = y;
        kp.response = s;
        out.push_back(kp);
      }
    }
  return out;
}

}  // namespace detail

/// FAST-9/16 corners over the whole image, 19-pixel border excluded.
inline std::vector<KeyPoint> detect_fast(const GrayImage& img, int threshold) {
  if (threshold <= 0) throw std::invalid_argument("detect_fast: threshold must be > 0");
  if (img.width <= 2 * kEdgeThreshold || img.height <= 2 * kEdgeThreshold) return {};
  return detail::detect_fast_region(img, kEdgeThreshold, kEdgeThreshold,
                                    img.width - kEdgeThreshold - 1,
                                    img.height - kEdgeThreshold - 1, threshold);
}

/// Removes candidates whose level-0 position falls on a movable mask pixel.
/// Candidates that project outside the mask are rejected as well.
inline std::vector<KeyPoint> gate_by_mask(const std::vector<KeyPoint>& candidates,
                                          const BinaryMask& mask, double levelScale) {
  std::vector<KeyPoint> out;
  out.reserve(candidates.size());
  for (const KeyPoint& kp : candidates) {
    const int x0 = static_cast<int>(std::lround(kp.x * levelScale));
    const int y0 = static_cast<int>(std::lround(kp.y * levelScale));
    if (x0 < 0 || x0 >= mask.width || y0 < 0 || y0 >= mask.height) continue;
    if (mask.at(x0, y0)) continue;
    out.push_back(kp);
  }
  return out;
}

/// Quad-tree spreading with a keypoint budget: nodes split (largest first)
/// until the node count reaches targetN or every node is a singleton, then the
/// best-response candidate per node survives.
inline std::vector<KeyPoint> distribute_octtree(const std::vector<KeyPoint>& candidates,
                                                int targetN, const detail::Rect& bounds) {
  if (targetN <= 0) throw std::invalid_argument("distribute_octtree: targetN must be > 0");
  if (candidates.empty()) return {};

  struct Node {
    detail::Rect rect;
    std::vector<int> idx;
    bool splittable = true;
  };

  auto refreshSplittable = [&](Node& n) {
    if (n.idx.size() <= 1 || (n.rect.maxX - n.rect.minX) < 1e-9 ||
        (n.rect.maxY - n.rect.minY) < 1e-9) {
      n.splittable = false;
      return;
    }
    const KeyPoint& first = candidates[n.idx[0]];
    bool allSame = true;
    for (std::size_t i = 1; i < n.idx.size() && allSame; ++i) {
      const KeyPoint& kp = candidates[n.idx[i]];
      if (kp.x != first.x || kp.y != first.y) allSame = false;
    }
    n.splittable = !allSame;
  };

  std::vector<Node> nodes;
  {
    Node root;
    root.rect = bounds;
    root.idx.resize(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) root.idx[i] = static_cast<int>(i);
    refreshSplittable(root);
    nodes.push_back(std::move(root));
  }

  while (static_cast<int>(nodes.size()) < targetN) {
    // Pick the splittable node with the most candidates.
    int pick = -1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i].splittable) continue;
      if (pick < 0 || nodes[i].idx.size() > nodes[pick].idx.size()) pick = static_cast<int>(i);
    }
    if (pick < 0) break;

    Node node = std::move(nodes[pick]);
    nodes.erase(nodes.begin() + pick);
    const double cx = 0.5 * (node.rect.minX + node.rect.maxX);
    const double cy = 0.5 * (node.rect.minY + node.rect.maxY);
    std::array<Node, 4> children;
    children[0].rect = {node.rect.minX, node.rect.minY, cx, cy};
    children[1].rect = {cx, node.rect.minY, node.rect.maxX, cy};
    children[2].rect = {node.rect.minX, cy, cx, node.rect.maxY};
    children[3].rect = {cx, cy, node.rect.maxX, node.rect.maxY};
    for (int idx : node.idx) {
      const KeyPoint& kp = candidates[idx];
      int c = (kp.x < cx ? 0 : 1) + (kp.y < cy ? 0 : 2);
      children[c].idx.push_back(idx);
    }
    for (Node& c : children) {
      if (c.idx.empty()) continue;
      refreshSplittable(c);
      nodes.push_back(std::move(c));
    }
  }

  std::vector<KeyPoint> out;
  out.reserve(nodes.size());
  for (const Node& n : nodes) {
    int best = n.idx[0];
    for (std::size_t i = 1; i < n.idx.size(); ++i) {
      const KeyPoint& a = candidates[n.idx[i]];
      const KeyPoint& b = candidates[best];
      if (a.response > b.response ||
          (a.response == b.response && std::tie(a.y, a.x) < std::tie(b.y, b.x)))
        best = n.idx[i];
    }
    out.push_back(candidates[best]);
  }
  // Deterministic output order independent of node bookkeeping.
  std::sort(out.begin(), out.end(), [](const KeyPoint& a, const KeyPoint& b) {
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  return out;
}

/// Intensity-centroid orientation over a circular patch, radians in [0, 2pi).
inline double compute_orientation(const GrayImage& img, const KeyPoint& kp, int radius) {
  const int cx = static_cast<int>(std::lround(kp.x));
  const int cy = static_cast<int>(std::lround(kp.y));
  if (cx - radius < 0 || cx + radius >= img.width || cy - radius < 0 || cy + radius >= img.height)
    throw std::out_of_range("compute_orientation: patch out of bounds");
  double m01 = 0, m10 = 0;
  for (int v = -radius; v <= radius; ++v) {
    const int umax = static_cast<int>(std::floor(
        std::sqrt(static_cast<double>(radius) * radius - static_cast<double>(v) * v) + 0.5));
    for (int u = -umax; u <= umax; ++u) {
      const double I = img.at(cx + u, cy + v);
      m10 += u * I;
      m01 += v * I;
    }
  }
  if (m01 == 0 && m10 == 0) return 0.0;
  double angle = std::atan2(m01, m10);
  if (angle < 0) angle += 2.0 * M_PI;
  return angle;
}

namespace detail {

// Fixed comparison-pair table for the 256-bit descriptor, drawn once from a
// seeded generator, coordinates uniform in [-13, 13]^2.
struct BriefPattern {
  std::array<std::array<int, 4>, 256> pairs;
  BriefPattern() {
    std::mt19937 rng(0xB51EF);
    for (auto& p : pairs)
      for (int& c : p) c = static_cast<int>(rng() % 27u) - 13;
  }
};

inline const BriefPattern& brief_pattern() {
  static const BriefPattern pattern;
  return pattern;
}

}  // namespace detail

/// Rotated-BRIEF descriptor; expects the level image pre-blurred (sigma 2).
inline Descriptor compute_descriptor(const GrayImage& blurred, const KeyPoint& kp) {
  const int cx = static_cast<int>(std::lround(kp.x));
  const int cy = static_cast<int>(std::lround(kp.y));
  if (cx - kEdgeThreshold < 0 || cx + kEdgeThreshold >= blurred.width ||
      cy - kEdgeThreshold < 0 || cy + kEdgeThreshold >= blurred.height)
    throw std::out_of_range("compute_descriptor: patch out of bounds");
  const double c = std::cos(kp.angle), s = std::sin(kp.angle);
  Descriptor desc;
  const auto& pattern = detail::brief_pattern().pairs;
  for (int i = 0; i < 256; ++i) {
    const auto& p = pattern[i];
    const int x1 = cx + static_cast<int>(std::lround(p[0] * c - p[1] * s));
    const int y1 = cy + static_cast<int>(std::lround(p[0] * s + p[1] * c));
    const int x2 = cx + static_cast<int>(std::lround(p[2] * c - p[3] * s));
    const int y2 = cy + static_cast<int>(std::lround(p[2] * s + p[3] * c));
    if (blurred.at(x1, y1) < blurred.at(x2, y2)) desc.set(i);
  }
  return desc;
}

/// Diagnostics from extract(): raw and post-gating candidate counts.
struct ExtractStats {
  std::vector<int> candidatesPerLevel;
  std::vector<int> gatedPerLevel;
  int totalCandidates = 0;
  int totalGated = 0;
};

/// The full extraction pipeline: cell-wise FAST with threshold retry, mask
/// gating before buffering, per-level quad-tree distribution, orientation and
/// descriptors. Keypoint coordinates are reported at level-0 scale.
inline std::pair<std::vector<KeyPoint>, std::vector<Descriptor>> extract(
    const ImagePyramid& pyramid, const BinaryMask* mask, const FeatureParams& params,
    ExtractStats* stats = nullptr) {
  params.validate();
  if (mask && (mask->width != pyramid.levels[0].width || mask->height != pyramid.levels[0].height))
    throw std::invalid_argument("extract: mask must match level-0 resolution");

  BinaryMask dilated;
  if (mask) dilated = dilate_mask(*mask, params.maskDilation);

  const int nlevels = pyramid.numLevels();
  // Per-level budget: geometric split sum_k nfeatures (1-s) s^k / (1-s^n).
  const double s = 1.0 / pyramid.scaleFactor;
  std::vector<int> quota(nlevels);
  int assigned = 0;
  for (int k = 0; k < nlevels - 1; ++k) {
    double q = params.nfeatures * (1.0 - s) * std::pow(s, k) / (1.0 - std::pow(s, nlevels));
    quota[k] = std::max(1, static_cast<int>(std::lround(q)));
    assigned += quota[k];
  }
  quota[nlevels - 1] = std::max(1, params.nfeatures - assigned);

  if (stats) {
    stats->candidatesPerLevel.assign(nlevels, 0);
    stats->gatedPerLevel.assign(nlevels, 0);
    stats->totalCandidates = 0;
    stats->totalGated = 0;
  }

  std::vector<KeyPoint> keypoints;
  std::vector<Descriptor> descriptors;

  for (int k = 0; k < nlevels; ++k) {
    const GrayImage& level = pyramid.levels[k];
    const double levelScale = pyramid.perLevelScale[k];
    const int minB = kEdgeThreshold;
    const int maxX = level.width - kEdgeThreshold - 1;
    const int maxY = level.height - kEdgeThreshold - 1;
    if (maxX < minB || maxY < minB) continue;

    std::vector<KeyPoint> candidates;
    for (int cy = minB; cy <= maxY; cy += kCellSize)
      for (int cx = minB; cx <= maxX; cx += kCellSize) {
        const int x1 = std::min(cx + kCellSize - 1, maxX);
        const int y1 = std::min(cy + kCellSize - 1, maxY);
        std::vector<KeyPoint> cell =
            detail::detect_fast_region(level, cx, cy, x1, y1, params.iniThFAST);
        if (cell.empty())
          cell = detail::detect_fast_region(level, cx, cy, x1, y1, params.minThFAST);
        candidates.insert(candidates.end(), cell.begin(), cell.end());
      }
    for (KeyPoint& kp : candidates) kp.octave = k;
    if (stats) {
      stats->candidatesPerLevel[k] = static_cast<int>(candidates.size());
      stats->totalCandidates += static_cast<int>(candidates.size());
    }

    if (mask) candidates = gate_by_mask(candidates, dilated, levelScale);
    if (stats) {
      stats->gatedPerLevel[k] = static_cast<int>(candidates.size());
      stats->totalGated += static_cast<int>(candidates.size());
    }
    if (candidates.empty()) continue;

    detail::Rect bounds{static_cast<double>(minB), static_cast<double>(minB),
                        static_cast<double>(maxX) + 1.0, static_cast<double>(maxY) + 1.0};
    std::vector<KeyPoint> kept = distribute_octtree(candidates, quota[k], bounds);

    const GrayImage blurred = gaussian_blur(level, 2.0);
    for (KeyPoint kp : kept) {
      kp.angle = compute_orientation(level, kp, kOrientationRadius);
      Descriptor d = compute_descriptor(blurred, kp);
      kp.x *= levelScale;
      kp.y *= levelScale;
      keypoints.push_back(kp);
      descriptors.push_back(d);
    }
  }

  // Trim to the exact budget by response rank.
  if (static_cast<int>(keypoints.size()) > params.nfeatures) {
    std::vector<int> order(keypoints.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const KeyPoint &ka = keypoints[a], &kb = keypoints[b];
      return std::tie(kb.response, ka.y, ka.x, ka.octave) <
             std::tie(ka.response, kb.y, kb.x, kb.octave);
    });
    std::vector<KeyPoint> kps;
    std::vector<Descriptor> descs;
    kps.reserve(params.nfeatures);
    descs.reserve(params.nfeatures);
    for (int i = 0; i < params.nfeatures; ++i) {
      kps.push_back(keypoints[order[i]]);
      descs.push_back(descriptors[order[i]]);
    }
    keypoints = std::move(kps);
    descriptors = std::move(descs);
  }
  return {std::move(keypoints), std::move(descriptors)};
}

/// Mutual-best Hamming matching, one-to-one, distance capped at maxDistance.
inline std::vector<Match> match(const std::vector<Descriptor>& descA,
                                const std::vector<Descriptor>& descB, int maxDistance = 64) {
  std::vector<Match> out;
  if (descA.empty() || descB.empty()) return out;

  std::vector<int> bestForA(descA.size(), -1), bestDistA(descA.size(), 257);
  std::vector<int> bestForB(descB.size(), -1), bestDistB(descB.size(), 257);
  for (std::size_t a = 0; a < descA.size(); ++a)
    for (std::size_t b = 0; b < descB.size(); ++b) {
      int d = hamming_distance(descA[a], descB[b]);
      if (d < bestDistA[a]) {
        bestDistA[a] = d;
        bestForA[a] = static_cast<int>(b);
      }
      if (d < bestDistB[b]) {
        bestDistB[b] = d;
        bestForB[b] = static_cast<int>(a);
      }
    }
  for (std::size_t a = 0; a < descA.size(); ++a) {
    int b = bestForA[a];
    if (b < 0 || bestDistA[a] > maxDistance) continue;
    if (bestForB[b] != static_cast<int>(a)) continue;
    out.push_back({static_cast<int>(a), b, bestDistA[a]});
  }
  return out;
}

}  // namespace movo

#endif  // MOVO_FEATURES_HPP
