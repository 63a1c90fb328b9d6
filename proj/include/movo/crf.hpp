#ifndef MOVO_CRF_HPP
#define MOVO_CRF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "movo/image.hpp"
#include "movo/permutohedral.hpp"

namespace movo {

/// Per-pixel soft label distribution over L classes, pixel-major then label.
struct ProbField {
  int width = 0;
  int height = 0;
  int numLabels = 0;
  std::vector<double> data;

  ProbField() = default;
  ProbField(int w, int h, int L)
      : width(w), height(h), numLabels(L), data(static_cast<std::size_t>(w) * h * L, 0.0) {
    if (w <= 0 || h <= 0 || L <= 0) throw std::invalid_argument("ProbField: non-positive size");
  }

  double at(int x, int y, int l) const {
    return data[(static_cast<std::size_t>(y) * width + x) * numLabels + l];
  }
  double& at(int x, int y, int l) {
    return data[(static_cast<std::size_t>(y) * width + x) * numLabels + l];
  }

  std::size_t numPixels() const { return static_cast<std::size_t>(width) * height; }

  void validate(double tol = 1e-9) const {
    const std::size_t n = numPixels();
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0;
      for (int l = 0; l < numLabels; ++l) {
        double v = data[i * numLabels + l];
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("ProbField: entry outside [0,1]");
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol)
        throw std::invalid_argument("ProbField: pixel distribution does not sum to 1");
    }
  }
};

struct CrfParams {
  bool useColorKernel = false;
  bool useDepthKernel = false;
  double wSmooth = 3.0;
  double wColor = 5.0;
  double wDepth = 5.0;
  double thetaGamma = 3.0;   // smoothness spatial stddev (px)
  double thetaAlpha = 50.0;  // bilateral spatial stddev (px)
  double thetaBeta = 13.0;   // color stddev (intensity units)
  double thetaDelta = 0.3;   // depth stddev (m)
  int iterations = 5;

  void validate() const {
    if (iterations < 0) throw std::invalid_argument("CrfParams: iterations must be >= 0");
    if (thetaGamma <= 0 || thetaAlpha <= 0 || thetaBeta <= 0 || thetaDelta <= 0)
      throw std::invalid_argument("CrfParams: kernel stddevs must be > 0");
    if (wSmooth < 0 || wColor < 0 || wDepth < 0)
      throw std::invalid_argument("CrfParams: kernel weights must be >= 0");
    if (iterations > 0 && wSmooth == 0 && (!useColorKernel || wColor == 0) &&
        (!useDepthKernel || wDepth == 0))
      throw std::invalid_argument("CrfParams: all kernels disabled with iterations > 0");
  }
};

/// Parses the kernel configuration naming "c" / "d" / "c,d".
inline void apply_kernel_config(const std::string& spec, CrfParams& params) {
  params.useColorKernel = false;
  params.useDepthKernel = false;
  std::string token;
  for (std::size_t i = 0; i <= spec.size(); ++i) {
    if (i == spec.size() || spec[i] == ',') {
      if (token == "c")
        params.useColorKernel = true;
      else if (token == "d")
        params.useDepthKernel = true;
      else if (!token.empty())
        throw std::invalid_argument("unknown CRF kernel '" + token + "' (expected c, d or c,d)");
      token.clear();
    } else if (!std::isspace(static_cast<unsigned char>(spec[i]))) {
      token.push_back(spec[i]);
    }
  }
}

struct MovableClassSet {
  std::vector<int> labelIndices;
  std::vector<std::string> labelNames;

  bool contains(int label) const {
    return std::find(labelIndices.begin(), labelIndices.end(), label) != labelIndices.end();
  }
};

/// Per-pixel movable flag, 1 = movable.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("BinaryMask: non-positive size");
  }

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

inline void check_crf_inputs(const ProbField& Q, const ColorImage* color, const DepthImage* depth,
                             const CrfParams& params) {
  params.validate();
  if (params.useColorKernel) {
    if (!color) throw std::invalid_argument("CRF: color kernel enabled but no color image");
    if (color->width != Q.width || color->height != Q.height)
      throw std::invalid_argument("CRF: color image dimensions do not match the label field");
  }
  if (params.useDepthKernel) {
    if (!depth) throw std::invalid_argument("CRF: depth kernel enabled but no depth image");
    if (depth->width != Q.width || depth->height != Q.height)
      throw std::invalid_argument("CRF: depth image dimensions do not match the label field");
  }
}

// Spatial truncation radius for a Gaussian of stddev theta: the neglected tail
// is below 1e-8 relative mass.
inline int truncation_radius(double theta) { return static_cast<int>(std::ceil(6.1 * theta)); }

// Windowed evaluation of a single kernel pass. Used for small frames where the
// window covers the whole image, making the pass numerically exact.
template <typename PairTerm>
inline void windowed_pass(const ProbField& Q, double weight, int radius, std::vector<double>& msg,
                          PairTerm term) {
  const int W = Q.width, H = Q.height, L = Q.numLabels;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      double* mi = &msg[i * L];
      const int y0 = std::max(0, y - radius), y1 = std::min(H - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(W - 1, x + radius);
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) {
          if (xx == x && yy == y) continue;
          double e;
          if (!term(x, y, xx, yy, e)) continue;
          const double k = weight * std::exp(e);
          const double* qj = &Q.data[(static_cast<std::size_t>(yy) * W + xx) * L];
          for (int l = 0; l < L; ++l) mi[l] += k * qj[l];
        }
    }
}

// Separable truncated Gaussian smoothing pass for large frames; excludes the
// self contribution.
inline void separable_smooth_pass(const ProbField& Q, double weight, double theta,
                                  std::vector<double>& msg) {
  const int W = Q.width, H = Q.height, L = Q.numLabels;
  const int R = truncation_radius(theta);
  std::vector<double> g(2 * R + 1);
  const double inv = 1.0 / (2.0 * theta * theta);
  for (int i = -R; i <= R; ++i) g[i + R] = std::exp(-(static_cast<double>(i) * i) * inv);

  std::vector<double> tmp(Q.data.size(), 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double* t = &tmp[(static_cast<std::size_t>(y) * W + x) * L];
      const int x0 = std::max(0, x - R), x1 = std::min(W - 1, x + R);
      for (int xx = x0; xx <= x1; ++xx) {
        const double w = g[xx - x + R];
        const double* qj = &Q.data[(static_cast<std::size_t>(y) * W + xx) * L];
        for (int l = 0; l < L; ++l) t[l] += w * qj[l];
      }
    }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      double* mi = &msg[i * L];
      const double* qi = &Q.data[i * L];
      const int y0 = std::max(0, y - R), y1 = std::min(H - 1, y + R);
      for (int l = 0; l < L; ++l) {
        double acc = 0;
        for (int yy = y0; yy <= y1; ++yy)
          acc += g[yy - y + R] * tmp[(static_cast<std::size_t>(yy) * W + x) * L + l];
        mi[l] += weight * (acc - qi[l]);
      }
    }
}

}  // namespace detail

/// Exact O(N^2) pairwise message field; the authoritative reference for the
/// fast paths.  message(i,l) = sum_{j != i} k(f_i, f_j) Q_j(l).
inline std::vector<double> pairwise_message_brute(const ProbField& Q, const ColorImage* color,
                                                  const DepthImage* depth,
                                                  const CrfParams& params) {
  detail::check_crf_inputs(Q, color, depth, params);
  const int W = Q.width, H = Q.height, L = Q.numLabels;
  const std::size_t N = Q.numPixels();
  std::vector<double> msg(N * L, 0.0);

  const bool useSmooth = params.wSmooth > 0;
  const bool useColor = params.useColorKernel && params.wColor > 0;
  const bool useDepth = params.useDepthKernel && params.wDepth > 0;
  const double invG = 1.0 / (2.0 * params.thetaGamma * params.thetaGamma);
  const double invA = 1.0 / (2.0 * params.thetaAlpha * params.thetaAlpha);
  const double invB = 1.0 / (2.0 * params.thetaBeta * params.thetaBeta);
  const double invD = 1.0 / (2.0 * params.thetaDelta * params.thetaDelta);

  for (int yi = 0; yi < H; ++yi)
    for (int xi = 0; xi < W; ++xi) {
      const std::size_t i = static_cast<std::size_t>(yi) * W + xi;
      double* mi = &msg[i * L];
      for (int yj = 0; yj < H; ++yj)
        for (int xj = 0; xj < W; ++xj) {
          const std::size_t j = static_cast<std::size_t>(yj) * W + xj;
          if (j == i) continue;
          const double dx = xi - xj, dy = yi - yj;
          const double spatial2 = dx * dx + dy * dy;
          double k = 0;
          if (useSmooth) k += params.wSmooth * std::exp(-spatial2 * invG);
          if (useColor) {
            const std::uint8_t* ci = color->px(xi, yi);
            const std::uint8_t* cj = color->px(xj, yj);
            double c2 = 0;
            for (int ch = 0; ch < 3; ++ch) {
              double dc = static_cast<double>(ci[ch]) - cj[ch];
              c2 += dc * dc;
            }
            double e = -spatial2 * invA;
            e -= c2 * invB;
            k += params.wColor * std::exp(e);
          }
          if (useDepth) {
            const double di = depth->at(xi, yi), dj = depth->at(xj, yj);
            if (di > 0 && dj > 0) {
              double dd = di - dj;
              double e = -spatial2 * invA;
              e -= dd * dd * invD;
              k += params.wDepth * std::exp(e);
            }
          }
          if (k == 0) continue;
          const double* qj = &Q.data[j * L];
          for (int l = 0; l < L; ++l) mi[l] += k * qj[l];
        }
    }
  return msg;
}

namespace detail {

// Fast message computation. Small frames take the windowed (numerically exact)
// route; larger frames use separable smoothing plus permutohedral bilateral
// filtering.
inline std::vector<double> pairwise_message_fast(const ProbField& Q, const ColorImage* color,
                                                 const DepthImage* depth,
                                                 const CrfParams& params) {
  const int W = Q.width, H = Q.height, L = Q.numLabels;
  const std::size_t N = Q.numPixels();
  std::vector<double> msg(N * L, 0.0);

  const bool useSmooth = params.wSmooth > 0;
  const bool useColor = params.useColorKernel && params.wColor > 0;
  const bool useDepth = params.useDepthKernel && params.wDepth > 0;
  const double invG = 1.0 / (2.0 * params.thetaGamma * params.thetaGamma);
  const double invA = 1.0 / (2.0 * params.thetaAlpha * params.thetaAlpha);
  const double invB = 1.0 / (2.0 * params.thetaBeta * params.thetaBeta);
  const double invD = 1.0 / (2.0 * params.thetaDelta * params.thetaDelta);

  const bool small = W < 64 && H < 64;
  if (small) {
    if (useSmooth) {
      windowed_pass(Q, params.wSmooth, truncation_radius(params.thetaGamma), msg,
                    [&](int xi, int yi, int xj, int yj, double& e) {
                      const double dx = xi - xj, dy = yi - yj;
                      e = -(dx * dx + dy * dy) * invG;
                      return true;
                    });
    }
    if (useColor) {
      windowed_pass(Q, params.wColor, truncation_radius(params.thetaAlpha), msg,
                    [&](int xi, int yi, int xj, int yj, double& e) {
                      const double dx = xi - xj, dy = yi - yj;
                      const std::uint8_t* ci = color->px(xi, yi);
                      const std::uint8_t* cj = color->px(xj, yj);
                      double c2 = 0;
                      for (int ch = 0; ch < 3; ++ch) {
                        double dc = static_cast<double>(ci[ch]) - cj[ch];
                        c2 += dc * dc;
                      }
                      e = -(dx * dx + dy * dy) * invA;
                      e -= c2 * invB;
                      return true;
                    });
    }
    if (useDepth) {
      windowed_pass(Q, params.wDepth, truncation_radius(params.thetaAlpha), msg,
                    [&](int xi, int yi, int xj, int yj, double& e) {
                      const double di = depth->at(xi, yi), dj = depth->at(xj, yj);
                      if (di <= 0 || dj <= 0) return false;
                      const double dx = xi - xj, dy = yi - yj;
                      const double dd = di - dj;
                      e = -(dx * dx + dy * dy) * invA;
                      e -= dd * dd * invD;
                      return true;
                    });
    }
    return msg;
  }

  if (useSmooth) separable_smooth_pass(Q, params.wSmooth, params.thetaGamma, msg);

  if (useColor) {
    std::vector<double> features(N * 5);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * W + x;
        const std::uint8_t* c = color->px(x, y);
        features[i * 5 + 0] = x / params.thetaAlpha;
        features[i * 5 + 1] = y / params.thetaAlpha;
        features[i * 5 + 2] = c[0] / params.thetaBeta;
        features[i * 5 + 3] = c[1] / params.thetaBeta;
        features[i * 5 + 4] = c[2] / params.thetaBeta;
      }
    PermutohedralLattice lattice(features, static_cast<int>(N), 5);
    std::vector<double> out;
    lattice.compute(Q.data, L, out);
    for (std::size_t i = 0; i < N; ++i)
      for (int l = 0; l < L; ++l)
        msg[i * L + l] += params.wColor * (out[i * L + l] - Q.data[i * L + l]);
  }

  if (useDepth) {
    // Pairs involving a missing-depth pixel carry zero depth-kernel weight:
    // the lattice only sees valid pixels.
    std::vector<std::size_t> valid;
    valid.reserve(N);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (depth->at(x, y) > 0) valid.push_back(static_cast<std::size_t>(y) * W + x);
    if (!valid.empty()) {
      const int Nv = static_cast<int>(valid.size());
      std::vector<double> features(static_cast<std::size_t>(Nv) * 3);
      std::vector<double> values(static_cast<std::size_t>(Nv) * L);
      for (int k = 0; k < Nv; ++k) {
        const std::size_t i = valid[k];
        const int x = static_cast<int>(i % W), y = static_cast<int>(i / W);
        features[static_cast<std::size_t>(k) * 3 + 0] = x / params.thetaAlpha;
        features[static_cast<std::size_t>(k) * 3 + 1] = y / params.thetaAlpha;
        features[static_cast<std::size_t>(k) * 3 + 2] = depth->at(x, y) / params.thetaDelta;
        for (int l = 0; l < L; ++l)
          values[static_cast<std::size_t>(k) * L + l] = Q.data[i * L + l];
      }
      PermutohedralLattice lattice(features, Nv, 3);
      std::vector<double> out;
      lattice.compute(values, L, out);
      for (int k = 0; k < Nv; ++k) {
        const std::size_t i = valid[k];
        for (int l = 0; l < L; ++l)
          msg[i * L + l] += params.wDepth *
                            (out[static_cast<std::size_t>(k) * L + l] - Q.data[i * L + l]);
      }
    }
  }
  return msg;
}

// One mean-field update given a message field: Potts compatibility with unit
// inter-label penalty, renormalized per pixel.
inline ProbField mean_field_update(const ProbField& unary, const ProbField& Q,
                                   const std::vector<double>& msg) {
  const int L = Q.numLabels;
  const std::size_t N = Q.numPixels();
  ProbField out(Q.width, Q.height, L);
  std::vector<double> ex(L);
  constexpr double kLogFloor = 1e-300;
  for (std::size_t i = 0; i < N; ++i) {
    double total = 0;
    for (int l = 0; l < L; ++l) total += msg[i * L + l];
    double mx = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < L; ++l) {
      double e = std::log(std::max(unary.data[i * L + l], kLogFloor)) - (total - msg[i * L + l]);
      ex[l] = e;
      mx = std::max(mx, e);
    }
    double z = 0;
    for (int l = 0; l < L; ++l) {
      ex[l] = std::exp(ex[l] - mx);
      z += ex[l];
    }
    for (int l = 0; l < L; ++l) out.data[i * L + l] = ex[l] / z;
  }
  return out;
}

}  // namespace detail

/// Dense-CRF mean-field inference (fast path).
inline ProbField mean_field_infer(const ProbField& unary, const ColorImage* color,
                                  const DepthImage* depth, const CrfParams& params) {
  detail::check_crf_inputs(unary, color, depth, params);
  unary.validate(1e-9);
  ProbField Q = unary;
  for (int it = 0; it < params.iterations; ++it) {
    std::vector<double> msg = detail::pairwise_message_fast(Q, color, depth, params);
    Q = detail::mean_field_update(unary, Q, msg);
  }
  return Q;
}

/// Reference inference driven by the brute-force message oracle.
inline ProbField mean_field_infer_brute(const ProbField& unary, const ColorImage* color,
                                        const DepthImage* depth, const CrfParams& params) {
  detail::check_crf_inputs(unary, color, depth, params);
  unary.validate(1e-9);
  ProbField Q = unary;
  for (int it = 0; it < params.iterations; ++it) {
    std::vector<double> msg = pairwise_message_brute(Q, color, depth, params);
    Q = detail::mean_field_update(unary, Q, msg);
  }
  return Q;
}

/// Per-pixel argmax labeling into a movable/static mask. Ties break toward the
/// lowest label index.
inline BinaryMask binarize_movable(const ProbField& Q, const MovableClassSet& classes) {
  for (int idx : classes.labelIndices)
    if (idx < 0 || idx >= Q.numLabels)
      throw std::invalid_argument("binarize_movable: class index out of range");
  BinaryMask mask(Q.width, Q.height);
  const int L = Q.numLabels;
  const std::size_t N = Q.numPixels();
  for (std::size_t i = 0; i < N; ++i) {
    int best = 0;
    double bestVal = Q.data[i * L];
    for (int l = 1; l < L; ++l) {
      if (Q.data[i * L + l] > bestVal) {
        bestVal = Q.data[i * L + l];
        best = l;
      }
    }
    mask.data[i] = classes.contains(best) ? 1 : 0;
  }
  return mask;
}

/// Morphological dilation with a square structuring element of half-width radius.
inline BinaryMask dilate_mask(const BinaryMask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("dilate_mask: negative radius");
  if (radius == 0) return mask;
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const int y0 = std::max(0, y - radius), y1 = std::min(mask.height - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(mask.width - 1, x + radius);
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) out.at(xx, yy) = 1;
    }
  return out;
}

/// Bilinear resampling of a label field to a target resolution, renormalized.
inline ProbField resample_probfield(const ProbField& src, int w, int h) {
  if (src.width == w && src.height == h) return src;
  ProbField out(w, h, src.numLabels);
  const double sx = static_cast<double>(src.width) / w;
  const double sy = static_cast<double>(src.height) / h;
  const int L = src.numLabels;
  for (int y = 0; y < h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
    int y1 = std::min(y0 + 1, src.height - 1);
    double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int x = 0; x < w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
      int x1 = std::min(x0 + 1, src.width - 1);
      double wx = std::clamp(fx - x0, 0.0, 1.0);
      double sum = 0;
      for (int l = 0; l < L; ++l) {
        double v = (1 - wy) * ((1 - wx) * src.at(x0, y0, l) + wx * src.at(x1, y0, l)) +
                   wy * ((1 - wx) * src.at(x0, y1, l) + wx * src.at(x1, y1, l));
        out.at(x, y, l) = v;
        sum += v;
      }
      if (sum > 0)
        for (int l = 0; l < L; ++l) out.at(x, y, l) /= sum;
    }
  }
  return out;
}

}  // namespace movo

#endif  // MOVO_CRF_HPP
