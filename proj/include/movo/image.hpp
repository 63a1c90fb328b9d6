#ifndef MOVO_IMAGE_HPP
#define MOVO_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace movo {

/// Row-major 8-bit grayscale image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("GrayImage: non-positive size");
  }

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

  // Clamped access, replicate border.
  std::uint8_t atClamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
  }
};

/// Row-major interleaved RGB image, 8 bits per channel.
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height

  ColorImage() = default;
  ColorImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("ColorImage: non-positive size");
  }

  const std::uint8_t* px(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * 3];
  }
  std::uint8_t* px(int x, int y) {
    return &data[(static_cast<std::size_t>(y) * width + x) * 3];
  }
};

/// Row-major depth in meters. 0.0 marks missing depth.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  DepthImage() = default;
  DepthImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("DepthImage: non-positive size");
  }

  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Gray→luma conversion, standard Rec.601 weights.
inline GrayImage to_gray(const ColorImage& img) {
  GrayImage out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = &img.data[i * 3];
    double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    int v = static_cast<int>(std::lround(luma));
    out.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
  }
  return out;
}

/// Bilinear resample to a target size.
inline GrayImage resize_bilinear(const GrayImage& src, int w, int h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("resize_bilinear: non-positive size");
  GrayImage out(w, h);
  const double sx = static_cast<double>(src.width) / w;
  const double sy = static_cast<double>(src.height) / h;
  for (int y = 0; y < h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      double v00 = src.atClamped(x0, y0);
      double v10 = src.atClamped(x0 + 1, y0);
      double v01 = src.atClamped(x0, y0 + 1);
      double v11 = src.atClamped(x0 + 1, y0 + 1);
      double v = (1 - wy) * ((1 - wx) * v00 + wx * v10) + wy * ((1 - wx) * v01 + wx * v11);
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp<int>(static_cast<int>(std::lround(v)), 0, 255));
    }
  }
  return out;
}

/// Scale pyramid of grayscale images. Level k has size floor(level0 / scaleFactor^k).
struct ImagePyramid {
  std::vector<GrayImage> levels;
  double scaleFactor = 1.2;
  std::vector<double> perLevelScale;

  int numLevels() const { return static_cast<int>(levels.size()); }
};

inline ImagePyramid build_pyramid(const GrayImage& img, int nlevels, double scaleFactor) {
  if (nlevels < 1) throw std::invalid_argument("build_pyramid: nlevels must be >= 1");
  if (scaleFactor <= 1.0) throw std::invalid_argument("build_pyramid: scaleFactor must be > 1");
  ImagePyramid pyr;
  pyr.scaleFactor = scaleFactor;
  for (int k = 0; k < nlevels; ++k) {
    double s = std::pow(scaleFactor, k);
    pyr.perLevelScale.push_back(s);
    int w = static_cast<int>(std::floor(img.width / s));
    int h = static_cast<int>(std::floor(img.height / s));
    if (w < 32 || h < 32)
      throw std::invalid_argument("build_pyramid: level " + std::to_string(k) +
                                  " smaller than 32x32 (" + std::to_string(w) + "x" +
                                  std::to_string(h) + ")");
    if (k == 0)
      pyr.levels.push_back(img);
    else
      pyr.levels.push_back(resize_bilinear(img, w, h));
  }
  return pyr;
}

/// Separable Gaussian smoothing, kernel radius ceil(3*sigma), replicate border.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma <= 0) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    kernel[i + radius] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const int W = img.width, H = img.height;
  std::vector<double> tmp(static_cast<std::size_t>(W) * H);
  // Horizontal pass.
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img.atClamped(x + i, y);
      tmp[static_cast<std::size_t>(y) * W + x] = acc;
    }
  }
  // Vertical pass.
  GrayImage out(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) {
        int yy = std::clamp(y + i, 0, H - 1);
        acc += kernel[i + radius] * tmp[static_cast<std::size_t>(yy) * W + x];
      }
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp<int>(static_cast<int>(std::lround(acc)), 0, 255));
    }
  }
  return out;
}

}  // namespace movo

#endif  // MOVO_IMAGE_HPP
