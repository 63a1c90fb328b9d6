#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "movo/image.hpp"

using movo::ColorImage;
using movo::GrayImage;

namespace {

GrayImage random_gray(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  GrayImage img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() % 256);
  return img;
}

// Full 2-D convolution reference for the separable blur.
GrayImage blur_oracle(const GrayImage& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& w : kernel) w /= sum;
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          acc += kernel[dy + radius] * kernel[dx + radius] * img.atClamped(x + dx, y + dy);
      out.at(x, y) = static_cast<std::uint8_t>(
          std::clamp<long>(std::lround(acc), 0, 255));
    }
  return out;
}

}  // namespace

TEST_CASE("to_gray uses Rec.601 luma weights") {
  ColorImage img(2, 1);
  // (100, 150, 200): 0.299*100 + 0.587*150 + 0.114*200 = 140.75 -> 141
  img.px(0, 0)[0] = 100;
  img.px(0, 0)[1] = 150;
  img.px(0, 0)[2] = 200;
  img.px(1, 0)[0] = 255;
  img.px(1, 0)[1] = 255;
  img.px(1, 0)[2] = 255;
  GrayImage g = movo::to_gray(img);
  CHECK(g.at(0, 0) == 141);
  CHECK(g.at(1, 0) == 255);
}

TEST_CASE("to_gray pure channels") {
  ColorImage img(3, 1);
  img.px(0, 0)[0] = 255;  // red: 0.299*255 = 76.245 -> 76
  img.px(1, 0)[1] = 255;  // green: 149.685 -> 150
  img.px(2, 0)[2] = 255;  // blue: 29.07 -> 29
  GrayImage g = movo::to_gray(img);
  CHECK(g.at(0, 0) == 76);
  CHECK(g.at(1, 0) == 150);
  CHECK(g.at(2, 0) == 29);
}

TEST_CASE("resize_bilinear preserves constant images") {
  GrayImage img(17, 11, 93);
  GrayImage out = movo::resize_bilinear(img, 40, 23);
  for (auto v : out.data) CHECK(v == 93);
}

TEST_CASE("resize_bilinear identity size is lossless") {
  GrayImage img = random_gray(23, 19, 7);
  GrayImage out = movo::resize_bilinear(img, 23, 19);
  CHECK(out.data == img.data);
}

TEST_CASE("resize_bilinear 2x downsample averages 2x2 blocks") {
  GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<std::uint8_t>(16 * (4 * y + x));
  GrayImage out = movo::resize_bilinear(img, 2, 2);
  // Sample centers fall exactly between the four source pixels of each block.
  CHECK(out.at(0, 0) == (0 + 16 + 64 + 80 + 2) / 4);
  CHECK(out.at(1, 1) == (160 + 176 + 224 + 240 + 2) / 4);
}

TEST_CASE("resize_bilinear rejects non-positive sizes") {
  GrayImage img(4, 4);
  CHECK_THROWS_AS(movo::resize_bilinear(img, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(movo::resize_bilinear(img, 4, -1), std::invalid_argument);
}

TEST_CASE("build_pyramid level sizes follow floor(dim / scale^k)") {
  GrayImage img = random_gray(320, 240, 11);
  auto pyr = movo::build_pyramid(img, 8, 1.2);
  REQUIRE(pyr.numLevels() == 8);
  for (int k = 0; k < 8; ++k) {
    double s = std::pow(1.2, k);
    CHECK(pyr.levels[k].width == static_cast<int>(std::floor(320 / s)));
    CHECK(pyr.levels[k].height == static_cast<int>(std::floor(240 / s)));
    CHECK(pyr.perLevelScale[k] == Catch::Approx(s));
  }
  CHECK(pyr.levels[0].data == img.data);
}

TEST_CASE("build_pyramid rejects levels below 32x32") {
  GrayImage img = random_gray(64, 64, 3);
  CHECK_NOTHROW(movo::build_pyramid(img, 4, 1.2));
  CHECK_THROWS_AS(movo::build_pyramid(img, 8, 1.2), std::invalid_argument);
  CHECK_THROWS_AS(movo::build_pyramid(img, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(movo::build_pyramid(img, 0, 1.2), std::invalid_argument);
}

TEST_CASE("gaussian_blur leaves constant images unchanged") {
  GrayImage img(40, 30, 177);
  GrayImage out = movo::gaussian_blur(img, 2.0);
  for (auto v : out.data) CHECK(v == 177);
}

TEST_CASE("gaussian_blur matches the 2-D convolution reference") {
  for (unsigned seed : {1u, 2u, 3u}) {
    GrayImage img = random_gray(48, 37, seed);
    GrayImage fast = movo::gaussian_blur(img, 2.0);
    GrayImage slow = blur_oracle(img, 2.0);
    int maxDiff = 0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
      maxDiff = std::max(maxDiff, std::abs(static_cast<int>(fast.data[i]) - slow.data[i]));
    CHECK(maxDiff <= 1);
  }
}

TEST_CASE("gaussian_blur rejects non-positive sigma") {
  GrayImage img(8, 8);
  CHECK_THROWS_AS(movo::gaussian_blur(img, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(movo::gaussian_blur(img, -1.0), std::invalid_argument);
}
