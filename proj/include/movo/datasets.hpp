#ifndef MOVO_DATASETS_HPP
#define MOVO_DATASETS_HPP

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "movo/crf.hpp"
#include "movo/geometry.hpp"
#include "movo/image.hpp"

namespace movo {

struct TimedPath {
  double timestamp = 0;
  std::string path;
};

struct AssocPair {
  double tRgb = 0;
  double tDepth = 0;
  std::string rgbPath;
  std::string depthPath;
};

/// Parses a TUM-style list: "timestamp path" per line, '#' comments and blank
/// lines skipped.
inline std::vector<TimedPath> parse_tum_list(const std::string& text) {
  std::vector<TimedPath> out;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tsTok, pathTok, extra;
    ls >> tsTok >> pathTok;
    if (pathTok.empty() || (ls >> extra))
      throw std::runtime_error("parse_tum_list: malformed line " + std::to_string(lineNo));
    std::size_t consumed = 0;
    double ts;
    try {
      ts = std::stod(tsTok, &consumed);
    } catch (const std::exception&) {
      throw std::runtime_error("parse_tum_list: bad timestamp at line " + std::to_string(lineNo));
    }
    if (consumed != tsTok.size())
      throw std::runtime_error("parse_tum_list: bad timestamp at line " + std::to_string(lineNo));
    out.push_back({ts, pathTok});
  }
  return out;
}

inline std::vector<TimedPath> parse_tum_list_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_tum_list(ss.str());
}

/// Greedy timestamp association: candidate pairs with |tA - (tB + offset)| <
/// maxDifference, taken in ascending difference, each timestamp used once.
inline std::vector<AssocPair> associate(const std::vector<TimedPath>& listA,
                                        const std::vector<TimedPath>& listB,
                                        double maxDifference, double offset = 0.0) {
  if (maxDifference <= 0) throw std::invalid_argument("associate: maxDifference must be > 0");
  struct Cand {
    double diff;
    std::size_t a, b;
  };
  std::vector<Cand> cands;
  for (std::size_t a = 0; a < listA.size(); ++a)
    for (std::size_t b = 0; b < listB.size(); ++b) {
      double diff = std::abs(listA[a].timestamp - (listB[b].timestamp + offset));
      if (diff < maxDifference) cands.push_back({diff, a, b});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.diff != y.diff) return x.diff < y.diff;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  std::vector<char> usedA(listA.size(), 0), usedB(listB.size(), 0);
  std::vector<AssocPair> out;
  for (const Cand& c : cands) {
    if (usedA[c.a] || usedB[c.b]) continue;
    usedA[c.a] = 1;
    usedB[c.b] = 1;
    out.push_back({listA[c.a].timestamp, listB[c.b].timestamp, listA[c.a].path, listB[c.b].path});
  }
  std::sort(out.begin(), out.end(),
            [](const AssocPair& x, const AssocPair& y) { return x.tRgb < y.tRgb; });
  return out;
}

// ---------------------------------------------------------------------------
// PNM (PGM/PPM) codecs; the canonical codec-independent test format.
// ---------------------------------------------------------------------------

namespace detail {

inline void pnm_skip_ws(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline int pnm_read_int(std::istream& in, const std::string& path) {
  pnm_skip_ws(in);
  int v;
  if (!(in >> v)) throw std::runtime_error("truncated PNM header in " + path);
  return v;
}

struct PnmHeader {
  std::string magic;
  int width, height, maxval;
};

inline PnmHeader pnm_read_header(std::istream& in, const std::string& path) {
  PnmHeader h;
  char m[2];
  if (!in.read(m, 2)) throw std::runtime_error("truncated PNM header in " + path);
  h.magic.assign(m, 2);
  if (h.magic != "P5" && h.magic != "P6")
    throw std::runtime_error("unsupported PNM magic in " + path);
  h.width = pnm_read_int(in, path);
  h.height = pnm_read_int(in, path);
  h.maxval = pnm_read_int(in, path);
  in.get();  // single whitespace before raster
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535)
    throw std::runtime_error("bad PNM header in " + path);
  return h;
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline GrayImage load_pgm8(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto h = detail::pnm_read_header(in, path);
  if (h.magic != "P5" || h.maxval > 255)
    throw std::runtime_error("expected 8-bit PGM: " + path);
  GrayImage img(h.width, h.height);
  if (!in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size())))
    throw std::runtime_error("truncated PGM raster in " + path);
  return img;
}

inline void save_pgm8(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

inline std::vector<std::uint16_t> load_pgm16(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto h = detail::pnm_read_header(in, path);
  if (h.magic != "P5" || h.maxval < 256)
    throw std::runtime_error("expected 16-bit PGM: " + path);
  width = h.width;
  height = h.height;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(h.width) * h.height * 2);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw std::runtime_error("truncated PGM raster in " + path);
  std::vector<std::uint16_t> out(static_cast<std::size_t>(h.width) * h.height);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint16_t>((raw[i * 2] << 8) | raw[i * 2 + 1]);  // big-endian per PNM
  return out;
}

inline void save_pgm16(const std::vector<std::uint16_t>& data, int width, int height,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<std::uint8_t> raw(data.size() * 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    raw[i * 2] = static_cast<std::uint8_t>(data[i] >> 8);
    raw[i * 2 + 1] = static_cast<std::uint8_t>(data[i] & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

inline ColorImage load_ppm8(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto h = detail::pnm_read_header(in, path);
  if (h.magic != "P6" || h.maxval > 255)
    throw std::runtime_error("expected 8-bit PPM: " + path);
  ColorImage img(h.width, h.height);
  if (!in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size())))
    throw std::runtime_error("truncated PPM raster in " + path);
  return img;
}

inline void save_ppm8(const ColorImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

// ---------------------------------------------------------------------------
// PNG codecs (libpng).
// ---------------------------------------------------------------------------

namespace detail {

struct PngRaw {
  int width = 0, height = 0, channels = 0, bitDepth = 0;
  std::vector<std::uint16_t> data;  // channel-interleaved
};

inline PngRaw load_png_raw(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("failed to decode PNG " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int bitDepth = png_get_bit_depth(png, info);
  int colorType = png_get_color_type(png, info);

  if (colorType == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colorType == PNG_COLOR_TYPE_GRAY && bitDepth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  bitDepth = png_get_bit_depth(png, info);
  int channels = png_get_channels(png, info);
  std::size_t rowBytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> raster(rowBytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raster.data() + y * rowBytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  PngRaw out;
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = channels;
  out.bitDepth = bitDepth;
  out.data.resize(static_cast<std::size_t>(w) * h * channels);
  if (bitDepth == 16) {
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] = static_cast<std::uint16_t>((raster[i * 2] << 8) | raster[i * 2 + 1]);
  } else {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = raster[i];
  }
  return out;
}

inline void save_png_raw(const std::string& path, int width, int height, int channels,
                         int bitDepth, const std::vector<std::uint16_t>& data) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("failed to encode PNG " + path);
  }
  png_init_io(png, fp);
  int colorType = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, width, height, bitDepth, colorType, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::size_t rowValues = static_cast<std::size_t>(width) * channels;
  if (bitDepth == 16) {
    std::vector<std::uint8_t> row(rowValues * 2);
    for (int y = 0; y < height; ++y) {
      for (std::size_t i = 0; i < rowValues; ++i) {
        std::uint16_t v = data[static_cast<std::size_t>(y) * rowValues + i];
        row[i * 2] = static_cast<std::uint8_t>(v >> 8);
        row[i * 2 + 1] = static_cast<std::uint8_t>(v & 0xFF);
      }
      png_write_row(png, row.data());
    }
  } else {
    std::vector<std::uint8_t> row(rowValues);
    for (int y = 0; y < height; ++y) {
      for (std::size_t i = 0; i < rowValues; ++i)
        row[i] = static_cast<std::uint8_t>(data[static_cast<std::size_t>(y) * rowValues + i]);
      png_write_row(png, row.data());
    }
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Format-dispatching image loaders.
// ---------------------------------------------------------------------------

inline GrayImage load_gray(const std::string& path) {
  if (detail::has_suffix(path, ".pgm")) return load_pgm8(path);
  if (detail::has_suffix(path, ".ppm")) return to_gray(load_ppm8(path));
  auto raw = detail::load_png_raw(path);
  if (raw.bitDepth != 8) throw std::runtime_error("expected 8-bit image: " + path);
  if (raw.channels == 3) {
    ColorImage c(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.data.size(); ++i)
      c.data[i] = static_cast<std::uint8_t>(raw.data[i]);
    return to_gray(c);
  }
  GrayImage img(raw.width, raw.height);
  for (std::size_t i = 0; i < raw.data.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(raw.data[i]);
  return img;
}

inline ColorImage load_color(const std::string& path) {
  if (detail::has_suffix(path, ".ppm")) return load_ppm8(path);
  if (detail::has_suffix(path, ".pgm")) {
    GrayImage g = load_pgm8(path);
    ColorImage c(g.width, g.height);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      c.data[i * 3] = c.data[i * 3 + 1] = c.data[i * 3 + 2] = g.data[i];
    }
    return c;
  }
  auto raw = detail::load_png_raw(path);
  if (raw.bitDepth != 8) throw std::runtime_error("expected 8-bit image: " + path);
  ColorImage c(raw.width, raw.height);
  if (raw.channels == 3) {
    for (std::size_t i = 0; i < raw.data.size(); ++i)
      c.data[i] = static_cast<std::uint8_t>(raw.data[i]);
  } else {
    for (int i = 0; i < raw.width * raw.height; ++i)
      c.data[i * 3] = c.data[i * 3 + 1] = c.data[i * 3 + 2] =
          static_cast<std::uint8_t>(raw.data[i]);
  }
  return c;
}

inline void save_color(const ColorImage& img, const std::string& path) {
  if (detail::has_suffix(path, ".ppm")) {
    save_ppm8(img, path);
    return;
  }
  std::vector<std::uint16_t> data(img.data.begin(), img.data.end());
  detail::save_png_raw(path, img.width, img.height, 3, 8, data);
}

/// 16-bit depth image to meters: meters = raw / depthFactor, raw 0 stays 0.
inline DepthImage load_depth(const std::string& path, double depthFactor) {
  if (depthFactor <= 0) throw std::invalid_argument("load_depth: depthFactor must be > 0");
  int w = 0, h = 0;
  std::vector<std::uint16_t> raw;
  if (detail::has_suffix(path, ".pgm")) {
    raw = load_pgm16(path, w, h);
  } else {
    auto png = detail::load_png_raw(path);
    if (png.bitDepth != 16 || png.channels != 1)
      throw std::runtime_error("expected 16-bit single-channel depth image: " + path);
    w = png.width;
    h = png.height;
    raw = std::move(png.data);
  }
  DepthImage out(w, h);
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.data[i] = raw[i] == 0 ? 0.0 : static_cast<double>(raw[i]) / depthFactor;
  return out;
}

inline void save_depth(const DepthImage& img, double depthFactor, const std::string& path) {
  std::vector<std::uint16_t> raw(img.data.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double v = img.data[i] * depthFactor;
    raw[i] = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0l, 65535l));
  }
  if (detail::has_suffix(path, ".pgm"))
    save_pgm16(raw, img.width, img.height, path);
  else
    detail::save_png_raw(path, img.width, img.height, 1, 16, raw);
}

/// Mask image: 0 = static, 255 = movable; any nonzero loads as 1.
inline BinaryMask load_mask(const std::string& path) {
  GrayImage img = load_gray(path);
  BinaryMask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) mask.data[i] = img.data[i] ? 1 : 0;
  return mask;
}

inline void save_mask(const BinaryMask& mask, const std::string& path) {
  GrayImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.data.size(); ++i) img.data[i] = mask.data[i] ? 255 : 0;
  if (detail::has_suffix(path, ".pgm")) {
    save_pgm8(img, path);
  } else {
    std::vector<std::uint16_t> data(img.data.begin(), img.data.end());
    detail::save_png_raw(path, img.width, img.height, 1, 8, data);
  }
}

// ---------------------------------------------------------------------------
// Trajectory file formats.
// ---------------------------------------------------------------------------

/// TUM format: "timestamp tx ty tz qx qy qz qw" per line.
inline Trajectory load_trajectory_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Trajectory traj;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double vals[8];
    for (int i = 0; i < 8; ++i)
      if (!(ls >> vals[i]))
        throw std::runtime_error(path + ": expected 8 fields at line " + std::to_string(lineNo));
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error(path + ": expected 8 fields at line " + std::to_string(lineNo));
    Eigen::Quaterniond q(vals[7], vals[4], vals[5], vals[6]);
    double norm = q.norm();
    if (std::abs(norm - 1.0) > 1e-3)
      std::cerr << "warning: " << path << " line " << lineNo
                << ": quaternion norm deviates by " << std::abs(norm - 1.0) << "\n";
    TrajectoryEntry e;
    e.timestamp = vals[0];
    e.pose = Pose(q, Eigen::Vector3d(vals[1], vals[2], vals[3]));
    traj.entries.push_back(e);
  }
  std::stable_sort(traj.entries.begin(), traj.entries.end(),
                   [](const TrajectoryEntry& a, const TrajectoryEntry& b) {
                     return a.timestamp < b.timestamp;
                   });
  // Duplicate timestamps: keep the first occurrence.
  std::vector<TrajectoryEntry> unique;
  for (const auto& e : traj.entries) {
    if (!unique.empty() && unique.back().timestamp == e.timestamp) {
      std::cerr << "warning: " << path << ": duplicate timestamp " << e.timestamp
                << ", keeping first\n";
      continue;
    }
    unique.push_back(e);
  }
  traj.entries = std::move(unique);
  return traj;
}

inline void save_trajectory_tum(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[256];
  for (const auto& e : traj.entries) {
    std::snprintf(buf, sizeof(buf), "%.6f %.7f %.7f %.7f %.7f %.7f %.7f %.7f\n", e.timestamp,
                  e.pose.translation.x(), e.pose.translation.y(), e.pose.translation.z(),
                  e.pose.rotation.x(), e.pose.rotation.y(), e.pose.rotation.z(),
                  e.pose.rotation.w());
    out << buf;
  }
}

/// KITTI format: 12 reals per line, row-major 3x4 [R|t]; timestamps are frame
/// indices.
inline Trajectory load_trajectory_kitti(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Trajectory traj;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v[12];
    for (int i = 0; i < 12; ++i)
      if (!(ls >> v[i]))
        throw std::runtime_error(path + ": expected 12 fields at line " + std::to_string(lineNo));
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error(path + ": expected 12 fields at line " + std::to_string(lineNo));
    Eigen::Matrix3d R;
    R << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    double orthoErr = (R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (orthoErr > 1e-4 || R.determinant() < 0)
      throw std::runtime_error(path + ": non-orthonormal rotation at line " +
                               std::to_string(lineNo));
    TrajectoryEntry e;
    e.timestamp = static_cast<double>(traj.entries.size());
    e.pose = Pose(Eigen::Quaterniond(R), Eigen::Vector3d(v[3], v[7], v[11]));
    traj.entries.push_back(e);
  }
  return traj;
}

inline void save_trajectory_kitti(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[512];
  for (const auto& e : traj.entries) {
    Eigen::Matrix3d R = e.pose.rotation.toRotationMatrix();
    const Eigen::Vector3d& t = e.pose.translation;
    std::snprintf(buf, sizeof(buf),
                  "%.6e %.6e %.6e %.6e %.6e %.6e %.6e %.6e %.6e %.6e %.6e %.6e\n", R(0, 0),
                  R(0, 1), R(0, 2), t.x(), R(1, 0), R(1, 1), R(1, 2), t.y(), R(2, 0), R(2, 1),
                  R(2, 2), t.z());
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// PFLD: bespoke binary soft-label field container.
// Layout: magic "PFLD"; width, height, L as u32 LE; then width*height*L f32 LE,
// pixel-major then label.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_u32le(std::istream& in, const std::string& path) {
  std::uint8_t b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated PFLD " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_u32le(std::ostream& out, std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v & 0xFF), static_cast<std::uint8_t>((v >> 8) & 0xFF),
                       static_cast<std::uint8_t>((v >> 16) & 0xFF),
                       static_cast<std::uint8_t>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

inline ProbField load_probfield(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "PFLD", 4) != 0)
    throw std::runtime_error("bad PFLD magic in " + path);
  std::uint32_t w = detail::read_u32le(in, path);
  std::uint32_t h = detail::read_u32le(in, path);
  std::uint32_t L = detail::read_u32le(in, path);
  if (w == 0 || h == 0 || L == 0) throw std::runtime_error("bad PFLD header in " + path);
  ProbField field(static_cast<int>(w), static_cast<int>(h), static_cast<int>(L));
  std::vector<std::uint8_t> raw(field.data.size() * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw std::runtime_error("truncated PFLD " + path);
  for (std::size_t i = 0; i < field.data.size(); ++i) {
    std::uint32_t bits = static_cast<std::uint32_t>(raw[i * 4]) |
                         (static_cast<std::uint32_t>(raw[i * 4 + 1]) << 8) |
                         (static_cast<std::uint32_t>(raw[i * 4 + 2]) << 16) |
                         (static_cast<std::uint32_t>(raw[i * 4 + 3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f) || f < 0.0f || f > 1.0f + 1e-3f)
      throw std::runtime_error("non-probability value in PFLD " + path);
    field.data[i] = static_cast<double>(f);
  }
  // Renormalize per pixel when sums deviate by at most 1e-3; reject beyond.
  const std::size_t n = field.numPixels();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (std::uint32_t l = 0; l < L; ++l) sum += field.data[i * L + l];
    if (std::abs(sum - 1.0) > 1e-3)
      throw std::runtime_error("PFLD pixel distribution deviates beyond tolerance in " + path);
    if (sum != 1.0 && sum > 0)
      for (std::uint32_t l = 0; l < L; ++l) field.data[i * L + l] /= sum;
  }
  return field;
}

inline void save_probfield(const ProbField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("PFLD", 4);
  detail::write_u32le(out, static_cast<std::uint32_t>(field.width));
  detail::write_u32le(out, static_cast<std::uint32_t>(field.height));
  detail::write_u32le(out, static_cast<std::uint32_t>(field.numLabels));
  std::vector<std::uint8_t> raw(field.data.size() * 4);
  for (std::size_t i = 0; i < field.data.size(); ++i) {
    float f = static_cast<float>(field.data[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    raw[i * 4] = static_cast<std::uint8_t>(bits & 0xFF);
    raw[i * 4 + 1] = static_cast<std::uint8_t>((bits >> 8) & 0xFF);
    raw[i * 4 + 2] = static_cast<std::uint8_t>((bits >> 16) & 0xFF);
    raw[i * 4 + 3] = static_cast<std::uint8_t>((bits >> 24) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace movo

#endif  // MOVO_DATASETS_HPP
