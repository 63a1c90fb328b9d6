#ifndef MOVO_GEOMETRY_HPP
#define MOVO_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace movo {

/// SE(3) rigid transform stored as unit quaternion + translation.
/// Canonical form keeps qw >= 0.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose() = default;
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) : rotation(q), translation(t) {
    canonicalize();
  }

  static Pose identity() { return Pose(); }

  void canonicalize() {
    rotation.normalize();
    if (rotation.w() < 0) rotation.coeffs() = -rotation.coeffs();
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

struct TrajectoryEntry {
  double timestamp = 0.0;
  Pose pose;
};

/// Time-sorted pose sequence with strictly increasing timestamps.
struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  out.canonicalize();
  return out;
}

inline Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.conjugate();
  out.translation = -(out.rotation * p.translation);
  out.canonicalize();
  return out;
}

/// Rotation magnitude in degrees, in [0, 180].
inline double rotation_angle(const Pose& p) {
  double qw = std::min(1.0, std::abs(p.rotation.w()));
  return 2.0 * std::acos(qw) * 180.0 / M_PI;
}

/// Closed-form least-squares rigid transform (no scale) mapping src onto dst,
/// Kabsch/Horn with proper-rotation enforcement.
inline Pose rigid_align(const std::vector<Eigen::Vector3d>& src,
                        const std::vector<Eigen::Vector3d>& dst) {
  if (src.size() != dst.size()) throw std::invalid_argument("rigid_align: size mismatch");
  if (src.size() < 3) throw std::invalid_argument("rigid_align: need at least 3 points");
  const std::size_t n = src.size();

  Eigen::Vector3d srcMean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dstMean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    srcMean += src[i];
    dstMean += dst[i];
  }
  srcMean /= static_cast<double>(n);
  dstMean /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double srcSpread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d a = src[i] - srcMean;
    Eigen::Vector3d b = dst[i] - dstMean;
    cov += b * a.transpose();
    srcSpread += a.squaredNorm();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Degenerate when source points are (nearly) collinear: covariance rank < 2.
  const auto& sv = svd.singularValues();
  double scaleRef = std::max(sv(0), 1e-30);
  if (sv(1) / scaleRef < 1e-9 && srcSpread > 0)
    throw std::invalid_argument("rigid_align: degenerate (collinear) point configuration");
  if (srcSpread == 0) throw std::invalid_argument("rigid_align: degenerate (coincident) points");

  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  if ((U * V.transpose()).determinant() < 0) S(2, 2) = -1.0;
  Eigen::Matrix3d R = U * S * V.transpose();

  Pose out;
  out.rotation = Eigen::Quaterniond(R);
  out.translation = dstMean - R * srcMean;
  out.canonicalize();
  return out;
}

}  // namespace movo

#endif  // MOVO_GEOMETRY_HPP
