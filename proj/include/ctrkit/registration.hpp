#pragma once

// Closed-form least-squares rigid registration of matched fiducials (SVD of
// the cross-covariance, reflection-corrected).

#include <cmath>
#include <span>
#include <sstream>

#include <Eigen/Dense>

#include "ctrkit/error.hpp"
#include "ctrkit/kinematics.hpp"

namespace ctrkit {

struct RegistrationResult {
  Transform transform;  ///< image frame -> robot frame
  double rms_fiducial_error = 0.0;
};

/// Rigid T minimizing sum |T p_i - q_i|^2 for image points p and robot points q.
inline RegistrationResult register_fiducials(std::span<const Vec3> image,
                                             std::span<const Vec3> robot) {
  if (image.size() != robot.size()) {
    std::ostringstream os;
    os << "register: " << image.size() << " image fiducials vs " << robot.size()
       << " robot fiducials";
    throw Error(ErrorCode::SizeMismatch, os.str());
  }
  if (image.size() < 3)
    throw Error(ErrorCode::DegenerateConfiguration, "register: need at least 3 fiducials");

  const auto n = static_cast<Eigen::Index>(image.size());
  Eigen::Matrix3Xd p(3, n), q(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.col(i) = image[static_cast<std::size_t>(i)];
    q.col(i) = robot[static_cast<std::size_t>(i)];
  }
  const Vec3 pc = p.rowwise().mean();
  const Vec3 qc = q.rowwise().mean();
  p.colwise() -= pc;
  q.colwise() -= qc;

  // Collinear (or coincident) fiducials leave a rotation about their line free.
  const Eigen::JacobiSVD<Eigen::Matrix3d> spread(p * p.transpose());
  const auto sv = spread.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-10 * sv(0))
    throw Error(ErrorCode::DegenerateConfiguration,
                "register: fiducials are collinear or coincident");

  const Mat3 h = p * q.transpose();
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 fix = Mat3::Identity();
  fix(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixV() * fix * svd.matrixU().transpose();

  RegistrationResult out;
  out.transform = Transform(r, qc - r * pc);
  double sum = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i)
    sum += (out.transform.apply(image[i]) - robot[i]).squaredNorm();
  out.rms_fiducial_error = std::sqrt(sum / double(image.size()));
  return out;
}

}  // namespace ctrkit
