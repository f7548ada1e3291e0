#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "selfcal/rng.hpp"

namespace selfcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

class PoseSE3;

// Pose as [x, y, z, roll, pitch, yaw], intrinsic X-Y-Z Euler angles.
// Angles are kept wrapped to (-pi, pi].
struct Pose6 {
  double x = 0, y = 0, z = 0;
  double roll = 0, pitch = 0, yaw = 0;

  Pose6() = default;
  Pose6(double x_, double y_, double z_, double roll_, double pitch_,
        double yaw_)
      : x(x_), y(y_), z(z_), roll(wrap_angle(roll_)), pitch(wrap_angle(pitch_)),
        yaw(wrap_angle(yaw_)) {}

  static Pose6 from_vec(const Vec6& v) {
    return Pose6(v[0], v[1], v[2], v[3], v[4], v[5]);
  }
  Vec6 to_vec() const {
    Vec6 v;
    v << x, y, z, roll, pitch, yaw;
    return v;
  }

  PoseSE3 to_se3() const;
};

// Rigid transform with an orthonormal rotation (det +1).
class PoseSE3 {
 public:
  PoseSE3() : rot_(Mat3::Identity()), trans_(Vec3::Zero()) {}
  PoseSE3(const Mat3& rot, const Vec3& trans);

  static PoseSE3 identity() { return PoseSE3(); }
  static PoseSE3 translation(double x, double y, double z) {
    return PoseSE3(Mat3::Identity(), Vec3(x, y, z));
  }
  static PoseSE3 rot_x(double a);
  static PoseSE3 rot_y(double a);
  static PoseSE3 rot_z(double a);

  const Mat3& rotation() const { return rot_; }
  const Vec3& translation() const { return trans_; }

  Vec3 apply(const Vec3& p) const { return rot_ * p + trans_; }
  Vec3 rotate(const Vec3& v) const { return rot_ * v; }

  PoseSE3 inverse() const {
    return PoseSE3(rot_.transpose(), -(rot_.transpose() * trans_),
                   unchecked_tag{});
  }

  Pose6 to_pose6() const;

  friend PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
    return PoseSE3(a.rot_ * b.rot_, a.rot_ * b.trans_ + a.trans_,
                   unchecked_tag{});
  }
  PoseSE3 operator*(const PoseSE3& o) const { return compose(*this, o); }

 private:
  struct unchecked_tag {};
  PoseSE3(const Mat3& rot, const Vec3& trans, unchecked_tag)
      : rot_(rot), trans_(trans) {}

  Mat3 rot_;
  Vec3 trans_;
};

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);

// Geodesic angle between two rotations.
double rotation_angle(const Mat3& a, const Mat3& b);

// Add independent zero-mean Gaussian noise to every component; scalar sigma
// applies to all six dimensions, the span form scales per dimension.
Pose6 perturb(const Pose6& p, double sigma, Rng& rng);
Pose6 perturb(const Pose6& p, std::span<const double, 6> sigma, Rng& rng);

// Apply a precomputed unit-normal draw; separated out so tests can feed a
// zero stream.
Pose6 perturb_with(const Pose6& p, std::span<const double, 6> sigma,
                   std::span<const double, 6> unit_noise);

struct WeightedPose {
  Pose6 pose;
  double weight;
};

// Component-wise weighted average; angular components use the weighted
// circular mean (atan2 of weighted sin/cos sums). Weights must sum to 1
// within 1e-9.
Pose6 weighted_mean(std::span<const WeightedPose> particles);

// Weighted variance per dimension; angular dimensions use squared wrapped
// deviation from the circular mean.
Vec6 dimwise_variance(std::span<const WeightedPose> particles);

}  // namespace selfcal
