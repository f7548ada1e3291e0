#include "selfcal/pose.hpp"

#include <stdexcept>

namespace selfcal {

PoseSE3::PoseSE3(const Mat3& rot, const Vec3& trans)
    : rot_(rot), trans_(trans) {
  if ((rot * rot.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(rot.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("rotation is not orthonormal with det +1");
  }
}

PoseSE3 PoseSE3::rot_x(double a) {
  return PoseSE3(Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(),
                 Vec3::Zero());
}
PoseSE3 PoseSE3::rot_y(double a) {
  return PoseSE3(Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(),
                 Vec3::Zero());
}
PoseSE3 PoseSE3::rot_z(double a) {
  return PoseSE3(Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(),
                 Vec3::Zero());
}

PoseSE3 Pose6::to_se3() const {
  Mat3 r = (Eigen::AngleAxisd(roll, Vec3::UnitX()) *
            Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
            Eigen::AngleAxisd(yaw, Vec3::UnitZ()))
               .toRotationMatrix();
  return PoseSE3(r, Vec3(x, y, z));
}

// R = Rx(roll) * Ry(pitch) * Rz(yaw):
//   R(0,2) = sin(pitch)
//   R(0,0) = cos(pitch)cos(yaw),  R(0,1) = -cos(pitch)sin(yaw)
//   R(2,2) = cos(roll)cos(pitch), R(1,2) = -sin(roll)cos(pitch)
Pose6 PoseSE3::to_pose6() const {
  const Mat3& r = rot_;
  double sp = std::clamp(r(0, 2), -1.0, 1.0);
  double pitch = std::asin(sp);
  double roll, yaw;
  if (std::abs(sp) < 1.0 - 1e-12) {
    roll = std::atan2(-r(1, 2), r(2, 2));
    yaw = std::atan2(-r(0, 1), r(0, 0));
  } else {
    // Gimbal lock: only roll +/- yaw is determined; put it all in roll.
    roll = std::atan2(r(2, 1), r(1, 1));
    yaw = 0.0;
  }
  return Pose6(trans_[0], trans_[1], trans_[2], roll, pitch, yaw);
}

double rotation_angle(const Mat3& a, const Mat3& b) {
  double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Pose6 perturb_with(const Pose6& p, std::span<const double, 6> sigma,
                   std::span<const double, 6> unit_noise) {
  for (double s : sigma) {
    if (s <= 0.0) throw std::invalid_argument("perturb: sigma must be > 0");
  }
  return Pose6(p.x + sigma[0] * unit_noise[0], p.y + sigma[1] * unit_noise[1],
               p.z + sigma[2] * unit_noise[2],
               p.roll + sigma[3] * unit_noise[3],
               p.pitch + sigma[4] * unit_noise[4],
               p.yaw + sigma[5] * unit_noise[5]);
}

Pose6 perturb(const Pose6& p, std::span<const double, 6> sigma, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::array<double, 6> u;
  for (auto& v : u) v = n(rng);
  return perturb_with(p, sigma, u);
}

Pose6 perturb(const Pose6& p, double sigma, Rng& rng) {
  std::array<double, 6> s;
  s.fill(sigma);
  return perturb(p, std::span<const double, 6>(s), rng);
}

namespace {

void check_particles(std::span<const WeightedPose> particles) {
  if (particles.empty()) {
    throw std::invalid_argument("weighted statistics: empty particle set");
  }
  double sum = 0.0;
  for (const auto& wp : particles) sum += wp.weight;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("weighted statistics: weights not normalized");
  }
}

}  // namespace

Pose6 weighted_mean(std::span<const WeightedPose> particles) {
  check_particles(particles);
  Vec3 lin = Vec3::Zero();
  Vec3 sin_sum = Vec3::Zero(), cos_sum = Vec3::Zero();
  for (const auto& wp : particles) {
    const Pose6& p = wp.pose;
    double w = wp.weight;
    lin += w * Vec3(p.x, p.y, p.z);
    Vec3 ang(p.roll, p.pitch, p.yaw);
    for (int i = 0; i < 3; i++) {
      sin_sum[i] += w * std::sin(ang[i]);
      cos_sum[i] += w * std::cos(ang[i]);
    }
  }
  return Pose6(lin[0], lin[1], lin[2], std::atan2(sin_sum[0], cos_sum[0]),
               std::atan2(sin_sum[1], cos_sum[1]),
               std::atan2(sin_sum[2], cos_sum[2]));
}

Vec6 dimwise_variance(std::span<const WeightedPose> particles) {
  Pose6 mean = weighted_mean(particles);
  Vec6 mv = mean.to_vec();
  Vec6 var = Vec6::Zero();
  for (const auto& wp : particles) {
    Vec6 v = wp.pose.to_vec();
    for (int i = 0; i < 3; i++) {
      double d = v[i] - mv[i];
      var[i] += wp.weight * d * d;
    }
    for (int i = 3; i < 6; i++) {
      double d = wrap_angle(v[i] - mv[i]);
      var[i] += wp.weight * d * d;
    }
  }
  return var;
}

}  // namespace selfcal
