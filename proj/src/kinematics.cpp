#include "selfcal/kinematics.hpp"

#include <stdexcept>

namespace selfcal {

KinematicChain::KinematicChain(std::vector<JointSpec> joints,
                               PoseSE3 tool_transform)
    : joints_(std::move(joints)), tool_transform_(std::move(tool_transform)) {
  if (joints_.empty()) throw std::invalid_argument("chain: N must be >= 1");
  for (const auto& j : joints_) {
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("chain: joint axis must have unit norm");
    }
  }
}

namespace {

PoseSE3 joint_motion(const JointSpec& j, double qi) {
  if (j.kind == JointKind::Revolute) {
    return PoseSE3(Eigen::AngleAxisd(qi, j.axis).toRotationMatrix(),
                   Vec3::Zero());
  }
  return PoseSE3(Mat3::Identity(), qi * j.axis);
}

}  // namespace

PoseSE3 KinematicChain::forward(const JointConfig& q) const {
  if (q.size() != dof()) {
    throw std::invalid_argument("forward: configuration dimension mismatch");
  }
  PoseSE3 t;
  for (int i = 0; i < dof(); i++) {
    t = t * joints_[i].fixed_transform * joint_motion(joints_[i], q[i]);
  }
  return t * tool_transform_;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> KinematicChain::jacobian(
    const JointConfig& q) const {
  if (q.size() != dof()) {
    throw std::invalid_argument("jacobian: configuration dimension mismatch");
  }
  // Frame origins and joint axes in the base frame, taken after each joint's
  // fixed transform (where the axis is defined).
  std::vector<Vec3> axes(dof()), origins(dof());
  PoseSE3 t;
  for (int i = 0; i < dof(); i++) {
    t = t * joints_[i].fixed_transform;
    axes[i] = t.rotate(joints_[i].axis);
    origins[i] = t.translation();
    t = t * joint_motion(joints_[i], q[i]);
  }
  Vec3 pe = (t * tool_transform_).translation();

  Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, dof());
  for (int i = 0; i < dof(); i++) {
    if (joints_[i].kind == JointKind::Revolute) {
      jac.col(i).head<3>() = axes[i].cross(pe - origins[i]);
      jac.col(i).tail<3>() = axes[i];
    } else {
      jac.col(i).head<3>() = axes[i];
      jac.col(i).tail<3>() = Vec3::Zero();
    }
  }
  return jac;
}

namespace {

Vec6 pose_error(const KinematicChain& chain, const JointConfig& q,
                const PoseSE3& target) {
  PoseSE3 cur = chain.forward(q);
  Vec6 e;
  e.head<3>() = target.translation() - cur.translation();
  Eigen::AngleAxisd aa(target.rotation() * cur.rotation().transpose());
  e.tail<3>() = aa.angle() * aa.axis();
  return e;
}

}  // namespace

IkResult inverse_reach(const KinematicChain& chain, const PoseSE3& target,
                       Rng& rng, const IkParams& params,
                       const JointConfig* warm_start) {
  const int n = chain.dof();
  std::uniform_real_distribution<double> uni(-params.restart_span,
                                             params.restart_span);
  JointConfig q = (warm_start && warm_start->size() == n)
                      ? *warm_start
                      : JointConfig::Zero(n);

  for (int attempt = 0; attempt <= params.max_restarts; attempt++) {
    if (attempt > 0) {
      for (int i = 0; i < n; i++) q[i] = uni(rng);
    }
    for (int it = 0; it < params.max_iterations; it++) {
      Vec6 e = pose_error(chain, q, target);
      if (e.head<3>().norm() < params.pos_tol &&
          e.tail<3>().norm() < params.ori_tol) {
        IkResult res;
        res.reachable = true;
        res.q = q;
        return res;
      }
      auto jac = chain.jacobian(q);
      // Damped least squares: dq = J^T (J J^T + lambda^2 I)^-1 e
      Eigen::Matrix<double, 6, 6> jjt =
          jac * jac.transpose() +
          params.damping * params.damping * Eigen::Matrix<double, 6, 6>::Identity();
      JointConfig dq = jac.transpose() * jjt.ldlt().solve(e);
      // Step limit keeps the iteration from overshooting far from the target.
      double norm = dq.norm();
      if (norm > 0.5) dq *= 0.5 / norm;
      q += dq;
    }
  }
  return IkResult{};
}

}  // namespace selfcal
