#pragma once

#include <optional>
#include <vector>

#include "selfcal/pose.hpp"

namespace selfcal {

enum class JointKind { Revolute, Prismatic };

struct JointSpec {
  Vec3 axis = Vec3::UnitZ();   // unit norm, in the frame after fixed_transform
  JointKind kind = JointKind::Revolute;
  PoseSE3 fixed_transform;     // applied before the joint motion
};

using JointConfig = Eigen::VectorXd;

// Serial chain: base-to-end-effector transform is the ordered product of
// fixed_transform * joint_motion over all joints, followed by tool_transform.
class KinematicChain {
 public:
  KinematicChain(std::vector<JointSpec> joints,
                 PoseSE3 tool_transform = PoseSE3::identity());

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const PoseSE3& tool_transform() const { return tool_transform_; }

  PoseSE3 forward(const JointConfig& q) const;

  // 6xN geometric Jacobian at q (rows: linear velocity, angular velocity of
  // the end-effector expressed in the base frame).
  Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const JointConfig& q) const;

 private:
  std::vector<JointSpec> joints_;
  PoseSE3 tool_transform_;
};

struct IkParams {
  double damping = 1e-3;
  int max_iterations = 200;
  int max_restarts = 5;
  double pos_tol = 1e-4;   // meters
  double ori_tol = 1e-3;   // radians
  double restart_span = M_PI;  // uniform restart range per revolute joint
};

struct IkResult {
  bool reachable = false;
  JointConfig q;
};

// Damped-least-squares IK with seeded random restarts. "Unreachable" is a
// normal outcome once the iteration budget is exhausted.
IkResult inverse_reach(const KinematicChain& chain, const PoseSE3& target,
                       Rng& rng, const IkParams& params = {},
                       const JointConfig* warm_start = nullptr);

}  // namespace selfcal
