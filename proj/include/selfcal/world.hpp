#pragma once

#include "selfcal/action.hpp"
#include "selfcal/filter.hpp"

namespace selfcal {

struct NoiseConfig {
  double contact_threshold = 0.002;  // penetration depth that trips detection
  double q_noise_sd = 1e-3;          // per-joint configuration noise
  double false_negative_rate = 0.02;
  double false_positive_rate = 0.02;
  double step_interval = 0.01;       // sliding sample spacing, meters
  double max_slide = 0.15;
  double max_descent = 0.25;         // touch-phase travel budget
  double lost_contact_depth = 0.02;  // surface falls away beyond this: lost

  void validate() const;
};

// Ground-truth world. The filter never sees true_pose or the exact distance
// field; it only receives Observation values.
struct WorldState {
  PoseSE3 true_pose;   // robot base in the world frame
  Pose6 true_pose6;
  EnvironmentModel env;
  NoiseConfig noise;

  // Exact distance from the end-effector cloud to the environment surface.
  double true_distance(const PoseSE3& ee_world,
                       const EndEffectorCloud& cloud) const;
};

// Draws the true pose as nominal + U(-e, e) per dimension.
WorldState make_world(EnvironmentModel env, const Pose6& nominal,
                      const Vec6& error_interval, const NoiseConfig& noise,
                      std::uint64_t seed);

// Simulates one compliant touch-and-slide action: descend along the tool
// axis until contact (or budget), then slide along a seeded tangent with
// re-projection onto the surface, recording (q, c) events at fixed travel
// intervals. Joint noise and false contact rates are applied per event.
Observation execute_action(const WorldState& world, const SelectedAction& action,
                           const KinematicChain& chain,
                           const EndEffectorCloud& cloud, Rng& rng);

}  // namespace selfcal
