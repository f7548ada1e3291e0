#pragma once

#include <vector>

#include "selfcal/geometry.hpp"
#include "selfcal/kinematics.hpp"

namespace selfcal {

struct ContactCandidate {
  Vec3 r;         // surface location, world frame
  Vec3 n;         // unit outward normal
  int segment_id = 0;
};

// Reference contacts of all previously executed actions, append-only.
struct ActionHistory {
  std::vector<ContactCandidate> executed;
};

// Sentinel sparsity when no actions have been executed yet; larger than any
// reachable angle.
inline constexpr double kSparsitySentinel = M_PI + 1.0;

// Area-weighted surface samples across segments (D total), analytic normals
// for primitives, face normals for meshes. Downward-facing surfaces
// (normal.z <= -0.2) are excluded to keep candidates approachable.
std::vector<ContactCandidate> sample_candidates(const EnvironmentModel& env,
                                                const SdfGrid& grid, int total,
                                                std::uint64_t seed);

// Minimum angle between the candidate normal and every executed reference
// contact normal.
double local_sparsity(const ContactCandidate& candidate,
                      const ActionHistory& history);

struct SelectedAction {
  ContactCandidate contact;
  JointConfig approach;       // pre-touch configuration
  PoseSE3 pretouch_pose;      // base-frame end-effector target it solves
};

struct ActionSelectParams {
  double pretouch_offset = 0.03;   // meters along the contact normal
  double segment_switch_prob = 0.1;
  IkParams ik;
};

// Pick a segment at random, walk its candidates in descending sparsity order
// (ties by candidate index), and return the first one whose pre-touch pose is
// reachable. Exhausted segments may re-draw with segment_switch_prob; throws
// when every segment is exhausted. base_guess is the planner's current belief
// of the base pose, used to express world-frame targets in the base frame.
SelectedAction select_action(const std::vector<ContactCandidate>& candidates,
                             const ActionHistory& history,
                             const KinematicChain& chain,
                             const PoseSE3& base_guess, Rng& rng,
                             const ActionSelectParams& params = {});

// Base-frame pre-touch target for a candidate: offset along the normal, tool
// z-axis anti-parallel to it, deterministic in-plane orientation.
PoseSE3 pretouch_target(const ContactCandidate& candidate,
                        const PoseSE3& base_guess, double offset);

}  // namespace selfcal
