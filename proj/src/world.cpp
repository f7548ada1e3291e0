#include "selfcal/world.hpp"

#include <stdexcept>

namespace selfcal {

void NoiseConfig::validate() const {
  if (false_negative_rate < 0.0 || false_negative_rate >= 1.0 ||
      false_positive_rate < 0.0 || false_positive_rate >= 1.0) {
    throw std::invalid_argument("false event rates must be in [0, 1)");
  }
  if (step_interval <= 0.0) {
    throw std::invalid_argument("step_interval must be > 0");
  }
}

double WorldState::true_distance(const PoseSE3& ee_world,
                                 const EndEffectorCloud& cloud) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : cloud.points) {
    best = std::min(best, env.analytic_sdf(ee_world.apply(p)));
  }
  return best;
}

WorldState make_world(EnvironmentModel env, const Pose6& nominal,
                      const Vec6& error_interval, const NoiseConfig& noise,
                      std::uint64_t seed) {
  env.validate();
  noise.validate();
  Rng rng = make_rng(seed, 0x776f726cULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec6 v = nominal.to_vec();
  for (int i = 0; i < 6; i++) v[i] += error_interval[i] * u(rng);
  WorldState world;
  world.true_pose6 = Pose6::from_vec(v);
  world.true_pose = world.true_pose6.to_se3();
  world.env = std::move(env);
  world.noise = noise;
  return world;
}

namespace {

struct EventRecorder {
  const WorldState& world;
  const KinematicChain& chain;
  Rng& rng;
  std::vector<ContactEvent> events;
  JointConfig last_q;
  std::normal_distribution<double> qn{0.0, 1.0};
  std::uniform_real_distribution<double> u01{0.0, 1.0};

  // Solves for the configuration reaching ee_world and records the event with
  // joint noise and contact-flag flips. Returns false on IK failure.
  bool record(const PoseSE3& ee_world, bool contact) {
    IkParams p;
    IkResult ik = inverse_reach(chain, world.true_pose.inverse() * ee_world,
                                rng, p, last_q.size() ? &last_q : nullptr);
    if (!ik.reachable) return false;
    last_q = ik.q;
    JointConfig noisy = ik.q;
    for (int i = 0; i < noisy.size(); i++) {
      noisy[i] += world.noise.q_noise_sd * qn(rng);
    }
    bool c = contact;
    if (c && u01(rng) < world.noise.false_negative_rate) c = false;
    if (!c && u01(rng) < world.noise.false_positive_rate) c = true;
    events.push_back({noisy, c});
    return true;
  }
};

}  // namespace

Observation execute_action(const WorldState& world, const SelectedAction& action,
                           const KinematicChain& chain,
                           const EndEffectorCloud& cloud, Rng& rng) {
  const NoiseConfig& nz = world.noise;
  EventRecorder rec{world, chain, rng};
  rec.last_q = action.approach;

  // True starting pose of the end-effector as commanded.
  PoseSE3 ee = world.true_pose * chain.forward(action.approach);
  const Mat3 ee_rot = ee.rotation();
  Vec3 descend_dir = ee_rot.col(2);  // tool axis, points into the surface

  // Touch phase: 1 mm descent until the cloud reaches the contact threshold.
  const double descent_step = 1e-3;

  // Guarded approach: the pre-touch pose was planned from the current
  // estimate, so with a large base error it can already lie inside the true
  // surface. A compliant robot would have stopped at first contact on the way
  // in, never reaching that pose — back off along the approach axis until the
  // cloud is clear, then descend normally so the recorded contact sits at the
  // surface.
  // The back-off budget is generous: when the planned pose lies inside a
  // large solid (e.g. a horizontal probe aimed at a leg but planned into the
  // tabletop), the retreat must traverse that solid's full extent so the
  // subsequent descent records the contact on its actual outer face.
  const double max_backoff = 2.0;
  double backed = 0.0;
  while (world.true_distance(ee, cloud) <= nz.contact_threshold &&
         backed < max_backoff) {
    ee = PoseSE3(ee_rot, ee.translation() - descent_step * descend_dir);
    backed += descent_step;
  }
  if (world.true_distance(ee, cloud) <= nz.contact_threshold) {
    // Still buried after the full back-off budget (pathological geometry):
    // the move is not executable, so the probe aborts without events.
    return Observation{};
  }

  double traveled = 0.0;
  bool touched = world.true_distance(ee, cloud) <= nz.contact_threshold;
  std::vector<PoseSE3> miss_poses;
  double since_event = 0.0;
  while (!touched && traveled < nz.max_descent) {
    ee = PoseSE3(ee_rot, ee.translation() + descent_step * descend_dir);
    traveled += descent_step;
    since_event += descent_step;
    if (since_event >= nz.step_interval - 1e-12) {
      miss_poses.push_back(ee);
      since_event = 0.0;
    }
    touched = world.true_distance(ee, cloud) <= nz.contact_threshold;
  }
  if (!touched) {
    // Total miss: the descent trace itself is the observation.
    if (miss_poses.empty()) miss_poses.push_back(ee);
    for (const auto& pose : miss_poses) {
      if (!rec.record(pose, false)) break;
    }
    return Observation{std::move(rec.events)};
  }

  if (!rec.record(ee, true)) return Observation{std::move(rec.events)};

  // Slide phase: seeded tangent direction, re-projected against the local
  // surface normal every step.
  Vec3 tangent;
  {
    std::uniform_real_distribution<double> uphi(0.0, 2.0 * M_PI);
    double phi = uphi(rng);
    Vec3 horizontal(std::cos(phi), std::sin(phi), 0.0);
    Vec3 n = action.contact.n;
    tangent = horizontal - horizontal.dot(n) * n;
    if (tangent.norm() < 1e-6) tangent = ee_rot.col(0);
    tangent.normalize();
  }

  auto project_onto_surface = [&](PoseSE3& pose) {
    // Compliance along the tool axis: seek true distance in
    // [-contact_threshold, 0] within the lost-contact budget.
    double lo = -nz.lost_contact_depth, hi = nz.lost_contact_depth;
    double d0 = world.true_distance(pose, cloud);
    if (d0 >= -nz.contact_threshold && d0 <= 0.0) return true;
    // March to bracket the surface, then bisect.
    auto at = [&](double s) {
      return world.true_distance(
          PoseSE3(pose.rotation(), pose.translation() + s * descend_dir),
          cloud);
    };
    double dir = d0 > 0.0 ? 1.0 : -1.0;
    double s_prev = 0.0, d_prev = d0;
    double s = 0.0;
    bool bracketed = false;
    while (std::abs(s) < (dir > 0 ? hi : -lo)) {
      s += dir * 1e-3;
      double d = at(s);
      if ((d_prev > 0.0) != (d > 0.0)) {
        bracketed = true;
        break;
      }
      s_prev = s;
      d_prev = d;
    }
    if (!bracketed) return false;
    double a = s_prev, b = s;
    for (int it = 0; it < 30; it++) {
      double mid = 0.5 * (a + b);
      double d = at(mid);
      if (d >= -nz.contact_threshold && d <= 0.0) {
        a = b = mid;
        break;
      }
      if ((at(a) > 0.0) == (d > 0.0)) {
        a = mid;
      } else {
        b = mid;
      }
    }
    double s_final = 0.5 * (a + b);
    pose = PoseSE3(pose.rotation(),
                   pose.translation() + s_final * descend_dir);
    double d = world.true_distance(pose, cloud);
    return d >= -nz.lost_contact_depth && d <= nz.contact_threshold + 1e-9;
  };

  double slid = 0.0;
  while (slid + nz.step_interval <= nz.max_slide + 1e-12) {
    // Re-project the tangent against the local surface normal so curved
    // surfaces are followed.
    Vec3 grad = world.env.sdf_gradient(ee.translation());
    if (grad.norm() > 1e-9) {
      Vec3 n = grad.normalized();
      Vec3 t = tangent - tangent.dot(n) * n;
      if (t.norm() > 1e-6) tangent = t.normalized();
    }
    PoseSE3 next(ee_rot, ee.translation() + nz.step_interval * tangent);
    bool in_contact = project_onto_surface(next);
    slid += nz.step_interval;
    if (!in_contact) {
      // Surface fell away: record the lost-contact step and stop.
      rec.record(next, false);
      break;
    }
    ee = next;
    if (!rec.record(ee, true)) break;  // IK failure truncates the slide
  }
  return Observation{std::move(rec.events)};
}

}  // namespace selfcal
