#include <doctest.h>

#include "selfcal/world.hpp"

using namespace selfcal;

namespace {

// Cartesian gantry: three prismatic joints along x, y, z with the tool
// flipped so its z-axis points straight down. Every reachable pose keeps the
// same orientation, which makes descent and slide geometry exact.
KinematicChain gantry() {
  std::vector<JointSpec> joints(3);
  joints[0].kind = JointKind::Prismatic;
  joints[0].axis = Vec3::UnitX();
  joints[1].kind = JointKind::Prismatic;
  joints[1].axis = Vec3::UnitY();
  joints[2].kind = JointKind::Prismatic;
  joints[2].axis = Vec3::UnitZ();
  return KinematicChain(joints, PoseSE3::rot_x(M_PI));
}

// Wide slab with its top face at z = 0.5.
EnvironmentModel table(double sx = 2.0, double sy = 2.0) {
  Primitive slab;
  slab.size = Vec3(sx, sy, 0.1);
  slab.pose = PoseSE3::translation(0, 0, 0.45);
  return EnvironmentModel::single_segment_per_solid({slab});
}

NoiseConfig quiet() {
  NoiseConfig nz;
  nz.q_noise_sd = 0.0;
  nz.false_negative_rate = 0.0;
  nz.false_positive_rate = 0.0;
  return nz;
}

EndEffectorCloud point_cloud() {
  EndEffectorCloud c;
  c.points = {Vec3::Zero()};
  return c;
}

// Hand-built action: start offset above the contact, tool pointing down.
SelectedAction touch_from_above(double x, double y, double start_z) {
  SelectedAction a;
  a.contact.r = Vec3(x, y, 0.5);
  a.contact.n = Vec3::UnitZ();
  a.approach = JointConfig(3);
  a.approach << x, y, start_z;
  a.pretouch_pose =
      PoseSE3(PoseSE3::rot_x(M_PI).rotation(), Vec3(x, y, start_z));
  return a;
}

}  // namespace

TEST_CASE("make_world") {
  EnvironmentModel env = table();
  Pose6 nominal(0.1, -0.2, 0.05, 0, 0, 0.3);
  SUBCASE("zero error interval reproduces the nominal pose") {
    WorldState w = make_world(env, nominal, Vec6::Zero(), quiet(), 1);
    CHECK((w.true_pose6.to_vec() - nominal.to_vec()).norm() == 0.0);
  }
  SUBCASE("errors stay inside the interval and depend on the seed") {
    Vec6 e = Vec6::Constant(0.1);
    for (std::uint64_t seed = 0; seed < 100; seed++) {
      WorldState w = make_world(env, nominal, e, quiet(), seed);
      Vec6 diff = w.true_pose6.to_vec() - nominal.to_vec();
      for (int i = 0; i < 6; i++) CHECK(std::abs(diff[i]) <= 0.1);
    }
    WorldState a = make_world(env, nominal, e, quiet(), 5);
    WorldState b = make_world(env, nominal, e, quiet(), 5);
    WorldState c = make_world(env, nominal, e, quiet(), 6);
    CHECK((a.true_pose6.to_vec() - b.true_pose6.to_vec()).norm() == 0.0);
    CHECK((a.true_pose6.to_vec() - c.true_pose6.to_vec()).norm() > 0.0);
  }
  SUBCASE("invalid noise config is rejected") {
    NoiseConfig bad = quiet();
    bad.false_positive_rate = 1.0;
    CHECK_THROWS(make_world(env, nominal, Vec6::Zero(), bad, 1));
  }
}

TEST_CASE("true_distance is the cloud minimum of the analytic field") {
  WorldState w = make_world(table(), Pose6(), Vec6::Zero(), quiet(), 1);
  EndEffectorCloud cloud;
  cloud.points = {Vec3(0, 0, 0), Vec3(0, 0, -0.04)};
  PoseSE3 ee = PoseSE3::translation(0, 0, 0.6);
  // Lower point sits at z = 0.56, 6 cm above the table.
  CHECK(w.true_distance(ee, cloud) == doctest::Approx(0.06));
}

TEST_CASE("noise-free touch and slide on a flat table") {
  WorldState w = make_world(table(), Pose6(), Vec6::Zero(), quiet(), 1);
  w.noise.max_slide = 0.10;
  KinematicChain chain = gantry();
  EndEffectorCloud cloud = point_cloud();
  Rng rng = make_rng(11, 0x61637431ULL);

  Observation obs =
      execute_action(w, touch_from_above(0, 0, 0.53), chain, cloud, rng);

  // One touch event plus ten 1 cm slide steps, all in contact.
  REQUIRE(obs.events.size() == 11);
  for (const auto& ev : obs.events) CHECK(ev.contact);

  // With zero joint noise the recorded configurations replay to poses that
  // satisfy the compliance band around the surface.
  for (const auto& ev : obs.events) {
    PoseSE3 ee = w.true_pose * chain.forward(ev.q);
    double d = w.true_distance(ee, cloud);
    CHECK(d <= w.noise.contact_threshold + 1e-3);
    CHECK(d >= -w.noise.contact_threshold - 1e-3);
  }

  // Consecutive contacts are spaced by the step interval horizontally.
  for (std::size_t i = 2; i < obs.events.size(); i++) {
    Vec3 a = chain.forward(obs.events[i - 1].q).translation();
    Vec3 b = chain.forward(obs.events[i].q).translation();
    CHECK((b - a).head<2>().norm() ==
          doctest::Approx(w.noise.step_interval).epsilon(0.05));
  }
}

TEST_CASE("sliding off a narrow ledge loses contact and stops") {
  // Half-extent 5 mm: the first 1 cm slide step leaves the footprint.
  WorldState w = make_world(table(0.01, 0.01), Pose6(), Vec6::Zero(), quiet(), 1);
  KinematicChain chain = gantry();
  EndEffectorCloud cloud = point_cloud();
  Rng rng = make_rng(3, 0x61637432ULL);

  Observation obs =
      execute_action(w, touch_from_above(0, 0, 0.52), chain, cloud, rng);
  REQUIRE(obs.events.size() == 2);
  CHECK(obs.events[0].contact);
  CHECK_FALSE(obs.events[1].contact);
}

TEST_CASE("total miss records the descent trace as no-contacts") {
  WorldState w = make_world(table(0.2, 0.2), Pose6(), Vec6::Zero(), quiet(), 1);
  KinematicChain chain = gantry();
  EndEffectorCloud cloud = point_cloud();
  Rng rng = make_rng(4, 0x61637433ULL);

  // Start well to the side of the slab: the full descent budget misses.
  Observation obs =
      execute_action(w, touch_from_above(0.5, 0.5, 0.53), chain, cloud, rng);
  // 25 cm descent budget sampled every 1 cm.
  REQUIRE(obs.events.size() == 25);
  for (const auto& ev : obs.events) CHECK_FALSE(ev.contact);
}

TEST_CASE("false negatives flip recorded contacts") {
  WorldState w = make_world(table(), Pose6(), Vec6::Zero(), quiet(), 1);
  w.noise.false_negative_rate = 0.999;
  w.noise.max_slide = 0.10;
  KinematicChain chain = gantry();
  EndEffectorCloud cloud = point_cloud();
  Rng rng = make_rng(5, 0x61637434ULL);

  Observation obs =
      execute_action(w, touch_from_above(0, 0, 0.53), chain, cloud, rng);
  int contacts = 0;
  for (const auto& ev : obs.events) contacts += ev.contact ? 1 : 0;
  CHECK(contacts < static_cast<int>(obs.events.size()));
}

TEST_CASE("joint noise perturbs configurations without changing the count") {
  WorldState w = make_world(table(), Pose6(), Vec6::Zero(), quiet(), 1);
  w.noise.q_noise_sd = 1e-3;
  w.noise.max_slide = 0.10;
  KinematicChain chain = gantry();
  EndEffectorCloud cloud = point_cloud();
  Rng rng = make_rng(6, 0x61637435ULL);

  Observation obs =
      execute_action(w, touch_from_above(0, 0, 0.53), chain, cloud, rng);
  REQUIRE(obs.events.size() == 11);
  // The touch event configuration should be near but not exactly at the
  // noise-free solution (0, 0, 0.502 within IK tolerance).
  const JointConfig& q0 = obs.events[0].q;
  CHECK(std::abs(q0[2] - 0.502) < 0.01);
  CHECK(std::abs(q0[0]) < 0.01);
}

TEST_CASE("observations are deterministic in the rng stream") {
  WorldState w = make_world(table(), Pose6(), Vec6::Zero(), quiet(), 1);
  w.noise.q_noise_sd = 1e-3;
  w.noise.false_negative_rate = 0.02;
  w.noise.false_positive_rate = 0.02;
  KinematicChain chain = gantry();
  EndEffectorCloud cloud = point_cloud();

  Rng a = make_rng(9, 0x61637436ULL);
  Rng b = make_rng(9, 0x61637436ULL);
  Observation oa =
      execute_action(w, touch_from_above(0, 0, 0.53), chain, cloud, a);
  Observation ob =
      execute_action(w, touch_from_above(0, 0, 0.53), chain, cloud, b);
  REQUIRE(oa.events.size() == ob.events.size());
  for (std::size_t i = 0; i < oa.events.size(); i++) {
    CHECK(oa.events[i].contact == ob.events[i].contact);
    CHECK((oa.events[i].q - ob.events[i].q).norm() == 0.0);
  }
}

TEST_CASE("a shifted base changes recorded configurations, not geometry") {
  // Same physical touch executed with a translated base: the recorded q
  // compensates for the base shift.
  WorldState w0 = make_world(table(), Pose6(), Vec6::Zero(), quiet(), 1);
  WorldState w1 =
      make_world(table(), Pose6(0.05, 0, 0, 0, 0, 0), Vec6::Zero(), quiet(), 1);
  w0.noise.max_slide = 0.0;
  w1.noise.max_slide = 0.0;
  KinematicChain chain = gantry();
  EndEffectorCloud cloud = point_cloud();

  SelectedAction a0 = touch_from_above(0, 0, 0.53);
  SelectedAction a1 = touch_from_above(-0.05, 0, 0.53);  // base-frame command

  Rng ra = make_rng(10, 0x61637437ULL);
  Rng rb = make_rng(10, 0x61637437ULL);
  Observation o0 = execute_action(w0, a0, chain, cloud, ra);
  Observation o1 = execute_action(w1, a1, chain, cloud, rb);
  REQUIRE(o0.events.size() == 1);
  REQUIRE(o1.events.size() == 1);
  // Both touch at world (0, 0, ~0.502); in the shifted base frame the x
  // configuration is offset by -5 cm.
  CHECK(o1.events[0].q[0] - o0.events[0].q[0] ==
        doctest::Approx(-0.05).epsilon(0.01));
  CHECK(o1.events[0].q[2] == doctest::Approx(o0.events[0].q[2]).epsilon(0.01));
}
