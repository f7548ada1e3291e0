#include <doctest.h>

#include "selfcal/convergence.hpp"

using namespace selfcal;

namespace {

Vec6 vec6(double a, double b, double c, double d, double e, double f) {
  Vec6 v;
  v << a, b, c, d, e, f;
  return v;
}

EnvironmentModel unit_box_env() {
  Primitive box;
  box.size = Vec3(1, 1, 1);
  return EnvironmentModel::single_segment_per_solid({box});
}

KinematicChain z_slider() {
  std::vector<JointSpec> joints(1);
  joints[0].kind = JointKind::Prismatic;
  joints[0].axis = Vec3::UnitZ();
  return KinematicChain(joints);
}

ContactEvent event(double z, bool contact) {
  ContactEvent ev;
  ev.q = JointConfig(1);
  ev.q << z;
  ev.contact = contact;
  return ev;
}

}  // namespace

TEST_CASE("particle_confidence needs strictly smaller variance everywhere") {
  Vec6 theta = Vec6::Constant(1e-5);
  CHECK(particle_confidence(Vec6::Constant(9e-6), theta));
  CHECK_FALSE(particle_confidence(Vec6::Constant(1e-5), theta));  // boundary
  Vec6 v = Vec6::Constant(5e-6);
  v[3] = 2e-5;
  CHECK_FALSE(particle_confidence(v, theta));
}

TEST_CASE("particle_stability over a window of history") {
  Vec6 eps_m = vec6(0.002, 0.002, 0.002, 0.005, 0.005, 0.005);
  Vec6 eps_v = Vec6::Constant(5e-6);

  SUBCASE("insufficient history fails") {
    FilterHistory h(5);
    for (int i = 0; i < 4; i++) h.record(Pose6(), Vec6::Constant(1e-6));
    CHECK_FALSE(particle_stability(h, eps_m, eps_v));
    h.record(Pose6(), Vec6::Constant(1e-6));
    CHECK(particle_stability(h, eps_m, eps_v));
  }
  SUBCASE("large estimate drift fails") {
    FilterHistory h(3);
    h.record(Pose6(0, 0, 0, 0, 0, 0), Vec6::Constant(1e-6));
    h.record(Pose6(0.001, 0, 0, 0, 0, 0), Vec6::Constant(1e-6));
    h.record(Pose6(0.004, 0, 0, 0, 0, 0), Vec6::Constant(1e-6));
    CHECK_FALSE(particle_stability(h, eps_m, eps_v));
    // Buffer slides: once the 0.0 entry drops out the range shrinks to 3mm,
    // still over the 2mm threshold; one more tight entry passes.
    h.record(Pose6(0.0045, 0, 0, 0, 0, 0), Vec6::Constant(1e-6));
    CHECK_FALSE(particle_stability(h, eps_m, eps_v));
    h.record(Pose6(0.005, 0, 0, 0, 0, 0), Vec6::Constant(1e-6));
    CHECK(particle_stability(h, eps_m, eps_v));
  }
  SUBCASE("variance drift fails on its own") {
    FilterHistory h(3);
    h.record(Pose6(), Vec6::Constant(1e-6));
    h.record(Pose6(), Vec6::Constant(2e-6));
    h.record(Pose6(), Vec6::Constant(9e-6));
    CHECK_FALSE(particle_stability(h, eps_m, eps_v));
  }
  SUBCASE("angular range uses wrapped differences") {
    FilterHistory h(2);
    h.record(Pose6(0, 0, 0, 0, 0, M_PI - 0.001), Vec6::Constant(1e-6));
    h.record(Pose6(0, 0, 0, 0, 0, -M_PI + 0.001), Vec6::Constant(1e-6));
    // Raw difference is ~2*pi; wrapped it is 2 milliradians.
    CHECK(particle_stability(h, eps_m, eps_v));
  }
}

TEST_CASE("particle_consistency flags contradicting events") {
  EnvironmentModel env = unit_box_env();
  SdfGrid grid = build_sdf(env, 0.005, 0.3);
  KinematicChain chain = z_slider();
  EndEffectorCloud cloud;
  cloud.points = {Vec3::Zero()};
  double delta_e = 0.01;

  // Box top face is z = 0.5; the estimate puts the base at the origin so the
  // event q is the probe height directly.
  Pose6 est(0, 0, 0, 0, 0, 0);

  Observation ok;
  ok.events = {event(0.5, true), event(0.6, false), event(0.505, false)};
  CHECK(particle_consistency(est, ok, grid, cloud, chain, delta_e));

  Observation contact_in_air;
  contact_in_air.events = {event(0.52, true)};  // d = 2 cm > delta_e
  CHECK_FALSE(
      particle_consistency(est, contact_in_air, grid, cloud, chain, delta_e));

  Observation miss_inside;
  miss_inside.events = {event(0.48, false)};  // d = -2 cm <= -delta_e
  CHECK_FALSE(
      particle_consistency(est, miss_inside, grid, cloud, chain, delta_e));

  Observation contact_buried;
  contact_buried.events = {event(0.48, true)};  // |d| = 2 cm > delta_e
  CHECK_FALSE(
      particle_consistency(est, contact_buried, grid, cloud, chain, delta_e));

  Observation empty;
  CHECK_THROWS(particle_consistency(est, empty, grid, cloud, chain, delta_e));
}

TEST_CASE("adapt_sigma") {
  CriteriaConfig cfg;
  SUBCASE("full truth table") {
    // (C, S, V) -> expected multiplier. Trapped (C && !V) spreads; stable and
    // consistent (S && V) densifies; everything else holds.
    struct Row {
      bool c, s, v;
      double mult;
    };
    const Row rows[] = {
        {false, false, false, 1.0}, {false, false, true, 1.0},
        {false, true, false, 1.0},  {false, true, true, cfg.beta},
        {true, false, false, cfg.alpha}, {true, false, true, 1.0},
        {true, true, false, cfg.alpha},  // trapped wins over densify
        {true, true, true, cfg.beta},
    };
    for (const Row& r : rows) {
      CHECK(adapt_sigma(0.01, r.c, r.s, r.v, cfg) ==
            doctest::Approx(0.01 * r.mult));
    }
  }
  SUBCASE("clamping") {
    CHECK(adapt_sigma(0.04, true, false, false, cfg) ==
          doctest::Approx(cfg.sigma_max));
    CHECK(adapt_sigma(1.1e-4, false, true, true, cfg) ==
          doctest::Approx(cfg.sigma_min));
  }
  SUBCASE("config validation") {
    CriteriaConfig bad = cfg;
    bad.alpha = 0.9;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.beta = 1.2;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.sigma_min = bad.sigma_max + 1;
    CHECK_THROWS(bad.validate());
    CHECK_NOTHROW(cfg.validate());
  }
}

TEST_CASE("should_terminate counts consecutive all-pass iterations") {
  FilterHistory h(5);
  SUBCASE("five in a row terminates") {
    for (int i = 0; i < 4; i++) {
      CHECK_FALSE(should_terminate(true, true, true, h, 5));
    }
    CHECK(should_terminate(true, true, true, h, 5));
  }
  SUBCASE("a single failure resets the counter") {
    for (int i = 0; i < 4; i++) should_terminate(true, true, true, h, 5);
    CHECK_FALSE(should_terminate(true, false, true, h, 5));
    CHECK(h.consecutive_pass_count() == 0);
    for (int i = 0; i < 4; i++) {
      CHECK_FALSE(should_terminate(true, true, true, h, 5));
    }
    CHECK(should_terminate(true, true, true, h, 5));
  }
  SUBCASE("any missing criterion blocks the count") {
    CHECK_FALSE(should_terminate(false, true, true, h, 1));
    CHECK_FALSE(should_terminate(true, false, true, h, 1));
    CHECK_FALSE(should_terminate(true, true, false, h, 1));
    CHECK(should_terminate(true, true, true, h, 1));
  }
}
