#include <doctest.h>

#include "selfcal/kinematics.hpp"

using namespace selfcal;

namespace {

// Planar 2-link arm in the xy plane, both joints about z.
KinematicChain two_link(double l1 = 0.5, double l2 = 0.3) {
  std::vector<JointSpec> joints(2);
  joints[0].axis = Vec3::UnitZ();
  joints[1].axis = Vec3::UnitZ();
  joints[1].fixed_transform = PoseSE3::translation(l1, 0, 0);
  return KinematicChain(std::move(joints), PoseSE3::translation(l2, 0, 0));
}

}  // namespace

TEST_CASE("single revolute joint at zero leaves the fixed transform") {
  std::vector<JointSpec> joints(1);
  joints[0].fixed_transform = Pose6(0.1, 0.2, 0.3, 0.4, 0.5, 0.6).to_se3();
  KinematicChain chain(joints);
  JointConfig q = JointConfig::Zero(1);
  PoseSE3 f = chain.forward(q);
  PoseSE3 expect = joints[0].fixed_transform;
  CHECK((f.rotation() - expect.rotation()).norm() < 1e-12);
  CHECK((f.translation() - expect.translation()).norm() < 1e-12);
}

TEST_CASE("two link arm forward kinematics") {
  KinematicChain chain = two_link();
  JointConfig q = JointConfig::Zero(2);
  CHECK((chain.forward(q).translation() - Vec3(0.8, 0, 0)).norm() < 1e-12);

  q << M_PI / 2, 0;
  CHECK((chain.forward(q).translation() - Vec3(0, 0.8, 0)).norm() < 1e-9);

  q << M_PI / 2, -M_PI / 2;
  // Elbow bends back: link1 along +y, link2 along +x.
  CHECK((chain.forward(q).translation() - Vec3(0.3, 0.5, 0)).norm() < 1e-9);
}

TEST_CASE("dimension mismatch is rejected") {
  KinematicChain chain = two_link();
  CHECK_THROWS(chain.forward(JointConfig::Zero(3)));
}

TEST_CASE("non-unit axis is rejected") {
  std::vector<JointSpec> joints(1);
  joints[0].axis = Vec3(0, 0, 2);
  CHECK_THROWS(KinematicChain(joints));
}

TEST_CASE("analytic jacobian matches finite differences") {
  KinematicChain chain = two_link();
  JointConfig q(2);
  q << 0.7, -0.4;
  auto jac = chain.jacobian(q);
  const double h = 1e-7;
  for (int i = 0; i < 2; i++) {
    JointConfig qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    Vec3 fd = (chain.forward(qp).translation() - chain.forward(qm).translation()) /
              (2 * h);
    CHECK((jac.col(i).head<3>() - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("inverse_reach round trip") {
  KinematicChain chain = two_link();
  JointConfig q0(2);
  q0 << 0.9, -1.3;
  PoseSE3 target = chain.forward(q0);
  Rng rng(17);
  IkResult res = inverse_reach(chain, target, rng);
  REQUIRE(res.reachable);
  PoseSE3 reached = chain.forward(res.q);
  CHECK((reached.translation() - target.translation()).norm() < 1e-4);
  CHECK(rotation_angle(reached.rotation(), target.rotation()) < 1e-3);
}

TEST_CASE("target beyond workspace radius is unreachable") {
  KinematicChain chain = two_link();
  // Reach is 0.8 m; ask for 0.81 m with the natural outstretched orientation.
  PoseSE3 target = PoseSE3::translation(0.81, 0, 0);
  Rng rng(23);
  IkResult res = inverse_reach(chain, target, rng);
  CHECK_FALSE(res.reachable);
}

TEST_CASE("identity target for an identity-pose chain solves near zero") {
  std::vector<JointSpec> joints(2);
  joints[0].axis = Vec3::UnitZ();
  joints[1].axis = Vec3::UnitY();
  KinematicChain chain(joints);
  Rng rng(5);
  IkResult res = inverse_reach(chain, PoseSE3::identity(), rng);
  REQUIRE(res.reachable);
  CHECK(res.q.norm() < 1e-3);
}

TEST_CASE("prismatic joint translates along its axis") {
  std::vector<JointSpec> joints(1);
  joints[0].kind = JointKind::Prismatic;
  joints[0].axis = Vec3::UnitX();
  KinematicChain chain(joints);
  JointConfig q(1);
  q << 0.25;
  CHECK((chain.forward(q).translation() - Vec3(0.25, 0, 0)).norm() < 1e-12);
}
