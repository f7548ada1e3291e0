#include <doctest.h>

#include "selfcal/pose.hpp"

using namespace selfcal;

TEST_CASE("compose identity and translations") {
  PoseSE3 p = Pose6(0.3, -0.1, 0.2, 0.4, -0.2, 1.1).to_se3();
  PoseSE3 c = compose(PoseSE3::identity(), p);
  CHECK((c.rotation() - p.rotation()).norm() == doctest::Approx(0).epsilon(1e-12));
  CHECK((c.translation() - p.translation()).norm() ==
        doctest::Approx(0).epsilon(1e-12));

  PoseSE3 t = compose(PoseSE3::translation(1, 0, 0),
                      PoseSE3::translation(0, 2, 0));
  CHECK((t.translation() - Vec3(1, 2, 0)).norm() < 1e-12);
}

TEST_CASE("compose rotation then translation maps origin as hand-computed") {
  // rotZ(pi/2) * translate(1,0,0) maps the origin to (0,1,0).
  PoseSE3 c = compose(PoseSE3::rot_z(M_PI / 2), PoseSE3::translation(1, 0, 0));
  CHECK((c.apply(Vec3::Zero()) - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("inverse composes to identity") {
  PoseSE3 p = Pose6(0.5, 1.2, -0.3, 1.0, 0.7, -2.1).to_se3();
  PoseSE3 e = compose(p.inverse(), p);
  CHECK((e.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(e.translation().norm() < 1e-9);
}

TEST_CASE("pose6 round trip away from the pitch singularity") {
  Rng rng(7);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (int i = 0; i < 200; i++) {
    Pose6 p(u(rng), u(rng), u(rng), u(rng), u(rng) / 2.2, u(rng));
    Pose6 q = p.to_se3().to_pose6();
    CHECK(std::abs(q.x - p.x) < 1e-9);
    CHECK(std::abs(q.y - p.y) < 1e-9);
    CHECK(std::abs(q.z - p.z) < 1e-9);
    CHECK(std::abs(wrap_angle(q.roll - p.roll)) < 1e-9);
    CHECK(std::abs(wrap_angle(q.pitch - p.pitch)) < 1e-9);
    CHECK(std::abs(wrap_angle(q.yaw - p.yaw)) < 1e-9);
  }
}

TEST_CASE("non-orthonormal rotation is rejected") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.5;
  CHECK_THROWS(PoseSE3(bad, Vec3::Zero()));
}

TEST_CASE("perturb with a zero noise stream is the identity map") {
  Pose6 p(1, 2, 3, 0.1, -0.2, 0.3);
  std::array<double, 6> sigma;
  sigma.fill(0.02);
  std::array<double, 6> zeros{};
  Pose6 q = perturb_with(p, sigma, zeros);
  CHECK(q.to_vec() == p.to_vec());
}

TEST_CASE("perturb rejects non-positive sigma") {
  Pose6 p;
  Rng rng(1);
  CHECK_THROWS(perturb(p, 0.0, rng));
  CHECK_THROWS(perturb(p, -0.1, rng));
}

TEST_CASE("perturb sample variance matches sigma squared") {
  const double sigma = 0.03;
  const int n = 100000;
  Pose6 p;
  Rng rng(11);
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; i++) {
    Pose6 q = perturb(p, sigma, rng);
    sum += q.x;
    sum_sq += q.x * q.x;
    CHECK(q.roll > -M_PI);
    CHECK(q.roll <= M_PI);
    CHECK(q.yaw > -M_PI);
    CHECK(q.yaw <= M_PI);
  }
  double var = sum_sq / n - (sum / n) * (sum / n);
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.05));
}

TEST_CASE("perturb displacement shrinks with sigma") {
  Pose6 p;
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {1e-2, 1e-4, 1e-6}) {
    Rng rng(3);
    double mean_abs = 0;
    for (int i = 0; i < 2000; i++) mean_abs += std::abs(perturb(p, sigma, rng).x);
    mean_abs /= 2000;
    CHECK(mean_abs < prev);
    prev = mean_abs;
  }
}

TEST_CASE("weighted mean basics") {
  Pose6 a(0, 0, 0, 0, 0, 0), b(2, 0, 0, 0, 0, 0);
  std::vector<WeightedPose> ps{{a, 0.5}, {b, 0.5}};
  CHECK(weighted_mean(ps).x == doctest::Approx(1.0));

  std::vector<WeightedPose> same{{a, 0.25}, {a, 0.25}, {a, 0.5}};
  CHECK(weighted_mean(same).to_vec().norm() < 1e-12);
}

TEST_CASE("weighted mean uses circular mean for angles") {
  // yaw +3 and -3: linear mean would be 0, circular mean is pi.
  std::vector<WeightedPose> ps{{Pose6(0, 0, 0, 0, 0, 3.0), 0.5},
                               {Pose6(0, 0, 0, 0, 0, -3.0), 0.5}};
  double yaw = weighted_mean(ps).yaw;
  // Oracle: atan2 of averaged sin/cos.
  double expect = std::atan2((std::sin(3.0) + std::sin(-3.0)) / 2,
                             (std::cos(3.0) + std::cos(-3.0)) / 2);
  CHECK(std::abs(wrap_angle(yaw - expect)) < 1e-12);
  CHECK(std::abs(wrap_angle(yaw - M_PI)) < 1e-9);
}

TEST_CASE("weighted mean rejects bad input") {
  std::vector<WeightedPose> empty;
  CHECK_THROWS(weighted_mean(empty));
  std::vector<WeightedPose> unnorm{{Pose6(), 0.7}, {Pose6(), 0.7}};
  CHECK_THROWS(weighted_mean(unnorm));
}

TEST_CASE("dimwise variance") {
  std::vector<WeightedPose> ps{{Pose6(-1, 0, 0, 0, 0, 0), 0.5},
                               {Pose6(1, 0, 0, 0, 0, 0), 0.5}};
  Vec6 v = dimwise_variance(ps);
  CHECK(v[0] == doctest::Approx(1.0));
  for (int i = 1; i < 6; i++) CHECK(v[i] == doctest::Approx(0.0));

  std::vector<WeightedPose> same{{Pose6(1, 2, 3, 0.1, 0.2, 0.3), 1.0}};
  CHECK(dimwise_variance(same).norm() < 1e-12);
}

TEST_CASE("weighted statistics are permutation invariant and weight-splitting"
          " consistent") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<WeightedPose> ps;
  double total = 0;
  for (int i = 0; i < 20; i++) {
    ps.push_back({Pose6(u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)),
                  std::abs(u(rng)) + 0.01});
    total += ps.back().weight;
  }
  for (auto& p : ps) p.weight /= total;

  auto shuffled = ps;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK((dimwise_variance(ps) - dimwise_variance(shuffled)).norm() < 1e-12);
  CHECK((weighted_mean(ps).to_vec() - weighted_mean(shuffled).to_vec()).norm() <
        1e-12);

  // Splitting one particle's weight across duplicates changes nothing.
  auto split = ps;
  WeightedPose dup = split.back();
  split.back().weight /= 2;
  dup.weight /= 2;
  split.push_back(dup);
  CHECK((weighted_mean(ps).to_vec() - weighted_mean(split).to_vec()).norm() <
        1e-12);
}
