#include "selfcal/filter.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace selfcal {

std::vector<WeightedPose> ParticleSet::weighted() const {
  std::vector<WeightedPose> out;
  out.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); i++) {
    out.push_back({poses[i], weights[i]});
  }
  return out;
}

double ParticleSet::effective_sample_size() const {
  double sum_sq = 0.0;
  for (double w : weights) sum_sq += w * w;
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

ParticleSet init_particles(const Pose6& x0, const Vec6& spread, int count,
                           std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("particle count must be >= 1");
  for (int i = 0; i < 6; i++) {
    if (spread[i] < 0.0) {
      throw std::invalid_argument("spread components must be non-negative");
    }
  }
  ParticleSet ps;
  ps.poses.reserve(count);
  ps.weights.assign(count, 1.0 / count);
  Vec6 base = x0.to_vec();
  for (int m = 0; m < count; m++) {
    Rng rng = make_rng(seed, 0x696e6974ULL, m);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec6 v;
    for (int i = 0; i < 6; i++) v[i] = base[i] + spread[i] * u(rng);
    ps.poses.push_back(Pose6::from_vec(v));
  }
  return ps;
}

ParticleSet propagate(const ParticleSet& ps, double sigma_t,
                      std::uint64_t seed) {
  if (sigma_t <= 0.0) throw std::invalid_argument("sigma_t must be > 0");
  ParticleSet out;
  out.weights = ps.weights;
  out.generation = ps.generation + 1;
  out.poses.reserve(ps.poses.size());
  for (int m = 0; m < ps.size(); m++) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(out.generation), m);
    out.poses.push_back(perturb(ps.poses[m], sigma_t, rng));
  }
  return out;
}

WeightResult evaluate_weights(const ParticleSet& ps, const Observation& obs,
                              const SdfGrid& grid, const EndEffectorCloud& cloud,
                              const KinematicChain& chain,
                              const FilterParams& params) {
  if (obs.events.empty()) throw std::invalid_argument("empty observation");
  auto t0 = std::chrono::steady_clock::now();

  // Cloud points pre-transformed into the base frame per event; the particle
  // loop then only applies the hypothesized base pose.
  const std::size_t J = obs.events.size();
  const std::size_t L = cloud.points.size();
  std::vector<Vec3> base_points(J * L);
  std::vector<char> contact(J);
  for (std::size_t j = 0; j < J; j++) {
    PoseSE3 gamma = chain.forward(obs.events[j].q);
    contact[j] = obs.events[j].contact ? 1 : 0;
    for (std::size_t l = 0; l < L; l++) {
      base_points[j * L + l] = gamma.apply(cloud.points[l]);
    }
  }

  const double sigma = params.sigma_p;
  const double log_norm = -0.5 * std::log(2.0 * M_PI * sigma * sigma);
  const double inv_two_var = params.literal_exponent
                                 ? 1.0 / (2.0 * sigma)
                                 : 1.0 / (2.0 * sigma * sigma);
  const double log_eps = std::log(params.epsilon);

  const int M = ps.size();
  std::vector<double> log_w(M);
  auto worker = [&](int begin, int end) {
    for (int m = begin; m < end; m++) {
      PoseSE3 base = ps.poses[m].to_se3();
      const Mat3& rot = base.rotation();
      const Vec3& trans = base.translation();
      double lw = 0.0;
      for (std::size_t j = 0; j < J; j++) {
        double d = std::numeric_limits<double>::infinity();
        const Vec3* pts = &base_points[j * L];
        for (std::size_t l = 0; l < L; l++) {
          d = std::min(d, grid.query(rot * pts[l] + trans));
        }
        if (contact[j]) {
          lw += log_norm - d * d * inv_two_var;
        } else if (d < -params.delta_p) {
          lw += log_eps;
        }
      }
      log_w[m] = lw;
    }
  };

  int threads = std::max(1, params.threads);
  if (threads == 1 || M < 2 * threads) {
    worker(0, M);
  } else {
    std::vector<std::thread> pool;
    int chunk = (M + threads - 1) / threads;
    for (int t = 0; t < threads; t++) {
      int begin = t * chunk;
      int end = std::min(M, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Normalize in log space; the reduction order is fixed so results do not
  // depend on the worker count.
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_w) max_lw = std::max(max_lw, lw);

  WeightResult res;
  res.particles.poses = ps.poses;
  res.particles.generation = ps.generation;
  res.particles.weights.resize(M);
  // Even when every particle's absolute weight would underflow (the
  // degenerate flag below), the shifted exponentials still rank the
  // particles, so the relative weights stay informative.
  res.degenerate = max_lw < std::log(1e-300);
  double sum = 0.0;
  for (int m = 0; m < M; m++) {
    res.particles.weights[m] = std::exp(log_w[m] - max_lw);
    sum += res.particles.weights[m];
  }
  for (int m = 0; m < M; m++) res.particles.weights[m] /= sum;
  res.eval_millis = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  return res;
}

ParticleSet resample(const ParticleSet& ps, std::uint64_t seed) {
  const int M = ps.size();
  double total = 0.0;
  for (double w : ps.weights) total += w;
  if (total <= 0.0) {
    throw std::invalid_argument("resample: degenerate all-zero weights");
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("resample: weights not normalized");
  }
  Rng rng = make_rng(seed, 0x7265736dULL, ps.generation);
  std::uniform_real_distribution<double> u(0.0, 1.0 / M);
  double r = u(rng);
  ParticleSet out;
  out.generation = ps.generation;
  out.poses.reserve(M);
  out.weights.assign(M, 1.0 / M);
  double c = ps.weights[0];
  int i = 0;
  for (int m = 0; m < M; m++) {
    double target = r + static_cast<double>(m) / M;
    while (target > c && i < M - 1) c += ps.weights[++i];
    out.poses.push_back(ps.poses[i]);
  }
  return out;
}

Pose6 estimate(const ParticleSet& ps) {
  auto wp = ps.weighted();
  return weighted_mean(wp);
}

}  // namespace selfcal
