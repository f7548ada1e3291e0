#pragma once

#include <vector>

#include "selfcal/geometry.hpp"
#include "selfcal/kinematics.hpp"
#include "selfcal/pose.hpp"

namespace selfcal {

struct ContactEvent {
  JointConfig q;
  bool contact = false;
};

struct Observation {
  std::vector<ContactEvent> events;
};

struct FilterParams {
  double sigma_p = 0.005;   // contact likelihood std deviation, meters
  double delta_p = 0.01;    // penetration rejection threshold, meters
  double epsilon = 1e-12;   // rejection weight factor
  int particle_count = 10000;
  double sigma_0 = 0.01;    // initial motion noise scale
  // Literal printed form of the exponent (|d|^2 / (2*sigma_p)) instead of the
  // variance form (d^2 / (2*sigma_p^2)); kept for comparison studies.
  bool literal_exponent = false;
  int threads = 1;
};

struct ParticleSet {
  std::vector<Pose6> poses;
  std::vector<double> weights;
  int generation = 0;

  int size() const { return static_cast<int>(poses.size()); }
  std::vector<WeightedPose> weighted() const;
  double effective_sample_size() const;
};

// M particles uniform in x0 +/- spread per dimension, uniform weights.
ParticleSet init_particles(const Pose6& x0, const Vec6& spread, int count,
                           std::uint64_t seed);

// Independent Gaussian perturbation of every pose; weights untouched.
// Per-particle RNG streams are derived from (seed, generation, index) so the
// result does not depend on evaluation order.
ParticleSet propagate(const ParticleSet& ps, double sigma_t,
                      std::uint64_t seed);

struct WeightResult {
  ParticleSet particles;
  // All weights would underflow in linear space; the normalized weights are
  // still valid (log-space shift) but the estimate should not be trusted.
  bool degenerate = false;
  double eval_millis = 0.0;     // wall time of the weight evaluation
};

// Per-event factors: Gaussian density of the hypothesized distance when the
// event is a contact; epsilon when a no-contact event penetrates deeper than
// delta_p; 1 otherwise. Factors multiply over events per particle and the
// whole set is normalized, all in log space.
WeightResult evaluate_weights(const ParticleSet& ps, const Observation& obs,
                              const SdfGrid& grid, const EndEffectorCloud& cloud,
                              const KinematicChain& chain,
                              const FilterParams& params);

// Systematic (low-variance) resampling; output weights uniform.
ParticleSet resample(const ParticleSet& ps, std::uint64_t seed);

Pose6 estimate(const ParticleSet& ps);

}  // namespace selfcal
