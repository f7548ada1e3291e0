#include "selfcal/convergence.hpp"

#include <stdexcept>

namespace selfcal {

void CriteriaConfig::validate() const {
  if (alpha <= 1.0) throw std::invalid_argument("alpha must be > 1");
  if (beta <= 0.0 || beta >= 1.0) {
    throw std::invalid_argument("beta must be in (0, 1)");
  }
  if (window < 2) throw std::invalid_argument("window must be >= 2");
  if (consecutive_required < 1) {
    throw std::invalid_argument("consecutive_required must be >= 1");
  }
  if (sigma_min <= 0.0 || sigma_max < sigma_min) {
    throw std::invalid_argument("invalid sigma clamps");
  }
}

void FilterHistory::record(const Pose6& estimate, const Vec6& variance) {
  buffer_.emplace_back(estimate, variance);
  while (static_cast<int>(buffer_.size()) > window_) buffer_.pop_front();
}

namespace {

// Range per dimension; angular estimate dimensions measured as the spread of
// wrapped deviations from the first entry.
Vec6 range_of(const std::deque<std::pair<Pose6, Vec6>>& buf, bool estimates) {
  Vec6 lo = Vec6::Constant(std::numeric_limits<double>::infinity());
  Vec6 hi = -lo;
  Vec6 ref = estimates ? buf.front().first.to_vec() : Vec6::Zero();
  for (const auto& [est, var] : buf) {
    Vec6 v = estimates ? est.to_vec() : var;
    if (estimates) {
      for (int i = 3; i < 6; i++) v[i] = ref[i] + wrap_angle(v[i] - ref[i]);
    }
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return hi - lo;
}

}  // namespace

Vec6 FilterHistory::estimate_range() const { return range_of(buffer_, true); }
Vec6 FilterHistory::variance_range() const { return range_of(buffer_, false); }

bool particle_confidence(const Vec6& variance, const Vec6& theta_v) {
  return (variance.array() < theta_v.array()).all();
}

bool particle_stability(const FilterHistory& history, const Vec6& eps_m,
                        const Vec6& eps_v) {
  if (history.entries() < history.window()) return false;
  return (history.estimate_range().array() < eps_m.array()).all() &&
         (history.variance_range().array() < eps_v.array()).all();
}

bool particle_consistency(const Pose6& estimate, const Observation& obs,
                          const SdfGrid& grid, const EndEffectorCloud& cloud,
                          const KinematicChain& chain, double delta_e) {
  if (obs.events.empty()) throw std::invalid_argument("empty observation");
  PoseSE3 base = estimate.to_se3();
  for (const auto& ev : obs.events) {
    double d = hypothesized_distance(grid, cloud, base, chain.forward(ev.q));
    // A contact is contradicted whenever the hypothesized surface is not
    // where the touch happened — in either direction. The one-sided check
    // (d > delta_e only) lets an estimate that sinks the end-effector into
    // the surface look consistent and densify onto the wrong pose.
    if (ev.contact && std::abs(d) > delta_e) return false;
    if (!ev.contact && d <= -delta_e) return false;
  }
  return true;
}

double adapt_sigma(double sigma_prev, bool confidence, bool stability,
                   bool consistency, const CriteriaConfig& cfg) {
  if (sigma_prev <= 0.0) throw std::invalid_argument("sigma_prev must be > 0");
  double sigma = sigma_prev;
  if (confidence && !consistency) {
    sigma = cfg.alpha * sigma_prev;
  } else if (stability && consistency) {
    sigma = cfg.beta * sigma_prev;
  }
  return std::clamp(sigma, cfg.sigma_min, cfg.sigma_max);
}

bool should_terminate(bool confidence, bool stability, bool consistency,
                      FilterHistory& state, int consecutive_required) {
  state.record_pass(confidence && stability && consistency);
  return state.consecutive_pass_count() >= consecutive_required;
}

}  // namespace selfcal
