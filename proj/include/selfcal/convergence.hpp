#pragma once

#include <deque>

#include "selfcal/filter.hpp"

namespace selfcal {

struct CriteriaConfig {
  Vec6 theta_v = (Vec6() << 1e-4, 1e-4, 1e-4, 3e-4, 3e-4, 3e-4).finished();
  Vec6 eps_m = (Vec6() << 0.015, 0.015, 0.015, 0.03, 0.03, 0.03).finished();
  Vec6 eps_v = Vec6::Constant(1e-3);
  int window = 5;              // h
  double delta_e = 0.01;       // consistency distance threshold, meters
  int consecutive_required = 5;
  double alpha = 3.0;          // spread scale, > 1
  double beta = 0.6;           // densify scale, < 1
  double sigma_min = 1e-3;
  double sigma_max = 0.05;

  void validate() const;
};

// Ring buffer of recent (estimate, variance) pairs plus the consecutive
// all-pass counter for termination.
class FilterHistory {
 public:
  explicit FilterHistory(int window) : window_(window) {}

  void record(const Pose6& estimate, const Vec6& variance);
  int entries() const { return static_cast<int>(buffer_.size()); }
  int window() const { return window_; }
  int consecutive_pass_count() const { return pass_count_; }

  // Dimension-wise range over the buffered estimates / variances; only valid
  // when the buffer is full.
  Vec6 estimate_range() const;
  Vec6 variance_range() const;

  void record_pass(bool all_passed) {
    pass_count_ = all_passed ? pass_count_ + 1 : 0;
  }

 private:
  int window_;
  int pass_count_ = 0;
  std::deque<std::pair<Pose6, Vec6>> buffer_;
};

// 1 iff variance is strictly below theta_v in all six dimensions.
bool particle_confidence(const Vec6& variance, const Vec6& theta_v);

// 1 iff both the estimate range and the variance range over the last h
// iterations are strictly below their thresholds; 0 with insufficient history.
bool particle_stability(const FilterHistory& history, const Vec6& eps_m,
                        const Vec6& eps_v);

// 1 iff no event contradicts the estimate: a contact with |hypothesized
// distance| > delta_e or a no-contact with distance <= -delta_e fails.
bool particle_consistency(const Pose6& estimate, const Observation& obs,
                          const SdfGrid& grid, const EndEffectorCloud& cloud,
                          const KinematicChain& chain, double delta_e);

// alpha*sigma when confident but inconsistent (trapped), beta*sigma when
// stable and consistent, otherwise unchanged; clamped to [sigma_min,
// sigma_max]. The trapped branch is tested first.
double adapt_sigma(double sigma_prev, bool confidence, bool stability,
                   bool consistency, const CriteriaConfig& cfg);

// Counts consecutive iterations where all three criteria pass; terminates at
// consecutive_required.
bool should_terminate(bool confidence, bool stability, bool consistency,
                      FilterHistory& state, int consecutive_required);

}  // namespace selfcal
