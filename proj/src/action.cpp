#include "selfcal/action.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace selfcal {

namespace {

constexpr double kMinUpDot = -0.2;

// Largest-remainder allocation of `total` across `weights`.
std::vector<int> allocate(const std::vector<double>& weights, int total) {
  double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> alloc(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); i++) {
    double exact = total * weights[i] / sum;
    alloc[i] = static_cast<int>(std::floor(exact));
    assigned += alloc[i];
    rem.emplace_back(exact - alloc[i], i);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (int i = 0; i < total - assigned; i++) alloc[rem[i].second]++;
  return alloc;
}

}  // namespace

std::vector<ContactCandidate> sample_candidates(const EnvironmentModel& env,
                                                const SdfGrid& grid, int total,
                                                std::uint64_t seed) {
  env.validate();
  if (total < 1) throw std::invalid_argument("candidate count must be >= 1");

  std::vector<double> areas;
  for (const auto& seg : env.segments) {
    double a = 0.0;
    for (int id : seg) {
      a += env.mesh ? env.mesh->face_area(id) : env.solids[id].surface_area();
    }
    areas.push_back(a);
  }
  std::vector<int> alloc = allocate(areas, total);

  Rng rng = make_rng(seed, 0x63616e64ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<ContactCandidate> out;
  out.reserve(total);
  for (std::size_t s = 0; s < env.segments.size(); s++) {
    const auto& seg = env.segments[s];
    // Cumulative area over the segment's solids / faces.
    std::vector<double> cum;
    double acc = 0.0;
    for (int id : seg) {
      acc += env.mesh ? env.mesh->face_area(id) : env.solids[id].surface_area();
      cum.push_back(acc);
    }
    int produced = 0;
    int attempts = 0;
    const int budget = std::max(1000, alloc[s] * 100);
    while (produced < alloc[s]) {
      if (++attempts > budget) {
        throw std::runtime_error("segment has no samplable surface area");
      }
      double pick = u01(rng) * acc;
      std::size_t which =
          std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin();
      if (which >= seg.size()) which = seg.size() - 1;
      SurfaceSample smp;
      if (env.mesh) {
        int f = seg[which];
        const auto& face = env.mesh->faces[f];
        double a = u01(rng), b = u01(rng);
        if (a + b > 1.0) {
          a = 1.0 - a;
          b = 1.0 - b;
        }
        smp.point = env.mesh->vertices[face[0]] +
                    a * (env.mesh->vertices[face[1]] - env.mesh->vertices[face[0]]) +
                    b * (env.mesh->vertices[face[2]] - env.mesh->vertices[face[0]]);
        smp.normal = env.mesh->face_normal(f);
      } else {
        smp = sample_surface(env.solids[seg[which]], rng);
      }
      if (smp.normal[2] <= kMinUpDot) continue;            // facing down
      if (env.analytic_sdf(smp.point) < -1e-9) continue;   // occluded by a
                                                           // neighboring solid
      out.push_back({smp.point, smp.normal, static_cast<int>(s)});
      produced++;
    }
  }
  (void)grid;
  return out;
}

double local_sparsity(const ContactCandidate& candidate,
                      const ActionHistory& history) {
  if (history.executed.empty()) return kSparsitySentinel;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& prev : history.executed) {
    double dot = std::clamp(candidate.n.dot(prev.n), -1.0, 1.0);
    best = std::min(best, std::acos(dot));
  }
  return best;
}

PoseSE3 pretouch_target(const ContactCandidate& candidate,
                        const PoseSE3& base_guess, double offset) {
  Vec3 z = -candidate.n;  // tool axis points into the surface
  Vec3 ref = std::abs(z[2]) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  Vec3 x = ref.cross(z).normalized();
  Vec3 y = z.cross(x);
  Mat3 rot;
  rot.col(0) = x;
  rot.col(1) = y;
  rot.col(2) = z;
  PoseSE3 world_target(rot, candidate.r + offset * candidate.n);
  return base_guess.inverse() * world_target;
}

SelectedAction select_action(const std::vector<ContactCandidate>& candidates,
                             const ActionHistory& history,
                             const KinematicChain& chain,
                             const PoseSE3& base_guess, Rng& rng,
                             const ActionSelectParams& params) {
  if (candidates.empty()) throw std::invalid_argument("no contact candidates");

  std::vector<int> segment_ids;
  for (const auto& c : candidates) {
    if (std::find(segment_ids.begin(), segment_ids.end(), c.segment_id) ==
        segment_ids.end()) {
      segment_ids.push_back(c.segment_id);
    }
  }
  std::sort(segment_ids.begin(), segment_ids.end());
  std::vector<int> remaining = segment_ids;

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto draw = [&](std::vector<int>& pool) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    std::size_t at = d(rng);
    int seg = pool[at];
    pool.erase(pool.begin() + at);
    return seg;
  };

  int seg = draw(remaining);
  while (true) {
    // Candidates of this segment in descending sparsity, ties by index.
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < candidates.size(); i++) {
      if (candidates[i].segment_id == seg) {
        order.emplace_back(local_sparsity(candidates[i], history), i);
      }
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (const auto& [rho, idx] : order) {
      PoseSE3 target =
          pretouch_target(candidates[idx], base_guess, params.pretouch_offset);
      IkResult ik = inverse_reach(chain, target, rng, params.ik);
      if (ik.reachable) {
        return SelectedAction{candidates[idx], ik.q, target};
      }
    }
    if (remaining.empty()) {
      throw std::runtime_error(
          "action selection exhausted: no feasible contact candidate");
    }
    if (u01(rng) < params.segment_switch_prob) {
      seg = draw(remaining);
    } else {
      seg = remaining.front();  // next segment in index order
      remaining.erase(remaining.begin());
    }
  }
}

}  // namespace selfcal
