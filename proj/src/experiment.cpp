#include "selfcal/experiment.hpp"

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace selfcal {

namespace {

Json vec3_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Json vec6_json(const Vec6& v) {
  Json a = Json::array();
  for (int i = 0; i < 6; i++) a.push_back(v[i]);
  return a;
}

}  // namespace

RunContext make_context(const ExperimentConfig& cfg) {
  RunContext ctx;
  ctx.cfg = cfg;
  if (!cfg.sdf_cache.empty() && std::filesystem::exists(cfg.sdf_cache)) {
    ctx.grid = std::make_shared<SdfGrid>(SdfGrid::load(cfg.sdf_cache));
  } else {
    ctx.grid = std::make_shared<SdfGrid>(
        build_sdf(cfg.env, cfg.sdf_resolution, cfg.sdf_padding));
    if (!cfg.sdf_cache.empty()) ctx.grid->save(cfg.sdf_cache);
  }
  ctx.cloud = sample_cloud(cfg.ee_model, cfg.cloud_size, /*seed=*/1);
  return ctx;
}

namespace {

struct IterationStats {
  int actions = 0;
  double total_events = 0.0;
  double total_contacts = 0.0;
  double total_eval_ms = 0.0;
  int evals = 0;
};

// Sliding window of the most recent observations. The consistency criterion
// checks the estimate against every observation still in the window, not only
// the newest one: a single discriminating probe then blocks termination (and
// keeps the spread-growth branch active) for several iterations even when the
// probes that follow happen to land on surfaces that cannot distinguish the
// current estimate from the truth.
using ObservationWindow = std::deque<Observation>;

// One filter iteration given an observation. Returns true when the
// termination counter fires.
bool filter_iteration(const RunContext& ctx, std::uint64_t seed, int t,
                      const Observation& obs, ObservationWindow& recent,
                      ParticleSet& ps, double& sigma, FilterHistory& history,
                      IterationStats& stats, std::ofstream& trace,
                      const Json& action_info) {
  const ExperimentConfig& cfg = ctx.cfg;
  recent.push_back(obs);
  while (recent.size() > static_cast<std::size_t>(cfg.criteria.window)) {
    recent.pop_front();
  }
  ps = propagate(ps, sigma, seed);
  WeightResult wr =
      evaluate_weights(ps, obs, *ctx.grid, ctx.cloud, cfg.chain, cfg.filter);
  stats.total_eval_ms += wr.eval_millis;
  stats.evals++;

  bool conf = false, stab = false, cons = false, terminate = false;
  Pose6 est;
  Vec6 var;
  if (wr.degenerate) {
    // Absolute weight collapse: every hypothesis is far from explaining the
    // observation. The relative weights still rank the particles, so keep
    // the filter update, but treat the iteration like the trapped case:
    // never a pass, and spread the particles.
    est = estimate(wr.particles);
    var = dimwise_variance(wr.particles.weighted());
    ps = resample(wr.particles, seed);
    history.record(est, var);
    history.record_pass(false);
    sigma = std::clamp(cfg.criteria.alpha * sigma, cfg.criteria.sigma_min,
                       cfg.criteria.sigma_max);
  } else {
    est = estimate(wr.particles);
    var = dimwise_variance(wr.particles.weighted());
    ps = resample(wr.particles, seed);
    conf = particle_confidence(var, cfg.criteria.theta_v);
    history.record(est, var);
    stab = particle_stability(history, cfg.criteria.eps_m, cfg.criteria.eps_v);
    cons = true;
    for (const auto& o : recent) {
      if (!particle_consistency(est, o, *ctx.grid, ctx.cloud, cfg.chain,
                                cfg.criteria.delta_e)) {
        cons = false;
        break;
      }
    }
    terminate = should_terminate(conf, stab, cons, history,
                                 cfg.criteria.consecutive_required);
    sigma = adapt_sigma(sigma, conf, stab, cons, cfg.criteria);
  }

  int contacts = 0;
  for (const auto& ev : obs.events) contacts += ev.contact ? 1 : 0;
  stats.total_events += static_cast<double>(obs.events.size());
  stats.total_contacts += contacts;

  Json rec{{"t", t},
           {"estimate", pose6_to_json(est)},
           {"variance", vec6_json(var)},
           {"ess", wr.particles.effective_sample_size()},
           {"sigma", sigma},
           {"events", obs.events.size()},
           {"contacts", contacts},
           {"eval_ms", wr.eval_millis},
           {"C", conf ? 1 : 0},
           {"S", stab ? 1 : 0},
           {"V", cons ? 1 : 0},
           {"pass_count", history.consecutive_pass_count()},
           {"degenerate", wr.degenerate}};
  for (const auto& [k, v] : action_info.items()) rec[k] = v;
  trace << rec.dump() << "\n";
  return terminate;
}

void finalize_errors(RunResult& res, const Pose6& est, const PoseSE3& truth) {
  PoseSE3 e = est.to_se3();
  res.trans_error_cm = (e.translation() - truth.translation()).norm() * 100.0;
  res.rot_error_rad = rotation_angle(e.rotation(), truth.rotation());
}

}  // namespace

RunResult run_once(const RunContext& ctx, std::uint64_t seed) {
  const ExperimentConfig& cfg = ctx.cfg;
  std::filesystem::create_directories(cfg.output_dir);
  RunResult res;
  res.seed = seed;
  res.trace_path =
      cfg.output_dir + "/run_seed" + std::to_string(seed) + ".jsonl";
  res.observations_path =
      cfg.output_dir + "/obs_seed" + std::to_string(seed) + ".jsonl";
  std::ofstream trace(res.trace_path);
  std::ofstream obs_log(res.observations_path);

  WorldState world =
      make_world(cfg.env, cfg.nominal_pose, cfg.error_interval, cfg.noise, seed);
  obs_log << Json{{"type", "header"},
                  {"true_pose", pose6_to_json(world.true_pose6)},
                  {"nominal_pose", pose6_to_json(cfg.nominal_pose)}}
                 .dump()
          << "\n";

  std::vector<ContactCandidate> candidates =
      sample_candidates(cfg.env, *ctx.grid, cfg.candidate_count, seed);

  ParticleSet ps = init_particles(cfg.nominal_pose, cfg.error_interval,
                                  cfg.filter.particle_count, seed);
  double sigma = cfg.filter.sigma_0;
  FilterHistory history(cfg.criteria.window);
  ActionHistory actions;
  IterationStats stats;
  ObservationWindow recent;
  Rng action_rng = make_rng(seed, 0x616374ULL);
  Rng world_rng = make_rng(seed, 0x73696dULL);

  Pose6 est = estimate(ps);
  try {
    for (int t = 1; t <= cfg.max_iterations; t++) {
      SelectedAction act = select_action(candidates, actions, cfg.chain,
                                         est.to_se3(), action_rng, cfg.action);
      Observation obs =
          execute_action(world, act, cfg.chain, ctx.cloud, world_rng);
      stats.actions++;
      Json events = Json::array();
      for (const auto& ev : obs.events) {
        Json q = Json::array();
        for (int i = 0; i < ev.q.size(); i++) q.push_back(ev.q[i]);
        events.push_back({{"q", q}, {"c", ev.contact ? 1 : 0}});
      }
      obs_log << Json{{"type", "action"},
                      {"t", t},
                      {"contact_r", vec3_json(act.contact.r)},
                      {"contact_n", vec3_json(act.contact.n)},
                      {"events", events}}
                     .dump()
              << "\n";
      // Aborted or IK-failed probes produce no events: the action is spent
      // (and logged, so replay sees the same stream) but the filter state
      // does not change.
      if (obs.events.empty()) continue;
      actions.executed.push_back(act.contact);

      Json action_info{{"contact_r", vec3_json(act.contact.r)},
                       {"contact_n", vec3_json(act.contact.n)}};
      bool done = filter_iteration(ctx, seed, t, obs, recent, ps, sigma,
                                   history, stats, trace, action_info);
      est = estimate(ps);
      if (done) {
        res.terminated_by_criteria = true;
        break;
      }
    }
  } catch (const std::exception& ex) {
    res.failed = true;
    res.failure = ex.what();
  }

  res.iterations = stats.actions;
  res.mean_events = stats.actions ? stats.total_events / stats.actions : 0.0;
  res.mean_contacts =
      stats.actions ? stats.total_contacts / stats.actions : 0.0;
  res.mean_eval_millis = stats.evals ? stats.total_eval_ms / stats.evals : 0.0;
  finalize_errors(res, est, world.true_pose);
  return res;
}

RunResult run_replay(const RunContext& ctx,
                     const std::string& observations_path) {
  const ExperimentConfig& cfg = ctx.cfg;
  std::filesystem::create_directories(cfg.output_dir);
  std::ifstream in(observations_path);
  if (!in) {
    throw std::runtime_error("cannot open observations log: " +
                             observations_path);
  }
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty observation log");
  Json header = Json::parse(line);
  PoseSE3 truth = pose6_from_json(header.at("true_pose")).to_se3();
  Pose6 nominal = pose6_from_json(header.at("nominal_pose"));

  RunResult res;
  res.observations_path = observations_path;
  res.trace_path = cfg.output_dir + "/replay_trace.jsonl";
  std::ofstream trace(res.trace_path);

  std::uint64_t seed = cfg.seeds.front();
  ParticleSet ps = init_particles(nominal, cfg.error_interval,
                                  cfg.filter.particle_count, seed);
  double sigma = cfg.filter.sigma_0;
  FilterHistory history(cfg.criteria.window);
  IterationStats stats;
  ObservationWindow recent;
  Pose6 est = estimate(ps);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json rec = Json::parse(line);
    if (rec.value("type", "") != "action") continue;
    Observation obs;
    for (const auto& ej : rec.at("events")) {
      ContactEvent ev;
      const auto& qj = ej.at("q");
      ev.q = JointConfig(qj.size());
      for (std::size_t i = 0; i < qj.size(); i++) ev.q[i] = qj[i];
      ev.contact = ej.at("c").get<int>() != 0;
      obs.events.push_back(std::move(ev));
    }
    stats.actions++;
    if (obs.events.empty()) continue;
    bool done = filter_iteration(ctx, seed, rec.at("t"), obs, recent, ps,
                                 sigma, history, stats, trace, Json::object());
    est = estimate(ps);
    if (done) {
      res.terminated_by_criteria = true;
      break;
    }
  }
  res.iterations = stats.actions;
  res.mean_events = stats.actions ? stats.total_events / stats.actions : 0.0;
  res.mean_contacts =
      stats.actions ? stats.total_contacts / stats.actions : 0.0;
  res.mean_eval_millis = stats.evals ? stats.total_eval_ms / stats.evals : 0.0;
  finalize_errors(res, est, truth);
  return res;
}

SweepSummary run_sweep(const ExperimentConfig& base, const Json& base_json) {
  if (base.sweep.empty()) throw std::invalid_argument("sweep grid is empty");

  // Cartesian product of the sweep axes, in config order.
  std::vector<std::string> keys;
  for (const auto& [k, v] : base.sweep) keys.push_back(k);
  std::vector<std::map<std::string, Json>> cells{{}};
  for (const auto& key : keys) {
    std::vector<std::map<std::string, Json>> next;
    for (const auto& partial : cells) {
      for (const auto& value : base.sweep.at(key)) {
        auto a = partial;
        a[key] = value;
        next.push_back(std::move(a));
      }
    }
    cells = std::move(next);
  }

  // Grids are reused across cells that share the environment and resolution.
  std::map<std::string, std::shared_ptr<const SdfGrid>> grid_cache;
  SweepSummary summary;
  int cell_idx = 0;
  for (const auto& assignment : cells) {
    Json j = base_json;
    j.erase("sweep");
    for (const auto& [k, v] : assignment) {
      apply_override(j, k + "=" + v.dump());
    }
    ExperimentConfig cfg = parse_config(j);
    cfg.output_dir = base.output_dir + "/cell" + std::to_string(cell_idx);

    RunContext ctx;
    ctx.cfg = cfg;
    std::string grid_key = j.value("environment", Json()).dump() + "|" +
                           std::to_string(cfg.sdf_resolution) + "|" +
                           std::to_string(cfg.sdf_padding);
    auto it = grid_cache.find(grid_key);
    if (it == grid_cache.end()) {
      it = grid_cache
               .emplace(grid_key, std::make_shared<SdfGrid>(build_sdf(
                                      cfg.env, cfg.sdf_resolution,
                                      cfg.sdf_padding)))
               .first;
    }
    ctx.grid = it->second;
    ctx.cloud = sample_cloud(cfg.ee_model, cfg.cloud_size, /*seed=*/1);

    SweepCell cell;
    cell.assignment = assignment;
    for (std::uint64_t seed : cfg.seeds) {
      cell.runs.push_back(run_once(ctx, seed));
    }
    summary.cells.push_back(std::move(cell));
    cell_idx++;
  }
  return summary;
}

namespace {

struct MeanSd {
  double mean = 0.0, sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.sd = xs.size() > 1 ? std::sqrt(ss / (xs.size() - 1)) : 0.0;
  return r;
}

std::vector<std::string> sweep_keys(const SweepSummary& s) {
  std::vector<std::string> keys;
  if (!s.cells.empty()) {
    for (const auto& [k, v] : s.cells.front().assignment) keys.push_back(k);
  }
  return keys;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_summary_csv(const SweepSummary& s, const std::string& path) {
  std::ofstream out(path);
  auto keys = sweep_keys(s);
  for (const auto& k : keys) out << k << ",";
  out << "runs,terminated,failed,trans_cm_mean,trans_cm_sd,rot_rad_mean,"
         "rot_rad_sd,actions_mean,actions_sd,contacts_mean,contacts_sd\n";
  for (const auto& cell : s.cells) {
    std::vector<double> trans, rot, acts, contacts;
    int terminated = 0, failed = 0;
    for (const auto& r : cell.runs) {
      trans.push_back(r.trans_error_cm);
      rot.push_back(r.rot_error_rad);
      acts.push_back(r.iterations);
      contacts.push_back(r.mean_contacts);
      terminated += r.terminated_by_criteria ? 1 : 0;
      failed += r.failed ? 1 : 0;
    }
    for (const auto& k : keys) out << cell.assignment.at(k).dump() << ",";
    auto t = mean_sd(trans), ro = mean_sd(rot), a = mean_sd(acts),
         c = mean_sd(contacts);
    out << cell.runs.size() << "," << terminated << "," << failed << ","
        << fmt(t.mean) << "," << fmt(t.sd) << "," << fmt(ro.mean) << ","
        << fmt(ro.sd) << "," << fmt(a.mean) << "," << fmt(a.sd) << ","
        << fmt(c.mean) << "," << fmt(c.sd) << "\n";
  }
}

void write_timing_csv(const SweepSummary& s, const std::string& path) {
  std::ofstream out(path);
  auto keys = sweep_keys(s);
  for (const auto& k : keys) out << k << ",";
  out << "seed,eval_ms_mean\n";
  for (const auto& cell : s.cells) {
    for (const auto& r : cell.runs) {
      for (const auto& k : keys) out << cell.assignment.at(k).dump() << ",";
      out << r.seed << "," << fmt(r.mean_eval_millis) << "\n";
    }
  }
}

void write_long_csv(const SweepSummary& s, const std::string& path) {
  std::ofstream out(path);
  auto keys = sweep_keys(s);
  out << "cell,";
  for (const auto& k : keys) out << k << ",";
  out << "seed,metric,value\n";
  for (std::size_t i = 0; i < s.cells.size(); i++) {
    const auto& cell = s.cells[i];
    for (const auto& r : cell.runs) {
      auto row_prefix = [&] {
        out << i << ",";
        for (const auto& k : keys) out << cell.assignment.at(k).dump() << ",";
        out << r.seed << ",";
      };
      row_prefix();
      out << "trans_cm," << fmt(r.trans_error_cm) << "\n";
      row_prefix();
      out << "rot_rad," << fmt(r.rot_error_rad) << "\n";
      row_prefix();
      out << "actions," << r.iterations << "\n";
      row_prefix();
      out << "contacts," << fmt(r.mean_contacts) << "\n";
      row_prefix();
      out << "terminated," << (r.terminated_by_criteria ? 1 : 0) << "\n";
    }
  }
}

}  // namespace selfcal
