#include "selfcal/config.hpp"

#include <fstream>
#include <stdexcept>

namespace selfcal {

Pose6 pose6_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 6) {
    throw std::invalid_argument("pose must be a 6-element array");
  }
  return Pose6(j[0], j[1], j[2], j[3], j[4], j[5]);
}

Json pose6_to_json(const Pose6& p) {
  return Json::array({p.x, p.y, p.z, p.roll, p.pitch, p.yaw});
}

Vec6 vec6_from_json(const Json& j) {
  if (j.is_number()) return Vec6::Constant(j.get<double>());
  if (!j.is_array() || j.size() != 6) {
    throw std::invalid_argument("expected a 6-element array or a scalar");
  }
  Vec6 v;
  for (int i = 0; i < 6; i++) v[i] = j[i];
  return v;
}

namespace {

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("expected a 3-element array");
  }
  return Vec3(j[0], j[1], j[2]);
}

Primitive primitive_from_json(const Json& j) {
  Primitive p;
  std::string type = j.at("type");
  if (type == "box") {
    p.kind = PrimitiveKind::Box;
    p.size = vec3_from_json(j.at("size"));
  } else if (type == "sphere") {
    p.kind = PrimitiveKind::Sphere;
    p.size = Vec3(j.at("radius").get<double>(), 0, 0);
  } else if (type == "cylinder") {
    p.kind = PrimitiveKind::Cylinder;
    p.size = Vec3(j.at("radius").get<double>(), j.at("height").get<double>(), 0);
  } else {
    throw std::invalid_argument("unknown primitive type: " + type);
  }
  if (j.contains("pose")) p.pose = pose6_from_json(j.at("pose")).to_se3();
  return p;
}

EnvironmentModel env_from_json(const Json& j) {
  EnvironmentModel env;
  if (j.contains("mesh")) {
    env.mesh = TriangleMesh::load(j.at("mesh").get<std::string>());
    std::vector<int> all(env.mesh->faces.size());
    for (std::size_t i = 0; i < all.size(); i++) all[i] = static_cast<int>(i);
    env.segments.push_back(all);
    return env;
  }
  std::map<std::string, std::vector<int>> by_label;
  std::vector<std::string> label_order;
  for (const auto& sj : j.at("solids")) {
    int idx = static_cast<int>(env.solids.size());
    env.solids.push_back(primitive_from_json(sj));
    std::string label = sj.contains("segment")
                            ? sj.at("segment").get<std::string>()
                            : "solid_" + std::to_string(idx);
    if (!by_label.count(label)) label_order.push_back(label);
    by_label[label].push_back(idx);
  }
  for (const auto& label : label_order) env.segments.push_back(by_label[label]);
  return env;
}

KinematicChain chain_from_json(const Json& j) {
  std::vector<JointSpec> joints;
  for (const auto& jj : j.at("joints")) {
    JointSpec spec;
    spec.axis = vec3_from_json(jj.at("axis")).normalized();
    std::string kind = jj.value("kind", "revolute");
    if (kind == "revolute") {
      spec.kind = JointKind::Revolute;
    } else if (kind == "prismatic") {
      spec.kind = JointKind::Prismatic;
    } else {
      throw std::invalid_argument("unknown joint kind: " + kind);
    }
    if (jj.contains("transform")) {
      spec.fixed_transform = pose6_from_json(jj.at("transform")).to_se3();
    }
    joints.push_back(spec);
  }
  PoseSE3 tool;
  if (j.contains("tool_transform")) {
    tool = pose6_from_json(j.at("tool_transform")).to_se3();
  }
  return KinematicChain(std::move(joints), tool);
}

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  criteria.validate();
  noise.validate();
  if (max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be >= 1");
  }
  if (seeds.empty()) throw std::invalid_argument("seeds must be non-empty");
  if (ee_model.empty()) {
    throw std::invalid_argument("end-effector model must have >= 1 solid");
  }
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig cfg;
  cfg.env = env_from_json(j.at("environment"));
  cfg.chain = chain_from_json(j.at("chain"));
  for (const auto& sj : j.at("end_effector").at("solids")) {
    cfg.ee_model.push_back(primitive_from_json(sj));
  }
  cfg.cloud_size = j.value("cloud_size", 200);

  if (j.contains("filter")) {
    const Json& f = j.at("filter");
    cfg.filter.sigma_p = f.value("sigma_p", cfg.filter.sigma_p);
    cfg.filter.delta_p = f.value("delta_p", cfg.filter.delta_p);
    cfg.filter.epsilon = f.value("epsilon", cfg.filter.epsilon);
    cfg.filter.particle_count = f.value("particles", cfg.filter.particle_count);
    cfg.filter.sigma_0 = f.value("sigma_0", cfg.filter.sigma_0);
    cfg.filter.literal_exponent =
        f.value("literal_exponent", cfg.filter.literal_exponent);
    cfg.filter.threads = f.value("threads", cfg.filter.threads);
  }
  if (j.contains("criteria")) {
    const Json& c = j.at("criteria");
    if (c.contains("theta_v")) cfg.criteria.theta_v = vec6_from_json(c["theta_v"]);
    if (c.contains("eps_m")) cfg.criteria.eps_m = vec6_from_json(c["eps_m"]);
    if (c.contains("eps_v")) cfg.criteria.eps_v = vec6_from_json(c["eps_v"]);
    cfg.criteria.window = c.value("window", cfg.criteria.window);
    cfg.criteria.delta_e = c.value("delta_e", cfg.criteria.delta_e);
    cfg.criteria.consecutive_required =
        c.value("consecutive_required", cfg.criteria.consecutive_required);
    cfg.criteria.alpha = c.value("alpha", cfg.criteria.alpha);
    cfg.criteria.beta = c.value("beta", cfg.criteria.beta);
    cfg.criteria.sigma_min = c.value("sigma_min", cfg.criteria.sigma_min);
    cfg.criteria.sigma_max = c.value("sigma_max", cfg.criteria.sigma_max);
  }
  if (j.contains("noise")) {
    const Json& n = j.at("noise");
    cfg.noise.contact_threshold =
        n.value("contact_threshold", cfg.noise.contact_threshold);
    cfg.noise.q_noise_sd = n.value("q_noise_sd", cfg.noise.q_noise_sd);
    cfg.noise.false_negative_rate =
        n.value("false_negative_rate", cfg.noise.false_negative_rate);
    cfg.noise.false_positive_rate =
        n.value("false_positive_rate", cfg.noise.false_positive_rate);
    cfg.noise.step_interval = n.value("step_interval", cfg.noise.step_interval);
    cfg.noise.max_slide = n.value("max_slide", cfg.noise.max_slide);
    cfg.noise.max_descent = n.value("max_descent", cfg.noise.max_descent);
    cfg.noise.lost_contact_depth =
        n.value("lost_contact_depth", cfg.noise.lost_contact_depth);
  }
  if (j.contains("action")) {
    const Json& a = j.at("action");
    cfg.action.pretouch_offset =
        a.value("pretouch_offset", cfg.action.pretouch_offset);
    cfg.action.segment_switch_prob =
        a.value("segment_switch_prob", cfg.action.segment_switch_prob);
  }
  const Json& w = j.at("world");
  cfg.nominal_pose = pose6_from_json(w.at("nominal_pose"));
  cfg.error_interval = vec6_from_json(w.at("error_interval"));

  if (j.contains("sdf")) {
    const Json& s = j.at("sdf");
    cfg.sdf_resolution = s.value("resolution", cfg.sdf_resolution);
    cfg.sdf_padding = s.value("padding", cfg.sdf_padding);
    cfg.sdf_cache = s.value("cache", cfg.sdf_cache);
  }
  cfg.candidate_count = j.value("candidates", cfg.candidate_count);
  cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : j.at("seeds")) {
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (j.contains("sweep")) {
    for (const auto& [key, values] : j.at("sweep").items()) {
      cfg.sweep[key] = std::vector<Json>(values.begin(), values.end());
    }
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

void apply_override(Json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must be path=value: " + assignment);
  }
  std::string path = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  // Sweep axes are flat keys that themselves contain dots
  // ("sweep.filter.sigma_p" names the axis "filter.sigma_p").
  if (path.rfind("sweep.", 0) == 0) {
    doc["sweep"][path.substr(6)] =
        Json::accept(value) ? Json::parse(value) : Json(value);
    return;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = Json::accept(value) ? Json::parse(value) : Json(value);
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  Json j = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j);
}

}  // namespace selfcal
