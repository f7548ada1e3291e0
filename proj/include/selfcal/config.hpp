#pragma once

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "selfcal/action.hpp"
#include "selfcal/convergence.hpp"
#include "selfcal/world.hpp"

namespace selfcal {

using Json = nlohmann::json;

struct ExperimentConfig {
  EnvironmentModel env;
  KinematicChain chain{{JointSpec{}}};
  std::vector<Primitive> ee_model;
  int cloud_size = 200;
  FilterParams filter;
  CriteriaConfig criteria;
  NoiseConfig noise;
  ActionSelectParams action;
  Pose6 nominal_pose;
  Vec6 error_interval = Vec6::Zero();
  double sdf_resolution = 0.005;
  double sdf_padding = 0.3;
  std::string sdf_cache;  // optional grid cache file
  int candidate_count = 1000;
  int max_iterations = 80;
  std::vector<std::uint64_t> seeds{0};
  std::map<std::string, std::vector<Json>> sweep;  // dotted path -> values
  std::string output_dir = "runs";

  void validate() const;
};

Pose6 pose6_from_json(const Json& j);
Json pose6_to_json(const Pose6& p);
Vec6 vec6_from_json(const Json& j);

ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

// Apply a "dotted.path=value" override to a JSON document; the value is
// parsed as JSON when possible, otherwise taken as a string.
void apply_override(Json& doc, const std::string& assignment);

}  // namespace selfcal
