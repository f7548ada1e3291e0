#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "selfcal/experiment.hpp"

using namespace selfcal;

namespace {

void print_run(const RunResult& r) {
  std::cout << "seed=" << r.seed << " actions=" << r.iterations
            << " trans_cm=" << r.trans_error_cm
            << " rot_rad=" << r.rot_error_rad
            << " contacts/action=" << r.mean_contacts
            << " eval_ms=" << r.mean_eval_millis
            << (r.terminated_by_criteria ? " [terminated]" : " [max-iter]")
            << (r.failed ? (" FAILED: " + r.failure) : "") << "\n";
}

Json load_json(const std::string& path,
               const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  Json j = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

int cmd_run(const std::string& config, const std::vector<std::string>& set) {
  ExperimentConfig cfg = parse_config(load_json(config, set));
  RunContext ctx = make_context(cfg);
  bool all_terminated = true;
  for (std::uint64_t seed : cfg.seeds) {
    RunResult r = run_once(ctx, seed);
    print_run(r);
    all_terminated = all_terminated && r.terminated_by_criteria && !r.failed;
  }
  return all_terminated ? 0 : 1;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& set) {
  Json j = load_json(config, set);
  ExperimentConfig cfg = parse_config(j);
  SweepSummary s = run_sweep(cfg, j);
  std::filesystem::create_directories(cfg.output_dir);
  write_summary_csv(s, cfg.output_dir + "/summary.csv");
  write_timing_csv(s, cfg.output_dir + "/timing.csv");
  write_long_csv(s, cfg.output_dir + "/long.csv");
  bool ok = true;
  for (const auto& cell : s.cells) {
    for (const auto& r : cell.runs) {
      ok = ok && r.terminated_by_criteria && !r.failed;
    }
  }
  std::cout << "summary: " << cfg.output_dir << "/summary.csv\n";
  return ok ? 0 : 1;
}

int cmd_replay(const std::string& config, const std::string& log,
               const std::vector<std::string>& set) {
  ExperimentConfig cfg = parse_config(load_json(config, set));
  RunContext ctx = make_context(cfg);
  RunResult r = run_replay(ctx, log);
  print_run(r);
  return r.terminated_by_criteria && !r.failed ? 0 : 1;
}

int cmd_sdf_build(const std::string& config, const std::string& out,
                  const std::vector<std::string>& set) {
  ExperimentConfig cfg = parse_config(load_json(config, set));
  SdfGrid grid = build_sdf(cfg.env, cfg.sdf_resolution, cfg.sdf_padding);
  grid.save(out);
  std::cout << "grid " << grid.dims[0] << "x" << grid.dims[1] << "x"
            << grid.dims[2] << " at " << grid.resolution << " m -> " << out
            << "\n";
  return 0;
}

int cmd_report(const std::string& summary_path, const std::string& long_out) {
  std::ifstream in(summary_path);
  if (!in) throw std::runtime_error("cannot open " + summary_path);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      row.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty summary file");
  std::vector<std::size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < widths.size(); c++) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); c++) {
      std::cout << row[c] << std::string(widths[c] - row[c].size() + 2, ' ');
    }
    std::cout << "\n";
  }
  if (!long_out.empty()) {
    // Long format: one (row, column, value) triple per data cell.
    std::ofstream out(long_out);
    out << "row,column,value\n";
    for (std::size_t r = 1; r < rows.size(); r++) {
      for (std::size_t c = 0; c < rows[r].size(); c++) {
        out << r - 1 << "," << rows[0][c] << "," << rows[r][c] << "\n";
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact-based robot-environment self-calibration harness"};
  app.require_subcommand(1);

  std::string config, log_path, out_path, summary_path, long_out;
  std::vector<std::string> set;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "experiment config (JSON)")
        ->required();
    sub->add_option("--set", set, "override a config leaf: dotted.path=value");
  };

  CLI::App* run = app.add_subcommand("run", "run single experiments per seed");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "run the config's sweep grid");
  add_common(sweep);
  CLI::App* replay =
      app.add_subcommand("replay", "feed a logged observation stream");
  add_common(replay);
  replay->add_option("--log", log_path, "observations JSONL")->required();
  CLI::App* sdf = app.add_subcommand("sdf-build", "build and cache the SDF grid");
  add_common(sdf);
  sdf->add_option("-o,--out", out_path, "output grid file")->required();
  CLI::App* report = app.add_subcommand("report", "print a summary CSV");
  report->add_option("summary", summary_path, "summary.csv path")->required();
  report->add_option("--long", long_out, "also write long-format CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, set);
    if (sweep->parsed()) return cmd_sweep(config, set);
    if (replay->parsed()) return cmd_replay(config, log_path, set);
    if (sdf->parsed()) return cmd_sdf_build(config, out_path, set);
    if (report->parsed()) return cmd_report(summary_path, long_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
