// sim_harness: closed-loop multi-agent rollouts from the command line.
//
//   sim_harness simulate --scenario s.json --predictor cv --branching 1,2,4,4 --out runs/
//   sim_harness evaluate runs/s.rollouts.json --scenario s.json --out runs/
//   sim_harness oracle-check --agents 4 --trials 500 --seed 1
//   sim_harness export runs/s.rollouts.json --out plots/
//   sim_harness serve            (constant-velocity predictor on stdin/stdout)
//
// Exit codes: 0 ok, 1 invalid input or configuration, 2 predictor failure,
// 3 internal error (including a failed oracle soundness check).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "simagents/simagents.hpp"

namespace fs = std::filesystem;
using namespace simagents;

namespace {

enum ExitCode { kOk = 0, kInvalid = 1, kPredictor = 2, kInternal = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("sim_harness");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("SIM_HARNESS_LOG");
  const std::string level = env ? env : "info";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    spdlog::set_level(spdlog::level::info);
  if (env && level != "error" && level != "info" && level != "debug")
    spdlog::warn("SIM_HARNESS_LOG='{}' not recognised; using info", level);
}

std::string json_of(const std::vector<std::size_t>& v) { return json(v).dump(); }

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::vector<std::string> scenarios;
  std::string predictor = "cv";
  std::vector<std::string> endpoints;
  std::uint64_t seed = 0;
  std::size_t rollouts = 32;
  std::vector<std::size_t> branching{1, 1, 1, 1};
  double update_hz = 0.5;
  std::size_t horizon_frames = 20;
  bool no_collision_policy = false;
  bool filter_branches = false;
  double density_threshold = kDefaultDensityThreshold;
  std::size_t jobs = 1;
  std::size_t timeout_ms = 30'000;
  std::string out = ".";
  std::string manifest;
};

// Manifest keys mirror the long flag names with '-' replaced by '_'.
void apply_manifest(SimulateOptions& o, const json& m, const CLI::App& cmd) {
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (auto it = m.find(key); it != m.end() && !given(flag)) it->get_to(field);
  };
  if (!m.is_object()) throw ParseError("manifest: expected an object");
  take("scenario", "--scenario", o.scenarios);
  take("predictor", "--predictor", o.predictor);
  take("endpoint", "--endpoint", o.endpoints);
  take("seed", "--seed", o.seed);
  take("rollouts", "--rollouts", o.rollouts);
  take("branching", "--branching", o.branching);
  take("update_hz", "--update-hz", o.update_hz);
  take("horizon_frames", "--horizon-frames", o.horizon_frames);
  take("no_collision_policy", "--no-collision-policy", o.no_collision_policy);
  take("filter_branches", "--filter-branches", o.filter_branches);
  take("density_threshold", "--density-threshold", o.density_threshold);
  take("jobs", "--jobs", o.jobs);
  take("timeout_ms", "--timeout-ms", o.timeout_ms);
  take("out", "--out", o.out);
}

RolloutConfig config_from(const SimulateOptions& o) {
  if (o.update_hz != 0.5 && o.update_hz != 10.0)
    throw ValidationError("--update-hz must be 0.5 or 10");
  RolloutConfig c;
  c.update_period = 1.0 / o.update_hz;
  c.horizon_frames = o.horizon_frames;
  c.collision_policy_enabled = !o.no_collision_policy;
  c.filter_branches_by_collision = o.filter_branches;
  c.selection.density_threshold = o.density_threshold;
  c.branching = o.branching;
  c.rollouts_required = o.rollouts;
  c.validate();
  return c;
}

json config_to_json(const RolloutConfig& c, const SimulateOptions& o) {
  return {{"predictor", o.predictor},
          {"endpoints", o.endpoints},
          {"seed", o.seed},
          {"update_period_s", c.update_period},
          {"total_duration_s", c.total_duration},
          {"horizon_frames", c.horizon_frames},
          {"steps", c.step_count()},
          {"collision_policy", c.collision_policy_enabled},
          {"filter_branches_by_collision", c.filter_branches_by_collision},
          {"density_threshold", c.selection.density_threshold},
          {"branching", c.effective_branching()},
          {"rollouts_required", c.rollouts_required},
          {"jobs", o.jobs}};
}

// Variant count follows from the arity rule for built-ins; bridge variants
// are the endpoints themselves.
std::vector<PredictorPtr> make_variants(const SimulateOptions& o, const RolloutConfig& c,
                                        const std::shared_ptr<const Scenario>& scenario) {
  std::vector<PredictorPtr> v;
  if (o.predictor == "bridge") {
    if (o.endpoints.empty()) throw ValidationError("--predictor bridge needs at least one --endpoint");
    for (const auto& e : o.endpoints)
      v.push_back(std::make_shared<BridgePredictor>(
          BridgeConfig{BridgeEndpoint::parse(e), std::chrono::milliseconds(o.timeout_ms)}));
    return v;
  }
  if (!o.endpoints.empty()) throw ValidationError("--endpoint is only valid with --predictor bridge");
  const std::size_t per_variant = c.branch_count();
  if (c.rollouts_required % per_variant != 0)
    throw ValidationError(std::to_string(c.rollouts_required) + " rollouts is not a multiple of the " +
                          std::to_string(per_variant) + " branches per variant");
  const std::size_t n = c.rollouts_required / per_variant;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = o.predictor + "-" + std::to_string(i);
    if (o.predictor == "cv")
      v.push_back(std::make_shared<ConstantVelocityPredictor>(name));
    else if (o.predictor == "replay")
      v.push_back(std::make_shared<ReplayPredictor>(scenario, name));
    else
      throw ValidationError("unknown predictor '" + o.predictor + "' (cv, replay, bridge)");
  }
  return v;
}

json provenance(const std::vector<Rollout>& rollouts) {
  json out = json::array();
  for (const auto& r : rollouts) {
    json steps = json::array();
    for (const auto& s : r.steps)
      steps.push_back({{"step", s.step},
                       {"branch_rank", s.branch_rank},
                       {"selection", s.selection.vertices},
                       {"outcome", std::string(to_string(s.outcome))},
                       {"search_calls", s.search_calls},
                       {"predicted_collisions", s.predicted_collisions}});
    out.push_back({{"variant_id", r.variant_id}, {"branch_path", r.branch_path}, {"steps", std::move(steps)}});
  }
  return out;
}

int cmd_simulate(SimulateOptions o, const CLI::App& cmd) {
  if (!o.manifest.empty()) apply_manifest(o, parse_json_text(read_text_file(o.manifest), o.manifest), cmd);
  if (o.scenarios.empty()) throw ValidationError("at least one --scenario is required");
  const RolloutConfig config = config_from(o);
  if (o.predictor == "bridge") config.validate_arity(o.endpoints.size());
  if (config.is_high_frequency())
    spdlog::warn("replanning every {} s; high update rates are supported but degrade rollouts", config.update_period);

  std::vector<std::shared_ptr<const Scenario>> scenarios;
  for (const auto& path : o.scenarios) {
    try {
      scenarios.push_back(std::make_shared<const Scenario>(load_scenario(path)));
    } catch (const std::exception& e) {
      throw ValidationError("scenario '" + path + "': " + e.what());
    }
  }
  // Check every scenario's variants before any predictor call.
  std::vector<std::vector<PredictorPtr>> variants;
  for (const auto& s : scenarios) {
    variants.push_back(make_variants(o, config, s));
    config.validate_arity(variants.back().size());
  }

  fs::create_directories(o.out);
  std::vector<json> per_scenario(scenarios.size());
  const std::size_t outer_jobs = scenarios.size() > 1 ? o.jobs : 1;
  const std::size_t inner_jobs = scenarios.size() > 1 ? 1 : o.jobs;
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(scenarios.size(), outer_jobs, [&](std::size_t i) {
    const Scenario& s = *scenarios[i];
    const auto start = std::chrono::steady_clock::now();
    std::vector<Rollout> rollouts;
    try {
      rollouts = run_ensemble(s, variants[i], config, inner_jobs);
    } catch (const PredictorError& e) {
      throw PredictorError("scenario '" + s.scenario_id + "': " + e.what(), e.step());
    } catch (const ValidationError& e) {
      throw ValidationError("scenario '" + s.scenario_id + "': " + e.what());
    }
    const std::string file = sanitize_filename(s.scenario_id) + ".rollouts.json";
    save_rollouts(fs::path(o.out) / file, s.scenario_id, rollouts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::size_t fallbacks = 0;
    for (const auto& r : rollouts)
      for (const auto& st : r.steps) fallbacks += st.outcome == SelectionOutcome::fallback_top1;
    spdlog::info("{}: {} rollouts -> {} ({:.3f} s, {} fallback steps)", s.scenario_id, rollouts.size(), file, secs,
                 fallbacks);
    per_scenario[i] = {{"scenario_id", s.scenario_id},
                       {"rollout_file", file},
                       {"wall_time_s", secs},
                       {"fallback_steps", fallbacks},
                       {"rollouts", provenance(rollouts)}};
  });
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json summary = {{"config", config_to_json(config, o)},
                  {"discouraged_update_rate", config.is_high_frequency()},
                  {"wall_time_s", total},
                  {"scenarios", per_scenario}};
  write_text_file_atomic(fs::path(o.out) / "summary.json", summary.dump(1) + "\n");
  return kOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const std::vector<std::string>& files, const std::string& scenario_path, const std::string& out) {
  const Scenario scenario = load_scenario(scenario_path);
  for (const auto& a : scenario.agents)
    if (!a.ground_truth_future)
      throw ValidationError("scenario '" + scenario.scenario_id + "': agent '" + a.id +
                            "' has no ground_truth_future; evaluation needs the logged future");
  std::vector<Rollout> rollouts;
  for (const auto& f : files) {
    auto rf = load_rollouts(f);
    if (rf.scenario_id != scenario.scenario_id)
      throw ValidationError("'" + f + "' holds scenario '" + rf.scenario_id + "', expected '" +
                            scenario.scenario_id + "'");
    for (auto& r : rf.rollouts) rollouts.push_back(std::move(r));
  }
  const auto report = evaluate(scenario, rollouts);
  fs::create_directories(out);
  const std::string stem = sanitize_filename(scenario.scenario_id);
  write_text_file_atomic(fs::path(out) / (stem + ".report.json"), report_to_json(report).dump(1) + "\n");
  write_text_file_atomic(fs::path(out) / (stem + ".report.csv"), report_to_csv(report));
  std::printf("%s: %zu rollouts, minADE %s m\n", scenario.scenario_id.c_str(), report.rollout_count,
              format_double(report.min_ade).c_str());
  return kOk;
}

// ------------------------------------------------------------ oracle-check

struct OracleOptions {
  std::size_t agents = 4;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  std::optional<double> edge_probability;
  double density_threshold = kDefaultDensityThreshold;
};

// Edge probability sweep used when none is fixed: 0.30, 0.35, ..., 0.95.
constexpr int kSweepSteps = 14;

int cmd_oracle_check(const OracleOptions& o) {
  if (o.agents == 0 || o.agents > kMaxBruteForceAgents)
    throw ValidationError("--agents must be in [1, " + std::to_string(kMaxBruteForceAgents) + "]");
  if (o.trials == 0) throw ValidationError("--trials must be >= 1");
  if (o.edge_probability && (*o.edge_probability < 0.0 || *o.edge_probability > 1.0))
    throw ValidationError("--edge-prob must be in [0, 1]");

  std::mt19937_64 rng(o.seed);
  std::size_t found = 0, zero_found = 0, oracle_zero = 0, violations = 0, fast = 0;
  double heuristic_collisions = 0.0, oracle_collisions = 0.0, max_shortfall = 0.0;
  for (std::size_t t = 0; t < o.trials; ++t) {
    const double p = o.edge_probability ? *o.edge_probability
                                        : 0.30 + 0.05 * static_cast<double>(t % kSweepSteps);
    const auto g = random_collision_graph(o.agents, p, rng);
    SelectionSearchStats stats;
    const auto sel = find_selection(g, o.density_threshold, &stats);
    const auto oracle = brute_force_selection(g);
    oracle_collisions += static_cast<double>(oracle.collisions);
    oracle_zero += oracle.collisions == 0;
    fast += stats.fast_path;
    if (!sel) continue;
    ++found;
    const double density = subgraph_density(g, sel->vertices);
    const std::size_t c = count_collisions(g, *sel);
    heuristic_collisions += static_cast<double>(c);
    zero_found += c == 0;
    max_shortfall = std::max(max_shortfall, o.density_threshold - density);
    bool ok = sel->is_well_formed(o.agents) && density >= o.density_threshold && c >= oracle.collisions;
    if (o.density_threshold == kDefaultDensityThreshold) ok = ok && c <= dense_collision_bound(o.agents);
    if (density == 1.0) ok = ok && c == 0;
    if (!ok) {
      ++violations;
      spdlog::error("trial {}: selection {} density {} collisions {} violates the soundness bound", t,
                    json_of(sel->vertices), density, c);
    }
  }
  const double n = static_cast<double>(o.trials);
  std::printf("agents %zu, trials %zu, seed %llu, edge probability %s\n", o.agents, o.trials,
              static_cast<unsigned long long>(o.seed),
              o.edge_probability ? format_double(*o.edge_probability).c_str() : "sweep 0.3-0.95");
  std::printf("fast path            %zu/%zu\n", fast, o.trials);
  std::printf("heuristic success    %zu/%zu (%.4f)\n", found, o.trials, static_cast<double>(found) / n);
  std::printf("collision-free found %zu/%zu oracle collision-free\n", zero_found, oracle_zero);
  std::printf("mean collisions      heuristic %.6f (over successes), oracle %.6f\n",
              found ? heuristic_collisions / static_cast<double>(found) : 0.0, oracle_collisions / n);
  std::printf("max density shortfall %.6f\n", std::max(0.0, max_shortfall));
  std::printf("soundness violations %zu\n", violations);
  return violations == 0 ? kOk : kInternal;
}

// ------------------------------------------------------------------ export

int cmd_export(const std::string& file, const std::string& out, const std::vector<std::size_t>& indices, bool all) {
  const auto rf = load_rollouts(file);
  std::vector<std::size_t> chosen = indices;
  if (all) {
    chosen.resize(rf.rollouts.size());
    std::iota(chosen.begin(), chosen.end(), 0);
  } else if (chosen.empty()) {
    chosen.push_back(0);
  }
  fs::create_directories(out);
  for (std::size_t i : chosen) {
    if (i >= rf.rollouts.size())
      throw ValidationError("rollout index " + std::to_string(i) + " out of range (file has " +
                            std::to_string(rf.rollouts.size()) + ")");
    const Rollout& r = rf.rollouts[i];
    const std::string stem =
        sanitize_filename(rf.scenario_id + "_" + r.variant_id + "_" + join_path(r.branch_path));
    for (const auto& t : r.agents)
      write_text_file_atomic(fs::path(out) / (stem + "_" + sanitize_filename(t.id) + ".csv"), track_to_csv(t));
    write_text_file_atomic(fs::path(out) / (stem + ".svg"), rollout_to_svg(r));
    spdlog::info("exported rollout {} ({} agents) as {}", i, r.agents.size(), stem);
  }
  return kOk;
}

// ------------------------------------------------------------------- serve

// Constant-velocity predictor behind the bridge protocol on stdin/stdout.
int cmd_serve() {
  ConstantVelocityPredictor cv;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    std::string reply;
    try {
      auto owned = wire::decode_request(line);
      reply = wire::encode_response(owned.request, cv.predict(owned.request));
    } catch (const std::exception& e) {
      reply = wire::encode_error(e.what());
    }
    std::cout << reply << '\n' << std::flush;
  }
  return kOk;
}

std::vector<std::size_t> parse_branching(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size()) throw ValidationError("--branching: '" + s + "' is not a list like 1,2,4,4");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("--branching: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Closed-loop multi-agent rollout harness"};
  app.require_subcommand(1);

  SimulateOptions sim;
  std::string branching_text;
  auto* simulate = app.add_subcommand("simulate", "Run rollouts for one or more scenarios");
  simulate->add_option("--scenario", sim.scenarios, "Scenario file (repeatable)");
  simulate->add_option("--predictor", sim.predictor, "cv | replay | bridge");
  simulate->add_option("--endpoint", sim.endpoints, "Bridge endpoint HOST:PORT or exec:COMMAND (one per variant)");
  simulate->add_option("--seed", sim.seed, "Run seed, recorded in the summary");
  simulate->add_option("--rollouts", sim.rollouts, "Rollouts per scenario");
  simulate->add_option("--branching", branching_text, "Alternatives per step, e.g. 1,2,4,4");
  simulate->add_option("--update-hz", sim.update_hz, "Replanning rate: 0.5 or 10");
  simulate->add_option("--horizon-frames", sim.horizon_frames, "Frames per plan");
  simulate->add_flag("--no-collision-policy", sim.no_collision_policy, "Always execute the most likely modes");
  simulate->add_flag("--filter-branches", sim.filter_branches, "Rank collision-free alternatives first");
  simulate->add_option("--density-threshold", sim.density_threshold, "Dense-subgraph threshold");
  simulate->add_option("--jobs", sim.jobs, "Worker threads");
  simulate->add_option("--timeout-ms", sim.timeout_ms, "Bridge response timeout");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--manifest", sim.manifest, "JSON run manifest; flags override it");

  std::vector<std::string> eval_files;
  std::string eval_scenario, eval_out = ".";
  auto* eval = app.add_subcommand("evaluate", "Score rollout files against a scenario's logged future");
  eval->add_option("rollout_files", eval_files, "Rollout files")->required();
  eval->add_option("--scenario", eval_scenario, "Scenario file with ground truth")->required();
  eval->add_option("--out", eval_out, "Output directory");

  OracleOptions oracle;
  double edge_prob = -1.0;
  auto* check = app.add_subcommand("oracle-check", "Compare the selection heuristic with exhaustive search");
  check->add_option("--agents", oracle.agents, "Agents per graph (<= 7)");
  check->add_option("--trials", oracle.trials, "Random graphs");
  check->add_option("--seed", oracle.seed, "RNG seed");
  auto* edge_opt = check->add_option("--edge-prob", edge_prob, "Probability that two modes are collision-free (default: sweep)");
  check->add_option("--density-threshold", oracle.density_threshold, "Dense-subgraph threshold");

  std::string export_file, export_out = ".";
  std::vector<std::size_t> export_indices;
  bool export_all = false;
  auto* export_cmd = app.add_subcommand("export", "Write per-agent CSV tracks and an SVG plot");
  export_cmd->add_option("rollout_file", export_file, "Rollout file")->required();
  export_cmd->add_option("--out", export_out, "Output directory");
  export_cmd->add_option("--index", export_indices, "Rollout index in the file (repeatable, default 0)");
  export_cmd->add_flag("--all", export_all, "Export every rollout");

  auto* serve = app.add_subcommand("serve", "Serve constant-velocity predictions over stdin/stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*simulate) {
      if (!branching_text.empty()) sim.branching = parse_branching(branching_text);
      return cmd_simulate(sim, *simulate);
    }
    if (*eval) return cmd_evaluate(eval_files, eval_scenario, eval_out);
    if (*check) {
      if (edge_opt->count()) oracle.edge_probability = edge_prob;
      return cmd_oracle_check(oracle);
    }
    if (*export_cmd) return cmd_export(export_file, export_out, export_indices, export_all);
    if (*serve) return cmd_serve();
  } catch (const PredictorError& e) {
    spdlog::error("predictor failure: {}", e.what());
    return kPredictor;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const json::exception& e) {
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternal;
  }
  return kInternal;
}
