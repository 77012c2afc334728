#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mesoroute/experiment.hpp"

namespace {

using namespace mesoroute;

std::filesystem::path default_out() {
  if (const char* env = std::getenv("MESOROUTE_OUT")) return env;
  return "out";
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_validate(const std::string& scenario) {
  const auto diags = validate_scenario_file(scenario);
  if (diags.empty()) {
    std::cout << "ok: " << scenario << "\n";
    return 0;
  }
  for (const auto& d : diags)
    std::cout << to_string(d.code) << ": " << d.message << "\n";
  std::cout << diags.size() << " problem(s) found\n";
  return 1;
}

void print_summary(const RunOutcome& oc) {
  if (!oc.ok) {
    std::cout << oc.spec.name << ": FAILED: " << oc.error << "\n";
    return;
  }
  const auto& m = oc.metrics;
  std::cout << oc.spec.name << ": bus delay at horizon " << m.bus_delay_at_horizon
            << " s, cav mean travel " << m.cav.mean_travel << " s (" << m.cav.completed << "/"
            << m.cav.spawned << "), hv mean travel " << m.hv.mean_travel << " s ("
            << m.hv.completed << "/" << m.hv.spawned << ")\n";
  for (const auto& st : m.stations)
    std::cout << "  station " << st.node << ": " << st.pct_on_time << "% on time ("
              << st.arrivals << " arrivals, mean deviation " << st.mean_deviation << " s)\n";
  std::cout << "  destination: " << m.destination.pct_on_time << "% on time\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mesoscopic bus-priority traffic simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir = default_out().string();

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--scenario", scenario, "scenario json file")->required();

  std::string policy_str = "coordinated";
  std::uint64_t seed = 1;
  std::int64_t horizon = -1;
  double lambda = -1.0;
  int window_dl = -1, window_gpl = -1;
  double penetration = -1.0, total_demand = -1.0;
  bool no_trace = false;

  auto* simulate = app.add_subcommand("simulate", "run one policy and write outputs");
  simulate->add_option("--scenario", scenario, "scenario json file")->required();
  simulate->add_option("--policy", policy_str,
                       "srp | drp | coordinated | srp-no-joint-dl");
  simulate->add_option("--seed", seed, "rng seed");
  simulate->add_option("--horizon", horizon, "override the scenario horizon, s");
  simulate->add_option("--lambda", lambda, "override the trigger tolerance");
  simulate->add_option("--window-dl", window_dl, "override the dedicated-lane window, s");
  simulate->add_option("--window-gpl", window_gpl, "override the general-lane window, s");
  simulate->add_option("--penetration", penetration, "CAV share of demand, 0..1");
  simulate->add_option("--total-demand", total_demand, "total demand, veh/h");
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_flag("--no-trace", no_trace, "skip writing trace.jsonl");

  std::string policies_str = "srp,drp,coordinated,srp-no-joint-dl";
  std::string seeds_str = "1,2,3,4,5";
  int jobs = static_cast<int>(std::thread::hardware_concurrency());

  auto* compare = app.add_subcommand("compare", "run a policy/seed matrix and summarize");
  compare->add_option("--scenario", scenario, "scenario json file")->required();
  compare->add_option("--policies", policies_str, "comma-separated policy list");
  compare->add_option("--seeds", seeds_str, "comma-separated seed list");
  compare->add_option("--horizon", horizon, "override the scenario horizon, s");
  compare->add_option("--penetration", penetration, "CAV share of demand, 0..1");
  compare->add_option("--total-demand", total_demand, "total demand, veh/h");
  compare->add_option("--jobs", jobs, "worker threads");
  compare->add_option("--out", out_dir, "output directory");
  compare->add_flag("--no-trace", no_trace, "skip writing trace files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(scenario);

    const Scenario sc = load_scenario(scenario);
    const auto apply_overrides = [&](RunConfig& cfg) {
      if (horizon > 0) cfg.horizon = horizon;
      if (lambda >= 0.0) cfg.lambda = lambda;
      if (window_dl > 0) cfg.window_dl = window_dl;
      if (window_gpl > 0) cfg.window_gpl = window_gpl;
      if (penetration >= 0.0) cfg.cav_penetration = penetration;
      if (total_demand >= 0.0) cfg.total_per_hour = total_demand;
    };

    if (simulate->parsed()) {
      const auto policy = parse_policy(policy_str);
      if (!policy) {
        std::cerr << "unknown policy: " << policy_str << "\n";
        return 2;
      }
      RunSpec spec;
      spec.config.policy = *policy;
      spec.config.seed = seed;
      apply_overrides(spec.config);
      spec.name = policy_str + "-seed" + std::to_string(seed);
      const auto outcome = run_single(sc, spec, out_dir, !no_trace);
      print_summary(outcome);
      return outcome.ok ? 0 : 1;
    }

    // compare
    std::vector<RunSpec> specs;
    for (const auto& p : split_csv(policies_str)) {
      const auto policy = parse_policy(p);
      if (!policy) {
        std::cerr << "unknown policy: " << p << "\n";
        return 2;
      }
      for (const auto& s : split_csv(seeds_str)) {
        RunSpec spec;
        spec.config.policy = *policy;
        spec.config.seed = std::stoull(s);
        apply_overrides(spec.config);
        spec.name = p + "-seed" + s;
        specs.push_back(std::move(spec));
      }
    }
    const auto outcomes = run_matrix(sc, specs, out_dir, jobs, !no_trace);
    write_comparison(out_dir, outcomes);
    int failures = 0;
    for (const auto& oc : outcomes) {
      print_summary(oc);
      failures += oc.ok ? 0 : 1;
    }
    std::cout << outcomes.size() - static_cast<std::size_t>(failures) << "/" << outcomes.size()
              << " runs succeeded; summaries in " << out_dir << "\n";
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
