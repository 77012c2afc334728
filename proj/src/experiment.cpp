#include "mesoroute/experiment.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <thread>

#include <nlohmann/json.hpp>

namespace mesoroute {

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << std::setprecision(12);
  return out;
}

void write_config(const std::filesystem::path& p, const Scenario& sc, const RunConfig& cfg) {
  nlohmann::json j;
  j["scenario"] = sc.name;
  j["policy"] = to_string(cfg.policy);
  j["seed"] = cfg.seed;
  if (cfg.horizon) j["horizon"] = *cfg.horizon;
  if (cfg.lambda) j["lambda"] = *cfg.lambda;
  if (cfg.window_dl) j["window_dl"] = *cfg.window_dl;
  if (cfg.window_gpl) j["window_gpl"] = *cfg.window_gpl;
  if (cfg.cav_penetration) j["cav_penetration"] = *cfg.cav_penetration;
  if (cfg.total_per_hour) j["total_per_hour"] = *cfg.total_per_hour;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << j.dump(2) << '\n';
}

void write_metrics_files(const std::filesystem::path& dir, const MetricsReport& m) {
  {
    auto out = open_csv(dir / "series.csv");
    out << "t,bus_delay,cum_cav_time,cum_hv_time\n";
    for (std::size_t i = 0; i < m.bus_delay.size(); ++i)
      out << m.bus_delay[i].t << ',' << m.bus_delay[i].value << ','
          << m.cum_cav_time[i].value << ',' << m.cum_hv_time[i].value << '\n';
  }
  {
    auto out = open_csv(dir / "stations.csv");
    out << "station,arrivals,on_time,pct_on_time,mean_deviation\n";
    for (const auto& st : m.stations)
      out << st.node << ',' << st.arrivals << ',' << st.on_time << ',' << st.pct_on_time
          << ',' << st.mean_deviation << '\n';
    out << "destination," << m.destination.arrivals << ',' << m.destination.on_time << ','
        << m.destination.pct_on_time << ',' << m.destination.mean_deviation << '\n';
  }
  {
    auto out = open_csv(dir / "classes.csv");
    out << "class,spawned,completed,mean_travel,p90_travel,mean_delay,p90_delay\n";
    const auto row = [&](const char* name, const ClassStats& cs) {
      out << name << ',' << cs.spawned << ',' << cs.completed << ',' << cs.mean_travel << ','
          << cs.p90_travel << ',' << cs.mean_delay << ',' << cs.p90_delay << '\n';
    };
    row("cav", m.cav);
    row("hv", m.hv);
    row("bus", m.bus);
  }
}

}  // namespace

RunOutcome run_single(const Scenario& sc, const RunSpec& spec,
                      const std::filesystem::path& out_dir, bool write_trace) {
  RunOutcome outcome;
  outcome.spec = spec;
  try {
    std::filesystem::create_directories(out_dir);
    write_config(out_dir / "config.json", sc, spec.config);
    World world(sc, spec.config);
    world.run();
    const auto trace = world.take_trace();
    if (write_trace) write_trace_file(out_dir / "trace.jsonl", trace);
    outcome.metrics = accumulate_metrics(sc, trace);
    write_metrics_files(out_dir, outcome.metrics);
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = e.what();
  }
  return outcome;
}

std::vector<RunOutcome> run_matrix(const Scenario& sc, const std::vector<RunSpec>& specs,
                                   const std::filesystem::path& out_root, int jobs,
                                   bool write_traces) {
  std::vector<RunOutcome> outcomes(specs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      outcomes[i] = run_single(sc, specs[i], out_root / specs[i].name, write_traces);
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return outcomes;
}

void write_comparison(const std::filesystem::path& out_root,
                      const std::vector<RunOutcome>& outcomes) {
  std::filesystem::create_directories(out_root);
  {
    auto out = open_csv(out_root / "runs.csv");
    out << "name,policy,seed,ok,error,bus_delay_at_horizon,"
           "cav_mean_travel,cav_p90_travel,cav_mean_delay,"
           "hv_mean_travel,hv_p90_travel,hv_mean_delay,"
           "bus_p90_travel,bus_mean_deviation,dest_pct_on_time\n";
    for (const auto& oc : outcomes) {
      const auto& m = oc.metrics;
      out << oc.spec.name << ',' << to_string(oc.spec.config.policy) << ','
          << oc.spec.config.seed << ',' << (oc.ok ? 1 : 0) << ',' << oc.error << ','
          << m.bus_delay_at_horizon << ',' << m.cav.mean_travel << ',' << m.cav.p90_travel
          << ',' << m.cav.mean_delay << ',' << m.hv.mean_travel << ',' << m.hv.p90_travel
          << ',' << m.hv.mean_delay << ',' << m.bus.p90_travel << ',' << m.bus.mean_delay
          << ',' << m.destination.pct_on_time << '\n';
    }
  }
  {
    auto out = open_csv(out_root / "stations_long.csv");
    out << "name,policy,seed,station,arrivals,on_time,pct_on_time,mean_deviation\n";
    for (const auto& oc : outcomes) {
      if (!oc.ok) continue;
      const auto row = [&](const std::string& label, const StationStats& st) {
        out << oc.spec.name << ',' << to_string(oc.spec.config.policy) << ','
            << oc.spec.config.seed << ',' << label << ',' << st.arrivals << ',' << st.on_time
            << ',' << st.pct_on_time << ',' << st.mean_deviation << '\n';
      };
      for (const auto& st : oc.metrics.stations) row(std::to_string(st.node), st);
      row("destination", oc.metrics.destination);
    }
  }
  {
    auto out = open_csv(out_root / "series_long.csv");
    out << "name,policy,seed,t,bus_delay,cum_cav_time,cum_hv_time\n";
    for (const auto& oc : outcomes) {
      if (!oc.ok) continue;
      const auto& m = oc.metrics;
      for (std::size_t i = 0; i < m.bus_delay.size(); ++i)
        out << oc.spec.name << ',' << to_string(oc.spec.config.policy) << ','
            << oc.spec.config.seed << ',' << m.bus_delay[i].t << ',' << m.bus_delay[i].value
            << ',' << m.cum_cav_time[i].value << ',' << m.cum_hv_time[i].value << '\n';
    }
  }
}

}  // namespace mesoroute
