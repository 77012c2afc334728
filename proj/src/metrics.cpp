#include "mesoroute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "mesoroute/router.hpp"

namespace mesoroute {

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (p <= 0.0 || p > 1.0) throw std::invalid_argument("percentile order must be in (0,1]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

namespace {

struct VehRecord {
  VehicleClass vclass = VehicleClass::Hv;
  Seconds spawn = -1;
  Seconds complete = -1;  // -1 while on the road
  Label origin = -1;
  Label destination = -1;
  Seconds sched = -1;       // buses
  Seconds deviation = 0;    // buses, at the terminus
  bool dest_on_time = false;
};

using BaselineMap = std::map<std::pair<Label, Label>, double>;

ClassStats finalize_class(const std::vector<const VehRecord*>& done, int spawned,
                          const BaselineMap& baselines) {
  ClassStats out;
  out.spawned = spawned;
  out.completed = static_cast<int>(done.size());
  if (done.empty()) return out;
  std::vector<double> travel, delay;
  travel.reserve(done.size());
  delay.reserve(done.size());
  for (const VehRecord* r : done) {
    const double tt = static_cast<double>(r->complete - r->spawn);
    travel.push_back(tt);
    const auto it = baselines.find({r->origin, r->destination});
    if (it != baselines.end()) delay.push_back(tt - it->second);
  }
  double sum = 0.0;
  for (double v : travel) sum += v;
  out.mean_travel = sum / static_cast<double>(travel.size());
  out.p90_travel = percentile_nearest_rank(travel, 0.9);
  if (!delay.empty()) {
    sum = 0.0;
    for (double v : delay) sum += v;
    out.mean_delay = sum / static_cast<double>(delay.size());
    out.p90_delay = percentile_nearest_rank(delay, 0.9);
  }
  return out;
}

}  // namespace

MetricsReport accumulate_metrics(const Scenario& sc, std::span<const TraceEvent> events,
                                 int sample_dt) {
  if (sample_dt < 1) throw std::invalid_argument("sample_dt must be positive");
  MetricsReport rep;
  rep.horizon = sc.params.horizon;

  std::unordered_map<int, VehRecord> vehs;
  std::map<Label, StationStats> stations;
  std::vector<Label> station_order;
  for (const auto& line : sc.bus_lines)
    for (const auto& st : line.stops) {
      const Label l = sc.net.node(st.node).label;
      if (stations.emplace(l, StationStats{l, 0, 0, 0.0, 0.0}).second)
        station_order.push_back(l);
    }

  for (const TraceEvent& ev : events) {
    switch (ev.kind) {
      case EventKind::Meta:
        rep.policy = ev.policy;
        rep.seed = ev.seed;
        if (ev.horizon > 0) rep.horizon = ev.horizon;
        break;
      case EventKind::Spawn: {
        VehRecord r;
        r.vclass = ev.vclass.value_or(VehicleClass::Hv);
        r.spawn = ev.t;
        r.origin = ev.origin;
        r.destination = ev.destination;
        r.sched = ev.sched;
        vehs[ev.vehicle] = r;
        break;
      }
      case EventKind::StopArrival: {
        auto& st = stations[ev.node];
        st.node = ev.node;
        if (st.arrivals == 0 &&
            std::find(station_order.begin(), station_order.end(), ev.node) ==
                station_order.end())
          station_order.push_back(ev.node);
        ++st.arrivals;
        st.on_time += ev.on_time.value_or(false) ? 1 : 0;
        st.mean_deviation += static_cast<double>(ev.deviation);
        break;
      }
      case EventKind::Complete: {
        auto& r = vehs[ev.vehicle];
        r.complete = ev.t;
        if (r.vclass == VehicleClass::Bus) {
          r.deviation = ev.deviation;
          r.dest_on_time = ev.on_time.value_or(false);
          ++rep.destination.arrivals;
          rep.destination.on_time += r.dest_on_time ? 1 : 0;
          rep.destination.mean_deviation += static_cast<double>(ev.deviation);
        }
        break;
      }
      default:
        break;
    }
  }

  for (Label l : station_order) {
    StationStats st = stations[l];
    if (st.arrivals > 0) {
      st.mean_deviation /= st.arrivals;
      st.pct_on_time = 100.0 * st.on_time / st.arrivals;
    }
    rep.stations.push_back(st);
  }
  if (rep.destination.arrivals > 0) {
    rep.destination.mean_deviation /= rep.destination.arrivals;
    rep.destination.pct_on_time = 100.0 * rep.destination.on_time / rep.destination.arrivals;
  }

  // Free-flow baselines per od, honoring the run's lane permissions.
  const bool cav_dl = rep.policy != "srp-no-joint-dl";
  BaselineMap cav_base, hv_base;
  for (const auto& [vid, r] : vehs) {
    if (r.vclass == VehicleClass::Bus) continue;
    auto& table = r.vclass == VehicleClass::Cav ? cav_base : hv_base;
    const std::pair<Label, Label> key{r.origin, r.destination};
    if (table.count(key)) continue;
    const auto o = sc.net.node_by_label(r.origin);
    const auto d = sc.net.node_by_label(r.destination);
    if (!o || !d) continue;
    const auto best = srp_route(sc.net, *o, *d, r.vclass,
                                r.vclass == VehicleClass::Cav ? cav_dl : true);
    if (best) table.emplace(key, best->cost);
  }

  std::vector<const VehRecord*> done_cav, done_hv, done_bus;
  int n_cav = 0, n_hv = 0, n_bus = 0;
  for (const auto& [vid, r] : vehs) {
    switch (r.vclass) {
      case VehicleClass::Cav:
        ++n_cav;
        if (r.complete >= 0) done_cav.push_back(&r);
        break;
      case VehicleClass::Hv:
        ++n_hv;
        if (r.complete >= 0) done_hv.push_back(&r);
        break;
      case VehicleClass::Bus:
        ++n_bus;
        if (r.complete >= 0) done_bus.push_back(&r);
        break;
    }
  }
  rep.cav = finalize_class(done_cav, n_cav, cav_base);
  rep.hv = finalize_class(done_hv, n_hv, hv_base);
  rep.bus = finalize_class(done_bus, n_bus, {});
  if (!done_bus.empty()) {
    double sum = 0.0;
    std::vector<double> devs;
    for (const VehRecord* r : done_bus) {
      sum += static_cast<double>(r->deviation);
      devs.push_back(static_cast<double>(r->deviation));
    }
    rep.bus.mean_delay = sum / static_cast<double>(done_bus.size());
    rep.bus.p90_delay = percentile_nearest_rank(devs, 0.9);
  }

  // Time series.
  std::vector<Seconds> samples;
  for (Seconds t = 0; t <= rep.horizon; t += sample_dt) samples.push_back(t);
  if (samples.empty() || samples.back() != rep.horizon) samples.push_back(rep.horizon);

  for (Seconds t : samples) {
    double bus_delay = 0.0, cav_time = 0.0, hv_time = 0.0;
    for (const auto& [vid, r] : vehs) {
      if (r.vclass == VehicleClass::Bus) {
        const Seconds arr = r.complete >= 0 ? r.complete : std::numeric_limits<Seconds>::max();
        const Seconds pos = std::min(t, arr) - r.sched;
        if (pos > 0) bus_delay += static_cast<double>(pos);
        continue;
      }
      if (r.spawn > t) continue;
      const Seconds end = r.complete >= 0 ? std::min(r.complete, t) : t;
      (r.vclass == VehicleClass::Cav ? cav_time : hv_time) +=
          static_cast<double>(end - r.spawn);
    }
    rep.bus_delay.push_back({t, bus_delay});
    rep.cum_cav_time.push_back({t, cav_time});
    rep.cum_hv_time.push_back({t, hv_time});
  }
  rep.bus_delay_at_horizon = rep.bus_delay.back().value;
  return rep;
}

}  // namespace mesoroute
