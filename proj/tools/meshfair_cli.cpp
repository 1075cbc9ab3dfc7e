// meshfair: run single simulations, scheme-comparison sweeps, parameter
// calibration and zoning inspection.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "meshfair/emit.hpp"

using namespace meshfair;

namespace {

struct ConfigOptions {
  std::string config_file;
  bool no_defaults = false;
  std::map<std::string, std::string> overrides;
};

// Every SimConfig key becomes a --key flag.
void add_config_options(CLI::App* app, ConfigOptions& opts) {
  app->add_option("--config", opts.config_file, "key = value file merged over the defaults");
  app->add_flag("--no-defaults", opts.no_defaults, "start from built-in values instead of the shipped default config");
  for (const auto& key : config_keys()) {
    auto* o = app->add_option_function<std::string>(
        "--" + key, [&opts, key](const std::string& v) { opts.overrides[key] = v; }, "config key " + key);
    o->type_name("VALUE");
  }
}

SimConfig resolve(const ConfigOptions& opts) {
  SimConfig cfg;
#ifdef MESHFAIR_DEFAULT_CONFIG
  if (!opts.no_defaults && std::filesystem::exists(MESHFAIR_DEFAULT_CONFIG)) cfg = load_config(MESHFAIR_DEFAULT_CONFIG);
#endif
  if (!opts.config_file.empty()) cfg = load_config(opts.config_file, cfg);
  for (const auto& [k, v] : opts.overrides) set_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw ParseError("bad list item '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("empty list '" + text + "'");
  return out;
}

std::vector<Scheme> parse_schemes(const std::string& text) {
  std::vector<Scheme> out;
  for (const auto& s : parse_list<std::string>(text)) {
    if (s == "centralized")
      out.push_back(Scheme::Centralized);
    else if (s == "hybrid")
      out.push_back(Scheme::Hybrid);
    else
      throw ParseError("unknown scheme '" + s + "'");
  }
  return out;
}

void print_metrics(std::ostream& os, const MetricsReport& m) {
  os << "scheme = " << to_string(m.scheme) << '\n'
     << "nodes = " << m.nodes << '\n'
     << "density = " << sig6(m.density) << '\n'
     << "seed = " << m.seed << '\n'
     << "avg_update_delay = " << sig6(m.avg_update_delay) << '\n'
     << "detection_time_90 = " << sig6(m.detection_time_90) << '\n'
     << "detection_interval_90 = " << sig6(m.detection_interval_90) << '\n'
     << "overhead_ratio = " << sig6(m.overhead_ratio) << '\n'
     << "detected_fraction = " << sig6(m.detected_fraction) << '\n'
     << "false_positives = " << m.false_positives << '\n'
     << "reports = " << m.reports << '\n'
     << "mean_report_hops = " << sig6(m.mean_report_hops) << '\n'
     << "fairness_bytes = " << m.fairness_bytes << '\n'
     << "sync_bytes = " << m.sync_bytes << '\n'
     << "data_bytes = " << m.data_bytes << '\n'
     << "delivery_ratio = " << sig6(m.delivery_ratio) << '\n';
}

void progress_line(const MetricsReport& m) {
  std::fprintf(stderr, "  %-11s n=%-4zu seed=%-3llu delay=%-9s det90=%-9s overhead=%s\n", to_string(m.scheme), m.nodes,
               static_cast<unsigned long long>(m.seed), sig6(m.avg_update_delay).c_str(),
               sig6(m.detection_time_90).c_str(), sig6(m.overhead_ratio).c_str());
}

void print_table(const SweepTable& t) {
  std::printf("%-11s %10s %6s %12s %12s %10s %9s %6s\n", "scheme", t.variable.c_str(), "nodes", "delay", "detect90",
              "overhead", "detected", "fp");
  for (const auto& r : t.rows)
    std::printf("%-11s %10s %6zu %12s %12s %10s %9s %6s\n", to_string(r.scheme), sig6(r.x).c_str(), r.nodes,
                sig6(r.avg_update_delay.mean).c_str(), sig6(r.detection_time_90.mean).c_str(),
                sig6(r.overhead_ratio.mean).c_str(), sig6(r.detected_fraction.mean).c_str(),
                sig6(r.false_positives.mean).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness management simulator for community wireless mesh networks"};
  app.require_subcommand(1);

  // run
  ConfigOptions run_opts;
  std::string log_path, metrics_path, topo_path;
  auto* run_cmd = app.add_subcommand("run", "simulate one configuration");
  add_config_options(run_cmd, run_opts);
  run_cmd->add_option("--log", log_path, "write the event log here");
  run_cmd->add_option("--metrics", metrics_path, "write the metrics report here (default: stdout)");
  run_cmd->add_option("--topology-out", topo_path, "write the generated topology here");

  // sweeps
  ConfigOptions sweep_opts;
  std::string sizes = "80,120,160,200", densities = "0.00005,0.0001,0.00015", schemes = "centralized,hybrid";
  std::string out_dir = "results";
  std::size_t seeds = 5;
  unsigned threads = 0;
  double side = 1200.0;
  double density = 1e-4;
  auto* size_cmd = app.add_subcommand("sweep-size", "vary node count at the base density");
  auto* dens_cmd = app.add_subcommand("sweep-density", "vary density in a fixed square area");
  for (auto* cmd : {size_cmd, dens_cmd}) {
    add_config_options(cmd, sweep_opts);
    cmd->add_option("--schemes", schemes, "comma-separated schemes");
    cmd->add_option("--seeds", seeds, "seeds per point")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
    cmd->add_option("--out", out_dir, "output directory for CSV and SVG files");
  }
  size_cmd->add_option("--sizes", sizes, "comma-separated node counts");
  size_cmd->add_option("--density", density, "nodes per m^2 held across the sweep (ignored if the area is given)")
      ->check(CLI::PositiveNumber);
  dens_cmd->add_option("--densities", densities, "comma-separated densities in nodes/m^2");
  dens_cmd->add_option("--side", side, "side of the square area in metres")->check(CLI::PositiveNumber);

  // calibrate
  ConfigOptions cal_opts;
  std::string penalties = "1", decays = "1.5,2,3", thresholds = "6,8,10,14", flows = "";
  std::size_t cal_seeds = 3;
  std::string cal_out;
  auto* cal_cmd = app.add_subcommand("calibrate", "grid-search penalty, decay and threshold for detection accuracy");
  add_config_options(cal_cmd, cal_opts);
  cal_cmd->add_option("--penalties", penalties, "penalty X values");
  cal_cmd->add_option("--decays", decays, "decay factor Y values");
  cal_cmd->add_option("--thresholds", thresholds, "NAM threshold values");
  cal_cmd->add_option("--flows", flows, "flows_per_node values (default: the configured one)");
  cal_cmd->add_option("--seeds", cal_seeds, "seeds per setting")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
  cal_cmd->add_option("--out", cal_out, "write the full grid as CSV here");

  // zone
  ConfigOptions zone_opts;
  std::string zone_out;
  auto* zone_cmd = app.add_subcommand("zone", "build zones and pick servers without simulating");
  add_config_options(zone_cmd, zone_opts);
  zone_cmd->add_option("--out", zone_out, "write the zone plan here");

  try {
    app.parse(argc, argv);

    if (*run_cmd) {
      const SimConfig cfg = resolve(run_opts);
      Simulation sim(cfg);
      if (!topo_path.empty()) write_file(topo_path, [&](std::ostream& os) { write_topology(os, sim.topology()); });
      sim.run();
      if (!log_path.empty()) write_file(log_path, [&](std::ostream& os) { write_event_log(os, sim.log()); });
      const auto m = compute_metrics(sim.log());
      if (metrics_path.empty())
        print_metrics(std::cout, m);
      else
        write_file(metrics_path, [&](std::ostream& os) { print_metrics(os, m); });
      return 0;
    }

    if (*size_cmd || *dens_cmd) {
      SimConfig cfg = resolve(sweep_opts);
      const auto sch = parse_schemes(schemes);
      std::filesystem::create_directories(out_dir);
      SweepTable table;
      if (*size_cmd) {
        if (!sweep_opts.overrides.count("area_width") && !sweep_opts.overrides.count("area_height"))
          cfg.area_width = cfg.area_height = std::sqrt(static_cast<double>(cfg.nodes) / density);
        table = sweep_size(cfg, parse_list<std::size_t>(sizes), sch, seeds, threads, progress_line);
        emit_sweep(table, out_dir, "size_sweep");
      } else {
        if (!sweep_opts.overrides.count("area_width")) cfg.area_width = side;
        if (!sweep_opts.overrides.count("area_height")) cfg.area_height = side;
        table = sweep_density(cfg, parse_list<double>(densities), sch, seeds, threads, progress_line);
        emit_sweep(table, out_dir, "density_sweep");
      }
      print_table(table);
      return 0;
    }

    if (*cal_cmd) {
      const SimConfig base = resolve(cal_opts);
      const auto xs = parse_list<double>(penalties), ys = parse_list<double>(decays),
                 ts = parse_list<double>(thresholds);
      const auto fs = flows.empty() ? std::vector<std::size_t>{base.flows_per_node} : parse_list<std::size_t>(flows);
      struct Row {
        double x, y, t;
        std::size_t f;
        double detected;
        double fp;
        double interval90;
        std::size_t perfect;
      };
      std::vector<Row> rows;
      for (std::size_t f : fs)
        for (double x : xs)
          for (double y : ys)
            for (double t : ts) {
              SimConfig c = base;
              c.flows_per_node = f;
              c.mpifa.penalty = x;
              c.mpifa.decay = y;
              c.mpifa.nam_threshold = t;
              c.validate();
              std::vector<SweepPoint> pts{{c, 0.0}};
              // One row per seed so perfect runs can be counted.
              Row row{x, y, t, f, 0, 0, 0, 0};
              std::vector<MetricsReport> per_seed;
              run_sweep("calibration", pts, {base.scheme}, cal_seeds, threads,
                        [&](const MetricsReport& m) { per_seed.push_back(m); });
              for (const auto& m : per_seed) {
                row.detected += m.detected_fraction / static_cast<double>(per_seed.size());
                row.fp += static_cast<double>(m.false_positives) / static_cast<double>(per_seed.size());
                row.interval90 += m.detection_interval_90 / static_cast<double>(per_seed.size());
                row.perfect += m.detected_fraction == 1.0 && m.false_positives == 0;
              }
              std::fprintf(stderr, "  flows=%zu X=%s Y=%s threshold=%s detected=%s fp=%s perfect=%zu/%zu\n", f,
                           sig6(x).c_str(), sig6(y).c_str(), sig6(t).c_str(), sig6(row.detected).c_str(),
                           sig6(row.fp).c_str(), row.perfect, cal_seeds);
              rows.push_back(row);
            }
      if (!cal_out.empty()) {
        write_file(cal_out, [&](std::ostream& os) {
          os << "flows_per_node,penalty,decay,nam_threshold,detected_fraction,false_positives,detection_interval_90,"
                "perfect_runs\n";
          for (const auto& r : rows)
            os << r.f << ',' << sig6(r.x) << ',' << sig6(r.y) << ',' << sig6(r.t) << ',' << sig6(r.detected) << ','
               << sig6(r.fp) << ',' << sig6(r.interval90) << ',' << r.perfect << '\n';
        });
      }
      // Most perfect runs, then fewest false positives, then most detected.
      const auto best = std::min_element(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.perfect != b.perfect) return a.perfect > b.perfect;
        if (a.fp != b.fp) return a.fp < b.fp;
        return a.detected > b.detected;
      });
      std::cout << "flows_per_node = " << best->f << "\npenalty = " << sig6(best->x) << "\ndecay = " << sig6(best->y)
                << "\nnam_threshold = " << sig6(best->t) << "\n# detected " << sig6(best->detected) << ", false positives "
                << sig6(best->fp) << ", perfect runs " << best->perfect << "/" << cal_seeds << '\n';
      return 0;
    }

    if (*zone_cmd) {
      SimConfig cfg = resolve(zone_opts);
      const auto sc = Simulation::make_scenario(cfg);
      std::vector<bool> can_host(sc.malicious.size());
      for (std::size_t v = 0; v < can_host.size(); ++v) can_host[v] = !sc.malicious[v];
      const auto plan =
          select_zms(sc.topology, build_zones(sc.topology, cfg.target_zone_size, cfg.min_zone_size), can_host);
      std::size_t total = 0;
      for (ZoneId z = 0; z < plan.zone_count(); ++z) {
        total += plan.members[z].size();
        std::printf("zone %u: %zu nodes, server %u, ZMS index %s\n", z, plan.members[z].size(), plan.zms[z],
                    sig6(compute_zms_index(sc.topology, plan.members[z], plan.zms[z]).value).c_str());
      }
      std::printf("%zu zones, mean size %s, all zones connected: %s\n", plan.zone_count(),
                  sig6(static_cast<double>(total) / static_cast<double>(plan.zone_count())).c_str(),
                  zones_connected(sc.topology, plan) ? "yes" : "no");
      if (!zone_out.empty()) write_file(zone_out, [&](std::ostream& os) { write_zone_plan(os, plan); });
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "meshfair: %s\n", e.what());
    return 1;
  }
  return 0;
}
