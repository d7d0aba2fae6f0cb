#include "rpsopt/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rpsopt/market.hpp"
#include "rpsopt/oracle.hpp"

namespace rpsopt {

using nlohmann::json;
namespace fs = std::filesystem;

CcgConfig make_ccg_config(const SolveOptions& opt) {
  CcgConfig cfg;
  cfg.eps = opt.eps;
  cfg.max_iter = opt.max_iter;
  cfg.master.starts = opt.starts;
  cfg.master.seed = opt.seed * 2 + 1;
  cfg.subproblem.starts = opt.starts;
  cfg.subproblem.seed = opt.seed * 2;
  cfg.completion.seed = opt.seed * 3 + 7;
  cfg.pin_tau_e = opt.pin_tau_e;
  cfg.pin_tau_c = opt.pin_tau_c;
  return cfg;
}

SolveOutput solve_instance(const ValidatedInstance& inst, const SolveOptions& opt) {
  SolveOutput out;
  out.result = run_ccg(inst, make_ccg_config(opt));
  if (!inst.utility_renewables().empty()) {
    auto sc = StochasticConfig::make(inst.policy().eta, opt.seed, opt.mc_samples);
    out.montecarlo = monte_carlo_validate(inst, out.result.util, sc);
  }
  return out;
}

void write_solve_artifacts(const ValidatedInstance& inst, const SolveOutput& out, const std::string& dir) {
  fs::create_directories(dir);
  write_text((fs::path(dir) / "solution.json").string(), dump_exact(ccg_result_to_json(inst, out.result)) + "\n");
  std::string lines;
  for (const auto& it : out.result.log) lines += dump_exact(iterate_to_json(it), 0) + "\n";
  write_text((fs::path(dir) / "iterations.jsonl").string(), lines);
  json mc{{"eta", inst.policy().eta}, {"constraints", violations_to_json(out.montecarlo)}};
  write_text((fs::path(dir) / "montecarlo.json").string(), dump_exact(mc) + "\n");
}

std::vector<SweepPoint> sweep_incentive(const ValidatedInstance& inst, SweepAxis axis, const std::vector<double>& values,
                                        const SolveOptions& opt) {
  std::vector<SweepPoint> pts(values.size());
  auto run = [&](std::size_t k) {
    SolveOptions o = opt;
    if (axis == SweepAxis::TauE) o.pin_tau_e = values[k];
    else o.pin_tau_c = values[k];
    SweepPoint& p = pts[k];
    try {
      CcgResult r = run_ccg(inst, make_ccg_config(o));
      p.tau_e = r.reg.tau_e;
      p.tau_c = r.reg.tau_c;
      p.average_tariff = average_tariff(inst, r.reg);
      p.regulator_objective = r.regulator_objective;
      p.utility_objective = r.utility_objective;
      p.gap = r.gap;
      p.status = r.status;
    } catch (const std::exception&) {
      p.tau_e = axis == SweepAxis::TauE ? values[k] : 0.0;
      p.tau_c = axis == SweepAxis::TauC ? values[k] : 0.0;
      p.average_tariff = p.regulator_objective = p.utility_objective = p.gap = std::numeric_limits<double>::quiet_NaN();
      p.status = "infeasible";
    }
  };
  // Points are independent; results land in input order.
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (hw <= 1 || values.size() < 2) {
    for (std::size_t k = 0; k < values.size(); ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    std::size_t workers = std::min<std::size_t>(hw, values.size());
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < values.size(); k += workers) run(k);
      });
    for (auto& t : pool) t.join();
  }
  return pts;
}

Instance retire_fuel(const Instance& inst, const std::string& fuel) {
  Instance out = inst;
  int hits = 0;
  for (auto& g : out.generators)
    if (g.fuel == fuel) {
      g.g_max = 0.0;
      g.g_min = 0.0;
      if (g.is_candidate()) g.build_max = 0.0;
      ++hits;
    }
  if (hits == 0) throw std::invalid_argument("no generator with fuel '" + fuel + "'");
  out.name += "-no-" + fuel;
  return out;
}

Instance scale_rps(const Instance& inst, double factor) {
  Instance out = inst;
  out.policy.rps_fraction *= factor;
  return out;
}

namespace {

struct CliError {
  int code;
  std::string kind;
  std::string message;
};

void print_error(std::ostream& err, const CliError& e) {
  err << json{{"error", {{"kind", e.kind}, {"message", e.message}, {"exit_code", e.code}}}}.dump() << "\n";
}

ValidatedInstance load_validated(const std::string& path) {
  if (!fs::exists(path)) throw CliError{2, "file_not_found", "instance file not found: " + path};
  Instance raw;
  try {
    raw = load_instance(path);
  } catch (const InstanceFormatError& e) {
    throw CliError{2, "format", e.what()};
  } catch (const std::runtime_error& e) {
    throw CliError{2, "io", e.what()};
  }
  try {
    return validate_instance(std::move(raw));
  } catch (const ValidationError& e) {
    throw CliError{1, "validation", e.what()};
  }
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CliError{2, "usage", "bad number in --values: " + item};
    }
  }
  if (v.empty()) throw CliError{2, "usage", "--values is empty"};
  if (!std::is_sorted(v.begin(), v.end())) throw CliError{2, "usage", "--values must be sorted ascending"};
  return v;
}

SweepAxis parse_axis(const std::string& a) {
  if (a == "tau-e") return SweepAxis::TauE;
  if (a == "tau-c") return SweepAxis::TauC;
  throw CliError{2, "usage", "--axis must be tau-e or tau-c"};
}

void write_frontier(const std::vector<SweepPoint>& pts, const std::string& dir, const std::string& format) {
  fs::create_directories(dir);
  if (format == "json")
    write_text((fs::path(dir) / "frontier.json").string(), dump_exact(sweep_to_json(pts)) + "\n");
  else
    write_text((fs::path(dir) / "frontier.csv").string(), sweep_to_csv(pts));
}

json summary(const ValidatedInstance& inst, const CcgResult& r) {
  return {{"instance", inst.raw().name},   {"status", r.status},
          {"converged", r.converged},      {"iterations", r.iterations},
          {"gap", r.gap},                  {"regulator", regulator_to_json(r.reg)},
          {"average_tariff", average_tariff(inst, r.reg)}, {"regulator_objective", r.regulator_objective},
          {"utility_objective", r.utility_objective}};
}

double fuel_dispatch(const ValidatedInstance& inst, const MarketOutcome& m, const std::string& fuel) {
  double s = 0.0;
  for (int i = 0; i < inst.num_generators(); ++i)
    if (inst.generator(i).fuel == fuel)
      for (int e = 0; e < inst.num_days(); ++e)
        for (double v : m.dispatch[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)]) s += inst.day_weight(e) * v;
  return s;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regulator, utility and market equilibrium under renewable portfolio standards"};
  app.require_subcommand(1);

  std::string instance_path, out_dir = "out", format = "csv", axis = "tau-e", values_text, fuel;
  SolveOptions opt;
  double pin_e = 0.0, pin_c = 0.0;
  int k_override = 0, offer_levels = 3, capacity_points = 21;

  auto common = [&](CLI::App* sub, bool solver) {
    sub->add_option("instance", instance_path, "instance JSON file")->required();
    sub->add_option("--out-dir", out_dir, "directory for artifacts");
    if (!solver) return;
    sub->add_option("--eps", opt.eps, "relative C&CG gap tolerance");
    sub->add_option("--starts", opt.starts, "random starts per bilinear solve");
    sub->add_option("--seed", opt.seed, "random seed");
    sub->add_option("--max-iter", opt.max_iter, "C&CG iteration limit");
    sub->add_option("--pin-tau-e", pin_e, "fix the energy incentive, $/MWh");
    sub->add_option("--pin-tau-c", pin_c, "fix the capacity incentive, $/kW");
    sub->add_option("--format", format, "frontier format: csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* solve = app.add_subcommand("solve", "run the decomposition and write solution artifacts");
  common(solve, true);
  solve->add_option("--mc-samples", opt.mc_samples, "Monte Carlo samples for the chance-constraint check");
  auto* sweep = app.add_subcommand("sweep", "incentive frontier: one pinned solve per value");
  common(sweep, true);
  sweep->add_option("--axis", axis, "tau-e or tau-c");
  sweep->add_option("--values", values_text, "comma-separated ascending incentive values")->required();
  auto* retire = app.add_subcommand("retire", "paired base and retired-fuel runs");
  common(retire, true);
  retire->add_option("--retire-fuel", fuel, "fuel tag to retire")->required();
  retire->add_option("--axis", axis, "sweep axis for paired frontiers");
  retire->add_option("--values", values_text, "paired sweep values (optional)");
  auto* oracle = app.add_subcommand("oracle", "grid-search reference solution (desk-sized instances)");
  common(oracle, false);
  oracle->add_option("--pin-tau-e", pin_e, "fix the energy incentive, $/MWh");
  oracle->add_option("--pin-tau-c", pin_c, "fix the capacity incentive, $/kW");
  oracle->add_option("--offer-levels", offer_levels, "offer ladder size per controllable");
  oracle->add_option("--capacity-points", capacity_points, "grid points per candidate capacity");
  auto* cluster = app.add_subcommand("cluster", "representative days from hourly series");
  common(cluster, false);
  cluster->add_option("--k", k_override, "number of representative days (overrides the file)");
  auto* validate = app.add_subcommand("validate", "check an instance and print its summary");
  common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, {2, "usage", e.what()});
    return 2;
  }

  try {
    if (app.got_subcommand(solve) || app.got_subcommand(sweep) || app.got_subcommand(retire)) {
      auto* sub = app.get_subcommands().front();
      if (sub->count("--pin-tau-e")) opt.pin_tau_e = pin_e;
      if (sub->count("--pin-tau-c")) opt.pin_tau_c = pin_c;
    }
    if (app.got_subcommand(solve)) {
      auto inst = load_validated(instance_path);
      SolveOutput so = solve_instance(inst, opt);
      write_solve_artifacts(inst, so, out_dir);
      out << summary(inst, so.result).dump() << "\n";
      if (!so.result.converged) err << "warning: not converged (" << so.result.status << ", gap " << so.result.gap << ")\n";
      return 0;
    }
    if (app.got_subcommand(sweep)) {
      auto inst = load_validated(instance_path);
      auto pts = sweep_incentive(inst, parse_axis(axis), parse_values(values_text), opt);
      write_frontier(pts, out_dir, format);
      out << sweep_to_json(pts).dump() << "\n";
      return 0;
    }
    if (app.got_subcommand(retire)) {
      if (!fs::exists(instance_path)) throw CliError{2, "file_not_found", "instance file not found: " + instance_path};
      auto base = load_validated(instance_path);
      Instance raw_retired;
      try {
        raw_retired = retire_fuel(base.raw(), fuel);
      } catch (const std::invalid_argument& e) {
        throw CliError{1, "unknown_fuel", e.what()};
      }
      auto retired = validate_instance(std::move(raw_retired));
      json report;
      for (auto [tag, inst] : {std::pair<std::string, const ValidatedInstance*>{"base", &base}, {"retired", &retired}}) {
        std::string dir = (fs::path(out_dir) / tag).string();
        SolveOutput so = solve_instance(*inst, opt);
        write_solve_artifacts(*inst, so, dir);
        json s = summary(*inst, so.result);
        s["fuel_dispatch_mwh"] = fuel_dispatch(*inst, so.result.market, fuel);
        if (!values_text.empty()) {
          auto pts = sweep_incentive(*inst, parse_axis(axis), parse_values(values_text), opt);
          write_frontier(pts, dir, format);
        }
        report[tag] = s;
      }
      report["fuel"] = fuel;
      fs::create_directories(out_dir);
      write_text((fs::path(out_dir) / "retire.json").string(), dump_exact(report) + "\n");
      out << report.dump() << "\n";
      return 0;
    }
    if (app.got_subcommand(oracle)) {
      auto inst = load_validated(instance_path);
      GridSpec g;
      g.offer_levels = offer_levels;
      g.capacity_points = capacity_points;
      if (oracle->count("--pin-tau-e")) g.pin_tau_e = pin_e;
      if (oracle->count("--pin-tau-c")) g.pin_tau_c = pin_c;
      OracleResult r;
      try {
        r = grid_search_trilevel(inst, g);
      } catch (const OracleInfeasible& e) {
        throw CliError{1, "oracle_infeasible", e.what()};
      }
      json j{{"instance", inst.raw().name},
             {"regulator", regulator_to_json(r.reg)},
             {"regulator_objective", r.regulator_objective},
             {"utility_objective", r.response.objective},
             {"average_tariff", average_tariff(inst, r.reg)},
             {"utility", utility_to_json(r.response.util)},
             {"stats",
              {{"regulator_points", r.stats.regulator_points},
               {"feasible", r.stats.feasible},
               {"no_response", r.stats.no_response},
               {"rps_violations", r.stats.rps_violations},
               {"budget_violations", r.stats.budget_violations},
               {"adequacy_violations", r.stats.adequacy_violations},
               {"market_solves", r.stats.market_solves}}},
             {"grid",
              {{"capacity_points", g.capacity_points},
               {"offer_levels", g.offer_levels},
               {"regulator_points", g.regulator_points},
               {"refine_levels", g.refine_levels},
               {"refine_points", g.refine_points}}}};
      fs::create_directories(out_dir);
      write_text((fs::path(out_dir) / "oracle.json").string(), dump_exact(j) + "\n");
      out << json{{"regulator_objective", r.regulator_objective}, {"regulator", regulator_to_json(r.reg)}}.dump() << "\n";
      return 0;
    }
    if (app.got_subcommand(cluster)) {
      if (!fs::exists(instance_path)) throw CliError{2, "file_not_found", "instance file not found: " + instance_path};
      std::ifstream in(instance_path);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw CliError{2, "format", e.what()};
      }
      if (!doc.contains("series")) throw CliError{1, "validation", "instance has no hourly series to cluster"};
      if (k_override > 0) doc["clustering"]["k"] = k_override;
      Instance raw;
      try {
        raw = parse_instance(doc, instance_path);
      } catch (const InstanceFormatError& e) {
        throw CliError{1, "format", e.what()};
      }
      fs::create_directories(out_dir);
      write_text((fs::path(out_dir) / "clustered.json").string(), dump_exact(instance_to_json(raw)) + "\n");
      out << json{{"weights", raw.days.weights}, {"source_days", raw.days.source_days}}.dump() << "\n";
      return 0;
    }
    if (app.got_subcommand(validate)) {
      if (!fs::exists(instance_path)) throw CliError{2, "file_not_found", "instance file not found: " + instance_path};
      Instance raw;
      try {
        raw = load_instance(instance_path);
      } catch (const InstanceFormatError& e) {
        throw CliError{1, "format", e.what()};
      }
      try {
        auto inst = validate_instance(std::move(raw));
        out << json{{"valid", true},
                    {"name", inst.raw().name},
                    {"nodes", inst.num_nodes()},
                    {"lines", inst.num_lines()},
                    {"generators", inst.num_generators()},
                    {"days", inst.num_days()},
                    {"periods", inst.num_periods()},
                    {"states", inst.network().states.size()}}
                   .dump()
            << "\n";
        return 0;
      } catch (const ValidationError& e) {
        json issues = json::array();
        for (const auto& i : e.issues()) issues.push_back({{"path", i.path}, {"message", i.message}});
        out << json{{"valid", false}, {"issues", issues}}.dump() << "\n";
        return 1;
      }
    }
  } catch (const CliError& e) {
    print_error(err, e);
    return e.code;
  } catch (const std::exception& e) {
    print_error(err, {1, "failure", e.what()});
    return 1;
  }
  return 2;
}

}  // namespace rpsopt
