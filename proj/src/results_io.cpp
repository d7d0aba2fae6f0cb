#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rpsopt/io.hpp"
#include "rpsopt/lp.hpp"

namespace rpsopt {

using nlohmann::json;

namespace {

void emit(std::ostringstream& os, const json& j, int indent, int depth) {
  auto pad = [&](int d) {
    if (indent > 0) os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        os << json(it.key()).dump() << (indent > 0 ? ": " : ":");
        emit(os, it.value(), indent, depth + 1);
      }
      pad(depth);
      os << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Numeric arrays stay on one line.
      bool flat = true;
      for (const auto& v : j) flat &= !v.is_structured();
      os << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << (flat ? ", " : ",");
        first = false;
        if (!flat) pad(depth + 1);
        emit(os, v, indent, depth + 1);
      }
      if (!flat) pad(depth);
      os << ']';
      return;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) os << "null";
      else os << format_exact(v);
      return;
    }
    default:
      os << j.dump();
  }
}

json grid(const std::vector<DayPeriod>& v) { return json(v); }

std::vector<DayPeriod> grid_from(const json& j) { return j.get<std::vector<DayPeriod>>(); }

}  // namespace

std::string dump_exact(const json& j, int indent) {
  std::ostringstream os;
  emit(os, j, indent, 0);
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

json regulator_to_json(const RegulatorDecision& r) {
  return {{"pi_on", r.pi_on}, {"pi_off", r.pi_off}, {"tau_e", r.tau_e}, {"tau_c", r.tau_c}};
}

RegulatorDecision regulator_from_json(const json& j) {
  RegulatorDecision r;
  r.pi_on = j.at("pi_on").get<std::vector<double>>();
  r.pi_off = j.at("pi_off").get<std::vector<double>>();
  r.tau_e = j.at("tau_e").get<double>();
  r.tau_c = j.at("tau_c").get<double>();
  return r;
}

json utility_to_json(const UtilityDecision& u) {
  return {{"capacity", u.capacity}, {"offers", grid(u.offers)}, {"interface_flow", grid(u.interface_flow)}, {"demand", grid(u.demand)}};
}

UtilityDecision utility_from_json(const json& j) {
  UtilityDecision u;
  u.capacity = j.at("capacity").get<std::vector<double>>();
  u.offers = grid_from(j.at("offers"));
  u.interface_flow = grid_from(j.at("interface_flow"));
  u.demand = grid_from(j.at("demand"));
  return u;
}

json market_to_json(const MarketOutcome& m) {
  return {{"dispatch", grid(m.dispatch)},
          {"flow", grid(m.flow)},
          {"angle", grid(m.angle)},
          {"lmp", grid(m.lmp)},
          {"flow_dual", grid(m.flow_dual)},
          {"gen_lower_dual", grid(m.gen_lower_dual)},
          {"gen_upper_dual", grid(m.gen_upper_dual)},
          {"flow_lower_dual", grid(m.flow_lower_dual)},
          {"flow_upper_dual", grid(m.flow_upper_dual)},
          {"primal_objective", m.primal_objective},
          {"dual_objective", m.dual_objective}};
}

MarketOutcome market_from_json(const json& j) {
  MarketOutcome m;
  m.dispatch = grid_from(j.at("dispatch"));
  m.flow = grid_from(j.at("flow"));
  m.angle = grid_from(j.at("angle"));
  m.lmp = grid_from(j.at("lmp"));
  m.flow_dual = grid_from(j.at("flow_dual"));
  m.gen_lower_dual = grid_from(j.at("gen_lower_dual"));
  m.gen_upper_dual = grid_from(j.at("gen_upper_dual"));
  m.flow_lower_dual = grid_from(j.at("flow_lower_dual"));
  m.flow_upper_dual = grid_from(j.at("flow_upper_dual"));
  m.primal_objective = j.at("primal_objective").get<std::vector<double>>();
  m.dual_objective = j.at("dual_objective").get<std::vector<double>>();
  return m;
}

json iterate_to_json(const CcgIterate& it) {
  return {{"k", it.iteration},
          {"lb", it.lower_bound},
          {"ub", it.upper_bound},
          {"gap", it.gap},
          {"regulator", regulator_to_json(it.reg)},
          {"regulator_objective", it.regulator_objective},
          {"master_feasible_starts", it.master_feasible_starts},
          {"subproblem_feasible_starts", it.subproblem_feasible_starts}};
}

json ccg_result_to_json(const ValidatedInstance& inst, const CcgResult& r) {
  json j;
  j["instance"] = inst.raw().name;
  j["status"] = r.status;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["lb"] = r.lower_bound;
  j["ub"] = r.upper_bound;
  j["gap"] = r.gap;
  j["regulator"] = regulator_to_json(r.reg);
  j["average_tariff"] = average_tariff(inst, r.reg);
  j["regulator_objective"] = r.regulator_objective;
  j["utility_objective"] = r.utility_objective;
  j["utility"] = utility_to_json(r.util);
  j["market"] = market_to_json(r.market);
  std::vector<std::string> gens, nodes, lines;
  for (const auto& g : inst.generators()) gens.push_back(g.id);
  for (const auto& n : inst.network().nodes) nodes.push_back(n.id);
  for (const auto& l : inst.network().lines) lines.push_back(l.id);
  j["index"] = {{"generators", gens}, {"nodes", nodes}, {"lines", lines}};
  return j;
}

json violations_to_json(const std::vector<ViolationRate>& v) {
  json a = json::array();
  for (const auto& r : v)
    a.push_back({{"id", r.id}, {"bound", r.bound}, {"violations", r.violations}, {"samples", r.samples}, {"rate", r.rate},
                 {"ci_low", r.ci_low}, {"ci_high", r.ci_high}});
  return a;
}

json solve_report_to_json(const SolveReport& r) {
  json j{{"feasible", r.feasible},
         {"best_objective", r.best_objective},
         {"point", r.point},
         {"feasible_starts", r.feasible_starts},
         {"nodes", r.nodes},
         {"gap_flagged", r.gap_flagged},
         {"trajectories", r.trajectories}};
  if (r.has_bound) {
    j["relaxation_bound"] = r.relaxation_bound;
    j["certified_gap"] = r.certified_gap;
  }
  return j;
}

std::string sweep_to_csv(const std::vector<SweepPoint>& pts) {
  std::ostringstream os;
  os << "tau_e,tau_c,avg_tariff,O_R,O_U,gap,status\n";
  for (const auto& p : pts)
    os << format_exact(p.tau_e) << ',' << format_exact(p.tau_c) << ',' << format_exact(p.average_tariff) << ','
       << format_exact(p.regulator_objective) << ',' << format_exact(p.utility_objective) << ',' << format_exact(p.gap) << ','
       << p.status << '\n';
  return os.str();
}

json sweep_to_json(const std::vector<SweepPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts)
    a.push_back({{"tau_e", p.tau_e}, {"tau_c", p.tau_c}, {"avg_tariff", p.average_tariff}, {"O_R", p.regulator_objective},
                 {"O_U", p.utility_objective}, {"gap", p.gap}, {"status", p.status}});
  return a;
}

}  // namespace rpsopt
