#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rpsopt/io.hpp"

namespace rpsopt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw InstanceFormatError(where, what); }

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "missing field");
  return *it;
}

bool has(const json& obj, const std::string& key) { return obj.is_object() && obj.contains(key) && !obj.at(key).is_null(); }

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double def, const std::string& path) {
  if (!has(obj, key)) return def;
  return number(obj.at(key), path + "/" + key);
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> vec(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "/" + std::to_string(i)));
  return out;
}

DayPeriod matrix(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of arrays");
  DayPeriod out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(vec(v[i], path + "/" + std::to_string(i)));
  return out;
}

// Matrix [day][period] given either explicitly or as one scalar.
DayPeriod matrix_or_scalar(const json& v, int E, int T, const std::string& path) {
  if (v.is_number()) return DayPeriod(static_cast<std::size_t>(E), std::vector<double>(static_cast<std::size_t>(T), v.get<double>()));
  return matrix(v, path);
}

int index_of(const std::map<std::string, int>& m, const std::string& id, const std::string& path) {
  auto it = m.find(id);
  if (it == m.end()) fail(path, "unknown id '" + id + "'");
  return it->second;
}

// Day slices of hourly series at the representative (medoid) days.
DayPeriod slice_days(const std::vector<double>& hourly, const RepDaySet& days, int hours, const std::string& path) {
  DayPeriod out;
  for (int d : days.source_days) {
    std::size_t start = static_cast<std::size_t>(d) * static_cast<std::size_t>(hours);
    if (start + static_cast<std::size_t>(hours) > hourly.size()) fail(path, "series too short for day " + std::to_string(d));
    out.emplace_back(hourly.begin() + static_cast<long>(start), hourly.begin() + static_cast<long>(start) + hours);
  }
  return out;
}

}  // namespace

Instance parse_instance(const json& doc, const std::string& origin) {
  const std::string root = origin + ":";
  if (!doc.is_object()) fail(root, "top level must be an object");
  int version = static_cast<int>(number(member(doc, "schema_version", root), root + "/schema_version"));
  if (version != kSchemaVersion) fail(root + "/schema_version", "unsupported schema version " + std::to_string(version));

  Instance inst;
  inst.name = has(doc, "name") ? text(doc.at("name"), root + "/name") : "instance";

  // network
  const json& net = member(doc, "network", root);
  std::map<std::string, int> state_idx, node_idx, gen_idx;
  {
    const std::string p = root + "/network";
    const json& states = member(net, "states", p);
    if (!states.is_array()) fail(p + "/states", "expected an array of names");
    for (std::size_t s = 0; s < states.size(); ++s) {
      std::string name = text(states[s], p + "/states/" + std::to_string(s));
      state_idx[name] = static_cast<int>(s);
      inst.network.states.push_back(name);
    }
    const json& nodes = member(net, "nodes", p);
    if (!nodes.is_array()) fail(p + "/nodes", "expected an array");
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      std::string q = p + "/nodes/" + std::to_string(n);
      Node node;
      node.id = text(member(nodes[n], "id", q), q + "/id");
      node.state = index_of(state_idx, text(member(nodes[n], "state", q), q + "/state"), q + "/state");
      node.interface_max = number_or(nodes[n], "interface_max", 0.0, q);
      node_idx[node.id] = static_cast<int>(n);
      inst.network.nodes.push_back(node);
    }
    if (has(net, "lines")) {
      const json& lines = net.at("lines");
      for (std::size_t l = 0; l < lines.size(); ++l) {
        std::string q = p + "/lines/" + std::to_string(l);
        Line line;
        line.id = text(member(lines[l], "id", q), q + "/id");
        line.from = index_of(node_idx, text(member(lines[l], "from", q), q + "/from"), q + "/from");
        line.to = index_of(node_idx, text(member(lines[l], "to", q), q + "/to"), q + "/to");
        line.reactance = number(member(lines[l], "reactance", q), q + "/reactance");
        line.flow_max = number(member(lines[l], "flow_max", q), q + "/flow_max");
        inst.network.lines.push_back(line);
      }
    }
  }
  const int Nn = static_cast<int>(inst.network.nodes.size());

  // time axis: either representative days or hourly series plus clustering
  bool has_rep = has(doc, "repdays"), has_series = has(doc, "series");
  if (has_rep == has_series) fail(root, "exactly one of 'repdays' and 'series' must be present");
  int T = 0;
  json series;
  if (has_rep) {
    const json& rd = doc.at("repdays");
    const std::string p = root + "/repdays";
    T = static_cast<int>(number(member(rd, "hours", p), p + "/hours"));
    inst.days.hours = T;
    inst.days.weights = vec(member(rd, "weights", p), p + "/weights");
    if (has(rd, "source_days"))
      for (double d : vec(rd.at("source_days"), p + "/source_days")) inst.days.source_days.push_back(static_cast<int>(d));
  } else {
    series = doc.at("series");
    const std::string p = root + "/series";
    T = static_cast<int>(number_or(series, "hours_per_day", 24, p));
    const json& cl = member(doc, "clustering", root);
    int k = static_cast<int>(number(member(cl, "k", root + "/clustering"), root + "/clustering/k"));
    std::vector<double> fw;
    if (has(cl, "feature_weights")) fw = vec(cl.at("feature_weights"), root + "/clustering/feature_weights");
    std::vector<std::vector<double>> hourly;
    const json& dem = member(series, "demand", p);
    for (const auto& node : inst.network.nodes) hourly.push_back(vec(member(dem, node.id, p + "/demand"), p + "/demand/" + node.id));
    if (has(series, "availability"))
      for (auto it = series.at("availability").begin(); it != series.at("availability").end(); ++it)
        hourly.push_back(vec(it.value(), p + "/availability/" + it.key()));
    if (hourly.empty()) fail(p, "no hourly series");
    std::size_t len = hourly.front().size();
    for (std::size_t f = 0; f < hourly.size(); ++f)
      if (hourly[f].size() != len) fail(p, "all hourly series must have the same length");
    if (len % static_cast<std::size_t>(T) != 0) fail(p, "series length is not a multiple of hours_per_day");
    try {
      Clustering c = cluster_representative_days(hourly, k, T, fw);
      inst.days = c.days;
    } catch (const std::invalid_argument& e) {
      fail(root + "/clustering", e.what());
    }
  }
  const int E = static_cast<int>(inst.days.weights.size());

  // generators
  {
    const json& gens = member(doc, "generators", root);
    if (!gens.is_array()) fail(root + "/generators", "expected an array");
    for (std::size_t i = 0; i < gens.size(); ++i) {
      const json& g = gens[i];
      std::string q = root + "/generators/" + std::to_string(i);
      Generator gen;
      gen.id = text(member(g, "id", q), q + "/id");
      gen.node = index_of(node_idx, text(member(g, "node", q), q + "/node"), q + "/node");
      std::string status = text(member(g, "status", q), q + "/status");
      if (status == "existing") gen.status = GenStatus::Existing;
      else if (status == "candidate") gen.status = GenStatus::Candidate;
      else fail(q + "/status", "expected 'existing' or 'candidate'");
      std::string tech = text(member(g, "tech", q), q + "/tech");
      if (tech == "renewable") gen.tech = GenTech::Renewable;
      else if (tech == "controllable") gen.tech = GenTech::Controllable;
      else fail(q + "/tech", "expected 'renewable' or 'controllable'");
      gen.fuel = has(g, "fuel") ? text(g.at("fuel"), q + "/fuel") : "";
      gen.g_min = number_or(g, "g_min", 0.0, q);
      gen.g_max = number_or(g, "g_max", 0.0, q);
      gen.ramp_min = number_or(g, "ramp_min", -kInf, q);
      gen.ramp_max = number_or(g, "ramp_max", kInf, q);
      gen.min_output_factor = number_or(g, "min_output_factor", 0.0, q);
      gen.cost = number_or(g, "cost", 0.0, q);
      gen.capital_cost = number_or(g, "capital_cost", 0.0, q);
      gen.build_max = number_or(g, "build_max", kInf, q);
      if (gen.is_renewable()) {
        if (has(g, "forecast")) {
          gen.forecast = matrix(g.at("forecast"), q + "/forecast");
        } else if (has_series && has(series, "availability")) {
          // own series by id, or a shared one named by forecast_series
          std::string key = has(g, "forecast_series") ? text(g.at("forecast_series"), q + "/forecast_series") : gen.id;
          if (!series.at("availability").contains(key)) fail(q + "/forecast", "no availability series '" + key + "'");
          gen.forecast = slice_days(vec(series.at("availability").at(key), q), inst.days, T, root + "/series/availability/" + key);
        } else {
          fail(q + "/forecast", "renewable generator needs a forecast");
        }
        gen.error_mean = has(g, "error_mean") ? matrix_or_scalar(g.at("error_mean"), E, T, q + "/error_mean")
                                              : DayPeriod(static_cast<std::size_t>(E), std::vector<double>(static_cast<std::size_t>(T), 0.0));
        gen.error_sd = has(g, "error_sd") ? matrix_or_scalar(g.at("error_sd"), E, T, q + "/error_sd")
                                          : DayPeriod(static_cast<std::size_t>(E), std::vector<double>(static_cast<std::size_t>(T), 0.0));
      }
      gen_idx[gen.id] = static_cast<int>(i);
      inst.generators.push_back(std::move(gen));
    }
  }

  // demand
  {
    const json& d = member(doc, "demand", root);
    const std::string p = root + "/demand";
    inst.demand.utility_slope = number_or(d, "utility_slope", 0.25, p);
    double scale = number_or(d, "intercept_scale", 0.25, p);
    double offset = number_or(d, "intercept_offset", 20.0, p);
    inst.demand.inflexible.resize(static_cast<std::size_t>(Nn));
    inst.demand.utility_intercept.resize(static_cast<std::size_t>(Nn));
    for (int n = 0; n < Nn; ++n) {
      const auto& id = inst.network.nodes[static_cast<std::size_t>(n)].id;
      if (has_rep) {
        inst.demand.inflexible[static_cast<std::size_t>(n)] = matrix(member(member(d, "inflexible", p), id, p + "/inflexible"), p + "/inflexible/" + id);
      } else {
        inst.demand.inflexible[static_cast<std::size_t>(n)] =
            slice_days(vec(series.at("demand").at(id), root + "/series/demand/" + id), inst.days, T, root + "/series/demand/" + id);
      }
      if (has(d, "utility_intercept") && d.at("utility_intercept").contains(id)) {
        inst.demand.utility_intercept[static_cast<std::size_t>(n)] = matrix(d.at("utility_intercept").at(id), p + "/utility_intercept/" + id);
      } else {
        auto m = inst.demand.inflexible[static_cast<std::size_t>(n)];
        for (auto& row : m)
          for (auto& v : row) v = scale * v + offset;
        inst.demand.utility_intercept[static_cast<std::size_t>(n)] = m;
      }
    }
    if (has(d, "response_offset")) {
      inst.demand.response_offset.assign(static_cast<std::size_t>(Nn), std::vector<double>(static_cast<std::size_t>(T), 0.0));
      const json& r = d.at("response_offset");
      for (auto it = r.begin(); it != r.end(); ++it)
        inst.demand.response_offset[static_cast<std::size_t>(index_of(node_idx, it.key(), p + "/response_offset"))] =
            vec(it.value(), p + "/response_offset/" + it.key());
    }
  }

  // policy
  {
    const json& pol = member(doc, "policy", root);
    const std::string p = root + "/policy";
    inst.policy.strategic_state = index_of(state_idx, text(member(pol, "strategic_state", p), p + "/strategic_state"), p + "/strategic_state");
    inst.policy.rps_fraction = number_or(pol, "rps_fraction", 0.0, p);
    inst.policy.budget = number_or(pol, "budget", kInf, p);
    inst.policy.eta = number_or(pol, "eta", 0.03, p);
    inst.policy.ccg_tolerance = number_or(pol, "ccg_tolerance", 1e-3, p);
    inst.policy.recovery_years = static_cast<int>(number_or(pol, "recovery_years", 10, p));
    inst.policy.discount_rate = number_or(pol, "discount_rate", 0.05, p);
    if (has(pol, "on_peak")) {
      const json& op = pol.at("on_peak");
      if (!op.is_array()) fail(p + "/on_peak", "expected an array of booleans");
      for (std::size_t t = 0; t < op.size(); ++t) {
        if (!op[t].is_boolean()) fail(p + "/on_peak/" + std::to_string(t), "expected a boolean");
        inst.policy.on_peak.push_back(op[t].get<bool>());
      }
    } else {
      // peak window [start, end) in hours of the day; default 13:00-21:00
      std::vector<double> win = has(pol, "peak_hours") ? vec(pol.at("peak_hours"), p + "/peak_hours") : std::vector<double>{13, 21};
      if (win.size() != 2) fail(p + "/peak_hours", "expected [start, end]");
      for (int t = 0; t < T; ++t) inst.policy.on_peak.push_back(t >= win[0] && t < win[1]);
    }
  }

  if (has(doc, "participation")) {
    const json& a = doc.at("participation");
    inst.participation.assign(inst.generators.size(), {});
    for (auto it = a.begin(); it != a.end(); ++it)
      inst.participation[static_cast<std::size_t>(index_of(gen_idx, it.key(), root + "/participation"))] =
          vec(it.value(), root + "/participation/" + it.key());
    for (auto& row : inst.participation)
      if (row.empty()) row.assign(static_cast<std::size_t>(T), 0.0);
  }
  return inst;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string body = ss.str();
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    std::size_t pos = std::min<std::size_t>(e.byte, body.size());
    long line = 1 + std::count(body.begin(), body.begin() + static_cast<long>(pos > 0 ? pos - 1 : 0), '\n');
    throw InstanceFormatError(path + ":" + std::to_string(line), std::string("JSON parse error: ") + e.what());
  }
  return parse_instance(doc, path);
}

json instance_to_json(const Instance& inst) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = inst.name;
  const auto& net = inst.network;
  j["network"]["states"] = net.states;
  j["network"]["nodes"] = json::array();
  for (const auto& n : net.nodes)
    j["network"]["nodes"].push_back({{"id", n.id}, {"state", net.states[static_cast<std::size_t>(n.state)]}, {"interface_max", n.interface_max}});
  j["network"]["lines"] = json::array();
  for (const auto& l : net.lines)
    j["network"]["lines"].push_back({{"id", l.id},
                                     {"from", net.nodes[static_cast<std::size_t>(l.from)].id},
                                     {"to", net.nodes[static_cast<std::size_t>(l.to)].id},
                                     {"reactance", l.reactance},
                                     {"flow_max", l.flow_max}});
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  j["generators"] = json::array();
  for (const auto& g : inst.generators) {
    json o{{"id", g.id},
           {"node", net.nodes[static_cast<std::size_t>(g.node)].id},
           {"status", g.is_candidate() ? "candidate" : "existing"},
           {"tech", g.is_renewable() ? "renewable" : "controllable"},
           {"fuel", g.fuel},
           {"g_min", g.g_min},
           {"g_max", g.g_max},
           {"ramp_min", finite_or_null(g.ramp_min)},
           {"ramp_max", finite_or_null(g.ramp_max)},
           {"min_output_factor", g.min_output_factor},
           {"cost", g.cost},
           {"capital_cost", g.capital_cost},
           {"build_max", finite_or_null(g.build_max)}};
    if (g.is_renewable()) {
      o["forecast"] = g.forecast;
      o["error_mean"] = g.error_mean;
      o["error_sd"] = g.error_sd;
    }
    j["generators"].push_back(o);
  }
  j["demand"]["utility_slope"] = inst.demand.utility_slope;
  for (std::size_t n = 0; n < net.nodes.size(); ++n) {
    j["demand"]["inflexible"][net.nodes[n].id] = inst.demand.inflexible[n];
    j["demand"]["utility_intercept"][net.nodes[n].id] = inst.demand.utility_intercept[n];
    if (!inst.demand.response_offset.empty()) j["demand"]["response_offset"][net.nodes[n].id] = inst.demand.response_offset[n];
  }
  j["repdays"] = {{"hours", inst.days.hours}, {"weights", inst.days.weights}};
  if (!inst.days.source_days.empty()) j["repdays"]["source_days"] = inst.days.source_days;
  const auto& p = inst.policy;
  j["policy"] = {{"strategic_state", net.states[static_cast<std::size_t>(p.strategic_state)]},
                 {"rps_fraction", p.rps_fraction},
                 {"budget", finite_or_null(p.budget)},
                 {"on_peak", p.on_peak},
                 {"eta", p.eta},
                 {"ccg_tolerance", p.ccg_tolerance},
                 {"recovery_years", p.recovery_years},
                 {"discount_rate", p.discount_rate}};
  if (!inst.participation.empty()) {
    for (std::size_t i = 0; i < inst.generators.size(); ++i)
      if (!inst.participation[i].empty()) j["participation"][inst.generators[i].id] = inst.participation[i];
  }
  return j;
}

}  // namespace rpsopt
