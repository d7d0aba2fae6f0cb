#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "rpsopt/io.hpp"
#include "support.hpp"

using namespace rpsopt;
using nlohmann::json;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("rpsopt_test_" + name);
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST_CASE("two-node fixture loads") {
  auto inst = testing::load_fixture("desk2.json");
  CHECK(inst.num_nodes() == 2);
  CHECK(inst.num_lines() == 1);
  CHECK(inst.num_generators() == 5);
  CHECK(inst.num_days() == 1);
  CHECK(inst.num_periods() == 4);
}

TEST_CASE("bundled regional instance") {
  auto raw = load_instance(testing::data_path("ne8.json"));
  CHECK(raw.network.nodes.size() == 8);
  CHECK(raw.network.states.size() == 6);
  CHECK(raw.days.weights.size() == 5);
  double wsum = 0.0;
  for (double w : raw.days.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0));
  double ct_nuclear = 0.0;
  int ct = -1;
  for (std::size_t s = 0; s < raw.network.states.size(); ++s)
    if (raw.network.states[s] == "CT") ct = static_cast<int>(s);
  REQUIRE(ct >= 0);
  for (const auto& g : raw.generators)
    if (g.fuel == "nuclear" && raw.network.nodes[static_cast<std::size_t>(g.node)].state == ct) ct_nuclear += g.g_max;
  CHECK(ct_nuclear == doctest::Approx(2116.0));
  CHECK_NOTHROW(validate_instance(raw));
}

TEST_CASE("missing and truncated files") {
  CHECK_THROWS_AS(load_instance("/nonexistent/none.json"), std::runtime_error);
  std::ifstream in(testing::data_path("desk2.json"));
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto path = temp_file("trunc.json", body.substr(0, body.size() / 2));
  CHECK_THROWS_AS(load_instance(path), InstanceFormatError);
}

TEST_CASE("schema errors name the field") {
  json doc = json::parse(std::ifstream(testing::data_path("desk2.json")));
  doc["network"]["lines"][0].erase("reactance");
  try {
    parse_instance(doc, "doc");
    FAIL("expected a schema error");
  } catch (const InstanceFormatError& e) {
    CHECK(std::string(e.what()).find("reactance") != std::string::npos);
  }
}

TEST_CASE("instance serialization round-trips") {
  auto raw = load_instance(testing::data_path("desk2.json"));
  json a = instance_to_json(raw);
  json b = instance_to_json(parse_instance(a));
  CHECK(a == b);
}

TEST_CASE("every day its own cluster") {
  std::vector<std::vector<double>> s{{1, 2, 3, 4, 5, 6, 7, 8, 9}};
  auto c = cluster_representative_days(s, 3, 3);
  REQUIRE(c.days.weights.size() == 3);
  for (double w : c.days.weights) CHECK(w == doctest::Approx(1.0 / 3));
  CHECK(c.days.source_days == std::vector<int>{0, 1, 2});
}

TEST_CASE("duplicate days share a cluster") {
  std::vector<double> A{1, 5, 2}, B{9, 0, 4};
  std::vector<double> s;
  for (const auto* d : {&A, &B, &A}) s.insert(s.end(), d->begin(), d->end());
  auto c = cluster_representative_days({s}, 2, 3);
  REQUIRE(c.days.weights.size() == 2);
  CHECK(c.days.source_days == std::vector<int>{0, 1});
  CHECK(c.days.weights[0] == doctest::Approx(2.0 / 3));
  CHECK(c.days.weights[1] == doctest::Approx(1.0 / 3));
  CHECK(c.assignment == std::vector<int>{0, 1, 0});
}

TEST_CASE("single cluster keeps the total-distance medoid") {
  auto c = cluster_representative_days({{0, 1, 7, 2, 3}}, 1, 1);
  CHECK(c.days.source_days == std::vector<int>{3});

  // two features, three hours: exhaustive check in z-normalized space
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 10);
  const int D = 9, H = 3;
  std::vector<std::vector<double>> s(2, std::vector<double>(D * H));
  for (auto& f : s)
    for (auto& v : f) v = U(rng);
  std::vector<std::vector<double>> z(D);
  for (const auto& f : s)
    for (int h = 0; h < H; ++h) {
      double m = 0, q = 0;
      for (int d = 0; d < D; ++d) m += f[static_cast<std::size_t>(d * H + h)] / D;
      for (int d = 0; d < D; ++d) q += std::pow(f[static_cast<std::size_t>(d * H + h)] - m, 2) / D;
      for (int d = 0; d < D; ++d) z[static_cast<std::size_t>(d)].push_back((f[static_cast<std::size_t>(d * H + h)] - m) / std::sqrt(q));
    }
  int best = -1;
  double bestsum = 1e300;
  for (int m = 0; m < D; ++m) {
    double sum = 0;
    for (int o = 0; o < D; ++o) {
      double d2 = 0;
      for (std::size_t i = 0; i < z[0].size(); ++i) d2 += std::pow(z[static_cast<std::size_t>(m)][i] - z[static_cast<std::size_t>(o)][i], 2);
      sum += std::sqrt(d2);
    }
    if (sum < bestsum) {
      bestsum = sum;
      best = m;
    }
  }
  auto c2 = cluster_representative_days(s, 1, H);
  CHECK(c2.days.source_days == std::vector<int>{best});
  CHECK(c2.days.weights == std::vector<double>{1.0});
}

TEST_CASE("clustering argument errors") {
  CHECK_THROWS_AS(cluster_representative_days({{1, 2, 3, 4}}, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(cluster_representative_days({{1, 2, 3}}, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(cluster_representative_days({{1, 2}}, 0, 1), std::invalid_argument);
}

TEST_CASE("exact number formatting survives reload") {
  json j = {{"a", 0.1 + 0.2}, {"b", std::vector<double>{1.0 / 3, -2e-17, 12345.678901234567}}, {"c", std::nan("")}};
  json back = json::parse(dump_exact(j));
  CHECK(back["a"].get<double>() == 0.1 + 0.2);
  CHECK(back["b"][0].get<double>() == 1.0 / 3);
  CHECK(back["b"][2].get<double>() == 12345.678901234567);
  CHECK(back["c"].is_null());
}

TEST_CASE("decision round-trip") {
  RegulatorDecision r;
  r.pi_on = {31.25, 1.0 / 7};
  r.pi_off = {17, 0.3};
  r.tau_e = 7.084812345678901;
  r.tau_c = 0.1;
  auto r2 = regulator_from_json(json::parse(dump_exact(regulator_to_json(r))));
  CHECK(r2.pi_on == r.pi_on);
  CHECK(r2.pi_off == r.pi_off);
  CHECK(r2.tau_e == r.tau_e);
  CHECK(r2.tau_c == r.tau_c);

  UtilityDecision u;
  u.capacity = {0, 0, 50.5};
  u.offers = {DayPeriod{{1, 2}}, DayPeriod{{3, 4}}, DayPeriod{{5, 1.0 / 3}}};
  u.interface_flow = {DayPeriod{{0.5, 0.25}}};
  u.demand = {DayPeriod{{40, 60}}};
  auto u2 = utility_from_json(json::parse(dump_exact(utility_to_json(u))));
  CHECK(u2.capacity == u.capacity);
  CHECK(u2.offers == u.offers);
  CHECK(u2.interface_flow == u.interface_flow);
  CHECK(u2.demand == u.demand);
}

TEST_CASE("sweep CSV layout") {
  std::vector<SweepPoint> pts{{1, 2, 30, 6000, 0, 0, "converged"}, {2, 2, 31, 6100, 5, 1e-4, "max_iter"}};
  auto csv = sweep_to_csv(pts);
  CHECK(csv.rfind("tau_e,tau_c,avg_tariff,O_R,O_U,gap,status\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("converged") != std::string::npos);
  auto j = sweep_to_json(pts);
  CHECK(j.size() == 2);
}
