#pragma once

// Instance files, representative-day clustering and result export.

#include <string>
#include <vector>

#include "json.hpp"

#include "rpsopt/ccg.hpp"
#include "rpsopt/model.hpp"
#include "rpsopt/stochastic.hpp"

namespace rpsopt {

constexpr int kSchemaVersion = 1;

/// Parse or schema error with the offending location.
class InstanceFormatError : public std::runtime_error {
 public:
  InstanceFormatError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

/// Reads and parses an instance file (not yet validated).
Instance load_instance(const std::string& path);
Instance parse_instance(const nlohmann::json& doc, const std::string& origin = "instance");
/// Serializes an instance in the pre-clustered form.
nlohmann::json instance_to_json(const Instance& inst);

struct Clustering {
  RepDaySet days;                // weights and medoid day per representative, ordered by medoid day
  std::vector<int> assignment;   // representative index per source day
};

/// Ward agglomerative clustering of day vectors built from an hourly matrix
/// [feature][hour]; features are z-normalized and scaled by feature_weights
/// (empty = equal). Representatives are cluster medoids.
Clustering cluster_representative_days(const std::vector<std::vector<double>>& hourly, int k, int hours_per_day = 24,
                                       const std::vector<double>& feature_weights = {});

// ---------------------------------------------------------------- results

nlohmann::json regulator_to_json(const RegulatorDecision& r);
RegulatorDecision regulator_from_json(const nlohmann::json& j);
nlohmann::json utility_to_json(const UtilityDecision& u);
UtilityDecision utility_from_json(const nlohmann::json& j);
nlohmann::json market_to_json(const MarketOutcome& m);
MarketOutcome market_from_json(const nlohmann::json& j);
nlohmann::json iterate_to_json(const CcgIterate& it);
nlohmann::json ccg_result_to_json(const ValidatedInstance& inst, const CcgResult& r);
nlohmann::json violations_to_json(const std::vector<ViolationRate>& v);
nlohmann::json solve_report_to_json(const SolveReport& r);

/// Frontier row of an incentive sweep.
struct SweepPoint {
  double tau_e = 0.0;
  double tau_c = 0.0;  // $/kW
  double average_tariff = 0.0;
  double regulator_objective = 0.0;
  double utility_objective = 0.0;
  double gap = 0.0;
  std::string status;
};

/// CSV with header tau_e,tau_c,avg_tariff,O_R,O_U,gap,status.
std::string sweep_to_csv(const std::vector<SweepPoint>& pts);
nlohmann::json sweep_to_json(const std::vector<SweepPoint>& pts);

/// JSON text with every double printed to 17 significant digits.
std::string dump_exact(const nlohmann::json& j, int indent = 2);

void write_text(const std::string& path, const std::string& text);

}  // namespace rpsopt
