#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rpsopt/io.hpp"

namespace rpsopt {

Clustering cluster_representative_days(const std::vector<std::vector<double>>& hourly, int k, int hours_per_day,
                                       const std::vector<double>& feature_weights) {
  if (hourly.empty()) throw std::invalid_argument("no series to cluster");
  if (hours_per_day <= 0) throw std::invalid_argument("hours per day must be positive");
  const std::size_t H = static_cast<std::size_t>(hours_per_day);
  const std::size_t len = hourly.front().size();
  for (const auto& s : hourly)
    if (s.size() != len) throw std::invalid_argument("series lengths differ");
  if (len == 0 || len % H != 0) throw std::invalid_argument("series length is not a multiple of " + std::to_string(H));
  const int D = static_cast<int>(len / H);
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (k > D) throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the number of days (" + std::to_string(D) + ")");
  if (!feature_weights.empty() && feature_weights.size() != hourly.size())
    throw std::invalid_argument("one feature weight per series expected");

  // Day vectors: every (series, hour) coordinate z-normalized across days.
  const std::size_t dim = hourly.size() * H;
  std::vector<std::vector<double>> x(static_cast<std::size_t>(D), std::vector<double>(dim));
  for (std::size_t f = 0; f < hourly.size(); ++f) {
    double w = feature_weights.empty() ? 1.0 : feature_weights[f];
    for (std::size_t h = 0; h < H; ++h) {
      double mean = 0.0, var = 0.0;
      for (int d = 0; d < D; ++d) mean += hourly[f][static_cast<std::size_t>(d) * H + h];
      mean /= D;
      for (int d = 0; d < D; ++d) {
        double v = hourly[f][static_cast<std::size_t>(d) * H + h] - mean;
        var += v * v;
      }
      double sd = std::sqrt(var / D);
      for (int d = 0; d < D; ++d) {
        double v = hourly[f][static_cast<std::size_t>(d) * H + h] - mean;
        x[static_cast<std::size_t>(d)][f * H + h] = sd > 0 ? w * v / sd : 0.0;
      }
    }
  }
  auto dist2 = [&](int a, int b) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double v = x[static_cast<std::size_t>(a)][i] - x[static_cast<std::size_t>(b)][i];
      s += v * v;
    }
    return s;
  };

  // Ward agglomeration on centroids; ties go to the pair with the earliest days.
  struct Cluster {
    std::vector<int> members;
    std::vector<double> centroid;
  };
  std::vector<Cluster> cl;
  for (int d = 0; d < D; ++d) cl.push_back({{d}, x[static_cast<std::size_t>(d)]});
  while (static_cast<int>(cl.size()) > k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 1;
    for (std::size_t a = 0; a < cl.size(); ++a)
      for (std::size_t b = a + 1; b < cl.size(); ++b) {
        double na = static_cast<double>(cl[a].members.size()), nb = static_cast<double>(cl[b].members.size());
        double s = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
          double v = cl[a].centroid[i] - cl[b].centroid[i];
          s += v * v;
        }
        double cost = na * nb / (na + nb) * s;
        if (std::isinf(best) || cost < best - 1e-12 * std::max(1.0, best)) {
          best = cost;
          ba = a;
          bb = b;
        }
      }
    auto& A = cl[ba];
    auto& B = cl[bb];
    double na = static_cast<double>(A.members.size()), nb = static_cast<double>(B.members.size());
    for (std::size_t i = 0; i < dim; ++i) A.centroid[i] = (na * A.centroid[i] + nb * B.centroid[i]) / (na + nb);
    A.members.insert(A.members.end(), B.members.begin(), B.members.end());
    std::sort(A.members.begin(), A.members.end());
    cl.erase(cl.begin() + static_cast<long>(bb));
  }

  // Medoid: member with the smallest total distance to the rest, earliest day on ties.
  std::vector<std::pair<int, std::size_t>> reps;
  for (std::size_t c = 0; c < cl.size(); ++c) {
    int med = cl[c].members.front();
    double bestsum = std::numeric_limits<double>::infinity();
    for (int m : cl[c].members) {
      double s = 0.0;
      for (int o : cl[c].members) s += std::sqrt(dist2(m, o));
      if (std::isinf(bestsum) || s < bestsum - 1e-12 * std::max(1.0, bestsum)) {
        bestsum = s;
        med = m;
      }
    }
    reps.emplace_back(med, c);
  }
  std::sort(reps.begin(), reps.end());

  Clustering out;
  out.days.hours = hours_per_day;
  out.assignment.assign(static_cast<std::size_t>(D), -1);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& c = cl[reps[r].second];
    out.days.source_days.push_back(reps[r].first);
    out.days.weights.push_back(static_cast<double>(c.members.size()) / D);
    for (int m : c.members) out.assignment[static_cast<std::size_t>(m)] = static_cast<int>(r);
  }
  return out;
}

}  // namespace rpsopt
