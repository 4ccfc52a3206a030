#include <cmath>
#include <map>

#include "beyondwords/cluster_quality.hpp"
#include "beyondwords/kmeans.hpp"
#include "beyondwords/svd.hpp"

namespace beyondwords {

int select_rank(const std::vector<double>& cumulative, double threshold) {
  if (cumulative.empty()) throw ConfigError("select_rank: empty ratios");
  if (!(threshold > 0 && threshold <= 1)) throw ConfigError("select_rank: threshold must be in (0,1]");
  // Slack absorbs rounding in sums that land exactly on the threshold.
  constexpr double slack = 1e-12;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (cumulative[i] >= threshold - slack) return static_cast<int>(i + 1);
  }
  return static_cast<int>(cumulative.size());
}

ElbowResult elbow_from_inertias(const std::vector<int>& ks, const std::vector<double>& inertias) {
  if (ks.size() != inertias.size()) throw ConfigError("elbow: ks and inertias differ in length");
  if (ks.size() < 3) throw ConfigError("elbow: need at least three k values");
  ElbowResult r;
  r.ks = ks;
  r.inertias = inertias;

  const double scale = std::max(1.0, std::abs(inertias.front()));
  r.degenerate = std::all_of(inertias.begin(), inertias.end(), [&](double v) {
    return std::abs(v - inertias.front()) <= 1e-12 * scale;
  });
  std::size_t best = 1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < inertias.size(); ++i) {
    const double score = (inertias[i - 1] - inertias[i]) - (inertias[i] - inertias[i + 1]);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  r.k = ks[r.degenerate ? 1 : best];
  return r;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ConfigError("adjusted_rand_index: label vectors differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto pairs = [](double m) { return m * (m - 1) / 2; };
  double index = 0;
  for (const auto& [key, count] : table) index += pairs(count);
  double sum_rows = 0;
  for (const auto& [key, count] : rows) sum_rows += pairs(count);
  double sum_cols = 0;
  for (const auto& [key, count] : cols) sum_cols += pairs(count);
  const double expected = sum_rows * sum_cols / pairs(n);
  const double max_index = (sum_rows + sum_cols) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace beyondwords
