#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "beyondwords/agentic.hpp"
#include "beyondwords/autoencoder.hpp"
#include "beyondwords/cluster_quality.hpp"
#include "beyondwords/sampling.hpp"

namespace beyondwords {

/// Keyword -> occurrence count, in the ThemeSet's keyword order.
using KeywordCounts = std::vector<std::pair<std::string, int>>;

/// Case-insensitive occurrences of each keyword as a whole phrase (not inside
/// a longer word) across `texts`. Keywords that never occur count 1.
KeywordCounts keyword_frequencies(const ThemeSet& themes, const std::vector<std::string>& texts);

enum class NodeKind { keyword, group, theme };

struct SankeyNode {
  std::string id;  // "keyword:<k>", "group:<g>", "theme:<t>"
  std::string label;
  NodeKind kind = NodeKind::keyword;
};

struct SankeyLink {
  std::string source;
  std::string target;
  double weight = 0;
};

struct SankeyGraph {
  std::vector<SankeyNode> nodes;
  std::vector<SankeyLink> links;
};

/// Label of the sink that receives groups no theme references.
inline constexpr const char* kUnthemedLabel = "(no theme)";

/// keyword -> group links weighted by keyword frequency; group -> theme links
/// carrying the group's inbound total, split evenly when several themes share
/// the group. Groups no theme references drain into kUnthemedLabel.
SankeyGraph sankey_links(const ThemeSet& themes, const KeywordCounts& freqs);

/// Largest |inbound - outbound| over group nodes.
double max_flow_imbalance(const SankeyGraph& g);

struct MetricsTable {
  ClusterQuality with_ae;
  ClusterQuality without_ae;
};

MetricsTable metrics_table(const ClusterQuality& with_ae, const ClusterQuality& without_ae);

/// Plain-text table: metric rows, one column per arm; CH as an integer, DB
/// and silhouette to two decimals.
std::string to_text(const MetricsTable& t);
nlohmann::json to_json(const MetricsTable& t);
MetricsTable metrics_table_from_json(const nlohmann::json& j);

struct ElbowCurve {
  std::vector<int> ks;
  std::vector<double> inertias;
  int selected_k = 0;
};

struct ReportInputs {
  std::vector<int> cluster_ids;
  std::map<int, RepresentativeSample> samples;
  std::map<int, RefinementTranscript> transcripts;
  MetricsTable metrics;
  nlohmann::json metrics_extra = nlohmann::json::object();  // merged into metrics.json
  TrainingReport training;
  std::vector<double> cumulative_variance;          // with autoencoder
  std::vector<double> cumulative_variance_raw;      // without
  ElbowCurve elbow;
};

/// Writes themes.json, wordcloud.json, sankey.json, metrics.json and
/// curves/{loss,variance,variance_raw,elbow}.csv under `dir`. Every file is
/// checked before it is written. Throws StageError naming a cluster whose
/// transcript or sample is missing.
void write_report(const std::filesystem::path& dir, const ReportInputs& in);

/// Structural checks applied before writing; throw ParseError on violation.
void check_wordcloud_json(const nlohmann::json& j);
void check_sankey_json(const nlohmann::json& j);
void check_themes_json(const nlohmann::json& j);
void check_metrics_json(const nlohmann::json& j);

nlohmann::json to_json(const SankeyGraph& g);

}  // namespace beyondwords
