#include "beyondwords/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "beyondwords/errors.hpp"
#include "beyondwords/matrix_io.hpp"

namespace beyondwords {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80; }

int count_phrase(const std::string& text, const std::string& phrase) {
  if (phrase.empty()) return 0;
  int n = 0;
  std::size_t pos = 0;
  while ((pos = text.find(phrase, pos)) != std::string::npos) {
    const bool left = pos == 0 || !word_char(text[pos - 1]);
    const std::size_t end = pos + phrase.size();
    const bool right = end == text.size() || !word_char(text[end]);
    if (left && right) {
      ++n;
      pos = end;
    } else {
      ++pos;
    }
  }
  return n;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Shortest text that reads back to the same double.
std::string exact(double v) { return fmt("%.17g", v); }

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number_or_inf(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError("expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ParseError("report check failed: " + what);
}

std::string node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::keyword:
      return "keyword";
    case NodeKind::group:
      return "group";
    case NodeKind::theme:
      return "theme";
  }
  return "keyword";
}

void write_checked(const fs::path& file, const json& j, void (*check)(const json&)) {
  check(j);
  write_json(file, j);
}

}  // namespace

KeywordCounts keyword_frequencies(const ThemeSet& themes, const std::vector<std::string>& texts) {
  std::vector<std::string> lowered;
  lowered.reserve(texts.size());
  for (const auto& t : texts) lowered.push_back(lower(t));
  KeywordCounts out;
  for (const auto& kw : themes.keywords) {
    const std::string k = lower(kw);
    int n = 0;
    for (const auto& t : lowered) n += count_phrase(t, k);
    out.emplace_back(kw, std::max(n, 1));
  }
  return out;
}

SankeyGraph sankey_links(const ThemeSet& themes, const KeywordCounts& freqs) {
  std::map<std::string, double> freq;
  for (const auto& [k, n] : freqs) freq[k] = n;
  SankeyGraph g;
  std::set<std::string> seen;
  auto add_node = [&](NodeKind kind, const std::string& label) {
    const std::string id = node_kind_name(kind) + ":" + label;
    if (seen.insert(id).second) g.nodes.push_back({id, label, kind});
    return id;
  };

  for (const auto& k : themes.keywords) add_node(NodeKind::keyword, k);
  std::map<std::string, double> group_weight;
  for (const auto& grp : themes.groups) {
    const std::string gid = add_node(NodeKind::group, grp.name);
    for (const auto& m : grp.members) {
      const auto it = freq.find(m);
      const double w = it == freq.end() ? 1.0 : it->second;
      g.links.push_back({"keyword:" + m, gid, w});
      group_weight[grp.name] += w;
    }
  }
  std::map<std::string, int> uses;
  for (const auto& t : themes.themes) {
    for (const auto& name : t.groups) ++uses[name];
  }
  for (const auto& t : themes.themes) {
    const std::string tid = add_node(NodeKind::theme, t.title);
    for (const auto& name : t.groups) {
      g.links.push_back({"group:" + name, tid, group_weight[name] / uses[name]});
    }
  }
  for (const auto& grp : themes.groups) {
    if (uses.count(grp.name)) continue;
    const std::string sink = add_node(NodeKind::theme, kUnthemedLabel);
    g.links.push_back({"group:" + grp.name, sink, group_weight[grp.name]});
  }
  return g;
}

double max_flow_imbalance(const SankeyGraph& g) {
  std::map<std::string, double> in;
  std::map<std::string, double> out;
  for (const auto& l : g.links) {
    out[l.source] += l.weight;
    in[l.target] += l.weight;
  }
  double worst = 0;
  for (const auto& n : g.nodes) {
    if (n.kind != NodeKind::group) continue;
    worst = std::max(worst, std::abs(in[n.id] - out[n.id]));
  }
  return worst;
}

json to_json(const SankeyGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"id", n.id}, {"label", n.label}, {"kind", node_kind_name(n.kind)}});
  json links = json::array();
  for (const auto& l : g.links) links.push_back({{"source", l.source}, {"target", l.target}, {"weight", l.weight}});
  return {{"nodes", nodes}, {"links", links}};
}

MetricsTable metrics_table(const ClusterQuality& with_ae, const ClusterQuality& without_ae) {
  return {with_ae, without_ae};
}

std::string to_text(const MetricsTable& t) {
  auto ch = [](double v) { return std::isinf(v) ? std::string(v > 0 ? "inf" : "-inf") : fmt("%.0f", v); };
  const std::vector<std::vector<std::string>> rows{
      {"Metrics", "With Autoencoder", "Without Autoencoder"},
      {"", "Compression", "Compression"},
      {"CH Index", ch(t.with_ae.ch_index), ch(t.without_ae.ch_index)},
      {"DB Index", fmt("%.2f", t.with_ae.db_index), fmt("%.2f", t.without_ae.db_index)},
      {"Silhouette Score", fmt("%.2f", t.with_ae.mean_silhouette), fmt("%.2f", t.without_ae.mean_silhouette)},
  };
  std::vector<std::size_t> width(3, 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], r[c].size());
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string line;
    for (std::size_t c = 0; c < 3; ++c) {
      std::string cell = rows[i][c];
      if (c + 1 < 3) cell.resize(width[c] + 2, ' ');
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (i == 1) out += std::string(width[0] + width[1] + width[2] + 4, '-') + "\n";
  }
  return out;
}

json to_json(const MetricsTable& t) {
  auto arm = [](const ClusterQuality& q) {
    return json{{"ch_index", number_or_inf(q.ch_index)},
                {"db_index", q.db_index},
                {"silhouette", q.mean_silhouette}};
  };
  return {{"with_autoencoder", arm(t.with_ae)},
          {"without_autoencoder", arm(t.without_ae)},
          {"text", to_text(t)}};
}

MetricsTable metrics_table_from_json(const json& j) {
  auto arm = [](const json& a) {
    ClusterQuality q;
    q.ch_index = read_number_or_inf(a.at("ch_index"));
    q.db_index = a.at("db_index").get<double>();
    q.mean_silhouette = a.at("silhouette").get<double>();
    return q;
  };
  return {arm(j.at("with_autoencoder")), arm(j.at("without_autoencoder"))};
}

void check_wordcloud_json(const json& j) {
  require(j.contains("clusters") && j["clusters"].is_array(), "wordcloud.clusters is an array");
  for (const auto& c : j["clusters"]) {
    require(c.contains("cluster_id") && c["cluster_id"].is_number_integer(), "wordcloud cluster_id");
    for (const auto& k : c.at("keywords")) {
      require(k.at("text").is_string() && !k["text"].get<std::string>().empty(), "wordcloud keyword text");
      require(k.at("count").is_number_integer() && k["count"].get<int>() >= 1, "wordcloud count >= 1");
    }
  }
}

void check_sankey_json(const json& j) {
  require(j.contains("clusters") && j["clusters"].is_array(), "sankey.clusters is an array");
  for (const auto& c : j["clusters"]) {
    std::set<std::string> ids;
    std::map<std::string, std::string> kinds;
    for (const auto& n : c.at("nodes")) {
      const auto id = n.at("id").get<std::string>();
      require(ids.insert(id).second, "sankey node ids are unique");
      kinds[id] = n.at("kind").get<std::string>();
    }
    std::map<std::string, double> in;
    std::map<std::string, double> out;
    for (const auto& l : c.at("links")) {
      const auto s = l.at("source").get<std::string>();
      const auto t = l.at("target").get<std::string>();
      require(ids.count(s) && ids.count(t), "sankey link endpoints are nodes");
      const double w = l.at("weight").get<double>();
      require(w > 0 && std::isfinite(w), "sankey link weight is positive");
      out[s] += w;
      in[t] += w;
    }
    for (const auto& [id, kind] : kinds) {
      if (kind != "group") continue;
      require(std::abs(in[id] - out[id]) <= 1e-9 * std::max(1.0, in[id]),
              "flow conservation at " + id);
    }
  }
}

void check_themes_json(const json& j) {
  require(j.contains("clusters") && j["clusters"].is_array(), "themes.clusters is an array");
  for (const auto& c : j["clusters"]) {
    theme_set_from_json(c.at("final"));  // validates referential integrity
    const double s = c.at("final_score").get<double>();
    require(s >= 0 && s <= 1, "final_score in [0,1]");
    require(c.at("rounds").get<int>() >= 1, "at least one round");
    const auto reason = c.at("terminal_reason").get<std::string>();
    require(reason == "threshold_met" || reason == "max_iterations", "terminal_reason");
  }
}

void check_metrics_json(const json& j) {
  metrics_table_from_json(j.at("table"));
}

void write_report(const fs::path& dir, const ReportInputs& in) {
  if (in.cluster_ids.empty()) throw StageError("report: no clusters");
  json themes{{"clusters", json::array()}};
  json cloud{{"clusters", json::array()}};
  json sankey{{"clusters", json::array()}};
  for (int id : in.cluster_ids) {
    const auto tr = in.transcripts.find(id);
    if (tr == in.transcripts.end()) {
      throw StageError("report: transcript missing for cluster " + std::to_string(id));
    }
    const auto sm = in.samples.find(id);
    if (sm == in.samples.end()) throw StageError("report: sample missing for cluster " + std::to_string(id));
    const RefinementTranscript& t = tr->second;
    std::vector<std::string> texts;
    for (const auto& m : sm->second.members) texts.push_back(m.clean_text);
    const KeywordCounts freqs = keyword_frequencies(t.final, texts);

    themes["clusters"].push_back({{"cluster_id", id},
                                  {"rounds", t.rounds.size()},
                                  {"terminal_reason", to_string(t.terminal_reason)},
                                  {"final_score", t.rounds.back().evaluation.score},
                                  {"final", to_json(t.final)}});
    json kws = json::array();
    for (const auto& [k, n] : freqs) kws.push_back({{"text", k}, {"count", n}});
    cloud["clusters"].push_back({{"cluster_id", id}, {"keywords", kws}});
    json graph = to_json(sankey_links(t.final, freqs));
    graph["cluster_id"] = id;
    sankey["clusters"].push_back(graph);
  }

  json metrics = in.metrics_extra;
  metrics["table"] = to_json(in.metrics);

  fs::create_directories(dir / "curves");
  write_checked(dir / "themes.json", themes, check_themes_json);
  write_checked(dir / "wordcloud.json", cloud, check_wordcloud_json);
  write_checked(dir / "sankey.json", sankey, check_sankey_json);
  write_checked(dir / "metrics.json", metrics, check_metrics_json);

  std::string loss = "ratio,epoch,train_loss,val_loss\n";
  for (const auto& c : in.training.curves) {
    for (std::size_t e = 0; e < c.train_loss.size(); ++e) {
      loss += c.ratio.str() + "," + std::to_string(e + 1) + "," + exact(c.train_loss[e]) + "," +
              exact(c.val_loss[e]) + "\n";
    }
  }
  write_text(dir / "curves" / "loss.csv", loss);

  auto variance_csv = [](const std::vector<double>& v) {
    std::string s = "components,cumulative_ratio\n";
    for (std::size_t i = 0; i < v.size(); ++i) s += std::to_string(i + 1) + "," + exact(v[i]) + "\n";
    return s;
  };
  write_text(dir / "curves" / "variance.csv", variance_csv(in.cumulative_variance));
  write_text(dir / "curves" / "variance_raw.csv", variance_csv(in.cumulative_variance_raw));

  if (in.elbow.ks.size() != in.elbow.inertias.size()) throw StageError("report: elbow curve lengths differ");
  std::string elbow = "k,inertia,selected\n";
  for (std::size_t i = 0; i < in.elbow.ks.size(); ++i) {
    elbow += std::to_string(in.elbow.ks[i]) + "," + exact(in.elbow.inertias[i]) + "," +
             (in.elbow.ks[i] == in.elbow.selected_k ? "1" : "0") + "\n";
  }
  write_text(dir / "curves" / "elbow.csv", elbow);
}

}  // namespace beyondwords
