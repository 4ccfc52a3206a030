#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>

#include "beyondwords/matrix_io.hpp"
#include "beyondwords/report.hpp"

using namespace beyondwords;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

ThemeSet make_themes(std::vector<std::string> keywords, std::vector<KeywordGroup> groups, std::vector<Theme> themes) {
  ThemeSet t;
  t.keywords = std::move(keywords);
  t.groups = std::move(groups);
  t.themes = std::move(themes);
  t.validate();
  return t;
}

double link_weight(const SankeyGraph& g, const std::string& s, const std::string& t) {
  for (const auto& l : g.links)
    if (l.source == s && l.target == t) return l.weight;
  return -1;
}

// Random valid ThemeSet; groups may share keywords and themes may share groups.
ThemeSet random_themes(std::mt19937_64& gen) {
  ThemeSet t;
  const int nk = 1 + static_cast<int>(gen() % 8);
  for (int i = 0; i < nk; ++i) t.keywords.push_back("kw" + std::to_string(i));
  const int ng = 1 + static_cast<int>(gen() % 4);
  for (int g = 0; g < ng; ++g) {
    KeywordGroup grp{"g" + std::to_string(g), {}};
    for (const auto& k : t.keywords)
      if (gen() % 2) grp.members.push_back(k);
    if (grp.members.empty()) grp.members.push_back(t.keywords[gen() % t.keywords.size()]);
    t.groups.push_back(grp);
  }
  const int nt = 1 + static_cast<int>(gen() % 3);
  for (int i = 0; i < nt; ++i) {
    Theme th{"T" + std::to_string(i), "d", {}};
    for (const auto& g : t.groups)
      if (gen() % 3 == 0) th.groups.push_back(g.name);
    if (th.groups.empty()) th.groups.push_back(t.groups[gen() % t.groups.size()].name);
    t.themes.push_back(th);
  }
  t.validate();
  return t;
}

RefinementTranscript transcript_for(int cluster, const ThemeSet& t) {
  RefinementTranscript tr;
  tr.cluster_id = cluster;
  ThemeSet final = t;
  final.cluster_id = cluster;
  tr.rounds.push_back({final, {0.9, "fine", "score: 9"}});
  tr.terminal_reason = TerminalReason::threshold_met;
  tr.final = final;
  return tr;
}

}  // namespace

TEST_CASE("keyword frequencies") {
  const ThemeSet t = make_themes({"burnout", "Sensory Overload", "absent"}, {}, {});
  const auto f = keyword_frequencies(
      t, {"Burnout again. burnout!", "BURNOUT and sensory overload", "no burnouts here, burnout", "sensory  overload"});
  CHECK(f[0] == std::pair<std::string, int>{"burnout", 4});
  CHECK(f[1].second == 1);  // the second sensory mention has two spaces
  CHECK(f[2].second == 1);  // floor
  const auto g = keyword_frequencies(make_themes({"Burnout"}, {}, {}), {"burnout burnout"});
  CHECK(g[0].second == 2);
}

TEST_CASE("sankey examples") {
  const ThemeSet one = make_themes({"kw"}, {{"grp", {"kw"}}}, {{"thm", "d", {"grp"}}});
  const auto g1 = sankey_links(one, {{"kw", 3}});
  REQUIRE(g1.links.size() == 2);
  CHECK(link_weight(g1, "keyword:kw", "group:grp") == 3);
  CHECK(link_weight(g1, "group:grp", "theme:thm") == 3);

  const ThemeSet two = make_themes({"a", "b"}, {{"grp", {"a", "b"}}}, {{"thm", "d", {"grp"}}});
  CHECK(link_weight(sankey_links(two, {{"a", 2}, {"b", 5}}), "group:grp", "theme:thm") == 7);

  const ThemeSet multi = make_themes({"a", "b"}, {{"g1", {"a"}}, {"g2", {"b"}}}, {{"thm", "d", {"g1", "g2"}}});
  const auto g3 = sankey_links(multi, {{"a", 1}, {"b", 1}});
  CHECK(link_weight(g3, "group:g1", "theme:thm") == 1);
  CHECK(link_weight(g3, "group:g2", "theme:thm") == 1);

  // a group nobody references drains into the sink; shared groups split
  const ThemeSet odd = make_themes({"a", "b"}, {{"g1", {"a", "b"}}, {"g2", {"b"}}},
                                   {{"T1", "d", {"g1"}}, {"T2", "d", {"g1"}}});
  const auto g4 = sankey_links(odd, {{"a", 3}, {"b", 1}});
  CHECK(link_weight(g4, "group:g1", "theme:T1") == 2);
  CHECK(link_weight(g4, "group:g2", std::string("theme:") + kUnthemedLabel) == 1);
  CHECK(max_flow_imbalance(g4) == 0);
}

TEST_CASE("sankey conservation on random theme sets") {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 300; ++i) {
    const ThemeSet t = random_themes(gen);
    KeywordCounts f;
    for (const auto& k : t.keywords) f.emplace_back(k, 1 + static_cast<int>(gen() % 9));
    const auto g = sankey_links(t, f);
    CHECK(max_flow_imbalance(g) < 1e-9);
    json wrapped{{"clusters", json::array({to_json(g)})}};
    CHECK_NOTHROW(check_sankey_json(wrapped));
    for (const auto& l : g.links) CHECK(l.weight > 0);
  }
}

TEST_CASE("metrics table layout") {
  ClusterQuality with_ae;
  with_ae.ch_index = 366243;
  with_ae.db_index = 0.62;
  with_ae.mean_silhouette = 0.48;
  ClusterQuality without_ae;
  without_ae.ch_index = 6235;
  without_ae.db_index = 5.22;
  without_ae.mean_silhouette = 0.04;
  const auto t = metrics_table(with_ae, without_ae);
  const std::string expected =
      "Metrics           With Autoencoder  Without Autoencoder\n"
      "                  Compression       Compression\n"
      "-------------------------------------------------------\n"
      "CH Index          366243            6235\n"
      "DB Index          0.62              5.22\n"
      "Silhouette Score  0.48              0.04\n";
  CHECK(to_text(t) == expected);

  const auto same = to_text(metrics_table(with_ae, with_ae));
  CHECK(same.find("366243            366243") != std::string::npos);

  const auto back = metrics_table_from_json(json::parse(to_json(t).dump()));
  CHECK(back.with_ae.ch_index == with_ae.ch_index);
  CHECK(back.without_ae.db_index == without_ae.db_index);
  CHECK(back.with_ae.mean_silhouette == with_ae.mean_silhouette);

  ClusterQuality inf = with_ae;
  inf.ch_index = std::numeric_limits<double>::infinity();
  const auto inf_back = metrics_table_from_json(json::parse(to_json(metrics_table(inf, without_ae)).dump()));
  CHECK(std::isinf(inf_back.with_ae.ch_index));
  CHECK(to_text(metrics_table(inf, without_ae)).find("inf") != std::string::npos);
}

TEST_CASE("write_report layout, determinism and missing transcripts") {
  const fs::path root = fs::temp_directory_path() / "bw_test_report";
  fs::remove_all(root);
  std::mt19937_64 gen(9);
  ReportInputs in;
  for (int c = 0; c < 3; ++c) {
    in.cluster_ids.push_back(c);
    RepresentativeSample s;
    s.cluster_id = c;
    s.members = {{"p" + std::to_string(c), 0.5, "kw0 and kw1 appear here kw0"}};
    in.samples[c] = s;
    in.transcripts[c] = transcript_for(c, random_themes(gen));
  }
  RatioCurve curve;
  curve.ratio = {1, 2};
  curve.train_loss = {1.0, 0.5};
  curve.val_loss = {1.1, 0.6};
  in.training.curves = {curve};
  in.cumulative_variance = {0.7, 0.95, 1.0};
  in.cumulative_variance_raw = {0.2, 0.4, 1.0};
  in.elbow = {{1, 2, 3}, {10, 4, 3}, 2};

  write_report(root / "a", in);
  write_report(root / "b", in);
  for (const char* f : {"themes.json", "wordcloud.json", "sankey.json", "metrics.json", "curves/loss.csv",
                        "curves/variance.csv", "curves/variance_raw.csv", "curves/elbow.csv"}) {
    INFO(f);
    REQUIRE(fs::exists(root / "a" / f));
    CHECK(read_text(root / "a" / f) == read_text(root / "b" / f));
  }
  const json cloud = read_json(root / "a" / "wordcloud.json");
  CHECK(cloud["clusters"].size() == 3);
  CHECK_NOTHROW(check_sankey_json(read_json(root / "a" / "sankey.json")));
  CHECK(read_text(root / "a" / "curves" / "elbow.csv") == "k,inertia,selected\n1,10,0\n2,4,1\n3,3,0\n");
  CHECK(read_text(root / "a" / "curves" / "loss.csv") == "ratio,epoch,train_loss,val_loss\n1/2,1,1,1.1000000000000001\n1/2,2,0.5,0.59999999999999998\n");

  in.transcripts.erase(2);
  try {
    write_report(root / "c", in);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("cluster 2") != std::string::npos);
  }
}

TEST_CASE("report checks reject broken files") {
  json bad_cloud{{"clusters", {{{"cluster_id", 0}, {"keywords", {{{"text", "x"}, {"count", 0}}}}}}}};
  CHECK_THROWS_AS(check_wordcloud_json(bad_cloud), ParseError);
  json unbalanced{{"clusters",
                   {{{"nodes",
                      {{{"id", "keyword:a"}, {"kind", "keyword"}, {"label", "a"}},
                       {{"id", "group:g"}, {"kind", "group"}, {"label", "g"}},
                       {{"id", "theme:t"}, {"kind", "theme"}, {"label", "t"}}}},
                     {"links",
                      {{{"source", "keyword:a"}, {"target", "group:g"}, {"weight", 2}},
                       {{"source", "group:g"}, {"target", "theme:t"}, {"weight", 3}}}}}}}};
  CHECK_THROWS_AS(check_sankey_json(unbalanced), ParseError);
}
