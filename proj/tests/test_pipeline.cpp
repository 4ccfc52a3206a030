#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "beyondwords/errors.hpp"
#include "beyondwords/pipeline.hpp"
#include "beyondwords/report.hpp"
#include "beyondwords/synth.hpp"
#include "run_fixture.hpp"

using namespace beyondwords;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

json manifest(const Pipeline& p) { return read_json(p.run_dir() / "manifest.json"); }

int cli(const std::string& args) {
  const std::string cmd = std::string(BW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("ingest on the bundled corpus writes the corpus artifact and a manifest entry") {
  const auto dir = fixture::scratch("ingest");
  Pipeline p(fixture::config(fixture::bundled_config(), dir));
  const StageOutcome o = p.run_stage(Stage::ingest);
  CHECK_FALSE(o.skipped);
  REQUIRE(fs::exists(p.run_dir() / "corpus.jsonl"));
  const json m = manifest(p);
  const json& entry = m["stages"]["ingest"];
  CHECK(entry["key"] == p.stage_key(Stage::ingest));
  CHECK(entry["artifacts"]["corpus.jsonl"] == sha256_file(p.run_dir() / "corpus.jsonl"));
  CHECK(m["config_hash"].get<std::string>().size() == 64);
  CHECK(m["seeds"].contains("cluster"));
  const json meta = read_json(p.run_dir() / "corpus.meta.json");
  CHECK(meta["n_posts"] == 300);
  CHECK(meta["n_loaded"] == 300);
  fs::remove_all(dir);
}

TEST_CASE("a stage whose input stage has not run names the missing stage") {
  const auto dir = fixture::scratch("order");
  Pipeline p(fixture::config(fixture::bundled_config(), dir));
  const std::string msg = message_of([&] { p.run_stage(Stage::cluster); });
  CHECK(msg.find("factorize") != std::string::npos);
  CHECK_THROWS_AS(p.run_stage(Stage::cluster), StageError);
  CHECK_THROWS_AS(p.run_stage(Stage::embed), StageError);
  fs::remove_all(dir);
}

TEST_CASE("rerunning an unchanged stage skips with a notice and leaves the artifact alone") {
  const auto dir = fixture::scratch("skip");
  std::ostringstream log;
  Pipeline p(fixture::config(fixture::bundled_config(), dir), &log);
  p.run_stage(Stage::ingest);
  p.run_stage(Stage::embed);
  const fs::path bin = p.run_dir() / "embeddings.bin";
  const auto hash = sha256_file(bin);
  const auto mtime = fs::last_write_time(bin);
  const json before = manifest(p)["stages"]["embed"];

  const StageOutcome again = p.run_stage(Stage::embed);
  CHECK(again.skipped);
  CHECK(again.message.find("up to date") != std::string::npos);
  CHECK(log.str().find("[embed] stage 'embed' is up to date") != std::string::npos);
  CHECK(fs::last_write_time(bin) == mtime);
  CHECK(manifest(p)["stages"]["embed"] == before);

  const StageOutcome forced = p.run_stage(Stage::embed, true);
  CHECK_FALSE(forced.skipped);
  CHECK(sha256_file(bin) == hash);
  fs::remove_all(dir);
}

TEST_CASE("tampered or deleted input artifacts are rejected") {
  const auto dir = fixture::scratch("tamper");
  Pipeline p(fixture::config(fixture::bundled_config(), dir));
  p.run_stage(Stage::ingest);
  p.run_stage(Stage::embed);
  {
    std::ofstream out(p.run_dir() / "embeddings.json", std::ios::app);
    out << " ";
  }
  const std::string msg = message_of([&] { p.run_stage(Stage::compress); });
  CHECK(msg.find("embeddings.json") != std::string::npos);
  CHECK(msg.find("hash") != std::string::npos);
  p.run_stage(Stage::embed);  // the stale artifact makes embed itself rerun
  CHECK_NOTHROW(p.run_stage(Stage::compress));
  fs::remove(p.run_dir() / "latent.bin");
  CHECK(message_of([&] { p.run_stage(Stage::factorize); }).find("latent.bin") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config changes invalidate the changed stage and everything downstream") {
  const auto dir = fixture::scratch("invalidate");
  json j = fixture::bundled_config();
  Pipeline first(fixture::config(j, dir));
  first.run_all();
  j["cluster"]["seed"] = 99;
  Pipeline second(fixture::config(j, dir));
  for (Stage s : {Stage::ingest, Stage::embed, Stage::compress, Stage::factorize}) {
    CHECK(second.stage_key(s) == first.stage_key(s));
  }
  for (Stage s : {Stage::cluster, Stage::sample, Stage::themes, Stage::report}) {
    CHECK(second.stage_key(s) != first.stage_key(s));
  }
  CHECK_THROWS_AS(second.run_stage(Stage::sample), StageError);
  const auto outcomes = second.run_all();
  REQUIRE(outcomes.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(outcomes[i].skipped == (i < 4));
  fs::remove_all(dir);
}

TEST_CASE("a held lock blocks a second run on the same directory") {
  const auto dir = fixture::scratch("lock");
  Pipeline p(fixture::config(fixture::bundled_config(), dir));
  {
    RunLock held(p.run_dir());
    CHECK_THROWS_AS(p.run_stage(Stage::ingest), StageError);
    CHECK_THROWS_AS(RunLock(p.run_dir()), StageError);
  }
  CHECK_NOTHROW(p.run_stage(Stage::ingest));
  fs::remove_all(dir);
}

TEST_CASE("run_all on the bundled corpus with scripted clients completes every stage") {
  const auto dir = fixture::scratch("full");
  Pipeline p(fixture::config(fixture::bundled_config(), dir));
  const auto outcomes = p.run_all();
  REQUIRE(outcomes.size() == 8);
  for (const auto& o : outcomes) CHECK_FALSE(o.skipped);
  const json m = manifest(p);
  for (Stage s : all_stages()) CHECK(m["stages"].contains(stage_name(s)));
  const fs::path r = p.run_dir() / "report";
  for (const char* f : {"themes.json", "wordcloud.json", "sankey.json", "metrics.json", "curves/loss.csv",
                        "curves/variance.csv", "curves/variance_raw.csv", "curves/elbow.csv"}) {
    CHECK_MESSAGE(fs::exists(r / f), f);
  }
  CHECK_NOTHROW(check_sankey_json(read_json(r / "sankey.json")));
  CHECK_NOTHROW(check_wordcloud_json(read_json(r / "wordcloud.json")));
  CHECK_NOTHROW(check_themes_json(read_json(r / "themes.json")));
  CHECK_NOTHROW(check_metrics_json(read_json(r / "metrics.json")));
  CHECK(read_json(r / "metrics.json")["k"] == 3);
  const json summary = read_json(p.run_dir() / "transcripts" / "summary.json");
  CHECK(summary["failed"].empty());
  CHECK(summary["succeeded"].size() == 3);

  const auto again = p.run_all();
  for (const auto& o : again) CHECK(o.skipped);
  fs::remove_all(dir);
}

TEST_CASE("an unreachable chat endpoint fails themes but keeps the first six stages") {
  const auto dir = fixture::scratch("unreachable");
  json j = fixture::bundled_config();
  j["agentic"]["generator"] = {{"kind", "http"},
                               {"endpoint", "http://127.0.0.1:9/v1/chat/completions"},
                               {"model_id", "test-model"},
                               {"max_retries", 0},
                               {"timeout_seconds", 5}};
  Pipeline p(fixture::config(j, dir));
  const std::string msg = message_of([&] { p.run_all(); });
  CHECK(msg.find("themes") != std::string::npos);
  CHECK(msg.find(p.run_dir().string()) != std::string::npos);
  CHECK_THROWS_AS(p.run_stage(Stage::themes), ServiceError);
  const json m = manifest(p);
  for (Stage s : {Stage::ingest, Stage::embed, Stage::compress, Stage::factorize, Stage::cluster, Stage::sample}) {
    CHECK(m["stages"].contains(stage_name(s)));
    for (const auto& [rel, hash] : m["stages"][stage_name(s)]["artifacts"].items()) {
      CHECK(sha256_file(p.run_dir() / rel) == hash.get<std::string>());
    }
  }
  CHECK_FALSE(m["stages"].contains("themes"));
  CHECK_FALSE(fs::exists(p.run_dir() / "report"));
  const json summary = read_json(p.run_dir() / "transcripts" / "summary.json");
  CHECK(summary["failed"].size() == 3);
  CHECK(message_of([&] { p.run_stage(Stage::report); }).find("themes") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config validation") {
  const auto dir = fixture::scratch("config");
  json j = fixture::bundled_config();
  CHECK_NOTHROW(fixture::config(j, dir));

  auto rejects = [&](const std::function<void(json&)>& edit, const std::string& fragment) {
    json bad = fixture::bundled_config();
    edit(bad);
    const std::string msg = message_of([&] { fixture::config(bad, dir); });
    CHECK_MESSAGE(msg.find(fragment) != std::string::npos, msg);
    CHECK_THROWS_AS(fixture::config(bad, dir), ConfigError);
  };
  rejects([](json& c) { c["svd"]["threshold"] = 0.9; }, "svd.threshold");
  rejects([](json& c) { c["colour"] = 1; }, "colour");
  rejects([](json& c) { c["corpus"]["path"] = "missing.jsonl"; }, "missing.jsonl");
  rejects([](json& c) { c["svd"]["variance_threshold"] = 1.5; }, "variance_threshold");
  rejects([](json& c) { c["cluster"]["k_range"] = {1, 2}; }, "k_range");
  rejects([](json& c) { c["cluster"]["k_range"] = {1, 3, 2}; }, "k_range");
  rejects([](json& c) { c["sample"]["e"] = 0; }, "");
  rejects([](json& c) { c["agentic"]["quality_threshold"] = 2; }, "");
  rejects([](json& c) { c["agentic"].erase("grader"); }, "grader");
  rejects([](json& c) { c["agentic"]["prompts_dir"] = "nowhere"; }, "nowhere");
  rejects([](json& c) { c["training"]["ratios"] = {"1/0"}; }, "");
  rejects([](json& c) { c["training"]["epochs"] = "many"; }, "training.epochs");
  rejects([](json& c) { c["run_id"] = "../escape"; }, "run_id");
  rejects([](json& c) { c["agentic"]["grader"]["script_file"] = "scripts/none.json"; }, "none.json");

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);
  CHECK_THROWS_AS(parse_stage("cluster2"), ConfigError);
  CHECK(parse_stage("themes") == Stage::themes);
  fs::remove_all(dir);
}

TEST_CASE("synth is deterministic and plants topics round robin") {
  const Corpus a = synthesize_corpus(30, 3, 5);
  const Corpus b = synthesize_corpus(30, 3, 5);
  const Corpus c = synthesize_corpus(30, 3, 6);
  REQUIRE(a.size() == 30);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.posts[i].raw_text == b.posts[i].raw_text);
    CHECK(a.posts[i].topic == static_cast<int>(i % 3));
    differs = differs || a.posts[i].raw_text != c.posts[i].raw_text;
  }
  CHECK(differs);
  std::set<std::string> ids;
  for (const auto& p : a.posts) ids.insert(p.id);
  CHECK(ids.size() == 30);
  CHECK_THROWS_AS(synthesize_corpus(0, 3, 1), ConfigError);
  CHECK_THROWS_AS(synthesize_corpus(10, synth_topic_capacity() + 1, 1), ConfigError);

  const auto dir = fixture::scratch("synth");
  write_synthetic_jsonl(a, (dir / "a.jsonl").string());
  const Corpus back = load_corpus((dir / "a.jsonl").string(), CorpusFormat::jsonl);
  REQUIRE(back.size() == 30);
  CHECK(back.posts[4].topic == 1);
  CHECK(back.posts[4].raw_text == a.posts[4].raw_text);
  fs::remove_all(dir);
}

TEST_CASE("CLI exit codes") {
  const auto dir = fixture::scratch("cli");
  const fs::path good = dir / "good.json";
  json j = fixture::bundled_config();
  j["run_dir"] = (dir / "runs").string();
  j["corpus"]["path"] = (fixture::source_dir() / "data" / "synthetic_corpus.jsonl").string();
  j["agentic"]["prompts_dir"] = (fixture::source_dir() / "prompts").string();
  for (const char* role : {"generator", "grader"}) {
    j["agentic"][role]["script_file"] =
        (fixture::source_dir() / "configs" / "scripts" / (std::string(role) + ".json")).string();
  }
  write_json(good, j);
  json unreachable = j;
  unreachable["run_id"] = "unreachable";
  unreachable["agentic"]["grader"] = {{"kind", "http"},
                                      {"endpoint", "http://127.0.0.1:9/v1/chat/completions"},
                                      {"model_id", "m"},
                                      {"max_retries", 0}};
  write_json(dir / "unreachable.json", unreachable);
  json bad = j;
  bad["svd"]["variance_threshold"] = 0;
  write_json(dir / "bad.json", bad);

  CHECK(cli("synth --posts 12 --topics 3 --out " + (dir / "s.jsonl").string()) == 0);
  CHECK(fs::exists(dir / "s.jsonl"));
  CHECK(cli("synth --posts 12 --topics 40 --out " + (dir / "t.jsonl").string()) == 1);
  CHECK(cli("stage cluster --config " + good.string()) == 2);
  CHECK(cli("stage ingest --config " + good.string()) == 0);
  CHECK(cli("stage nonsense --config " + good.string()) == 1);
  CHECK(cli("run --config " + (dir / "bad.json").string()) == 1);
  CHECK(cli("run --config " + (dir / "missing.json").string()) == 1);
  CHECK(cli("run") == 1);
  CHECK(cli("run --config " + good.string()) == 0);
  CHECK(fs::exists(dir / "runs" / "synthetic" / "report" / "sankey.json"));
  CHECK(cli("run --config " + (dir / "unreachable.json").string()) == 3);
  CHECK(fs::exists(dir / "runs" / "unreachable" / "samples" / "index.json"));
  fs::remove_all(dir);
}
