#include "beyondwords/agentic.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <future>
#include <regex>
#include <set>
#include <sstream>
#include <variant>

#include "beyondwords/matrix_io.hpp"

namespace beyondwords {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// A reply whose block is missing or malformed; the only parse failure that
// earns a re-ask.
class BlockError : public ParseError {
 public:
  using ParseError::ParseError;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string format_score10(double score) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", score * 10.0);
  return buf;
}

const std::set<std::string>& field_names() {
  static const std::set<std::string> names{"keywords", "groups", "themes", "score", "feedback"};
  return names;
}

const std::vector<std::string>& required_field(const std::map<std::string, std::vector<std::string>>& block,
                                               const std::string& name) {
  const auto it = block.find(name);
  if (it == block.end() || it->second.empty()) throw BlockError("block has no \"" + name + ":\" items");
  return it->second;
}

std::map<std::string, std::vector<std::string>> require_block(const std::string& reply) {
  auto block = parse_block(reply);
  if (!block) throw BlockError("no ===BEGIN=== / ===END=== block");
  return *block;
}

// Maps a case-insensitive reference onto the canonical spelling in `known`.
std::optional<std::string> resolve(const std::string& ref, const std::vector<std::string>& known) {
  const std::string key = lower(ref);
  for (const auto& k : known) {
    if (lower(k) == key) return k;
  }
  return std::nullopt;
}

std::string numbered_texts(const RepresentativeSample& sample) {
  std::string out;
  for (std::size_t i = 0; i < sample.members.size(); ++i) {
    out += std::to_string(i + 1) + ". " + sample.members[i].clean_text + "\n";
  }
  return out;
}

std::string format_keywords(const std::vector<std::string>& keywords) {
  std::string out;
  for (const auto& k : keywords) out += "- " + k + "\n";
  return out;
}

std::string format_groups(const std::vector<KeywordGroup>& groups) {
  std::string out;
  for (const auto& g : groups) {
    out += "- " + g.name + ":";
    for (std::size_t i = 0; i < g.members.size(); ++i) out += (i ? ", " : " ") + g.members[i];
    out += "\n";
  }
  return out;
}

std::string format_themes(const std::vector<Theme>& themes) {
  std::string out;
  for (const auto& t : themes) {
    out += "- " + t.title + ": " + t.description + " (groups:";
    for (std::size_t i = 0; i < t.groups.size(); ++i) out += (i ? ", " : " ") + t.groups[i];
    out += ")\n";
  }
  return out;
}

std::string prior_for_writer(const std::optional<PriorRound>& prior) {
  if (!prior) return "";
  return "Your previous attempt was scored " + format_score10(prior->score) +
         "/10 by the grader.\nGrader feedback: " + prior->feedback +
         "\nRevise your answer so that it addresses this feedback.\nPrevious themes:\n" +
         format_themes(prior->themes.themes);
}

std::string prior_for_grader(const std::optional<PriorRound>& prior) {
  if (!prior) return "";
  return "You scored the previous version " + format_score10(prior->score) +
         "/10 with this feedback: " + prior->feedback +
         "\nCheck whether the revision addresses it.\n";
}

// Sends the prompt, parses with `parse`, and re-asks once on a BlockError.
template <typename Parse>
auto ask(ChatClient& llm, const PromptTemplates& prompts, const std::string& user, Parse parse) {
  std::vector<ChatMessage> messages{{"system", prompts.system}, {"user", user}};
  const std::string first = llm.complete(messages);
  try {
    return parse(first);
  } catch (const BlockError& e) {
    messages.push_back({"assistant", first});
    messages.push_back({"user", std::string("Your reply could not be used (") + e.what() +
                                    "). Reply again and end with the ===BEGIN=== / ===END=== block "
                                    "exactly as requested."});
    const std::string second = llm.complete(messages);
    try {
      return parse(second);
    } catch (const BlockError& again) {
      throw ParseError(std::string("unparseable reply after one re-ask: ") + again.what());
    }
  }
}

const char* kDefaultSystem =
    "You are a qualitative researcher doing thematic analysis of social-media posts. "
    "Reason step by step, then finish with the requested block exactly as specified.";

const char* kDefaultKeywords = R"(Below are posts drawn from one cluster of a larger corpus.
{{prior}}
Step 1 of 3. Think step by step about what these posts discuss, then list the significant keywords and short phrases that recur across them. Prefer wording that appears in the posts.

Posts:
{{texts}}
End your reply with this block, one keyword per line (an optional note may follow a "|"):
===BEGIN===
keywords:
<keyword> | <optional note>
===END===
)";

const char* kDefaultGrouping = R"(Step 2 of 3. Sort the keywords below into coherent groups of related meaning. Copy every keyword exactly as listed and give each group a short name.
{{prior}}
Keywords:
{{keywords}}
End your reply with this block, one group per line:
===BEGIN===
groups:
<group name> | <keyword>, <keyword>, ...
===END===
)";

const char* kDefaultThemes = R"(Step 3 of 3. Synthesize high-level themes from the keyword groups below. Each theme needs a title, a one-sentence description, and the names of the groups it draws on, copied exactly.
{{prior}}
Groups:
{{groups}}
End your reply with this block, one theme per line:
===BEGIN===
themes:
<title> | <description> | <group name>, <group name>, ...
===END===
)";

const char* kDefaultGrader = R"(Grade the themes below, which were extracted from the listed posts. Judge whether they are coherent, distinct from one another, and supported by the posts.
{{prior}}
Themes:
{{themes}}
Posts:
{{texts}}
Give a score from 0 to 10 and one sentence of feedback the theme writer can act on. End your reply with this block:
===BEGIN===
score: <0-10>
feedback: <one sentence>
===END===
)";

const char* kDefaultExtractor = R"(The text below is a grader's assessment of a set of themes. Extract its score on a 0 to 10 scale and its feedback. Reply with only this block:
===BEGIN===
score: <0-10>
feedback: <feedback text>
===END===

Assessment:
{{reply}}
)";

}  // namespace

std::string to_string(TerminalReason r) {
  return r == TerminalReason::threshold_met ? "threshold_met" : "max_iterations";
}

void ThemeSet::validate() const {
  std::set<std::string> kw(keywords.begin(), keywords.end());
  std::set<std::string> names;
  for (const auto& g : groups) {
    if (trim(g.name).empty()) throw ParseError("group with empty name");
    for (const auto& m : g.members) {
      if (!kw.count(m)) throw ParseError("group \"" + g.name + "\" references unknown keyword \"" + m + "\"");
    }
    names.insert(g.name);
  }
  for (const auto& t : themes) {
    if (trim(t.title).empty()) throw ParseError("theme with empty title");
    if (t.groups.empty()) throw ParseError("theme \"" + t.title + "\" references no group");
    for (const auto& g : t.groups) {
      if (!names.count(g)) throw ParseError("theme \"" + t.title + "\" references unknown group \"" + g + "\"");
    }
  }
}

PromptTemplates PromptTemplates::defaults() {
  return {kDefaultSystem, kDefaultKeywords, kDefaultGrouping, kDefaultThemes, kDefaultGrader, kDefaultExtractor};
}

PromptTemplates PromptTemplates::load(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("prompt directory not found: " + dir);
  PromptTemplates t = defaults();
  auto maybe = [&](const char* name, std::string& slot) {
    const fs::path file = fs::path(dir) / (std::string(name) + ".txt");
    if (fs::exists(file)) slot = read_text(file);
  };
  maybe("system", t.system);
  maybe("keywords", t.keywords);
  maybe("grouping", t.grouping);
  maybe("themes", t.themes);
  maybe("grader", t.grader);
  maybe("extractor", t.extractor);
  t.validate();
  return t;
}

void PromptTemplates::validate() const {
  auto need = [](const std::string& text, const char* name, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (text.find(std::string("{{") + k + "}}") == std::string::npos) {
        throw ConfigError(std::string("prompt template \"") + name + "\" lacks {{" + k + "}}");
      }
    }
  };
  need(keywords, "keywords", {"texts", "prior"});
  need(grouping, "grouping", {"keywords", "prior"});
  need(themes, "themes", {"groups", "prior"});
  need(grader, "grader", {"themes", "texts", "prior"});
  need(extractor, "extractor", {"reply"});
}

std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    const auto it = values.find(tmpl.substr(open + 2, close - open - 2));
    out += tmpl.substr(pos, open - pos);
    out += it != values.end() ? it->second : tmpl.substr(open, close + 2 - open);
    pos = close + 2;
  }
  return out + tmpl.substr(pos);
}

std::optional<std::map<std::string, std::vector<std::string>>> parse_block(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool inside = false;
  std::map<std::string, std::vector<std::string>> fields;
  std::string current;
  static const std::regex header(R"(^\s*([A-Za-z_]+)\s*:(.*)$)");
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!inside) {
      if (t == "===BEGIN===") inside = true;
      continue;
    }
    if (t == "===END===") return fields;
    std::smatch m;
    if (std::regex_match(line, m, header) && field_names().count(lower(m[1].str()))) {
      current = lower(m[1].str());
      fields[current];
      const std::string rest = trim(m[2].str());
      if (!rest.empty()) fields[current].push_back(rest);
      continue;
    }
    if (t.empty() || current.empty()) continue;
    std::string item = t;
    if (item.rfind("- ", 0) == 0 || item.rfind("* ", 0) == 0) item = trim(item.substr(2));
    if (!item.empty()) fields[current].push_back(item);
  }
  return std::nullopt;
}

std::vector<std::string> parse_keywords_block(const std::string& reply) {
  const auto block = require_block(reply);
  std::vector<std::string> out;
  for (const auto& item : required_field(block, "keywords")) {
    const std::string kw = strip_quotes(trim(item.substr(0, item.find('|'))));
    if (kw.empty() || resolve(kw, out)) continue;
    out.push_back(kw);
  }
  if (out.empty()) throw BlockError("keywords list is empty");
  return out;
}

std::vector<KeywordGroup> parse_groups_block(const std::string& reply) {
  const auto block = require_block(reply);
  std::vector<KeywordGroup> out;
  for (const auto& item : required_field(block, "groups")) {
    const auto bar = item.find('|');
    if (bar == std::string::npos) throw BlockError("group line without \"|\": " + item);
    KeywordGroup g;
    g.name = strip_quotes(trim(item.substr(0, bar)));
    for (auto& m : split(item.substr(bar + 1), ',')) {
      if (!m.empty()) g.members.push_back(strip_quotes(m));
    }
    if (g.name.empty() || g.members.empty()) throw BlockError("incomplete group line: " + item);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Theme> parse_themes_block(const std::string& reply) {
  const auto block = require_block(reply);
  std::vector<Theme> out;
  for (const auto& item : required_field(block, "themes")) {
    const auto parts = split(item, '|');
    if (parts.size() != 3) throw BlockError("theme line needs title | description | groups: " + item);
    Theme t;
    t.title = strip_quotes(parts[0]);
    t.description = strip_quotes(parts[1]);
    for (auto& g : split(parts[2], ',')) {
      if (!g.empty()) t.groups.push_back(strip_quotes(g));
    }
    if (t.title.empty()) throw BlockError("theme line with empty title: " + item);
    out.push_back(std::move(t));
  }
  return out;
}

ThemeSet extract_themes(const RepresentativeSample& sample, ChatClient& llm, const PromptTemplates& prompts,
                        const std::optional<PriorRound>& prior) {
  if (sample.members.empty()) throw ConfigError("extract_themes: sample is empty");
  ThemeSet t;
  t.cluster_id = sample.cluster_id;
  t.iteration = prior ? prior->themes.iteration + 1 : 1;
  const std::string prior_text = prior_for_writer(prior);

  t.keywords = ask(llm, prompts,
                   render(prompts.keywords, {{"texts", numbered_texts(sample)}, {"prior", prior_text}}),
                   parse_keywords_block);

  t.groups = ask(llm, prompts,
                 render(prompts.grouping, {{"keywords", format_keywords(t.keywords)}, {"prior", prior_text}}),
                 parse_groups_block);
  for (auto& g : t.groups) {
    for (auto& m : g.members) {
      const auto canonical = resolve(m, t.keywords);
      if (!canonical) throw ParseError("group \"" + g.name + "\" references unknown keyword \"" + m + "\"");
      m = *canonical;
    }
  }

  t.themes = ask(llm, prompts,
                 render(prompts.themes, {{"groups", format_groups(t.groups)}, {"prior", prior_text}}),
                 parse_themes_block);
  std::vector<std::string> group_names;
  for (const auto& g : t.groups) group_names.push_back(g.name);
  for (auto& theme : t.themes) {
    for (auto& g : theme.groups) {
      const auto canonical = resolve(g, group_names);
      if (!canonical) {
        throw ParseError("theme \"" + theme.title + "\" references unknown group \"" + g + "\"");
      }
      g = *canonical;
    }
  }
  t.validate();
  return t;
}

std::string evaluate_themes(const ThemeSet& t, const RepresentativeSample& sample, ChatClient& grader,
                            const PromptTemplates& prompts, const std::optional<PriorRound>& prior) {
  if (t.themes.empty()) throw ConfigError("evaluate_themes: no themes to grade");
  t.validate();
  const std::string user = render(prompts.grader, {{"themes", format_themes(t.themes)},
                                                   {"texts", numbered_texts(sample)},
                                                   {"prior", prior_for_grader(prior)}});
  return grader.complete({{"system", prompts.system}, {"user", user}});
}

Evaluation parse_score_feedback(const std::string& raw) {
  if (trim(raw).empty()) throw ParseError("grader reply is empty");
  static const std::regex number(R"((\d+(?:\.\d+)?)(\s*/\s*10(?![0-9]))?)");
  Evaluation ev;
  ev.raw = raw;

  if (const auto block = parse_block(raw); block && block->count("score") && !block->at("score").empty()) {
    std::smatch m;
    const std::string s = block->at("score").front();
    if (std::regex_search(s, m, number)) {
      const double v = std::stod(m[1].str());
      if (v >= 0 && v <= 10) {
        ev.score = v / 10.0;
        std::string feedback;
        if (const auto it = block->find("feedback"); it != block->end()) {
          for (const auto& line : it->second) feedback += (feedback.empty() ? "" : " ") + line;
        }
        ev.feedback = strip_quotes(trim(feedback));
        if (ev.feedback.empty()) ev.feedback = "(no feedback given)";
        return ev;
      }
    }
  }

  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), number); it != std::sregex_iterator(); ++it) {
    const double v = std::stod((*it)[1].str());
    if (v < 0 || v > 10) continue;
    ev.score = v / 10.0;
    ev.feedback = trim(raw.substr(static_cast<std::size_t>(it->position() + it->length())));
    if (ev.feedback.empty()) ev.feedback = trim(raw);
    return ev;
  }
  throw ParseError("no score found in grader reply");
}

void RefineSettings::validate() const {
  if (!(quality_threshold >= 0 && quality_threshold <= 1)) {
    throw ConfigError("quality threshold must be in [0, 1]");
  }
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
}

RefinementTranscript refine_loop(const RepresentativeSample& sample, ChatClient& llm1, ChatClient& llm2,
                                 const RefineSettings& settings, const PromptTemplates& prompts,
                                 ChatClient* extractor) {
  settings.validate();
  if (sample.members.empty()) throw ConfigError("refine_loop: sample is empty");
  RefinementTranscript tr;
  tr.cluster_id = sample.cluster_id;
  std::optional<PriorRound> prior;
  for (int round = 1; round <= settings.max_iterations; ++round) {
    const std::string where = "cluster " + std::to_string(sample.cluster_id) + " round " + std::to_string(round) + ": ";
    try {
      ThemeSet themes = extract_themes(sample, llm1, prompts, prior);
      themes.iteration = round;
      const std::string raw = evaluate_themes(themes, sample, llm2, prompts, prior);
      Evaluation ev;
      if (extractor) {
        const std::string normalized =
            extractor->complete({{"system", prompts.system}, {"user", render(prompts.extractor, {{"reply", raw}})}});
        ev = parse_score_feedback(normalized);
        ev.raw = raw;
      } else {
        ev = parse_score_feedback(raw);
      }
      tr.rounds.push_back({themes, ev});
      if (ev.score >= settings.quality_threshold) {
        tr.terminal_reason = TerminalReason::threshold_met;
        tr.final = themes;
        return tr;
      }
      prior = PriorRound{ev.score, ev.feedback, themes};
    } catch (const ServiceError& e) {
      throw RefinementError(where + e.what(), tr, true);
    } catch (const Error& e) {
      throw RefinementError(where + e.what(), tr, false);
    }
  }
  tr.terminal_reason = TerminalReason::max_iterations;
  tr.final = tr.rounds.back().themes;
  return tr;
}

json AgenticRun::summary() const {
  json ok = json::array();
  for (const auto& t : transcripts) {
    ok.push_back({{"cluster_id", t.cluster_id},
                  {"rounds", t.rounds.size()},
                  {"terminal_reason", to_string(t.terminal_reason)},
                  {"final_score", t.rounds.back().evaluation.score}});
  }
  json failed = json::array();
  for (const auto& f : failures) {
    failed.push_back({{"cluster_id", f.cluster_id},
                      {"message", f.message},
                      {"service_failure", f.service_failure},
                      {"completed_rounds", f.partial ? f.partial->rounds.size() : 0}});
  }
  return {{"succeeded", ok}, {"failed", failed}};
}

AgenticRun run_all_clusters(const std::vector<RepresentativeSample>& samples, const AgenticClients& clients,
                            const RefineSettings& settings, const PromptTemplates& prompts,
                            const ChatClientFactory& factory, int max_in_flight) {
  if (samples.empty()) throw ConfigError("run_all_clusters: no samples");
  if (max_in_flight < 1) throw ConfigError("run_all_clusters: max_in_flight must be positive");
  settings.validate();
  prompts.validate();

  using Outcome = std::variant<RefinementTranscript, ClusterFailure>;
  auto one = [&](const RepresentativeSample& s) -> Outcome {
    try {
      auto gen = factory(clients.generator);
      auto grader = factory(clients.grader);
      std::unique_ptr<ChatClient> extractor = clients.extractor ? factory(*clients.extractor) : nullptr;
      return refine_loop(s, *gen, *grader, settings, prompts, extractor.get());
    } catch (const RefinementError& e) {
      return ClusterFailure{s.cluster_id, e.what(), e.service_failure(), e.partial()};
    } catch (const ServiceError& e) {
      return ClusterFailure{s.cluster_id, e.what(), true, std::nullopt};
    } catch (const std::exception& e) {
      return ClusterFailure{s.cluster_id, e.what(), false, std::nullopt};
    }
  };

  std::vector<Outcome> outcomes;
  outcomes.reserve(samples.size());
  const auto wave = static_cast<std::size_t>(max_in_flight);
  for (std::size_t start = 0; start < samples.size(); start += wave) {
    std::vector<std::future<Outcome>> running;
    for (std::size_t i = start; i < std::min(samples.size(), start + wave); ++i) {
      running.push_back(std::async(std::launch::async, one, std::cref(samples[i])));
    }
    for (auto& f : running) outcomes.push_back(f.get());
  }

  AgenticRun run;
  for (auto& o : outcomes) {
    if (auto* t = std::get_if<RefinementTranscript>(&o)) {
      run.transcripts.push_back(std::move(*t));
    } else {
      run.failures.push_back(std::get<ClusterFailure>(std::move(o)));
    }
  }
  return run;
}

json to_json(const ThemeSet& t) {
  json groups = json::array();
  for (const auto& g : t.groups) groups.push_back({{"name", g.name}, {"members", g.members}});
  json themes = json::array();
  for (const auto& th : t.themes) {
    themes.push_back({{"title", th.title}, {"description", th.description}, {"groups", th.groups}});
  }
  return {{"cluster_id", t.cluster_id},
          {"iteration", t.iteration},
          {"keywords", t.keywords},
          {"groups", groups},
          {"themes", themes}};
}

ThemeSet theme_set_from_json(const json& j) {
  ThemeSet t;
  t.cluster_id = j.at("cluster_id").get<int>();
  t.iteration = j.at("iteration").get<int>();
  t.keywords = j.at("keywords").get<std::vector<std::string>>();
  for (const auto& g : j.at("groups")) {
    t.groups.push_back({g.at("name").get<std::string>(), g.at("members").get<std::vector<std::string>>()});
  }
  for (const auto& th : j.at("themes")) {
    t.themes.push_back({th.at("title").get<std::string>(), th.at("description").get<std::string>(),
                        th.at("groups").get<std::vector<std::string>>()});
  }
  t.validate();
  return t;
}

json to_json(const RefinementTranscript& t) {
  json rounds = json::array();
  for (const auto& r : t.rounds) {
    rounds.push_back({{"themes", to_json(r.themes)},
                      {"evaluation",
                       {{"score", r.evaluation.score}, {"feedback", r.evaluation.feedback}, {"raw", r.evaluation.raw}}}});
  }
  return {{"cluster_id", t.cluster_id},
          {"terminal_reason", to_string(t.terminal_reason)},
          {"rounds", rounds},
          {"final", to_json(t.final)}};
}

RefinementTranscript transcript_from_json(const json& j) {
  RefinementTranscript t;
  t.cluster_id = j.at("cluster_id").get<int>();
  const std::string reason = j.at("terminal_reason").get<std::string>();
  if (reason == "threshold_met") {
    t.terminal_reason = TerminalReason::threshold_met;
  } else if (reason == "max_iterations") {
    t.terminal_reason = TerminalReason::max_iterations;
  } else {
    throw ParseError("unknown terminal_reason \"" + reason + "\"");
  }
  for (const auto& r : j.at("rounds")) {
    const auto& e = r.at("evaluation");
    t.rounds.push_back({theme_set_from_json(r.at("themes")),
                        {e.at("score").get<double>(), e.at("feedback").get<std::string>(),
                         e.at("raw").get<std::string>()}});
  }
  if (t.rounds.empty()) throw ParseError("transcript has no rounds");
  t.final = theme_set_from_json(j.at("final"));
  return t;
}

}  // namespace beyondwords
