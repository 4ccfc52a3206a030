#pragma once

#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "beyondwords/chat_client.hpp"
#include "beyondwords/errors.hpp"
#include "beyondwords/sampling.hpp"

namespace beyondwords {

struct KeywordGroup {
  std::string name;
  std::vector<std::string> members;
};

struct Theme {
  std::string title;
  std::string description;
  std::vector<std::string> groups;
};

struct ThemeSet {
  int cluster_id = 0;
  std::vector<std::string> keywords;
  std::vector<KeywordGroup> groups;
  std::vector<Theme> themes;
  int iteration = 1;

  /// Groups only name known keywords, themes only name known groups, titles
  /// are non-empty. Throws ParseError naming the offending item.
  void validate() const;
};

struct Evaluation {
  double score = 0;  // [0, 1]
  std::string feedback;
  std::string raw;
};

enum class TerminalReason { threshold_met, max_iterations };

std::string to_string(TerminalReason r);

struct RefinementRound {
  ThemeSet themes;
  Evaluation evaluation;
};

struct RefinementTranscript {
  int cluster_id = 0;
  std::vector<RefinementRound> rounds;
  TerminalReason terminal_reason = TerminalReason::max_iterations;
  ThemeSet final;
};

/// Prompt texts with {{placeholders}}. Each extraction step must produce a
/// ===BEGIN=== / ===END=== block; the templates carry those instructions.
///   keywords: {{texts}} {{prior}}
///   grouping: {{keywords}} {{prior}}
///   themes:   {{groups}} {{prior}}
///   grader:   {{themes}} {{texts}} {{prior}}
///   extractor (optional third model): {{reply}}
struct PromptTemplates {
  std::string system;
  std::string keywords;
  std::string grouping;
  std::string themes;
  std::string grader;
  std::string extractor;

  static PromptTemplates defaults();
  /// Loads `<dir>/{system,keywords,grouping,themes,grader,extractor}.txt`;
  /// missing files keep the default text.
  static PromptTemplates load(const std::string& dir);
  void validate() const;
};

/// Replaces every {{name}} in `tmpl`. Unknown placeholders are left as is.
std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values);

/// Feedback carried from round i-1 into round i.
struct PriorRound {
  double score = 0;
  std::string feedback;
  ThemeSet themes;
};

/// Line-oriented fields of the first ===BEGIN=== / ===END=== block. A field
/// starts at a line "name:" and owns the rest of that line plus following
/// lines up to the next field. Returns nullopt when no complete block exists.
std::optional<std::map<std::string, std::vector<std::string>>> parse_block(const std::string& text);

std::vector<std::string> parse_keywords_block(const std::string& reply);
std::vector<KeywordGroup> parse_groups_block(const std::string& reply);
std::vector<Theme> parse_themes_block(const std::string& reply);

/// Runs the keyword, grouping and theme-synthesis prompts in order. A reply
/// without a usable block is re-asked once; referential errors are not.
ThemeSet extract_themes(const RepresentativeSample& sample, ChatClient& llm,
                        const PromptTemplates& prompts, const std::optional<PriorRound>& prior = {});

/// One grading request; returns the grader's text verbatim.
std::string evaluate_themes(const ThemeSet& t, const RepresentativeSample& sample, ChatClient& grader,
                            const PromptTemplates& prompts, const std::optional<PriorRound>& prior = {});

/// Structured block first ("score: 0-10", "feedback: ..."); otherwise the
/// first number in [0, 10], optionally written "x/10", with the text after
/// it as feedback. Throws ParseError when neither yields a score.
Evaluation parse_score_feedback(const std::string& raw);

struct RefineSettings {
  double quality_threshold = 0.8;
  int max_iterations = 3;

  void validate() const;
};

/// Raised when a round fails; carries the rounds completed before it.
class RefinementError : public Error {
 public:
  RefinementError(const std::string& what, RefinementTranscript partial, bool service_failure)
      : Error(what), partial_(std::move(partial)), service_failure_(service_failure) {}
  const RefinementTranscript& partial() const { return partial_; }
  bool service_failure() const { return service_failure_; }

 private:
  RefinementTranscript partial_;
  bool service_failure_;
};

/// Extract, grade, and feed the grade back until the score reaches the
/// threshold or max_iterations rounds have run. With `extractor`, grader
/// replies are normalized by that model before parsing.
RefinementTranscript refine_loop(const RepresentativeSample& sample, ChatClient& llm1, ChatClient& llm2,
                                 const RefineSettings& settings, const PromptTemplates& prompts,
                                 ChatClient* extractor = nullptr);

struct ClusterFailure {
  int cluster_id = 0;
  std::string message;
  bool service_failure = false;
  std::optional<RefinementTranscript> partial;
};

struct AgenticRun {
  std::vector<RefinementTranscript> transcripts;  // succeeded clusters, by cluster order
  std::vector<ClusterFailure> failures;

  nlohmann::json summary() const;
};

/// Builds the per-cluster clients; called once per cluster and role.
using ChatClientFactory = std::function<std::unique_ptr<ChatClient>(const ChatClientSpec&)>;

struct AgenticClients {
  ChatClientSpec generator;
  ChatClientSpec grader;
  std::optional<ChatClientSpec> extractor;
};

/// One refinement loop per sample, at most `max_in_flight` at a time. Every
/// cluster gets fresh clients; a failing cluster does not stop the others.
AgenticRun run_all_clusters(const std::vector<RepresentativeSample>& samples, const AgenticClients& clients,
                            const RefineSettings& settings, const PromptTemplates& prompts,
                            const ChatClientFactory& factory, int max_in_flight = 4);

nlohmann::json to_json(const ThemeSet& t);
ThemeSet theme_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RefinementTranscript& t);
RefinementTranscript transcript_from_json(const nlohmann::json& j);

}  // namespace beyondwords
