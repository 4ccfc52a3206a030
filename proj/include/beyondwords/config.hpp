#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "beyondwords/agentic.hpp"
#include "beyondwords/autoencoder.hpp"
#include "beyondwords/corpus.hpp"
#include "beyondwords/embedding.hpp"

namespace beyondwords {

struct CorpusConfig {
  std::string path;
  CorpusFormat format = CorpusFormat::jsonl;
  std::vector<std::string> tags;  // empty: no tag filter
  bool tags_case_insensitive = true;
  std::optional<std::string> language;
};

struct SvdConfig {
  double variance_threshold = 0.90;
};

struct ClusterConfig {
  std::vector<int> k_range{1, 2, 3, 4, 5, 6, 7, 8};
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-10;
};

struct SampleConfig {
  double z = 1.64;
  double p = 0.5;
  double e = 0.1;
};

struct AgenticConfig {
  double quality_threshold = 0.8;
  int max_iterations = 3;
  int max_in_flight = 4;
  double requests_per_second = 0;  // 0: unlimited
  ChatClientSpec generator;
  ChatClientSpec grader;
  std::optional<ChatClientSpec> extractor;
  std::optional<std::string> prompts_dir;  // built-in prompts when unset
};

struct PipelineConfig {
  std::string run_id = "run";
  std::string run_dir = "runs";
  CorpusConfig corpus;
  EmbeddingProviderSpec provider;
  TrainingConfig training;
  SvdConfig svd;
  ClusterConfig cluster;
  SampleConfig sample;
  AgenticConfig agentic;

  /// Numeric ranges and that every referenced file exists.
  void validate() const;
};

/// JSON with the field names above. Unknown keys are rejected; relative
/// paths resolve against `base_dir`. Throws ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& file);
/// Snapshot with every path absolute and scripts inlined.
nlohmann::json to_json(const PipelineConfig& c);

nlohmann::json to_json(const TrainingConfig& t);

}  // namespace beyondwords
