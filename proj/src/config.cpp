#include "beyondwords/config.hpp"

#include <fstream>
#include <set>

#include "beyondwords/errors.hpp"
#include "beyondwords/sampling.hpp"

namespace beyondwords {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void only_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: \"" + section + "\" must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError("config: unknown key \"" + section + "." + key + "\"");
  }
}

std::string resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal().string();
}

template <typename T>
T get(const json& j, const char* key, const std::string& section, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: \"" + section + "." + key + "\" has the wrong type");
  }
}

ChatClientSpec chat_from(const json& j, const std::string& section, const fs::path& base) {
  only_keys(j, section,
            {"kind", "endpoint", "model_id", "temperature", "max_retries", "initial_backoff_ms",
             "timeout_seconds", "api_key_env", "script", "script_file"});
  try {
    return chat_spec_from_json(j, base.string());
  } catch (const json::exception& e) {
    throw ConfigError("config: " + section + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError("config: " + section + ": " + e.what());
  }
}

}  // namespace

json to_json(const TrainingConfig& t) {
  std::vector<std::string> ratios;
  for (const auto& r : t.ratios) ratios.push_back(r.str());
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"val_fraction", t.val_fraction},
          {"seed", t.seed},
          {"ratios", ratios},
          {"standardize", t.standardize}};
}

void PipelineConfig::validate() const {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..") {
    throw ConfigError("config: run_id must be a plain directory name");
  }
  if (corpus.path.empty()) throw ConfigError("config: corpus.path is required");
  if (!fs::exists(corpus.path)) throw ConfigError("config: corpus file not found: " + corpus.path);
  provider.validate();
  if (training.epochs < 0 || training.batch_size < 1 || !(training.learning_rate > 0) ||
      !(training.val_fraction > 0 && training.val_fraction < 1) || training.ratios.empty()) {
    throw ConfigError("config: training values out of range");
  }
  if (!(svd.variance_threshold > 0 && svd.variance_threshold <= 1)) {
    throw ConfigError("config: svd.variance_threshold must be in (0, 1]");
  }
  if (cluster.k_range.size() < 3) throw ConfigError("config: cluster.k_range needs at least three values");
  for (std::size_t i = 0; i < cluster.k_range.size(); ++i) {
    if (cluster.k_range[i] < 1 || (i && cluster.k_range[i] <= cluster.k_range[i - 1])) {
      throw ConfigError("config: cluster.k_range must be positive and ascending");
    }
  }
  if (cluster.max_iter < 1 || !(cluster.tol >= 0)) throw ConfigError("config: cluster.max_iter/tol out of range");
  cochran_n(sample.z, sample.p, sample.e);
  RefineSettings{agentic.quality_threshold, agentic.max_iterations}.validate();
  if (agentic.max_in_flight < 1) throw ConfigError("config: agentic.max_in_flight must be positive");
  if (agentic.requests_per_second < 0) throw ConfigError("config: agentic.requests_per_second must be >= 0");
  agentic.generator.validate();
  agentic.grader.validate();
  if (agentic.extractor) agentic.extractor->validate();
  if (agentic.prompts_dir && !fs::is_directory(*agentic.prompts_dir)) {
    throw ConfigError("config: prompts directory not found: " + *agentic.prompts_dir);
  }
}

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  only_keys(j, "", {"run_id", "run_dir", "corpus", "provider", "training", "svd", "cluster", "sample", "agentic"});
  PipelineConfig c;
  c.run_id = get<std::string>(j, "run_id", "", c.run_id);
  c.run_dir = resolve(base_dir, get<std::string>(j, "run_dir", "", c.run_dir));

  if (!j.contains("corpus")) throw ConfigError("config: \"corpus\" section is required");
  const json& cj = j["corpus"];
  only_keys(cj, "corpus", {"path", "format", "tags", "tags_case_insensitive", "language"});
  c.corpus.path = resolve(base_dir, get<std::string>(cj, "path", "corpus", ""));
  try {
    c.corpus.format = parse_corpus_format(get<std::string>(cj, "format", "corpus", "jsonl"));
  } catch (const Error& e) {
    throw ConfigError(std::string("config: corpus.format: ") + e.what());
  }
  c.corpus.tags = get<std::vector<std::string>>(cj, "tags", "corpus", {});
  c.corpus.tags_case_insensitive = get<bool>(cj, "tags_case_insensitive", "corpus", true);
  if (cj.contains("language")) c.corpus.language = get<std::string>(cj, "language", "corpus", "");

  if (!j.contains("provider")) throw ConfigError("config: \"provider\" section is required");
  only_keys(j["provider"], "provider",
            {"preset", "name", "dimension", "kind", "endpoint", "model_id", "batch_size", "seed", "separation",
             "noise", "api_key_env", "max_in_flight", "max_retries", "initial_backoff_ms"});
  try {
    c.provider = provider_from_json(j["provider"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: provider: ") + e.what());
  }

  if (j.contains("training")) {
    const json& t = j["training"];
    only_keys(t, "training",
              {"epochs", "batch_size", "learning_rate", "val_fraction", "seed", "ratios", "standardize"});
    c.training.epochs = get<int>(t, "epochs", "training", c.training.epochs);
    c.training.batch_size = get<int>(t, "batch_size", "training", c.training.batch_size);
    c.training.learning_rate = get<double>(t, "learning_rate", "training", c.training.learning_rate);
    c.training.val_fraction = get<double>(t, "val_fraction", "training", c.training.val_fraction);
    c.training.seed = get<std::uint64_t>(t, "seed", "training", c.training.seed);
    c.training.standardize = get<bool>(t, "standardize", "training", c.training.standardize);
    if (t.contains("ratios")) {
      c.training.ratios.clear();
      for (const auto& r : get<std::vector<std::string>>(t, "ratios", "training", {})) {
        c.training.ratios.push_back(parse_ratio(r));
      }
    }
  }

  if (j.contains("svd")) {
    only_keys(j["svd"], "svd", {"variance_threshold"});
    c.svd.variance_threshold = get<double>(j["svd"], "variance_threshold", "svd", c.svd.variance_threshold);
  }
  if (j.contains("cluster")) {
    const json& k = j["cluster"];
    only_keys(k, "cluster", {"k_range", "seed", "max_iter", "tol"});
    c.cluster.k_range = get<std::vector<int>>(k, "k_range", "cluster", c.cluster.k_range);
    c.cluster.seed = get<std::uint64_t>(k, "seed", "cluster", c.cluster.seed);
    c.cluster.max_iter = get<int>(k, "max_iter", "cluster", c.cluster.max_iter);
    c.cluster.tol = get<double>(k, "tol", "cluster", c.cluster.tol);
  }
  if (j.contains("sample")) {
    const json& s = j["sample"];
    only_keys(s, "sample", {"z", "p", "e"});
    c.sample.z = get<double>(s, "z", "sample", c.sample.z);
    c.sample.p = get<double>(s, "p", "sample", c.sample.p);
    c.sample.e = get<double>(s, "e", "sample", c.sample.e);
  }

  if (!j.contains("agentic")) throw ConfigError("config: \"agentic\" section is required");
  const json& a = j["agentic"];
  only_keys(a, "agentic",
            {"quality_threshold", "max_iterations", "max_in_flight", "requests_per_second", "generator", "grader",
             "extractor", "prompts_dir"});
  c.agentic.quality_threshold = get<double>(a, "quality_threshold", "agentic", c.agentic.quality_threshold);
  c.agentic.max_iterations = get<int>(a, "max_iterations", "agentic", c.agentic.max_iterations);
  c.agentic.max_in_flight = get<int>(a, "max_in_flight", "agentic", c.agentic.max_in_flight);
  c.agentic.requests_per_second = get<double>(a, "requests_per_second", "agentic", c.agentic.requests_per_second);
  if (!a.contains("generator") || !a.contains("grader")) {
    throw ConfigError("config: agentic.generator and agentic.grader are required");
  }
  c.agentic.generator = chat_from(a["generator"], "agentic.generator", base_dir);
  c.agentic.grader = chat_from(a["grader"], "agentic.grader", base_dir);
  if (a.contains("extractor")) c.agentic.extractor = chat_from(a["extractor"], "agentic.extractor", base_dir);
  if (a.contains("prompts_dir")) {
    c.agentic.prompts_dir = resolve(base_dir, get<std::string>(a, "prompts_dir", "agentic", ""));
  }

  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config file not found: " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + file.string() + ": " + e.what());
  }
  return config_from_json(j, fs::absolute(file).parent_path());
}

json to_json(const PipelineConfig& c) {
  json corpus{{"path", c.corpus.path},
              {"format", c.corpus.format == CorpusFormat::jsonl ? "jsonl" : "csv"},
              {"tags", c.corpus.tags},
              {"tags_case_insensitive", c.corpus.tags_case_insensitive}};
  if (c.corpus.language) corpus["language"] = *c.corpus.language;
  json agentic{{"quality_threshold", c.agentic.quality_threshold},
               {"max_iterations", c.agentic.max_iterations},
               {"max_in_flight", c.agentic.max_in_flight},
               {"requests_per_second", c.agentic.requests_per_second},
               {"generator", to_json(c.agentic.generator)},
               {"grader", to_json(c.agentic.grader)}};
  if (c.agentic.extractor) agentic["extractor"] = to_json(*c.agentic.extractor);
  if (c.agentic.prompts_dir) agentic["prompts_dir"] = *c.agentic.prompts_dir;
  return {{"run_id", c.run_id},
          {"run_dir", c.run_dir},
          {"corpus", corpus},
          {"provider", to_json(c.provider)},
          {"training", to_json(c.training)},
          {"svd", {{"variance_threshold", c.svd.variance_threshold}}},
          {"cluster", {{"k_range", c.cluster.k_range}, {"seed", c.cluster.seed}, {"max_iter", c.cluster.max_iter}, {"tol", c.cluster.tol}}},
          {"sample", {{"z", c.sample.z}, {"p", c.sample.p}, {"e", c.sample.e}}},
          {"agentic", agentic}};
}

}  // namespace beyondwords
