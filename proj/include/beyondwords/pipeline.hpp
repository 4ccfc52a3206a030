#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "beyondwords/agentic.hpp"
#include "beyondwords/config.hpp"

namespace beyondwords {

enum class Stage { ingest, embed, compress, factorize, cluster, sample, themes, report };

const std::vector<Stage>& all_stages();
std::string stage_name(Stage s);
/// Throws ConfigError for unknown names.
Stage parse_stage(const std::string& name);
/// Stages whose artifacts `s` reads.
const std::vector<Stage>& stage_inputs(Stage s);

struct StageOutcome {
  Stage stage = Stage::ingest;
  bool skipped = false;
  std::string message;
};

/// Holds an exclusive flock on `<dir>/.lock` for its lifetime; throws
/// StageError when another holder exists. The kernel drops the lock if the
/// process dies.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  int fd_ = -1;
};

/// Runs stages against `<run_dir>/<run_id>/`. Every completed stage records
/// a key (hash of the config fields it depends on and of its inputs' keys)
/// and the SHA-256 of each file it wrote in manifest.json; a stage whose key
/// and hashes still match is skipped unless forced.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg, std::ostream* log = nullptr);
  Pipeline(PipelineConfig cfg, ChatClientFactory factory, std::ostream* log = nullptr);

  StageOutcome run_stage(Stage s, bool force = false);
  /// Every stage in order; stops at the first failure and rethrows it.
  std::vector<StageOutcome> run_all(bool force = false);

  const std::filesystem::path& run_dir() const { return dir_; }
  const PipelineConfig& config() const { return cfg_; }
  /// Key the given stage would record under the current config.
  std::string stage_key(Stage s) const;

 private:
  StageOutcome run_locked(Stage s, bool force);
  std::vector<std::string> execute(Stage s);
  void require_inputs(Stage s) const;
  bool up_to_date(Stage s, const nlohmann::json& manifest) const;
  nlohmann::json load_manifest() const;
  void record(Stage s, const std::vector<std::string>& files);
  void say(const std::string& line) const;

  std::vector<std::string> do_ingest();
  std::vector<std::string> do_embed();
  std::vector<std::string> do_compress();
  std::vector<std::string> do_factorize();
  std::vector<std::string> do_cluster();
  std::vector<std::string> do_sample();
  std::vector<std::string> do_themes();
  std::vector<std::string> do_report();

  PipelineConfig cfg_;
  ChatClientFactory factory_;
  std::ostream* log_;
  std::filesystem::path dir_;
  std::string corpus_hash_;
};

}  // namespace beyondwords
