#include "beyondwords/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "beyondwords/cluster_quality.hpp"
#include "beyondwords/kmeans.hpp"
#include "beyondwords/matrix_io.hpp"
#include "beyondwords/report.hpp"
#include "beyondwords/sampling.hpp"
#include "beyondwords/svd.hpp"

namespace beyondwords {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Files and directories each stage owns, relative to the run directory.
const std::vector<std::string>& stage_outputs(Stage s) {
  static const std::vector<std::vector<std::string>> outputs{
      {"corpus.jsonl", "corpus.meta.json"},
      {"embeddings.json", "embeddings.bin"},
      {"autoencoder", "latent.json", "latent.bin"},
      {"svd"},
      {"clusters"},
      {"samples"},
      {"transcripts"},
      {"report"},
  };
  return outputs[static_cast<std::size_t>(s)];
}

std::vector<std::string> files_under(const fs::path& root, const std::vector<std::string>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    const fs::path p = root / e;
    if (fs::is_directory(p)) {
      for (const auto& f : fs::recursive_directory_iterator(p)) {
        if (f.is_regular_file()) out.push_back(fs::relative(f.path(), root).generic_string());
      }
    } else if (fs::exists(p)) {
      out.push_back(e);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

json quality_json(const ClusterQuality& q) {
  return {{"ch_index", std::isinf(q.ch_index) ? json("inf") : json(q.ch_index)},
          {"db_index", q.db_index},
          {"silhouette", q.mean_silhouette}};
}

ClusterQuality quality_from_json(const json& j) {
  ClusterQuality q;
  q.ch_index = j.at("ch_index").is_string() ? std::numeric_limits<double>::infinity() : j.at("ch_index").get<double>();
  q.db_index = j.at("db_index").get<double>();
  q.mean_silhouette = j.at("silhouette").get<double>();
  return q;
}

json model_json(const ClusterModel& m) {
  return {{"k", m.k},
          {"inertia", m.inertia},
          {"seed", m.seed},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"inertia_trace", m.inertia_trace}};
}

void write_assignments(const fs::path& file, const std::vector<std::string>& ids, const std::vector<int>& labels) {
  std::string csv = "post_id,cluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) csv += ids[i] + "," + std::to_string(labels[i]) + "\n";
  write_text(file, csv);
}

std::pair<std::vector<std::string>, std::vector<int>> read_assignments(const fs::path& file) {
  std::istringstream in(read_text(file));
  std::string line;
  std::getline(in, line);
  if (line != "post_id,cluster") throw StageError("unexpected header in " + file.string());
  std::vector<std::string> ids;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw StageError("malformed line in " + file.string());
    ids.push_back(line.substr(0, comma));
    labels.push_back(std::stoi(line.substr(comma + 1)));
  }
  return {ids, labels};
}

json training_report_json(const TrainingReport& r) {
  json curves = json::array();
  for (const auto& c : r.curves) {
    curves.push_back({{"ratio", c.ratio.str()},
                      {"latent_dim", c.latent_dim},
                      {"initial_train_loss", c.initial_train_loss},
                      {"final_val_loss", c.final_val_loss},
                      {"train_loss", c.train_loss},
                      {"val_loss", c.val_loss}});
  }
  return {{"selected_ratio", r.selected_ratio.str()}, {"best_val_loss", r.best_val_loss}, {"curves", curves}};
}

TrainingReport training_report_from_json(const json& j) {
  TrainingReport r;
  r.selected_ratio = parse_ratio(j.at("selected_ratio").get<std::string>());
  r.best_val_loss = j.at("best_val_loss").get<double>();
  for (const auto& c : j.at("curves")) {
    RatioCurve curve;
    curve.ratio = parse_ratio(c.at("ratio").get<std::string>());
    curve.latent_dim = c.at("latent_dim").get<int>();
    curve.initial_train_loss = c.at("initial_train_loss").get<double>();
    curve.final_val_loss = c.at("final_val_loss").get<double>();
    curve.train_loss = c.at("train_loss").get<std::vector<double>>();
    curve.val_loss = c.at("val_loss").get<std::vector<double>>();
    r.curves.push_back(std::move(curve));
  }
  return r;
}

// Digest of each input stage's recorded artifacts, so a rebuilt upstream
// stage invalidates everything downstream of it.
json input_digests(Stage s, const json& manifest) {
  json out = json::object();
  const auto stages = manifest.value("stages", json::object());
  for (Stage in : stage_inputs(s)) {
    const std::string name = stage_name(in);
    out[name] = stages.contains(name) ? sha256_hex(stages[name].at("artifacts").dump()) : "";
  }
  return out;
}

std::string sample_file(int cluster) { return "samples/cluster_" + std::to_string(cluster) + ".json"; }
std::string transcript_file(int cluster) { return "transcripts/cluster_" + std::to_string(cluster) + ".json"; }

PromptTemplates prompts_for(const AgenticConfig& a) {
  return a.prompts_dir ? PromptTemplates::load(*a.prompts_dir) : PromptTemplates::defaults();
}

}  // namespace

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> s{Stage::ingest,  Stage::embed,  Stage::compress, Stage::factorize,
                                    Stage::cluster, Stage::sample, Stage::themes,   Stage::report};
  return s;
}

std::string stage_name(Stage s) {
  static const char* names[] = {"ingest", "embed", "compress", "factorize", "cluster", "sample", "themes", "report"};
  return names[static_cast<int>(s)];
}

Stage parse_stage(const std::string& name) {
  for (Stage s : all_stages()) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage \"" + name + "\"");
}

const std::vector<Stage>& stage_inputs(Stage s) {
  static const std::vector<std::vector<Stage>> inputs{
      {},
      {Stage::ingest},
      {Stage::embed},
      {Stage::compress, Stage::embed},
      {Stage::factorize},
      {Stage::cluster, Stage::ingest},
      {Stage::sample},
      {Stage::compress, Stage::factorize, Stage::cluster, Stage::sample, Stage::themes},
  };
  return inputs[static_cast<std::size_t>(s)];
}

RunLock::RunLock(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path file = dir / ".lock";
  fd_ = ::open(file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw StageError("cannot open lock file " + file.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    throw StageError("run directory " + dir.string() + " is locked by another run");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  if (::ftruncate(fd_, 0) != 0 || ::write(fd_, pid.data(), pid.size()) < 0) {
    // the pid is informational only
  }
}

RunLock::~RunLock() { ::close(fd_); }

Pipeline::Pipeline(PipelineConfig cfg, std::ostream* log) : Pipeline(std::move(cfg), nullptr, log) {}

Pipeline::Pipeline(PipelineConfig cfg, ChatClientFactory factory, std::ostream* log)
    : cfg_(std::move(cfg)), factory_(std::move(factory)), log_(log) {
  cfg_.validate();
  dir_ = fs::path(cfg_.run_dir) / cfg_.run_id;
  corpus_hash_ = sha256_file(cfg_.corpus.path);
}

void Pipeline::say(const std::string& line) const {
  if (log_) *log_ << line << std::endl;
}

std::string Pipeline::stage_key(Stage s) const {
  const json snapshot = to_json(cfg_);
  json relevant;
  switch (s) {
    case Stage::ingest:
      relevant = snapshot["corpus"];
      relevant["sha256"] = corpus_hash_;
      break;
    case Stage::embed:
      relevant = snapshot["provider"];
      break;
    case Stage::compress:
      relevant = snapshot["training"];
      break;
    case Stage::factorize:
      relevant = snapshot["svd"];
      break;
    case Stage::cluster:
      relevant = snapshot["cluster"];
      break;
    case Stage::sample:
      relevant = snapshot["sample"];
      break;
    case Stage::themes: {
      relevant = snapshot["agentic"];
      const PromptTemplates p = prompts_for(cfg_.agentic);
      relevant["prompt_texts"] = {p.system, p.keywords, p.grouping, p.themes, p.grader, p.extractor};
      break;
    }
    case Stage::report:
      relevant = json::object();
      break;
  }
  std::string material = stage_name(s) + "\n" + relevant.dump() + "\n";
  for (Stage in : stage_inputs(s)) material += stage_key(in) + "\n";
  return sha256_hex(material);
}

json Pipeline::load_manifest() const {
  const fs::path file = dir_ / "manifest.json";
  if (!fs::exists(file)) return json::object();
  try {
    return read_json(file);
  } catch (const std::exception& e) {
    throw StageError("manifest " + file.string() + " is unreadable: " + e.what());
  }
}

bool Pipeline::up_to_date(Stage s, const json& manifest) const {
  const auto stages = manifest.value("stages", json::object());
  if (!stages.contains(stage_name(s))) return false;
  const json& entry = stages[stage_name(s)];
  if (entry.value("key", "") != stage_key(s)) return false;
  if (entry.value("inputs", json::object()) != input_digests(s, manifest)) return false;
  for (const auto& [rel, hash] : entry.at("artifacts").items()) {
    const fs::path f = dir_ / rel;
    if (!fs::exists(f) || sha256_file(f) != hash.get<std::string>()) return false;
  }
  return true;
}

void Pipeline::require_inputs(Stage s) const {
  const json manifest = load_manifest();
  const auto stages = manifest.value("stages", json::object());
  for (Stage in : stage_inputs(s)) {
    const std::string name = stage_name(in);
    if (!stages.contains(name)) {
      throw StageError("stage '" + stage_name(s) + "' needs the artifacts of stage '" + name +
                       "', which has not completed; run 'stage " + name + "' first");
    }
    const json& entry = stages[name];
    if (entry.value("key", "") != stage_key(in)) {
      throw StageError("artifacts of stage '" + name + "' were produced under a different config; rerun stage '" +
                       name + "'");
    }
    for (const auto& [rel, hash] : entry.at("artifacts").items()) {
      const fs::path f = dir_ / rel;
      if (!fs::exists(f)) throw StageError("artifact " + rel + " of stage '" + name + "' is missing");
      if (sha256_file(f) != hash.get<std::string>()) {
        throw StageError("artifact " + rel + " of stage '" + name + "' fails hash verification");
      }
    }
  }
}

void Pipeline::record(Stage s, const std::vector<std::string>& files) {
  json manifest = load_manifest();
  const std::string now = now_iso();
  if (!manifest.contains("created_at")) manifest["created_at"] = now;
  manifest["run_id"] = cfg_.run_id;
  manifest["updated_at"] = now;
  manifest["config"] = to_json(cfg_);
  manifest["config_hash"] = sha256_hex(manifest["config"].dump());
  manifest["seeds"] = {{"provider", cfg_.provider.seed}, {"training", cfg_.training.seed}, {"cluster", cfg_.cluster.seed}};
  json artifacts = json::object();
  for (const auto& f : files) artifacts[f] = sha256_file(dir_ / f);
  manifest["stages"][stage_name(s)] = {{"key", stage_key(s)},
                                       {"completed_at", now},
                                       {"inputs", input_digests(s, manifest)},
                                       {"artifacts", artifacts}};
  write_json(dir_ / "manifest.json", manifest);
}

StageOutcome Pipeline::run_stage(Stage s, bool force) {
  RunLock lock(dir_);
  return run_locked(s, force);
}

std::vector<StageOutcome> Pipeline::run_all(bool force) {
  RunLock lock(dir_);
  std::vector<StageOutcome> out;
  for (Stage s : all_stages()) out.push_back(run_locked(s, force));
  return out;
}

StageOutcome Pipeline::run_locked(Stage s, bool force) {
  const std::string name = stage_name(s);
  require_inputs(s);
  if (!force && up_to_date(s, load_manifest())) {
    const std::string msg = "stage '" + name + "' is up to date; skipped (use --force to rerun)";
    say("[" + name + "] " + msg);
    return {s, true, msg};
  }
  say("[" + name + "] running");
  const auto started = std::chrono::steady_clock::now();
  std::vector<std::string> files;
  const std::string where =
      "stage '" + name + "' failed (artifacts of completed stages remain in " + dir_.string() + "): ";
  try {
    for (const auto& e : stage_outputs(s)) fs::remove_all(dir_ / e);
    files = execute(s);
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const ServiceError& e) {
    throw ServiceError(where + e.what());
  } catch (const std::exception& e) {
    throw StageError(where + e.what());
  }
  record(s, files);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "done in %.2fs, %zu files", secs, files.size());
  say("[" + name + "] " + buf);
  return {s, false, buf};
}

std::vector<std::string> Pipeline::execute(Stage s) {
  fs::create_directories(dir_);
  switch (s) {
    case Stage::ingest:
      return do_ingest();
    case Stage::embed:
      return do_embed();
    case Stage::compress:
      return do_compress();
    case Stage::factorize:
      return do_factorize();
    case Stage::cluster:
      return do_cluster();
    case Stage::sample:
      return do_sample();
    case Stage::themes:
      return do_themes();
    case Stage::report:
      return do_report();
  }
  return {};
}

std::vector<std::string> Pipeline::do_ingest() {
  Corpus c = load_corpus(cfg_.corpus.path, cfg_.corpus.format);
  const std::size_t loaded = c.size();
  if (!cfg_.corpus.tags.empty()) c = filter_by_tags(c, cfg_.corpus.tags, cfg_.corpus.tags_case_insensitive);
  if (cfg_.corpus.language) c = filter_language(c, *cfg_.corpus.language);
  c = drop_empty(clean_corpus(std::move(c)));
  if (c.size() < 4) {
    throw StageError("ingest: only " + std::to_string(c.size()) + " posts survive filtering and cleaning");
  }
  save_corpus_jsonl(c, (dir_ / "corpus.jsonl").string());
  write_json(dir_ / "corpus.meta.json", {{"source_path", cfg_.corpus.path},
                                         {"source_sha256", corpus_hash_},
                                         {"n_loaded", loaded},
                                         {"n_posts", c.size()},
                                         {"filters_applied", c.filters_applied}});
  say("[ingest] " + std::to_string(c.size()) + " of " + std::to_string(loaded) + " posts kept");
  return files_under(dir_, stage_outputs(Stage::ingest));
}

std::vector<std::string> Pipeline::do_embed() {
  const Corpus c = load_corpus((dir_ / "corpus.jsonl").string(), CorpusFormat::jsonl);
  const EmbeddingMatrix m = embed_corpus(c, cfg_.provider);
  write_matrix(dir_ / "embeddings", m.rows, {{"provider", to_json(m.provider)}, {"post_ids", m.post_ids}});
  say("[embed] " + std::to_string(m.rows.rows()) + " x " + std::to_string(m.rows.cols()));
  return files_under(dir_, stage_outputs(Stage::embed));
}

std::vector<std::string> Pipeline::do_compress() {
  const MatrixXd e = read_matrix(dir_ / "embeddings").values;
  const auto result = train<double>(e, cfg_.training);
  for (const auto& m : result.models) save_autoencoder(dir_ / "autoencoder" / m.ratio.label(), m);
  write_json(dir_ / "autoencoder" / "report.json", training_report_json(result.report));
  const auto& best = result.selected();
  const MatrixXd z = encode(best, e);
  write_matrix(dir_ / "latent", z, {{"ratio", best.ratio.str()}, {"latent_dim", best.latent_dim}});
  say("[compress] selected ratio " + result.report.selected_ratio.str() + " (latent dim " +
      std::to_string(best.latent_dim) + ")");
  return files_under(dir_, stage_outputs(Stage::compress));
}

std::vector<std::string> Pipeline::do_factorize() {
  const StoredMatrix emb = read_matrix(dir_ / "embeddings");
  const MatrixXd z = read_matrix(dir_ / "latent").values;
  auto factorize = [&](const MatrixXd& x, const fs::path& out) {
    const int full = static_cast<int>(std::min(x.rows(), x.cols()));
    const auto f = truncated_svd(x, full);
    const auto cumulative = explained_variance(f.S);
    const int r = select_rank(cumulative, cfg_.svd.variance_threshold);
    write_matrix(out / "U", f.U.leftCols(r));
    write_matrix(out / "S", f.S.head(r));
    write_matrix(out / "V", f.V.leftCols(r));
    std::vector<double> s(f.S.data(), f.S.data() + f.S.size());
    write_json(out / "meta.json", {{"rank", r},
                                   {"threshold", cfg_.svd.variance_threshold},
                                   {"singular_values", s},
                                   {"cumulative_variance", cumulative},
                                   {"post_ids", emb.meta.at("post_ids")}});
    return r;
  };
  const int r = factorize(z, dir_ / "svd");
  const int r_raw = factorize(emb.values, dir_ / "svd" / "raw");
  say("[factorize] rank " + std::to_string(r) + " with autoencoder, " + std::to_string(r_raw) + " without");
  return files_under(dir_, stage_outputs(Stage::factorize));
}

std::vector<std::string> Pipeline::do_cluster() {
  const MatrixXd u = read_matrix(dir_ / "svd" / "U").values;
  const MatrixXd u_raw = read_matrix(dir_ / "svd" / "raw" / "U").values;
  const auto ids = read_json(dir_ / "svd" / "meta.json").at("post_ids").get<std::vector<std::string>>();
  const auto& cc = cfg_.cluster;
  if (cc.k_range.back() > u.rows()) {
    throw ConfigError("cluster.k_range reaches " + std::to_string(cc.k_range.back()) + " but there are only " +
                      std::to_string(u.rows()) + " posts");
  }
  const ElbowResult elbow = elbow_select(u, cc.k_range, cc.seed, cc.max_iter, cc.tol);
  if (elbow.degenerate) say("[cluster] warning: inertia curve is flat; elbow fell back to k=" + std::to_string(elbow.k));
  const auto at = std::find(elbow.ks.begin(), elbow.ks.end(), elbow.k) - elbow.ks.begin();
  const ClusterModel& model = elbow.models[static_cast<std::size_t>(at)];
  const ClusterQuality q = evaluate_quality(u, model.assignments);
  const ClusterModel raw = kmeans(u_raw, elbow.k, cc.seed, cc.max_iter, cc.tol);
  const ClusterQuality q_raw = evaluate_quality(u_raw, raw.assignments);

  const fs::path out = dir_ / "clusters";
  write_matrix(out / "centroids", model.centroids);
  write_json(out / "model.json", model_json(model));
  write_assignments(out / "assignments.csv", ids, model.assignments);
  write_json(out / "elbow.json",
             {{"ks", elbow.ks}, {"inertias", elbow.inertias}, {"k", elbow.k}, {"degenerate", elbow.degenerate}});
  write_matrix(out / "silhouette",
               Eigen::Map<const VectorXd>(q.per_point_silhouette.data(),
                                          static_cast<Eigen::Index>(q.per_point_silhouette.size())));
  write_json(out / "quality.json",
             {{"k", elbow.k}, {"with_autoencoder", quality_json(q)}, {"without_autoencoder", quality_json(q_raw)}});
  write_matrix(out / "raw" / "centroids", raw.centroids);
  write_json(out / "raw" / "model.json", model_json(raw));
  write_assignments(out / "raw" / "assignments.csv", ids, raw.assignments);
  say("[cluster] k=" + std::to_string(elbow.k) + ", DB " + std::to_string(q.db_index) + " with autoencoder, " +
      std::to_string(q_raw.db_index) + " without");
  return files_under(dir_, stage_outputs(Stage::cluster));
}

std::vector<std::string> Pipeline::do_sample() {
  const Corpus c = load_corpus((dir_ / "corpus.jsonl").string(), CorpusFormat::jsonl);
  const auto [ids, labels] = read_assignments(dir_ / "clusters" / "assignments.csv");
  if (ids.size() != c.size()) throw StageError("sample: assignments and corpus differ in size");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != c.posts[i].id) throw StageError("sample: assignment order does not match the corpus at " + ids[i]);
  }
  const MatrixXd sil = read_matrix(dir_ / "clusters" / "silhouette").values;
  const std::vector<double> s(sil.data(), sil.data() + sil.size());
  const int k = read_json(dir_ / "clusters" / "model.json").at("k").get<int>();
  const SamplePlan plan = SamplePlan::make(cfg_.sample.z, cfg_.sample.p, cfg_.sample.e);
  std::vector<int> clusters;
  for (int cl = 0; cl < k; ++cl) {
    write_json(dir_ / sample_file(cl), to_json(select_representatives(cl, labels, s, c, plan)));
    clusters.push_back(cl);
  }
  write_json(dir_ / "samples" / "index.json", {{"clusters", clusters}, {"n_target", plan.n_target}});
  say("[sample] " + std::to_string(k) + " clusters, up to " + std::to_string(plan.n_target) + " posts each");
  return files_under(dir_, stage_outputs(Stage::sample));
}

std::vector<std::string> Pipeline::do_themes() {
  const auto clusters = read_json(dir_ / "samples" / "index.json").at("clusters").get<std::vector<int>>();
  std::vector<RepresentativeSample> samples;
  for (int cl : clusters) samples.push_back(sample_from_json(read_json(dir_ / sample_file(cl))));

  RateLimiter limiter(cfg_.agentic.requests_per_second);
  ChatUsage usage;
  ChatClientFactory factory = factory_;
  if (!factory) {
    factory = [&](const ChatClientSpec& spec) { return make_chat_client(spec, &limiter, &usage); };
  }
  AgenticClients clients{cfg_.agentic.generator, cfg_.agentic.grader, cfg_.agentic.extractor};
  const AgenticRun run = run_all_clusters(samples, clients,
                                          {cfg_.agentic.quality_threshold, cfg_.agentic.max_iterations},
                                          prompts_for(cfg_.agentic), factory, cfg_.agentic.max_in_flight);
  for (const auto& t : run.transcripts) write_json(dir_ / transcript_file(t.cluster_id), to_json(t));
  for (const auto& f : run.failures) {
    if (f.partial) {
      write_json(dir_ / "transcripts" / ("cluster_" + std::to_string(f.cluster_id) + ".partial.json"),
                 to_json(*f.partial));
    }
  }
  json summary = run.summary();
  summary["usage"] = usage.to_json();
  write_json(dir_ / "transcripts" / "summary.json", summary);

  if (!run.failures.empty()) {
    std::string msg = "themes: " + std::to_string(run.failures.size()) + " of " +
                      std::to_string(samples.size()) + " clusters failed";
    bool service = false;
    for (const auto& f : run.failures) {
      msg += "; cluster " + std::to_string(f.cluster_id) + ": " + f.message;
      service = service || f.service_failure;
    }
    if (service) throw ServiceError(msg);
    throw StageError(msg);
  }
  for (const auto& t : run.transcripts) {
    say("[themes] cluster " + std::to_string(t.cluster_id) + ": " + std::to_string(t.rounds.size()) +
        " rounds, " + to_string(t.terminal_reason));
  }
  return files_under(dir_, stage_outputs(Stage::themes));
}

std::vector<std::string> Pipeline::do_report() {
  ReportInputs in;
  in.cluster_ids = read_json(dir_ / "samples" / "index.json").at("clusters").get<std::vector<int>>();
  for (int cl : in.cluster_ids) {
    in.samples[cl] = sample_from_json(read_json(dir_ / sample_file(cl)));
    const fs::path t = dir_ / transcript_file(cl);
    if (fs::exists(t)) in.transcripts[cl] = transcript_from_json(read_json(t));
  }
  const json quality = read_json(dir_ / "clusters" / "quality.json");
  in.metrics = metrics_table(quality_from_json(quality.at("with_autoencoder")),
                             quality_from_json(quality.at("without_autoencoder")));
  in.training = training_report_from_json(read_json(dir_ / "autoencoder" / "report.json"));
  const json svd = read_json(dir_ / "svd" / "meta.json");
  const json svd_raw = read_json(dir_ / "svd" / "raw" / "meta.json");
  in.cumulative_variance = svd.at("cumulative_variance").get<std::vector<double>>();
  in.cumulative_variance_raw = svd_raw.at("cumulative_variance").get<std::vector<double>>();
  const json elbow = read_json(dir_ / "clusters" / "elbow.json");
  in.elbow = {elbow.at("ks").get<std::vector<int>>(), elbow.at("inertias").get<std::vector<double>>(),
              elbow.at("k").get<int>()};
  in.metrics_extra = {{"k", in.elbow.selected_k},
                      {"elbow_degenerate", elbow.at("degenerate")},
                      {"selected_ratio", in.training.selected_ratio.str()},
                      {"rank_with_autoencoder", svd.at("rank")},
                      {"rank_without_autoencoder", svd_raw.at("rank")},
                      {"n_posts", svd.at("post_ids").size()}};
  write_report(dir_ / "report", in);
  say("[report] written to " + (dir_ / "report").string());
  return files_under(dir_, stage_outputs(Stage::report));
}

}  // namespace beyondwords
