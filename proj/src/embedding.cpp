#include "beyondwords/embedding.hpp"

#include <cmath>
#include <future>
#include <random>

#include "beyondwords/errors.hpp"
#include "beyondwords/http.hpp"

namespace beyondwords {

namespace {

using json = nlohmann::json;

std::string kind_name(ProviderKind k) {
  switch (k) {
    case ProviderKind::http:
      return "http";
    case ProviderKind::synthetic:
      return "synthetic";
    case ProviderKind::planted:
      return "planted";
  }
  return "synthetic";
}

ProviderKind parse_kind(const std::string& s) {
  if (s == "http") return ProviderKind::http;
  if (s == "synthetic") return ProviderKind::synthetic;
  if (s == "planted") return ProviderKind::planted;
  throw ConfigError("unknown provider kind \"" + s + "\"");
}

VectorXd normal_draws(std::uint64_t state, int dimension) {
  std::mt19937_64 gen(state);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(dimension);
  for (int i = 0; i < dimension; ++i) v[i] = normal(gen);
  return v;
}

class SyntheticBackend : public EmbeddingBackend {
 public:
  explicit SyntheticBackend(EmbeddingProviderSpec p) : p_(std::move(p)) {}
  std::vector<std::vector<double>> embed_batch(const std::vector<const Post*>& batch) override {
    std::vector<std::vector<double>> out;
    out.reserve(batch.size());
    for (const Post* post : batch) {
      const VectorXd v = synthetic_embed(post->clean_text, p_.dimension, p_.seed);
      out.emplace_back(v.data(), v.data() + v.size());
    }
    return out;
  }

 private:
  EmbeddingProviderSpec p_;
};

class PlantedBackend : public EmbeddingBackend {
 public:
  explicit PlantedBackend(EmbeddingProviderSpec p) : p_(std::move(p)) {}
  std::vector<std::vector<double>> embed_batch(const std::vector<const Post*>& batch) override {
    std::vector<std::vector<double>> out;
    out.reserve(batch.size());
    for (const Post* post : batch) {
      if (!post->topic) throw ConfigError("planted provider: post " + post->id + " has no topic");
      const VectorXd v = topic_planted_embed(post->clean_text, *post->topic, p_.dimension,
                                             p_.separation, p_.noise, p_.seed);
      out.emplace_back(v.data(), v.data() + v.size());
    }
    return out;
  }

 private:
  EmbeddingProviderSpec p_;
};

class HttpBackend : public EmbeddingBackend {
 public:
  explicit HttpBackend(EmbeddingProviderSpec p) : p_(std::move(p)) {}
  std::vector<std::vector<double>> embed_batch(const std::vector<const Post*>& batch) override {
    json input = json::array();
    for (const Post* post : batch) input.push_back(post->clean_text);
    const json payload{{"model", *p_.model_id}, {"input", input}};
    RetryPolicy policy;
    policy.max_retries = p_.max_retries;
    policy.initial_backoff = std::chrono::milliseconds(p_.initial_backoff_ms);
    const HttpResult res = post_json(*p_.endpoint, payload, env_or_empty(p_.api_key_env), policy);
    const json& data = res.body.contains("data") ? res.body["data"] : json();
    if (!data.is_array() || data.size() != batch.size()) {
      throw ServiceError("embedding reply: expected " + std::to_string(batch.size()) +
                         " entries in \"data\"");
    }
    std::vector<std::vector<double>> out;
    out.reserve(batch.size());
    for (const auto& item : data) {
      if (!item.contains("embedding") || !item["embedding"].is_array()) {
        throw ServiceError("embedding reply: entry without \"embedding\" array");
      }
      out.push_back(item["embedding"].get<std::vector<double>>());
    }
    return out;
  }

 private:
  EmbeddingProviderSpec p_;
};

}  // namespace

void EmbeddingProviderSpec::validate() const {
  if (dimension <= 0) throw ConfigError("provider dimension must be positive");
  if (batch_size <= 0) throw ConfigError("provider batch_size must be positive");
  if (kind == ProviderKind::http && (!endpoint || !model_id)) {
    throw ConfigError("http provider requires endpoint and model_id");
  }
  if (kind == ProviderKind::planted && (separation <= 0 || noise < 0)) {
    throw ConfigError("planted provider requires separation > 0 and noise >= 0");
  }
  if (max_in_flight <= 0) throw ConfigError("provider max_in_flight must be positive");
}

EmbeddingProviderSpec provider_preset(std::string_view size) {
  EmbeddingProviderSpec p;
  p.kind = ProviderKind::http;
  if (size == "small") {
    p.name = "small";
    p.dimension = 384;
    p.model_id = "all-MiniLM-L6-v2";
  } else if (size == "medium") {
    p.name = "medium";
    p.dimension = 768;
    p.model_id = "bge-base-en-v1.5";
  } else if (size == "large") {
    p.name = "large";
    p.dimension = 1024;
    p.model_id = "bge-m3";
  } else {
    throw ConfigError("unknown provider preset \"" + std::string(size) + "\"");
  }
  return p;
}

json to_json(const EmbeddingProviderSpec& p) {
  json j{{"name", p.name},
         {"dimension", p.dimension},
         {"kind", kind_name(p.kind)},
         {"batch_size", p.batch_size},
         {"seed", p.seed}};
  if (p.endpoint) j["endpoint"] = *p.endpoint;
  if (p.model_id) j["model_id"] = *p.model_id;
  if (p.kind == ProviderKind::planted) {
    j["separation"] = p.separation;
    j["noise"] = p.noise;
  }
  if (p.kind == ProviderKind::http) {
    j["api_key_env"] = p.api_key_env;
    j["max_in_flight"] = p.max_in_flight;
    j["max_retries"] = p.max_retries;
    j["initial_backoff_ms"] = p.initial_backoff_ms;
  }
  return j;
}

EmbeddingProviderSpec provider_from_json(const json& j) {
  EmbeddingProviderSpec p;
  if (j.contains("preset")) p = provider_preset(j["preset"].get<std::string>());
  p.name = j.value("name", p.name);
  p.dimension = j.value("dimension", p.dimension);
  if (j.contains("kind")) p.kind = parse_kind(j["kind"].get<std::string>());
  if (j.contains("endpoint")) p.endpoint = j["endpoint"].get<std::string>();
  if (j.contains("model_id")) p.model_id = j["model_id"].get<std::string>();
  p.batch_size = j.value("batch_size", p.batch_size);
  p.seed = j.value("seed", p.seed);
  p.separation = j.value("separation", p.separation);
  p.noise = j.value("noise", p.noise);
  p.api_key_env = j.value("api_key_env", p.api_key_env);
  p.max_in_flight = j.value("max_in_flight", p.max_in_flight);
  p.max_retries = j.value("max_retries", p.max_retries);
  p.initial_backoff_ms = j.value("initial_backoff_ms", p.initial_backoff_ms);
  p.validate();
  return p;
}

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  // splitmix64 finalizer over the seed-folded state
  std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

VectorXd synthetic_embed(std::string_view text, int dimension, std::uint64_t seed) {
  if (dimension <= 0) throw ConfigError("synthetic_embed: dimension must be positive");
  VectorXd v = normal_draws(stable_hash(text, seed), dimension);
  const double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / norm;
}

VectorXd topic_planted_embed(std::string_view text, int topic_label, int dimension,
                             double separation, double noise, std::uint64_t seed) {
  if (topic_label < 0 || topic_label >= dimension) {
    throw ConfigError("topic_planted_embed: topic label " + std::to_string(topic_label) +
                      " outside dimension " + std::to_string(dimension));
  }
  if (separation <= 0 || noise < 0) {
    throw ConfigError("topic_planted_embed: separation must be > 0 and noise >= 0");
  }
  VectorXd v = VectorXd::Zero(dimension);
  if (noise > 0) v = noise * normal_draws(stable_hash(text, seed), dimension);
  v[topic_label] += separation;
  return v;
}

std::unique_ptr<EmbeddingBackend> make_backend(const EmbeddingProviderSpec& p) {
  p.validate();
  switch (p.kind) {
    case ProviderKind::http:
      return std::make_unique<HttpBackend>(p);
    case ProviderKind::planted:
      return std::make_unique<PlantedBackend>(p);
    case ProviderKind::synthetic:
      break;
  }
  return std::make_unique<SyntheticBackend>(p);
}

EmbeddingMatrix embed_corpus(const Corpus& c, const EmbeddingProviderSpec& p) {
  auto backend = make_backend(p);
  return embed_corpus(c, p, *backend);
}

EmbeddingMatrix embed_corpus(const Corpus& c, const EmbeddingProviderSpec& p,
                             EmbeddingBackend& backend) {
  p.validate();
  for (const auto& post : c.posts) {
    if (post.clean_text.empty()) {
      throw ConfigError("embed_corpus: post " + post.id + " has empty clean_text");
    }
  }
  const auto n = static_cast<Eigen::Index>(c.size());
  EmbeddingMatrix out;
  out.provider = p;
  out.rows.resize(n, p.dimension);
  out.post_ids.reserve(c.size());
  for (const auto& post : c.posts) out.post_ids.push_back(post.id);

  const std::size_t batch = static_cast<std::size_t>(p.batch_size);
  const std::size_t n_batches = (c.size() + batch - 1) / batch;
  auto run_batch = [&](std::size_t b) {
    std::vector<const Post*> items;
    for (std::size_t i = b * batch; i < std::min(c.size(), (b + 1) * batch); ++i) {
      items.push_back(&c.posts[i]);
    }
    try {
      return backend.embed_batch(items);
    } catch (const ServiceError& e) {
      throw ServiceError("embedding batch " + std::to_string(b) + ": " + e.what());
    }
  };
  auto store = [&](std::size_t b, const std::vector<std::vector<double>>& vecs) {
    const std::size_t first = b * batch;
    const std::size_t expected = std::min(c.size(), first + batch) - first;
    if (vecs.size() != expected) {
      throw NumericError("embedding batch " + std::to_string(b) + ": expected " +
                         std::to_string(expected) + " vectors, got " + std::to_string(vecs.size()));
    }
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      const auto& v = vecs[i];
      if (static_cast<int>(v.size()) != p.dimension) {
        throw NumericError("dimension mismatch for post " + c.posts[first + i].id + ": provider " +
                           "returned " + std::to_string(v.size()) + ", expected " +
                           std::to_string(p.dimension));
      }
      const auto row = static_cast<Eigen::Index>(first + i);
      for (int j = 0; j < p.dimension; ++j) {
        if (!std::isfinite(v[static_cast<std::size_t>(j)])) {
          throw NumericError("non-finite embedding value for post " + c.posts[first + i].id);
        }
        out.rows(row, j) = v[static_cast<std::size_t>(j)];
      }
    }
  };

  // Batches go out in waves of max_in_flight and are stored by index, so the
  // matrix is in corpus order regardless of completion order.
  const std::size_t wave = p.kind == ProviderKind::http ? static_cast<std::size_t>(p.max_in_flight) : 1;
  for (std::size_t start = 0; start < n_batches; start += wave) {
    const std::size_t end = std::min(n_batches, start + wave);
    if (end - start == 1) {
      store(start, run_batch(start));
      continue;
    }
    std::vector<std::future<std::vector<std::vector<double>>>> pending;
    for (std::size_t b = start; b < end; ++b) {
      pending.push_back(std::async(std::launch::async, run_batch, b));
    }
    for (std::size_t b = start; b < end; ++b) store(b, pending[b - start].get());
  }
  return out;
}

}  // namespace beyondwords
