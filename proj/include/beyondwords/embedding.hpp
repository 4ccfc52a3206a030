#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "beyondwords/corpus.hpp"
#include "beyondwords/linalg.hpp"

namespace beyondwords {

enum class ProviderKind { http, synthetic, planted };

struct EmbeddingProviderSpec {
  std::string name = "synthetic";
  int dimension = 32;
  ProviderKind kind = ProviderKind::synthetic;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_id;
  int batch_size = 64;
  std::uint64_t seed = 0;
  // planted kind only
  double separation = 10.0;
  double noise = 1.0;
  // http kind only
  std::string api_key_env = "BEYONDWORDS_API_KEY";
  int max_in_flight = 1;
  int max_retries = 3;
  int initial_backoff_ms = 500;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

/// Named presets matching the public sentence-embedding models.
EmbeddingProviderSpec provider_preset(std::string_view size);

nlohmann::json to_json(const EmbeddingProviderSpec& p);
EmbeddingProviderSpec provider_from_json(const nlohmann::json& j);

struct EmbeddingMatrix {
  MatrixXd rows;  // n x d
  std::vector<std::string> post_ids;
  EmbeddingProviderSpec provider;
};

/// Stable 64-bit FNV-1a hash of `text` folded with `seed`.
std::uint64_t stable_hash(std::string_view text, std::uint64_t seed);

/// Deterministic unit-norm pseudo-random vector for `text`.
VectorXd synthetic_embed(std::string_view text, int dimension, std::uint64_t seed);

/// separation * e_topic + noise * N(0, I), the perturbation seeded by text.
VectorXd topic_planted_embed(std::string_view text, int topic_label, int dimension,
                             double separation, double noise, std::uint64_t seed);

/// Produces one vector per post; implementations may return any length and
/// embed_corpus checks it.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<std::vector<double>> embed_batch(const std::vector<const Post*>& batch) = 0;
};

std::unique_ptr<EmbeddingBackend> make_backend(const EmbeddingProviderSpec& p);

EmbeddingMatrix embed_corpus(const Corpus& c, const EmbeddingProviderSpec& p);
EmbeddingMatrix embed_corpus(const Corpus& c, const EmbeddingProviderSpec& p,
                             EmbeddingBackend& backend);

}  // namespace beyondwords
