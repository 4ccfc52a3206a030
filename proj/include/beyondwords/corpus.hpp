#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace beyondwords {

struct Post {
  std::string id;
  std::string raw_text;
  std::string clean_text;
  std::optional<std::string> created_at;
  std::optional<std::string> lang;
  // Planted topic label, present only in generated test corpora.
  std::optional<int> topic;
};

struct Corpus {
  std::vector<Post> posts;
  std::string source_path;
  std::vector<std::string> filters_applied;

  std::size_t size() const { return posts.size(); }
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view name);

/// Reads one record per line (JSONL) or per row (CSV with header).
/// Throws ParseError with the 1-based line number for malformed records and
/// for duplicate ids; Error when the file cannot be opened.
Corpus load_corpus(const std::string& path, CorpusFormat format);

/// Keeps posts whose raw text contains any of `variants`.
Corpus filter_by_tags(const Corpus& c, const std::vector<std::string>& variants,
                      bool case_insensitive);

/// Keeps posts tagged with `lang`; untagged posts go through
/// looks_like_english() when `lang` is "en", and are dropped otherwise.
Corpus filter_language(const Corpus& c, std::string_view lang);

/// At least 80% of alphabetic characters ASCII and at least three distinct
/// stopwords from the built-in list.
bool looks_like_english(std::string_view text);

/// Strips URLs, @mentions, #hashtags and any character outside letters,
/// digits, space and . , ! ? ' -; collapses whitespace and trims.
/// Idempotent.
std::string clean_text(std::string_view raw);

/// Fills clean_text for every post.
Corpus clean_corpus(Corpus c);

/// Drops posts whose clean_text is empty.
Corpus drop_empty(const Corpus& c);

void save_corpus_jsonl(const Corpus& c, const std::string& path);

}  // namespace beyondwords
