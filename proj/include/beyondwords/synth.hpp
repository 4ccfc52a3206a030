#pragma once

#include <cstdint>
#include <string>

#include "beyondwords/corpus.hpp"

namespace beyondwords {

/// Number of built-in topic vocabularies available to synthesize_corpus.
int synth_topic_capacity();

/// English-looking posts drawn from `topics` distinct vocabularies, round
/// robin by topic, with the label kept in Post::topic. Some posts carry URLs,
/// mentions and hashtags so cleaning has work to do.
Corpus synthesize_corpus(int posts, int topics, std::uint64_t seed);

/// One JSON object per line: id, text, created_at, lang, topic.
void write_synthetic_jsonl(const Corpus& c, const std::string& path);

}  // namespace beyondwords
