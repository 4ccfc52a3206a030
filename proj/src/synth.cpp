#include "beyondwords/synth.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "json.hpp"

#include "beyondwords/errors.hpp"

namespace beyondwords {

namespace {

struct Vocabulary {
  const char* hashtag;
  std::vector<const char*> nouns;
  std::vector<const char*> feelings;
};

const std::vector<Vocabulary>& vocabularies() {
  static const std::vector<Vocabulary> v{
      {"sleep",
       {"sleep", "insomnia", "naps", "the alarm", "bedtime", "night shifts", "melatonin", "my pillow"},
       {"exhausted", "wide awake", "drained", "groggy", "restless"}},
      {"work",
       {"deadlines", "the meeting", "my boss", "overtime", "burnout", "email", "the project", "the office"},
       {"stressed", "overworked", "behind", "frustrated", "swamped"}},
      {"cooking",
       {"the recipe", "dinner", "fresh bread", "garlic", "the kitchen", "soup", "spices", "leftovers"},
       {"hungry", "proud", "inspired", "full", "curious"}},
      {"fitness",
       {"the gym", "my run", "the marathon", "stretching", "leg day", "training", "the miles", "my coach"},
       {"sore", "strong", "motivated", "tired", "energized"}},
      {"pets",
       {"my dog", "the cat", "the vet", "the puppy", "treats", "the leash", "fur everywhere", "the litter box"},
       {"happy", "worried", "amused", "grateful", "annoyed"}},
      {"weather",
       {"the rain", "the storm", "sunshine", "my umbrella", "snow", "the forecast", "the wind", "the cold"},
       {"soaked", "cheerful", "freezing", "gloomy", "surprised"}},
  };
  return v;
}

const std::array<const char*, 8> kTemplates{
    "I am so {f} because of {n} and {m} this week",
    "Is it just me or is {n} getting worse? Still {f} about {m}",
    "Today was all about {n}. I feel {f} and {m} did not help",
    "Can anyone relate to {n}? I have been {f} since {m} started",
    "Note to self: {n} and {m} are not a good mix when you are {f}",
    "We talked about {n} again, and honestly I am {f} about it",
    "{n} in the morning, {m} at night, and I am {f} by the end of it",
    "Why does {n} always happen when I am already {f}? At least there is {m}",
};

std::string fill(std::string t, const std::string& key, const std::string& value) {
  for (auto pos = t.find(key); pos != std::string::npos; pos = t.find(key, pos + value.size())) {
    t.replace(pos, key.size(), value);
  }
  return t;
}

}  // namespace

int synth_topic_capacity() { return static_cast<int>(vocabularies().size()); }

Corpus synthesize_corpus(int posts, int topics, std::uint64_t seed) {
  if (posts < 1) throw ConfigError("synth: --posts must be positive");
  if (topics < 1 || topics > synth_topic_capacity()) {
    throw ConfigError("synth: --topics must be between 1 and " + std::to_string(synth_topic_capacity()));
  }
  std::mt19937_64 gen(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(gen() % n); };
  Corpus c;
  c.source_path = "synthetic";
  for (int i = 0; i < posts; ++i) {
    const int topic = i % topics;
    const Vocabulary& v = vocabularies()[static_cast<std::size_t>(topic)];
    const std::size_t a = pick(v.nouns.size());
    std::size_t b = pick(v.nouns.size() - 1);
    if (b >= a) ++b;
    std::string text = kTemplates[pick(kTemplates.size())];
    text = fill(text, "{n}", v.nouns[a]);
    text = fill(text, "{m}", v.nouns[b]);
    text = fill(text, "{f}", v.feelings[pick(v.feelings.size())]);
    if (std::isalpha(static_cast<unsigned char>(text[0]))) text[0] = static_cast<char>(std::toupper(text[0]));
    if (pick(5) == 0) text = "@friend" + std::to_string(pick(90) + 10) + " " + text;
    if (pick(4) == 0) text += " https://example.com/p/" + std::to_string(gen() % 100000);
    if (pick(2) == 0) text += std::string(" #") + v.hashtag;

    Post p;
    char id[32];
    std::snprintf(id, sizeof id, "post_%05d", i + 1);
    p.id = id;
    p.raw_text = text;
    char ts[32];
    std::snprintf(ts, sizeof ts, "2024-%02d-%02dT%02d:%02d:00Z", 1 + (i / 28) % 12, 1 + i % 28, (i * 7) % 24,
                  (i * 13) % 60);
    p.created_at = ts;
    p.lang = "en";
    p.topic = topic;
    c.posts.push_back(std::move(p));
  }
  return c;
}

void write_synthetic_jsonl(const Corpus& c, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& p : c.posts) {
    nlohmann::json rec{{"id", p.id}, {"text", p.raw_text}};
    if (p.created_at) rec["created_at"] = *p.created_at;
    if (p.lang) rec["lang"] = *p.lang;
    if (p.topic) rec["topic"] = *p.topic;
    out << rec.dump() << '\n';
  }
}

}  // namespace beyondwords
