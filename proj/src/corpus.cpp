#include "beyondwords/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "beyondwords/errors.hpp"

namespace beyondwords {

namespace {

using json = nlohmann::json;

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

// Decodes one UTF-8 sequence starting at s[i]; advances i. Invalid bytes
// decode to U+FFFD and consume one byte.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

// Alphabetic scripts kept by the cleaner. Symbols, emoji and punctuation
// blocks fall outside these ranges.
bool is_letter(char32_t cp) {
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
  if (cp < 0xC0) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;
  struct Range {
    char32_t lo, hi;
  };
  static constexpr std::array<Range, 14> ranges{{
      {0x00C0, 0x024F},  // Latin-1 supplement letters, Latin extended A/B
      {0x0370, 0x03FF},  // Greek
      {0x0400, 0x052F},  // Cyrillic
      {0x0531, 0x0587},  // Armenian
      {0x05D0, 0x05EA},  // Hebrew
      {0x0620, 0x064A},  // Arabic
      {0x0900, 0x097F},  // Devanagari
      {0x0E01, 0x0E30},  // Thai
      {0x1E00, 0x1EFF},  // Latin extended additional
      {0x3041, 0x3096},  // Hiragana
      {0x30A1, 0x30FA},  // Katakana
      {0x4E00, 0x9FFF},  // CJK unified ideographs
      {0xAC00, 0xD7A3},  // Hangul syllables
      {0xF900, 0xFAFF},  // CJK compatibility ideographs
  }};
  return std::any_of(ranges.begin(), ranges.end(),
                     [cp](const Range& r) { return cp >= r.lo && cp <= r.hi; });
}

bool is_kept_ascii(char ch) {
  const auto u = static_cast<unsigned char>(ch);
  if (std::isalnum(u)) return true;
  switch (ch) {
    case ' ':
    case '.':
    case ',':
    case '!':
    case '?':
    case '\'':
    case '-':
      return true;
    default:
      return false;
  }
}

bool is_space_cp(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
         cp == 0xA0 || cp == 0x2028 || cp == 0x2029 || (cp >= 0x2000 && cp <= 0x200A) ||
         cp == 0x3000;
}

const std::regex& url_pattern() {
  static const std::regex re(R"(\b[A-Za-z][A-Za-z0-9+.\-]*://\S*|\bwww\.\S*)");
  return re;
}

// Removes whitespace-delimited tokens that begin with `sigil`.
std::string drop_sigil_tokens(std::string_view s, char sigil) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  bool at_token_start = true;
  while (i < s.size()) {
    const char ch = s[i];
    if (at_token_start && ch == sigil) {
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      continue;
    }
    at_token_start = std::isspace(static_cast<unsigned char>(ch)) != 0;
    out.push_back(ch);
    ++i;
  }
  return out;
}

std::string clean_once(std::string_view raw) {
  std::string s = std::regex_replace(std::string(raw), url_pattern(), "");
  s = drop_sigil_tokens(s, '@');
  s = drop_sigil_tokens(s, '#');

  std::string kept;
  kept.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    const char32_t cp = next_codepoint(s, i);
    if (is_space_cp(cp)) {
      kept.push_back(' ');
    } else if (cp < 0x80) {
      if (is_kept_ascii(static_cast<char>(cp))) kept.push_back(static_cast<char>(cp));
    } else if (is_letter(cp)) {
      kept.append(s, start, i - start);
    }
  }

  std::string out;
  out.reserve(kept.size());
  for (char ch : kept) {
    if (ch == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(ch);
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words{
      "a",     "about", "after", "all",   "also",  "am",    "an",    "and",   "any",
      "are",   "as",    "at",    "be",    "been",  "but",   "by",    "can",   "could",
      "did",   "do",    "does",  "for",   "from",  "had",   "has",   "have",  "he",
      "her",   "him",   "his",   "how",   "i",     "if",    "in",    "into",  "is",
      "it",    "its",   "just",  "me",    "more",  "my",    "no",    "not",   "of",
      "on",    "or",    "our",   "out",   "she",   "so",    "some",  "than",  "that",
      "the",   "their", "them",  "then",  "there", "these", "they",  "this",  "to",
      "up",    "us",    "was",   "we",    "were",  "what",  "when",  "which", "who",
      "will",  "with",  "would", "you",   "your"};
  return words;
}

std::vector<std::string> split_csv_record(std::istream& in, std::size_t& line_no, bool& ok) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  ok = true;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      ++line_no;
      break;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (in_quotes) ok = false;
  if (any) fields.push_back(std::move(field));
  return fields;
}

void add_post(Corpus& c, std::set<std::string>& seen, Post p, std::size_t line_no) {
  if (p.id.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": empty id");
  }
  if (!seen.insert(p.id).second) {
    throw ParseError("line " + std::to_string(line_no) + ": duplicate id \"" + p.id + "\"");
  }
  c.posts.push_back(std::move(p));
}

Corpus load_jsonl(std::ifstream& in, const std::string& path) {
  Corpus c;
  c.source_path = path;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    auto bad = [&](const std::string& why) {
      return ParseError("line " + std::to_string(line_no) + ": " + why);
    };
    if (!rec.is_object()) throw bad("record is not an object");
    if (!rec.contains("id") || !rec["id"].is_string()) throw bad("missing string field \"id\"");
    if (!rec.contains("text") || !rec["text"].is_string()) {
      throw bad("missing string field \"text\"");
    }
    Post p;
    p.id = rec["id"].get<std::string>();
    p.raw_text = rec["text"].get<std::string>();
    if (rec.contains("created_at") && rec["created_at"].is_string()) {
      p.created_at = rec["created_at"].get<std::string>();
    }
    if (rec.contains("lang") && rec["lang"].is_string()) p.lang = rec["lang"].get<std::string>();
    if (rec.contains("topic") && rec["topic"].is_number_integer()) p.topic = rec["topic"].get<int>();
    if (rec.contains("clean_text") && rec["clean_text"].is_string()) {
      p.clean_text = rec["clean_text"].get<std::string>();
    }
    add_post(c, seen, std::move(p), line_no);
  }
  return c;
}

Corpus load_csv(std::ifstream& in, const std::string& path) {
  Corpus c;
  c.source_path = path;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  bool ok = true;
  std::size_t header_line = line_no + 1;
  const auto header = split_csv_record(in, line_no, ok);
  if (header.empty()) return c;
  if (!ok) throw ParseError("line " + std::to_string(header_line) + ": unterminated quote");
  auto column = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int id_col = column("id");
  const int text_col = column("text");
  const int created_col = column("created_at");
  const int lang_col = column("lang");
  if (id_col < 0 || text_col < 0) {
    throw ParseError("line " + std::to_string(header_line) + ": header needs id and text columns");
  }
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::size_t record_line = line_no + 1;
    auto fields = split_csv_record(in, line_no, ok);
    if (!ok) throw ParseError("line " + std::to_string(record_line) + ": unterminated quote");
    if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(record_line) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    Post p;
    p.id = fields[static_cast<std::size_t>(id_col)];
    p.raw_text = fields[static_cast<std::size_t>(text_col)];
    if (created_col >= 0 && !fields[static_cast<std::size_t>(created_col)].empty()) {
      p.created_at = fields[static_cast<std::size_t>(created_col)];
    }
    if (lang_col >= 0 && !fields[static_cast<std::size_t>(lang_col)].empty()) {
      p.lang = fields[static_cast<std::size_t>(lang_col)];
    }
    add_post(c, seen, std::move(p), record_line);
  }
  return c;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ConfigError("unknown corpus format \"" + std::string(name) + "\"");
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("corpus file not found: " + path);
  return format == CorpusFormat::jsonl ? load_jsonl(in, path) : load_csv(in, path);
}

Corpus filter_by_tags(const Corpus& c, const std::vector<std::string>& variants,
                      bool case_insensitive) {
  if (variants.empty()) throw ConfigError("filter_by_tags: variants must be non-empty");
  std::vector<std::string> needles;
  for (const auto& v : variants) needles.push_back(case_insensitive ? lower_ascii(v) : v);

  Corpus out;
  out.source_path = c.source_path;
  out.filters_applied = c.filters_applied;
  for (const auto& p : c.posts) {
    const std::string hay = case_insensitive ? lower_ascii(p.raw_text) : p.raw_text;
    const bool hit = std::any_of(needles.begin(), needles.end(), [&](const std::string& n) {
      return hay.find(n) != std::string::npos;
    });
    if (hit) out.posts.push_back(p);
  }
  std::string desc = "tags:";
  for (std::size_t i = 0; i < variants.size(); ++i) desc += (i ? "|" : "") + variants[i];
  desc += case_insensitive ? " (ci)" : "";
  out.filters_applied.push_back(desc);
  return out;
}

bool looks_like_english(std::string_view text) {
  std::size_t alpha = 0;
  std::size_t ascii_alpha = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_codepoint(text, i);
    if (cp < 0x80) {
      if (std::isalpha(static_cast<int>(cp))) {
        ++alpha;
        ++ascii_alpha;
      }
    } else if (is_letter(cp)) {
      ++alpha;
    }
  }
  if (alpha == 0 || ascii_alpha * 5 < alpha * 4) return false;

  std::set<std::string> found;
  std::string word;
  auto flush = [&] {
    if (!word.empty() && english_stopwords().count(word)) found.insert(word);
    word.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalpha(u) || ch == '\'') {
      word.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  return found.size() >= 3;
}

Corpus filter_language(const Corpus& c, std::string_view lang) {
  Corpus out;
  out.source_path = c.source_path;
  out.filters_applied = c.filters_applied;
  for (const auto& p : c.posts) {
    bool keep = false;
    if (p.lang) {
      keep = *p.lang == lang;
    } else if (lang == "en") {
      keep = looks_like_english(p.raw_text);
    }
    if (keep) out.posts.push_back(p);
  }
  out.filters_applied.push_back("lang:" + std::string(lang));
  return out;
}

std::string clean_text(std::string_view raw) {
  // Dropping characters can splice a new "www." token together, so iterate
  // to the fixed point; every productive pass shortens the string.
  std::string cur = clean_once(raw);
  for (;;) {
    std::string next = clean_once(cur);
    if (next == cur) return cur;
    cur = std::move(next);
  }
}

Corpus clean_corpus(Corpus c) {
  for (auto& p : c.posts) p.clean_text = clean_text(p.raw_text);
  return c;
}

Corpus drop_empty(const Corpus& c) {
  Corpus out;
  out.source_path = c.source_path;
  out.filters_applied = c.filters_applied;
  for (const auto& p : c.posts) {
    if (!p.clean_text.empty()) out.posts.push_back(p);
  }
  out.filters_applied.push_back("non-empty");
  return out;
}

void save_corpus_jsonl(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& p : c.posts) {
    json rec{{"id", p.id}, {"text", p.raw_text}, {"clean_text", p.clean_text}};
    if (p.created_at) rec["created_at"] = *p.created_at;
    if (p.lang) rec["lang"] = *p.lang;
    if (p.topic) rec["topic"] = *p.topic;
    out << rec.dump() << '\n';
  }
}

}  // namespace beyondwords
