#pragma once

/**
 * Multi-level experiment metrics.
 *
 * Corpus level: length/word-count distributions, mean keyword overlap,
 * mean sentiment. Sample level: best/worst rated records. Plus the
 * reranking aggregate over validation benchmarks.
 *
 * Word lists default to the bundled data/ files (embedded below); a
 * MetricsContext can load replacements from disk.
 */

#include "record.hpp"

#include <set>
#include <unordered_set>

namespace aigs::metrics {

inline const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words = {
    "the", "is", "a", "an", "and", "or", "of", "to", "in", "on", "for", "with", "as", "at", "by", "from", "it",
    "its", "this", "that", "these", "those", "be", "are", "was", "were", "been", "being", "has", "have", "had",
    "do", "does", "did", "not", "but", "if", "then", "so", "than", "too", "very", "can", "will", "just",
    "into", "about", "there", "their", "they",
  };
  return words;
}

inline const std::vector<std::string>& default_positive_lexicon() {
  static const std::vector<std::string> words = {
    "good", "great", "excellent", "helpful", "clear", "accurate", "correct", "useful", "detailed", "thorough",
    "precise", "concise", "insightful", "informative", "relevant", "effective", "efficient", "reliable",
    "robust", "elegant", "thoughtful", "careful", "creative", "innovative", "valuable", "positive", "pleasant",
    "friendly", "polite", "kind", "happy", "glad", "love", "like", "enjoy", "appreciate", "benefit", "improve",
    "improved", "improvement", "better", "best", "success", "successful", "succeed", "strong", "powerful",
    "impressive", "remarkable", "outstanding", "superb", "wonderful", "fantastic", "brilliant", "perfect",
    "ideal", "nice", "fine", "safe", "secure", "honest", "fair", "coherent", "consistent", "logical", "sound",
    "valid", "engaging", "interesting", "fascinating", "inspiring", "encouraging", "supportive",
    "comprehensive", "complete", "rich", "smooth", "easy", "simple", "practical", "solid", "stable",
    "trustworthy", "confident", "optimistic", "welcome", "beautiful", "amazing", "awesome", "delightful",
    "satisfying", "rewarding", "favorable", "advantage", "gain", "growth", "progress",
  };
  return words;
}

inline const std::vector<std::string>& default_negative_lexicon() {
  static const std::vector<std::string> words = {
    "bad", "poor", "terrible", "awful", "wrong", "incorrect", "inaccurate", "useless", "vague", "unclear",
    "confusing", "misleading", "irrelevant", "ineffective", "inefficient", "unreliable", "fragile", "clumsy",
    "careless", "sloppy", "boring", "dull", "negative", "unpleasant", "rude", "hostile", "unkind", "sad",
    "angry", "hate", "dislike", "annoying", "harm", "harmful", "worse", "worst", "failure", "fail", "failed",
    "fails", "weak", "broken", "flawed", "defective", "inferior", "mediocre", "disappointing", "horrible",
    "dreadful", "nasty", "ugly", "unsafe", "insecure", "dishonest", "unfair", "incoherent", "inconsistent",
    "illogical", "invalid", "incomplete", "shallow", "superficial", "rough", "difficult", "hard",
    "complicated", "impractical", "unstable", "untrustworthy", "doubtful", "pessimistic", "painful", "problem",
    "problematic", "error", "errors", "mistake", "mistakes", "bug", "risk", "risky", "loss", "lose", "decline",
    "damage", "danger", "dangerous", "toxic", "offensive", "biased", "redundant", "verbose", "repetitive",
    "lazy", "slow",
  };
  return words;
}

struct Lexicon {
  std::unordered_set<std::string> stopwords;
  std::unordered_set<std::string> positive;
  std::unordered_set<std::string> negative;

  static Lexicon bundled() {
    Lexicon l;
    l.stopwords.insert(default_stopwords().begin(), default_stopwords().end());
    l.positive.insert(default_positive_lexicon().begin(), default_positive_lexicon().end());
    l.negative.insert(default_negative_lexicon().begin(), default_negative_lexicon().end());
    return l;
  }

  /// Loads stopwords.txt, sentiment_positive.txt and sentiment_negative.txt from `dir`.
  static Lexicon from_directory(const std::string& dir) {
    Lexicon l;
    for (auto& w : read_word_list(dir + "/stopwords.txt")) l.stopwords.insert(w);
    for (auto& w : read_word_list(dir + "/sentiment_positive.txt")) l.positive.insert(w);
    for (auto& w : read_word_list(dir + "/sentiment_negative.txt")) l.negative.insert(w);
    return l;
  }
};

inline const Lexicon& bundled_lexicon() {
  static const Lexicon l = Lexicon::bundled();
  return l;
}

// ============================================================================
// Types
// ============================================================================

enum class Level { corpus, sample };

struct MetricSpec {
  std::string name;
  Level level = Level::corpus;
  bool builtin = true;
  std::string code_fragment;  // agent-generated metrics only
  bool active = true;         // agent code is stored inactive unless enabled
  bool operator==(const MetricSpec&) const = default;
};

inline json to_json(const MetricSpec& m) {
  json j{{"name", m.name}, {"level", m.level == Level::corpus ? "corpus" : "sample"},
         {"source", m.builtin ? "builtin" : "agent_generated"}, {"active", m.active}};
  if (!m.builtin) j["code_fragment"] = m.code_fragment;
  return j;
}

struct TextRecord {
  std::int64_t id = 0;
  std::string instruction;
  std::string response;
  std::optional<double> rating;
};

inline constexpr std::size_t kHistogramBuckets = 10;

struct Summary {
  std::size_t count = 0;
  double mean = 0, min = 0, max = 0;
  std::vector<std::int64_t> histogram;  // kHistogramBuckets equal-width buckets over [min, max]
};

inline json to_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"histogram", s.histogram}};
}

struct CorpusStats {
  std::map<std::string, Summary> summaries;
};

inline Summary summarize(const std::vector<double>& xs) {
  if (xs.empty()) throw PreconditionError("cannot summarize an empty sample");
  Summary s;
  s.count = xs.size();
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  s.histogram.assign(kHistogramBuckets, 0);
  double width = (s.max - s.min) / static_cast<double>(kHistogramBuckets);
  for (double x : xs) {
    std::size_t b = width > 0 ? static_cast<std::size_t>((x - s.min) / width) : 0;
    s.histogram[std::min(b, kHistogramBuckets - 1)]++;
  }
  return s;
}

// ============================================================================
// Corpus metrics
// ============================================================================

/// Character length and whitespace word count of every response.
inline CorpusStats length_stats(const std::vector<TextRecord>& records) {
  if (records.empty()) throw PreconditionError("length_stats needs at least one record");
  std::vector<double> chars, words;
  for (auto& r : records) {
    chars.push_back(static_cast<double>(r.response.size()));
    words.push_back(static_cast<double>(split_ws(r.response).size()));
  }
  return {{{"char_length", summarize(chars)}, {"word_count", summarize(words)}}};
}

inline std::set<std::string> content_words(std::string_view text, const Lexicon& lex) {
  std::set<std::string> out;
  for (auto& t : normalized_tokens(text))
    if (!lex.stopwords.count(t)) out.insert(t);
  return out;
}

/// Jaccard of content-word sets. Two texts without content words score 0.
inline double keyword_overlap(std::string_view instruction, std::string_view response,
                              const Lexicon& lex = bundled_lexicon()) {
  auto a = content_words(instruction, lex);
  auto b = content_words(response, lex);
  std::size_t inter = 0;
  for (auto& w : a) inter += b.count(w);
  std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// (pos - neg) / (pos + neg + 1) over lexicon hits.
inline double sentiment_score(std::string_view text, const Lexicon& lex = bundled_lexicon()) {
  double pos = 0, neg = 0;
  for (auto& t : normalized_tokens(text)) {
    pos += lex.positive.count(t);
    neg += lex.negative.count(t);
  }
  return (pos - neg) / (pos + neg + 1.0);
}

struct Extremes {
  std::vector<std::int64_t> best;
  std::vector<std::int64_t> worst;
};

/// Top-k and bottom-k by rating; ties broken by record id ascending.
inline Extremes extremal_samples(const std::vector<TextRecord>& records, std::size_t k) {
  if (k > records.size()) throw PreconditionError("k exceeds the number of records");
  std::vector<const TextRecord*> rs;
  for (auto& r : records) {
    if (!r.rating) throw PreconditionError("record " + std::to_string(r.id) + " has no rating");
    rs.push_back(&r);
  }
  auto by_desc = rs, by_asc = rs;
  std::stable_sort(by_desc.begin(), by_desc.end(), [](auto* a, auto* b) {
    return *a->rating != *b->rating ? *a->rating > *b->rating : a->id < b->id;
  });
  std::stable_sort(by_asc.begin(), by_asc.end(), [](auto* a, auto* b) {
    return *a->rating != *b->rating ? *a->rating < *b->rating : a->id < b->id;
  });
  Extremes e;
  for (std::size_t i = 0; i < k; ++i) {
    e.best.push_back(by_desc[i]->id);
    e.worst.push_back(by_asc[i]->id);
  }
  return e;
}

// ============================================================================
// Reranking
// ============================================================================

/// Mean of validation-split scores, lower-is-better scores negated. Test
/// scores are never read.
inline double rerank_score(const record::ExperimentResult& result) {
  double sum = 0;
  std::size_t n = 0;
  for (auto& [_, s] : result.benchmark_scores) {
    if (s.split != record::Split::validation) continue;
    sum += s.higher_is_better ? s.value : -s.value;
    ++n;
  }
  if (n == 0) throw PreconditionError("rerank_score needs at least one validation benchmark");
  return sum / static_cast<double>(n);
}

// ============================================================================
// Catalog
// ============================================================================

inline const std::vector<MetricSpec>& builtin_catalog() {
  static const std::vector<MetricSpec> catalog = {
      {"length", Level::corpus, true, "", true},
      {"keyword_overlap", Level::corpus, true, "", true},
      {"sentiment", Level::corpus, true, "", true},
      {"extremal_samples", Level::sample, true, "", true},
  };
  return catalog;
}

inline const MetricSpec* find_builtin(std::string_view name) {
  for (auto& m : builtin_catalog())
    if (m.name == name) return &m;
  return nullptr;
}

inline constexpr std::size_t kExtremalK = 3;

/// Computes one builtin metric over the records into a JSON payload.
inline json evaluate_builtin(const std::string& name, const std::vector<TextRecord>& records,
                             const Lexicon& lex = bundled_lexicon()) {
  if (records.empty()) throw PreconditionError("metric '" + name + "' needs records");
  if (name == "length") {
    auto st = length_stats(records);
    json j = json::object();
    for (auto& [k, s] : st.summaries) j[k] = to_json(s);
    return j;
  }
  if (name == "keyword_overlap") {
    std::vector<double> xs;
    for (auto& r : records) xs.push_back(keyword_overlap(r.instruction, r.response, lex));
    return to_json(summarize(xs));
  }
  if (name == "sentiment") {
    std::vector<double> xs;
    for (auto& r : records) xs.push_back(sentiment_score(r.response, lex));
    return to_json(summarize(xs));
  }
  if (name == "extremal_samples") {
    auto e = extremal_samples(records, std::min(kExtremalK, records.size()));
    return {{"best", e.best}, {"worst", e.worst}};
  }
  throw PreconditionError("unknown builtin metric '" + name + "'");
}

}  // namespace aigs::metrics
