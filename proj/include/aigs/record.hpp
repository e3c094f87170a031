#pragma once

// Typed provenance model: proposals, experiment results, reviews, turns.

#include "dsl.hpp"

#include <compare>
#include <map>
#include <optional>

namespace aigs::record {

enum class Split { validation, test };

inline const char* to_string(Split s) { return s == Split::validation ? "validation" : "test"; }

inline Split parse_split(const std::string& s) {
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw Error("unknown benchmark split '" + s + "'");
}

struct BenchmarkScore {
  std::string name;
  double value = 0.0;
  Split split = Split::validation;
  bool higher_is_better = true;
  bool operator==(const BenchmarkScore&) const = default;
};

struct ExperimentResult {
  std::map<std::string, BenchmarkScore> benchmark_scores;
  std::map<std::string, json> metric_values;
  std::map<std::string, std::string> artifacts;
  std::string logs;
  bool success = true;
  std::string failure_reason;

  bool operator==(const ExperimentResult&) const = default;

  static ExperimentResult failure(std::string reason) {
    ExperimentResult r;
    r.success = false;
    r.failure_reason = std::move(reason);
    return r;
  }

  std::vector<BenchmarkScore> scores_in(Split split) const {
    std::vector<BenchmarkScore> out;
    for (auto& [_, s] : benchmark_scores)
      if (s.split == split) out.push_back(s);
    return out;
  }
};

struct ExpSettings {
  int baseline_turn = 0;
  std::map<std::string, std::string> options;
  bool operator==(const ExpSettings&) const = default;
};

struct Proposal {
  std::string idea;
  std::string methodology_text;
  dsl::DslDocument methodology_dsl;
  ExpSettings exp_settings;
  std::string hypothesis;
  std::string related_feature;
  std::optional<std::string> rebuttal;
  bool operator==(const Proposal&) const = default;
};

struct Review {
  std::string exp_results_review;
  std::string proposal_review;
  std::map<std::string, std::string> per_metric_analyses;
  bool operator==(const Review&) const = default;
};

struct TurnRef {
  int iteration = 0;
  int thread = 1;
  auto operator<=>(const TurnRef&) const = default;
};

inline std::string to_string(TurnRef r) {
  return "(" + std::to_string(r.iteration) + "," + std::to_string(r.thread) + ")";
}

struct TurnRecord {
  int iteration = 0;
  int thread = 1;
  std::optional<TurnRef> parent;
  std::optional<Proposal> proposal;
  ExperimentResult result;
  std::optional<Review> review;
  std::optional<double> rerank_score;  // derived; null for failed turns
  std::uint64_t seed = 0;
  TokenUsage usage;
  std::vector<std::string> warnings;

  TurnRef ref() const { return {iteration, thread}; }
  bool operator==(const TurnRecord&) const = default;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Structural invariants of a single record. Failed turns (i > 0) may lack a
/// review and, when proposal generation itself failed, a proposal.
inline void check_invariants(const TurnRecord& r) {
  auto fail = [&](const std::string& m) { throw InvariantError("turn " + to_string(r.ref()) + ": " + m); };
  if (r.iteration < 0) fail("iteration must be >= 0");
  if (r.thread < 1) fail("thread must be >= 1");
  for (auto& [name, s] : r.result.benchmark_scores) {
    if (!std::isfinite(s.value)) fail("benchmark '" + name + "' is not finite");
    if (s.name != name) fail("benchmark key/name mismatch for '" + name + "'");
  }
  if (r.iteration == 0) {
    if (r.thread != 1) fail("turn 0 is shared and must use thread 1");
    if (r.proposal || r.review) fail("turn 0 carries the trivial-method result only");
    if (r.parent) fail("turn 0 has no parent");
    return;
  }
  if (r.iteration == 1 && r.parent) fail("iteration 1 descends from turn 0 and has no parent link");
  if (r.iteration >= 2) {
    if (!r.parent) fail("iteration >= 2 needs a parent link");
    if (r.parent->iteration != r.iteration - 1) fail("parent must be in the previous iteration");
  }
  if (r.proposal) {
    bool has_rebuttal = r.proposal->rebuttal.has_value();
    if (has_rebuttal != (r.iteration > 1)) fail("rebuttal must be present iff iteration > 1");
    auto b = r.proposal->exp_settings.baseline_turn;
    if (b < 0 || b >= r.iteration) fail("baseline_turn must reference an earlier turn");
  }
  if (r.result.success) {
    if (!r.proposal) fail("successful turn needs a proposal");
    if (!r.review) fail("successful turn needs a review");
    if (r.review->exp_results_review.empty() || r.review->proposal_review.empty())
      fail("review texts must be non-empty");
  }
}

// ============================================================================
// JSON
// ============================================================================

inline json to_json(const BenchmarkScore& s) {
  return {{"name", s.name}, {"value", s.value}, {"split", to_string(s.split)}, {"higher_is_better", s.higher_is_better}};
}

inline BenchmarkScore score_from_json(const json& j) {
  return {j.at("name"), j.at("value").get<double>(), parse_split(j.at("split")), j.at("higher_is_better").get<bool>()};
}

inline json to_json(const ExperimentResult& r) {
  json scores = json::object();
  for (auto& [k, s] : r.benchmark_scores) scores[k] = to_json(s);
  json j{{"benchmark_scores", scores}, {"metric_values", json(r.metric_values)}, {"artifacts", json(r.artifacts)},
         {"logs", r.logs}, {"success", r.success}};
  if (!r.success) j["failure_reason"] = r.failure_reason;
  return j;
}

inline ExperimentResult result_from_json(const json& j) {
  ExperimentResult r;
  for (auto& [k, v] : j.at("benchmark_scores").items()) r.benchmark_scores[k] = score_from_json(v);
  for (auto& [k, v] : j.at("metric_values").items()) r.metric_values[k] = v;
  r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  r.logs = j.at("logs").get<std::string>();
  r.success = j.at("success").get<bool>();
  r.failure_reason = j.value("failure_reason", "");
  return r;
}

inline json to_json(const Proposal& p) {
  json j{{"idea", p.idea},
         {"methodology_text", p.methodology_text},
         {"methodology_dsl", dsl::to_json(p.methodology_dsl)},
         {"exp_settings", {{"baseline_turn", p.exp_settings.baseline_turn}, {"options", json(p.exp_settings.options)}}},
         {"hypothesis", p.hypothesis},
         {"related_feature", p.related_feature}};
  if (p.rebuttal) j["rebuttal"] = *p.rebuttal;
  return j;
}

inline Proposal proposal_from_json(const json& j, const dsl::GrammarRegistry& reg) {
  Proposal p;
  p.idea = j.at("idea");
  p.methodology_text = j.at("methodology_text");
  p.methodology_dsl = dsl::validate_or_throw(j.at("methodology_dsl"), reg);
  p.exp_settings.baseline_turn = j.at("exp_settings").at("baseline_turn").get<int>();
  p.exp_settings.options = j.at("exp_settings").at("options").get<std::map<std::string, std::string>>();
  p.hypothesis = j.at("hypothesis");
  p.related_feature = j.at("related_feature");
  if (j.contains("rebuttal")) p.rebuttal = j["rebuttal"].get<std::string>();
  return p;
}

inline json to_json(const Review& r) {
  return {{"exp_results_review", r.exp_results_review},
          {"proposal_review", r.proposal_review},
          {"per_metric_analyses", json(r.per_metric_analyses)}};
}

inline Review review_from_json(const json& j) {
  return {j.at("exp_results_review"), j.at("proposal_review"),
          j.at("per_metric_analyses").get<std::map<std::string, std::string>>()};
}

inline json to_json(TurnRef r) { return {{"iteration", r.iteration}, {"thread", r.thread}}; }
inline TurnRef ref_from_json(const json& j) { return {j.at("iteration").get<int>(), j.at("thread").get<int>()}; }

inline json to_json(const TurnRecord& t) {
  json j{{"iteration", t.iteration},
         {"thread", t.thread},
         {"parent", t.parent ? to_json(*t.parent) : json(nullptr)},
         {"proposal", t.proposal ? to_json(*t.proposal) : json(nullptr)},
         {"result", to_json(t.result)},
         {"review", t.review ? to_json(*t.review) : json(nullptr)},
         {"rerank_score", t.rerank_score ? json(*t.rerank_score) : json(nullptr)},
         {"seed", t.seed},
         {"usage", t.usage},
         {"warnings", t.warnings}};
  return j;
}

inline TurnRecord turn_from_json(const json& j, const dsl::GrammarRegistry& reg) {
  TurnRecord t;
  t.iteration = j.at("iteration").get<int>();
  t.thread = j.at("thread").get<int>();
  if (!j.at("parent").is_null()) t.parent = ref_from_json(j["parent"]);
  if (!j.at("proposal").is_null()) t.proposal = proposal_from_json(j["proposal"], reg);
  t.result = result_from_json(j.at("result"));
  if (!j.at("review").is_null()) t.review = review_from_json(j["review"]);
  if (!j.at("rerank_score").is_null()) t.rerank_score = j["rerank_score"].get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.usage = j.at("usage").get<TokenUsage>();
  t.warnings = j.at("warnings").get<std::vector<std::string>>();
  return t;
}

/// Agent-visible view of a turn: prior proposals, results and reviews.
struct History {
  std::vector<TurnRecord> turns;  // turn 0 first, then ancestors by iteration
  json manifest = json::object();

  std::size_t proposal_count() const {
    std::size_t n = 0;
    for (auto& t : turns) n += t.proposal.has_value();
    return n;
  }
  std::size_t review_count() const {
    std::size_t n = 0;
    for (auto& t : turns) n += t.review.has_value();
    return n;
  }
  const TurnRecord* last() const { return turns.empty() ? nullptr : &turns.back(); }
};

}  // namespace aigs::record
