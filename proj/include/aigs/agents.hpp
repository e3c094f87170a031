#pragma once

// Proposal and review agents over the LLM gateway: prompt assembly,
// multi-candidate proposal sampling with bigram-diversity selection, and the
// staged review flow (metric generation, per-metric analysis, merge,
// proposal review).

#include "builtin_templates.hpp"
#include "dsl.hpp"
#include "llm.hpp"
#include "metrics.hpp"
#include "record.hpp"

#include <filesystem>
#include <set>

namespace aigs::agents {

using record::ExperimentResult;
using record::History;
using record::Proposal;
using record::Review;
using record::TurnRecord;

struct AgentConfig {
  int proposal_candidates = 3;
  double proposal_temperature = 0.7;
  double review_temperature = 0.7;
  std::string model = "gpt-4o-2024-05-13";
  int max_tokens = 2048;
  bool enable_code_metrics = false;
};

inline void check_config(const AgentConfig& c) {
  if (c.proposal_candidates < 1) throw ConfigError("proposal_candidates must be >= 1");
  for (double t : {c.proposal_temperature, c.review_temperature})
    if (!std::isfinite(t) || t < 0 || t > 2) throw ConfigError("agent temperatures must lie in [0, 2]");
}

// ============================================================================
// Bigram diversity
// ============================================================================

inline std::set<std::string> word_bigrams(std::string_view text) {
  auto toks = normalized_tokens(text);
  std::set<std::string> out;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) out.insert(toks[i] + " " + toks[i + 1]);
  return out;
}

/// |B(a) & B(b)| / |B(a) | B(b)| over word bigrams. Both empty gives 1,
/// exactly one empty gives 0.
inline double jaccard_bigram(std::string_view a, std::string_view b) {
  auto ba = word_bigrams(a), bb = word_bigrams(b);
  if (ba.empty() && bb.empty()) return 1.0;
  if (ba.empty() || bb.empty()) return 0.0;
  std::size_t inter = 0;
  for (auto& x : ba) inter += bb.count(x);
  return static_cast<double>(inter) / static_cast<double>(ba.size() + bb.size() - inter);
}

/// Index of the smallest similarity; the lowest index wins ties.
inline std::size_t select_most_diverse(const std::vector<double>& similarities) {
  if (similarities.empty()) throw PreconditionError("no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < similarities.size(); ++i)
    if (similarities[i] < similarities[best]) best = i;
  return best;
}

// ============================================================================
// Templates
// ============================================================================

class TemplateError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

inline const std::set<std::string>& placeholder_names() {
  static const std::set<std::string> names = {"topic", "history", "dsl_schema", "review"};
  return names;
}

/// Calls fn(name, begin, end) for every {identifier} occurrence.
template <typename Fn>
void scan_placeholders(std::string_view text, Fn&& fn) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (std::islower(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      fn(std::string(text.substr(i + 1, j - i - 1)), i, j + 1);
      i = j;
    }
  }
}

inline std::string fill_placeholders(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t last = 0;
  scan_placeholders(text, [&](const std::string& name, std::size_t b, std::size_t e) {
    out.append(text.substr(last, b - last));
    auto it = values.find(name);
    out += it == values.end() ? std::string() : it->second;
    last = e;
  });
  out.append(text.substr(last));
  return out;
}

class PromptTemplates {
 public:
  static const std::vector<std::string>& stages() {
    static const std::vector<std::string> s = {"system",         "proposal",        "repair",
                                               "metric_gen",     "metric_analysis", "merge",
                                               "proposal_review", "discovery_candidates", "ablation_plan",
                                               "judge"};
    return s;
  }

  /// Every stage must be present and use only the fixed placeholder set.
  explicit PromptTemplates(std::map<std::string, std::string> texts) : texts_(std::move(texts)) {
    for (auto& s : stages())
      if (!texts_.count(s)) throw TemplateError("missing prompt template '" + s + "'");
    for (auto& [stage, text] : texts_)
      scan_placeholders(text, [&](const std::string& name, std::size_t, std::size_t) {
        if (!placeholder_names().count(name))
          throw TemplateError("template '" + stage + "' uses unknown placeholder {" + name + "}");
      });
  }

  static PromptTemplates defaults() { return PromptTemplates(builtin_templates()); }

  /// Loads <stage>.txt files; stages without a file keep the default text.
  static PromptTemplates from_directory(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) throw TemplateError("template directory not found: " + dir);
    auto texts = builtin_templates();
    for (auto& s : stages()) {
      auto p = std::filesystem::path(dir) / (s + ".txt");
      if (std::filesystem::exists(p)) texts[s] = read_file(p.string());
    }
    return PromptTemplates(std::move(texts));
  }

  const std::string& text(const std::string& stage) const {
    auto it = texts_.find(stage);
    if (it == texts_.end()) throw PreconditionError("unknown prompt stage '" + stage + "'");
    return it->second;
  }

  std::string render(const std::string& stage, const std::map<std::string, std::string>& values) const {
    return fill_placeholders(text(stage), values);
  }

 private:
  std::map<std::string, std::string> texts_;
};

// ============================================================================
// Prompt assembly
// ============================================================================

/// What agents know about the research topic. Never carries ground truth or
/// test-split information.
struct TopicInfo {
  std::string topic_id;
  std::string description;
  std::string environment_brief;
  std::string baseline_summary;
  dsl::GrammarHandle grammar;

  std::string topic_text() const {
    std::string s = description;
    if (!environment_brief.empty()) s += "\n\n" + environment_brief;
    if (!baseline_summary.empty()) s += "\n\nTrivial-method baseline: " + baseline_summary;
    return s;
  }

  std::string dsl_schema() const { return grammar ? dsl::grammar_to_json(*grammar).dump(2) : std::string(); }
};

struct PromptBundle {
  std::string system;
  std::string user;
  std::string history;
  std::string stage;

  bool operator==(const PromptBundle&) const = default;

  std::vector<llm::Message> messages(const std::string& context = {}) const {
    return {{"system", system}, {"user", context.empty() ? user : user + "\n\n" + context}};
  }
};

inline std::string format_number(double v) { return json(v).dump(); }

/// Validation-split scores only.
inline std::string render_scores(const ExperimentResult& r) {
  std::vector<std::string> parts;
  for (auto& s : r.scores_in(record::Split::validation))
    parts.push_back(s.name + " = " + format_number(s.value) + (s.higher_is_better ? " (higher is better)" : " (lower is better)"));
  return parts.empty() ? "(no validation scores)" : join(parts, ", ");
}

inline std::string render_result(const ExperimentResult& r) {
  if (!r.success) return "Experiment failed: " + r.failure_reason;
  return "Validation results: " + render_scores(r);
}

inline std::string render_proposal(const Proposal& p) {
  std::string s = "Idea: " + p.idea + "\nMethodology: " + p.methodology_text + "\nDSL: " +
                  dsl::serialize(p.methodology_dsl) + "\nBaseline turn: " +
                  std::to_string(p.exp_settings.baseline_turn) + "\nHypothesis: " + p.hypothesis +
                  "\nRelated feature: " + p.related_feature;
  if (p.rebuttal) s += "\nRebuttal: " + *p.rebuttal;
  return s;
}

inline std::string render_turn(const TurnRecord& t) {
  std::string s = "## Iteration " + std::to_string(t.iteration) + " (thread " + std::to_string(t.thread) + ")\n";
  if (t.proposal) s += render_proposal(*t.proposal) + "\n";
  s += render_result(t.result);
  if (t.review)
    s += "\nExperiment review: " + t.review->exp_results_review + "\nProposal review: " + t.review->proposal_review;
  return s;
}

/// Proposal/result/review triples of iterations >= 1. Empty when the view
/// holds only turn 0.
inline std::string render_history(const History& h) {
  std::vector<std::string> parts;
  for (auto& t : h.turns)
    if (t.iteration >= 1) parts.push_back(render_turn(t));
  return join(parts, "\n\n");
}

inline std::string latest_review(const History& h) {
  for (auto it = h.turns.rbegin(); it != h.turns.rend(); ++it)
    if (it->review) return it->review->proposal_review;
  return "(none)";
}

inline const TurnRecord* latest_proposal_turn(const History& h) {
  for (auto it = h.turns.rbegin(); it != h.turns.rend(); ++it)
    if (it->proposal) return &*it;
  return nullptr;
}

/// Template variables exposed to scripted responses. Scores are
/// validation-split only.
inline void add_score_vars(std::map<std::string, std::string>& vars, const std::string& prefix,
                           const ExperimentResult& r) {
  if (!r.success) return;
  for (auto& s : r.scores_in(record::Split::validation)) vars[prefix + s.name] = format_number(s.value);
}

inline std::map<std::string, std::string> base_vars(int iteration, int thread, const History& h) {
  std::map<std::string, std::string> vars{{"iteration", std::to_string(iteration)},
                                          {"thread", std::to_string(thread)}};
  if (auto* last = h.last()) add_score_vars(vars, "prev.", last->result);
  return vars;
}

// ============================================================================
// Proposal envelope
// ============================================================================

class ProposalParseError : public Error {
 public:
  using Error::Error;
};

class ProposalError : public Error {
 public:
  using Error::Error;
};

/// Splits "### NAME" sections. Header names are upper-cased.
inline std::map<std::string, std::string> split_sections(std::string_view text) {
  static const std::set<std::string> known = {"IDEA",       "METHODOLOGY",     "DSL",     "SETTINGS",
                                              "HYPOTHESIS", "RELATED FEATURE", "REBUTTAL"};
  std::map<std::string, std::string> out;
  std::string current;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.starts_with("###")) {
      std::string name;
      for (char c : trim(std::string_view(t).substr(3))) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      if (!known.count(name)) throw ProposalParseError("unknown section '" + name + "'");
      if (out.count(name)) throw ProposalParseError("duplicate section '" + name + "'");
      out[name];
      current = name;
    } else if (!current.empty()) {
      out[current] += line + "\n";
    }
  }
  for (auto& [_, v] : out) v = trim(v);
  return out;
}

inline std::string strip_code_fence(const std::string& s) {
  std::istringstream in(s);
  std::string line, out;
  while (std::getline(in, line))
    if (!trim(line).starts_with("```")) out += line + "\n";
  return trim(out);
}

/// Parses and validates one candidate proposal for `iteration`. A rebuttal in
/// iteration 1 is dropped with a warning.
inline Proposal parse_proposal(std::string_view text, int iteration, const std::string& topic_id,
                               const dsl::GrammarRegistry& reg, std::vector<std::string>* warnings = nullptr) {
  auto sec = split_sections(text);
  auto need = [&](const char* name) -> const std::string& {
    auto it = sec.find(name);
    if (it == sec.end() || it->second.empty()) throw ProposalParseError(std::string("missing section '") + name + "'");
    return it->second;
  };
  Proposal p;
  p.idea = need("IDEA");
  p.methodology_text = need("METHODOLOGY");
  p.hypothesis = need("HYPOTHESIS");
  p.related_feature = need("RELATED FEATURE");

  json raw;
  try {
    raw = json::parse(strip_code_fence(need("DSL")));
  } catch (const json::parse_error& e) {
    throw ProposalParseError(std::string("DSL section is not JSON: ") + e.what());
  }
  if (raw.is_object() && raw.value("topic_id", topic_id) != topic_id)
    throw ProposalParseError("DSL names topic '" + raw.value("topic_id", "") + "'");
  if (raw.is_object() && !raw.contains("topic_id")) raw["topic_id"] = topic_id;
  auto v = dsl::validate(raw, reg);
  if (!v.ok()) throw ProposalParseError("DSL invalid: " + dsl::to_string(v.diagnostics));
  p.methodology_dsl = *v.document;

  p.exp_settings.baseline_turn = iteration - 1;
  if (auto it = sec.find("SETTINGS"); it != sec.end()) {
    std::istringstream in(it->second);
    std::string line;
    while (std::getline(in, line)) {
      auto t = trim(line);
      if (t.empty()) continue;
      auto colon = t.find(':');
      if (colon == std::string::npos) throw ProposalParseError("settings line without ':': " + t);
      auto k = trim(std::string_view(t).substr(0, colon)), val = trim(std::string_view(t).substr(colon + 1));
      if (k == "baseline_turn") {
        try {
          std::size_t used = 0;
          p.exp_settings.baseline_turn = std::stoi(val, &used);
          if (used != val.size()) throw std::invalid_argument(val);
        } catch (const std::exception&) {
          throw ProposalParseError("baseline_turn must be an integer, got '" + val + "'");
        }
      } else {
        p.exp_settings.options[k] = val;
      }
    }
  }
  if (p.exp_settings.baseline_turn < 0 || p.exp_settings.baseline_turn >= iteration)
    throw ProposalParseError("baseline_turn " + std::to_string(p.exp_settings.baseline_turn) +
                             " is not an earlier iteration");

  auto reb = sec.find("REBUTTAL");
  bool has_rebuttal = reb != sec.end() && !reb->second.empty();
  if (iteration > 1) {
    if (!has_rebuttal) throw ProposalParseError("missing section 'REBUTTAL'");
    p.rebuttal = reb->second;
  } else if (has_rebuttal && warnings) {
    warnings->push_back("rebuttal ignored in the first iteration");
  }
  return p;
}

// ============================================================================
// ProposalAgent
// ============================================================================

struct Candidate {
  int index = 0;  // 1-based
  std::optional<Proposal> proposal;
  double similarity = 0;
  bool repaired = false;
  std::string error;
};

struct ProposalOutcome {
  Proposal proposal;
  int selected = 0;  // 1-based candidate index
  std::vector<Candidate> candidates;
  std::vector<std::string> warnings;
  PromptBundle prompt;
};

class ProposalAgent {
 public:
  ProposalAgent(llm::Gateway& gateway, const dsl::GrammarRegistry& registry, PromptTemplates templates,
                AgentConfig config = {})
      : gw_(&gateway), reg_(&registry), tmpl_(std::move(templates)), cfg_(config) {
    check_config(cfg_);
  }

  PromptBundle prompt(const TopicInfo& topic, int iteration, const History& h) const {
    auto history = iteration == 1 ? std::string() : render_history(h);
    PromptBundle b;
    b.stage = "proposal";
    b.system = tmpl_.text("system");
    b.history = history;
    b.user = tmpl_.render("proposal", {{"topic", topic.topic_text()},
                                       {"dsl_schema", topic.dsl_schema()},
                                       {"history", history.empty() ? "(none)" : history},
                                       {"review", iteration == 1 ? "(none)" : latest_review(h)}});
    return b;
  }

  /// Samples the configured number of candidates and returns the one least
  /// similar to the previous methodology on this lineage. `attempt` > 0 marks
  /// a retry and changes the request keys.
  ProposalOutcome propose(const TopicInfo& topic, int iteration, int thread, const History& h,
                          TokenUsage* tally = nullptr, int attempt = 0) const {
    if (iteration < 1) throw PreconditionError("proposals start at iteration 1");
    ProposalOutcome out;
    out.prompt = prompt(topic, iteration, h);
    std::string prefix = attempt > 0 ? "retry-" : "";
    auto* prev = latest_proposal_turn(h);
    std::string previous = prev ? prev->proposal->methodology_text : std::string();

    for (int c = 1; c <= cfg_.proposal_candidates; ++c) {
      Candidate cand;
      cand.index = c;
      auto vars = base_vars(iteration, thread, h);
      vars["candidate"] = std::to_string(c);
      auto resp = call(out.prompt.messages(), cfg_.proposal_temperature,
                       llm::make_key("proposal", iteration, thread, prefix + "candidate-" + std::to_string(c)), vars,
                       tally);
      try {
        cand.proposal = parse_proposal(resp.text, iteration, topic.topic_id, *reg_, &out.warnings);
      } catch (const ProposalParseError& first) {
        std::string context = "Parser error: " + std::string(first.what()) + "\n\nPrevious answer:\n" + resp.text;
        PromptBundle repair{out.prompt.system, tmpl_.render("repair", {{"dsl_schema", topic.dsl_schema()}}), "",
                            "repair"};
        auto fixed = call(repair.messages(context), cfg_.proposal_temperature,
                          llm::make_key("proposal", iteration, thread, prefix + "repair-" + std::to_string(c)), vars,
                          tally);
        try {
          cand.proposal = parse_proposal(fixed.text, iteration, topic.topic_id, *reg_, &out.warnings);
          cand.repaired = true;
        } catch (const ProposalParseError& second) {
          cand.error = second.what();
          out.warnings.push_back("candidate " + std::to_string(c) + " unparseable after repair: " + cand.error);
        }
      }
      if (cand.proposal) cand.similarity = jaccard_bigram(cand.proposal->methodology_text, previous);
      out.candidates.push_back(std::move(cand));
    }

    std::vector<double> sims;
    std::vector<int> idx;
    for (auto& c : out.candidates)
      if (c.proposal) {
        sims.push_back(c.similarity);
        idx.push_back(c.index);
      }
    if (sims.empty())
      throw ProposalError("no parseable proposal candidate for turn " + record::to_string({iteration, thread}));
    auto pick = select_most_diverse(sims);
    out.selected = idx[pick];
    out.proposal = *out.candidates[static_cast<std::size_t>(out.selected - 1)].proposal;
    return out;
  }

  const AgentConfig& config() const { return cfg_; }

 private:
  llm::ChatResponse call(std::vector<llm::Message> messages, double temperature, std::string key,
                         std::map<std::string, std::string> vars, TokenUsage* tally) const {
    llm::ChatRequest req;
    req.messages = std::move(messages);
    req.temperature = temperature;
    req.model = cfg_.model;
    req.max_tokens = cfg_.max_tokens;
    req.key = std::move(key);
    req.vars = std::move(vars);
    return gw_->complete(req, llm::kPhasePreFalsification, tally);
  }

  llm::Gateway* gw_;
  const dsl::GrammarRegistry* reg_;
  PromptTemplates tmpl_;
  AgentConfig cfg_;
};

// ============================================================================
// ReviewAgent
// ============================================================================

/// Extracts the outermost JSON object or array from free text.
inline std::optional<json> extract_json(std::string_view text) {
  auto b = text.find_first_of("{[");
  auto e = text.find_last_of("}]");
  if (b == std::string_view::npos || e == std::string_view::npos || e < b) return std::nullopt;
  try {
    return json::parse(text.substr(b, e - b + 1));
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
}

/// Reads a metric list. Builtin names resolve through the catalog; entries
/// with code become agent-generated specs, active only when enabled.
inline std::vector<metrics::MetricSpec> parse_metric_specs(std::string_view text, bool enable_code,
                                                           std::vector<std::string>& warnings) {
  std::vector<metrics::MetricSpec> out;
  auto parsed = extract_json(text);
  json list;
  if (parsed && parsed->is_object() && parsed->contains("metrics") && (*parsed)["metrics"].is_array())
    list = (*parsed)["metrics"];
  else if (parsed && parsed->is_array())
    list = *parsed;
  else {
    warnings.push_back("metric proposal unparseable; no custom metrics");
    return out;
  }
  std::set<std::string> seen;
  for (auto& e : list) {
    std::string name, code, level = "corpus";
    if (e.is_string()) {
      name = e.get<std::string>();
    } else if (e.is_object() && e.contains("name") && e["name"].is_string()) {
      name = e["name"].get<std::string>();
      if (e.contains("code") && e["code"].is_string()) code = e["code"].get<std::string>();
      if (e.contains("level") && e["level"].is_string()) level = e["level"].get<std::string>();
    } else {
      warnings.push_back("metric entry without a name dropped");
      continue;
    }
    if (!seen.insert(name).second) {
      warnings.push_back("duplicate metric '" + name + "' dropped");
      continue;
    }
    if (auto* b = metrics::find_builtin(name)) {
      out.push_back(*b);
    } else if (!code.empty()) {
      out.push_back({name, level == "sample" ? metrics::Level::sample : metrics::Level::corpus, false, code,
                     enable_code});
    } else {
      warnings.push_back("unknown metric '" + name + "' without code dropped");
    }
  }
  return out;
}

struct ReviewOutcome {
  Review review;
  std::vector<metrics::MetricSpec> specs;
  std::map<std::string, json> metric_values;  // name -> {"spec", "value"}
  std::vector<std::string> warnings;
};

class ReviewAgent {
 public:
  /// Executes an active agent-generated metric. No runner ships with the
  /// engine; without one, active code metrics are reported as not executed.
  using CodeMetricRunner = std::function<json(const metrics::MetricSpec&, const std::vector<metrics::TextRecord>&)>;

  ReviewAgent(llm::Gateway& gateway, PromptTemplates templates, AgentConfig config = {},
              metrics::Lexicon lexicon = metrics::bundled_lexicon())
      : gw_(&gateway), tmpl_(std::move(templates)), cfg_(config), lex_(std::move(lexicon)) {
    check_config(cfg_);
  }

  void set_code_runner(CodeMetricRunner r) { runner_ = std::move(r); }

  std::vector<metrics::MetricSpec> propose_custom_metrics(const TopicInfo& topic, int iteration, int thread,
                                                          const ExperimentResult& result,
                                                          std::vector<std::string>& warnings,
                                                          TokenUsage* tally = nullptr) const {
    auto vars = result_vars(iteration, thread, result);
    auto resp = call({{"system", tmpl_.text("system")},
                      {"user", tmpl_.render("metric_gen", {{"topic", topic.topic_text()}}) + "\n\n" +
                                   render_result(result)}},
                     llm::make_key("review", iteration, thread, "metric-gen"), vars, tally);
    return parse_metric_specs(resp.text, cfg_.enable_code_metrics, warnings);
  }

  /// Full staged review: metric generation, one analysis per computed metric,
  /// merge, proposal review. k computed metrics cost k + 3 calls.
  ReviewOutcome review(const TopicInfo& topic, int iteration, int thread, const Proposal& proposal,
                       const ExperimentResult& result, const History& h,
                       const std::vector<metrics::TextRecord>& records, TokenUsage* tally = nullptr) const {
    if (!result.success) throw PreconditionError("review needs a successful experiment result");
    ReviewOutcome out;
    out.specs = propose_custom_metrics(topic, iteration, thread, result, out.warnings, tally);

    std::map<std::string, json> computed;
    for (auto& spec : out.specs) {
      json value = nullptr;
      if (spec.builtin) {
        if (records.empty())
          out.warnings.push_back("metric '" + spec.name + "' skipped: experiment produced no records");
        else
          value = metrics::evaluate_builtin(spec.name, records, lex_);
      } else if (spec.active && runner_) {
        value = runner_(spec, records);
      } else if (spec.active) {
        out.warnings.push_back("metric '" + spec.name + "' is active but no code runner is installed");
      }
      out.metric_values[spec.name] = {{"spec", metrics::to_json(spec)}, {"value", value}};
      if (!value.is_null()) computed[spec.name] = value;
    }

    auto vars = result_vars(iteration, thread, result);
    auto topic_text = topic.topic_text();
    for (auto& [name, value] : computed) {
      auto resp = call({{"system", tmpl_.text("system")},
                        {"user", tmpl_.render("metric_analysis", {{"topic", topic_text}}) + "\n\n" +
                                     render_result(result) + "\n\nMetric " + name + ": " + canonical(value)}},
                       llm::make_key("review", iteration, thread, "metric-" + name), vars, tally);
      out.review.per_metric_analyses[name] = resp.text;
    }
    if (computed.empty()) out.warnings.push_back("no metrics computed; review built from benchmark scores only");

    std::string analyses;
    for (auto& [name, text] : out.review.per_metric_analyses) analyses += "\n\nAnalysis of " + name + ":\n" + text;
    auto merged = call({{"system", tmpl_.text("system")},
                        {"user", tmpl_.render("merge", {{"topic", topic_text}}) + "\n\n" + render_result(result) +
                                     analyses}},
                       llm::make_key("review", iteration, thread, "merge"), vars, tally);
    out.review.exp_results_review = trim(merged.text);

    auto history = render_history(h);
    auto pr = call({{"system", tmpl_.text("system")},
                    {"user", tmpl_.render("proposal_review", {{"topic", topic_text},
                                                              {"history", history.empty() ? "(none)" : history},
                                                              {"review", out.review.exp_results_review}}) +
                                 "\n\nProposal:\n" + render_proposal(proposal)}},
                   llm::make_key("review", iteration, thread, "proposal-review"), vars, tally);
    out.review.proposal_review = trim(pr.text);
    if (out.review.exp_results_review.empty() || out.review.proposal_review.empty())
      throw Error("review agent returned an empty review for turn " + record::to_string({iteration, thread}));
    return out;
  }

 private:
  static std::map<std::string, std::string> result_vars(int iteration, int thread, const ExperimentResult& r) {
    std::map<std::string, std::string> vars{{"iteration", std::to_string(iteration)},
                                            {"thread", std::to_string(thread)}};
    add_score_vars(vars, "score.", r);
    return vars;
  }

  llm::ChatResponse call(std::vector<llm::Message> messages, std::string key, std::map<std::string, std::string> vars,
                         TokenUsage* tally) const {
    llm::ChatRequest req;
    req.messages = std::move(messages);
    req.temperature = cfg_.review_temperature;
    req.model = cfg_.model;
    req.max_tokens = cfg_.max_tokens;
    req.key = std::move(key);
    req.vars = std::move(vars);
    return gw_->complete(req, llm::kPhasePreFalsification, tally);
  }

  llm::Gateway* gw_;
  PromptTemplates tmpl_;
  AgentConfig cfg_;
  metrics::Lexicon lex_;
  CodeMetricRunner runner_;
};

}  // namespace aigs::agents
