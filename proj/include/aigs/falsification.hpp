#pragma once

// Falsification phase: significance screening over the retained lineage,
// discovery-candidate generation, single-factor ablation planning, repeated
// trials, and verdicts that combine a Welch-test gate with a judged decision.
// Also the evaluation-score statistics used to grade discoveries.

#include "agents.hpp"
#include "envs.hpp"
#include "stats.hpp"

namespace aigs::falsification {

using record::Split;
using record::TurnRecord;
using record::TurnRef;

struct FalsificationConfig {
  std::map<std::string, double> thresholds;  // benchmark -> minimum adjacent |delta|
  int max_candidates = 3;                    // K
  int max_plans = 2;                         // T
  int trials_per_arm = 2;
  double alpha = 0.05;
  std::size_t parallelism = 4;
};

inline void check_config(const FalsificationConfig& c) {
  for (auto& [name, t] : c.thresholds)
    if (!(t > 0) || !std::isfinite(t)) throw ConfigError("screening threshold for '" + name + "' must be positive");
  if (c.max_candidates < 1) throw ConfigError("max_candidates (K) must be >= 1");
  if (c.max_plans < 1) throw ConfigError("max_plans (T) must be >= 1");
  if (c.trials_per_arm < 2) throw ConfigError("trials_per_arm must be >= 2");
  if (!(c.alpha > 0 && c.alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
}

// ============================================================================
// Screening
// ============================================================================

struct FlaggedPair {
  TurnRef before;
  TurnRef after;
  std::map<std::string, double> deltas;  // flagged benchmarks only: after - before
  double max_abs_delta = 0;
};

/// Flags position i (pair i, i+1) iff some configured benchmark present on
/// both sides moved by at least its threshold. Missing entries (failed turns)
/// never flag. Ordered by largest |delta| first, then by position.
inline std::vector<std::pair<std::size_t, std::map<std::string, double>>> flag_adjacent(
    const std::vector<std::optional<std::map<std::string, double>>>& seq, const std::map<std::string, double>& thresholds) {
  std::vector<std::pair<std::size_t, std::map<std::string, double>>> out;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    if (!seq[i] || !seq[i + 1]) continue;
    std::map<std::string, double> hit;
    for (auto& [name, thr] : thresholds) {
      auto a = seq[i]->find(name), b = seq[i + 1]->find(name);
      if (a == seq[i]->end() || b == seq[i + 1]->end()) continue;
      double d = b->second - a->second;
      if (std::fabs(d) >= thr) hit[name] = d;
    }
    if (!hit.empty()) out.emplace_back(i, std::move(hit));
  }
  auto maxabs = [](const std::map<std::string, double>& m) {
    double x = 0;
    for (auto& [_, d] : m) x = std::max(x, std::fabs(d));
    return x;
  };
  std::stable_sort(out.begin(), out.end(), [&](auto& a, auto& b) { return maxabs(a.second) > maxabs(b.second); });
  return out;
}

inline std::map<std::string, double> score_map(const record::ExperimentResult& r) {
  std::map<std::string, double> m;
  for (auto& [name, s] : r.benchmark_scores) m[name] = s.value;
  return m;
}

inline std::vector<FlaggedPair> screen(const std::vector<TurnRecord>& lineage, const FalsificationConfig& cfg) {
  if (lineage.empty()) throw PreconditionError("screening needs a non-empty lineage");
  std::vector<std::optional<std::map<std::string, double>>> seq;
  std::size_t ok = 0;
  for (auto& t : lineage) {
    if (t.result.success) {
      seq.emplace_back(score_map(t.result));
      ++ok;
    } else {
      seq.emplace_back(std::nullopt);
    }
  }
  if (ok < 2) throw PreconditionError("screening needs at least two successful turns");
  std::vector<FlaggedPair> out;
  for (auto& [i, deltas] : flag_adjacent(seq, cfg.thresholds)) {
    FlaggedPair p{lineage[i].ref(), lineage[i + 1].ref(), deltas, 0};
    for (auto& [_, d] : deltas) p.max_abs_delta = std::max(p.max_abs_delta, std::fabs(d));
    out.push_back(std::move(p));
  }
  return out;
}

inline json to_json(const FlaggedPair& p) {
  return {{"before", record::to_json(p.before)},
          {"after", record::to_json(p.after)},
          {"deltas", p.deltas},
          {"max_abs_delta", p.max_abs_delta}};
}

// ============================================================================
// Artifacts
// ============================================================================

struct DiscoveryCandidate {
  int id = 0;  // 1-based
  std::string key_factor;
  std::string predicted_effect = "positive";  // positive | negative
  std::string evidence;
  FlaggedPair source;
};

inline json to_json(const DiscoveryCandidate& c) {
  return {{"id", c.id},
          {"key_factor", c.key_factor},
          {"predicted_effect", c.predicted_effect},
          {"evidence", c.evidence},
          {"source", to_json(c.source)}};
}

struct AblationEdit {
  std::string param;
  std::vector<std::size_t> items;  // list items removed
  std::optional<json> value;       // replacement value; null removes the parameter
};

inline json to_json(const AblationEdit& e) {
  json j{{"param", e.param}};
  if (e.value) j["value"] = *e.value;
  else j["items"] = e.items;
  return j;
}

struct AblationPlan {
  int candidate_id = 0;
  int index = 0;  // 1-based
  std::string plan_text;
  TurnRef baseline;
  dsl::DslDocument baseline_dsl;
  dsl::DslDocument ablated_dsl;
  record::ExpSettings settings;
  std::vector<AblationEdit> edits;
  int trials_per_arm = 2;
};

inline json to_json(const AblationPlan& p) {
  json edits = json::array();
  for (auto& e : p.edits) edits.push_back(to_json(e));
  return {{"candidate_id", p.candidate_id},
          {"index", p.index},
          {"plan", p.plan_text},
          {"baseline", record::to_json(p.baseline)},
          {"baseline_dsl", dsl::to_json(p.baseline_dsl)},
          {"ablated_dsl", dsl::to_json(p.ablated_dsl)},
          {"settings", {{"baseline_turn", p.settings.baseline_turn}, {"options", json(p.settings.options)}}},
          {"edits", edits},
          {"trials_per_arm", p.trials_per_arm}};
}

/// Parameters whose values differ between two documents.
inline std::set<std::string> changed_params(const dsl::DslDocument& a, const dsl::DslDocument& b) {
  std::set<std::string> out;
  for (auto& [k, v] : a.params)
    if (!b.has(k) || !(b.at(k) == v)) out.insert(k);
  for (auto& [k, _] : b.params)
    if (!a.has(k)) out.insert(k);
  return out;
}

/// Applies edits to a baseline document and validates the result.
inline dsl::Validated apply_edits(const dsl::DslDocument& base, const std::vector<AblationEdit>& edits,
                                  const dsl::GrammarRegistry& reg) {
  json raw = dsl::to_json(base);
  for (auto& e : edits) {
    auto& params = raw["params"];
    if (e.value) {
      if (e.value->is_null()) params.erase(e.param);
      else params[e.param] = *e.value;
      continue;
    }
    if (!params.contains(e.param) || !params[e.param].is_array())
      return {std::nullopt, {{"params." + e.param, "ablation_target", "edit removes items from a non-list parameter"}}};
    auto& arr = params[e.param];
    std::set<std::size_t> drop(e.items.begin(), e.items.end());
    for (auto i : drop)
      if (i >= arr.size())
        return {std::nullopt, {{"params." + e.param, "ablation_target", "item " + std::to_string(i) + " out of range"}}};
    json kept = json::array();
    for (std::size_t i = 0; i < arr.size(); ++i)
      if (!drop.count(i)) kept.push_back(arr[i]);
    arr = kept;
  }
  return dsl::validate(raw, reg);
}

struct Trial {
  int index = 0;
  std::uint64_t seed = 0;
  record::ExperimentResult result;
  std::optional<double> score;  // rerank-oriented validation score; null when failed
};

inline json to_json(const Trial& t) {
  return {{"index", t.index},
          {"seed", t.seed},
          {"result", record::to_json(t.result)},
          {"score", t.score ? json(*t.score) : json(nullptr)}};
}

struct TrialSet {
  std::vector<Trial> ablation;
  std::vector<Trial> baseline;

  static std::vector<double> usable(const std::vector<Trial>& ts) {
    std::vector<double> out;
    for (auto& t : ts)
      if (t.score) out.push_back(*t.score);
    return out;
  }
};

/// Runs each arm `plan.trials_per_arm` times with distinct derived seeds.
/// Failed executions are kept and excluded from the usable scores.
inline TrialSet run_trials(const AblationPlan& plan, const envs::Environment& env, const dsl::GrammarRegistry& reg,
                           std::uint64_t run_seed, std::size_t parallelism = 4) {
  auto n = static_cast<std::size_t>(plan.trials_per_arm);
  TrialSet ts;
  ts.ablation.resize(n);
  ts.baseline.resize(n);
  auto ablated = dsl::interpret(plan.ablated_dsl, reg);
  auto baseline = dsl::interpret(plan.baseline_dsl, reg);
  parallel_for(2 * n, parallelism, [&](std::size_t k) {
    bool abl = k < n;
    auto t = static_cast<int>(abl ? k : k - n);
    auto& slot = abl ? ts.ablation[static_cast<std::size_t>(t)] : ts.baseline[static_cast<std::size_t>(t)];
    slot.index = t + 1;
    slot.seed = derive_seed(run_seed, {0xfa15ULL, static_cast<std::uint64_t>(plan.candidate_id),
                                       static_cast<std::uint64_t>(plan.index), abl ? 1ULL : 2ULL,
                                       static_cast<std::uint64_t>(t)});
    try {
      slot.result = env.execute(abl ? ablated : baseline, slot.seed);
    } catch (const EnvironmentError& e) {
      slot.result = record::ExperimentResult::failure(e.what());
    }
    if (slot.result.success) slot.score = metrics::rerank_score(slot.result);
  });
  return ts;
}

// ============================================================================
// Verdicts
// ============================================================================

enum class Status { verified, falsified, inconclusive };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::verified: return "verified";
    case Status::falsified: return "falsified";
    default: return "inconclusive";
  }
}

enum class Judgement { affirm, deny, unavailable };

inline const char* to_string(Judgement j) {
  switch (j) {
    case Judgement::affirm: return "affirm";
    case Judgement::deny: return "deny";
    default: return "unavailable";
  }
}

struct Gate {
  bool usable = false;
  stats::WelchResult welch;
  double p_gate = 1.0;      // tail in the predicted direction
  double p_opposite = 1.0;  // the other tail
  bool passed = false;
  bool opposite = false;
};

/// Left-tailed Welch test of ablation vs baseline when the factor is predicted
/// to help (removing it should lower the score); right-tailed otherwise.
inline Gate compute_gate(const std::vector<double>& ablation, const std::vector<double>& baseline,
                         const std::string& predicted_effect, double alpha) {
  Gate g;
  if (ablation.size() < 2 || baseline.size() < 2) return g;
  g.usable = true;
  bool positive = predicted_effect != "negative";
  g.welch = stats::welch_t_test(ablation, baseline, positive ? stats::Tail::left : stats::Tail::right);
  g.p_gate = positive ? g.welch.p_left : g.welch.p_right;
  g.p_opposite = positive ? g.welch.p_right : g.welch.p_left;
  g.passed = g.p_gate < alpha;
  g.opposite = g.p_opposite < alpha;
  return g;
}

/// Verified iff every gate passes and the judge affirms. Falsified iff some
/// gate is decisively opposite or the judge denies. Inconclusive otherwise.
inline Status decide(const std::vector<Gate>& gates, Judgement judge) {
  bool all_pass = !gates.empty();
  for (auto& g : gates) {
    if (g.usable && g.opposite) return Status::falsified;
    all_pass = all_pass && g.usable && g.passed;
  }
  if (judge == Judgement::deny) return Status::falsified;
  if (all_pass && judge == Judgement::affirm) return Status::verified;
  return Status::inconclusive;
}

struct JudgeReply {
  Judgement judgement = Judgement::unavailable;
  std::string discovery;
};

inline JudgeReply parse_judge(std::string_view text) {
  static const std::regex verdict(R"(VERDICT\s*:\s*(AFFIRM|DENY))", std::regex::icase);
  static const std::regex discovery(R"(DISCOVERY\s*:\s*([\s\S]*))", std::regex::icase);
  JudgeReply r;
  std::string s(text);
  std::smatch m;
  if (std::regex_search(s, m, verdict))
    r.judgement = to_lower(m[1].str()) == "affirm" ? Judgement::affirm : Judgement::deny;
  r.discovery = std::regex_search(s, m, discovery) ? trim(m[1].str()) : trim(s);
  return r;
}

struct Verdict {
  int candidate_id = 0;
  std::vector<Gate> gates;  // one per plan
  std::size_t weakest = 0;  // plan index (0-based) carrying the summary statistics
  Judgement judge = Judgement::unavailable;
  Status status = Status::inconclusive;
  std::string discovery_text;
  std::vector<std::string> warnings;

  const Gate* summary() const { return gates.empty() ? nullptr : &gates[weakest]; }
};

/// Picks the usable gate with the largest p in the predicted direction.
inline std::size_t weakest_gate(const std::vector<Gate>& gates) {
  std::size_t w = 0;
  bool found = false;
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (!gates[i].usable) continue;
    if (!found || gates[i].p_gate > gates[w].p_gate) w = i;
    found = true;
  }
  return w;
}

inline json to_json(const Gate& g) {
  if (!g.usable) return {{"usable", false}};
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(x > 0 ? "inf" : "-inf"); };
  return {{"usable", true},     {"t", num(g.welch.t)},         {"df", g.welch.df},
          {"p_left", g.welch.p_left}, {"p_right", g.welch.p_right}, {"p_gate", g.p_gate},
          {"p_opposite", g.p_opposite}, {"passed", g.passed},   {"opposite", g.opposite}};
}

// ============================================================================
// Evaluation statistics
// ============================================================================

struct FalsificationEvalRecord {
  int importance = 0;
  int consistency = 0;
  int correctness = 0;

  FalsificationEvalRecord(int imp, int con, int cor) : importance(imp), consistency(con), correctness(cor) {
    for (int v : {imp, con, cor})
      if (v < 0 || v > 2) throw PreconditionError("evaluation scores must lie in {0, 1, 2}");
  }

  double overall() const { return static_cast<double>(importance + consistency + correctness) / 3.0; }
};

struct DimensionStats {
  double avg = 0, std = 0, min = 0, max = 0, p = 0;
};

/// Per-dimension mean, sample standard deviation, extremes, and the
/// left-tailed Welch p against a constant sample of `baseline_mean` of the
/// same size.
inline std::map<std::string, DimensionStats> aggregate_eval(const std::vector<FalsificationEvalRecord>& records,
                                                            double baseline_mean = 2.0) {
  if (records.size() < 2) throw PreconditionError("aggregate_eval needs at least two records");
  std::map<std::string, std::vector<double>> cols;
  for (auto& r : records) {
    cols["importance"].push_back(r.importance);
    cols["consistency"].push_back(r.consistency);
    cols["correctness"].push_back(r.correctness);
    cols["overall"].push_back(r.overall());
  }
  std::vector<double> baseline(records.size(), baseline_mean);
  std::map<std::string, DimensionStats> out;
  for (auto& [name, xs] : cols) {
    DimensionStats d;
    d.avg = stats::mean(xs);
    d.std = std::sqrt(stats::sample_variance(xs));
    d.min = *std::min_element(xs.begin(), xs.end());
    d.max = *std::max_element(xs.begin(), xs.end());
    d.p = stats::welch_t_test(xs, baseline, stats::Tail::left).p;
    out[name] = d;
  }
  return out;
}

// ============================================================================
// FalsificationAgent
// ============================================================================

inline std::string render_pair(const FlaggedPair& p, const std::vector<TurnRecord>& lineage) {
  std::string s = "Turns " + record::to_string(p.before) + " -> " + record::to_string(p.after) + ":";
  const TurnRecord *a = nullptr, *b = nullptr;
  for (auto& t : lineage) {
    if (t.ref() == p.before) a = &t;
    if (t.ref() == p.after) b = &t;
  }
  auto score = [&](const TurnRecord* t, const std::string& name) -> const record::BenchmarkScore* {
    if (!t) return nullptr;
    auto it = t->result.benchmark_scores.find(name);
    return it == t->result.benchmark_scores.end() ? nullptr : &it->second;
  };
  for (auto& [name, d] : p.deltas) {
    auto *sa = score(a, name), *sb = score(b, name);
    if (!sa || !sb || sa->split != Split::validation) {
      s += "\n- a held-out benchmark changed significantly";
      continue;
    }
    s += "\n- " + name + ": " + agents::format_number(sa->value) + " -> " + agents::format_number(sb->value) +
         " (delta " + agents::format_number(d) + ")";
  }
  return s;
}

inline std::string render_lineage(const std::vector<TurnRecord>& lineage) {
  record::History h{lineage, json::object()};
  auto s = agents::render_history(h);
  return s.empty() ? "(none)" : s;
}

class FalsificationAgent {
 public:
  FalsificationAgent(llm::Gateway& gateway, const dsl::GrammarRegistry& registry, agents::PromptTemplates templates,
                     FalsificationConfig config, agents::AgentConfig agent_config = {})
      : gw_(&gateway), reg_(&registry), tmpl_(std::move(templates)), cfg_(std::move(config)), acfg_(agent_config) {
    check_config(cfg_);
  }

  const FalsificationConfig& config() const { return cfg_; }

  /// One call per flagged pair for the K largest pairs, run in parallel.
  /// Candidates keep pair order and are truncated to K.
  std::vector<DiscoveryCandidate> generate_candidates(const std::vector<FlaggedPair>& flagged,
                                                      const std::vector<TurnRecord>& lineage,
                                                      const agents::TopicInfo& topic,
                                                      std::vector<std::string>& warnings,
                                                      TokenUsage* tally = nullptr) const {
    if (flagged.empty()) throw PreconditionError("candidate generation needs at least one flagged pair");
    auto n = std::min<std::size_t>(flagged.size(), static_cast<std::size_t>(cfg_.max_candidates));
    std::vector<std::vector<DiscoveryCandidate>> per_pair(n);
    std::vector<std::vector<std::string>> per_warn(n);
    std::vector<TokenUsage> usage(n);
    auto user = tmpl_.render("discovery_candidates", {{"topic", topic.topic_text()}, {"history", render_lineage(lineage)}});
    parallel_for(n, cfg_.max_candidates, [&](std::size_t k) {
      auto& p = flagged[k];
      auto resp = call({{"system", tmpl_.text("system")}, {"user", user + "\n\n" + render_pair(p, lineage)}},
                       llm::make_key("discovery", p.after.iteration, p.after.thread, "candidates"), &usage[k]);
      auto parsed = agents::extract_json(resp.text);
      if (!parsed || !parsed->is_object() || !parsed->contains("candidates") || !(*parsed)["candidates"].is_array()) {
        per_warn[k].push_back("candidate response for " + record::to_string(p.after) + " unparseable");
        return;
      }
      for (auto& c : (*parsed)["candidates"]) {
        if (!c.is_object() || !c.contains("key_factor") || !c["key_factor"].is_string() ||
            c["key_factor"].get<std::string>().empty()) {
          per_warn[k].push_back("candidate without key_factor dropped");
          continue;
        }
        DiscoveryCandidate d;
        d.key_factor = c["key_factor"].get<std::string>();
        d.predicted_effect = c.value("predicted_effect", "positive") == "negative" ? "negative" : "positive";
        d.evidence = c.value("evidence", "");
        d.source = p;
        per_pair[k].push_back(std::move(d));
      }
    });
    std::vector<DiscoveryCandidate> out;
    for (std::size_t k = 0; k < n; ++k) {
      if (tally) *tally += usage[k];
      for (auto& w : per_warn[k]) warnings.push_back(w);
      for (auto& d : per_pair[k])
        if (out.size() < static_cast<std::size_t>(cfg_.max_candidates)) {
          d.id = static_cast<int>(out.size()) + 1;
          out.push_back(std::move(d));
        }
    }
    if (out.empty()) warnings.push_back("no discovery candidates produced");
    return out;
  }

  /// At most T plans, each a single-factor edit of a lineage turn's DSL.
  /// Plans that fail validation or change nothing are dropped with a warning.
  std::vector<AblationPlan> plan_ablations(const DiscoveryCandidate& cand, const std::vector<TurnRecord>& lineage,
                                           const agents::TopicInfo& topic, std::vector<std::string>& warnings,
                                           TokenUsage* tally = nullptr) const {
    auto user = tmpl_.render("ablation_plan", {{"topic", topic.topic_text()},
                                               {"dsl_schema", topic.dsl_schema()},
                                               {"history", render_lineage(lineage)}});
    auto context = "Discovery candidate " + std::to_string(cand.id) + ": " + cand.key_factor +
                   "\nPredicted effect: " + cand.predicted_effect + "\nEvidence: " + cand.evidence + "\n" +
                   render_pair(cand.source, lineage);
    auto resp = call({{"system", tmpl_.text("system")}, {"user", user + "\n\n" + context}},
                     llm::make_key("ablation", cand.id, 0, "plan"), tally);
    return parse_plans(resp.text, cand, lineage, warnings);
  }

  std::vector<AblationPlan> parse_plans(std::string_view text, const DiscoveryCandidate& cand,
                                        const std::vector<TurnRecord>& lineage,
                                        std::vector<std::string>& warnings) const {
    std::vector<AblationPlan> out;
    auto tag = "candidate " + std::to_string(cand.id) + ": ";
    auto parsed = agents::extract_json(text);
    if (!parsed || !parsed->is_object() || !parsed->contains("plans") || !(*parsed)["plans"].is_array()) {
      warnings.push_back(tag + "ablation plan response unparseable");
      return out;
    }
    auto& plans = (*parsed)["plans"];
    if (plans.size() > static_cast<std::size_t>(cfg_.max_plans))
      warnings.push_back(tag + std::to_string(plans.size()) + " plans truncated to " + std::to_string(cfg_.max_plans));
    for (std::size_t k = 0; k < plans.size() && k < static_cast<std::size_t>(cfg_.max_plans); ++k) {
      auto& pj = plans[k];
      auto drop = [&](const std::string& why) { warnings.push_back(tag + "plan " + std::to_string(k + 1) + " dropped: " + why); };
      try {
        AblationPlan p;
        p.candidate_id = cand.id;
        p.index = static_cast<int>(k) + 1;
        p.plan_text = pj.value("plan", "");
        p.trials_per_arm = cfg_.trials_per_arm;
        int b = pj.at("baseline_turn").get<int>();
        const TurnRecord* base = nullptr;
        for (auto& t : lineage)
          if (t.iteration == b) base = &t;
        if (!base || !base->proposal || !base->result.success) {
          drop("baseline_turn " + std::to_string(b) + " is not a successful proposal turn on the lineage");
          continue;
        }
        p.baseline = base->ref();
        p.baseline_dsl = base->proposal->methodology_dsl;
        p.settings = base->proposal->exp_settings;
        for (auto& e : pj.at("ablate")) {
          AblationEdit ed;
          ed.param = e.at("param").get<std::string>();
          if (e.contains("value")) ed.value = e["value"];
          else ed.items = e.at("items").get<std::vector<std::size_t>>();
          p.edits.push_back(std::move(ed));
        }
        if (p.edits.empty()) {
          drop("no DSL elements tied to the factor");
          continue;
        }
        auto v = apply_edits(p.baseline_dsl, p.edits, *reg_);
        if (!v.ok()) {
          drop("ablated DSL invalid: " + dsl::to_string(v.diagnostics));
          continue;
        }
        if (*v.document == p.baseline_dsl) {
          drop("ablation leaves the DSL unchanged");
          continue;
        }
        p.ablated_dsl = *v.document;
        out.push_back(std::move(p));
      } catch (const json::exception& e) {
        drop(std::string("malformed plan: ") + e.what());
      }
    }
    if (out.empty()) warnings.push_back(tag + "no usable ablation plans");
    return out;
  }

  /// Gates every plan, asks the judge once, and applies the decision rule.
  /// A failing judge call leaves the verdict inconclusive with gates kept.
  Verdict verdict(const DiscoveryCandidate& cand, const std::vector<AblationPlan>& plans,
                  const std::vector<TrialSet>& trials, const agents::TopicInfo& topic,
                  TokenUsage* tally = nullptr) const {
    Verdict v;
    v.candidate_id = cand.id;
    bool any_usable = false;
    for (std::size_t k = 0; k < plans.size(); ++k) {
      auto g = compute_gate(TrialSet::usable(trials[k].ablation), TrialSet::usable(trials[k].baseline),
                            cand.predicted_effect, cfg_.alpha);
      if (!g.usable) v.warnings.push_back("plan " + std::to_string(k + 1) + ": fewer than two usable trials per arm");
      any_usable = any_usable || g.usable;
      v.gates.push_back(g);
    }
    v.weakest = weakest_gate(v.gates);
    if (!any_usable) {
      v.status = Status::inconclusive;
      v.discovery_text = "No usable ablation evidence for: " + cand.key_factor;
      return v;
    }
    try {
      auto resp = call({{"system", tmpl_.text("system")},
                        {"user", tmpl_.render("judge", {{"topic", topic.topic_text()}}) + "\n\n" +
                                     render_evidence(cand, plans, trials, v.gates)}},
                       llm::make_key("judge", cand.id, 0, "verdict"), tally);
      auto reply = parse_judge(resp.text);
      v.judge = reply.judgement;
      v.discovery_text = reply.discovery;
      if (v.judge == Judgement::unavailable) v.warnings.push_back("judge response carried no verdict");
    } catch (const llm::BackendError& e) {
      v.judge = Judgement::unavailable;
      v.warnings.push_back(std::string("judge unavailable: ") + e.what());
      v.discovery_text = cand.key_factor;
    }
    v.status = decide(v.gates, v.judge);
    return v;
  }

  static std::string render_evidence(const DiscoveryCandidate& cand, const std::vector<AblationPlan>& plans,
                                     const std::vector<TrialSet>& trials, const std::vector<Gate>& gates) {
    std::string s = "Discovery candidate: " + cand.key_factor + "\nPredicted effect: " + cand.predicted_effect;
    auto scores = [](const std::vector<Trial>& ts) {
      std::vector<std::string> parts;
      for (auto& t : ts)
        parts.push_back("trial " + std::to_string(t.index) + ": " +
                        (t.score ? agents::render_scores(t.result) : "failed (" + t.result.failure_reason + ")"));
      return join(parts, "; ");
    };
    for (std::size_t k = 0; k < plans.size(); ++k) {
      auto& p = plans[k];
      s += "\n\nPlan " + std::to_string(p.index) + ": " + p.plan_text + "\nBaseline turn " +
           record::to_string(p.baseline) + " DSL: " + dsl::serialize(p.baseline_dsl) +
           "\nAblated DSL: " + dsl::serialize(p.ablated_dsl) + "\nAblation arm: " + scores(trials[k].ablation) +
           "\nBaseline arm: " + scores(trials[k].baseline);
      if (gates[k].usable)
        s += "\nWelch t = " + agents::format_number(gates[k].welch.t) + ", df = " +
             agents::format_number(gates[k].welch.df) + ", p (predicted direction) = " +
             agents::format_number(gates[k].p_gate);
    }
    return s;
  }

 private:
  llm::ChatResponse call(std::vector<llm::Message> messages, std::string key, TokenUsage* tally) const {
    llm::ChatRequest req;
    req.messages = std::move(messages);
    req.temperature = acfg_.review_temperature;
    req.model = acfg_.model;
    req.max_tokens = acfg_.max_tokens;
    req.key = std::move(key);
    return gw_->complete(req, llm::kPhaseFalsification, tally);
  }

  llm::Gateway* gw_;
  const dsl::GrammarRegistry* reg_;
  agents::PromptTemplates tmpl_;
  FalsificationConfig cfg_;
  agents::AgentConfig acfg_;
};

}  // namespace aigs::falsification
