#pragma once

/**
 * Pipeline orchestration.
 *
 * Pre-falsification: turn 0 runs the trivial method; each of M iterations
 * runs N threads (propose, interpret, execute, review) in parallel, appends
 * their turns in thread order at the barrier, then reranks and keeps the top
 * N_s. Thread j of iteration i >= 2 descends from retained rank
 * ceil(j * N_s / N) of iteration i - 1.
 *
 * Falsification: screen the best final lineage, generate up to K candidates,
 * plan at most T ablations each, run repeated trials and judge.
 *
 * Event log layout:
 *   run_start, turn (0,1), { turn (i,1..N), iteration }*, pre_falsification_complete,
 *   screening, candidates, candidate_result*, run_complete
 *
 * A run resumes from whatever prefix of this sequence is already on disk.
 * Randomness is keyed by (iteration, thread) and appends happen in a fixed
 * order, so a resumed run writes the same bytes as an uninterrupted one.
 */

#include "falsification.hpp"
#include "store.hpp"

#include <limits>

namespace aigs::orchestrator {

using record::TurnRecord;
using record::TurnRef;

class RunAborted : public Error {
 public:
  using Error::Error;
};

// ============================================================================
// Configuration
// ============================================================================

struct RunConfig {
  std::string topic;
  std::string topic_description;
  int M = 1;
  int N = 1;
  int N_s = 1;
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
  json trivial_method;
  json environment;
  agents::AgentConfig agents;
  falsification::FalsificationConfig falsification;
  llm::PriceTable prices;
};

struct TopicDefaults {
  int M, N;
  const char* description;
  json trivial_method;
};

inline std::optional<TopicDefaults> topic_defaults(const std::string& topic) {
  if (topic == "data_engineering")
    return TopicDefaults{5, 32,
                         "Improve the quality of an instruction-tuning dataset by filtering it with natural-language "
                         "principles. Every record is rated against the principles and kept when it passes at least "
                         "`threshold` of them; the kept subset is then scored on the validation benchmarks.",
                         {{"paradigm", "unfiltered"}, {"params", json::object()}}};
  if (topic == "self_instruct")
    return TopicDefaults{15, 1,
                         "Improve instruction-following data synthesized from a seed set by choosing whether to use "
                         "the seed instructions and which requirements the synthesized data must meet.",
                         {{"paradigm", "seeded_synthesis"},
                          {"params", {{"use_seed", true}, {"requirements", {"Follow the seed style."}}}}}};
  if (topic == "language_modeling")
    return TopicDefaults{10, 1,
                         "Pre-train a small language model and minimize its validation loss by choosing a "
                         "constrained architecture and training configuration.",
                         {{"paradigm", "constrained_config"},
                          {"params", {{"n_layer", 6}, {"heads", "medium"}, {"dropout", "none"}, {"learning_rate", 0.001}}}}};
  return std::nullopt;
}

inline json parse_override_value(const std::string& v) {
  try {
    return json::parse(v);
  } catch (const json::parse_error&) {
    return v;
  }
}

/// Applies "a.b.c=value"; the value is read as JSON when it parses, else as a string.
inline void apply_override(json& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  auto path = assignment.substr(0, eq);
  json* node = &cfg;
  std::size_t pos = 0;
  while (true) {
    auto dot = path.find('.', pos);
    auto key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw ConfigError("empty key in override: " + assignment);
    if (!node->is_object()) throw ConfigError("override path crosses a non-object: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = parse_override_value(assignment.substr(eq + 1));
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    pos = dot + 1;
  }
}

inline RunConfig parse_config(const json& j) {
  try {
    RunConfig c;
    c.topic = j.at("topic").get<std::string>();
    auto d = topic_defaults(c.topic);
    c.topic_description = j.value("topic_description", d ? std::string(d->description) : std::string());
    c.M = j.value("M", d ? d->M : 1);
    c.N = j.value("N", d ? d->N : 1);
    c.N_s = j.value("N_s", 1);
    c.seed = j.value("seed", std::uint64_t{0});
    c.parallelism = j.value("parallelism", std::size_t{4});
    c.trivial_method = j.contains("trivial_method") ? j["trivial_method"] : (d ? d->trivial_method : json());
    c.environment = j.value("environment", json());
    if (j.contains("agents")) {
      auto& a = j["agents"];
      c.agents.proposal_candidates = a.value("proposal_candidates", c.agents.proposal_candidates);
      c.agents.proposal_temperature = a.value("proposal_temperature", c.agents.proposal_temperature);
      c.agents.review_temperature = a.value("review_temperature", c.agents.review_temperature);
      c.agents.model = a.value("model", c.agents.model);
      c.agents.max_tokens = a.value("max_tokens", c.agents.max_tokens);
      c.agents.enable_code_metrics = a.value("enable_code_metrics", c.agents.enable_code_metrics);
    }
    if (j.contains("falsification")) {
      auto& f = j["falsification"];
      c.falsification.thresholds = f.value("thresholds", c.falsification.thresholds);
      c.falsification.max_candidates = f.value("K", c.falsification.max_candidates);
      c.falsification.max_plans = f.value("T", c.falsification.max_plans);
      c.falsification.trials_per_arm = f.value("trials_per_arm", c.falsification.trials_per_arm);
      c.falsification.alpha = f.value("alpha", c.falsification.alpha);
    }
    c.falsification.parallelism = c.parallelism;
    if (j.contains("prices")) {
      c.prices.input_per_million = j["prices"].value("input_per_million", c.prices.input_per_million);
      c.prices.output_per_million = j["prices"].value("output_per_million", c.prices.output_per_million);
    }
    if (c.M < 1) throw ConfigError("M must be >= 1");
    if (c.N < 1) throw ConfigError("N must be >= 1");
    if (c.N_s < 1 || c.N_s > c.N) throw ConfigError("N_s must satisfy 1 <= N_s <= N");
    if (c.N % c.N_s != 0) throw ConfigError("N must be a multiple of N_s");
    if (c.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (c.trivial_method.is_null()) throw ConfigError("no trivial_method for topic '" + c.topic + "'");
    if (c.environment.is_null()) throw ConfigError("no environment definition in config");
    agents::check_config(c.agents);
    falsification::check_config(c.falsification);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
}

/// Fully defaulted, canonical form of a config.
inline json to_json(const RunConfig& c) {
  return {{"topic", c.topic},
          {"topic_description", c.topic_description},
          {"M", c.M},
          {"N", c.N},
          {"N_s", c.N_s},
          {"seed", c.seed},
          {"parallelism", c.parallelism},
          {"trivial_method", c.trivial_method},
          {"environment", c.environment},
          {"agents",
           {{"proposal_candidates", c.agents.proposal_candidates},
            {"proposal_temperature", c.agents.proposal_temperature},
            {"review_temperature", c.agents.review_temperature},
            {"model", c.agents.model},
            {"max_tokens", c.agents.max_tokens},
            {"enable_code_metrics", c.agents.enable_code_metrics}}},
          {"falsification",
           {{"thresholds", c.falsification.thresholds},
            {"K", c.falsification.max_candidates},
            {"T", c.falsification.max_plans},
            {"trials_per_arm", c.falsification.trials_per_arm},
            {"alpha", c.falsification.alpha}}},
          {"prices",
           {{"input_per_million", c.prices.input_per_million}, {"output_per_million", c.prices.output_per_million}}}};
}

// ============================================================================
// Multi-sampling
// ============================================================================

/// Retained rank (1-based) for each child j = 1..N: ceil(j * N_s / N).
inline std::vector<int> assign_parents(int N, int N_s) {
  if (N < 1 || N_s < 1 || N_s > N) throw PreconditionError("assign_parents needs 1 <= N_s <= N");
  if (N % N_s != 0) throw PreconditionError("assign_parents needs N to be a multiple of N_s");
  std::vector<int> out;
  for (int j = 1; j <= N; ++j) out.push_back((j * N_s + N - 1) / N);
  return out;
}

inline constexpr double kFailedRank = -std::numeric_limits<double>::infinity();

/// Indices (0-based) of the top `keep` scores: descending, ties to the lower index.
inline std::vector<std::size_t> select_retained(const std::vector<double>& scores, std::size_t keep) {
  if (keep < 1 || keep > scores.size()) throw PreconditionError("select_retained needs 1 <= keep <= |scores|");
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(keep);
  return idx;
}

struct SamplingState {
  int iteration = 0;
  std::vector<double> scores;  // per thread, failed = -inf
  std::vector<int> retained;   // thread numbers in rank order
};

inline json to_json(const SamplingState& s) {
  json scores = json::array();
  for (std::size_t k = 0; k < s.scores.size(); ++k)
    scores.push_back({{"thread", k + 1}, {"rerank_score", std::isfinite(s.scores[k]) ? json(s.scores[k]) : json(nullptr)}});
  return {{"iteration", s.iteration}, {"scores", scores}, {"retained", s.retained}};
}

inline SamplingState state_from_json(const json& j) {
  SamplingState s;
  s.iteration = j.at("iteration").get<int>();
  for (auto& e : j.at("scores"))
    s.scores.push_back(e.at("rerank_score").is_null() ? kFailedRank : e["rerank_score"].get<double>());
  s.retained = j.at("retained").get<std::vector<int>>();
  return s;
}

inline SamplingState rank_iteration(int iteration, const std::vector<TurnRecord>& turns, int N_s) {
  SamplingState s;
  s.iteration = iteration;
  for (auto& t : turns) s.scores.push_back(t.rerank_score ? *t.rerank_score : kFailedRank);
  for (auto i : select_retained(s.scores, static_cast<std::size_t>(N_s))) s.retained.push_back(turns[i].thread);
  return s;
}

// ============================================================================
// Pipeline
// ============================================================================

inline json make_manifest(const RunConfig& cfg, const dsl::GrammarRegistry& reg) {
  json versions = json::object();
  for (auto& t : reg.topics()) versions[t] = reg.at(t)->version;
  return {{"engine_version", kEngineVersion},
          {"config", to_json(cfg)},
          {"grammar_versions", versions},
          {"parent_rule", {{"implemented", "ceil(j*N_s/N)"}, {"literal", "j*floor(N/N_s)+1"}}}};
}

struct CandidateOutcome {
  falsification::DiscoveryCandidate candidate;
  std::vector<falsification::AblationPlan> plans;
  std::vector<falsification::TrialSet> trials;
  falsification::Verdict verdict;
  std::vector<std::string> warnings;
  TokenUsage usage;
};

inline json to_json(const falsification::Verdict& v) {
  json gates = json::array();
  for (auto& g : v.gates) gates.push_back(falsification::to_json(g));
  json j{{"status", falsification::to_string(v.status)},
         {"judge", falsification::to_string(v.judge)},
         {"discovery_text", v.discovery_text},
         {"gates", gates},
         {"weakest_plan", v.gates.empty() ? json(nullptr) : json(v.weakest + 1)},
         {"warnings", v.warnings}};
  return j;
}

inline json to_json(const CandidateOutcome& c) {
  json plans = json::array(), trials = json::array();
  for (auto& p : c.plans) plans.push_back(falsification::to_json(p));
  for (auto& t : c.trials) {
    json abl = json::array(), base = json::array();
    for (auto& x : t.ablation) abl.push_back(falsification::to_json(x));
    for (auto& x : t.baseline) base.push_back(falsification::to_json(x));
    trials.push_back({{"ablation", abl}, {"baseline", base}});
  }
  return {{"candidate", falsification::to_json(c.candidate)},
          {"plans", plans},
          {"trials", trials},
          {"verdict", to_json(c.verdict)},
          {"warnings", c.warnings},
          {"usage", c.usage}};
}

inline falsification::FlaggedPair pair_from_json(const json& j) {
  falsification::FlaggedPair p;
  p.before = record::ref_from_json(j.at("before"));
  p.after = record::ref_from_json(j.at("after"));
  p.deltas = j.at("deltas").get<std::map<std::string, double>>();
  p.max_abs_delta = j.at("max_abs_delta").get<double>();
  return p;
}

inline falsification::DiscoveryCandidate candidate_from_json(const json& j) {
  falsification::DiscoveryCandidate c;
  c.id = j.at("id").get<int>();
  c.key_factor = j.at("key_factor").get<std::string>();
  c.predicted_effect = j.at("predicted_effect").get<std::string>();
  c.evidence = j.at("evidence").get<std::string>();
  c.source = pair_from_json(j.at("source"));
  return c;
}

/// Sums stored usage into a fresh ledger: turn usage under pre-falsification,
/// candidate and plan/judge usage under falsification.
inline void restore_ledger(const std::vector<store::Event>& events, llm::CostLedger& ledger) {
  for (auto& e : events) {
    if (e.type == "turn") ledger.add(llm::kPhasePreFalsification, e.payload.at("usage").get<TokenUsage>());
    if (e.type == "candidates" || e.type == "candidate_result")
      ledger.add(llm::kPhaseFalsification, e.payload.at("usage").get<TokenUsage>());
  }
}

struct RunOutcome {
  bool completed = false;
  std::optional<TurnRef> best;
  std::vector<falsification::FlaggedPair> flagged;
  std::vector<json> candidate_results;
};

class Pipeline {
 public:
  Pipeline(RunConfig config, std::shared_ptr<envs::Environment> env, llm::Gateway& gateway,
           const dsl::GrammarRegistry& registry, agents::PromptTemplates templates, store::ResearchStore& store)
      : cfg_(std::move(config)),
        env_(std::move(env)),
        gw_(&gateway),
        reg_(&registry),
        store_(&store),
        proposer_(gateway, registry, templates, cfg_.agents),
        reviewer_(gateway, templates, cfg_.agents),
        falsifier_(gateway, registry, templates, cfg_.falsification, cfg_.agents) {
    grammar_ = registry.find(cfg_.topic);
    if (!grammar_) throw ConfigError("no grammar registered for topic '" + cfg_.topic + "'");
    if (!env_) throw ConfigError("pipeline needs an environment");
    if (env_->topic_id() != cfg_.topic)
      throw ConfigError("environment serves topic '" + env_->topic_id() + "', config names '" + cfg_.topic + "'");
    bool has_val = false, has_test = false;
    for (auto& b : env_->benchmarks()) (b.split == record::Split::validation ? has_val : has_test) = true;
    if (!has_val || !has_test) throw ConfigError("environment must advertise validation and test benchmarks");
    topic_.topic_id = cfg_.topic;
    topic_.description = cfg_.topic_description;
    topic_.environment_brief = env_->agent_brief();
    topic_.grammar = grammar_;
    gw_->ledger().set_prices(cfg_.prices);
  }

  const RunConfig& config() const { return cfg_; }

  // ---- pre-falsification ---------------------------------------------------

  TurnRecord run_turn_zero() {
    if (auto t = store_->turn({0, 1})) {
      if (!t->result.success) throw RunAborted("turn 0 failed: " + t->result.failure_reason);
      topic_.baseline_summary = agents::render_scores(t->result);
      return *t;
    }
    TurnRecord t;
    t.iteration = 0;
    t.thread = 1;
    t.seed = derive_seed(cfg_.seed, {0, 1});
    try {
      auto raw = cfg_.trivial_method;
      if (raw.is_object() && !raw.contains("topic_id")) raw["topic_id"] = cfg_.topic;
      auto doc = dsl::validate_or_throw(raw, *reg_);
      t.result = env_->execute(dsl::interpret(doc, *grammar_), t.seed);
    } catch (const dsl::ValidationError& e) {
      throw ConfigError(std::string("trivial method invalid: ") + e.what());
    } catch (const EnvironmentError& e) {
      t.result = record::ExperimentResult::failure(e.what());
    }
    if (t.result.success) t.rerank_score = metrics::rerank_score(t.result);
    store_->append_turn(t);
    if (!t.result.success) throw RunAborted("turn 0 failed: " + t.result.failure_reason);
    topic_.baseline_summary = agents::render_scores(t.result);
    return t;
  }

  /// Runs the missing threads of iteration i, appends them in thread order,
  /// then ranks the iteration.
  SamplingState run_iteration(int i, const std::optional<SamplingState>& prev) {
    if (i < 1 || i > cfg_.M) throw PreconditionError("iteration out of range");
    if (i >= 2 && (!prev || prev->iteration != i - 1)) throw PreconditionError("iteration needs the previous state");
    run_turn_zero();

    std::vector<int> ranks;
    if (i >= 2) ranks = assign_parents(cfg_.N, cfg_.N_s);
    auto N = static_cast<std::size_t>(cfg_.N);
    std::vector<std::optional<TurnRecord>> slots(N);
    for (std::size_t k = 0; k < N; ++k) slots[k] = store_->turn({i, static_cast<int>(k) + 1});
    parallel_for(N, cfg_.parallelism, [&](std::size_t k) {
      if (slots[k]) return;
      std::optional<TurnRef> parent;
      if (i >= 2) parent = TurnRef{i - 1, prev->retained[static_cast<std::size_t>(ranks[k] - 1)]};
      slots[k] = run_thread(i, static_cast<int>(k) + 1, parent);
    });
    std::vector<TurnRecord> turns;
    for (std::size_t k = 0; k < N; ++k) {
      if (!store_->turn(slots[k]->ref())) store_->append_turn(*slots[k]);
      turns.push_back(*slots[k]);
    }
    auto state = rank_iteration(i, turns, cfg_.N_s);
    store_->append_event("iteration", to_json(state));
    bool any_ok = std::any_of(turns.begin(), turns.end(), [](auto& t) { return t.result.success; });
    if (!any_ok) throw RunAborted("every thread of iteration " + std::to_string(i) + " failed");
    return state;
  }

  /// One thread: propose (one retry), interpret, execute, review.
  TurnRecord run_thread(int i, int j, std::optional<TurnRef> parent) {
    TurnRecord t;
    t.iteration = i;
    t.thread = j;
    t.parent = parent;
    t.seed = derive_seed(cfg_.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
    auto history = store_->history_before(parent);

    std::optional<agents::ProposalOutcome> po;
    for (int attempt = 0; attempt < 2 && !po; ++attempt) {
      try {
        po = proposer_.propose(topic_, i, j, history, &t.usage, attempt);
      } catch (const agents::ProposalError& e) {
        t.warnings.push_back(std::string(attempt == 0 ? "proposal failed, retrying: " : "proposal failed again: ") +
                             e.what());
      }
    }
    if (!po) {
      t.result = record::ExperimentResult::failure("no valid proposal after one retry");
      return t;
    }
    for (auto& w : po->warnings) t.warnings.push_back(w);
    t.proposal = po->proposal;

    try {
      auto plan = dsl::interpret(t.proposal->methodology_dsl, *grammar_);
      t.result = env_->execute(plan, t.seed);
      if (t.result.success) {
        auto review = reviewer_.review(topic_, i, j, *t.proposal, t.result, history, env_->output_records(plan),
                                       &t.usage);
        t.review = review.review;
        t.result.metric_values = review.metric_values;
        for (auto& w : review.warnings) t.warnings.push_back(w);
      }
    } catch (const EnvironmentError& e) {
      t.result = record::ExperimentResult::failure(e.what());
    } catch (const llm::BackendError&) {
      throw;
    } catch (const Error& e) {
      t.result = record::ExperimentResult::failure(std::string("turn failed: ") + e.what());
      t.review.reset();
    }
    if (t.result.success) t.rerank_score = metrics::rerank_score(t.result);
    return t;
  }

  SamplingState run_pre_falsification() {
    run_turn_zero();
    std::optional<SamplingState> state;
    auto done = store_->events_of("iteration");
    for (int i = 1; i <= cfg_.M; ++i) {
      if (static_cast<std::size_t>(i) <= done.size())
        state = state_from_json(done[static_cast<std::size_t>(i) - 1].payload);
      else
        state = run_iteration(i, state);
    }
    if (store_->events_of("pre_falsification_complete").empty()) {
      TurnRef best{cfg_.M, state->retained.front()};
      json lineage = json::array();
      for (auto& t : store_->lineage(best)) lineage.push_back(record::to_json(t.ref()));
      store_->append_event("pre_falsification_complete", {{"best", record::to_json(best)}, {"lineage", lineage}});
    }
    return *state;
  }

  // ---- falsification -------------------------------------------------------

  RunOutcome run_falsification() {
    RunOutcome out;
    auto pfc = store_->events_of("pre_falsification_complete");
    if (pfc.empty()) throw PreconditionError("falsification needs a completed pre-falsification phase");
    run_turn_zero();
    out.best = record::ref_from_json(pfc.front().payload.at("best"));
    auto lineage = store_->lineage(*out.best);

    auto scr = store_->events_of("screening");
    if (scr.empty()) {
      json flagged = json::array(), warnings = json::array();
      try {
        out.flagged = falsification::screen(lineage, cfg_.falsification);
      } catch (const PreconditionError& e) {
        warnings.push_back(e.what());
      }
      for (auto& p : out.flagged) flagged.push_back(falsification::to_json(p));
      store_->append_event("screening", {{"flagged", flagged}, {"warnings", warnings}});
    } else {
      for (auto& p : scr.front().payload.at("flagged")) out.flagged.push_back(pair_from_json(p));
    }

    std::vector<falsification::DiscoveryCandidate> candidates;
    auto cev = store_->events_of("candidates");
    if (cev.empty()) {
      std::vector<std::string> warnings;
      TokenUsage usage;
      if (out.flagged.empty()) warnings.push_back("no flagged pairs; no discovery candidates");
      else candidates = falsifier_.generate_candidates(out.flagged, lineage, topic_, warnings, &usage);
      json cj = json::array();
      for (auto& c : candidates) cj.push_back(falsification::to_json(c));
      store_->append_event("candidates", {{"candidates", cj}, {"warnings", warnings}, {"usage", usage}});
    } else {
      for (auto& c : cev.front().payload.at("candidates")) candidates.push_back(candidate_from_json(c));
    }

    std::set<int> finished;
    for (auto& e : store_->events_of("candidate_result"))
      finished.insert(e.payload.at("candidate").at("id").get<int>());
    std::vector<std::optional<CandidateOutcome>> results(candidates.size());
    parallel_for(candidates.size(), static_cast<std::size_t>(cfg_.falsification.max_candidates), [&](std::size_t k) {
      if (finished.count(candidates[k].id)) return;
      results[k] = run_candidate(candidates[k], lineage);
    });
    for (auto& r : results)
      if (r) store_->append_event("candidate_result", to_json(*r));
    for (auto& e : store_->events_of("candidate_result")) out.candidate_results.push_back(e.payload);

    if (store_->events_of("run_complete").empty()) {
      std::map<std::string, int> counts{{"verified", 0}, {"falsified", 0}, {"inconclusive", 0}};
      for (auto& r : out.candidate_results) ++counts[r.at("verdict").at("status").get<std::string>()];
      store_->append_event("run_complete", {{"status", "completed"}, {"verdicts", counts}});
    }
    out.completed = true;
    return out;
  }

  CandidateOutcome run_candidate(const falsification::DiscoveryCandidate& cand, const std::vector<TurnRecord>& lineage) {
    CandidateOutcome c;
    c.candidate = cand;
    c.plans = falsifier_.plan_ablations(cand, lineage, topic_, c.warnings, &c.usage);
    for (auto& p : c.plans) c.trials.push_back(falsification::run_trials(p, *env_, *reg_, cfg_.seed, cfg_.parallelism));
    if (c.plans.empty()) {
      c.verdict.candidate_id = cand.id;
      c.verdict.status = falsification::Status::inconclusive;
      c.verdict.discovery_text = "No usable ablation plan for: " + cand.key_factor;
    } else {
      c.verdict = falsifier_.verdict(cand, c.plans, c.trials, topic_, &c.usage);
    }
    return c;
  }

  RunOutcome run() {
    auto starts = store_->events_of("run_start");
    auto manifest = make_manifest(cfg_, *reg_);
    if (starts.empty()) {
      if (!store_->events().empty()) throw ConfigError("log does not begin with run_start");
      store_->append_event("run_start", {{"manifest", manifest}});
    } else if (starts.front().payload.at("manifest").at("config") != manifest.at("config")) {
      throw ConfigError("existing run log was produced with a different configuration");
    }
    restore_ledger(store_->events(), gw_->ledger());
    run_pre_falsification();
    return run_falsification();
  }

  const agents::TopicInfo& topic() const { return topic_; }

 private:
  RunConfig cfg_;
  std::shared_ptr<envs::Environment> env_;
  llm::Gateway* gw_;
  const dsl::GrammarRegistry* reg_;
  store::ResearchStore* store_;
  dsl::GrammarHandle grammar_;
  agents::TopicInfo topic_;
  agents::ProposalAgent proposer_;
  agents::ReviewAgent reviewer_;
  falsification::FalsificationAgent falsifier_;
};

}  // namespace aigs::orchestrator
