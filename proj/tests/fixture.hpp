#pragma once

#include <aigs/aigs.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <random>

namespace aigs::testing {

inline std::string source_path(const std::string& rel) { return std::string(AIGS_SOURCE_DIR) + "/" + rel; }

inline json load_json(const std::string& rel) { return json::parse(read_file(source_path(rel))); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("aigs_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline const dsl::GrammarRegistry& registry() {
  static const dsl::GrammarRegistry* reg = [] {
    auto* r = new dsl::GrammarRegistry;
    dsl::register_builtin_grammars(*r);
    return r;
  }();
  return *reg;
}

inline record::ExperimentResult scores(double val, double test) {
  record::ExperimentResult r;
  r.success = true;
  r.benchmark_scores["validation_quality"] = {"validation_quality", val, record::Split::validation, true};
  r.benchmark_scores["test_quality"] = {"test_quality", test, record::Split::test, true};
  return r;
}

inline dsl::DslDocument filter_doc(std::vector<std::string> principles, std::int64_t threshold) {
  return dsl::validate_or_throw({{"topic_id", "data_engineering"},
                                 {"paradigm", "principled_filtering"},
                                 {"params", {{"principles", principles}, {"threshold", threshold}}}},
                                registry());
}

/// Everything a pipeline needs, wired to a scripted scenario and an
/// in-memory or on-disk log.
struct Harness {
  orchestrator::RunConfig cfg;
  std::shared_ptr<envs::Environment> env;
  std::shared_ptr<llm::RecordingBackend> backend;
  std::shared_ptr<llm::CostLedger> ledger = std::make_shared<llm::CostLedger>();
  std::unique_ptr<llm::Gateway> gateway;
  std::unique_ptr<store::ResearchStore> store;
  std::unique_ptr<orchestrator::Pipeline> pipeline;

  Harness(const json& config, std::shared_ptr<llm::Backend> scripted, store::EventLog log = {},
          std::shared_ptr<envs::Environment> environment = nullptr) {
    cfg = orchestrator::parse_config(config);
    env = environment ? std::move(environment) : std::shared_ptr<envs::Environment>(envs::make_environment(cfg.environment));
    backend = std::make_shared<llm::RecordingBackend>(std::move(scripted));
    gateway = std::make_unique<llm::Gateway>(backend, ledger);
    store = std::make_unique<store::ResearchStore>(std::move(log), registry());
    pipeline = std::make_unique<orchestrator::Pipeline>(cfg, env, *gateway, registry(),
                                                        agents::PromptTemplates::defaults(), *store);
  }
};

inline json planted_config() { return load_json("configs/planted.json"); }

inline std::shared_ptr<llm::Backend> scenario_a() {
  return std::make_shared<llm::ScriptedBackend>(
      llm::ScriptedBackend::from_file(source_path("configs/scenarios/scenarioA.json")));
}

inline std::string cli() { return AIGS_CLI_PATH; }

/// Runs a shell command, returning its exit status.
inline int shell(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

inline std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"keep", "pairs", "that", "\"quoted\"", "line\nbreak", "tab\t",
                                                  "unicode \xc3\xa9\xe2\x9c\x93", "[P1]", "{braces}", "back\\slash"};
  std::uniform_int_distribution<std::size_t> n(1, 6), pick(0, pieces.size() - 1);
  std::string s;
  for (std::size_t i = 0, k = n(rng); i < k; ++i) s += (i ? " " : "") + pieces[pick(rng)];
  return s;
}

inline json random_value(const dsl::ParamSchema& p, std::mt19937_64& rng) {
  using K = dsl::ParamKind;
  switch (p.kind) {
    case K::natural_language_text:
    case K::code_fragment: return random_text(rng);
    case K::natural_language_list: {
      std::size_t lo = p.min_items.value_or(0), hi = std::min<std::size_t>(p.max_items.value_or(8), 8);
      json arr = json::array();
      for (std::size_t i = 0, k = std::uniform_int_distribution<std::size_t>(lo, hi)(rng); i < k; ++i)
        arr.push_back(random_text(rng));
      return arr;
    }
    case K::integer: {
      auto lo = static_cast<std::int64_t>(p.min.value_or(-1000)), hi = static_cast<std::int64_t>(p.max.value_or(1000));
      return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    }
    case K::real: return std::uniform_real_distribution<double>(p.min.value_or(-1e3), p.max.value_or(1e3))(rng);
    case K::flag: return std::bernoulli_distribution(0.5)(rng);
    case K::enumeration: return p.allowed[std::uniform_int_distribution<std::size_t>(0, p.allowed.size() - 1)(rng)];
  }
  return nullptr;
}

// A valid document for a random paradigm of a random topic.
inline json random_document(std::mt19937_64& rng) {
  auto topics = registry().topics();
  auto g = registry().at(topics[std::uniform_int_distribution<std::size_t>(0, topics.size() - 1)(rng)]);
  auto pit = g->paradigms.begin();
  std::advance(pit, std::uniform_int_distribution<std::size_t>(0, g->paradigms.size() - 1)(rng));
  json params = json::object();
  for (auto& p : pit->second.params)
    if (p.required || std::bernoulli_distribution(0.5)(rng)) params[p.name] = random_value(p, rng);
  for (auto& r : pit->second.rules) {
    if (!params.contains(r.lhs) || !params.contains(r.rhs)) continue;
    if (r.kind == "le_list_length") {
      auto n = static_cast<std::int64_t>(params[r.rhs].size());
      params[r.lhs] = std::uniform_int_distribution<std::int64_t>(1, std::max<std::int64_t>(n, 1))(rng);
    } else if (params[r.lhs] > params[r.rhs]) {
      std::swap(params[r.lhs], params[r.rhs]);
    }
  }
  json doc{{"topic_id", g->topic_id}, {"paradigm", pit->first}, {"params", params}};
  if (std::bernoulli_distribution(0.5)(rng)) doc["grammar_version"] = g->version;
  return doc;
}

/// Environment wrapper that stamps a recognisable value on every held-out
/// score, so any leak into prompts or ranking is easy to spot.
inline constexpr double kSentinel = 987654.321;
inline constexpr const char* kSentinelText = "987654";

class SentinelEnv : public envs::Environment {
 public:
  explicit SentinelEnv(std::shared_ptr<envs::Environment> inner) : inner_(std::move(inner)) {}
  const std::string& topic_id() const override { return inner_->topic_id(); }
  std::vector<envs::BenchmarkInfo> benchmarks() const override { return inner_->benchmarks(); }
  record::ExperimentResult execute(const dsl::ExperimentPlan& plan, std::uint64_t seed) const override {
    auto r = inner_->execute(plan, seed);
    for (auto& [_, s] : r.benchmark_scores)
      if (s.split == record::Split::test) s.value = kSentinel;
    return r;
  }
  std::vector<metrics::TextRecord> output_records(const dsl::ExperimentPlan& plan) const override {
    return inner_->output_records(plan);
  }
  std::string agent_brief() const override { return inner_->agent_brief(); }
  bool synthetic() const override { return inner_->synthetic(); }
  json ground_truth() const override { return inner_->ground_truth(); }

 private:
  std::shared_ptr<envs::Environment> inner_;
};

/// Every prompt string and template variable sent during a run, ordered by
/// request key so that thread scheduling does not matter.
inline std::string all_prompt_text(const llm::RecordingBackend& backend) {
  std::multimap<std::string, std::string> by_key;
  for (auto& ex : backend.exchanges()) {
    std::string text;
    for (auto& m : ex.request.messages) text += m.content + "\n";
    for (auto& [k, v] : ex.request.vars) text += k + "=" + v + "\n";
    by_key.emplace(ex.request.key, text);
  }
  std::string out;
  for (auto& [k, text] : by_key) out += k + "\n" + text;
  return out;
}

/// Reads the status recorded for the candidate whose key factor mentions `token`.
inline std::string status_of(const orchestrator::RunOutcome& out, const std::string& token) {
  for (auto& r : out.candidate_results)
    if (r.at("candidate").at("key_factor").get<std::string>().find(token) != std::string::npos)
      return r.at("verdict").at("status").get<std::string>();
  return "missing";
}

/// Brute-force top-k: repeatedly take the highest remaining score, earliest index first.
inline std::vector<std::size_t> brute_top(const std::vector<double>& s, std::size_t k) {
  std::vector<std::size_t> out;
  std::vector<bool> used(s.size(), false);
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t best = s.size();
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!used[i] && (best == s.size() || s[i] > s[best])) best = i;
    used[best] = true;
    out.push_back(best);
  }
  return out;
}

/// Adjacent-pair scan over optional score maps; returns flagged left indices.
inline std::set<std::size_t> naive_flags(const std::vector<std::optional<std::map<std::string, double>>>& seq,
                                         const std::map<std::string, double>& thr) {
  std::set<std::size_t> out;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (!seq[i - 1] || !seq[i]) continue;
    for (auto& [name, t] : thr) {
      if (!seq[i - 1]->count(name) || !seq[i]->count(name)) continue;
      double d = seq[i]->at(name) - seq[i - 1]->at(name);
      if (d >= t || -d >= t) out.insert(i - 1);
    }
  }
  return out;
}

/// Rewrites a log, applying `edit` to each payload, with fresh checksums.
inline store::EventLog rewrite_log(const store::EventLog& log, const std::function<void(store::Event&)>& edit) {
  store::EventLog out;
  for (auto e : log.events()) {
    edit(e);
    out.append(e.type, e.payload);
  }
  return out;
}

}  // namespace aigs::testing
