#pragma once

/**
 * Experiment environments: the contract the orchestrator executes plans
 * against, plus two deterministic synthetic environments with planted
 * ground truth.
 *
 * PlantedFilterEnv (data_engineering)
 *   n records over F binary features laid out as a full factorial: record r
 *   has feature k = bit k of r, and every block of 2^F consecutive records
 *   shares one background quality b. Hidden quality is
 *
 *     q = b + 2 * margin * f_driver
 *
 *   so any feature-based filter sees the same background mean, and keeping
 *   only driver-passing records raises mean quality by exactly `margin`.
 *   Scores are score_scale * (mean q of kept records + N(0, sigma)). The test
 *   benchmark is computed the same way on a disjoint held-out set.
 *
 * ParamSurfaceEnv (language_modeling)
 *   Lower-is-better loss: offset + per-enum-option costs + quadratic bumps on
 *   numeric parameters. The test surface is a positive affine transform of the
 *   validation surface, so both share the unique optimum.
 */

#include "dsl.hpp"
#include "metrics.hpp"
#include "record.hpp"

#include <memory>
#include <random>
#include <regex>

namespace aigs::envs {

using record::ExperimentResult;
using record::Split;

struct BenchmarkInfo {
  std::string name;
  Split split = Split::validation;
  bool higher_is_better = true;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const std::string& topic_id() const = 0;
  virtual std::vector<BenchmarkInfo> benchmarks() const = 0;

  /// Deterministic in (plan, seed).
  virtual ExperimentResult execute(const dsl::ExperimentPlan& plan, std::uint64_t seed) const = 0;

  /// Text records produced by the plan, for corpus/sample metrics.
  virtual std::vector<metrics::TextRecord> output_records(const dsl::ExperimentPlan&) const { return {}; }

  /// Agent-facing description of the environment. Never includes ground truth.
  virtual std::string agent_brief() const { return {}; }

  virtual bool synthetic() const { return false; }

  /// Planted factor descriptor; test oracle only.
  virtual json ground_truth() const { throw PreconditionError("ground_truth() called on a non-synthetic environment"); }
};

inline void check_topic(const Environment& env, const dsl::ExperimentPlan& plan) {
  if (plan.topic_id != env.topic_id())
    throw EnvironmentError("plan topic '" + plan.topic_id + "' does not match environment topic '" + env.topic_id() +
                           "'");
}

/// Standard normal from a seed. Box-Muller over mt19937_64 so results do not
/// depend on the standard library's distribution implementation.
inline double seeded_normal(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  double u1 = unit(), u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// ============================================================================
// PlantedFilterEnv
// ============================================================================

struct Predicate {
  int feature = 0;
  bool value = true;
  std::string description;
};

struct PlantedFilterConfig {
  std::size_t n = 1000;
  int features = 3;
  int driver_feature = 0;
  double margin = 0.3;
  double sigma = 0.02;
  double score_scale = 10.0;
  double base_spread = 0.4;
  std::uint64_t construction_seed = 7;
  std::map<std::string, Predicate> catalog = {
      {"P1", {0, true, "responses walk through their reasoning step by step"}},
      {"P2", {1, true, "responses use a warm, friendly tone"}},
      {"P3", {2, true, "responses include a concrete example"}},
      {"P4", {0, false, "responses stay brief and skip intermediate reasoning"}},
  };
  std::string validation_name = "validation_quality";
  std::string test_name = "test_quality";
};

struct RatedSubset {
  std::vector<std::int64_t> kept;
  std::vector<std::string> warnings;
};

class PlantedFilterEnv : public Environment {
 public:
  struct Item {
    std::int64_t id;
    std::uint32_t flags;
    double quality;
  };

  explicit PlantedFilterEnv(PlantedFilterConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.features < 1 || cfg_.features > 16) throw ConfigError("planted env needs 1..16 features");
    auto cell = std::size_t{1} << cfg_.features;
    if (cfg_.n == 0 || cfg_.n % cell != 0)
      throw ConfigError("planted env size must be a positive multiple of 2^features = " + std::to_string(cell));
    if (cfg_.driver_feature < 0 || cfg_.driver_feature >= cfg_.features)
      throw ConfigError("driver feature out of range");
    if (cfg_.margin <= 0 || cfg_.sigma < 0 || cfg_.base_spread < 0 || cfg_.base_spread + 2 * cfg_.margin > 1.0)
      throw ConfigError("planted env needs margin > 0, sigma >= 0 and base_spread + 2*margin <= 1");
    int drivers = 0;
    for (auto& [id, p] : cfg_.catalog) {
      if (p.feature < 0 || p.feature >= cfg_.features) throw ConfigError("predicate " + id + " references no feature");
      if (p.feature == cfg_.driver_feature && p.value) {
        ++drivers;
        driver_principle_ = id;
      }
    }
    if (drivers != 1) throw ConfigError("planted env needs exactly one catalog predicate selecting the driver");
    validation_ = build(0x76616c);
    test_ = build(0x74657374);
  }

  const std::string& topic_id() const override { return topic_; }

  std::vector<BenchmarkInfo> benchmarks() const override {
    return {{cfg_.validation_name, Split::validation, true}, {cfg_.test_name, Split::test, true}};
  }

  const PlantedFilterConfig& config() const { return cfg_; }
  const std::vector<Item>& validation_items() const { return validation_; }
  const std::vector<Item>& test_items() const { return test_; }

  /// Catalog id embedded as "[ID]" in a principle, if it resolves.
  std::optional<std::string> resolve(const std::string& principle) const {
    static const std::regex token(R"(\[([A-Za-z0-9_]+)\])");
    for (auto it = std::sregex_iterator(principle.begin(), principle.end(), token); it != std::sregex_iterator(); ++it)
      if (cfg_.catalog.count((*it)[1].str())) return (*it)[1].str();
    return std::nullopt;
  }

  /// Number of resolved principles each item passes. Unresolvable principles
  /// never pass and produce a warning.
  std::vector<int> pass_counts(const std::vector<Item>& items, const std::vector<std::string>& principles,
                               std::vector<std::string>* warnings = nullptr) const {
    std::vector<const Predicate*> preds;
    for (auto& p : principles) {
      auto id = resolve(p);
      if (!id) {
        if (warnings) warnings->push_back("principle has no catalog token and never passes: " + p.substr(0, 80));
        preds.push_back(nullptr);
      } else {
        preds.push_back(&cfg_.catalog.at(*id));
      }
    }
    std::vector<int> counts;
    counts.reserve(items.size());
    for (auto& it : items) {
      int c = 0;
      for (auto* pr : preds)
        if (pr && (((it.flags >> pr->feature) & 1u) != 0) == pr->value) ++c;
      counts.push_back(c);
    }
    return counts;
  }

  /// Keeps a record iff it passes at least `threshold` resolved principles.
  RatedSubset rate_records(const std::vector<std::string>& principles, std::int64_t threshold) const {
    if (threshold < 1) throw PreconditionError("threshold must be >= 1");
    RatedSubset out;
    auto counts = pass_counts(validation_, principles, &out.warnings);
    for (std::size_t i = 0; i < validation_.size(); ++i)
      if (counts[i] >= threshold) out.kept.push_back(validation_[i].id);
    return out;
  }

  ExperimentResult execute(const dsl::ExperimentPlan& plan, std::uint64_t seed) const override {
    check_topic(*this, plan);
    auto filter = read_filter(plan);
    ExperimentResult res;
    std::vector<std::string> warnings;
    auto kept_val = select(validation_, filter, &warnings);
    auto kept_test = select(test_, filter, nullptr);
    if (kept_val.empty() || kept_test.empty()) return ExperimentResult::failure("filter kept no records");
    double val = cfg_.score_scale * (mean_quality(validation_, kept_val) +
                                     cfg_.sigma * seeded_normal(derive_seed(seed, {1})));
    double tst = cfg_.score_scale * (mean_quality(test_, kept_test) + cfg_.sigma * seeded_normal(derive_seed(seed, {2})));
    res.benchmark_scores[cfg_.validation_name] = {cfg_.validation_name, val, Split::validation, true};
    res.benchmark_scores[cfg_.test_name] = {cfg_.test_name, tst, Split::test, true};
    std::string ids;
    for (auto i : kept_val) ids += std::to_string(validation_[i].id) + ",";
    res.artifacts["filtered_subset_digest"] = hex64(fnv1a64(ids));
    res.artifacts["kept_count"] = std::to_string(kept_val.size());
    res.logs = join(warnings, "\n");
    return res;
  }

  std::vector<metrics::TextRecord> output_records(const dsl::ExperimentPlan& plan) const override {
    auto filter = read_filter(plan);
    auto kept = select(validation_, filter, nullptr);
    std::vector<int> counts;
    if (filter.principles) counts = pass_counts(validation_, *filter.principles);
    std::vector<metrics::TextRecord> out;
    out.reserve(kept.size());
    for (auto i : kept) {
      auto& it = validation_[i];
      metrics::TextRecord r{it.id, instruction_text(it), response_text(it), std::nullopt};
      r.rating = filter.principles && !filter.principles->empty()
                     ? static_cast<double>(counts[i]) / static_cast<double>(filter.principles->size())
                     : 1.0;
      out.push_back(std::move(r));
    }
    return out;
  }

  std::string agent_brief() const override {
    std::string s = "Candidate principles are matched to the rating model by their bracketed id:\n";
    for (auto& [id, p] : cfg_.catalog) s += "[" + id + "] " + p.description + "\n";
    return s;
  }

  bool synthetic() const override { return true; }

  json ground_truth() const override {
    return {{"kind", "planted_filter"},
            {"driver_principle", driver_principle_},
            {"driver_feature", cfg_.driver_feature},
            {"margin", cfg_.margin}};
  }

  const std::string& driver_principle() const { return driver_principle_; }

 private:
  struct Filter {
    std::optional<std::vector<std::string>> principles;
    std::int64_t threshold = 1;
  };

  Filter read_filter(const dsl::ExperimentPlan& plan) const {
    Filter f;
    for (auto& a : plan.actions) {
      try {
        if (a.name == "rate_each_record") {
          f.principles = a.args.at("principles").get<std::vector<std::string>>();
        } else if (a.name == "keep_if_passes") {
          f.threshold = a.args.at("threshold").get<std::int64_t>();
        } else if (a.name != "run_benchmarks") {
          throw EnvironmentError("planted env cannot run action '" + a.name + "'");
        }
      } catch (const json::exception& e) {
        throw EnvironmentError("malformed arguments for action '" + a.name + "': " + e.what());
      }
    }
    if (f.principles && !plan.find("keep_if_passes")) throw EnvironmentError("rating without keep_if_passes threshold");
    if (f.threshold < 1) throw EnvironmentError("threshold must be >= 1");
    return f;
  }

  std::vector<std::size_t> select(const std::vector<Item>& items, const Filter& f,
                                  std::vector<std::string>* warnings) const {
    std::vector<std::size_t> kept;
    if (!f.principles) {
      for (std::size_t i = 0; i < items.size(); ++i) kept.push_back(i);
      return kept;
    }
    auto counts = pass_counts(items, *f.principles, warnings);
    for (std::size_t i = 0; i < items.size(); ++i)
      if (counts[i] >= f.threshold) kept.push_back(i);
    return kept;
  }

  static double mean_quality(const std::vector<Item>& items, const std::vector<std::size_t>& idx) {
    double s = 0;
    for (auto i : idx) s += items[i].quality;
    return s / static_cast<double>(idx.size());
  }

  std::vector<Item> build(std::uint64_t salt) const {
    std::vector<Item> items;
    items.reserve(cfg_.n);
    for (std::size_t r = 0; r < cfg_.n; ++r) {
      auto block = r >> cfg_.features;
      double u = static_cast<double>(derive_seed(cfg_.construction_seed, {salt, block}) >> 11) * 0x1.0p-53;
      auto flags = static_cast<std::uint32_t>(r & ((std::size_t{1} << cfg_.features) - 1));
      double q = cfg_.base_spread * u + 2.0 * cfg_.margin * ((flags >> cfg_.driver_feature) & 1u);
      std::int64_t id = static_cast<std::int64_t>(salt == 0x76616c ? r : cfg_.n + r);
      items.push_back({id, flags, q});
    }
    return items;
  }

  static std::string instruction_text(const Item& it) {
    static const char* topics[] = {"sorting a list", "planning a trip", "writing a cover letter", "debugging a loop",
                                   "explaining photosynthesis", "budgeting for groceries", "training for a race"};
    return std::string("Give advice on ") + topics[it.id % 7] + ".";
  }

  static std::string response_text(const Item& it) {
    std::string s = "Here is some advice.";
    if (it.flags & 1u) s += " First, break the problem down, then check each step carefully and explain why it works.";
    if (it.flags & 2u) s += " Happy to help, this is a great question and a wonderful goal!";
    if (it.flags & 4u) s += " For example, a concrete case shows the idea in practice.";
    if (it.quality < 0.15) s += " Some parts may be vague or incomplete.";
    return s;
  }

  PlantedFilterConfig cfg_;
  std::string topic_ = "data_engineering";
  std::string driver_principle_;
  std::vector<Item> validation_;
  std::vector<Item> test_;
};

// ============================================================================
// ParamSurfaceEnv
// ============================================================================

struct NumericBump {
  double optimum = 0;
  double weight = 1;
  double scale = 1;
  double default_value = 0;
};

struct ParamSurfaceConfig {
  double offset = 3.0;
  double sigma = 0.01;
  double test_scale = 1.05;
  double test_shift = 0.1;
  std::map<std::string, std::map<std::string, double>> enum_costs = {
      {"heads", {{"low", 0.4}, {"medium", 0.15}, {"high", 0.0}}},
      {"dropout", {{"none", 0.2}, {"low", 0.0}, {"medium", 0.1}, {"high", 0.35}}},
      {"activation", {{"gelu", 0.0}, {"relu", 0.12}, {"swiglu", 0.05}}},
  };
  std::map<std::string, std::string> enum_defaults = {{"activation", "gelu"}};
  std::map<std::string, NumericBump> numeric = {
      {"n_layer", {8, 0.6, 12, 6}},
      {"learning_rate", {0.001, 0.3, 0.01, 0.001}},
  };
  std::string validation_name = "val_loss";
  std::string test_name = "test_loss";
};

class ParamSurfaceEnv : public Environment {
 public:
  explicit ParamSurfaceEnv(ParamSurfaceConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.test_scale <= 0) throw ConfigError("test_scale must be positive");
    for (auto& [name, costs] : cfg_.enum_costs) {
      if (costs.empty()) throw ConfigError("enum '" + name + "' has no options");
      auto best = std::min_element(costs.begin(), costs.end(), [](auto& a, auto& b) { return a.second < b.second; });
      for (auto& [opt, c] : costs)
        if (opt != best->first && c == best->second) throw ConfigError("enum '" + name + "' has a tied optimum");
    }
    for (auto& [name, b] : cfg_.numeric)
      if (b.weight <= 0 || b.scale <= 0) throw ConfigError("numeric bump '" + name + "' needs positive weight/scale");
  }

  const std::string& topic_id() const override { return topic_; }

  std::vector<BenchmarkInfo> benchmarks() const override {
    return {{cfg_.validation_name, Split::validation, false}, {cfg_.test_name, Split::test, false}};
  }

  /// Noise-free validation loss for a parameter assignment.
  double surface(const json& values) const {
    double s = cfg_.offset;
    for (auto& [name, costs] : cfg_.enum_costs) {
      std::string v;
      if (values.contains(name) && values[name].is_string()) {
        v = values[name].get<std::string>();
      } else if (auto d = cfg_.enum_defaults.find(name); d != cfg_.enum_defaults.end()) {
        v = d->second;
      } else {
        throw EnvironmentError("plan does not set '" + name + "'");
      }
      auto it = costs.find(v);
      if (it == costs.end()) throw EnvironmentError("option '" + v + "' is unknown for '" + name + "'");
      s += it->second;
    }
    for (auto& [name, b] : cfg_.numeric) {
      double x = values.contains(name) && values[name].is_number() ? values[name].get<double>() : b.default_value;
      double z = (x - b.optimum) / b.scale;
      s += b.weight * z * z;
    }
    return s;
  }

  ExperimentResult execute(const dsl::ExperimentPlan& plan, std::uint64_t seed) const override {
    check_topic(*this, plan);
    json values = json::object();
    for (auto& a : plan.actions) {
      if (a.name == "configure_model" || a.name == "configure_training") {
        for (auto& [k, v] : a.args.items()) values[k] = v;
      } else if (a.name != "train" && a.name != "run_benchmarks") {
        throw EnvironmentError("surface env cannot run action '" + a.name + "'");
      }
    }
    double base = surface(values);
    ExperimentResult res;
    double val = base + cfg_.sigma * seeded_normal(derive_seed(seed, {1}));
    double tst = cfg_.test_scale * base + cfg_.test_shift + cfg_.sigma * seeded_normal(derive_seed(seed, {2}));
    res.benchmark_scores[cfg_.validation_name] = {cfg_.validation_name, val, Split::validation, false};
    res.benchmark_scores[cfg_.test_name] = {cfg_.test_name, tst, Split::test, false};
    return res;
  }

  std::string agent_brief() const override {
    return "Validation loss is measured after a short pre-training run; lower is better.";
  }

  bool synthetic() const override { return true; }

  json ground_truth() const override {
    json opt = json::object();
    for (auto& [name, costs] : cfg_.enum_costs)
      opt[name] = std::min_element(costs.begin(), costs.end(), [](auto& a, auto& b) { return a.second < b.second; })
                      ->first;
    for (auto& [name, b] : cfg_.numeric) opt[name] = b.optimum;
    return {{"kind", "param_surface"}, {"optimum", opt}};
  }

  const ParamSurfaceConfig& config() const { return cfg_; }

 private:
  ParamSurfaceConfig cfg_;
  std::string topic_ = "language_modeling";
};

// ============================================================================
// Factory
// ============================================================================

/// Builds an environment from its JSON definition:
///   {"kind": "planted_filter", "n": 1000, "margin": 0.3, "sigma": 0.02, ...}
///   {"kind": "param_surface", "offset": 3.0, "enum_costs": {...}, ...}
inline std::unique_ptr<Environment> make_environment(const json& spec) {
  try {
    auto kind = spec.at("kind").get<std::string>();
    if (kind == "planted_filter") {
      PlantedFilterConfig c;
      c.n = spec.value("n", c.n);
      c.features = spec.value("features", c.features);
      c.driver_feature = spec.value("driver_feature", c.driver_feature);
      c.margin = spec.value("margin", c.margin);
      c.sigma = spec.value("sigma", c.sigma);
      c.score_scale = spec.value("score_scale", c.score_scale);
      c.base_spread = spec.value("base_spread", c.base_spread);
      c.construction_seed = spec.value("construction_seed", c.construction_seed);
      c.validation_name = spec.value("validation_name", c.validation_name);
      c.test_name = spec.value("test_name", c.test_name);
      if (spec.contains("catalog")) {
        c.catalog.clear();
        for (auto& [id, p] : spec["catalog"].items())
          c.catalog[id] = {p.at("feature").get<int>(), p.value("value", true), p.value("description", "")};
      }
      return std::make_unique<PlantedFilterEnv>(std::move(c));
    }
    if (kind == "param_surface") {
      ParamSurfaceConfig c;
      c.offset = spec.value("offset", c.offset);
      c.sigma = spec.value("sigma", c.sigma);
      c.test_scale = spec.value("test_scale", c.test_scale);
      c.test_shift = spec.value("test_shift", c.test_shift);
      if (spec.contains("enum_costs")) c.enum_costs = spec["enum_costs"].get<decltype(c.enum_costs)>();
      if (spec.contains("enum_defaults")) c.enum_defaults = spec["enum_defaults"].get<decltype(c.enum_defaults)>();
      if (spec.contains("numeric")) {
        c.numeric.clear();
        for (auto& [name, b] : spec["numeric"].items())
          c.numeric[name] = {b.at("optimum").get<double>(), b.value("weight", 1.0), b.value("scale", 1.0),
                             b.value("default", b.at("optimum").get<double>())};
      }
      return std::make_unique<ParamSurfaceEnv>(std::move(c));
    }
    throw ConfigError("unknown environment kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed environment definition: ") + e.what());
  }
}

}  // namespace aigs::envs
