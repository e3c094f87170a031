#pragma once

/**
 * DSL core: per-topic grammars, document validation, canonical
 * serialization, and interpretation into experiment plans.
 *
 * A Grammar is plain data. Each paradigm declares its parameter schemas,
 * named cross-parameter rules, and an action template list that the
 * interpreter expands into an ExperimentPlan. Adding a topic means loading
 * another grammar file; no engine code changes.
 *
 *   GrammarRegistry reg;
 *   reg.register_grammar(load_grammar_file("grammars/data_engineering.json"));
 *   auto checked = validate(raw_json, reg);
 *   if (!checked.ok()) { for (auto& d : checked.diagnostics) ...; }
 *   ExperimentPlan plan = interpret(*checked.document, reg);
 */

#include "common.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <variant>

namespace aigs::dsl {

inline constexpr std::size_t kMaxTextLength = 8192;

enum class ParamKind {
  natural_language_text,
  natural_language_list,
  integer,
  real,
  flag,
  enumeration,
  code_fragment,
};

inline const char* to_string(ParamKind k) {
  switch (k) {
    case ParamKind::natural_language_text: return "natural_language_text";
    case ParamKind::natural_language_list: return "natural_language_list";
    case ParamKind::integer: return "integer";
    case ParamKind::real: return "real";
    case ParamKind::flag: return "flag";
    case ParamKind::enumeration: return "enum";
    case ParamKind::code_fragment: return "code_fragment";
  }
  return "?";
}

inline std::optional<ParamKind> parse_kind(std::string_view s) {
  for (auto k : {ParamKind::natural_language_text, ParamKind::natural_language_list, ParamKind::integer,
                 ParamKind::real, ParamKind::flag, ParamKind::enumeration, ParamKind::code_fragment})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct ParamSchema {
  std::string name;
  ParamKind kind = ParamKind::natural_language_text;
  bool required = true;
  std::optional<double> min;                 // numeric kinds
  std::optional<double> max;
  std::optional<std::size_t> min_items;      // list kind
  std::optional<std::size_t> max_items;
  std::vector<std::string> allowed;          // enum kind
};

/// Named cross-parameter predicate.
///   le_list_length: integer `lhs` <= number of items in list `rhs`
///   le:             numeric `lhs` <= numeric `rhs`
struct CrossRule {
  std::string name;
  std::string kind;
  std::string lhs;
  std::string rhs;
  std::string message;
};

/// One step of a paradigm's plan. Arg values that are strings starting with
/// '$' reference a parameter; anything else is a literal. `when` names a flag
/// parameter gating the action ("!name" negates).
struct ActionTemplate {
  std::string action;
  std::map<std::string, json> args;
  std::string when;
};

struct Paradigm {
  std::string name;
  std::vector<ParamSchema> params;
  std::vector<CrossRule> rules;
  std::vector<ActionTemplate> plan;

  const ParamSchema* find(std::string_view param) const {
    for (auto& p : params)
      if (p.name == param) return &p;
    return nullptr;
  }
};

struct Grammar {
  std::string topic_id;
  int version = 1;
  std::map<std::string, Paradigm> paradigms;
  std::vector<std::string> actions;  // closed action catalog for the topic
};

class GrammarError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// ============================================================================
// Values and documents
// ============================================================================

using Value = std::variant<std::string, std::vector<std::string>, std::int64_t, double, bool>;

struct TypedValue {
  ParamKind kind = ParamKind::natural_language_text;
  Value value;
  bool operator==(const TypedValue&) const = default;
};

struct DslDocument {
  std::string topic_id;
  std::string paradigm;
  int grammar_version = 1;
  std::map<std::string, TypedValue> params;

  bool operator==(const DslDocument&) const = default;

  bool has(const std::string& name) const { return params.count(name) != 0; }
  const std::string& text(const std::string& name) const { return std::get<std::string>(at(name).value); }
  const std::vector<std::string>& list(const std::string& name) const {
    return std::get<std::vector<std::string>>(at(name).value);
  }
  std::int64_t integer(const std::string& name) const { return std::get<std::int64_t>(at(name).value); }
  double real(const std::string& name) const {
    auto& v = at(name).value;
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
  }
  bool flag(const std::string& name) const { return std::get<bool>(at(name).value); }

  const TypedValue& at(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw PreconditionError("document has no parameter '" + name + "'");
    return it->second;
  }
};

struct Diagnostic {
  std::string path;
  std::string rule;
  std::string message;
};

inline std::string to_string(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (auto& d : ds) {
    if (!out.empty()) out += "; ";
    out += d.path + " [" + d.rule + "] " + d.message;
  }
  return out;
}

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> ds)
      : Error("DSL validation failed: " + to_string(ds)), diagnostics(std::move(ds)) {}
  std::vector<Diagnostic> diagnostics;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t byte_offset, const std::string& what)
      : Error("parse error at byte " + std::to_string(byte_offset) + ": " + what), offset(byte_offset) {}
  std::size_t offset;
};

class InterpretError : public Error {
 public:
  using Error::Error;
};

// ============================================================================
// Grammar (de)serialization and checks
// ============================================================================

inline json param_schema_to_json(const ParamSchema& p) {
  json j{{"name", p.name}, {"kind", to_string(p.kind)}, {"required", p.required}};
  if (p.min) j["min"] = *p.min;
  if (p.max) j["max"] = *p.max;
  if (p.min_items) j["min_items"] = *p.min_items;
  if (p.max_items) j["max_items"] = *p.max_items;
  if (!p.allowed.empty()) j["allowed"] = p.allowed;
  return j;
}

inline json grammar_to_json(const Grammar& g) {
  json paradigms = json::object();
  for (auto& [name, p] : g.paradigms) {
    json params = json::array();
    for (auto& s : p.params) params.push_back(param_schema_to_json(s));
    json rules = json::array();
    for (auto& r : p.rules)
      rules.push_back({{"name", r.name}, {"kind", r.kind}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"message", r.message}});
    json plan = json::array();
    for (auto& a : p.plan) {
      json aj{{"action", a.action}, {"args", json(a.args)}};
      if (!a.when.empty()) aj["when"] = a.when;
      plan.push_back(std::move(aj));
    }
    paradigms[name] = {{"params", params}, {"rules", rules}, {"plan", plan}};
  }
  return {{"topic_id", g.topic_id}, {"version", g.version}, {"paradigms", paradigms}, {"actions", g.actions}};
}

/// Throws GrammarError naming every malformed piece.
inline void check_grammar(const Grammar& g) {
  std::vector<std::string> issues;
  if (g.topic_id.empty()) issues.push_back("topic_id is empty");
  if (g.version < 1) issues.push_back("version must be >= 1");
  if (g.paradigms.empty()) issues.push_back("grammar declares no paradigms");
  std::set<std::string> catalog(g.actions.begin(), g.actions.end());
  if (catalog.size() != g.actions.size()) issues.push_back("action catalog has duplicates");
  for (auto& [name, p] : g.paradigms) {
    std::string at = "paradigm '" + name + "': ";
    if (p.params.empty()) issues.push_back(at + "needs at least one parameter schema");
    std::set<std::string> seen;
    for (auto& s : p.params) {
      if (s.name.empty()) issues.push_back(at + "parameter with empty name");
      if (!seen.insert(s.name).second) issues.push_back(at + "duplicate parameter '" + s.name + "'");
      if (s.min && s.max && *s.min > *s.max) issues.push_back(at + "'" + s.name + "' has min > max");
      if (s.min_items && s.max_items && *s.min_items > *s.max_items)
        issues.push_back(at + "'" + s.name + "' has min_items > max_items");
      if (s.kind == ParamKind::enumeration && s.allowed.empty())
        issues.push_back(at + "enum '" + s.name + "' has no allowed values");
    }
    for (auto& r : p.rules) {
      auto* l = p.find(r.lhs);
      auto* rr = p.find(r.rhs);
      if (!l || !rr) {
        issues.push_back(at + "rule '" + r.name + "' references unknown parameter");
        continue;
      }
      auto numeric = [](ParamKind k) { return k == ParamKind::integer || k == ParamKind::real; };
      if (r.kind == "le_list_length") {
        if (l->kind != ParamKind::integer || rr->kind != ParamKind::natural_language_list)
          issues.push_back(at + "rule '" + r.name + "' needs integer lhs and list rhs");
      } else if (r.kind == "le") {
        if (!numeric(l->kind) || !numeric(rr->kind))
          issues.push_back(at + "rule '" + r.name + "' needs numeric operands");
      } else {
        issues.push_back(at + "rule '" + r.name + "' has unknown kind '" + r.kind + "'");
      }
    }
    for (auto& a : p.plan) {
      if (!catalog.count(a.action)) issues.push_back(at + "action '" + a.action + "' not in catalog");
      for (auto& [arg, v] : a.args)
        if (v.is_string() && v.get<std::string>().starts_with("$") && !p.find(v.get<std::string>().substr(1)))
          issues.push_back(at + "action '" + a.action + "' references unknown parameter " + v.get<std::string>());
      if (!a.when.empty()) {
        auto ref = a.when[0] == '!' ? a.when.substr(1) : a.when;
        auto* f = p.find(ref);
        if (!f || f->kind != ParamKind::flag)
          issues.push_back(at + "action '" + a.action + "' gated on non-flag '" + ref + "'");
      }
    }
  }
  if (!issues.empty()) throw GrammarError("malformed grammar '" + g.topic_id + "': " + join(issues, "; "));
}

inline Grammar grammar_from_json(const json& j) {
  try {
    Grammar g;
    g.topic_id = j.at("topic_id").get<std::string>();
    g.version = j.value("version", 1);
    g.actions = j.at("actions").get<std::vector<std::string>>();
    for (auto& [name, pj] : j.at("paradigms").items()) {
      Paradigm p;
      p.name = name;
      for (auto& sj : pj.at("params")) {
        ParamSchema s;
        s.name = sj.at("name").get<std::string>();
        auto kind = parse_kind(sj.at("kind").get<std::string>());
        if (!kind) throw GrammarError("unknown parameter kind '" + sj.at("kind").get<std::string>() + "'");
        s.kind = *kind;
        s.required = sj.value("required", true);
        if (sj.contains("min")) s.min = sj["min"].get<double>();
        if (sj.contains("max")) s.max = sj["max"].get<double>();
        if (sj.contains("min_items")) s.min_items = sj["min_items"].get<std::size_t>();
        if (sj.contains("max_items")) s.max_items = sj["max_items"].get<std::size_t>();
        if (sj.contains("allowed")) s.allowed = sj["allowed"].get<std::vector<std::string>>();
        p.params.push_back(std::move(s));
      }
      for (auto& rj : pj.value("rules", json::array()))
        p.rules.push_back({rj.at("name"), rj.at("kind"), rj.at("lhs"), rj.at("rhs"), rj.value("message", "")});
      for (auto& aj : pj.value("plan", json::array())) {
        ActionTemplate a;
        a.action = aj.at("action").get<std::string>();
        if (aj.contains("args"))
          for (auto& [k, v] : aj["args"].items()) a.args[k] = v;
        a.when = aj.value("when", "");
        p.plan.push_back(std::move(a));
      }
      g.paradigms.emplace(name, std::move(p));
    }
    return g;
  } catch (const json::exception& e) {
    throw GrammarError(std::string("malformed grammar file: ") + e.what());
  }
}

inline Grammar load_grammar_file(const std::string& path) { return grammar_from_json(json::parse(read_file(path))); }

// ============================================================================
// Registry
// ============================================================================

using GrammarHandle = std::shared_ptr<const Grammar>;

/// Topic id -> grammar. Entries are immutable once registered; lookups are
/// safe from any thread.
class GrammarRegistry {
 public:
  GrammarHandle register_grammar(Grammar g) {
    check_grammar(g);
    std::unique_lock lock(mu_);
    if (grammars_.count(g.topic_id)) throw GrammarError("topic '" + g.topic_id + "' is already registered");
    auto handle = std::make_shared<const Grammar>(std::move(g));
    grammars_.emplace(handle->topic_id, handle);
    return handle;
  }

  GrammarHandle find(const std::string& topic) const {
    std::shared_lock lock(mu_);
    auto it = grammars_.find(topic);
    return it == grammars_.end() ? nullptr : it->second;
  }

  GrammarHandle at(const std::string& topic) const {
    auto g = find(topic);
    if (!g) throw ConfigError("no grammar registered for topic '" + topic + "'");
    return g;
  }

  std::vector<std::string> topics() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (auto& [k, _] : grammars_) out.push_back(k);
    return out;
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, GrammarHandle> grammars_;
};

// ============================================================================
// Validation
// ============================================================================

struct Validated {
  std::optional<DslDocument> document;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return document.has_value(); }
};

namespace detail {

inline bool check_text(const json& v, const std::string& path, std::vector<Diagnostic>& out) {
  auto& s = v.get_ref<const std::string&>();
  if (s.empty() || s.size() > kMaxTextLength) {
    out.push_back({path, "text_length", "text must be 1.." + std::to_string(kMaxTextLength) + " characters, got " +
                                            std::to_string(s.size())});
    return false;
  }
  return true;
}

inline std::optional<TypedValue> check_value(const ParamSchema& s, const json& v, const std::string& path,
                                             std::vector<Diagnostic>& out) {
  auto mismatch = [&](const char* expected) {
    out.push_back({path, "type_mismatch", std::string("expected ") + expected + " for " + to_string(s.kind) +
                                              " parameter, got " + v.type_name()});
    return std::nullopt;
  };
  auto bounds = [&](double x) {
    if ((s.min && x < *s.min) || (s.max && x > *s.max)) {
      std::ostringstream msg;
      msg << "value " << x << " outside [" << (s.min ? std::to_string(*s.min) : "-inf") << ", "
          << (s.max ? std::to_string(*s.max) : "+inf") << "]";
      out.push_back({path, "out_of_bounds", msg.str()});
      return false;
    }
    return true;
  };
  switch (s.kind) {
    case ParamKind::natural_language_text:
    case ParamKind::code_fragment: {
      if (!v.is_string()) return mismatch("string");
      if (!check_text(v, path, out)) return std::nullopt;
      return TypedValue{s.kind, v.get<std::string>()};
    }
    case ParamKind::enumeration: {
      if (!v.is_string()) return mismatch("string");
      auto tok = v.get<std::string>();
      if (std::find(s.allowed.begin(), s.allowed.end(), tok) == s.allowed.end()) {
        out.push_back({path, "enum_membership", "'" + tok + "' not in {" + join(s.allowed, ", ") + "}"});
        return std::nullopt;
      }
      return TypedValue{s.kind, tok};
    }
    case ParamKind::natural_language_list: {
      if (!v.is_array()) return mismatch("array of strings");
      std::vector<std::string> items;
      bool good = true;
      for (std::size_t i = 0; i < v.size(); ++i) {
        auto ip = path + "[" + std::to_string(i) + "]";
        if (!v[i].is_string()) {
          out.push_back({ip, "type_mismatch", std::string("expected string list item, got ") + v[i].type_name()});
          good = false;
          continue;
        }
        good = check_text(v[i], ip, out) && good;
        items.push_back(v[i].get<std::string>());
      }
      if ((s.min_items && v.size() < *s.min_items) || (s.max_items && v.size() > *s.max_items)) {
        out.push_back({path, "list_length", "list has " + std::to_string(v.size()) + " items, allowed " +
                                                std::to_string(s.min_items.value_or(0)) + ".." +
                                                (s.max_items ? std::to_string(*s.max_items) : std::string("inf"))});
        good = false;
      }
      if (!good) return std::nullopt;
      return TypedValue{s.kind, std::move(items)};
    }
    case ParamKind::integer: {
      if (!v.is_number_integer()) return mismatch("integer");
      auto x = v.get<std::int64_t>();
      if (!bounds(static_cast<double>(x))) return std::nullopt;
      return TypedValue{s.kind, x};
    }
    case ParamKind::real: {
      if (!v.is_number()) return mismatch("number");
      double x = v.get<double>();
      if (!std::isfinite(x)) {
        out.push_back({path, "type_mismatch", "real must be finite"});
        return std::nullopt;
      }
      if (!bounds(x)) return std::nullopt;
      return TypedValue{s.kind, x};
    }
    case ParamKind::flag: {
      if (!v.is_boolean()) return mismatch("boolean");
      return TypedValue{s.kind, v.get<bool>()};
    }
  }
  return std::nullopt;
}

inline double numeric(const TypedValue& v) {
  if (auto* i = std::get_if<std::int64_t>(&v.value)) return static_cast<double>(*i);
  return std::get<double>(v.value);
}

}  // namespace detail

/// Validates a raw JSON document {topic_id, paradigm, params, [grammar_version]}
/// against the registered grammar. Every violated rule is reported.
inline Validated validate(const json& raw, const Grammar& g) {
  Validated res;
  auto& out = res.diagnostics;
  if (!raw.is_object()) {
    out.push_back({"$", "not_object", "document must be a JSON object"});
    return res;
  }
  for (auto& [k, _] : raw.items())
    if (k != "topic_id" && k != "paradigm" && k != "params" && k != "grammar_version")
      out.push_back({k, "unknown_field", "unexpected top-level field '" + k + "'"});
  if (!raw.contains("topic_id") || !raw["topic_id"].is_string() || raw["topic_id"] != g.topic_id)
    out.push_back({"topic_id", "topic_mismatch", "document topic does not match grammar '" + g.topic_id + "'"});
  if (raw.contains("grammar_version") &&
      (!raw["grammar_version"].is_number_integer() || raw["grammar_version"].get<int>() != g.version))
    out.push_back({"grammar_version", "grammar_version",
                   "document targets a different grammar version than registered v" + std::to_string(g.version)});
  if (!raw.contains("paradigm") || !raw["paradigm"].is_string()) {
    out.push_back({"paradigm", "missing_required", "paradigm is required"});
    return res;
  }
  auto pname = raw["paradigm"].get<std::string>();
  auto pit = g.paradigms.find(pname);
  if (pit == g.paradigms.end()) {
    std::vector<std::string> known;
    for (auto& [k, _] : g.paradigms) known.push_back(k);
    out.push_back({"paradigm", "unknown_paradigm", "'" + pname + "' is not one of {" + join(known, ", ") + "}"});
    return res;
  }
  const Paradigm& p = pit->second;
  json params = raw.value("params", json::object());
  if (!params.is_object()) {
    out.push_back({"params", "type_mismatch", "params must be an object"});
    return res;
  }

  DslDocument doc{g.topic_id, pname, g.version, {}};
  for (auto& [k, v] : params.items())
    if (!p.find(k)) out.push_back({"params." + k, "unknown_param", "'" + k + "' is not in paradigm '" + pname + "'"});
  for (auto& s : p.params) {
    auto path = "params." + s.name;
    if (!params.contains(s.name)) {
      if (s.required) out.push_back({path, "missing_required", "required parameter '" + s.name + "' is missing"});
      continue;
    }
    if (auto tv = detail::check_value(s, params[s.name], path, out)) doc.params.emplace(s.name, std::move(*tv));
  }
  for (auto& r : p.rules) {
    if (!doc.has(r.lhs) || !doc.has(r.rhs)) continue;
    bool holds = true;
    std::string detail;
    if (r.kind == "le_list_length") {
      auto lhs = doc.integer(r.lhs);
      auto n = static_cast<std::int64_t>(doc.list(r.rhs).size());
      holds = lhs <= n;
      detail = r.lhs + "=" + std::to_string(lhs) + " exceeds " + r.rhs + " length " + std::to_string(n);
    } else if (r.kind == "le") {
      holds = detail::numeric(doc.at(r.lhs)) <= detail::numeric(doc.at(r.rhs));
      detail = r.lhs + " exceeds " + r.rhs;
    }
    if (!holds)
      out.push_back({"params." + r.lhs + ",params." + r.rhs, "cross:" + r.name,
                     r.message.empty() ? detail : r.message + " (" + detail + ")"});
  }
  if (out.empty()) res.document = std::move(doc);
  return res;
}

inline Validated validate(const json& raw, const GrammarRegistry& reg) {
  std::string topic = raw.is_object() ? raw.value("topic_id", "") : "";
  auto g = reg.find(topic);
  if (!g) return {std::nullopt, {{"topic_id", "unknown_topic", "no grammar registered for topic '" + topic + "'"}}};
  return validate(raw, *g);
}

inline DslDocument validate_or_throw(const json& raw, const GrammarRegistry& reg) {
  auto v = validate(raw, reg);
  if (!v.ok()) throw ValidationError(std::move(v.diagnostics));
  return std::move(*v.document);
}

// ============================================================================
// Serialization
// ============================================================================

inline json value_to_json(const TypedValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v.value);
}

inline json to_json(const DslDocument& d) {
  json params = json::object();
  for (auto& [k, v] : d.params) params[k] = value_to_json(v);
  return {{"topic_id", d.topic_id}, {"paradigm", d.paradigm}, {"grammar_version", d.grammar_version},
          {"params", params}};
}

/// Canonical text: sorted keys, compact, shortest round-trip numbers.
inline std::string serialize(const DslDocument& d) { return canonical(to_json(d)); }

/// Parses JSON text, reporting the byte offset of malformed input.
inline json parse_raw(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte, e.what());
  }
}

inline DslDocument parse(std::string_view text, const GrammarRegistry& reg) {
  return validate_or_throw(parse_raw(text), reg);
}

inline std::uint64_t digest(const DslDocument& d) { return fnv1a64(serialize(d)); }

// ============================================================================
// Interpretation
// ============================================================================

struct PlanAction {
  std::string name;
  json args = json::object();
  bool operator==(const PlanAction&) const = default;
};

struct ExperimentPlan {
  std::string topic_id;
  std::vector<PlanAction> actions;
  DslDocument source;
  std::string source_digest;  // hex fnv1a64 of the canonical source text
  bool operator==(const ExperimentPlan&) const = default;

  const PlanAction* find(std::string_view action) const {
    for (auto& a : actions)
      if (a.name == action) return &a;
    return nullptr;
  }
};

inline json to_json(const ExperimentPlan& p) {
  json actions = json::array();
  for (auto& a : p.actions) actions.push_back({{"action", a.name}, {"args", a.args}});
  return {{"topic_id", p.topic_id}, {"actions", actions}, {"source_digest", p.source_digest}};
}

/// Pure expansion of the paradigm's action templates. A version mismatch
/// between document and registry is an InterpretError.
inline ExperimentPlan interpret(const DslDocument& doc, const Grammar& g) {
  if (doc.topic_id != g.topic_id) throw InterpretError("document topic '" + doc.topic_id + "' != grammar topic");
  if (doc.grammar_version != g.version)
    throw InterpretError("document validated under grammar v" + std::to_string(doc.grammar_version) +
                         " but registry holds v" + std::to_string(g.version));
  auto pit = g.paradigms.find(doc.paradigm);
  if (pit == g.paradigms.end()) throw InterpretError("paradigm '" + doc.paradigm + "' missing from grammar");
  std::set<std::string> catalog(g.actions.begin(), g.actions.end());

  ExperimentPlan plan{g.topic_id, {}, doc, hex64(digest(doc))};
  for (auto& t : pit->second.plan) {
    if (!t.when.empty()) {
      bool negate = t.when[0] == '!';
      auto ref = negate ? t.when.substr(1) : t.when;
      bool on = doc.has(ref) && doc.flag(ref);
      if (on == negate) continue;
    }
    if (!catalog.count(t.action)) throw InterpretError("action '" + t.action + "' outside the topic catalog");
    PlanAction a{t.action, json::object()};
    for (auto& [name, v] : t.args) {
      if (v.is_string() && v.get<std::string>().starts_with("$")) {
        auto ref = v.get<std::string>().substr(1);
        if (doc.has(ref)) a.args[name] = value_to_json(doc.at(ref));
      } else {
        a.args[name] = v;
      }
    }
    plan.actions.push_back(std::move(a));
  }
  return plan;
}

inline ExperimentPlan interpret(const DslDocument& doc, const GrammarRegistry& reg) {
  auto g = reg.find(doc.topic_id);
  if (!g) throw InterpretError("no grammar registered for topic '" + doc.topic_id + "'");
  return interpret(doc, *g);
}

}  // namespace aigs::dsl
