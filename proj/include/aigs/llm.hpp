#pragma once

/**
 * Chat-style text generation behind one interface.
 *
 *  - Backend: abstract completion endpoint.
 *  - ScriptedBackend: deterministic scenario-file replay keyed by a composite
 *    "role:iteration:thread:step" string. Keys may use '*' for whole
 *    segments; the most specific match wins.
 *  - RecordingBackend: decorator that keeps every request/response pair.
 *  - Gateway: retries transport failures, books usage into a CostLedger.
 *
 * The live HTTP backend lives in llm_http.hpp so that only users who need it
 * pull in the HTTP client.
 */

#include "common.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>

namespace aigs::llm {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
  bool operator==(const Message&) const = default;
};

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 0.7;
  std::string model = "gpt-4o-2024-05-13";
  int max_tokens = 2048;
  std::string key;                          // scenario key, e.g. "proposal:2:3:candidate-1"
  std::map<std::string, std::string> vars;  // template variables for scripted responses
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;  // calls is always 1
};

inline std::string make_key(std::string_view role, int iteration, int thread, std::string_view step) {
  return std::string(role) + ":" + std::to_string(iteration) + ":" + std::to_string(thread) + ":" + std::string(step);
}

class BackendError : public Error {
 public:
  using Error::Error;
};

/// Retryable: connection reset, timeouts, 5xx.
class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class RateLimitError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Scripted backend has no response for a key. Never retried.
class ScenarioMiss : public BackendError {
 public:
  explicit ScenarioMiss(const std::string& k) : BackendError("scenario has no response for key '" + k + "'"), key(k) {}
  std::string key;
};

class ScenarioError : public BackendError {
 public:
  using BackendError::BackendError;
};

inline void check_request(const ChatRequest& r) {
  if (r.messages.empty()) throw PreconditionError("chat request needs at least one message");
  if (!std::isfinite(r.temperature) || r.temperature < 0.0 || r.temperature > 2.0)
    throw PreconditionError("temperature must be finite and within [0, 2]");
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// ============================================================================
// Scripted backend
// ============================================================================

/// Whitespace-token count. A stand-in for real tokenization; not authoritative.
inline std::int64_t proxy_token_count(std::string_view text) {
  return static_cast<std::int64_t>(split_ws(text).size());
}

/// Expands {{name}} placeholders from `vars`. Unknown names are an error.
inline std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars,
                                   std::string_view key = {}) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw ScenarioError("unterminated placeholder in template for '" + std::string(key) + "'");
    out.append(tmpl.substr(pos, open - pos));
    auto name = trim(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it == vars.end())
      throw ScenarioError("template variable '" + name + "' is unset for key '" + std::string(key) + "'");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::map<std::string, std::string> responses) : responses_(std::move(responses)) {}

  /// Parses a scenario: a JSON object from key to response template.
  /// Duplicate keys are rejected (the JSON parser alone would keep the last).
  static ScriptedBackend from_text(std::string_view text) {
    std::set<std::string> seen;
    std::string dup;
    json parsed;
    try {
      parsed = json::parse(text, [&](int depth, json::parse_event_t ev, json& value) {
        if (ev == json::parse_event_t::key && depth == 1) {
          auto k = value.get<std::string>();
          if (!seen.insert(k).second && dup.empty()) dup = k;
        }
        return true;
      });
    } catch (const json::parse_error& e) {
      throw ScenarioError(std::string("malformed scenario: ") + e.what());
    }
    if (!dup.empty()) throw ScenarioError("duplicate scenario key '" + dup + "'");
    if (!parsed.is_object()) throw ScenarioError("scenario must be a JSON object");
    std::map<std::string, std::string> responses;
    for (auto& [k, v] : parsed.items()) {
      if (!v.is_string()) throw ScenarioError("scenario value for '" + k + "' must be a string");
      responses[k] = v.get<std::string>();
    }
    return ScriptedBackend(std::move(responses));
  }

  static ScriptedBackend from_file(const std::string& path) { return from_text(read_file(path)); }

  std::size_t size() const { return responses_.size(); }

  bool resolvable(const std::string& key) const { return lookup(key) != nullptr; }

  ChatResponse complete(const ChatRequest& request) override {
    check_request(request);
    auto* tmpl = lookup(request.key);
    if (!tmpl) throw ScenarioMiss(request.key);
    ChatResponse resp;
    resp.text = render_template(*tmpl, request.vars, request.key);
    for (auto& m : request.messages) resp.usage.input_tokens += proxy_token_count(m.content);
    resp.usage.output_tokens = proxy_token_count(resp.text);
    resp.usage.calls = 1;
    return resp;
  }

 private:
  static std::vector<std::string> segments(std::string_view key) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      auto c = key.find(':', pos);
      out.emplace_back(key.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    return out;
  }

  // Exact key first. Otherwise the matching pattern with the fewest '*'
  // segments; ties go to the pattern whose wildcards sit furthest right.
  const std::string* lookup(const std::string& key) const {
    if (auto it = responses_.find(key); it != responses_.end()) return &it->second;
    auto want = segments(key);
    const std::string* best = nullptr;
    std::pair<int, std::string> best_rank;
    for (auto& [pattern, tmpl] : responses_) {
      if (pattern.find('*') == std::string::npos) continue;
      auto segs = segments(pattern);
      if (segs.size() != want.size()) continue;
      bool match = true;
      int stars = 0;
      std::string mask;
      for (std::size_t i = 0; i < segs.size() && match; ++i) {
        if (segs[i] == "*") {
          ++stars;
          mask.push_back('1');
        } else {
          match = segs[i] == want[i];
          mask.push_back('0');
        }
      }
      if (!match) continue;
      std::pair<int, std::string> rank{stars, mask};
      if (!best || rank < best_rank) {
        best = &tmpl;
        best_rank = rank;
      }
    }
    return best;
  }

  std::map<std::string, std::string> responses_;
};

/// Keeps every exchange; used for prompt audits and call counting.
class RecordingBackend : public Backend {
 public:
  struct Exchange {
    ChatRequest request;
    std::optional<ChatResponse> response;
  };

  explicit RecordingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

  ChatResponse complete(const ChatRequest& request) override {
    std::optional<ChatResponse> resp;
    try {
      resp = inner_->complete(request);
    } catch (...) {
      std::lock_guard lock(mu_);
      log_.push_back({request, std::nullopt});
      throw;
    }
    std::lock_guard lock(mu_);
    log_.push_back({request, resp});
    return *resp;
  }

  std::vector<Exchange> exchanges() const {
    std::lock_guard lock(mu_);
    return log_;
  }

  std::size_t count_with_prefix(std::string_view prefix) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (auto& e : log_) n += e.request.key.starts_with(prefix);
    return n;
  }

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mu_;
  std::vector<Exchange> log_;
};

// ============================================================================
// Cost accounting
// ============================================================================

/// Dollar rates per one million tokens.
struct PriceTable {
  double input_per_million = 5.0;
  double output_per_million = 15.0;
};

inline double cost_of(const TokenUsage& u, const PriceTable& p) {
  return static_cast<double>(u.input_tokens) * p.input_per_million / 1e6 +
         static_cast<double>(u.output_tokens) * p.output_per_million / 1e6;
}

/// Same formula on fractional (averaged) token counts.
inline double cost_of(double input_tokens, double output_tokens, const PriceTable& p) {
  return input_tokens * p.input_per_million / 1e6 + output_tokens * p.output_per_million / 1e6;
}

inline constexpr const char* kPhasePreFalsification = "pre_falsification";
inline constexpr const char* kPhaseFalsification = "falsification";

class CostLedger {
 public:
  CostLedger() = default;
  explicit CostLedger(PriceTable prices) : prices_(prices) {}

  void set_prices(PriceTable p) {
    std::lock_guard lock(mu_);
    prices_ = p;
  }

  void add(const std::string& phase, const TokenUsage& u) {
    if (u.input_tokens < 0 || u.output_tokens < 0 || u.calls < 0)
      throw PreconditionError("usage counts must be non-negative");
    std::lock_guard lock(mu_);
    phases_[phase] += u;
  }

  TokenUsage usage(const std::string& phase) const {
    std::lock_guard lock(mu_);
    auto it = phases_.find(phase);
    return it == phases_.end() ? TokenUsage{} : it->second;
  }

  TokenUsage total() const {
    std::lock_guard lock(mu_);
    TokenUsage t;
    for (auto& [_, u] : phases_) t += u;
    return t;
  }

  double cost(const std::string& phase) const {
    std::lock_guard lock(mu_);
    if (!prices_) throw PreconditionError("cost ledger has no price table");
    auto it = phases_.find(phase);
    return it == phases_.end() ? 0.0 : cost_of(it->second, *prices_);
  }

  std::optional<PriceTable> prices() const {
    std::lock_guard lock(mu_);
    return prices_;
  }

 private:
  mutable std::mutex mu_;
  std::optional<PriceTable> prices_;
  std::map<std::string, TokenUsage> phases_;
};

// ============================================================================
// Gateway
// ============================================================================

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;
};

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<CostLedger> ledger, RetryPolicy retry = {},
          Sleeper sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
      : backend_(std::move(backend)), ledger_(std::move(ledger)), retry_(retry), sleep_(std::move(sleeper)) {
    if (!backend_) throw PreconditionError("gateway needs a backend");
    if (!ledger_) ledger_ = std::make_shared<CostLedger>();
  }

  /// Books usage under `phase` in the ledger and, when given, in `tally`.
  ChatResponse complete(const ChatRequest& request, const std::string& phase, TokenUsage* tally = nullptr) {
    check_request(request);
    auto delay = retry_.base_delay;
    for (int attempt = 1;; ++attempt) {
      try {
        auto resp = backend_->complete(request);
        resp.usage.calls = 1;
        ledger_->add(phase, resp.usage);
        if (tally) *tally += resp.usage;
        return resp;
      } catch (const TransportError&) {
        if (attempt >= retry_.attempts) throw;
        sleep_(delay);
        delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * retry_.factor));
      }
    }
  }

  CostLedger& ledger() { return *ledger_; }
  const CostLedger& ledger() const { return *ledger_; }
  std::shared_ptr<CostLedger> shared_ledger() const { return ledger_; }
  Backend& backend() { return *backend_; }

 private:
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<CostLedger> ledger_;
  RetryPolicy retry_;
  Sleeper sleep_;
};

}  // namespace aigs::llm
