#pragma once

// Shared plumbing: error types, hashing, seed derivation, tokenization,
// canonical JSON, and a bounded parallel-for.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace aigs {

using json = nlohmann::json;

inline constexpr const char* kEngineVersion = "0.3.1";

// ============================================================================
// Errors
// ============================================================================

/// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, missing grammar, unknown environment.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised by an Environment when an experiment cannot run.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

/// Raised when a contract precondition is violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Token/call counters for LLM usage; accumulated per turn and per phase.
struct TokenUsage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t calls = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    calls += o.calls;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

inline void to_json(nlohmann::json& j, const TokenUsage& u) {
  j = {{"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}, {"calls", u.calls}};
}
inline void from_json(const nlohmann::json& j, TokenUsage& u) {
  u.input_tokens = j.at("input_tokens").get<std::int64_t>();
  u.output_tokens = j.at("output_tokens").get<std::int64_t>();
  u.calls = j.at("calls").get<std::int64_t>();
}

// ============================================================================
// Hashing and seeds
// ============================================================================

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a base seed and a path of integers. Independent
/// of call order, so concurrent threads get the same seeds as serial ones.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ============================================================================
// Text
// ============================================================================

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Splits on ASCII whitespace; empty pieces are skipped.
inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Lowercase whitespace tokens with ASCII punctuation removed. Tokens that
/// become empty after stripping are dropped.
inline std::vector<std::string> normalized_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& tok : split_ws(s)) {
    std::string t;
    t.reserve(tok.size());
    for (unsigned char c : tok) {
      if (c < 0x80 && std::ispunct(c)) continue;
      t.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("short write: " + path);
}

/// One entry per line; blank lines and '#' comments skipped.
inline std::vector<std::string> read_word_list(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(to_lower(t));
  }
  return out;
}

// ============================================================================
// Canonical JSON
// ============================================================================

// nlohmann::json objects are std::map backed, so keys come out sorted and
// floats use shortest round-trip formatting.
inline std::string canonical(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

// ============================================================================
// Concurrency
// ============================================================================

/// Runs fn(0..n-1) on at most `limit` worker threads. The first exception
/// (lowest index) is rethrown after all workers join.
inline void parallel_for(std::size_t n, std::size_t limit, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  limit = std::max<std::size_t>(1, std::min(limit, n));
  std::vector<std::exception_ptr> errors(n);
  if (limit == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(limit);
    for (std::size_t w = 0; w < limit; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace aigs
