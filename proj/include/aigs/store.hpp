#pragma once

/**
 * Append-only event log and the research store built on top of it.
 *
 * Log format: one JSON object per line,
 *
 *   {"checksum":"<16 hex>","record":{"payload":...,"seq":N,"type":"..."}}
 *
 * where checksum_N = FNV-1a-64 over the exact record bytes, seeded with
 * checksum_{N-1} (the FNV offset basis for the first line). The checksum is
 * taken over the stored bytes rather than the re-parsed value, so any single
 * byte edit is caught. The per-run digest is SHA-256 over the whole file.
 *
 * Each append is flushed and fsync'd before returning.
 */

#include "record.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <memory>

namespace aigs::store {

using record::TurnRecord;
using record::TurnRef;

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

class ChecksumError : public Error {
 public:
  ChecksumError(std::size_t index, const std::string& why)
      : Error("log corrupted at record " + std::to_string(index) + ": " + why), record_index(index) {}
  std::size_t record_index;  // 0-based line index
};

class GapError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

struct Event {
  std::uint64_t seq = 0;
  std::string type;
  json payload;
  std::uint64_t checksum = 0;
};

namespace detail {
inline constexpr std::string_view kPrefix = "{\"checksum\":\"";
inline constexpr std::string_view kMiddle = "\",\"record\":";

inline std::string make_line(std::uint64_t checksum, const std::string& body) {
  std::string line;
  line.reserve(body.size() + 48);
  line += kPrefix;
  line += hex64(checksum);
  line += kMiddle;
  line += body;
  line += "}\n";
  return line;
}
}  // namespace detail

/// Append-only JSONL log. With an empty path the log is memory-only.
class EventLog {
 public:
  EventLog() = default;

  /// Creates (or truncates) a log file.
  static EventLog create(const std::string& path) {
    EventLog log;
    log.path_ = path;
    log.file_.reset(std::fopen(path.c_str(), "wb"));
    if (!log.file_) throw Error("cannot create log " + path);
    return log;
  }

  /// Opens an existing log, verifying every checksum; appends continue at the end.
  static EventLog open(const std::string& path) {
    EventLog log = load(read_file(path));
    log.path_ = path;
    log.file_.reset(std::fopen(path.c_str(), "ab"));
    if (!log.file_) throw Error("cannot open log " + path);
    return log;
  }

  /// Parses and verifies log text without attaching a file.
  static EventLog load(std::string_view text) {
    EventLog log;
    std::uint64_t prev = kFnvOffset;
    std::size_t pos = 0, index = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) throw ChecksumError(index, "truncated record (no line terminator)");
      auto line = text.substr(pos, nl - pos);
      const auto head = detail::kPrefix.size() + 16 + detail::kMiddle.size();
      if (line.size() < head + 1 || line.substr(0, detail::kPrefix.size()) != detail::kPrefix ||
          line.substr(detail::kPrefix.size() + 16, detail::kMiddle.size()) != detail::kMiddle || line.back() != '}')
        throw ChecksumError(index, "malformed record framing");
      auto stored = line.substr(detail::kPrefix.size(), 16);
      auto body = line.substr(head, line.size() - head - 1);
      auto sum = fnv1a64(body, prev);
      if (stored != hex64(sum)) throw ChecksumError(index, "checksum mismatch");
      json rec;
      try {
        rec = json::parse(body);
      } catch (const json::exception& e) {
        throw ChecksumError(index, std::string("unparseable record: ") + e.what());
      }
      Event ev{rec.at("seq").get<std::uint64_t>(), rec.at("type").get<std::string>(), rec.at("payload"), sum};
      if (ev.seq != index + 1) throw ChecksumError(index, "sequence number out of order");
      log.events_.push_back(std::move(ev));
      log.text_.append(line.data(), line.size()).push_back('\n');
      prev = sum;
      pos = nl + 1;
      ++index;
    }
    log.last_ = prev;
    return log;
  }

  std::uint64_t append(const std::string& type, const json& payload) {
    Event ev{events_.size() + 1, type, payload, 0};
    auto body = canonical(json{{"seq", ev.seq}, {"type", type}, {"payload", payload}});
    ev.checksum = fnv1a64(body, last_);
    auto line = detail::make_line(ev.checksum, body);
    if (file_) {
      if (std::fwrite(line.data(), 1, line.size(), file_.get()) != line.size() || std::fflush(file_.get()) != 0 ||
          ::fsync(::fileno(file_.get())) != 0)
        throw Error("failed to persist record to " + path_);
    }
    text_ += line;
    last_ = ev.checksum;
    events_.push_back(std::move(ev));
    return events_.back().seq;
  }

  const std::vector<Event>& events() const { return events_; }
  const std::string& text() const { return text_; }
  const std::string& path() const { return path_; }
  std::string run_digest() const { return sha256_hex(text_); }

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const {
      if (f) std::fclose(f);
    }
  };
  std::string path_;
  std::unique_ptr<std::FILE, FileCloser> file_;
  std::vector<Event> events_;
  std::string text_;
  std::uint64_t last_ = kFnvOffset;
};

/// Turn-aware store. Enforces lineage contiguity on append and serves
/// lineage-relative history views. All members are safe to call concurrently.
class ResearchStore {
 public:
  ResearchStore(EventLog log, const dsl::GrammarRegistry& registry) : log_(std::move(log)), registry_(&registry) {
    for (auto& ev : log_.events())
      if (ev.type == "turn") index_turn(record::turn_from_json(ev.payload, *registry_), ev.seq);
  }

  std::uint64_t append_turn(const TurnRecord& r) {
    record::check_invariants(r);
    std::lock_guard lock(mu_);
    auto ref = r.ref();
    if (turns_.count(ref)) throw DuplicateError("turn " + record::to_string(ref) + " already stored");
    if (r.iteration == 1 && !turns_.count({0, 1}))
      throw GapError("turn " + record::to_string(ref) + " appended before turn 0");
    if (r.iteration >= 2 && !turns_.count(*r.parent))
      throw GapError("turn " + record::to_string(ref) + " appended before its parent " +
                     record::to_string(*r.parent));
    auto seq = log_.append("turn", record::to_json(r));
    index_turn(r, seq);
    return seq;
  }

  std::uint64_t append_event(const std::string& type, const json& payload) {
    if (type == "turn") throw PreconditionError("use append_turn for turn records");
    std::lock_guard lock(mu_);
    return log_.append(type, payload);
  }

  std::optional<TurnRecord> turn(TurnRef ref) const {
    std::lock_guard lock(mu_);
    auto it = turns_.find(ref);
    if (it == turns_.end()) return std::nullopt;
    return it->second.record;
  }

  std::optional<std::uint64_t> sequence_of(TurnRef ref) const {
    std::lock_guard lock(mu_);
    auto it = turns_.find(ref);
    if (it == turns_.end()) return std::nullopt;
    return it->second.seq;
  }

  /// Turn 0 followed by the ancestors of `tip` and `tip` itself.
  std::vector<TurnRecord> lineage(TurnRef tip) const {
    std::lock_guard lock(mu_);
    return lineage_locked(tip);
  }

  /// History visible to turn (i, j): turn 0 plus ancestors 1..i-1 along its
  /// parent chain. The turn itself must already be stored.
  record::History history_view(int iteration, int thread) const {
    std::lock_guard lock(mu_);
    auto it = turns_.find({iteration, thread});
    if (it == turns_.end())
      throw PreconditionError("unknown turn " + record::to_string({iteration, thread}));
    auto chain = lineage_locked(it->first);
    chain.pop_back();
    if (iteration == 0) chain.clear();
    return {std::move(chain), json::object()};
  }

  /// History for a turn that is about to be produced with the given parent
  /// (nullopt for iteration 1).
  record::History history_before(std::optional<TurnRef> parent) const {
    std::lock_guard lock(mu_);
    if (!parent) {
      std::vector<TurnRecord> out;
      if (auto it = turns_.find({0, 1}); it != turns_.end()) out.push_back(it->second.record);
      return {std::move(out), json::object()};
    }
    if (!turns_.count(*parent)) throw PreconditionError("unknown parent turn " + record::to_string(*parent));
    return {lineage_locked(*parent), json::object()};
  }

  std::vector<TurnRecord> turns_in_iteration(int iteration) const {
    std::lock_guard lock(mu_);
    std::vector<TurnRecord> out;
    for (auto it = turns_.lower_bound({iteration, 0}); it != turns_.end() && it->first.iteration == iteration; ++it)
      out.push_back(it->second.record);
    return out;
  }

  std::vector<Event> events() const {
    std::lock_guard lock(mu_);
    return log_.events();
  }

  std::vector<Event> events_of(const std::string& type) const {
    std::lock_guard lock(mu_);
    std::vector<Event> out;
    for (auto& e : log_.events())
      if (e.type == type) out.push_back(e);
    return out;
  }

  std::string run_digest() const {
    std::lock_guard lock(mu_);
    return log_.run_digest();
  }

  std::string text() const {
    std::lock_guard lock(mu_);
    return log_.text();
  }

  const dsl::GrammarRegistry& registry() const { return *registry_; }

 private:
  struct Entry {
    TurnRecord record;
    std::uint64_t seq;
  };

  void index_turn(const TurnRecord& r, std::uint64_t seq) { turns_[r.ref()] = Entry{r, seq}; }

  std::vector<TurnRecord> lineage_locked(TurnRef tip) const {
    std::vector<TurnRecord> chain;
    std::optional<TurnRef> cur = tip;
    while (cur) {
      auto it = turns_.find(*cur);
      if (it == turns_.end()) throw GapError("lineage broken at " + record::to_string(*cur));
      chain.push_back(it->second.record);
      if (cur->iteration == 0) break;
      cur = it->second.record.parent;
      if (!cur) cur = TurnRef{0, 1};
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
  }

  mutable std::mutex mu_;
  EventLog log_;
  const dsl::GrammarRegistry* registry_;
  std::map<TurnRef, Entry> turns_;
};

/// State reconstructed from a log on disk.
struct RunState {
  std::unique_ptr<ResearchStore> store;
  std::vector<std::string> record_checksums;  // 64-bit, hex, per record
  std::string run_digest;                      // 256-bit, hex
  json manifest;
};

/// Reloads a run from its log, verifying the checksum chain. The manifest's
/// grammar versions must match the registry.
inline RunState replay(const std::string& log_path, const json& manifest, const dsl::GrammarRegistry& registry) {
  auto log = EventLog::load(read_file(log_path));
  if (manifest.contains("grammar_versions")) {
    for (auto& [topic, version] : manifest["grammar_versions"].items()) {
      auto g = registry.find(topic);
      if (!g || g->version != version.get<int>())
        throw ConfigError("manifest expects grammar '" + topic + "' v" + std::to_string(version.get<int>()));
    }
  }
  RunState state;
  for (auto& e : log.events()) state.record_checksums.push_back(hex64(e.checksum));
  state.run_digest = log.run_digest();
  state.manifest = manifest;
  state.store = std::make_unique<ResearchStore>(std::move(log), registry);
  return state;
}

}  // namespace aigs::store
