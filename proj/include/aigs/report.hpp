#pragma once

// Run-directory reports (cost table, score trajectory, flagged pairs,
// verdicts) and replay verification, both derived from the event log alone.

#include "orchestrator.hpp"

#include <iomanip>

namespace aigs::report {

using record::TurnRef;

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kLogFile = "history.jsonl";
inline constexpr const char* kDiscoveryFile = "discovery_report.json";
inline constexpr const char* kCostFile = "cost_report.json";
inline constexpr const char* kReportFile = "report.txt";

inline constexpr const char* kPreRowLabel = "Pre-Falsification (per iter.)";
inline constexpr const char* kFalsRowLabel = "Falsification (per disc. cand.)";

struct RunView {
  json manifest;
  store::EventLog log;
};

/// Reads and verifies a run directory. The manifest comes from the log's
/// run_start record; manifest.json is used only when the log lacks one.
inline RunView load_run(const std::string& dir) {
  namespace fs = std::filesystem;
  auto log_path = fs::path(dir) / kLogFile;
  if (!fs::exists(log_path)) throw Error("no " + std::string(kLogFile) + " in " + dir);
  RunView v{json::object(), store::EventLog::load(read_file(log_path.string()))};
  for (auto& e : v.log.events())
    if (e.type == "run_start") {
      v.manifest = e.payload.at("manifest");
      return v;
    }
  auto mpath = fs::path(dir) / kManifestFile;
  if (fs::exists(mpath)) v.manifest = json::parse(read_file(mpath.string()));
  return v;
}

inline std::vector<const store::Event*> of_type(const std::vector<store::Event>& events, std::string_view type) {
  std::vector<const store::Event*> out;
  for (auto& e : events)
    if (e.type == type) out.push_back(&e);
  return out;
}

inline llm::PriceTable prices_of(const json& manifest) {
  llm::PriceTable p;
  if (manifest.contains("config") && manifest["config"].contains("prices")) {
    p.input_per_million = manifest["config"]["prices"].value("input_per_million", p.input_per_million);
    p.output_per_million = manifest["config"]["prices"].value("output_per_million", p.output_per_million);
  }
  return p;
}

// ============================================================================
// Cost report
// ============================================================================

inline json cost_row(const std::string& label, const TokenUsage& u, std::size_t units, const llm::PriceTable& p) {
  json row{{"label", label}, {"units", units}, {"usage", u}, {"total_cost", llm::cost_of(u, p)}};
  if (units == 0) {
    row["per_unit"] = nullptr;
    return row;
  }
  double in = static_cast<double>(u.input_tokens) / static_cast<double>(units);
  double out = static_cast<double>(u.output_tokens) / static_cast<double>(units);
  row["per_unit"] = {{"input_tokens", in}, {"output_tokens", out}, {"cost", llm::cost_of(in, out, p)}};
  return row;
}

inline json cost_report(const RunView& run) {
  auto& events = run.log.events();
  llm::CostLedger ledger;
  orchestrator::restore_ledger(events, ledger);
  auto prices = prices_of(run.manifest);
  std::size_t iterations = of_type(events, "iteration").size();
  std::size_t candidates = 0;
  for (auto* e : of_type(events, "candidates")) candidates = e->payload.at("candidates").size();
  return {{"prices", {{"input_per_million", prices.input_per_million}, {"output_per_million", prices.output_per_million}}},
          {"rows",
           {cost_row(kPreRowLabel, ledger.usage(llm::kPhasePreFalsification), iterations, prices),
            cost_row(kFalsRowLabel, ledger.usage(llm::kPhaseFalsification), candidates, prices)}}};
}

// ============================================================================
// Discovery report
// ============================================================================

inline json discovery_report(const RunView& run) {
  auto& events = run.log.events();
  json out{{"reached", false}, {"best", nullptr}, {"flagged", json::array()}, {"candidates", json::array()}};
  for (auto* e : of_type(events, "pre_falsification_complete")) out["best"] = e->payload.at("best");
  for (auto* e : of_type(events, "screening")) {
    out["reached"] = true;
    out["flagged"] = e->payload.at("flagged");
  }
  for (auto* e : of_type(events, "candidate_result")) {
    auto& p = e->payload;
    auto& v = p.at("verdict");
    json plans = json::array();
    for (std::size_t k = 0; k < p.at("plans").size(); ++k) {
      auto& pl = p["plans"][k];
      auto& tr = p["trials"][k];
      auto scores = [](const json& arm) {
        json s = json::array();
        for (auto& t : arm) s.push_back(t.at("score"));
        return s;
      };
      plans.push_back({{"plan", pl.at("plan")},
                       {"baseline", pl.at("baseline")},
                       {"edits", pl.at("edits")},
                       {"ablated_dsl", pl.at("ablated_dsl")},
                       {"ablation_scores", scores(tr.at("ablation"))},
                       {"baseline_scores", scores(tr.at("baseline"))},
                       {"gate", v.at("gates").at(k)}});
    }
    json summary = nullptr;
    if (!v.at("weakest_plan").is_null()) {
      auto& g = v["gates"][v["weakest_plan"].get<std::size_t>() - 1];
      if (g.at("usable").get<bool>())
        summary = {{"t", g.at("t")}, {"df", g.at("df")}, {"p", g.at("p_gate")},
                   {"direction", p["candidate"].at("predicted_effect") == "negative" ? "ablation > baseline"
                                                                                    : "ablation < baseline"}};
    }
    out["candidates"].push_back({{"id", p["candidate"].at("id")},
                                 {"key_factor", p["candidate"].at("key_factor")},
                                 {"predicted_effect", p["candidate"].at("predicted_effect")},
                                 {"source", p["candidate"].at("source")},
                                 {"plans", plans},
                                 {"summary", summary},
                                 {"judge", v.at("judge")},
                                 {"status", v.at("status")},
                                 {"discovery_text", v.at("discovery_text")}});
  }
  return out;
}

// ============================================================================
// Full report
// ============================================================================

inline json trajectory(const RunView& run) {
  json out = json::array();
  for (auto* e : of_type(run.log.events(), "turn")) {
    auto& t = e->payload;
    out.push_back({{"iteration", t.at("iteration")},
                   {"thread", t.at("thread")},
                   {"parent", t.at("parent")},
                   {"rerank_score", t.at("rerank_score")},
                   {"success", t.at("result").at("success")}});
  }
  return out;
}

inline json build_report(const RunView& run) {
  auto& events = run.log.events();
  json retained = json::array();
  for (auto* e : of_type(events, "iteration"))
    retained.push_back({{"iteration", e->payload.at("iteration")}, {"retained", e->payload.at("retained")}});
  json lineage = nullptr;
  for (auto* e : of_type(events, "pre_falsification_complete")) lineage = e->payload.at("lineage");
  return {{"topic", run.manifest.contains("config") ? run.manifest["config"].value("topic", "") : std::string()},
          {"complete", !of_type(events, "run_complete").empty()},
          {"trajectory", trajectory(run)},
          {"retained", retained},
          {"lineage", lineage},
          {"falsification", discovery_report(run)},
          {"cost", cost_report(run)}};
}

inline std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string render_text(const json& r) {
  std::ostringstream s;
  s << "Run report: topic " << r.at("topic").get<std::string>() << (r.at("complete").get<bool>() ? "" : " (partial)")
    << "\n\nScore trajectory (validation rerank score)\n";
  for (auto& t : r.at("trajectory")) {
    s << "  turn (" << t.at("iteration") << "," << t.at("thread") << ")";
    if (!t.at("parent").is_null()) s << " <- (" << t["parent"].at("iteration") << "," << t["parent"].at("thread") << ")";
    s << ": " << (t.at("rerank_score").is_null() ? std::string("failed") : fixed(t["rerank_score"].get<double>(), 4))
      << "\n";
  }
  for (auto& it : r.at("retained")) s << "  iteration " << it.at("iteration") << " retained " << it.at("retained").dump() << "\n";

  auto& f = r.at("falsification");
  s << "\nFalsification\n";
  if (!f.at("reached").get<bool>()) {
    s << "  not reached\n";
  } else {
    if (f.at("flagged").empty()) s << "  no flagged turn pairs\n";
    for (auto& p : f.at("flagged"))
      s << "  flagged (" << p["before"].at("iteration") << "," << p["before"].at("thread") << ") -> ("
        << p["after"].at("iteration") << "," << p["after"].at("thread") << "), max |delta| "
        << fixed(p.at("max_abs_delta").get<double>(), 4) << "\n";
    for (auto& c : f.at("candidates")) {
      s << "  candidate " << c.at("id") << ": " << c.at("key_factor").get<std::string>() << "\n    status "
        << c.at("status").get<std::string>() << ", judge " << c.at("judge").get<std::string>();
      if (!c.at("summary").is_null()) {
        auto& m = c["summary"];
        s << ", t " << (m.at("t").is_number() ? fixed(m["t"].get<double>(), 4) : m["t"].get<std::string>()) << ", df "
          << fixed(m.at("df").get<double>(), 3) << ", p " << fixed(m.at("p").get<double>(), 6);
      }
      s << "\n";
      for (auto& p : c.at("plans"))
        s << "    plan: " << p.at("plan").get<std::string>() << "\n      ablation " << p.at("ablation_scores").dump()
          << " baseline " << p.at("baseline_scores").dump() << "\n";
      s << "    discovery: " << c.at("discovery_text").get<std::string>() << "\n";
    }
  }

  auto& cost = r.at("cost");
  s << "\nToken usage and cost\n";
  s << "  " << std::left << std::setw(34) << "Phase" << std::right << std::setw(14) << "Input tokens" << std::setw(14)
    << "Output tokens" << std::setw(10) << "Cost" << "\n";
  for (auto& row : cost.at("rows")) {
    s << "  " << std::left << std::setw(34) << row.at("label").get<std::string>() << std::right;
    if (row.at("per_unit").is_null()) {
      s << std::setw(14) << "-" << std::setw(14) << "-" << std::setw(10) << "-" << "\n";
      continue;
    }
    auto& u = row["per_unit"];
    s << std::setw(14) << fixed(u.at("input_tokens").get<double>(), 1) << std::setw(14)
      << fixed(u.at("output_tokens").get<double>(), 1) << std::setw(10)
      << ("$" + fixed(u.at("cost").get<double>(), 3)) << "\n";
  }
  return s.str();
}

/// Writes discovery_report.json, cost_report.json and report.txt.
inline void write_reports(const std::string& dir, const RunView& run) {
  namespace fs = std::filesystem;
  auto r = build_report(run);
  write_file((fs::path(dir) / kDiscoveryFile).string(), canonical(r.at("falsification")) + "\n");
  write_file((fs::path(dir) / kCostFile).string(), canonical(r.at("cost")) + "\n");
  write_file((fs::path(dir) / kReportFile).string(), render_text(r));
}

// ============================================================================
// Replay verification
// ============================================================================

struct Divergence {
  std::uint64_t seq = 0;
  std::string path;
  json stored;
  json derived;

  std::string describe() const {
    return "record " + std::to_string(seq) + ": " + path + ": stored " + stored.dump() + ", derived " + derived.dump();
  }
};

/// Re-derives every computed field from raw records and compares with what
/// was stored. Returns all divergences in log order.
inline std::vector<Divergence> verify(const RunView& run, const dsl::GrammarRegistry& reg) {
  std::vector<Divergence> out;
  auto& events = run.log.events();
  auto check = [&](std::uint64_t seq, const std::string& path, const json& stored, const json& derived) {
    if (stored != derived) out.push_back({seq, path, stored, derived});
  };
  if (!run.manifest.contains("config")) {
    out.push_back({0, "manifest.config", nullptr, "missing"});
    return out;
  }
  if (run.manifest.contains("grammar_versions"))
    for (auto& [topic, version] : run.manifest["grammar_versions"].items()) {
      auto g = reg.find(topic);
      json have = g ? json(g->version) : json(nullptr);
      if (have != version) out.push_back({0, "manifest.grammar_versions." + topic, version, have});
    }
  orchestrator::RunConfig cfg;
  try {
    cfg = orchestrator::parse_config(run.manifest["config"]);
  } catch (const Error& e) {
    out.push_back({0, "manifest.config", run.manifest["config"], e.what()});
    return out;
  }

  std::map<TurnRef, record::TurnRecord> turns;
  std::map<int, orchestrator::SamplingState> states;
  std::vector<record::TurnRecord> lineage;
  std::vector<falsification::FlaggedPair> flagged;
  std::map<std::string, int> counts{{"verified", 0}, {"falsified", 0}, {"inconclusive", 0}};

  for (auto& e : events) {
    auto at = [&](const std::string& what) { return e.type + "." + what; };
    try {
      if (e.type == "turn") {
        auto t = record::turn_from_json(e.payload, reg);
        auto name = "turn " + record::to_string(t.ref());
        check(e.seq, name + ".rerank_score", e.payload.at("rerank_score"),
              t.result.success ? json(metrics::rerank_score(t.result)) : json(nullptr));
        check(e.seq, name + ".seed", e.payload.at("seed"),
              derive_seed(cfg.seed, {static_cast<std::uint64_t>(t.iteration), static_cast<std::uint64_t>(t.thread)}));
        if (t.iteration >= 2) {
          json derived = nullptr;
          if (auto it = states.find(t.iteration - 1); it != states.end()) {
            auto rank = orchestrator::assign_parents(cfg.N, cfg.N_s)[static_cast<std::size_t>(t.thread - 1)];
            derived = record::to_json(TurnRef{t.iteration - 1, it->second.retained[static_cast<std::size_t>(rank - 1)]});
          }
          check(e.seq, name + ".parent", e.payload.at("parent"), derived);
        }
        turns[t.ref()] = t;
      } else if (e.type == "iteration") {
        int i = e.payload.at("iteration").get<int>();
        std::vector<record::TurnRecord> its;
        for (auto& [ref, t] : turns)
          if (ref.iteration == i) its.push_back(t);
        auto derived = orchestrator::rank_iteration(i, its, cfg.N_s);
        check(e.seq, "iteration " + std::to_string(i), e.payload, orchestrator::to_json(derived));
        states[i] = orchestrator::state_from_json(e.payload);
      } else if (e.type == "pre_falsification_complete") {
        json best = nullptr;
        if (auto it = states.find(cfg.M); it != states.end())
          best = record::to_json(TurnRef{cfg.M, it->second.retained.front()});
        check(e.seq, at("best"), e.payload.at("best"), best);
        lineage.clear();
        json derived = json::array();
        if (!best.is_null()) {
          std::optional<TurnRef> cur = record::ref_from_json(best);
          while (cur) {
            auto it = turns.find(*cur);
            if (it == turns.end()) break;
            lineage.push_back(it->second);
            if (cur->iteration == 0) break;
            cur = it->second.parent ? it->second.parent : std::optional<TurnRef>(TurnRef{0, 1});
          }
          std::reverse(lineage.begin(), lineage.end());
          for (auto& t : lineage) derived.push_back(record::to_json(t.ref()));
        }
        check(e.seq, at("lineage"), e.payload.at("lineage"), derived);
      } else if (e.type == "screening") {
        json derived = json::array();
        flagged.clear();
        try {
          flagged = falsification::screen(lineage, cfg.falsification);
        } catch (const PreconditionError&) {
        }
        for (auto& p : flagged) derived.push_back(falsification::to_json(p));
        check(e.seq, at("flagged"), e.payload.at("flagged"), derived);
      } else if (e.type == "candidate_result") {
        auto& p = e.payload;
        auto id = p.at("candidate").at("id").get<int>();
        auto name = "candidate " + std::to_string(id);
        auto effect = p["candidate"].at("predicted_effect").get<std::string>();
        std::vector<falsification::Gate> gates;
        for (std::size_t k = 0; k < p.at("trials").size(); ++k) {
          std::vector<double> arms[2];
          int a = 0;
          for (auto* arm : {"ablation", "baseline"}) {
            auto& ts = p["trials"][k].at(arm);
            for (std::size_t n = 0; n < ts.size(); ++n) {
              auto r = record::result_from_json(ts[n].at("result"));
              json derived = r.success ? json(metrics::rerank_score(r)) : json(nullptr);
              check(e.seq, name + ".plans[" + std::to_string(k) + "]." + arm + "[" + std::to_string(n) + "].score",
                    ts[n].at("score"), derived);
              if (r.success) arms[a].push_back(metrics::rerank_score(r));
            }
            ++a;
          }
          gates.push_back(falsification::compute_gate(arms[0], arms[1], effect, cfg.falsification.alpha));
        }
        auto& v = p.at("verdict");
        for (std::size_t k = 0; k < gates.size(); ++k)
          check(e.seq, name + ".verdict.gates[" + std::to_string(k) + "]", v.at("gates").at(k),
                falsification::to_json(gates[k]));
        auto judge_s = v.at("judge").get<std::string>();
        auto judge = judge_s == "affirm"  ? falsification::Judgement::affirm
                     : judge_s == "deny" ? falsification::Judgement::deny
                                         : falsification::Judgement::unavailable;
        if (!gates.empty()) {
          bool usable = std::any_of(gates.begin(), gates.end(), [](auto& g) { return g.usable; });
          auto status = usable ? falsification::decide(gates, judge) : falsification::Status::inconclusive;
          check(e.seq, name + ".verdict.status", v.at("status"), falsification::to_string(status));
          check(e.seq, name + ".verdict.weakest_plan", v.at("weakest_plan"), falsification::weakest_gate(gates) + 1);
        }
        ++counts[v.at("status").get<std::string>()];
      } else if (e.type == "run_complete") {
        check(e.seq, at("verdicts"), e.payload.at("verdicts"), counts);
      }
    } catch (const std::exception& ex) {
      out.push_back({e.seq, e.type, nullptr, std::string("unreadable: ") + ex.what()});
    }
  }
  return out;
}

}  // namespace aigs::report
