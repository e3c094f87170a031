// Acceptance checks: one PASS/FAIL line per criterion.

#include "fixture.hpp"

#include <chrono>
#include <iostream>

using namespace aigs;
using namespace aigs::testing;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::vector<std::string> failures;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failures.push_back(what);
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// ---- 1: cost table -------------------------------------------------------

void cost_table(Check& c) {
  llm::PriceTable p{5.0, 15.0};
  struct Row {
    double in, out, want;
  };
  for (auto r : {Row{6616.2, 761.5, 0.045}, Row{43375.5, 1120.3, 0.234}}) {
    double got = llm::cost_of(r.in, r.out, p);
    c.expect(std::abs(got - r.want) <= 0.001, "cost(" + num(r.in) + ", " + num(r.out) + ") = " + num(got));
  }
}

// ---- 2: Welch ------------------------------------------------------------

void welch(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto zero = stats::welch_t_test(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1});
  c.expect(zero.t == 0 && zero.p_left == 0.5, "t = 0 must give p_left = 0.5 exactly");
  auto k = stats::welch_t_test(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4});
  c.expect(std::abs(k.t - (-1.2247)) <= 1e-4, "known t = " + num(k.t));
  c.expect(std::abs(k.df - 4.0) <= 1e-9, "known df = " + num(k.df));
  auto oracle = load_json("tests/data/welch_oracle.json").at("cases");
  c.expect(oracle.size() == 50, "oracle has 50 pairs");
  for (auto& o : oracle) {
    auto r = stats::welch_t_test(o.at("a").get<std::vector<double>>(), o.at("b").get<std::vector<double>>(),
                                 stats::Tail::two);
    double d = std::max({std::abs(r.p_left - o.at("p_left").get<double>()),
                         std::abs(r.p_right - o.at("p_right").get<double>()),
                         std::abs(r.p - o.at("p_two").get<double>())});
    if (d >= 1e-6) c.expect(false, "oracle pair off by " + num(d));
  }
  double dt = seconds_since(t0);
  c.expect(dt < 1.0, "runtime " + num(dt) + "s");
}

// ---- 3: planted end-to-end ------------------------------------------------

void planted(Check& c) {
  auto cfg = planted_config();
  auto env = cfg.at("environment");
  c.expect(env.at("n") == 1000 && env.at("margin") == 0.3 && env.at("sigma") == 0.02, "fixture environment");
  c.expect(cfg.at("M") == 3 && cfg.at("N") == 4 && cfg.at("N_s") == 2, "fixture sizes");
  c.expect(cfg.at("falsification").at("T") == 2 && cfg.at("falsification").at("trials_per_arm") == 2,
           "fixture falsification settings");

  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> logs;
  for (int run = 0; run < 2; ++run) {
    Harness h(cfg, scenario_a());
    auto out = h.pipeline->run();
    logs.push_back(h.store->text());
    if (run > 0) continue;
    c.expect(out.completed, "run completed");
    bool flagged = !out.flagged.empty() && out.flagged.front().before == record::TurnRef{1, 2} &&
                   out.flagged.front().after == record::TurnRef{2, 3};
    c.expect(flagged, "screening flags (1,2) -> (2,3)");
    c.expect(status_of(out, "[P1]") == "verified", "driver status " + status_of(out, "[P1]"));
    c.expect(status_of(out, "[P2]") == "falsified", "decoy status " + status_of(out, "[P2]"));
  }
  c.expect(logs[0] == logs[1], "logs differ across runs");
  double dt = seconds_since(t0) / 2;
  c.expect(dt < 10.0, "runtime " + num(dt) + "s");
}

// ---- 4: retention and parents --------------------------------------------

void sampling(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    std::size_t n = 1 + rng() % 32;
    std::vector<double> s(n);
    for (auto& x : s) x = rng() % 2 ? double(rng() % 5) : (rng() % 100000) / 1000.0;
    std::size_t keep = 1 + rng() % n;
    if (orchestrator::select_retained(s, keep) != brute_top(s, keep)) {
      c.expect(false, "retained set differs from brute force on vector " + std::to_string(k));
      break;
    }
  }
  for (int N = 1; N <= 64; ++N)
    for (int Ns = 1; Ns <= N; ++Ns) {
      if (N % Ns) continue;
      auto p = orchestrator::assign_parents(N, Ns);
      std::map<int, int> fiber;
      for (auto r : p) ++fiber[r];
      bool ok = p.size() == std::size_t(N) && fiber.size() == std::size_t(Ns) && fiber.begin()->first == 1 &&
                fiber.rbegin()->first == Ns;
      for (auto& [_, n] : fiber) ok = ok && n == N / Ns;
      if (!ok) c.expect(false, "parents not an equal-fiber surjection for N=" + std::to_string(N) +
                                   " N_s=" + std::to_string(Ns));
    }
  double dt = seconds_since(t0);
  c.expect(dt < 5.0, "runtime " + num(dt) + "s");
}

// ---- 5: diversity --------------------------------------------------------

void diversity(Check& c) {
  auto oracle = load_json("tests/data/jaccard_oracle.json");
  c.expect(oracle.size() == 1000, "oracle has 1000 texts");
  std::size_t bad = 0;
  for (auto& o : oracle)
    bad += agents::jaccard_bigram(o.at("a").get<std::string>(), o.at("b").get<std::string>()) !=
           o.at("num").get<double>() / o.at("den").get<double>();
  c.expect(bad == 0, std::to_string(bad) + " oracle mismatches");
  c.expect(agents::jaccard_bigram("a b c", "b c d") == 1.0 / 3.0, "\"a b c\" vs \"b c d\"");
  c.expect(agents::select_most_diverse({0.8, 0.3, 0.5}) == 1 && agents::select_most_diverse({0.5, 0.2, 0.2}) == 1,
           "argmin with lowest-index tie-break");

  // in the scripted fixture every iteration-2 turn keeps the candidate least similar to its parent
  Harness h(planted_config(), scenario_a());
  h.pipeline->run();
  auto exchanges = h.backend->exchanges();
  std::size_t checked = 0;
  for (auto& t : h.store->turns_in_iteration(2)) {
    if (!t.proposal) continue;
    auto parent = h.store->turn(*t.parent);
    std::vector<double> sims;
    std::optional<std::size_t> chosen;
    for (int k = 1; k <= 3; ++k) {
      auto key = llm::make_key("proposal", 2, t.thread, "candidate-" + std::to_string(k));
      for (auto& ex : exchanges) {
        if (ex.request.key != key || !ex.response) continue;
        auto p = agents::parse_proposal(ex.response->text, 2, "data_engineering", registry());
        sims.push_back(agents::jaccard_bigram(p.methodology_text, parent->proposal->methodology_text));
        if (!chosen && p.methodology_text == t.proposal->methodology_text) chosen = sims.size() - 1;
      }
    }
    c.expect(sims.size() == 3 && chosen == agents::select_most_diverse(sims),
             "turn " + record::to_string(t.ref()) + " did not keep the least similar candidate");
    ++checked;
  }
  c.expect(checked == 4, "checked " + std::to_string(checked) + " fixture selections");
}

// ---- 6: screening --------------------------------------------------------

void screening(Check& c) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 10), th(0.1, 5);
  std::size_t decreases = 0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<std::optional<std::map<std::string, double>>> seq;
    for (std::size_t i = 0, n = 2 + rng() % 12; i < n; ++i) {
      if (rng() % 9 == 0) seq.emplace_back(std::nullopt);
      else seq.emplace_back(std::map<std::string, double>{{"v", u(rng)}, {"w", u(rng)}});
    }
    std::map<std::string, double> thr{{"v", th(rng)}};
    if (rng() % 2) thr["w"] = th(rng);
    std::set<std::size_t> got;
    for (auto& [i, deltas] : falsification::flag_adjacent(seq, thr)) {
      got.insert(i);
      for (auto& [_, d] : deltas) decreases += d < 0;
    }
    if (got != naive_flags(seq, thr)) {
      c.expect(false, "sequence " + std::to_string(k) + " differs from the naive scan");
      break;
    }
  }
  c.expect(decreases > 0, "no decrease flags exercised");
}

// ---- 7: DSL --------------------------------------------------------------

void dsl_roundtrip(Check& c) {
  std::mt19937_64 rng(7);
  std::size_t bad = 0;
  for (int k = 0; k < 1000; ++k) {
    auto v = dsl::validate(random_document(rng), registry());
    if (!v.ok()) {
      ++bad;
      continue;
    }
    auto text = dsl::serialize(*v.document);
    auto back = dsl::parse(text, registry());
    bad += !(back == *v.document) || dsl::serialize(back) != text;
  }
  c.expect(bad == 0, std::to_string(bad) + " round-trip failures");

  std::size_t fixtures = 0;
  for (auto& entry : fs::directory_iterator(source_path("tests/fixtures/dsl_invalid"))) {
    auto f = json::parse(read_file(entry.path().string()));
    auto rule = f.at("expect_rule").get<std::string>();
    auto diags = dsl::validate(f.at("document"), registry()).diagnostics;
    bool named = std::any_of(diags.begin(), diags.end(), [&](auto& d) { return d.rule == rule; });
    c.expect(named, entry.path().filename().string() + " not rejected with rule " + rule);
    ++fixtures;
  }
  c.expect(fixtures >= 10, "only " + std::to_string(fixtures) + " invalid fixtures");

  json over{{"topic_id", "data_engineering"},
            {"paradigm", "principled_filtering"},
            {"params", {{"principles", {"[P1] a", "[P2] b"}}, {"threshold", 3}}}};
  auto diags = dsl::validate(over, registry()).diagnostics;
  c.expect(std::any_of(diags.begin(), diags.end(), [](auto& d) { return d.rule == "cross:threshold_within_principles"; }),
           "threshold > |principles| accepted");
  over["params"]["threshold"] = 2;
  c.expect(dsl::validate(over, registry()).ok(), "threshold = |principles| rejected");
}

// ---- 8: replay -----------------------------------------------------------

void replay(Check& c) {
  auto dir = temp_dir("acceptance_replay");
  auto cmd = cli() + " run --config " + source_path("configs/planted.json") + " --backend scripted:scenarioA --out " +
             dir.string() + " > /dev/null 2>&1";
  c.expect(shell(cmd) == 0, "fixture run failed");
  auto view = report::load_run(dir.string());
  auto div = report::verify(view, registry());
  c.expect(div.empty(), div.empty() ? "" : div.front().describe());
  c.expect(shell(cli() + " replay " + dir.string() + " > /dev/null") == 0, "replay command reported divergence");

  auto text = view.log.text();
  std::size_t missed = 0;
  for (std::size_t i = 0; i < text.size(); ++i)
    for (unsigned char mask : {0x01, 0x20, 0x80}) {
      auto bad = text;
      bad[i] = static_cast<char>(bad[i] ^ mask);
      try {
        store::EventLog::load(bad);
        ++missed;
      } catch (const store::ChecksumError&) {
      }
    }
  c.expect(missed == 0, std::to_string(missed) + " single-byte corruptions went undetected");
}

// ---- 9: evaluation statistics -------------------------------------------

void eval_stats(Check& c) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    int a = rng() % 3, b = rng() % 3, d = rng() % 3;
    if (falsification::FalsificationEvalRecord(a, b, d).overall() != (a + b + d) / 3.0) {
      c.expect(false, "overall is not the dimension mean");
      break;
    }
  }
  std::vector<falsification::FalsificationEvalRecord> recs;
  for (int k = 0; k < 20; ++k) recs.emplace_back(k < 16 ? 2 : 1, 2, 2);
  auto agg = falsification::aggregate_eval(recs, 2.0).at("importance");
  c.expect(std::abs(agg.avg - 1.80) < 1e-12, "AVG " + num(agg.avg));
  c.expect(agg.p < 0.05, "p " + num(agg.p));
}

// ---- 10: held-out isolation ---------------------------------------------

void isolation(Check& c) {
  auto env = std::make_shared<SentinelEnv>(
      std::shared_ptr<envs::Environment>(envs::make_environment(planted_config().at("environment"))));
  Harness h(planted_config(), scenario_a(), {}, env);
  h.pipeline->run();
  auto prompts = all_prompt_text(*h.backend);
  c.expect(prompts.find(kSentinelText) == std::string::npos, "sentinel test score reached a prompt");
  for (auto* needle : {"driver_principle", "planted", "ground_truth"})
    c.expect(prompts.find(needle) == std::string::npos, std::string("ground truth leaked: ") + needle);

  Harness plain(planted_config(), scenario_a());
  plain.pipeline->run();
  for (auto& e : h.store->events_of("turn")) {
    auto ref = record::ref_from_json(e.payload);
    auto other = plain.store->turn(ref);
    c.expect(other && other->rerank_score == h.store->turn(ref)->rerank_score,
             "rerank input changed with test scores at " + record::to_string(ref));
  }
  for (auto& e : h.store->events_of("iteration"))
    c.expect(e.payload.dump().find(kSentinelText) == std::string::npos, "sentinel in ranking state");
  c.expect(all_prompt_text(*plain.backend) == prompts, "prompts depend on test scores");
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, void (*)(Check&)>> criteria = {
      {"cost table", cost_table},
      {"Welch t-test", welch},
      {"planted end-to-end run", planted},
      {"retention and parent assignment", sampling},
      {"bigram diversity selection", diversity},
      {"adjacent screening", screening},
      {"DSL round trip and diagnostics", dsl_roundtrip},
      {"replay and corruption detection", replay},
      {"evaluation statistics", eval_stats},
      {"held-out isolation", isolation},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Check c;
    try {
      criteria[k].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << k + 1 << ": " << criteria[k].first;
    for (auto& f : c.failures) std::cout << " | " << f;
    std::cout << std::endl;
    failed += !c.ok;
  }
  return failed == 0 ? 0 : 1;
}
