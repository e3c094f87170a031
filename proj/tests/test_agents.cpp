// Agents, synthetic environments and the falsification engine.

#include "test_util.hpp"

using namespace aigs;
using aigs::testing::registry;
using aigs::testing::source_path;

namespace {

agents::TopicInfo data_topic() {
  agents::TopicInfo t;
  t.topic_id = "data_engineering";
  t.description = "Pick instruction data.";
  t.grammar = registry().find("data_engineering");
  return t;
}

std::string proposal_text(const std::string& method, const std::string& principles_json, int baseline,
                          const std::string& rebuttal = "") {
  std::string s = "### IDEA\nAn idea.\n### METHODOLOGY\n" + method +
                  "\n### DSL\n```json\n{\"paradigm\": \"principled_filtering\", \"params\": {\"principles\": " +
                  principles_json + ", \"threshold\": 1}}\n```\n### SETTINGS\nbaseline_turn: " +
                  std::to_string(baseline) + "\nsplit: full\n### HYPOTHESIS\nIt helps.\n### RELATED FEATURE\nTone.\n";
  if (!rebuttal.empty()) s += "### REBUTTAL\n" + rebuttal + "\n";
  return s;
}

struct ScriptedGateway {
  std::shared_ptr<llm::RecordingBackend> backend;
  llm::Gateway gateway;
  explicit ScriptedGateway(std::map<std::string, std::string> responses)
      : backend(std::make_shared<llm::RecordingBackend>(std::make_shared<llm::ScriptedBackend>(std::move(responses)))),
        gateway(backend, nullptr) {}
};

record::History history_with_parent(const std::string& parent_method) {
  record::History h;
  record::TurnRecord t0;
  t0.result = aigs::testing::scores(4.0, 4.1);
  h.turns.push_back(t0);
  record::TurnRecord t1;
  t1.iteration = 1;
  t1.thread = 1;
  record::Proposal p;
  p.idea = "i";
  p.methodology_text = parent_method;
  p.methodology_dsl = aigs::testing::filter_doc({"[P2] tone"}, 1);
  p.hypothesis = "h";
  p.related_feature = "f";
  t1.proposal = p;
  t1.result = aigs::testing::scores(5.0, 987654.321);
  t1.review = record::Review{"merged review", "the proposal review", {}};
  t1.rerank_score = 5.0;
  h.turns.push_back(t1);
  return h;
}

}  // namespace

// ============================================================================
// Similarity
// ============================================================================

TEST(Jaccard, KnownValues) {
  EXPECT_EQ(agents::jaccard_bigram("a b c", "b c d"), 1.0 / 3.0);
  EXPECT_EQ(agents::jaccard_bigram("", ""), 1.0);
  EXPECT_EQ(agents::jaccard_bigram("single", "two words"), 0.0);
  EXPECT_EQ(agents::jaccard_bigram("Keep, the DATA!", "keep the data"), 1.0);
}

TEST(Jaccard, MatchesSetEnumerationOracle) {
  auto cases = aigs::testing::load_json("tests/data/jaccard_oracle.json");
  ASSERT_EQ(cases.size(), 1000u);
  for (auto& c : cases) {
    double want = c.at("num").get<double>() / c.at("den").get<double>();
    ASSERT_EQ(agents::jaccard_bigram(c.at("a").get<std::string>(), c.at("b").get<std::string>()), want)
        << c.dump();
  }
}

TEST(Jaccard, SymmetricAndBounded) {
  std::mt19937_64 rng(5);
  std::vector<std::string> words = {"x", "y", "z", "w"};
  for (int k = 0; k < 500; ++k) {
    std::string a, b;
    for (int i = 0; i < 6; ++i) {
      a += words[rng() % 4] + " ";
      b += words[rng() % 4] + " ";
    }
    double s = agents::jaccard_bigram(a, b);
    EXPECT_EQ(s, agents::jaccard_bigram(b, a));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_EQ(agents::jaccard_bigram(a, a), 1.0);
  }
}

TEST(Diversity, SelectsArgminWithLowestIndexTies) {
  EXPECT_EQ(agents::select_most_diverse({0.8, 0.3, 0.5}), 1u);
  EXPECT_EQ(agents::select_most_diverse({0.4, 0.2, 0.2}), 1u);
  EXPECT_EQ(agents::select_most_diverse({0.0, 0.0, 0.0}), 0u);
  EXPECT_THROW(agents::select_most_diverse({}), PreconditionError);
}

// ============================================================================
// Templates
// ============================================================================

TEST(Sync, TemplateFilesMatchEmbeddedTemplates) {
  auto embedded = agents::builtin_templates();
  for (auto& stage : agents::PromptTemplates::stages()) {
    auto path = source_path("templates/" + stage + ".txt");
    ASSERT_TRUE(std::filesystem::exists(path)) << stage;
    EXPECT_EQ(read_file(path), embedded.at(stage)) << stage;
  }
  EXPECT_EQ(embedded.size(), agents::PromptTemplates::stages().size());
}

TEST(Templates, RejectUnknownPlaceholdersAndMissingStages) {
  auto texts = agents::builtin_templates();
  texts["merge"] += "\n{secret_answer}";
  EXPECT_THROW(agents::PromptTemplates{texts}, agents::TemplateError);
  texts = agents::builtin_templates();
  texts.erase("judge");
  EXPECT_THROW(agents::PromptTemplates{texts}, agents::TemplateError);
}

TEST(Templates, FillOnlyKnownPlaceholders) {
  EXPECT_EQ(agents::fill_placeholders("A {topic} B {review} {x-y} {}", {{"topic", "T"}, {"review", "R"}}),
            "A T B R {x-y} {}");
  auto dir = aigs::testing::temp_dir("templates");
  write_file((dir / "judge.txt").string(), "Judge {topic} now.");
  auto t = agents::PromptTemplates::from_directory(dir.string());
  EXPECT_EQ(t.render("judge", {{"topic", "X"}}), "Judge X now.");
  EXPECT_EQ(t.text("merge"), agents::builtin_templates().at("merge"));
}

// ============================================================================
// Proposal parsing
// ============================================================================

TEST(Proposal, ParsesSectionsAndSettings) {
  std::vector<std::string> warnings;
  auto p = agents::parse_proposal(proposal_text("Method.", R"(["[P1] a"])", 0, "Not needed yet."), 1,
                                  "data_engineering", registry(), &warnings);
  EXPECT_EQ(p.methodology_text, "Method.");
  EXPECT_EQ(p.methodology_dsl.topic_id, "data_engineering");
  EXPECT_EQ(p.exp_settings.baseline_turn, 0);
  EXPECT_EQ(p.exp_settings.options.at("split"), "full");
  EXPECT_FALSE(p.rebuttal);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("rebuttal"), std::string::npos);
}

TEST(Proposal, RejectsBrokenProposals) {
  auto parse = [](const std::string& text, int i) {
    return agents::parse_proposal(text, i, "data_engineering", registry());
  };
  EXPECT_THROW(parse("no sections at all", 1), agents::ProposalParseError);
  EXPECT_THROW(parse(proposal_text("M", "[]", 0), 1), agents::ProposalParseError);
  EXPECT_THROW(parse(proposal_text("M", R"(["a"])", 1), 1), agents::ProposalParseError);
  EXPECT_THROW(parse(proposal_text("M", R"(["a"])", 1), 2), agents::ProposalParseError);
  EXPECT_NO_THROW(parse(proposal_text("M", R"(["a"])", 1, "Answering the review."), 2));
  auto wrong_topic = proposal_text("M", R"(["a"])", 0);
  wrong_topic.replace(wrong_topic.find("{\"paradigm\""), 1, "{\"topic_id\": \"self_instruct\", ");
  EXPECT_THROW(parse(wrong_topic, 1), agents::ProposalParseError);
}

TEST(ProposalAgent, SelectsLeastSimilarCandidate) {
  std::string parent = "filter pairs by a warm friendly tone only";
  ScriptedGateway sg({
      {"proposal:2:1:candidate-1", proposal_text(parent + " again", R"(["[P2] tone"])", 1, "r")},
      {"proposal:2:1:candidate-2", proposal_text("reasoning steps and concrete examples", R"(["[P1] r"])", 1, "r")},
      {"proposal:2:1:candidate-3", proposal_text(parent, R"(["[P2] tone"])", 1, "r")},
  });
  agents::ProposalAgent agent(sg.gateway, registry(), agents::PromptTemplates::defaults());
  auto out = agent.propose(data_topic(), 2, 1, history_with_parent(parent));
  ASSERT_EQ(out.candidates.size(), 3u);
  EXPECT_EQ(out.selected, 2);
  EXPECT_LT(out.candidates[1].similarity, out.candidates[0].similarity);
  EXPECT_EQ(out.candidates[2].similarity, 1.0);
  EXPECT_EQ(out.proposal.methodology_text, "reasoning steps and concrete examples");
  for (auto& ex : sg.backend->exchanges()) EXPECT_EQ(ex.request.temperature, 0.7);
}

TEST(ProposalAgent, TiesGoToLowestIndexAndRepairsAreScripted) {
  ScriptedGateway sg({
      {"proposal:1:1:candidate-1", "garbled"},
      {"proposal:1:1:repair-1", proposal_text("alpha beta", R"(["[P1] r"])", 0)},
      {"proposal:1:1:candidate-2", proposal_text("gamma delta", R"(["[P1] r"])", 0)},
      {"proposal:1:1:candidate-3", "still garbled"},
      {"proposal:1:1:repair-3", "garbled again"},
  });
  agents::ProposalAgent agent(sg.gateway, registry(), agents::PromptTemplates::defaults());
  record::History h;
  auto out = agent.propose(data_topic(), 1, 1, h);
  EXPECT_EQ(out.selected, 1);
  EXPECT_TRUE(out.candidates[0].repaired);
  EXPECT_FALSE(out.candidates[2].proposal);
  EXPECT_EQ(sg.backend->count_with_prefix("proposal:1:1:repair-"), 2u);
  // the repair prompt carries the parser error and the previous answer
  for (auto& ex : sg.backend->exchanges())
    if (ex.request.key == "proposal:1:1:repair-1") {
      EXPECT_NE(ex.request.messages.back().content.find("Parser error"), std::string::npos);
      EXPECT_NE(ex.request.messages.back().content.find("garbled"), std::string::npos);
    }
}

TEST(ProposalAgent, NoParseableCandidateIsAProposalError) {
  ScriptedGateway sg(std::map<std::string, std::string>{{"proposal:*:*:*", "nothing useful"}});
  agents::ProposalAgent agent(sg.gateway, registry(), agents::PromptTemplates::defaults());
  record::History h;
  EXPECT_THROW(agent.propose(data_topic(), 1, 1, h), agents::ProposalError);
  EXPECT_THROW(agent.propose(data_topic(), 1, 1, h, nullptr, 1), agents::ProposalError);
  EXPECT_EQ(sg.backend->count_with_prefix("proposal:1:1:retry-"), 6u);
}

TEST(ProposalAgent, PromptShowsValidationScoresOnly) {
  ScriptedGateway sg(std::map<std::string, std::string>{});
  agents::ProposalAgent agent(sg.gateway, registry(), agents::PromptTemplates::defaults());
  auto h = history_with_parent("m");
  auto bundle = agent.prompt(data_topic(), 2, h);
  EXPECT_NE(bundle.user.find("validation_quality"), std::string::npos);
  EXPECT_EQ(bundle.user.find("987654"), std::string::npos);
  EXPECT_EQ(bundle.user.find("test_quality"), std::string::npos);
  EXPECT_NE(bundle.user.find("the proposal review"), std::string::npos);
  auto first = agent.prompt(data_topic(), 1, h);
  EXPECT_EQ(first.history, "");
}

// ============================================================================
// Review
// ============================================================================

namespace {

std::vector<metrics::TextRecord> sample_records() {
  return {{1, "Sort a list", "Use sorted, it is great.", 1.0}, {2, "Explain", "A clear answer.", 0.5}};
}

}  // namespace

TEST(ReviewAgent, StagedReviewCostsKPlusThreeCalls) {
  ScriptedGateway sg({
      {"review:1:1:metric-gen", R"(Here: {"metrics": [{"name": "length"}, {"name": "sentiment"},
          {"name": "made_up"}, {"name": "coverage", "code": "return 1"}]})"},
      {"review:1:1:*", "analysis of {{score.validation_quality}}"},
      {"review:1:1:merge", "merged {{score.validation_quality}}"},
      {"review:1:1:proposal-review", "fine"},
  });
  agents::ReviewAgent agent(sg.gateway, agents::PromptTemplates::defaults());
  auto h = history_with_parent("m");
  auto out = agent.review(data_topic(), 1, 1, *h.turns[1].proposal, aigs::testing::scores(5.5, 987654.321), h,
                          sample_records());
  EXPECT_EQ(sg.backend->exchanges().size(), 2u + 3u);
  EXPECT_EQ(out.review.per_metric_analyses.size(), 2u);
  EXPECT_EQ(out.review.exp_results_review, "merged 5.5");
  ASSERT_EQ(out.specs.size(), 3u);
  auto& code = out.metric_values.at("coverage");
  EXPECT_EQ(code.at("spec").at("active"), false);
  EXPECT_EQ(code.at("spec").at("code_fragment"), "return 1");
  EXPECT_TRUE(code.at("value").is_null());
  EXPECT_FALSE(out.metric_values.at("length").at("value").is_null());
  EXPECT_TRUE(std::any_of(out.warnings.begin(), out.warnings.end(),
                          [](auto& w) { return w.find("made_up") != std::string::npos; }));
  for (auto& ex : sg.backend->exchanges()) {
    EXPECT_EQ(ex.request.temperature, 0.7);
    for (auto& m : ex.request.messages) EXPECT_EQ(m.content.find("987654"), std::string::npos);
    EXPECT_FALSE(ex.request.vars.count("score.test_quality"));
  }
}

TEST(ReviewAgent, EnabledCodeMetricsUseTheInstalledRunner) {
  ScriptedGateway sg({{"review:1:1:metric-gen", R"([{"name": "coverage", "code": "return 1"}])"},
                      {"review:*:*:*", "text"}});
  agents::AgentConfig cfg;
  cfg.enable_code_metrics = true;
  agents::ReviewAgent agent(sg.gateway, agents::PromptTemplates::defaults(), cfg);
  auto h = history_with_parent("m");
  auto proposal = *h.turns[1].proposal;
  auto result = aigs::testing::scores(5, 5);
  auto no_runner = agent.review(data_topic(), 1, 1, proposal, result, h, sample_records());
  EXPECT_TRUE(no_runner.metric_values.at("coverage").at("value").is_null());
  agent.set_code_runner([](const metrics::MetricSpec& s, const auto& rs) { return json{{s.name, rs.size()}}; });
  auto with_runner = agent.review(data_topic(), 1, 1, proposal, result, h, sample_records());
  EXPECT_EQ(with_runner.metric_values.at("coverage").at("value"), json({{"coverage", 2}}));
}

TEST(ReviewAgent, NoRecordsOrGarbledMetricsStillReview) {
  ScriptedGateway sg({{"review:1:1:metric-gen", "I cannot think of metrics"}, {"review:*:*:*", "text"}});
  agents::ReviewAgent agent(sg.gateway, agents::PromptTemplates::defaults());
  auto h = history_with_parent("m");
  auto out = agent.review(data_topic(), 1, 1, *h.turns[1].proposal, aigs::testing::scores(5, 5), h, {});
  EXPECT_EQ(sg.backend->exchanges().size(), 3u);
  EXPECT_TRUE(out.specs.empty());
  EXPECT_EQ(out.warnings.size(), 2u);
  EXPECT_THROW(agent.review(data_topic(), 1, 1, *h.turns[1].proposal, record::ExperimentResult::failure("x"), h, {}),
               PreconditionError);
}

TEST(ReviewAgent, EmptyReviewTextIsAnError) {
  ScriptedGateway sg({{"review:1:1:metric-gen", "[]"}, {"review:*:*:*", "   "}});
  agents::ReviewAgent agent(sg.gateway, agents::PromptTemplates::defaults());
  auto h = history_with_parent("m");
  EXPECT_THROW(agent.review(data_topic(), 1, 1, *h.turns[1].proposal, aigs::testing::scores(5, 5), h, {}), Error);
}

// ============================================================================
// Environments
// ============================================================================

namespace {

envs::PlantedFilterEnv planted() { return envs::PlantedFilterEnv(envs::PlantedFilterConfig{}); }

double val_score(const envs::Environment& env, const dsl::DslDocument& doc, std::uint64_t seed) {
  auto r = env.execute(dsl::interpret(doc, registry()), seed);
  return r.benchmark_scores.at("validation_quality").value;
}

}  // namespace

TEST(PlantedFilter, DeterministicInPlanAndSeed) {
  auto env = planted();
  auto doc = aigs::testing::filter_doc({"[P1] reasoning"}, 1);
  auto plan = dsl::interpret(doc, registry());
  EXPECT_EQ(env.execute(plan, 11), env.execute(plan, 11));
  EXPECT_NE(env.execute(plan, 11), env.execute(plan, 12));
  EXPECT_EQ(env.validation_items().size(), 1000u);
  EXPECT_EQ(env.test_items().front().id, 1000);
}

TEST(PlantedFilter, DriverPrincipleRaisesQualityByTheMargin) {
  auto env = planted();
  auto with = val_score(env, aigs::testing::filter_doc({"[P1] reasoning"}, 1), 1);
  auto without = val_score(env, aigs::testing::filter_doc({"[P4] brief"}, 1), 1);
  auto tone = val_score(env, aigs::testing::filter_doc({"[P2] tone"}, 1), 1);
  EXPECT_NEAR(with - without, 10 * 2 * 0.3, 0.5);
  EXPECT_NEAR(tone, (with + without) / 2, 0.5);
  EXPECT_EQ(env.ground_truth().at("driver_principle"), "P1");
}

TEST(PlantedFilter, RatingAndFailures) {
  auto env = planted();
  auto subset = env.rate_records({"[P1] a", "[P2] b", "no token here"}, 2);
  EXPECT_EQ(subset.kept.size(), 250u);
  EXPECT_EQ(subset.warnings.size(), 1u);
  EXPECT_THROW(env.rate_records({"[P1]"}, 0), PreconditionError);
  auto none = env.execute(dsl::interpret(aigs::testing::filter_doc({"unknown"}, 1), registry()), 1);
  EXPECT_FALSE(none.success);
  auto unfiltered = dsl::validate_or_throw(
      {{"topic_id", "data_engineering"}, {"paradigm", "unfiltered"}, {"params", json::object()}}, registry());
  EXPECT_TRUE(env.execute(dsl::interpret(unfiltered, registry()), 1).success);
  auto brief = env.agent_brief();
  EXPECT_EQ(brief.find("driver"), std::string::npos);
  EXPECT_NE(brief.find("[P3]"), std::string::npos);
}

TEST(PlantedFilter, RejectsBadConfigurations) {
  EXPECT_THROW(envs::make_environment({{"kind", "planted_filter"}, {"n", 1001}}), ConfigError);
  EXPECT_THROW(envs::make_environment({{"kind", "planted_filter"}, {"margin", 0.9}}), ConfigError);
  EXPECT_THROW(envs::make_environment({{"kind", "weather"}}), ConfigError);
  EXPECT_THROW(envs::make_environment({{"n", 8}}), ConfigError);
}

TEST(ParamSurface, OptimumMinimisesValidationLoss) {
  auto env = envs::make_environment({{"kind", "param_surface"}, {"sigma", 0.0}});
  EXPECT_EQ(env->topic_id(), "language_modeling");
  auto opt = env->ground_truth().at("optimum");
  auto doc = [&](const json& params) {
    return dsl::validate_or_throw({{"topic_id", "language_modeling"}, {"paradigm", "constrained_config"}, {"params", params}},
                                  registry());
  };
  json best{{"n_layer", opt["n_layer"].get<double>()},
            {"heads", opt["heads"]},
            {"dropout", opt["dropout"]},
            {"learning_rate", opt["learning_rate"]},
            {"activation", opt["activation"]}};
  best["n_layer"] = static_cast<std::int64_t>(opt["n_layer"].get<double>());
  auto loss = [&](const json& p) {
    return env->execute(dsl::interpret(doc(p), registry()), 3).benchmark_scores.at("val_loss").value;
  };
  double at_opt = loss(best);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    json p{{"n_layer", std::int64_t(1 + rng() % 24)},
           {"heads", std::vector<std::string>{"low", "medium", "high"}[rng() % 3]},
           {"dropout", std::vector<std::string>{"none", "low", "medium", "high"}[rng() % 4]},
           {"learning_rate", 1e-5 + (rng() % 1000) * 1e-5}};
    EXPECT_GE(loss(p), at_opt);
  }
}

// ============================================================================
// Screening
// ============================================================================

namespace {

using Seq = std::vector<std::optional<std::map<std::string, double>>>;

}  // namespace

TEST(Screening, EqualsNaiveScanOnRandomSequences) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 10), thr(0.1, 4);
  std::size_t decreases = 0;
  for (int k = 0; k < 1000; ++k) {
    Seq seq;
    for (std::size_t i = 0, n = 2 + rng() % 10; i < n; ++i) {
      if (rng() % 8 == 0) {
        seq.emplace_back(std::nullopt);
        continue;
      }
      std::map<std::string, double> m{{"val", u(rng)}};
      if (rng() % 2) m["test"] = u(rng);
      seq.emplace_back(m);
    }
    std::map<std::string, double> t{{"val", thr(rng)}};
    if (rng() % 2) t["test"] = thr(rng);
    auto flagged = falsification::flag_adjacent(seq, t);
    std::set<std::size_t> got;
    for (auto& [i, deltas] : flagged) {
      got.insert(i);
      for (auto& [_, d] : deltas) decreases += d < 0;
    }
    ASSERT_EQ(got, aigs::testing::naive_flags(seq, t));
    ASSERT_EQ(got.size(), flagged.size());
    for (std::size_t i = 1; i < flagged.size(); ++i) {
      auto mx = [](auto& m) {
        double x = 0;
        for (auto& [_, d] : m) x = std::max(x, std::abs(d));
        return x;
      };
      ASSERT_GE(mx(flagged[i - 1].second), mx(flagged[i].second));
    }
  }
  EXPECT_GT(decreases, 0u);
}

TEST(Screening, NeedsTwoSuccessfulTurns) {
  record::TurnRecord a, b;
  a.result = aigs::testing::scores(1, 1);
  b.iteration = 1;
  b.result = record::ExperimentResult::failure("x");
  falsification::FalsificationConfig cfg;
  cfg.thresholds = {{"validation_quality", 0.5}};
  EXPECT_THROW(falsification::screen({a, b}, cfg), PreconditionError);
  b.result = aigs::testing::scores(0.2, 1);
  auto flagged = falsification::screen({a, b}, cfg);
  ASSERT_EQ(flagged.size(), 1u);
  EXPECT_DOUBLE_EQ(flagged[0].deltas.at("validation_quality"), -0.8);
}

TEST(Screening, HeldOutBenchmarksAreNotRenderedWithValues) {
  record::TurnRecord a, b;
  a.result = aigs::testing::scores(1, 1);
  b.iteration = 1;
  b.result = aigs::testing::scores(1, 987654.321);
  falsification::FalsificationConfig cfg;
  cfg.thresholds = {{"test_quality", 0.5}};
  auto flagged = falsification::screen({a, b}, cfg);
  ASSERT_EQ(flagged.size(), 1u);
  auto text = falsification::render_pair(flagged[0], {a, b});
  EXPECT_EQ(text.find("987654"), std::string::npos);
  EXPECT_EQ(text.find("test_quality"), std::string::npos);
}

// ============================================================================
// Gates and verdicts
// ============================================================================

TEST(Gate, DirectionFollowsPredictedEffect) {
  std::vector<double> low{1.0, 1.1, 0.9}, high{3.0, 3.1, 2.9};
  auto pos = falsification::compute_gate(low, high, "positive", 0.05);
  EXPECT_TRUE(pos.usable && pos.passed && !pos.opposite);
  auto neg = falsification::compute_gate(low, high, "negative", 0.05);
  EXPECT_TRUE(neg.usable && !neg.passed && neg.opposite);
  auto thin = falsification::compute_gate({1.0}, high, "positive", 0.05);
  EXPECT_FALSE(thin.usable);
}

TEST(Gate, CloseTwoTrialArmsAreNotSignificant) {
  auto g = falsification::compute_gate({7.1625, 6.75}, {6.475, 6.5375}, "negative", 0.05);
  EXPECT_NEAR(g.p_gate, 0.135, 0.005);
  EXPECT_FALSE(g.passed);
  EXPECT_FALSE(g.opposite);
}

TEST(Verdict, DecisionRule) {
  using falsification::Judgement;
  using falsification::Status;
  falsification::Gate pass, opp, weak, unusable;
  pass.usable = weak.usable = opp.usable = true;
  pass.passed = true;
  opp.opposite = true;
  EXPECT_EQ(falsification::decide({pass, pass}, Judgement::affirm), Status::verified);
  EXPECT_EQ(falsification::decide({pass, weak}, Judgement::affirm), Status::inconclusive);
  EXPECT_EQ(falsification::decide({pass, unusable}, Judgement::affirm), Status::inconclusive);
  EXPECT_EQ(falsification::decide({pass, opp}, Judgement::affirm), Status::falsified);
  EXPECT_EQ(falsification::decide({pass}, Judgement::deny), Status::falsified);
  EXPECT_EQ(falsification::decide({pass}, Judgement::unavailable), Status::inconclusive);
  EXPECT_EQ(falsification::decide({}, Judgement::affirm), Status::inconclusive);
}

TEST(Verdict, JudgeParsing) {
  auto a = falsification::parse_judge("Thoughts...\nverdict : affirm\nDISCOVERY: X matters.");
  EXPECT_EQ(a.judgement, falsification::Judgement::affirm);
  EXPECT_EQ(a.discovery, "X matters.");
  EXPECT_EQ(falsification::parse_judge("VERDICT: DENY").judgement, falsification::Judgement::deny);
  EXPECT_EQ(falsification::parse_judge("maybe").judgement, falsification::Judgement::unavailable);
}

TEST(Verdict, WeakestGateIsLargestUsableP) {
  falsification::Gate a, b, c;
  a.usable = c.usable = true;
  a.p_gate = 0.01;
  b.p_gate = 0.9;
  c.p_gate = 0.04;
  EXPECT_EQ(falsification::weakest_gate({a, b, c}), 2u);
}

// ============================================================================
// Ablation plans
// ============================================================================

namespace {

std::vector<record::TurnRecord> ablation_lineage() {
  record::TurnRecord t0;
  t0.result = aigs::testing::scores(4, 4);
  auto turn = [](int i, std::vector<std::string> principles, std::int64_t threshold) {
    record::TurnRecord t;
    t.iteration = i;
    record::Proposal p;
    p.idea = "i";
    p.methodology_text = "m";
    p.methodology_dsl = aigs::testing::filter_doc(std::move(principles), threshold);
    p.exp_settings.baseline_turn = i - 1;
    p.hypothesis = "h";
    p.related_feature = "f";
    if (i > 1) p.rebuttal = "r";
    t.proposal = p;
    t.result = aigs::testing::scores(5, 5);
    t.review = record::Review{"a", "b", {}};
    return t;
  };
  auto t1 = turn(1, {"[P2] tone"}, 1);
  auto t2 = turn(2, {"[P1] reasoning", "[P3] example", "[P2] tone"}, 2);
  t2.parent = record::TurnRef{1, 1};
  auto t3 = turn(3, {"[P2] tone"}, 1);
  t3.parent = record::TurnRef{2, 1};
  t3.result = record::ExperimentResult::failure("crash");
  return {t0, t1, t2, t3};
}

falsification::DiscoveryCandidate candidate() {
  falsification::DiscoveryCandidate c;
  c.id = 1;
  c.key_factor = "[P1] reasoning";
  c.predicted_effect = "positive";
  c.source = {{1, 1}, {2, 1}, {{"validation_quality", 2.0}}, 2.0};
  return c;
}

}  // namespace

TEST(Ablation, PlansAreValidatedAndTruncated) {
  ScriptedGateway sg(std::map<std::string, std::string>{});
  falsification::FalsificationConfig cfg;
  cfg.max_plans = 3;
  falsification::FalsificationAgent agent(sg.gateway, registry(), agents::PromptTemplates::defaults(), cfg);
  std::vector<std::string> warnings;
  auto plans = agent.parse_plans(R"({"plans": [
      {"plan": "drop P1", "baseline_turn": 2, "ablate": [{"param": "principles", "items": [0]}]},
      {"plan": "failed base", "baseline_turn": 3, "ablate": [{"param": "principles", "items": [0]}]},
      {"plan": "turn zero", "baseline_turn": 0, "ablate": [{"param": "principles", "items": [0]}]},
      {"plan": "extra", "baseline_turn": 2, "ablate": [{"param": "threshold", "value": 1}]}]})",
                                 candidate(), ablation_lineage(), warnings);
  ASSERT_EQ(plans.size(), 1u);
  EXPECT_EQ(plans[0].baseline, (record::TurnRef{2, 1}));
  EXPECT_EQ(plans[0].ablated_dsl.list("principles"), (std::vector<std::string>{"[P3] example", "[P2] tone"}));
  EXPECT_EQ(falsification::changed_params(plans[0].baseline_dsl, plans[0].ablated_dsl), std::set<std::string>{"principles"});
  EXPECT_EQ(warnings.size(), 3u);

  warnings.clear();
  auto more = agent.parse_plans(R"({"plans": [
      {"plan": "invalid", "baseline_turn": 2, "ablate": [{"param": "principles", "items": [0, 1]}]},
      {"plan": "vacuous", "baseline_turn": 2, "ablate": [{"param": "threshold", "value": 2}]},
      {"plan": "out of range", "baseline_turn": 2, "ablate": [{"param": "principles", "items": [9]}]}]})",
                                candidate(), ablation_lineage(), warnings);
  EXPECT_TRUE(more.empty());
  EXPECT_EQ(warnings.size(), 4u);

  warnings.clear();
  EXPECT_TRUE(agent.parse_plans("no json here", candidate(), ablation_lineage(), warnings).empty());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Ablation, TrialsAreSeededPerArmAndDeterministic) {
  auto env = planted();
  falsification::AblationPlan plan;
  plan.candidate_id = 1;
  plan.index = 1;
  plan.baseline_dsl = aigs::testing::filter_doc({"[P1] reasoning", "[P2] tone"}, 1);
  plan.ablated_dsl = aigs::testing::filter_doc({"[P2] tone"}, 1);
  plan.trials_per_arm = 3;
  auto a = falsification::run_trials(plan, env, registry(), 5, 4);
  auto b = falsification::run_trials(plan, env, registry(), 5, 1);
  std::set<std::uint64_t> seeds;
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.ablation[k].score, b.ablation[k].score);
    EXPECT_EQ(a.baseline[k].seed, b.baseline[k].seed);
    seeds.insert(a.ablation[k].seed);
    seeds.insert(a.baseline[k].seed);
  }
  EXPECT_EQ(seeds.size(), 6u);
  EXPECT_EQ(a.ablation[0].seed, derive_seed(5, {0xfa15, 1, 1, 1, 0}));
  auto g = falsification::compute_gate(falsification::TrialSet::usable(a.ablation),
                                       falsification::TrialSet::usable(a.baseline), "positive", 0.05);
  EXPECT_TRUE(g.passed);
}

TEST(FalsificationAgent, CandidatesAreCappedAtK) {
  ScriptedGateway sg({
      {"discovery:2:1:candidates", R"({"candidates": [{"key_factor": "A", "predicted_effect": "negative"},
          {"key_factor": ""}, {"key_factor": "B"}]})"},
      {"discovery:3:1:candidates", R"({"candidates": [{"key_factor": "C"}]})"},
  });
  falsification::FalsificationConfig cfg;
  cfg.max_candidates = 2;
  falsification::FalsificationAgent agent(sg.gateway, registry(), agents::PromptTemplates::defaults(), cfg);
  std::vector<falsification::FlaggedPair> flagged = {{{1, 1}, {2, 1}, {{"validation_quality", 3.0}}, 3.0},
                                                     {{2, 1}, {3, 1}, {{"validation_quality", -2.0}}, 2.0}};
  std::vector<std::string> warnings;
  auto cands = agent.generate_candidates(flagged, ablation_lineage(), data_topic(), warnings);
  ASSERT_EQ(cands.size(), 2u);
  EXPECT_EQ(cands[0].key_factor, "A");
  EXPECT_EQ(cands[0].predicted_effect, "negative");
  EXPECT_EQ(cands[1].key_factor, "B");
  EXPECT_EQ(cands[1].id, 2);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(sg.backend->count_with_prefix("discovery:"), 2u);
  EXPECT_EQ(sg.gateway.ledger().usage(llm::kPhaseFalsification).calls, 2);
}

// ============================================================================
// Evaluation statistics
// ============================================================================

TEST(EvalStats, OverallIsDimensionMean) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    int a = rng() % 3, b = rng() % 3, c = rng() % 3;
    EXPECT_EQ(falsification::FalsificationEvalRecord(a, b, c).overall(), (a + b + c) / 3.0);
  }
  EXPECT_THROW(falsification::FalsificationEvalRecord(3, 0, 0), PreconditionError);
}

TEST(EvalStats, ConstructedMultisetMatchesOracle) {
  auto oracle = aigs::testing::load_json("tests/data/welch_oracle.json").at("eval_multiset");
  std::vector<falsification::FalsificationEvalRecord> recs;
  for (auto s : oracle.at("scores").get<std::vector<double>>()) recs.emplace_back(static_cast<int>(s), 2, 1);
  auto agg = falsification::aggregate_eval(recs);
  EXPECT_NEAR(agg.at("importance").avg, 1.80, 1e-12);
  EXPECT_NEAR(agg.at("importance").std, oracle.at("std").get<double>(), 1e-12);
  EXPECT_NEAR(agg.at("importance").p, oracle.at("p_left").get<double>(), 1e-6);
  EXPECT_LT(agg.at("importance").p, 0.05);
  EXPECT_EQ(agg.at("importance").min, 1.0);
  EXPECT_EQ(agg.at("consistency").p, 0.5);
  EXPECT_EQ(agg.at("correctness").p, 0.0);
  EXPECT_NEAR(agg.at("overall").avg, (1.8 + 2 + 1) / 3, 1e-12);
}
