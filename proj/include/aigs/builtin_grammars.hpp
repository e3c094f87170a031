#pragma once

// Built-in grammars for the three research topics. Mirrors grammars/*.json.

#include "dsl.hpp"

namespace aigs::dsl {

inline const std::vector<std::string_view>& builtin_grammar_texts() {
  static const std::vector<std::string_view> texts = {
      R"json({"actions":["rate_each_record","keep_if_passes","run_benchmarks"],"paradigms":{"principled_filtering":{"params":[{"kind":"natural_language_list","max_items":32,"min_items":1,"name":"principles","required":true},{"kind":"integer","min":1,"name":"threshold","required":true}],"plan":[{"action":"rate_each_record","args":{"principles":"$principles"}},{"action":"keep_if_passes","args":{"threshold":"$threshold"}},{"action":"run_benchmarks","args":{}}],"rules":[{"kind":"le_list_length","lhs":"threshold","message":"threshold cannot exceed the number of principles","name":"threshold_within_principles","rhs":"principles"}]},"unfiltered":{"params":[{"kind":"natural_language_text","name":"note","required":false}],"plan":[{"action":"run_benchmarks","args":{}}],"rules":[]}},"topic_id":"data_engineering","version":1})json",
      R"json({"actions":["ingest_seed_set","synthesize_instructions","generate_responses","fine_tune","run_benchmarks"],"paradigms":{"seeded_synthesis":{"params":[{"kind":"flag","name":"use_seed","required":true},{"kind":"natural_language_list","max_items":32,"min_items":1,"name":"requirements","required":true}],"plan":[{"action":"ingest_seed_set","args":{},"when":"use_seed"},{"action":"synthesize_instructions","args":{"requirements":"$requirements"}},{"action":"generate_responses","args":{}},{"action":"fine_tune","args":{}},{"action":"run_benchmarks","args":{}}],"rules":[]}},"topic_id":"self_instruct","version":1})json",
      R"json({"actions":["configure_model","configure_training","train","run_benchmarks"],"paradigms":{"constrained_config":{"params":[{"kind":"integer","max":24,"min":1,"name":"n_layer","required":true},{"allowed":["low","medium","high"],"kind":"enum","name":"heads","required":true},{"allowed":["none","low","medium","high"],"kind":"enum","name":"dropout","required":true},{"kind":"real","max":0.01,"min":1e-05,"name":"learning_rate","required":true},{"allowed":["gelu","relu","swiglu"],"kind":"enum","name":"activation","required":false},{"kind":"integer","max":10000,"min":0,"name":"warmup_iters","required":false},{"kind":"integer","max":100000,"min":100,"name":"max_iters","required":false},{"kind":"natural_language_text","name":"schedule_note","required":false},{"kind":"code_fragment","name":"custom_block","required":false}],"plan":[{"action":"configure_model","args":{"activation":"$activation","custom_block":"$custom_block","dropout":"$dropout","heads":"$heads","n_layer":"$n_layer"}},{"action":"configure_training","args":{"learning_rate":"$learning_rate","max_iters":"$max_iters","warmup_iters":"$warmup_iters"}},{"action":"train","args":{}},{"action":"run_benchmarks","args":{}}],"rules":[{"kind":"le","lhs":"warmup_iters","message":"warmup cannot be longer than training","name":"warmup_within_training","rhs":"max_iters"}]}},"topic_id":"language_modeling","version":1})json",
  };
  return texts;
}

/// Registers every built-in grammar whose topic is not yet present.
inline void register_builtin_grammars(GrammarRegistry& reg) {
  for (auto text : builtin_grammar_texts()) {
    auto g = grammar_from_json(json::parse(text));
    if (!reg.find(g.topic_id)) reg.register_grammar(std::move(g));
  }
}

}  // namespace aigs::dsl
