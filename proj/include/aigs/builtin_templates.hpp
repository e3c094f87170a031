#pragma once

// Default prompt templates. Mirrors templates/*.txt.

#include <map>
#include <string>

namespace aigs::agents {

inline const std::map<std::string, std::string>& builtin_templates() {
  static const std::map<std::string, std::string> texts = {
      {"ablation_plan", R"tmpl(Research topic:
{topic}

Methodologies are written in the topic DSL. Grammar:
{dsl_schema}

Research history of the retained lineage:
{history}

Design single-factor ablation experiments for the discovery candidate below. Pick an earlier iteration as the baseline, follow its experiment settings, and remove or alter only the DSL elements tied to the factor. Answer with a JSON object holding a "plans" list whose entries have "plan", "baseline_turn" and "ablate" (a list of {"param", "items"} removals or {"param", "value"} replacements).
)tmpl"},
      {"discovery_candidates", R"tmpl(Research topic:
{topic}

Research history of the retained lineage:
{history}

The adjacent turns below show a significant change in results. Name the key factors that could explain it. Answer with a JSON object holding a "candidates" list whose entries have "key_factor", "predicted_effect" (positive or negative) and "evidence".
)tmpl"},
      {"judge", R"tmpl(Research topic:
{topic}

Decide whether the discovery candidate below holds, given the complete record of its ablation trials. Answer with a line "VERDICT: AFFIRM" or "VERDICT: DENY", followed by a line starting with "DISCOVERY:" that states the resulting scientific discovery.
)tmpl"},
      {"merge", R"tmpl(Research topic:
{topic}

Merge the per-metric analyses below into one review of the experimental results.
)tmpl"},
      {"metric_analysis", R"tmpl(Research topic:
{topic}

Analyse the metric below for the experiment that was just run. State what it reveals about the methodology.
)tmpl"},
      {"metric_gen", R"tmpl(Research topic:
{topic}

Choose the metrics that best explain the experiment below. Builtin metrics: length, keyword_overlap, sentiment, extremal_samples. You may also write a new metric as a code fragment. Answer with a JSON object holding a "metrics" list whose entries have a "name" and optionally "level" and "code".
)tmpl"},
      {"proposal", R"tmpl(Research topic:
{topic}

Methodologies are written in the topic DSL. Grammar:
{dsl_schema}

Research history of your lineage:
{history}

Latest review:
{review}

Write one new proposal that improves on the history. Answer with these sections, each introduced by its header line:
### IDEA
### METHODOLOGY
### DSL
(a JSON document valid under the grammar)
### SETTINGS
(lines of "key: value"; baseline_turn names the earlier iteration to compare against)
### HYPOTHESIS
### RELATED FEATURE
### REBUTTAL
(omit in the first iteration; otherwise answer the latest review)
)tmpl"},
      {"proposal_review", R"tmpl(Research topic:
{topic}

Research history of this lineage:
{history}

Review of the experimental results:
{review}

Review the proposal below. Judge whether its idea and methodology are sound given the history and the results, and suggest concrete improvements.
)tmpl"},
      {"repair", R"tmpl(Your previous proposal could not be parsed. Rewrite it so that every required section is present and the DSL section holds a JSON document valid under this grammar:
{dsl_schema}
)tmpl"},
      {"system", R"tmpl(You are one agent of an automated research system. Work only through the structured formats requested, never invent experiment results, and keep answers concise.
)tmpl"},
  };
  return texts;
}

}  // namespace aigs::agents
