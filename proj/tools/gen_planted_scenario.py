#!/usr/bin/env python3
"""Writes configs/planted.json and configs/scenarios/scenarioA.json.

The scenario plants one driver principle ([P1]) in the synthetic filter
environment and scripts a lineage whose flagged step adds it. The decoy
candidate ([P2]) rides along on the same step.
"""
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

P = {
    "P1": "[P1] The response walks through its reasoning step by step.",
    "P2": "[P2] The response keeps a warm, friendly tone.",
    "P3": "[P3] The response includes a concrete example.",
    "P4": "[P4] The response is brief and skips intermediate reasoning.",
}

# (iteration, thread) -> (principle ids, threshold, methodology text)
PLAN = {
    (1, 1): (["P2"], 1, "Keep only pairs that read as warm and friendly."),
    (1, 2): (["P2", "P4"], 1, "Accept any record that is either friendly in tone or short and to the point."),
    (1, 3): (["P4"], 1, "Prefer brevity: retain answers that skip intermediate reasoning."),
    (1, 4): (["P4"], 1, "Favor terse responses without worked steps."),
    (2, 1): (["P2", "P3"], 1, "Admit records that are friendly or ground their answer in an example."),
    (2, 2): (["P3"], 1, "Retain examples-first answers that show a concrete case."),
    (2, 3): (["P1", "P3", "P2"], 2, "Require two of three: step-by-step reasoning, a concrete example, a friendly tone."),
    (2, 4): (["P4", "P3"], 1, "Pair brevity with concrete examples as alternative admission routes."),
    (3, 1): (["P1", "P3", "P2"], 2, "Re-run the two-of-three rule to confirm its gain holds."),
    (3, 2): (["P2"], 1, "Drop the reasoning route and test whether friendliness alone carries it."),
    (3, 3): (["P2"], 1, "Strip back to tone-only filtering as a control."),
    (3, 4): (["P2"], 1, "Check a tone-only filter again on this branch."),
}

# assign_parents(4, 2) and the retained sets the planted scores produce
PARENT = {
    2: {1: (1, 1), 2: (1, 1), 3: (1, 2), 4: (1, 2)},
    3: {1: (2, 3), 2: (2, 3), 3: (2, 1), 4: (2, 1)},
}


def dsl(ids, threshold):
    return {"paradigm": "principled_filtering",
            "params": {"principles": [P[i] for i in ids], "threshold": threshold}}


def proposal(i, ids, threshold, method, rebuttal=None):
    parts = [
        "### IDEA", f"Filter the instruction pool with principles {', '.join(ids)}.",
        "### METHODOLOGY", method,
        "### DSL", "```json", json.dumps(dsl(ids, threshold)), "```",
        "### SETTINGS", f"baseline_turn: {i - 1}",
        "### HYPOTHESIS", "The selected principles isolate higher quality responses.",
        "### RELATED FEATURE", "Principle coverage of the kept subset.",
    ]
    if i > 1:
        parts += ["### REBUTTAL", rebuttal or "The previous review asked for a sharper filter; this one narrows it."]
    return "\n".join(parts) + "\n"


def scenario():
    s = {}
    for (i, j), (ids, th, method) in PLAN.items():
        key = f"proposal:{i}:{j}"
        s[f"{key}:candidate-1"] = proposal(i, ids, th, method)
        # Candidates 2 and 3 restate the parent methodology, so candidate 1 is the most diverse.
        if i == 1:
            near = "Keep pairs chosen by the same principle list."
        else:
            near = PLAN[PARENT[i][j]][2]
        ids_p, th_p, _ = PLAN[PARENT[i][j]] if i > 1 else (ids, th, None)
        s[f"{key}:candidate-2"] = proposal(i, ids_p, th_p, near)
        s[f"{key}:candidate-3"] = proposal(i, ids_p, th_p, near + " Same settings.")
    # unparseable candidate with a scripted repair
    s["proposal:1:4:candidate-2"] = "I would filter for brevity.\n"
    s["proposal:1:4:repair-2"] = proposal(1, ["P4"], 1, "Keep pairs chosen by the same principle list.")
    # rebuttal quoting the parent's validation score
    s["proposal:2:3:candidate-1"] = proposal(
        2, *PLAN[(2, 3)][:2], PLAN[(2, 3)][2],
        rebuttal="The parent scored {{prev.validation_quality}} on validation; adding reasoning should lift it.")

    s["review:*:*:metric-gen"] = json.dumps({"metrics": [{"name": "length"}, {"name": "keyword_overlap"},
                                                          {"name": "extremal_samples"}]})
    s["review:*:*:*"] = "The kept subset looks consistent with the stated principles."
    s["review:*:*:merge"] = ("Turn ({{iteration}},{{thread}}) reached validation quality {{score.validation_quality}}. "
                             "The subset is coherent; widen coverage next.")
    s["review:*:*:proposal-review"] = "The proposal is well scoped. Consider which principle carries the gain."

    s["discovery:2:3:candidates"] = json.dumps({"candidates": [
        {"key_factor": "[P1] step-by-step reasoning in responses drives the quality gain",
         "predicted_effect": "positive",
         "evidence": "The jump appears exactly when [P1] enters the principle list."},
        {"key_factor": "[P2] a warm, friendly tone drives the quality gain",
         "predicted_effect": "positive",
         "evidence": "[P2] is present on both sides of the jump and may interact with [P1]."},
    ]})
    s["ablation:1:0:plan"] = json.dumps({"plans": [
        {"plan": "Remove [P1] from the best turn's principles.", "baseline_turn": 3,
         "ablate": [{"param": "principles", "items": [0]}]},
        {"plan": "Remove [P1] from the flagged turn's principles.", "baseline_turn": 2,
         "ablate": [{"param": "principles", "items": [0]}]},
    ]})
    s["ablation:2:0:plan"] = json.dumps({"plans": [
        {"plan": "Remove [P2] from the best turn's principles.", "baseline_turn": 3,
         "ablate": [{"param": "principles", "items": [2]}]},
    ]})
    s["judge:1:0:verdict"] = ("VERDICT: AFFIRM\nDISCOVERY: Keeping responses that reason step by step ([P1]) "
                              "raises validation quality; removing it lowers the score in every ablation.")
    s["judge:2:0:verdict"] = ("VERDICT: DENY\nDISCOVERY: Tone ([P2]) is not the driver; removing it raised "
                              "the score.")
    return s


def config():
    return {
        "topic": "data_engineering",
        "topic_description": "Select a subset of an instruction-tuning pool by natural-language principles "
                             "so that a model trained on it answers better.",
        "M": 3, "N": 4, "N_s": 2, "seed": 20240601, "parallelism": 4,
        "trivial_method": {"paradigm": "unfiltered", "params": {}},
        "environment": {"kind": "planted_filter", "n": 1000, "margin": 0.3, "sigma": 0.02},
        "agents": {"proposal_candidates": 3},
        "falsification": {"thresholds": {"validation_quality": 1.5}, "K": 2, "T": 2, "trials_per_arm": 2,
                          "alpha": 0.05},
    }


def main():
    (ROOT / "configs" / "scenarios").mkdir(parents=True, exist_ok=True)
    (ROOT / "configs" / "planted.json").write_text(json.dumps(config(), indent=2) + "\n")
    (ROOT / "configs" / "scenarios" / "scenarioA.json").write_text(json.dumps(scenario(), indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
