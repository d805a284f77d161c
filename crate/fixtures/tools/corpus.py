"""Writes fixtures/parse_corpus.json: annotated provider replies.

Each case names the decision kind, the raw reply and the expected outcome:
"ok", or the error kind plus the offending field where one applies.
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

PROGRESS = [
    {"Subgoal": "Walk down the hall", "Status": "In Progress"},
    {"Subgoal": "Stop at the door", "Status": "Not Started"},
]
HISTORY = {"Trajectory Summary": "Walked 2 m down the hall.", "Instruction Progress": PROGRESS}


def initial(**over):
    d = {
        "Thought": "The hallway is in view 1.",
        "Selected Image": 1,
        "Safe Distance": 2.5,
        "Trajectory Summary": "Started facing the hallway.",
        "Instruction Progress": PROGRESS,
    }
    d.update(over)
    return {k: v for k, v in d.items() if v is not DROP}


def step(**over):
    d = {
        "Thought": "The door is straight ahead.",
        "Selected Image": 2,
        "Action Options": "C",
        "Degree": None,
        "Safe Distance": 1.5,
        "Confuse": False,
        "Updated History": HISTORY,
    }
    d.update(over)
    return {k: v for k, v in d.items() if v is not DROP}


def disamb(**over):
    d = {"Selected Image": 7, "Safe Distance": 1.0, "Updated History": HISTORY}
    d.update(over)
    return {k: v for k, v in d.items() if v is not DROP}


DROP = object()
J = json.dumps
CASES = []


def case(name, kind, raw, expect="ok", field=None):
    c = {"name": name, "kind": kind, "raw": raw if isinstance(raw, str) else J(raw, indent=2), "expect": expect}
    if field:
        c["field"] = field
    CASES.append(c)


# valid, plain
case("initial plain", "initial", initial())
case("step plain", "step", step())
case("disambiguation plain", "disambiguation", disamb())
case("step stop option", "step", step(**{"Action Options": "F", "Safe Distance": 0}))
case("step left 60", "step", step(**{"Action Options": "A", "Degree": 60, "Selected Image": 1}))
case("step right 30", "step", step(**{"Action Options": "D", "Degree": 30, "Selected Image": 3}))
case("step confused", "step", step(Confuse=True))
case("initial image 12", "initial", initial(**{"Selected Image": 12}))
case("disambiguation image 1", "disambiguation", disamb(**{"Selected Image": 1}))
case("initial zero distance", "initial", initial(**{"Safe Distance": 0}))
# valid, fenced or decorated
case("initial fenced", "initial", "```json\n" + J(initial(), indent=2) + "\n```")
case("step fenced no tag", "step", "```\n" + J(step()) + "\n```")
case("step with prose around", "step", "Sure! Here is my answer:\n" + J(step()) + "\nHope this helps.")
case("disambiguation with prose", "disambiguation", "After the rescan I choose:\n\n" + J(disamb(), indent=4))
case("step brace in thought", "step", J(step(Thought="A sign says {exit} on the left.")))
case("step snake case keys", "step", J({
    "thought": "Ahead.", "selected_image": 2, "action_options": "C", "degree": None,
    "safe_distance": 1.0, "confuse": False,
    "updated_history": {"trajectory_summary": "x", "instruction_progress": PROGRESS}}))
case("initial lowercase keys", "initial", J({k.lower(): v for k, v in initial().items()}))
case("step progress as map", "step", J(step(**{"Updated History": {
    "Trajectory Summary": "x", "Instruction Progress": {"Walk down the hall": "Completed", "Stop at the door": "In Progress"}}})))
case("step extra field ignored", "step", J(dict(step(), Notes="ignored")))
case("step option with spaces", "step", J(step(**{"Action Options": " C "})))
case("initial lowercase statuses", "initial", J(initial(**{"Instruction Progress": [
    {"Subgoal": "Walk", "Status": "in progress"}, {"Subgoal": "Stop", "Status": "not started"}]})))
case("two objects takes the first", "step", J(step()) + "\n" + J(step(**{"Action Options": "F"})))
case("disambiguation fenced", "disambiguation", "```json\n" + J(disamb()) + "\n```")
case("step unicode thought", "step", J(step(Thought="Café sign ahead → keep going."), ensure_ascii=False))
# malformed
case("empty reply", "step", "", "malformed_output")
case("prose only", "initial", "I would go forward through the door.", "malformed_output")
case("truncated object", "step", J(step())[:60], "malformed_output")
case("object inside an array", "disambiguation", J([disamb()]))
case("bare array", "step", "[1, 2, 3]", "malformed_output")
case("single quotes", "step", J(step()).replace('"', "'"), "malformed_output")
case("unclosed fence", "initial", "```json\n{\"Thought\": \"x\", ", "malformed_output")
# schema violations
case("missing thought", "step", step(Thought=DROP), "schema_violation", "Thought")
case("missing confuse", "step", step(Confuse=DROP), "schema_violation", "Confuse")
case("missing history", "step", step(**{"Updated History": DROP}), "schema_violation", "Updated History")
case("unknown option", "step", step(**{"Action Options": "G"}), "schema_violation", "Action Options")
case("confuse as string", "step", step(Confuse="false"), "schema_violation", "Confuse")
case("image as string", "initial", initial(**{"Selected Image": "3"}), "schema_violation", "Selected Image")
case("distance as string", "disambiguation", disamb(**{"Safe Distance": "1.0 m"}), "schema_violation", "Safe Distance")
case("degree as string", "step", step(Degree="30"), "schema_violation", "Degree")
case("unknown status", "step", step(**{"Updated History": {"Trajectory Summary": "x", "Instruction Progress": [
    {"Subgoal": "Walk", "Status": "Halfway"}]}}), "schema_violation", "Instruction Progress")
case("initial two in progress", "initial", initial(**{"Instruction Progress": [
    {"Subgoal": "a", "Status": "In Progress"}, {"Subgoal": "b", "Status": "In Progress"}]}), "schema_violation", "Instruction Progress")
case("initial already completed", "initial", initial(**{"Instruction Progress": [
    {"Subgoal": "a", "Status": "Completed"}, {"Subgoal": "b", "Status": "In Progress"}]}), "schema_violation", "Instruction Progress")
case("duplicate key after normalization", "step",
     J(step())[:-1] + ', "selected_image": 3}', "schema_violation", "Selected Image")
case("history not an object", "disambiguation", disamb(**{"Updated History": "went left"}), "schema_violation", "Updated History")
# range violations
case("step image 4", "step", step(**{"Selected Image": 4}), "range_violation", "Selected Image")
case("initial image 13", "initial", initial(**{"Selected Image": 13}), "range_violation", "Selected Image")
case("disambiguation image 0", "disambiguation", disamb(**{"Selected Image": 0}), "range_violation", "Selected Image")
case("negative distance", "step", step(**{"Safe Distance": -0.5}), "range_violation", "Safe Distance")
case("degree 45", "step", step(Degree=45), "range_violation", "Degree")
case("degree 90", "step", step(Degree=90), "range_violation", "Degree")

assert len(CASES) == 50, len(CASES)
(ROOT / "parse_corpus.json").write_text(json.dumps(CASES, indent=1, ensure_ascii=False) + "\n")
print(len(CASES), "cases")
