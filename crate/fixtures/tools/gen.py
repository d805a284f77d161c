"""Builds the scripted suites under fixtures/suites from compact plans.

Each plan token is one provider reply (or a marker):

    I<n> <d>        initial decision: panoramic image n, safe distance d
    <opt> <d>       step decision with option A-E and safe distance d
    <opt> <d> ?     the same step flagged as confused
    R<n> <d>        disambiguation decision after a re-scan
    F               stop
    P               one more subgoal completed from here on
    X <text>        a malformed reply before the next decision

While generating, every executed motion is checked so that neither the
clearance clamp nor the collision clamp can bind; the resulting poses feed
the golden metrics. Run from the repository root:

    python3 fixtures/tools/gen.py [--show]
"""

import json
import math
import sys
from pathlib import Path

from oracle import (
    COLLISION_MARGIN,
    OPTION_BINS,
    OPTION_TURNS,
    PANORAMIC_HALF_ANGLE,
    SAFETY_MARGIN,
    World,
    aggregate,
    geodesic,
    score,
)

ROOT = Path(__file__).resolve().parents[1]
SHOW = "--show" in sys.argv


def norm(deg):
    return deg % 360.0


def signed(deg):
    d = norm(deg)
    return d - 360.0 if d > 180.0 else d


def progress(subgoals, done):
    out = []
    for i, s in enumerate(subgoals):
        status = "Completed" if i < done else ("In Progress" if i == done else "Not Started")
        out.append({"Subgoal": s, "Status": status})
    return out


IMAGE_FOR_OPTION = {"A": 1, "B": 1, "C": 2, "D": 3, "E": 3, "F": 2}
DEGREE_FOR_OPTION = {"A": 60, "B": 30, "C": None, "D": 30, "E": 60, "F": None}


def wrap(body, style):
    text = json.dumps(body, indent=2, ensure_ascii=False)
    if style == 1:
        return "```json\n" + text + "\n```"
    if style == 2:
        return "Here is my decision.\n" + text + "\nLet me know the next observation."
    return text


class Episode:
    def __init__(self, suite, eid, world, start, goal, instruction, subgoals, reference, plan, radius=3.0):
        self.suite, self.id, self.world_name = suite, eid, world
        self.world = World(ROOT / "worlds" / f"{world}.json")
        self.start, self.goal = start, goal
        self.instruction, self.subgoals = instruction, subgoals
        self.reference, self.plan, self.radius = reference, plan, radius

    def spec(self):
        d = {
            "id": self.id,
            "world": self.world_name,
            "start": {"x": self.start[0], "z": self.start[1], "heading": self.start[2]},
            "goal": list(self.goal),
            "instruction": self.instruction,
        }
        if self.subgoals:
            d["subgoals"] = self.subgoals
        if self.reference:
            d["reference_path"] = [list(p) for p in self.reference]
        if self.radius != 3.0:
            d["success_radius"] = self.radius
        return d

    def move(self, turn, forward, lo, hi, label, checked=True):
        x, z, h = self.pose
        h = norm(h + turn)
        if forward > 0 and checked:
            lb = self.world.clearance_lower_bound((x, z), h - turn, lo, hi) if lo is not None else None
            assert lb is None or forward <= lb - SAFETY_MARGIN - 1e-6, (
                f"{self.id} {label}: safe {forward} exceeds clearance bound {lb:.3f} - margin at {self.pose}"
            )
            q = (x + forward * math.cos(math.radians(h)), z + forward * math.sin(math.radians(h)))
            sweep = self.world.sweep_clearance((x, z), q)
            assert sweep >= COLLISION_MARGIN + 1e-6, f"{self.id} {label}: sweep clearance {sweep:.3f} at {self.pose}"
            x, z = q
        self.pose = (x, z, h)
        self.path.append((x, z))
        if SHOW:
            print(f"  {label:<8} -> ({x:.3f}, {z:.3f}, {h:.0f})")

    def build(self):
        self.pose = self.start
        self.path = [(self.start[0], self.start[1])]
        entries = []
        ordinal, attempt, done, style = 0, 0, 0, 0
        summary = []
        n_sub = len(self.subgoals) if self.subgoals else 1
        subgoals = self.subgoals or [self.instruction]
        exhausted = True
        if SHOW:
            print(self.id)

        def emit(kind, body):
            nonlocal ordinal, attempt, style
            entries.append({
                "episode": self.id, "ordinal": ordinal, "kind": kind, "attempt": attempt,
                "raw_text": body if isinstance(body, str) else wrap(body, style % 3),
            })
            style += 1
            ordinal += 1
            attempt = 0

        for tok in self.plan:
            parts = tok.split(" ", 1) if tok.startswith("X ") else tok.split()
            head = parts[0]
            if head == "P":
                done = min(done + 1, n_sub)
                continue
            if head == "X":
                entries.append({"episode": self.id, "ordinal": ordinal,
                                "kind": self.next_kind(), "attempt": attempt, "raw_text": parts[1]})
                attempt += 1
                continue
            history = progress(subgoals, done)
            if head.startswith("I"):
                img, safe = int(head[1:]), float(parts[1])
                summary.append(f"turned to view {img} and walked {safe:g} m")
                emit("initial", {
                    "Thought": f"View {img} matches the start of the route.",
                    "Selected Image": img,
                    "Safe Distance": safe,
                    "Trajectory Summary": "; ".join(summary),
                    "Instruction Progress": history,
                })
                self.move(signed(30 * (img - 1)), safe, -PANORAMIC_HALF_ANGLE, PANORAMIC_HALF_ANGLE, tok)
                self.last_kind = "step"
            elif head.startswith("R"):
                img, safe = int(head[1:]), float(parts[1])
                summary.append(f"re-scanned and chose view {img}")
                emit("disambiguation", {
                    "Selected Image": img,
                    "Safe Distance": safe,
                    "Updated History": {"Trajectory Summary": "; ".join(summary), "Instruction Progress": history},
                })
                self.move(signed(30 * (img - 1)), safe, -PANORAMIC_HALF_ANGLE, PANORAMIC_HALF_ANGLE, tok)
                self.last_kind = "step"
            else:
                opt = head
                safe = float(parts[1]) if len(parts) > 1 else 0.0
                confuse = len(parts) > 2 and parts[2] == "?"
                if opt == "F":
                    summary.append("stopped")
                else:
                    summary.append(f"option {opt} for {safe:g} m")
                emit("step", {
                    "Thought": "The goal is close; stopping." if opt == "F" else f"Option {opt} follows the instruction.",
                    "Selected Image": IMAGE_FOR_OPTION[opt],
                    "Action Options": opt,
                    "Degree": DEGREE_FOR_OPTION[opt],
                    "Safe Distance": safe,
                    "Confuse": confuse,
                    "Updated History": {"Trajectory Summary": "; ".join(summary), "Instruction Progress": history},
                })
                if opt == "F":
                    exhausted = False
                    break
                if confuse:
                    self.last_kind = "disambiguation"
                    continue
                lo, hi = OPTION_BINS[opt]
                self.move(OPTION_TURNS[opt], safe, lo, hi, tok)
        self.stopped = not exhausted
        return entries

    def next_kind(self):
        return getattr(self, "last_kind", "initial")


def ep(*args, **kw):
    return Episode(*args, **kw)


IDEAL = [
    ep("ideal", "ideal-01-straight", "straight-corridor", (1.0, 1.0, 0.0), (14.5, 1.0),
       "Walk down the corridor past the plant and stop at the door.",
       ["Walk down the corridor", "Pass the plant", "Stop at the door"],
       [(1.0, 1.0), (8.0, 1.0), (14.5, 1.0)],
       ["I1 3", "C 4.5", "P", "C 4.5", "P", "F"]),
    ep("ideal", "ideal-02-l-corridor", "l-corridor", (1.0, 1.0, 0.0), (11.0, 10.0),
       "Go to the end of the hallway, turn left and walk up to the sofa.",
       ["Go to the end of the hallway", "Turn left", "Walk up to the sofa"],
       [(1.0, 1.0), (11.0, 1.0), (11.0, 10.0)],
       ["I1 3", "C 4.5", "C 2.5", "P", "A 0", "B 0", "P", "C 4.5", "C 4.5", "F"]),
    ep("ideal", "ideal-03-t-junction", "t-junction", (6.0, 1.0, 90.0), (1.0, 9.0),
       "Walk forward to the junction, turn left and stop by the bed.",
       ["Walk forward to the junction", "Turn left", "Stop by the bed"],
       [(6.0, 1.0), (6.0, 9.0), (1.0, 9.0)],
       ["I1 3", "C 5", "P", "A 0", "B 0", "P", "C 4.5", "F"]),
    ep("ideal", "ideal-04-three-room", "three-room", (1.0, 3.0, 0.0), (13.5, 3.0),
       "Leave the bedroom, cross the living room and stop in the kitchen near the fridge.",
       ["Leave the bedroom", "Cross the living room", "Stop in the kitchen"],
       [(1.0, 3.0), (5.0, 3.0), (10.0, 3.0), (13.5, 3.0)],
       ["I1 3.5", "P", "C 5", "P", "C 4", "F"]),
    ep("ideal", "ideal-05-two-corridor", "two-corridor", (1.0, 1.0, 0.0), (1.0, 5.0),
       "Follow the corridor to the printer, turn around the wall and come back to the desk.",
       ["Follow the corridor to the printer", "Turn around the wall", "Come back to the desk"],
       [(1.0, 1.0), (11.0, 1.0), (11.0, 5.0), (1.0, 5.0)],
       ["I1 3", "C 4.5", "C 2.5", "P", "A 0", "B 0", "C 4", "A 0", "B 0", "P", "C 4.5", "C 4.5", "F"]),
    ep("ideal", "ideal-06-open-hall", "open-hall", (1.0, 2.0, 0.0), (11.0, 8.5),
       "Cross the hall between the pillars and stop at the piano.",
       ["Cross the hall between the pillars", "Stop at the piano"],
       [(1.0, 2.0), (6.0, 3.0), (11.0, 8.5)],
       ["I1 4", "B 3", "C 2.5", "B 0", "P", "C 2.8", "F"]),
    ep("ideal", "ideal-07-u-turn", "u-turn", (1.0, 9.0, 270.0), (7.0, 9.0),
       "Go down the left hallway, cross over past the bench and walk up to the stairs.",
       ["Go down the left hallway", "Cross over past the bench", "Walk up to the stairs"],
       [(1.0, 9.0), (1.0, 1.0), (7.0, 1.0), (7.0, 9.0)],
       ["I1 3", "C 4.5", "C 0.5", "P", "A 0", "B 0", "C 4.5", "C 1.5", "P", "A 0", "B 0", "C 4.5", "C 3", "F"]),
    ep("ideal", "ideal-08-zigzag", "zigzag", (1.0, 1.0, 0.0), (13.0, 7.0),
       "Walk to the end of the first hall, go up past the clock and continue to the vase.",
       ["Walk to the end of the first hall", "Go up past the clock", "Continue to the vase"],
       [(1.0, 1.0), (5.0, 1.0), (5.0, 7.0), (13.0, 7.0)],
       ["I1 3", "C 1", "P", "A 0", "B 0", "C 4.5", "C 1.5", "P", "E 0", "D 0", "C 4.5", "C 3", "F"]),
    ep("ideal", "ideal-09-office", "office", (2.0, 2.0, 0.0), (2.5, 6.0),
       "Walk to the doorway, go through it and stop at the desk.",
       ["Walk to the doorway", "Go through it", "Stop at the desk"],
       [(2.0, 2.0), (4.6, 2.0), (4.6, 6.0), (2.5, 6.0)],
       ["I1 2.6", "P", "A 0", "B 0", "C 1.7", "C 2.3", "P", "A 0", "B 0", "C 2.1", "F"]),
    ep("ideal", "ideal-10-plus", "plus-junction", (6.0, 1.0, 90.0), (11.0, 6.0),
       "Walk to the crossing and turn right toward the blue door.",
       ["Walk to the crossing", "Turn right toward the blue door"],
       [(6.0, 1.0), (6.0, 6.0), (11.0, 6.0)],
       ["I1 3", "C 2", "P", "E 0", "D 0", "C 4.5", "F"]),
]

ADVERSARIAL = [
    # wanders the wrong way first, then recovers
    ep("adversarial", "adv-01-wrong-turn", "t-junction", (6.0, 1.0, 90.0), (1.0, 9.0),
       "Walk forward to the junction, turn left and stop by the bed.",
       ["Walk forward to the junction", "Turn left", "Stop by the bed"],
       [(6.0, 1.0), (6.0, 9.0), (1.0, 9.0)],
       ["I1 3", "C 5", "P", "E 0", "D 0", "C 3.5", "A 0", "A 0", "A 0", "C 4.5", "C 4.5", "F"]),
    # stops far short of the goal
    ep("adversarial", "adv-02-early-stop", "straight-corridor", (1.0, 1.0, 0.0), (14.5, 1.0),
       "Walk down the corridor past the plant and stop at the door.",
       ["Walk down the corridor", "Pass the plant", "Stop at the door"],
       [(1.0, 1.0), (8.0, 1.0), (14.5, 1.0)],
       ["I1 3", "C 4", "F"]),
    # confused at the junction, re-scans and picks the right view
    ep("adversarial", "adv-03-confused", "plus-junction", (6.0, 1.0, 90.0), (0.8, 6.0),
       "Walk to the crossing and turn left toward the green door.",
       ["Walk to the crossing", "Turn left toward the green door"],
       [(6.0, 1.0), (6.0, 6.0), (0.8, 6.0)],
       ["I1 3", "C 2", "C 1 ?", "R4 3", "P", "C 2", "F"]),
    # malformed replies before valid ones
    ep("adversarial", "adv-04-noisy-output", "l-corridor", (1.0, 1.0, 0.0), (11.0, 10.0),
       "Go to the end of the hallway, turn left and walk up to the sofa.",
       ["Go to the end of the hallway", "Turn left", "Walk up to the sofa"],
       [(1.0, 1.0), (11.0, 1.0), (11.0, 10.0)],
       ["X I think we should go forward.", "I1 3", "C 4.5",
        "X {\"Thought\": \"go\", \"Selected Image\": 2, \"Action Options\": \"C\"",
        "C 2.5", "P", "A 0", "B 0", "P",
        "X {\"Thought\": \"up\", \"Selected Image\": 9, \"Action Options\": \"C\", \"Degree\": null, \"Safe Distance\": 1, \"Confuse\": false, \"Updated History\": {\"Trajectory Summary\": \"x\", \"Instruction Progress\": []}}",
        "C 4.5", "C 4.5", "F"]),
    # runs out of decisions pacing in the open hall
    ep("adversarial", "adv-05-budget", "open-hall", (6.0, 8.0, 0.0), (1.0, 1.0),
       "Find the plant near the corner and wait there.",
       [],
       [(6.0, 8.0), (1.0, 1.0)],
       ["I1 1.5"] + ["A 0.5"] * 24),
    # goes down the wrong corridor of the three-room house and stops outside the radius
    ep("adversarial", "adv-06-overshoot", "three-room", (1.0, 3.0, 0.0), (7.5, 3.0),
       "Leave the bedroom and stop in the middle of the living room.",
       ["Leave the bedroom", "Stop in the middle of the living room"],
       [(1.0, 3.0), (5.0, 3.0), (7.5, 3.0)],
       ["I1 3.5", "P", "C 5", "C 4", "F"], radius=2.0),
]

CONFORMANCE = [
    ep("conformance", "conf-01-immediate-stop", "office", (2.0, 2.0, 0.0), (2.5, 2.5),
       "You are already next to the chair; stop.", [], [],
       ["I1 0", "F"]),
    ep("conformance", "conf-02-confuse", "plus-junction", (6.0, 1.0, 90.0), (11.0, 6.0),
       "Walk to the crossing and turn right toward the blue door.",
       ["Walk to the crossing", "Turn right toward the blue door"], [],
       ["I1 3", "C 2", "B 1 ?", "R10 3.3", "P", "F"]),
    ep("conformance", "conf-03-stuck", "dead-end", (9.75, 1.0, 0.0), (1.0, 1.0),
       "Walk forward until the cabinet blocks the way.", [], [],
       ["I1 0", "C 1", "C 1", "F"]),
    ep("conformance", "conf-04-budget", "open-hall", (6.0, 8.0, 0.0), (1.0, 1.0),
       "Look around the hall for the plant.", [], [],
       ["I1 1.5"] + ["A 0.5"] * 24),
    ep("conformance", "conf-05-normal", "three-room", (1.0, 3.0, 0.0), (13.5, 3.0),
       "Leave the bedroom, cross the living room and stop in the kitchen near the fridge.",
       ["Leave the bedroom", "Cross the living room", "Stop in the kitchen"], [],
       ["I1 3.5", "P", "X The kitchen is ahead, keep going.", "C 5", "P", "C 4", "F"]),
]

UNCHECKED = {"conf-03-stuck"}


def write_suite(name, episodes, golden):
    d = ROOT / "suites" / name
    (d / "episodes").mkdir(parents=True, exist_ok=True)
    script, rows = [], []
    for e in episodes:
        if e.id in UNCHECKED:
            e.move = _unchecked(e.move)
        entries = e.build()
        script.extend(entries)
        (d / "episodes" / f"{e.id}.json").write_text(json.dumps(e.spec(), indent=2) + "\n")
        ref = e.reference or [e.start[:2], e.goal]
        shortest = geodesic(e.world, e.start[:2], e.goal)
        rows.append(score(e.id, e.path, e.goal, ref, e.radius, shortest))
    (d / "script.json").write_text(json.dumps(script, indent=1, ensure_ascii=False) + "\n")
    rows.sort(key=lambda r: r["episode"])
    report = {"episodes": rows, "aggregate": aggregate(rows)}
    if golden:
        (d / "golden_report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def _unchecked(move):
    def inner(turn, forward, lo, hi, label, checked=True):
        return move(turn, forward, lo, hi, label, checked=False)
    return inner


def main():
    ideal = write_suite("ideal", IDEAL, golden=False)
    agg = ideal["aggregate"]
    assert agg["sr"] == 100.0 and agg["spl"] >= 0.8, agg
    for r in ideal["episodes"]:
        print(f"{r['episode']:<24} tl={r['tl']:.2f} ne={r['ne']:.2f} spl={r['spl']:.3f} ndtw={r['ndtw']:.3f}")
    print("ideal", agg)
    adv = write_suite("adversarial", ADVERSARIAL, golden=True)
    for r in adv["episodes"]:
        print(f"{r['episode']:<24} tl={r['tl']:.2f} ne={r['ne']:.2f} s={r['success']} spl={r['spl']:.3f} ndtw={r['ndtw']:.3f}")
    print("adversarial", adv["aggregate"])
    write_suite("conformance", CONFORMANCE, golden=False)


if __name__ == "__main__":
    main()
