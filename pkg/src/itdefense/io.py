"""Trajectory, event, and summary log formats.

trajectories.csv
    header ``t,agent,x,y,v,theta,e,mode``; one row per agent per fine step,
    floats written with ``repr`` so they parse back bit-exactly.
events.jsonl
    one object per line with keys ``t, kind, agent, x, y`` in that order.
summary.json
    outcome, terminal energies, energy expended, and event counts.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from typing import Iterable

from .engine import EngagementEvent, EngagementResult, TrajectorySample
from .scenario import ScenarioConfig

CSV_HEADER = ("t", "agent", "x", "y", "v", "theta", "e", "mode")


def trajectories_csv(samples: Iterable[TrajectorySample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in samples:
        w.writerow([repr(s.t), s.agent, repr(s.x), repr(s.y), repr(s.v), repr(s.theta), repr(s.e), s.mode])
    return buf.getvalue()


def parse_trajectories_csv(text: str) -> list[TrajectorySample]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected trajectory header {header}")
    out = []
    for t, agent, x, y, v, theta, e, mode in rows:
        out.append(TrajectorySample(float(t), agent, float(x), float(y), float(v), float(theta), float(e), mode))
    return out


def event_record(ev: EngagementEvent) -> dict:
    return {"t": ev.time, "kind": ev.kind, "agent": ev.agent, "x": ev.x, "y": ev.y}


def events_jsonl(events: Iterable[EngagementEvent]) -> str:
    return "".join(json.dumps(event_record(ev)) + "\n" for ev in events)


def parse_events_jsonl(text: str) -> list[EngagementEvent]:
    out = []
    for line in text.splitlines():
        if line.strip():
            d = json.loads(line)
            out.append(EngagementEvent(d["kind"], d["t"], d["agent"], d["x"], d["y"]))
    return out


def summary(result: EngagementResult, cfg: ScenarioConfig) -> dict:
    o = result.outcome
    initial = {"it": cfg.it.initial.energy}
    initial.update({f"ei{i}": ei.initial.energy for i, ei in enumerate(cfg.eis)})
    terminal = result.terminal_energies()
    return {
        "outcome": {"it": o.it, "ei": o.ei, "hva": o.hva, "decided_by": o.decided_by,
                    "time": o.time, "agent": o.agent},
        "terminal_energy": terminal,
        "energy_expended": {k: initial[k] - terminal[k] for k in terminal},
        "event_counts": dict(sorted(Counter(ev.kind for ev in result.events).items())),
        "n_events": len(result.events),
        "n_samples": len(result.trajectory),
        "seed": cfg.seed,
    }


def summary_json(result: EngagementResult, cfg: ScenarioConfig) -> str:
    return json.dumps(summary(result, cfg), indent=2) + "\n"
