#!/usr/bin/env python3
"""Regenerates the sample scenarios in data/ from closed-form motions."""

import json
import math
import pathlib
import re

DT = 0.1
HISTORY, FUTURE = 11, 80
SIZES = {"vehicle": (4.5, 2.0, 1.5), "pedestrian": (0.6, 0.6, 1.8), "cyclist": (1.8, 0.8, 1.6)}


def wrap(h):
    return (h + math.pi) % (2 * math.pi) - math.pi


def frames(kind, pos, t0, n):
    """pos(t) -> (x, y); velocities and headings by central differences."""
    dx, dy, dz = SIZES[kind]
    out = []
    for i in range(n):
        t = t0 + i * DT
        x, y = pos(t)
        xa, ya = pos(t - 1e-3)
        xb, yb = pos(t + 1e-3)
        vx, vy = (xb - xa) / 2e-3, (yb - ya) / 2e-3
        heading = wrap(math.atan2(vy, vx)) if math.hypot(vx, vy) > 1e-6 else 0.0
        # Headings stay unrounded so they remain inside [-pi, pi).
        row = [round(v, 6) for v in (x, y, 0.0, dx, dy, dz)] + [heading] + [round(v, 6) for v in (vx, vy)]
        out.append(row + [1])
    return out


def agent(agent_id, kind, pos):
    return {
        "id": agent_id,
        "kind": kind,
        "history": frames(kind, pos, -(HISTORY - 1) * DT, HISTORY),
        "ground_truth_future": frames(kind, pos, DT, FUTURE),
    }


def line(pid, kind, a, b):
    return {"id": pid, "kind": kind, "points": [[a[0], a[1], 0.0], [b[0], b[1], 0.0]]}


def smoothstep(u):
    u = min(max(u, 0.0), 1.0)
    return u * u * (3 - 2 * u)


def head_on():
    # b drifts into the other lane while the two close in, then straightens out.
    return {
        "scenario_id": "head-on",
        "agents": [
            agent("ego", "vehicle", lambda t: (10.0 * t, 0.0)),
            agent("oncoming", "vehicle", lambda t: (60.0 - 9.0 * t, -3.5 * smoothstep(t / 3.0))),
        ],
        "map": [
            line("lane-east", "lane_center", (-50, 0), (150, 0)),
            line("lane-west", "lane_center", (150, -3.5), (-50, -3.5)),
            line("edge-north", "road_edge", (-50, 2), (150, 2)),
            line("edge-south", "road_edge", (-50, -5.5), (150, -5.5)),
        ],
    }


def intersection():
    def braking(t):
        # Northbound car decelerates at 1.5 m/s^2 from 9 m/s until it stops.
        tt = min(max(t, -10.0), 6.0)
        return (3.0, -45.0 + 9.0 * tt - 0.75 * tt * max(tt, 0.0))

    return {
        "scenario_id": "intersection",
        "agents": [
            agent("ego", "vehicle", lambda t: (-40.0 + 8.0 * t, -2.0)),
            agent("north", "vehicle", braking),
            agent("walker", "pedestrian", lambda t: (12.0, 8.0 - 1.2 * t)),
            agent("bike", "cyclist",
                  lambda t: (-10.0 + 12.0 * math.cos(0.25 * t), 20.0 + 12.0 * math.sin(0.25 * t))),
        ],
        "map": [
            line("ew", "lane_center", (-80, -2), (80, -2)),
            line("ns", "lane_center", (3, -80), (3, 80)),
            line("crosswalk", "other", (12, 10), (12, -10)),
        ],
    }


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "data"
    out.mkdir(exist_ok=True)
    for doc in (head_on(), intersection()):
        text = json.dumps(doc, indent=1)
        # Keep each numeric row on one line.
        text = re.sub(r"\[\s+([-\d.,\s]+?)\s+\]", lambda m: "[" + ", ".join(m.group(1).split()).replace(",,", ",") + "]", text)
        (out / f"{doc['scenario_id']}.json").write_text(text + "\n")
