"""Random instance generators for the oracle comparisons."""
from __future__ import annotations

import math

import numpy as np

from vru_occlusion import AgentCategory, AgentState, ObstacleRect, Scene

TAU = 2 * math.pi
FOOTPRINT = {"car": (4.5, 1.8), "truck_bus": (10.0, 2.5), "pedestrian": (0.5, 0.5), "bicycle": (1.8, 0.6)}


def sector_disc_instances(rng: np.random.Generator, n: int) -> dict[str, np.ndarray]:
    """Sectors and discs placed so that many pairs are close to touching."""
    half = np.where(rng.random(n) < 0.3, math.pi / 6, rng.uniform(0.01, math.pi / 2, n))
    radius = np.where(rng.random(n) < 0.1, 0.0, rng.uniform(0.5, 40.0, n))
    r = np.where(rng.random(n) < 0.1, 0.0, rng.uniform(0.1, 6.0, n))
    ax, ay = rng.uniform(-50, 50, (2, n))
    d = rng.uniform(0, 1.3 * radius + r + 2.0)
    bearing = rng.uniform(0, TAU, n)
    return {
        "ax": ax, "ay": ay, "axis": rng.uniform(0, TAU, n), "half": half, "radius": radius,
        "cx": ax + d * np.cos(bearing), "cy": ay + d * np.sin(bearing), "r": r,
    }


def los_instances(rng: np.random.Generator, n: int):
    """(observer, target, [(center, heading, length, width), ...]) with obstacles near the segment."""
    out = []
    for _ in range(n):
        a = tuple(rng.uniform(-30, 30, 2))
        b = tuple(rng.uniform(-30, 30, 2))
        dx, dy = b[0] - a[0], b[1] - a[1]
        norm = math.hypot(dx, dy) or 1.0
        rects = []
        for _ in range(int(rng.integers(0, 5))):
            # mostly along the segment, sometimes hugging an endpoint
            u = rng.choice([rng.random(), rng.uniform(-0.05, 0.05), 1 + rng.uniform(-0.05, 0.05)], p=[0.8, 0.1, 0.1])
            off = rng.normal(0.0, 3.0)
            center = (a[0] + u * dx - off * dy / norm, a[1] + u * dy + off * dx / norm)
            rects.append((center, float(rng.uniform(0, TAU)), float(rng.uniform(0.5, 10.0)),
                          float(rng.uniform(0.5, 3.0))))
        out.append((a, b, rects))
    return out


def as_rects(rects):
    return [ObstacleRect(c, h, length, w) for c, h, length, w in rects]


def random_agents(rng: np.random.Generator, n_agents: int = 10, extent: float = 25.0) -> list[dict]:
    """Agent dicts for one frame: 3 to 6 vehicles, the rest VRUs."""
    n_veh = int(rng.integers(3, 7))
    agents = []
    for i in range(n_agents):
        vehicle = i < n_veh
        if vehicle:
            cat = "car" if rng.random() < 0.8 else "truck_bus"
            speed = 0.0 if rng.random() < 0.2 else rng.uniform(1.0, 15.0)
        else:
            cat = "pedestrian" if rng.random() < 0.6 else "bicycle"
            speed = 0.0 if rng.random() < 0.15 else rng.uniform(0.5, 6.0)
        heading = float(rng.uniform(0, TAU))
        move = float(rng.uniform(0, TAU)) if not vehicle and rng.random() < 0.3 else heading
        length, width = FOOTPRINT[cat]
        agents.append({
            "id": i + 1, "vehicle": vehicle, "category": cat,
            "x": float(rng.uniform(-extent, extent)), "y": float(rng.uniform(-extent, extent)),
            "vx": speed * math.cos(move), "vy": speed * math.sin(move),
            "heading": heading, "length": length, "width": width,
        })
    return agents


def scene_from_agents(agents: list[dict], frame: int = 0, frame_rate: float = 25.0) -> Scene:
    states = tuple(
        AgentState(a["id"], AgentCategory(a["category"]), (a["x"], a["y"]), (a["vx"], a["vy"]),
                   a["heading"], a["length"], a["width"])
        for a in agents
    )
    return Scene(frame, frame / frame_rate, states)


def random_tracking_case(rng: np.random.Generator, n_frames: int = 40):
    """Random lifespans plus a random tracked relation, as a scenario and its triples.

    Returns (scenario, lifespans, tracked triples, vru ids, vehicle ids).  Agents
    sit at the origin: only lifespans and the boolean matrix matter here.
    """
    from vru_occlusion import Scenario, Track

    n_veh, n_vru = int(rng.integers(0, 5)), int(rng.integers(1, 5))
    density = rng.uniform(0.05, 0.95)
    tracks, lifespans = [], {}
    for i in range(n_veh + n_vru):
        aid = i + 1
        first = int(rng.integers(0, n_frames))
        last = int(rng.integers(first, n_frames))
        lifespans[aid] = (first, last)
        n = last - first + 1
        z = np.zeros(n)
        cat = AgentCategory.CAR if i < n_veh else AgentCategory.PEDESTRIAN
        tracks.append(Track(aid, cat, first, z, z, z, z, z, z + 4.5, z + 1.8))
    vehicles = list(range(1, n_veh + 1))
    vrus = list(range(n_veh + 1, n_veh + n_vru + 1))
    triples = set()
    for j in vehicles:
        for u in vrus:
            lo, hi = max(lifespans[j][0], lifespans[u][0]), min(lifespans[j][1], lifespans[u][1])
            for f in range(lo, hi + 1):
                if rng.random() < density:
                    triples.add((f, j, u))
    return Scenario(tuple(tracks), 25.0), lifespans, triples, vrus, vehicles


def tracking_map(scenario, triples):
    from vru_occlusion import PerceptionMap

    sets: dict[tuple[int, int], set[int]] = {}
    for f, j, u in triples:
        sets.setdefault((f, j), set()).add(u)
    return PerceptionMap.from_sets(scenario, sets)


def escorted_scenario(rng: np.random.Generator, frames: int = 150, lateral: float = 2.5):
    """Random scene in which every VRU has a car travelling 2.5 m beside it.

    Parked and passing vehicles are scattered around to create occlusions for
    everyone else.  All agents live for the whole scenario.  Returns None when
    the spawn layout overlaps; callers draw again.
    """
    from vru_occlusion import AgentSpec, ScenarioError, SyntheticSpec, generate_synthetic

    agents = []
    for _ in range(int(rng.integers(3, 7))):
        kind = AgentCategory.PEDESTRIAN if rng.random() < 0.6 else AgentCategory.BICYCLE
        speed = rng.uniform(0.5, 2.0) if kind is AgentCategory.PEDESTRIAN else rng.uniform(2.5, 6.0)
        direction = rng.uniform(0, TAU)
        pos = rng.uniform(-25, 25, 2)
        vel = speed * np.array([math.cos(direction), math.sin(direction)])
        normal = np.array([-math.sin(direction), math.cos(direction)])
        agents.append(AgentSpec(kind, tuple(pos), tuple(vel), direction))
        agents.append(AgentSpec(AgentCategory.CAR, tuple(pos + lateral * normal), tuple(vel), direction))
    for _ in range(int(rng.integers(3, 9))):
        kind = AgentCategory.CAR if rng.random() < 0.7 else AgentCategory.TRUCK_BUS
        agents.append(AgentSpec(kind, tuple(rng.uniform(-35, 35, 2)), (0.0, 0.0), float(rng.uniform(0, TAU))))
    for _ in range(int(rng.integers(1, 5))):
        direction = rng.uniform(0, TAU)
        speed = rng.uniform(3.0, 12.0)
        agents.append(AgentSpec(AgentCategory.CAR, tuple(rng.uniform(-35, 35, 2)),
                                (speed * math.cos(direction), speed * math.sin(direction)), direction))
    try:
        return generate_synthetic(SyntheticSpec(frames, agents=tuple(agents)), 0)
    except ScenarioError:
        return None
