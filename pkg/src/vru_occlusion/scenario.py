"""Trajectory data model, inD-style CSV ingestion and a synthetic generator.

A :class:`Scenario` stores one :class:`Track` per agent (agents live over a
contiguous frame range, as in inD).  Per-frame :class:`Scene` objects are
materialized on demand; the sweep works on :class:`DenseView`, a
frame x slot array layout built from the tracks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import pandas as pd

from .geometry import ObstacleRect, normalize_heading, rects_overlap


class ScenarioError(ValueError):
    """Bad input data: schema problems, unknown labels, broken tracks."""


class AgentCategory(str, Enum):
    CAR = "car"
    TRUCK_BUS = "truck_bus"
    PEDESTRIAN = "pedestrian"
    BICYCLE = "bicycle"

    @property
    def is_vehicle(self) -> bool:
        return self in (AgentCategory.CAR, AgentCategory.TRUCK_BUS)

    @property
    def is_vru(self) -> bool:
        return not self.is_vehicle


@dataclass(frozen=True)
class AgentState:
    agent_id: int
    category: AgentCategory
    position: tuple[float, float]
    velocity: tuple[float, float]
    heading: float
    footprint_length: float
    footprint_width: float

    def __post_init__(self):
        if self.footprint_length < 0 or self.footprint_width < 0:
            raise ValueError(f"agent {self.agent_id}: negative footprint")
        if self.category.is_vehicle and not (self.footprint_length > 0 and self.footprint_width > 0):
            raise ValueError(f"vehicle {self.agent_id}: footprint must be > 0")
        if not math.isfinite(self.speed):
            raise ValueError(f"agent {self.agent_id}: non-finite velocity")
        if not 0.0 <= self.heading < 2 * math.pi:
            raise ValueError(f"agent {self.agent_id}: heading {self.heading} outside [0, 2pi)")

    @property
    def speed(self) -> float:
        return math.hypot(self.velocity[0], self.velocity[1])

    def footprint(self) -> ObstacleRect:
        return ObstacleRect(self.position, self.heading, self.footprint_length, self.footprint_width)


@dataclass(frozen=True)
class Scene:
    frame_index: int
    timestamp: float
    agents: tuple[AgentState, ...]

    def __post_init__(self):
        ids = [a.agent_id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate agent ids in frame {self.frame_index}")

    def agent(self, agent_id: int) -> AgentState:
        for a in self.agents:
            if a.agent_id == agent_id:
                return a
        raise KeyError(f"agent {agent_id} not in frame {self.frame_index}")

    @property
    def vehicles(self) -> list[AgentState]:
        return [a for a in self.agents if a.category.is_vehicle]

    @property
    def vrus(self) -> list[AgentState]:
        return [a for a in self.agents if a.category.is_vru]


@dataclass(frozen=True)
class RegistryEntry:
    category: AgentCategory
    first_frame: int
    last_frame: int


_TRACK_ARRAYS = ("x", "y", "vx", "vy", "heading", "length", "width")


@dataclass(frozen=True, eq=False)
class Track:
    """Kinematics of one agent over its contiguous lifespan."""

    agent_id: int
    category: AgentCategory
    first_frame: int
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    heading: np.ndarray
    length: np.ndarray
    width: np.ndarray

    def __post_init__(self):
        n = len(self.x)
        for name in _TRACK_ARRAYS:
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ScenarioError(f"track {self.agent_id}: column {name} has wrong length")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if n == 0:
            raise ScenarioError(f"track {self.agent_id}: empty lifespan")
        if self.first_frame < 0:
            raise ScenarioError(f"track {self.agent_id}: negative frame index")
        if not np.all(np.isfinite(np.hypot(self.vx, self.vy))):
            raise ScenarioError(f"track {self.agent_id}: non-finite velocity")
        if np.any(self.length < 0) or np.any(self.width < 0):
            raise ScenarioError(f"track {self.agent_id}: negative footprint")
        if self.category.is_vehicle and (np.any(self.length <= 0) or np.any(self.width <= 0)):
            raise ScenarioError(f"track {self.agent_id}: vehicle footprint must be > 0")
        if np.any(self.heading < 0) or np.any(self.heading >= 2 * math.pi):
            raise ScenarioError(f"track {self.agent_id}: heading outside [0, 2pi)")

    @property
    def last_frame(self) -> int:
        return self.first_frame + len(self.x) - 1

    def __len__(self) -> int:
        return len(self.x)

    def __eq__(self, other):
        if not isinstance(other, Track):
            return NotImplemented
        return (
            self.agent_id == other.agent_id
            and self.category == other.category
            and self.first_frame == other.first_frame
            and all(np.array_equal(getattr(self, n), getattr(other, n)) for n in _TRACK_ARRAYS)
        )

    def state(self, frame: int) -> AgentState:
        i = frame - self.first_frame
        if not 0 <= i < len(self):
            raise KeyError(f"agent {self.agent_id} absent at frame {frame}")
        return AgentState(
            agent_id=self.agent_id,
            category=self.category,
            position=(float(self.x[i]), float(self.y[i])),
            velocity=(float(self.vx[i]), float(self.vy[i])),
            heading=float(self.heading[i]),
            footprint_length=float(self.length[i]),
            footprint_width=float(self.width[i]),
        )


@dataclass(frozen=True, eq=False)
class Scenario:
    tracks: tuple[Track, ...]
    frame_rate: float = 25.0
    name: str = "scenario"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not (self.frame_rate > 0 and math.isfinite(self.frame_rate)):
            raise ScenarioError("frame_rate must be > 0")
        tracks = tuple(sorted(self.tracks, key=lambda t: t.agent_id))
        ids = [t.agent_id for t in tracks]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate track ids")
        object.__setattr__(self, "tracks", tracks)
        self._cache["span"] = (
            np.array([t.first_frame for t in tracks], dtype=np.int64),
            np.array([t.last_frame for t in tracks], dtype=np.int64),
        )

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.frame_rate == other.frame_rate and self.tracks == other.tracks

    def __hash__(self):
        return id(self)

    @property
    def first_frame(self) -> int:
        starts = self._cache["span"][0]
        return int(starts.min()) if len(starts) else 0

    @property
    def last_frame(self) -> int:
        ends = self._cache["span"][1]
        return int(ends.max()) if len(ends) else -1

    @property
    def n_frames(self) -> int:
        return self.last_frame - self.first_frame + 1 if self.tracks else 0

    @property
    def frames(self) -> range:
        return range(self.first_frame, self.last_frame + 1)

    @property
    def agent_registry(self) -> dict[int, RegistryEntry]:
        return {t.agent_id: RegistryEntry(t.category, t.first_frame, t.last_frame) for t in self.tracks}

    def track(self, agent_id: int) -> Track:
        for t in self.tracks:
            if t.agent_id == agent_id:
                return t
        raise KeyError(f"unknown agent {agent_id}")

    @property
    def vehicle_ids(self) -> list[int]:
        return [t.agent_id for t in self.tracks if t.category.is_vehicle]

    @property
    def vru_ids(self) -> list[int]:
        return [t.agent_id for t in self.tracks if t.category.is_vru]

    def scene(self, frame: int) -> Scene:
        if frame not in self.frames:
            raise KeyError(f"frame {frame} outside scenario")
        starts, ends = self._cache["span"]
        live = np.nonzero((starts <= frame) & (frame <= ends))[0]
        agents = tuple(self.tracks[i].state(frame) for i in live)
        return Scene(frame, frame / self.frame_rate, agents)

    @property
    def scenes(self) -> list[Scene]:
        return [self.scene(f) for f in self.frames]

    def __iter__(self) -> Iterator[Scene]:
        for f in self.frames:
            yield self.scene(f)

    def __len__(self) -> int:
        return self.n_frames

    def dense(self, min_slot_gap: int = 1) -> DenseView:
        key = ("dense", min_slot_gap)
        if key not in self._cache:
            self._cache[key] = DenseView.build(self, min_slot_gap)
        return self._cache[key]

    @classmethod
    def from_scenes(cls, scenes: Iterable[Scene], frame_rate: float, name: str = "scenario") -> Scenario:
        rows: dict[int, list[tuple[int, AgentState]]] = {}
        for scene in scenes:
            for a in scene.agents:
                rows.setdefault(a.agent_id, []).append((scene.frame_index, a))
        tracks = []
        for agent_id, items in rows.items():
            items.sort(key=lambda it: it[0])
            frames = [f for f, _ in items]
            if frames != list(range(frames[0], frames[0] + len(frames))):
                raise ScenarioError(f"track {agent_id}: non-contiguous frames")
            states = [a for _, a in items]
            tracks.append(Track(
                agent_id=agent_id,
                category=states[0].category,
                first_frame=frames[0],
                x=[a.position[0] for a in states],
                y=[a.position[1] for a in states],
                vx=[a.velocity[0] for a in states],
                vy=[a.velocity[1] for a in states],
                heading=[a.heading for a in states],
                length=[a.footprint_length for a in states],
                width=[a.footprint_width for a in states],
            ))
        return cls(tuple(tracks), frame_rate, name)

    def check_registry(self) -> None:
        """Exhaustive check that every scene matches the registry lifespans."""
        registry = self.agent_registry
        for scene in self:
            present = {a.agent_id for a in scene.agents}
            expected = {i for i, e in registry.items() if e.first_frame <= scene.frame_index <= e.last_frame}
            if present != expected:
                raise ScenarioError(f"frame {scene.frame_index}: agents disagree with registry")


# -- dense layout -------------------------------------------------------------


def _assign_slots(tracks: Sequence[Track], gap: int) -> tuple[list[int], int]:
    """Greedy interval colouring; a slot is reusable ``gap`` frames after release."""
    order = sorted(range(len(tracks)), key=lambda i: (tracks[i].first_frame, tracks[i].agent_id))
    free_at: list[int] = []
    slots = [0] * len(tracks)
    for i in order:
        t = tracks[i]
        for s, f in enumerate(free_at):
            if f <= t.first_frame:
                break
        else:
            s = len(free_at)
            free_at.append(0)
        slots[i] = s
        free_at[s] = t.last_frame + gap
    return slots, len(free_at)


@dataclass(frozen=True, eq=False)
class DenseView:
    """Frame x slot arrays.  Vehicle slots come first, then VRU slots.

    ``agent[f, s]`` is the index into ``agent_ids`` occupying slot ``s`` at
    local frame ``f`` (or -1).  A slot released at frame L is not reused
    before frame ``L + min_slot_gap``.
    """

    frame0: int
    n_vehicle_slots: int
    agent_ids: np.ndarray  # sorted ids, index = agent index
    is_vehicle: np.ndarray  # per agent index
    first: np.ndarray
    last: np.ndarray
    agent_slot: np.ndarray  # per agent index
    agent: np.ndarray  # [F, S] int
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    heading: np.ndarray
    length: np.ndarray
    width: np.ndarray
    min_slot_gap: int

    @property
    def n_frames(self) -> int:
        return self.agent.shape[0]

    @property
    def n_slots(self) -> int:
        return self.agent.shape[1]

    @property
    def present(self) -> np.ndarray:
        return self.agent >= 0

    def index_of(self, agent_id: int) -> int:
        i = int(np.searchsorted(self.agent_ids, agent_id))
        if i >= len(self.agent_ids) or self.agent_ids[i] != agent_id:
            raise KeyError(f"unknown agent {agent_id}")
        return i

    @classmethod
    def build(cls, scenario: Scenario, min_slot_gap: int = 1) -> DenseView:
        if min_slot_gap < 1:
            raise ValueError("min_slot_gap must be >= 1")
        tracks = scenario.tracks
        veh = [t for t in tracks if t.category.is_vehicle]
        vru = [t for t in tracks if t.category.is_vru]
        veh_slots, n_veh = _assign_slots(veh, min_slot_gap)
        vru_slots, n_vru = _assign_slots(vru, min_slot_gap)
        slot_of = {t.agent_id: s for t, s in zip(veh, veh_slots)}
        slot_of.update({t.agent_id: n_veh + s for t, s in zip(vru, vru_slots)})

        frame0 = scenario.first_frame
        F, S = scenario.n_frames, n_veh + n_vru
        agent = np.full((F, S), -1, dtype=np.int64)
        arrays = {name: np.zeros((F, S)) for name in _TRACK_ARRAYS}
        for idx, t in enumerate(tracks):
            s = slot_of[t.agent_id]
            lo = t.first_frame - frame0
            hi = lo + len(t)
            agent[lo:hi, s] = idx
            for name in _TRACK_ARRAYS:
                arrays[name][lo:hi, s] = getattr(t, name)
        return cls(
            frame0=frame0,
            n_vehicle_slots=n_veh,
            agent_ids=np.array([t.agent_id for t in tracks], dtype=np.int64),
            is_vehicle=np.array([t.category.is_vehicle for t in tracks], dtype=bool),
            first=np.array([t.first_frame for t in tracks], dtype=np.int64),
            last=np.array([t.last_frame for t in tracks], dtype=np.int64),
            agent_slot=np.array([slot_of[t.agent_id] for t in tracks], dtype=np.int64),
            agent=agent,
            min_slot_gap=min_slot_gap,
            **arrays,
        )


# -- inD ingestion ---------------------------------------------------------------

DEFAULT_COLUMNS: dict[str, str] = {
    "track_id": "trackId",
    "frame": "frame",
    "x": "xCenter",
    "y": "yCenter",
    "heading": "heading",
    "width": "width",
    "length": "length",
    "x_velocity": "xVelocity",
    "y_velocity": "yVelocity",
    "meta_track_id": "trackId",
    "category": "class",
    "frame_rate": "frameRate",
}

_TRACK_COLUMNS = ("track_id", "frame", "x", "y", "heading", "width", "length", "x_velocity", "y_velocity")


def _read_table(path) -> pd.DataFrame:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
    sep = ";" if header.count(";") > header.count(",") else ","
    if not header.strip():
        return pd.DataFrame()
    return pd.read_csv(path, sep=sep, float_precision="round_trip")


def _require(df: pd.DataFrame, columns: Iterable[str], path) -> None:
    for col in columns:
        if col not in df.columns:
            raise ScenarioError(f"{path}: missing column {col!r}")


def load_ind_recording(tracks_path, tracks_meta_path, recording_meta_path,
                       columns: Mapping[str, str] | None = None, name: str | None = None) -> Scenario:
    cols = dict(DEFAULT_COLUMNS)
    if columns:
        unknown = set(columns) - set(DEFAULT_COLUMNS)
        if unknown:
            raise ScenarioError(f"unknown column mapping keys: {sorted(unknown)}")
        cols.update(columns)

    rec = _read_table(recording_meta_path)
    _require(rec, [cols["frame_rate"]], recording_meta_path)
    if rec.empty:
        raise ScenarioError(f"{recording_meta_path}: no recording row")
    frame_rate = float(rec[cols["frame_rate"]].iloc[0])

    meta = _read_table(tracks_meta_path)
    tracks_df = _read_table(tracks_path)
    if tracks_df.empty and not len(tracks_df.columns):
        return Scenario((), frame_rate, name or Path(tracks_path).stem)
    _require(tracks_df, [cols[c] for c in _TRACK_COLUMNS], tracks_path)
    if tracks_df.empty:
        return Scenario((), frame_rate, name or Path(tracks_path).stem)
    _require(meta, [cols["meta_track_id"], cols["category"]], tracks_meta_path)

    labels = dict(zip(meta[cols["meta_track_id"]].astype(int), meta[cols["category"]].astype(str)))
    valid = {c.value for c in AgentCategory}
    tracks = []
    for track_id, group in tracks_df.groupby(cols["track_id"], sort=True):
        track_id = int(track_id)
        label = labels.get(track_id)
        if label is None:
            raise ScenarioError(f"track {track_id}: no entry in {tracks_meta_path}")
        if label not in valid:
            raise ScenarioError(f"track {track_id}: unknown category label {label!r}")
        group = group.sort_values(cols["frame"])
        frames = group[cols["frame"]].to_numpy(dtype=np.int64)
        if np.any(np.diff(frames) != 1):
            raise ScenarioError(f"track {track_id}: non-contiguous frames")
        tracks.append(Track(
            agent_id=track_id,
            category=AgentCategory(label),
            first_frame=int(frames[0]),
            x=group[cols["x"]].to_numpy(dtype=float),
            y=group[cols["y"]].to_numpy(dtype=float),
            vx=group[cols["x_velocity"]].to_numpy(dtype=float),
            vy=group[cols["y_velocity"]].to_numpy(dtype=float),
            heading=normalize_heading(np.radians(group[cols["heading"]].to_numpy(dtype=float))),
            length=group[cols["length"]].to_numpy(dtype=float),
            width=group[cols["width"]].to_numpy(dtype=float),
        ))
    return Scenario(tuple(tracks), frame_rate, name or Path(tracks_path).stem)


def write_ind_recording(scenario: Scenario, directory, recording_id: int = 0) -> dict[str, Path]:
    """Emit the scenario as ``NN_tracks.csv`` / ``NN_tracksMeta.csv`` / ``NN_recordingMeta.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    prefix = f"{recording_id:02d}"
    paths = {
        "tracks": directory / f"{prefix}_tracks.csv",
        "tracks_meta": directory / f"{prefix}_tracksMeta.csv",
        "recording_meta": directory / f"{prefix}_recordingMeta.csv",
    }
    rows = []
    meta_rows = []
    for t in scenario.tracks:
        frames = np.arange(t.first_frame, t.last_frame + 1)
        rows.append(pd.DataFrame({
            "recordingId": recording_id,
            "trackId": t.agent_id,
            "frame": frames,
            "trackLifetime": frames - t.first_frame,
            "xCenter": t.x,
            "yCenter": t.y,
            "heading": np.degrees(t.heading),
            "width": t.width,
            "length": t.length,
            "xVelocity": t.vx,
            "yVelocity": t.vy,
        }))
        meta_rows.append({
            "recordingId": recording_id, "trackId": t.agent_id, "initialFrame": t.first_frame,
            "finalFrame": t.last_frame, "numFrames": len(t), "width": float(t.width[0]),
            "length": float(t.length[0]), "class": t.category.value,
        })
    track_cols = ["recordingId", "trackId", "frame", "trackLifetime", "xCenter", "yCenter", "heading",
                  "width", "length", "xVelocity", "yVelocity"]
    tracks_df = pd.concat(rows, ignore_index=True) if rows else pd.DataFrame(columns=track_cols)
    meta_df = pd.DataFrame(meta_rows, columns=["recordingId", "trackId", "initialFrame", "finalFrame",
                                                "numFrames", "width", "length", "class"])
    rec_df = pd.DataFrame([{
        "recordingId": recording_id, "frameRate": scenario.frame_rate,
        "duration": scenario.n_frames / scenario.frame_rate, "numTracks": len(scenario.tracks),
        "numVehicles": len(scenario.vehicle_ids), "numVRUs": len(scenario.vru_ids),
    }])
    tracks_df.to_csv(paths["tracks"], index=False, lineterminator="\n", float_format="%.17g")
    meta_df.to_csv(paths["tracks_meta"], index=False, lineterminator="\n", float_format="%.17g")
    rec_df.to_csv(paths["recording_meta"], index=False, lineterminator="\n", float_format="%.17g")
    return paths


def save_scenario(scenario: Scenario, path) -> None:
    """Lossless internal format (npz)."""
    arrays = {
        "frame_rate": np.array(scenario.frame_rate),
        "name": np.array(scenario.name),
        "ids": np.array([t.agent_id for t in scenario.tracks], dtype=np.int64),
        "categories": np.array([t.category.value for t in scenario.tracks], dtype=str),
        "first": np.array([t.first_frame for t in scenario.tracks], dtype=np.int64),
        "lengths": np.array([len(t) for t in scenario.tracks], dtype=np.int64),
    }
    for name in _TRACK_ARRAYS:
        parts = [getattr(t, name) for t in scenario.tracks]
        arrays["col_" + name] = np.concatenate(parts) if parts else np.zeros(0)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_scenario(path) -> Scenario:
    with np.load(path, allow_pickle=False) as z:
        bounds = np.concatenate([[0], np.cumsum(z["lengths"])])
        cols = {name: z["col_" + name] for name in _TRACK_ARRAYS}
        tracks = tuple(
            Track(int(i), AgentCategory(str(c)), int(f), **{n: cols[n][lo:hi] for n in _TRACK_ARRAYS})
            for i, c, f, lo, hi in zip(z["ids"], z["categories"], z["first"], bounds[:-1], bounds[1:])
        )
        return Scenario(tracks, float(z["frame_rate"]), str(z["name"]))


# -- synthetic scenarios ---------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def direction(self) -> tuple[float, float]:
        n = self.length
        return ((self.end[0] - self.start[0]) / n, (self.end[1] - self.start[1]) / n)

    def point(self, u: float) -> tuple[float, float]:
        return (self.start[0] + u * (self.end[0] - self.start[0]),
                self.start[1] + u * (self.end[1] - self.start[1]))


@dataclass(frozen=True)
class AgentSpec:
    """A hand-placed agent; ``position`` is its location at ``first_frame``."""

    category: AgentCategory
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    heading: float | None = None
    length: float | None = None
    width: float | None = None
    first_frame: int = 0
    last_frame: int | None = None


FOOTPRINTS = {
    AgentCategory.CAR: (4.5, 1.8),
    AgentCategory.TRUCK_BUS: (10.0, 2.5),
    AgentCategory.PEDESTRIAN: (0.5, 0.5),
    AgentCategory.BICYCLE: (1.8, 0.6),
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Units: meters, m/s, frames, Hz."""

    duration_frames: int
    frame_rate: float = 25.0
    moving_vehicles: int = 0
    parked_vehicles: int = 0
    pedestrians: int = 0
    bicycles: int = 0
    vehicle_lanes: tuple[Segment, ...] = ()
    parking_segments: tuple[Segment, ...] = ()
    vru_paths: tuple[Segment, ...] = ()
    vehicle_speed: tuple[float, float] = (8.0, 14.0)
    pedestrian_speed: tuple[float, float] = (1.0, 1.8)
    bicycle_speed: tuple[float, float] = (3.0, 6.0)
    agents: tuple[AgentSpec, ...] = ()
    max_spawn_attempts: int = 200
    # moving agents leave at the end of their path and a new agent enters at its start
    respawn: bool = False
    respawn_delay: tuple[int, int] = (0, 50)

    @classmethod
    def from_dict(cls, d: Mapping) -> SyntheticSpec:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ScenarioError(f"unknown synthetic spec keys: {sorted(unknown)}")
        kw = dict(d)
        for key in ("vehicle_lanes", "parking_segments", "vru_paths"):
            if key in kw:
                kw[key] = tuple(_segment(s) for s in kw[key])
        for key in ("vehicle_speed", "pedestrian_speed", "bicycle_speed"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        if "agents" in kw:
            kw["agents"] = tuple(_agent_spec(a) for a in kw["agents"])
        if "respawn_delay" in kw:
            kw["respawn_delay"] = tuple(int(v) for v in kw["respawn_delay"])
        return cls(**kw)

    def to_dict(self) -> dict:
        def seg(s):
            return {"start": list(s.start), "end": list(s.end)}

        return {
            "duration_frames": self.duration_frames,
            "frame_rate": self.frame_rate,
            "moving_vehicles": self.moving_vehicles,
            "parked_vehicles": self.parked_vehicles,
            "pedestrians": self.pedestrians,
            "bicycles": self.bicycles,
            "vehicle_lanes": [seg(s) for s in self.vehicle_lanes],
            "parking_segments": [seg(s) for s in self.parking_segments],
            "vru_paths": [seg(s) for s in self.vru_paths],
            "vehicle_speed": list(self.vehicle_speed),
            "pedestrian_speed": list(self.pedestrian_speed),
            "bicycle_speed": list(self.bicycle_speed),
            "agents": [
                {"category": a.category.value, "position": list(a.position), "velocity": list(a.velocity),
                 "heading": a.heading, "length": a.length, "width": a.width,
                 "first_frame": a.first_frame, "last_frame": a.last_frame}
                for a in self.agents
            ],
            "max_spawn_attempts": self.max_spawn_attempts,
            "respawn": self.respawn,
            "respawn_delay": list(self.respawn_delay),
        }


def _segment(s) -> Segment:
    if isinstance(s, Segment):
        return s
    if isinstance(s, Mapping):
        return Segment(tuple(map(float, s["start"])), tuple(map(float, s["end"])))
    start, end = s
    return Segment(tuple(map(float, start)), tuple(map(float, end)))


def _agent_spec(a) -> AgentSpec:
    if isinstance(a, AgentSpec):
        return a
    a = dict(a)
    a["category"] = AgentCategory(a["category"])
    a["position"] = tuple(map(float, a["position"]))
    if "velocity" in a:
        a["velocity"] = tuple(map(float, a["velocity"]))
    return AgentSpec(**a)


@dataclass
class _Spawn:
    category: AgentCategory
    x0: float
    y0: float
    vx: float
    vy: float
    heading: float
    length: float
    width: float
    first: int
    last: int

    def rect_at(self, frame: int, frame_rate: float) -> ObstacleRect:
        dt = (frame - self.first) / frame_rate
        # VRU footprints may be tiny; the overlap test still needs a positive box
        return ObstacleRect((self.x0 + self.vx * dt, self.y0 + self.vy * dt), self.heading,
                            max(self.length, 1e-3), max(self.width, 1e-3))


def _overlaps(new: _Spawn, placed: Sequence[_Spawn], frame_rate: float) -> bool:
    for other in placed:
        frame = max(new.first, other.first)
        if frame > min(new.last, other.last):
            continue
        if rects_overlap(new.rect_at(frame, frame_rate), other.rect_at(frame, frame_rate)):
            return True
    return False


def _frames_to_travel(distance: float, speed: float, frame_rate: float) -> int:
    return max(0, int(math.floor(distance / speed * frame_rate)))


def _alive_at(placed: Sequence[_Spawn], frame: int) -> list[_Spawn]:
    return [p for p in placed if p.first <= frame <= p.last]


def generate_synthetic(spec: SyntheticSpec, seed: int = 0, name: str = "synthetic") -> Scenario:
    """Constant-velocity replay scenario, deterministic in ``(spec, seed)``.

    Randomly placed agents live for the whole duration unless ``respawn`` is
    set; hand-placed agents keep their declared lifespans.
    """
    if spec.duration_frames <= 0:
        raise ScenarioError("duration_frames must be > 0")
    if not spec.frame_rate > 0:
        raise ScenarioError("frame_rate must be > 0")
    rng = np.random.default_rng(seed)
    last = spec.duration_frames - 1
    placed: list[_Spawn] = []

    for i, a in enumerate(spec.agents):
        length, width = FOOTPRINTS[a.category]
        vx, vy = a.velocity
        heading = a.heading if a.heading is not None else (math.atan2(vy, vx) if (vx or vy) else 0.0)
        spawn = _Spawn(a.category, a.position[0], a.position[1], vx, vy,
                       float(normalize_heading(heading)),
                       a.length if a.length is not None else length,
                       a.width if a.width is not None else width,
                       a.first_frame, last if a.last_frame is None else a.last_frame)
        if not 0 <= spawn.first <= spawn.last <= last:
            raise ScenarioError(f"agent spec {i}: lifespan outside [0, {last}]")
        if _overlaps(spawn, placed, spec.frame_rate):
            raise ScenarioError(f"agent spec {i}: spawn footprint overlaps another agent")
        placed.append(spawn)

    jobs = (
        [("moving", AgentCategory.CAR, spec.vehicle_lanes, spec.vehicle_speed)] * spec.moving_vehicles
        + [("parked", AgentCategory.CAR, spec.parking_segments, (0.0, 0.0))] * spec.parked_vehicles
        + [("vru", AgentCategory.PEDESTRIAN, spec.vru_paths, spec.pedestrian_speed)] * spec.pedestrians
        + [("vru", AgentCategory.BICYCLE, spec.vru_paths, spec.bicycle_speed)] * spec.bicycles
    )
    streams = []
    for kind, category, segments, speeds in jobs:
        if not segments:
            raise ScenarioError(f"{kind} agents requested but no segments declared for them")
        length, width = FOOTPRINTS[category]
        for _ in range(spec.max_spawn_attempts):
            seg = segments[int(rng.integers(len(segments)))]
            u = float(rng.random())
            speed = 0.0 if kind == "parked" else float(rng.uniform(*speeds))
            ux, uy = seg.direction
            x0, y0 = seg.point(u)
            spawn = _Spawn(category, x0, y0, speed * ux, speed * uy,
                           float(normalize_heading(math.atan2(uy, ux))), length, width, 0, last)
            if not _overlaps(spawn, placed, spec.frame_rate):
                placed.append(spawn)
                if spec.respawn and speed > 0:
                    spawn.last = min(last, _frames_to_travel((1.0 - u) * seg.length, speed, spec.frame_rate))
                    streams.append((spawn, seg, speeds))
                break
        else:
            raise ScenarioError(f"could not place {kind} {category.value} without overlapping footprints")

    for spawn, seg, speeds in streams:
        current = spawn
        while True:
            first = current.last + 1 + int(rng.integers(spec.respawn_delay[0], spec.respawn_delay[1] + 1))
            if first > last:
                break
            speed = float(rng.uniform(*speeds))
            ux, uy = seg.direction
            for _ in range(spec.max_spawn_attempts):
                nxt = _Spawn(current.category, seg.start[0], seg.start[1], speed * ux, speed * uy,
                             current.heading, current.length, current.width, first,
                             min(last, first + _frames_to_travel(seg.length, speed, spec.frame_rate)))
                if not _overlaps(nxt, _alive_at(placed, first), spec.frame_rate):
                    break
                first += 1
            else:
                raise ScenarioError("could not respawn an agent without overlapping footprints")
            if first > last:
                break
            placed.append(nxt)
            current = nxt

    tracks = []
    for agent_id, s in enumerate(placed, start=1):
        n = s.last - s.first + 1
        dt = np.arange(n) / spec.frame_rate
        tracks.append(Track(
            agent_id=agent_id,
            category=s.category,
            first_frame=s.first,
            x=s.x0 + s.vx * dt,
            y=s.y0 + s.vy * dt,
            vx=np.full(n, s.vx),
            vy=np.full(n, s.vy),
            heading=np.full(n, s.heading),
            length=np.full(n, s.length),
            width=np.full(n, s.width),
        ))
    return Scenario(tuple(tracks), spec.frame_rate, name)


def four_way_intersection(duration_frames: int, moving_vehicles: int = 6, parked_vehicles: int = 6,
                          pedestrians: int = 6, bicycles: int = 2, frame_rate: float = 25.0,
                          extent: float = 60.0, **overrides) -> SyntheticSpec:
    """A four-legged crossroads with roadside parking and crosswalks."""
    e = extent
    lanes = (
        Segment((-e, -1.75), (e, -1.75)), Segment((e, 1.75), (-e, 1.75)),
        Segment((1.75, -e), (1.75, e)), Segment((-1.75, e), (-1.75, -e)),
    )
    parking = (
        Segment((-e, -5.0), (-9.0, -5.0)), Segment((9.0, 5.0), (e, 5.0)),
        Segment((5.0, -e), (5.0, -9.0)), Segment((-5.0, 9.0), (-5.0, e)),
    )
    paths = (
        Segment((-12.0, -8.0), (-12.0, 8.0)), Segment((12.0, 8.0), (12.0, -8.0)),
        Segment((-8.0, 12.0), (8.0, 12.0)), Segment((8.0, -12.0), (-8.0, -12.0)),
        Segment((-e, -8.0), (-12.0, -8.0)), Segment((e, 8.0), (12.0, 8.0)),
    )
    kw = dict(duration_frames=duration_frames, frame_rate=frame_rate, moving_vehicles=moving_vehicles,
              parked_vehicles=parked_vehicles, pedestrians=pedestrians, bicycles=bicycles,
              vehicle_lanes=lanes, parking_segments=parking, vru_paths=paths)
    kw.update(overrides)
    return SyntheticSpec(**kw)
