"""Time-stamped snapshot sequences and their on-disk directory format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .grid import GridFunction, integrate, read_csv, write_csv


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list[GridFunction]
    meta: dict = field(default_factory=dict)
    conserved_mass: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.snapshots):
            raise InvalidInputError("snapshot count must equal time count")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidInputError("times must be strictly increasing")
        if self.conserved_mass is None:
            self.conserved_mass = np.array([integrate(s) for s in self.snapshots])

    def __len__(self) -> int:
        return len(self.times)

    @property
    def grid(self):
        return self.snapshots[0].grid

    @property
    def mass_drift(self) -> float:
        return float(np.max(np.abs(self.conserved_mass - self.conserved_mass[0])))

    def at(self, t: float) -> GridFunction:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.snapshots[i]

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for i, snap in enumerate(self.snapshots):
            write_csv(snap, directory / f"snap_{i:05d}.csv")
        meta = dict(self.meta)
        meta["times"] = [float(t) for t in self.times]
        meta["conserved_mass"] = [float(m) for m in self.conserved_mass]
        (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "Trajectory":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        times = meta.pop("times")
        mass = np.array(meta.pop("conserved_mass"))
        snaps = [read_csv(directory / f"snap_{i:05d}.csv") for i in range(len(times))]
        return cls(np.array(times), snaps, meta, mass)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def geometric_times(t_first: float, T: float, count: int) -> np.ndarray:
    """0 followed by count geometrically spaced times from t_first to T."""
    return np.concatenate([[0.0], np.geomspace(t_first, T, count)])
