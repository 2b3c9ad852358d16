"""Lattice-path encoding of colour orderings.

A configuration of N white and N black points on a line is reduced to the
sign vector of its sorted points (+1 white, -1 black).  The same sequence is
read as a lattice path of up/down steps; everything the optimal matchings
depend on is a function of this path alone.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateCoordinate, NotABridge, SizeMismatch


class Ensemble(enum.Enum):
    BRIDGE = "bridge"
    EXCURSION = "excursion"

    @classmethod
    def parse(cls, value: "str | Ensemble") -> "Ensemble":
        if isinstance(value, Ensemble):
            return value
        key = value.strip().lower()
        aliases = {"b": "bridge", "e": "excursion", "dyck": "excursion"}
        return cls(aliases.get(key, key))


class PathClass(enum.Enum):
    BRIDGE = "bridge"
    EXCURSION = "excursion"
    NEITHER = "neither"


@dataclass(frozen=True)
class SignPath:
    """Immutable +-1 step sequence of even length 2N."""

    steps: tuple[int, ...]

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if any(s not in (1, -1) for s in steps):
            raise ValueError("steps must be +1 or -1")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def parse(cls, text: str) -> "SignPath":
        """Read a U/D string or a JSON array of +-1."""
        text = text.strip()
        if text.startswith("["):
            return cls(tuple(json.loads(text)))
        table = {"U": 1, "D": -1, "W": 1, "B": -1}
        try:
            return cls(tuple(table[c] for c in text.upper() if not c.isspace()))
        except KeyError as exc:
            raise ValueError(f"unknown step symbol {exc.args[0]!r}") from None

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def __add__(self, other: "SignPath") -> "SignPath":
        return SignPath(self.steps + other.steps)

    def __neg__(self) -> "SignPath":
        return SignPath(tuple(-s for s in self.steps))

    @property
    def size(self) -> int:
        """Semi-length N."""
        return len(self.steps) // 2

    def to_ud(self) -> str:
        return "".join("U" if s > 0 else "D" for s in self.steps)

    def to_json(self) -> str:
        return json.dumps(list(self.steps))

    def __str__(self) -> str:
        return self.to_ud()

    def as_array(self) -> np.ndarray:
        return np.asarray(self.steps, dtype=np.int64)


@dataclass(frozen=True)
class HeightProfile:
    doubled_heights: tuple[int, ...]
    hbar: tuple[int, ...]


@dataclass(frozen=True)
class ClosingStep:
    index: int  # 1-based
    hbar: int


@dataclass(frozen=True)
class Instance:
    """Sorted white and black coordinates of a generic configuration."""

    whites: tuple
    blacks: tuple

    def __post_init__(self):
        whites = tuple(sorted(self.whites))
        blacks = tuple(sorted(self.blacks))
        if len(whites) != len(blacks):
            raise SizeMismatch(f"{len(whites)} whites vs {len(blacks)} blacks")
        merged = sorted(whites + blacks)
        for a, b in zip(merged, merged[1:]):
            if a == b:
                raise DuplicateCoordinate(f"coordinate {a!r} appears twice")
        object.__setattr__(self, "whites", whites)
        object.__setattr__(self, "blacks", blacks)

    @property
    def size(self) -> int:
        return len(self.whites)

    def merged(self) -> list[tuple[float, int]]:
        """(coordinate, sign) pairs in increasing coordinate order."""
        pts = [(w, 1) for w in self.whites] + [(b, -1) for b in self.blacks]
        pts.sort()
        return pts

    @classmethod
    def from_points(cls, points: Iterable[tuple[str, float]]) -> "Instance":
        whites, blacks = [], []
        for color, x in points:
            c = color.strip().lower()
            if c in ("w", "white", "+1", "1"):
                whites.append(x)
            elif c in ("b", "black", "-1"):
                blacks.append(x)
            else:
                raise ValueError(f"unknown colour {color!r}")
        return cls(tuple(whites), tuple(blacks))


def heights(path: SignPath) -> HeightProfile:
    doubled = []
    level = 0
    for s in path.steps:
        doubled.append(2 * level + s)
        level += s
    hbar = tuple((abs(d) + 1) // 2 for d in doubled)
    return HeightProfile(tuple(doubled), hbar)


def closing_steps(path: SignPath) -> list[ClosingStep]:
    """Steps moving back towards height zero, with the stack size they see."""
    out = []
    level = 0
    for i, s in enumerate(path.steps, start=1):
        # midpoint height has the sign of `level` whenever level != 0
        if level * s < 0:
            out.append(ClosingStep(i, abs(level)))
        level += s
    return out


def classify(path: Sequence[int] | SignPath) -> PathClass:
    steps = path.steps if isinstance(path, SignPath) else tuple(path)
    if len(steps) % 2 or sum(steps) != 0:
        return PathClass.NEITHER
    level = 0
    for s in steps:
        level += s
        if level < 0:
            return PathClass.BRIDGE
    return PathClass.EXCURSION


def is_bridge(path: SignPath) -> bool:
    return classify(path) is not PathClass.NEITHER


def require_bridge(path: SignPath) -> None:
    if not is_bridge(path):
        raise NotABridge(f"path {path} is not a balanced bridge")


def from_instance(inst: Instance) -> SignPath:
    return SignPath(tuple(sign for _, sign in inst.merged()))


def to_canonical_instance(path: SignPath) -> Instance:
    """Place the i-th point at integer coordinate i."""
    require_bridge(path)
    whites = tuple(i for i, s in enumerate(path.steps, start=1) if s > 0)
    blacks = tuple(i for i, s in enumerate(path.steps, start=1) if s < 0)
    return Instance(whites, blacks)
