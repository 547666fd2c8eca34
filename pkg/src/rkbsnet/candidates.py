"""Finite candidate sets of network parameters inside a bounding box."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .network import NetworkSpec, param_dim

MAX_GRID_DIM = 8


class GridTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class BoxSpec:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).ravel()
        hi = np.array(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def cube(cls, dim: int, bound: float) -> "BoxSpec":
        return cls(np.full(dim, -float(bound)), np.full(dim, float(bound)))

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all((points >= self.lower) & (points <= self.upper), axis=1)


def default_box(spec: NetworkSpec, alpha: float = 1.0, bound: float | None = None) -> BoxSpec:
    """The cube [-B, B]^d with B = 3 / sqrt(alpha) unless ``bound`` is given."""
    if bound is None:
        bound = 3.0 / math.sqrt(alpha)
    return BoxSpec.cube(param_dim(spec), bound)


@dataclass(frozen=True)
class CandidateSet:
    points: np.ndarray
    box: BoxSpec
    provenance: str
    seed: int

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.box.dim)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def _dedupe(points: np.ndarray) -> np.ndarray:
    """Drop exact duplicate rows, keeping first occurrences in order."""
    seen = set()
    keep = []
    for i, row in enumerate(points):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return points[keep]


def sample(box: BoxSpec, mode: str = "random", *, count: int | None = None,
           k_per_dim: int | None = None, seed: int = 0) -> CandidateSet:
    """Draw a candidate set.

    ``mode="random"`` takes ``count`` uniform draws from the box with a
    generator seeded by ``seed``; ``mode="grid"`` builds the full tensor grid
    with ``k_per_dim`` points per coordinate in lexicographic order.
    """
    if mode == "random":
        if count is None or count < 1:
            raise ValueError("random sampling needs count >= 1")
        rng = np.random.default_rng(seed)
        pts = rng.uniform(box.lower, box.upper, size=(count, box.dim))
        return CandidateSet(_dedupe(pts), box, "random", seed)
    if mode == "grid":
        if k_per_dim is None or k_per_dim < 1:
            raise ValueError("grid sampling needs k_per_dim >= 1")
        if box.dim > MAX_GRID_DIM:
            raise GridTooLargeError(
                f"tensor grid refused for dimension {box.dim} > {MAX_GRID_DIM}"
            )
        if k_per_dim == 1:
            axes = [np.array([0.5 * (lo + hi)]) for lo, hi in zip(box.lower, box.upper)]
        else:
            axes = [np.linspace(lo, hi, k_per_dim) for lo, hi in zip(box.lower, box.upper)]
        pts = np.array(list(itertools.product(*axes)), dtype=float)
        return CandidateSet(_dedupe(pts), box, "grid", seed)
    raise ValueError(f"unknown sampling mode {mode!r}")


def refine(cands: CandidateSet, centers, radius: float, count_per_center: int,
           seed: int) -> CandidateSet:
    """Append uniform draws from sup-norm balls around ``centers``, clipped to the box."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    centers = np.asarray(centers, dtype=float).reshape(-1, cands.box.dim)
    if count_per_center <= 0 or centers.shape[0] == 0:
        return cands
    rng = np.random.default_rng(seed)
    new = []
    for c in centers:
        draws = rng.uniform(c - radius, c + radius, size=(count_per_center, c.size))
        new.append(np.clip(draws, cands.box.lower, cands.box.upper))
    pts = _dedupe(np.vstack([cands.points, *new]))
    return CandidateSet(pts, cands.box, "refined", seed)
