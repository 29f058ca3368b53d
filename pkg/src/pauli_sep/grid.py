"""Evaluation grids and the parallel map used by residual sweeps."""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned box sampled with ``n`` points per axis, minus exclusion balls.

    ``times`` lists the time slices at which time-dependent residuals are
    evaluated.
    """

    lo: tuple = (-1.0, -1.0, -1.0)
    hi: tuple = (1.0, 1.0, 1.0)
    n: tuple = (5, 5, 5)
    exclusions: tuple = ()
    times: tuple = (0.0,)

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        n = tuple(int(v) for v in self.n)
        if len(lo) != 3 or len(hi) != 3 or len(n) != 3:
            raise DomainError("grid needs three lo, hi and n entries")
        if any(a > b for a, b in zip(lo, hi)) or any(m < 1 for m in n):
            raise DomainError(f"bad grid box lo={lo} hi={hi} n={n}")
        excl = []
        for item in self.exclusions:
            if isinstance(item, dict):
                center, radius = item["center"], item["radius"]
            else:
                center, radius = item
            center = tuple(float(c) for c in center)
            if len(center) != 3 or float(radius) < 0:
                raise DomainError(f"bad exclusion {item!r}")
            excl.append((center, float(radius)))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "exclusions", tuple(excl))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    def points(self):
        axes = [np.linspace(a, b, m) if m > 1 else np.array([0.5 * (a + b)])
                for a, b, m in zip(self.lo, self.hi, self.n)]
        P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        keep = np.ones(len(P), dtype=bool)
        for center, radius in self.exclusions:
            keep &= np.linalg.norm(P - np.asarray(center), axis=-1) >= radius
        return P[keep]

    def to_dict(self):
        return {
            "lo": list(self.lo), "hi": list(self.hi), "n": list(self.n),
            "exclusions": [{"center": list(c), "radius": r} for c, r in self.exclusions],
            "times": list(self.times),
        }

    @classmethod
    def from_dict(cls, record):
        unknown = set(record) - {"lo", "hi", "n", "exclusions", "times"}
        if unknown:
            raise DomainError(f"unknown grid keys {sorted(unknown)}")
        return cls(**{k: tuple(v) for k, v in record.items()})


def thread_count():
    """Parallel map width, capped by ``PAULI_SEP_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("PAULI_SEP_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, points, chunk=256):
    """Apply a vectorised ``fn`` to row-chunks of ``points`` and concatenate.

    ``fn`` must be side-effect free; chunks may run concurrently.
    """
    points = np.asarray(points)
    chunks = [points[i:i + chunk] for i in range(0, len(points), chunk)] or [points]
    width = thread_count()
    if width == 1 or len(chunks) == 1:
        results = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(fn, chunks))
    return np.concatenate(results, axis=0)
