"""Synthetic incident patterns: Poisson sampling with rejection thinning.

Sampling is reproducible: a fixed seed drives a single PCG64 generator
through a deterministic sequence of draws (candidate count, candidate
positions via bounding-box rejection, thinning uniforms).
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Window, window_area
from .intensity import IntensityField, PointPattern

#: Name of the RNG algorithm recorded in simulation metadata.
GENERATOR = "numpy PCG64"


@dataclass
class IntensitySpec:
    """Target intensity: a constant rate, or a bounded function over the window."""

    lmax: float
    rate: float | None = None
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    @classmethod
    def constant(cls, rate: float) -> "IntensitySpec":
        return cls(lmax=float(rate), rate=float(rate))

    @classmethod
    def from_function(cls, fn, lmax: float) -> "IntensitySpec":
        return cls(lmax=float(lmax), fn=fn)

    @classmethod
    def from_field(cls, fld: IntensityField, lmax: float | None = None) -> "IntensitySpec":
        bound = float(fld.values.max()) if lmax is None else float(lmax)
        return cls(lmax=bound, fn=lambda x, y: fld.value_at(x, y))

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.fn is None:
            return np.full(np.shape(x), self.rate, dtype=float)
        return np.asarray(self.fn(x, y), dtype=float)


def sample_poisson(spec: IntensitySpec, w: Window, seed: int) -> PointPattern:
    """Draw one inhomogeneous Poisson pattern in the window.

    Draws a Poisson(lmax * area) number of uniform candidates in the window
    and keeps each with probability intensity/lmax.
    """
    if not (spec.lmax > 0 and math.isfinite(spec.lmax)):
        raise ValueError("the intensity bound lmax must be positive and finite")
    rng = np.random.default_rng(int(seed))
    target = int(rng.poisson(spec.lmax * window_area(w)))
    xmin, ymin, xmax, ymax = w.bbox()
    chunks = []
    have = 0
    while have < target:
        k = max(4 * (target - have) + 16, 16)
        xs = rng.uniform(xmin, xmax, k)
        ys = rng.uniform(ymin, ymax, k)
        keep = w.contains(xs, ys)
        chunk = np.column_stack([xs[keep], ys[keep]])
        chunks.append(chunk)
        have += len(chunk)
    candidates = (
        np.concatenate(chunks)[:target] if chunks else np.empty((0, 2))
    )
    lam = spec.evaluate(candidates[:, 0], candidates[:, 1])
    if np.any(lam < 0) or np.any(lam > spec.lmax * (1 + 1e-12)):
        raise ValueError("intensity leaves the range [0, lmax] inside the window")
    retained = candidates[rng.random(target) < lam / spec.lmax]
    return PointPattern(retained)
