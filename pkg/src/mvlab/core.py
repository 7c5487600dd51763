"""Value types shared by every other module: states, path segments,
empirical measures, and reproducible Gaussian noise streams.

States are plain float64 numpy arrays of shape (dim,).  A Segment is a
path window sampled on a uniform grid over [-r0, 0]; when r0 == 0 it
degenerates to a single state.  An EmpiricalMeasure is a finite weighted
set of segment (or point) atoms.  Noise streams are counter-based
(Philox) and keyed by (master_seed, stream_id), so draws are pure
functions of the key and independent streams can run in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Segment",
    "EmpiricalMeasure",
    "NoiseStream",
    "StreamBank",
    "as_state",
    "segment_shift",
    "sup_norm",
    "gaussian_increments",
]


def as_state(x, dim=None):
    """Coerce x to a finite float64 vector, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"state must be 1-d, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("state has non-finite coordinates")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"state has dim {v.shape[0]}, expected {dim}")
    return v


def _grid_length(r0, dt_grid):
    if r0 < 0:
        raise ValueError("r0 must be nonnegative")
    if r0 == 0.0:
        return 1
    if dt_grid <= 0:
        raise ValueError("dt_grid must be positive")
    n = r0 / dt_grid
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ValueError(f"r0={r0} is not an integer multiple of dt_grid={dt_grid}")
    return int(round(n)) + 1


@dataclass(frozen=True)
class Segment:
    """A path window on [-r0, 0] sampled on a uniform grid of step dt_grid.

    values[k] is the state at time -r0 + k*dt_grid; values[-1] is the
    current state.  r0 must be an integer multiple of dt_grid.
    """

    values: np.ndarray  # (n_grid, dim)
    r0: float
    dt_grid: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[None, :]
        if vals.ndim != 2:
            raise ValueError(f"segment values must be (n_grid, dim), got {vals.shape}")
        n_expected = _grid_length(self.r0, self.dt_grid if self.r0 > 0 else 1.0)
        if vals.shape[0] != n_expected:
            raise ValueError(
                f"segment grid has {vals.shape[0]} points, expected {n_expected} "
                f"for r0={self.r0}, dt_grid={self.dt_grid}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("segment has non-finite values")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, x, r0=0.0, dt_grid=1.0):
        """Segment that sits at x over the whole window (flat history)."""
        x = as_state(x)
        n = _grid_length(r0, dt_grid if r0 > 0 else 1.0)
        return cls(np.tile(x, (n, 1)), r0, dt_grid)

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def n_grid(self):
        return self.values.shape[0]

    @property
    def current(self):
        """The state at time 0 (newest grid point)."""
        return self.values[-1]

    def shift(self, new_value):
        """Advance one grid step: drop the oldest value, append new_value."""
        new_value = as_state(new_value, self.dim)
        if self.n_grid == 1:
            return Segment(new_value[None, :], self.r0, self.dt_grid)
        vals = np.concatenate([self.values[1:], new_value[None, :]], axis=0)
        return Segment(vals, self.r0, self.dt_grid)

    def sup_norm(self):
        """max over grid points of the Euclidean norm."""
        return float(np.max(np.linalg.norm(self.values, axis=1)))


def segment_shift(seg: Segment, new_value) -> Segment:
    return seg.shift(new_value)


def sup_norm(seg: Segment) -> float:
    return seg.sup_norm()


class EmpiricalMeasure:
    """Finitely many weighted atoms approximating a law on path space.

    Atoms are stored as an (n_atoms, n_grid, dim) array; point measures
    use n_grid == 1.  Weights are normalized to sum to 1 (uniform by
    default).  Instances are treated as immutable; derived statistics
    are cached on first use.
    """

    def __init__(self, atoms, weights=None, *, r0=0.0, dt_grid=1.0,
                 copy=True, validate=True):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 2:  # (n, dim) points
            atoms = atoms[:, None, :]
        if atoms.ndim != 3:
            raise ValueError(f"atoms must be (n, n_grid, dim), got shape {atoms.shape}")
        if atoms.shape[0] == 0:
            raise ValueError("empirical measure needs at least one atom")
        if copy:
            atoms = atoms.copy()
        n = atoms.shape[0]
        if weights is None:
            weights = np.full(n, 1.0 / n)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (n,):
                raise ValueError("weights length must match atom count")
            if np.any(weights < 0):
                raise ValueError("weights must be nonnegative")
            total = weights.sum()
            if total <= 0:
                raise ValueError("weights must have positive total mass")
            weights = weights / total
        if validate and not np.all(np.isfinite(atoms)):
            raise ValueError("atoms contain non-finite values")
        self.atoms = atoms
        self.weights = weights
        self.r0 = float(r0)
        self.dt_grid = float(dt_grid)

    @classmethod
    def from_points(cls, points, weights=None):
        return cls(np.asarray(points, dtype=float), weights)

    @classmethod
    def from_segments(cls, segments, weights=None):
        segs = list(segments)
        if not segs:
            raise ValueError("no segments given")
        vals = np.stack([s.values for s in segs])
        return cls(vals, weights, r0=segs[0].r0, dt_grid=segs[0].dt_grid)

    @property
    def n_atoms(self):
        return self.atoms.shape[0]

    @property
    def n_grid(self):
        return self.atoms.shape[1]

    @property
    def dim(self):
        return self.atoms.shape[2]

    @property
    def states(self):
        """Current (time 0) value of every atom, shape (n_atoms, dim)."""
        return self.atoms[:, -1, :]

    @cached_property
    def mean_state(self):
        """Weighted mean of the atoms' current values."""
        return self.weights @ self.states

    @cached_property
    def mean_segment(self):
        return np.einsum("n,ngd->gd", self.weights, self.atoms)

    def segment(self, i) -> Segment:
        return Segment(self.atoms[i], self.r0, self.dt_grid)

    def subsample(self, max_atoms):
        """Deterministic thinning to at most max_atoms (evenly spaced)."""
        n = self.n_atoms
        if n <= max_atoms:
            return self
        idx = np.linspace(0, n - 1, max_atoms).round().astype(int)
        return EmpiricalMeasure(self.atoms[idx], r0=self.r0, dt_grid=self.dt_grid)

    def __repr__(self):
        return (f"EmpiricalMeasure(n_atoms={self.n_atoms}, n_grid={self.n_grid}, "
                f"dim={self.dim})")


def _philox(master_seed, stream_id):
    key = np.array([np.uint64(int(master_seed) & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(int(stream_id) & 0xFFFFFFFFFFFFFFFF)])
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class NoiseStream:
    """Identifies a reproducible Gaussian increment stream.

    Draws are a pure function of (master_seed, stream_id): the same key
    always reproduces the same sequence, and distinct stream_ids give
    statistically independent streams.
    """

    master_seed: int
    stream_id: int = 0
    dt: float = 1.0

    def generator(self):
        return _philox(self.master_seed, self.stream_id)


def gaussian_increments(stream: NoiseStream, n_steps: int, dim: int) -> np.ndarray:
    """(n_steps, dim) i.i.d. N(0, dt * I) increments, from the stream start."""
    if n_steps < 1 or dim < 1:
        raise ValueError("n_steps and dim must be >= 1")
    gen = stream.generator()
    return gen.standard_normal((n_steps, dim)) * np.sqrt(stream.dt)


class StreamBank:
    """Per-stream generators for chunked draws across many particles.

    Draws unit-variance normals in blocks of shape
    (n_streams, n_steps, dim); consecutive calls continue each stream,
    so chunked and unchunked runs agree bit for bit.
    """

    def __init__(self, master_seed, stream_ids):
        self.master_seed = master_seed
        self.stream_ids = list(stream_ids)
        self._gens = [_philox(master_seed, sid) for sid in self.stream_ids]

    def draw_units(self, n_steps, dim):
        out = np.empty((len(self._gens), n_steps, dim))
        for i, gen in enumerate(self._gens):
            out[i] = gen.standard_normal((n_steps, dim))
        return out
