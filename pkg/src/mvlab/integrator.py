"""Time stepping for single trajectories.

Two explicit schemes: plain Euler-Maruyama, and an exponential (mild)
Euler step for models with a diagonal linear part, which treats the
stochastic convolution with its exact per-mode variance
(1 - exp(-2 lambda dt)) / (2 lambda) so stiff high modes stay stable at
any dt.  Drift is evaluated at the left endpoint segment and the
step-start measure.  Synchronous coupling drives two equations with
identical increments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import NoiseStream, Segment

__all__ = [
    "StepScheme",
    "TrajectoryRecord",
    "step",
    "simulate_reference",
    "simulate_coupled",
]

_SCHEMES = ("euler_maruyama", "exponential_euler")


@dataclass(frozen=True)
class StepScheme:
    kind: str
    dt: float

    def __post_init__(self):
        if self.kind not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.kind!r}; choose from {_SCHEMES}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def n_steps(self, horizon):
        return max(1, int(round(horizon / self.dt)))


@dataclass
class TrajectoryRecord:
    times: np.ndarray           # (n+1,)
    states: np.ndarray          # (n+1, dim)
    final_segment: Optional[Segment] = None
    segment_snapshots: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            dim = self.states.shape[1]
            w.writerow(["t"] + [f"x_{i + 1}" for i in range(dim)])
            for t, x in zip(self.times, self.states):
                w.writerow([format(t, ".17g")] + [format(v, ".17g") for v in x])


def _scheme_tables(model, scheme):
    """Per-mode decay/drift/noise coefficients, precomputed once."""
    dt = scheme.dt
    if scheme.kind == "euler_maruyama":
        lam = model.spectrum if model.spectrum is not None else None
        return {"kind": "em", "dt": dt, "lam": lam}
    if model.spectrum is None:
        raise ValueError("exponential_euler requires a model with a spectrum")
    lam = model.spectrum
    decay = np.exp(-lam * dt)
    drift_w = -np.expm1(-lam * dt) / lam          # (1 - e^{-lam dt}) / lam
    noise_sd = np.sqrt(-np.expm1(-2.0 * lam * dt) / (2.0 * lam))
    return {"kind": "exp", "dt": dt, "decay": decay,
            "drift_w": drift_w, "noise_sd": noise_sd}


def _advance(values, measure, model, tables, units):
    """One step for a batch of segments.

    values: (..., n_grid, dim); units: (..., noise_dim) unit normals.
    Returns the new current states (..., dim).
    """
    x = values[..., -1, :]
    b = model.drift(values, measure)
    sig = model.diffusion(measure)
    dt = tables["dt"]
    if tables["kind"] == "em":
        ax = -tables["lam"] * x if tables["lam"] is not None else 0.0
        return x + (ax + b) * dt + np.sqrt(dt) * (units @ sig.T)
    return (tables["decay"] * x + tables["drift_w"] * b
            + tables["noise_sd"] * (units @ sig.T))


def step(model, seg: Segment, measure, noise_increment, scheme: StepScheme):
    """Advance one segment by one step; noise_increment ~ N(0, dt I)."""
    if seg.dim != model.dim:
        raise ValueError(f"segment dim {seg.dim} != model dim {model.dim}")
    tables = _scheme_tables(model, scheme)
    units = np.asarray(noise_increment, dtype=float) / np.sqrt(scheme.dt)
    new_state = _advance(seg.values[None], measure, model, tables, units[None])[0]
    return new_state


def _check_grid(model, scheme):
    if model.r0 > 0:
        n = model.r0 / scheme.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(
                f"dt={scheme.dt} does not divide the delay r0={model.r0}")
        theta = model.params.get("theta_weights") if hasattr(model, "params") else None
        if theta is not None and len(theta) != int(round(n)) + 1:
            raise ValueError(
                f"model delay weights live on {len(theta)} grid points but "
                f"r0={model.r0}, dt={scheme.dt} gives {int(round(n)) + 1}")


def simulate_reference(ref, init: Segment, T, scheme: StepScheme,
                       stream: NoiseStream, snapshot_times=()):
    """Markov trajectory of a frozen-measure (or measure-free) model.

    Deterministic given the stream.  Optional segment snapshots are
    taken at the requested times (rounded to the step grid).
    """
    _check_grid(ref, scheme)
    if init.dim != ref.dim:
        raise ValueError("init segment dim mismatch")
    n = scheme.n_steps(T)
    gen = stream.generator()
    values = init.values.copy()
    times = np.arange(n + 1) * scheme.dt
    states = np.empty((n + 1, ref.dim))
    states[0] = values[-1]
    tables = _scheme_tables(ref, scheme)
    snap_idx = {int(round(t / scheme.dt)): t for t in snapshot_times}
    snaps = {}
    for k in range(n):
        units = gen.standard_normal(ref.noise_dim)
        new = _advance(values[None], None, ref, tables, units[None])[0]
        if values.shape[0] == 1:
            values = new[None, :]
        else:
            values = np.concatenate([values[1:], new[None, :]], axis=0)
        states[k + 1] = new
        if k + 1 in snap_idx:
            snaps[snap_idx[k + 1]] = Segment(values.copy(), ref.r0,
                                             scheme.dt if ref.r0 > 0 else 1.0)
    final = Segment(values.copy(), ref.r0, scheme.dt if ref.r0 > 0 else 1.0)
    return TrajectoryRecord(times, states, final_segment=final,
                            segment_snapshots=snaps)


def simulate_coupled(model, ref, init: Segment, T, scheme: StepScheme,
                     stream: NoiseStream, law_flow):
    """Advance the law-dependent equation and its reference on one noise.

    law_flow supplies the measure argument per step: either a sequence
    of EmpiricalMeasure with one entry per step, or an object with a
    .measures list.  Both trajectories start from the same init segment
    and consume identical Gaussian increments; the returned distance
    series is min(sup-norm of the segment difference, 1) per step.
    """
    measures = getattr(law_flow, "measures", law_flow)
    _check_grid(model, scheme)
    n = scheme.n_steps(T)
    if len(measures) < n:
        raise ValueError(f"law_flow supplies {len(measures)} measures, need {n}")
    gen = stream.generator()
    v_model = init.values.copy()
    v_ref = init.values.copy()
    times = np.arange(n + 1) * scheme.dt
    states_m = np.empty((n + 1, model.dim))
    states_r = np.empty((n + 1, model.dim))
    states_m[0] = v_model[-1]
    states_r[0] = v_ref[-1]
    dist = np.empty(n + 1)
    dist[0] = 0.0
    tab_m = _scheme_tables(model, scheme)
    tab_r = _scheme_tables(ref, scheme)
    for k in range(n):
        units = gen.standard_normal(model.noise_dim)
        new_m = _advance(v_model[None], measures[k], model, tab_m, units[None])[0]
        new_r = _advance(v_ref[None], None, ref, tab_r, units[None])[0]
        if v_model.shape[0] == 1:
            v_model = new_m[None, :]
            v_ref = new_r[None, :]
        else:
            v_model = np.concatenate([v_model[1:], new_m[None, :]], axis=0)
            v_ref = np.concatenate([v_ref[1:], new_r[None, :]], axis=0)
        states_m[k + 1] = new_m
        states_r[k + 1] = new_r
        gap = np.max(np.linalg.norm(v_model - v_ref, axis=1))
        dist[k + 1] = min(gap, 1.0)
    dt_grid = scheme.dt if model.r0 > 0 else 1.0
    rec_m = TrajectoryRecord(times, states_m,
                             final_segment=Segment(v_model, model.r0, dt_grid))
    rec_r = TrajectoryRecord(times, states_r,
                             final_segment=Segment(v_ref, model.r0, dt_grid))
    return rec_m, rec_r, dist
