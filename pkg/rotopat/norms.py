"""Discrete norms used by the smallness condition and the stability estimate."""
from __future__ import annotations
import numpy as np

from .geometry import ScalarField


def w1inf_norm(field: ScalarField) -> float:
    """max |f| plus max over grid edges of |forward difference| / h."""
    v = field.values
    h = field.grid.h
    gx = np.abs(np.diff(v, axis=0)).max(initial=0.0)
    gy = np.abs(np.diff(v, axis=1)).max(initial=0.0)
    return float(np.abs(v).max(initial=0.0) + max(gx, gy) / h)


def h1_norm_field(field: ScalarField) -> float:
    v = field.values
    h = field.grid.h
    l2 = np.sum(v ** 2) * h * h
    grad = np.sum(np.diff(v, axis=0) ** 2) + np.sum(np.diff(v, axis=1) ** 2)
    return float(np.sqrt(l2 + grad))


def h1_norm_trace(trace) -> float:
    """H1 over [0, T] x circle: trapezoid weights in time, periodic in arc length."""
    v = trace.values
    dt = trace.dt
    ds = trace.boundary.arc_length_step
    wt = np.full(v.shape[0], dt)
    wt[0] = wt[-1] = dt / 2
    l2 = np.sum(wt[:, None] * v ** 2) * ds
    d_time = np.sum(np.diff(v, axis=0) ** 2) / dt * ds
    d_arc = np.sum(wt[:, None] * (np.roll(v, -1, axis=1) - v) ** 2) / ds
    return float(np.sqrt(l2 + d_time + d_arc))