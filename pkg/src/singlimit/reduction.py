"""Reduced variables and the discrete norms controlled by the scalar limit.

A primitive state (n_i, n_u) maps to

  n   the reduced population: deficit 1/(sigma eps) - (n_i + n_u) for the
      perfect/imperfect variants, eps*sigma*(n_i + n_u) for the alternative
      scaling
  p   the infected frequency, with p = 0 at vacuum nodes
  m   the manifold residual n - h(p), the pointwise distance to the slow
      manifold (undefined for the alternative scaling and left as None)

and the convergence of a family of system runs toward the scalar limit is
measured by space-time L2 norms of p - p0 and of m on a shared grid and
shared output times; no interpolation is ever applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import NEGATIVE_TOL, ScaledModel, Variant, slow_manifold
from .solver import Field, PopulationState, l2_spacetime

__all__ = ["ReducedFields", "to_reduced", "reduced_to_state", "error_norms"]


@dataclass(frozen=True)
class ReducedFields:
    """Reduced population, frequency and manifold residual at one time."""

    n: Field
    p: Field
    m: Field | None
    time: float

    def __post_init__(self):
        if self.n.grid != self.p.grid or (self.m is not None and self.m.grid != self.n.grid):
            raise ValueError("reduced fields must share one grid")
        if self.p.values.min() < -1e-12 or self.p.values.max() > 1.0 + 1e-12:
            raise ValueError("frequency outside [0, 1] beyond round-off")


def to_reduced(model: ScaledModel, state: PopulationState) -> ReducedFields:
    """Map a primitive state to its reduced variables."""
    ni, nu = state.ni.values, state.nu.values
    if min(ni.min(), nu.min()) < -NEGATIVE_TOL:
        raise ValueError("negative density beyond round-off")
    total = ni + nu
    prm = model.params
    grid = state.grid

    safe = np.where(total != 0.0, total, 1.0)
    p = np.where(total != 0.0, ni / safe, 0.0)
    p_field = Field(np.clip(p, 0.0, 1.0), grid)

    if model.variant is Variant.ALTERNATIVE:
        n = model.epsilon * prm.sigma * total
        m_field = None
    else:
        n = 1.0 / (prm.sigma * model.epsilon) - total
        m_field = Field(n - slow_manifold(model, p_field.values), grid)
    return ReducedFields(Field(n, grid), p_field, m_field, state.time)


def reduced_to_state(model: ScaledModel, reduced: ReducedFields) -> PopulationState:
    """Exact algebraic inverse of to_reduced (vacuum nodes map to (0, 0))."""
    prm = model.params
    if model.variant is Variant.ALTERNATIVE:
        total = reduced.n.values / (model.epsilon * prm.sigma)
    else:
        total = 1.0 / (prm.sigma * model.epsilon) - reduced.n.values
    if total.min() < -NEGATIVE_TOL:
        raise ValueError("reduced population exceeds the carrying total")
    total = np.maximum(total, 0.0)
    ni = reduced.p.values * total
    grid = reduced.n.grid
    return PopulationState(Field(ni, grid), Field(total - ni, grid), reduced.time)


def error_norms(reduced_series: Sequence[ReducedFields],
                limit_series: Sequence[tuple[float, Field]]) -> tuple[float, float]:
    """Space-time L2 distances (|p - p0|, |m|) between a system run and the
    scalar limit run.

    Both series must live on the identical grid with identical output times;
    mismatches are rejected rather than interpolated.
    """
    if len(reduced_series) != len(limit_series):
        raise ValueError(
            f"series lengths differ: {len(reduced_series)} vs {len(limit_series)}"
        )
    if not reduced_series:
        raise ValueError("empty series")
    grid = reduced_series[0].n.grid
    diffs, residuals = [], []
    for red, (t_lim, p_lim) in zip(reduced_series, limit_series):
        if red.n.grid != grid or p_lim.grid != grid:
            raise ValueError("series grids differ; no interpolation permitted")
        if abs(red.time - t_lim) > 1e-9 * max(1.0, abs(t_lim)):
            raise ValueError(
                f"output times differ ({red.time} vs {t_lim}); no interpolation permitted"
            )
        if red.m is None:
            raise ValueError("manifold residual undefined for this model variant")
        diffs.append((t_lim, Field(red.p.values - p_lim.values, grid)))
        residuals.append((t_lim, red.m))
    t_end = diffs[-1][0]
    return l2_spacetime(diffs, t_end), l2_spacetime(residuals, t_end)
