"""Reproducible experiments: initial data, eps sweeps, wave speeds, extinction.

The initial condition is a local introduction into a resident population at
equilibrium: a plateau bump of frequency p_init (flat top, linear ramps,
compact support), converted to densities through phi = p_init/(1 - p_init)
so that the reduced population starts exactly on h(0) at every node, with
bounds that do not depend on eps.

The convergence sweep integrates the scalar limit equation once and the
two-population system for each eps on the shared grid and cadence, then
tabulates the space-time errors |p_eps - p0| and |m| per eps.  Wave speeds
are least-squares slopes of tracked level-crossing positions.
"""

from __future__ import annotations

import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .model import (
    ScaledModel,
    Variant,
    WolbachiaParams,
    check_assumptions,
    limit_reaction,
    slow_manifold,
    slow_manifold_max,
)
from .reduction import error_norms, to_reduced
from .solver import Field, Grid1D, PopulationState, SolverConfig, SolverError, run_scalar, run_system

__all__ = [
    "InitialDataSpec",
    "ConvergenceReport",
    "Verdict",
    "make_initial_data",
    "run_convergence_sweep",
    "track_front",
    "estimate_wave_speed",
    "boundary_drift",
    "extinction_check",
    "sweep_worker_count",
]

EXTINCT_BELOW = 0.1
INVADED_ABOVE = 0.9


@dataclass(frozen=True)
class InitialDataSpec:
    """Plateau bump of frequency centered at x = 0.

    amplitude  peak frequency on the plateau, in (0, 1)
    radius     half-width of the flat top
    smoothing  width of the linear ramp down to zero on each side

    The defaults sit just above the scalar equation's invasion threshold:
    the limit equation invades from this bump while the two-population
    system at eps = 0.6 collapses, reproducing the qualitative gap between
    the system and its reduction.
    """

    amplitude: float = 0.4
    radius: float = 1.6
    smoothing: float = 0.5
    shape: str = "plateau_bump"

    def __post_init__(self):
        if self.shape != "plateau_bump":
            raise ValueError(f"unknown initial-data shape {self.shape!r}")
        if not 0.0 < self.amplitude < 1.0:
            raise ValueError("amplitude must lie strictly inside (0, 1)")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")
        if self.smoothing < 0.0:
            raise ValueError("smoothing must be non-negative")

    def profile(self, x: np.ndarray) -> np.ndarray:
        r = np.abs(x)
        if self.smoothing == 0.0:
            return np.where(r <= self.radius, self.amplitude, 0.0)
        ramp = 1.0 - (r - self.radius) / self.smoothing
        return self.amplitude * np.clip(np.where(r <= self.radius, 1.0, ramp), 0.0, 1.0)


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-eps error norms and front speeds from one sweep."""

    epsilons: tuple[float, ...]
    err_p: tuple[float, ...]
    err_m: tuple[float, ...]
    speeds: tuple[float, ...]
    limit_speed: float
    runtimes: tuple[float, ...]

    def __post_init__(self):
        k = len(self.epsilons)
        if not (len(self.err_p) == len(self.err_m) == len(self.speeds) == len(self.runtimes) == k):
            raise ValueError("report columns must align with the eps ladder")
        if np.any(np.diff(self.epsilons) >= 0):
            raise ValueError("eps ladder must be strictly decreasing")


class Verdict(Enum):
    INVADED = "invaded"
    EXTINCT = "extinct"
    UNDECIDED = "undecided"


def make_initial_data(model: ScaledModel, spec: InitialDataSpec,
                      grid: Grid1D) -> tuple[PopulationState, Field]:
    """Initial densities for a local introduction, plus the frequency bump.

    Outside the bump the state is the resident-only equilibrium; inside, the
    total is partitioned so the derived frequency equals the bump exactly and
    the reduced population is spatially uniform.
    """
    half_width = min(-grid.xmin, grid.xmax)
    if spec.radius + spec.smoothing >= half_width:
        raise ValueError("bump support must sit strictly inside the domain")
    p_init = spec.profile(grid.x)
    prm = model.params

    if model.variant is Variant.ALTERNATIVE:
        if prm.du >= prm.fu:
            raise ValueError("resident equilibrium needs du < fu")
        total = np.full(grid.nx, (1.0 - prm.du / prm.fu) / (model.epsilon * prm.sigma))
        ni = p_init * total
        nu = total - ni
    else:
        resident = model.carrying_total - slow_manifold(model, 0.0)
        if resident <= 0.0:
            raise ValueError(
                f"eps={model.epsilon:g} exceeds the resident-equilibrium range eps < fu/du"
            )
        phi = p_init / (1.0 - p_init)
        nu = resident / (1.0 + phi)
        ni = phi * nu
    state = PopulationState(Field(ni, grid), Field(nu, grid), 0.0)
    return state, Field(p_init, grid)


# ---------------------------------------------------------------------------
# wave-speed estimation


def track_front(series: Sequence[tuple[float, Field]], level: float = 0.5,
                window: tuple[float, float] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Rightmost positions where the profile crosses `level`, per snapshot.

    Crossings are located by linear interpolation between adjacent nodes.
    Raises when a snapshot in the window has no crossing or its crossing
    sits within 2*dx of a boundary, naming the first bad snapshot.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    times, positions = [], []
    for k, (t, field) in enumerate(series):
        if window is not None and not (window[0] - 1e-9 <= t <= window[1] + 1e-9):
            continue
        v = field.values
        signs = (v[:-1] - level) * (v[1:] - level)
        hits = np.nonzero(signs <= 0.0)[0]
        hits = hits[(v[hits] != level) | (v[hits + 1] != level)]
        if len(hits) == 0:
            raise ValueError(f"snapshot {k} (t={t:g}) has no {level:g}-level crossing")
        i = int(hits[-1])
        x = field.grid.x
        if v[i + 1] == v[i]:
            pos = x[i]
        else:
            pos = x[i] + (level - v[i]) / (v[i + 1] - v[i]) * field.grid.dx
        dx = field.grid.dx
        if pos < field.grid.xmin + 2.0 * dx or pos > field.grid.xmax - 2.0 * dx:
            raise ValueError(
                f"snapshot {k} (t={t:g}): crossing at x={pos:.4g} is within 2*dx of a boundary"
            )
        times.append(t)
        positions.append(pos)
    return np.array(times), np.array(positions)


def estimate_wave_speed(series: Sequence[tuple[float, Field]],
                        window: tuple[float, float],
                        level: float = 0.5) -> float:
    """Front speed: least-squares slope of crossing position against time
    over the window."""
    times, positions = track_front(series, level, window)
    if len(times) < 2:
        raise ValueError("window contains fewer than two usable snapshots")
    return float(np.polyfit(times, positions, 1)[0])


def boundary_drift(series: Sequence[tuple[float, Field]],
                   window: tuple[float, float] | None = None) -> float:
    """Largest deviation of either endpoint value from its initial value,
    over the (windowed) series.  Diagnostic for domain-truncation effects."""
    first = series[0][1].values
    left0, right0 = first[0], first[-1]
    drift = 0.0
    for t, field in series:
        if window is not None and not (window[0] - 1e-9 <= t <= window[1] + 1e-9):
            continue
        v = field.values
        drift = max(drift, abs(v[0] - left0), abs(v[-1] - right0))
    return drift


# ---------------------------------------------------------------------------
# convergence sweep


def sweep_worker_count() -> int:
    """Worker processes for per-eps runs; SINGLIMIT_THREADS caps it
    (unset or 0 means sequential)."""
    raw = os.environ.get("SINGLIMIT_THREADS", "0").strip()
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"SINGLIMIT_THREADS must be an integer, got {raw!r}") from exc
    return max(0, n)


def _scalar_series(model: ScaledModel, p_init: Field, config: SolverConfig):
    return run_scalar(lambda v: limit_reaction(model, v), p_init, config)


def _run_one_eps(model: ScaledModel, spec: InitialDataSpec, config: SolverConfig,
                 limit_series, speed_window, level):
    started = _time.perf_counter()
    state0, _ = make_initial_data(model, spec, config.grid)
    try:
        series = run_system(model, state0, config)
    except SolverError as exc:
        raise SolverError(f"eps={model.epsilon:g}: {exc}") from exc
    reduced = [to_reduced(model, s) for s in series]
    err_p, err_m = error_norms(reduced, limit_series)
    speed = math.nan
    if speed_window is not None:
        p_series = [(r.time, r.p) for r in reduced]
        speed = estimate_wave_speed(p_series, speed_window, level)
    return err_p, err_m, speed, _time.perf_counter() - started, reduced


def run_convergence_sweep(params: WolbachiaParams, variant: Variant,
                          epsilons: Sequence[float], spec: InitialDataSpec,
                          config: SolverConfig, *,
                          speed_window: tuple[float, float] | None = None,
                          speed_level: float = 0.5,
                          series_sink: dict | None = None) -> ConvergenceReport:
    """Solve the limit equation once and the system per eps; tabulate errors.

    The eps ladder must be strictly decreasing and admissible: below the
    range where the resident state exists and the structural assumptions all
    audit clean.  When series_sink is given it receives the limit series
    under "limit" and each reduced system series under its eps.
    """
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) == 0:
        raise ValueError("empty eps ladder")
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("eps ladder must be strictly decreasing")

    models = [ScaledModel(params, eps, variant) for eps in epsilons]
    eps_cap = 1.0 / slow_manifold_max(models[0])
    for model in models:
        if model.epsilon >= eps_cap:
            raise ValueError(
                f"eps={model.epsilon:g} is outside the admissible range (< {eps_cap:.4g})"
            )
        report = check_assumptions(model, samples=60)
        if not report.passed:
            failed = ", ".join(c.name for c in report.checks if not c.passed)
            raise ValueError(f"eps={model.epsilon:g}: assumption audit failed ({failed})")

    _, p_init = make_initial_data(models[0], spec, config.grid)
    limit_series = _scalar_series(models[0], p_init, config)
    limit_speed = math.nan
    if speed_window is not None:
        limit_speed = estimate_wave_speed(limit_series, speed_window, speed_level)

    workers = min(sweep_worker_count(), len(models))
    args = [(m, spec, config, limit_series, speed_window, speed_level) for m in models]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_eps_star, args))
    else:
        results = [_run_one_eps(*a) for a in args]

    if series_sink is not None:
        series_sink["limit"] = limit_series
        for eps, res in zip(epsilons, results):
            series_sink[eps] = res[4]

    return ConvergenceReport(
        epsilons=tuple(epsilons),
        err_p=tuple(r[0] for r in results),
        err_m=tuple(r[1] for r in results),
        speeds=tuple(r[2] for r in results),
        limit_speed=limit_speed,
        runtimes=tuple(r[3] for r in results),
    )


def _run_one_eps_star(args):
    return _run_one_eps(*args)


# ---------------------------------------------------------------------------
# extinction check


def extinction_check(model: ScaledModel, spec: InitialDataSpec, config: SolverConfig,
                     equation: str = "system") -> Verdict:
    """Qualitative fate of the introduction at t_end.

    Extinct when the frequency peaks below 0.1 everywhere; invaded when it
    exceeds 0.9 across the initial bump support; undecided otherwise.
    """
    state0, p_init = make_initial_data(model, spec, config.grid)
    if equation == "system":
        final = to_reduced(model, run_system(model, state0, config)[-1]).p.values
    elif equation == "limit":
        final = run_scalar(lambda v: limit_reaction(model, v), p_init, config)[-1][1].values
    else:
        raise ValueError(f"equation must be 'system' or 'limit', got {equation!r}")
    if final.max() < EXTINCT_BELOW:
        return Verdict.EXTINCT
    support = p_init.values > 0.0
    if final[support].min() > INVADED_ABOVE:
        return Verdict.INVADED
    return Verdict.UNDECIDED
