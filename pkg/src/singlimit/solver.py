"""1-D semi-implicit finite differences on a uniform node-centered grid.

Each time step treats the reaction explicitly at the beginning-of-step state
and the diffusion implicitly:

    u* = u + dt * reaction(u)
    (I - dt * L) u_new = u*

where L is the conservative second-order stencil for d/dx (a(x) du/dx) with
arithmetic-mean face diffusivities.  The implicit matrix is tridiagonal,
strictly diagonally dominant, and constant throughout a run, so the system
is assembled once; the hot path solves it with LAPACK's banded solver while
`tridiagonal_solve` provides the plain Thomas elimination for verification
and small systems.

Homogeneous Neumann boundaries (zero flux through the boundary faces) are
the default; they preserve constants and spatially uniform equilibria.  A
Dirichlet mode that pins the boundary values is available for sensitivity
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .model import NEGATIVE_TOL, ScaledModel, reaction_rates

__all__ = [
    "Grid1D",
    "Field",
    "PopulationState",
    "BoundaryCondition",
    "SolverConfig",
    "TridiagonalSystem",
    "SolverError",
    "assemble_diffusion",
    "tridiagonal_solve",
    "step_system",
    "step_scalar",
    "run_system",
    "run_scalar",
    "l2_space",
    "l2_spacetime",
    "gradient_l2",
]


class SolverError(RuntimeError):
    """Time integration failed; carries the offending step index."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of nx nodes spanning [xmin, xmax], endpoints included."""

    xmin: float
    xmax: float
    nx: int

    def __post_init__(self):
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax)):
            raise ValueError("grid bounds must be finite")
        if self.xmax <= self.xmin:
            raise ValueError("xmax must exceed xmin")
        if self.nx < 3:
            raise ValueError("need at least 3 grid nodes")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / (self.nx - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.nx)

    @classmethod
    def from_spacing(cls, xmin: float, xmax: float, dx: float) -> "Grid1D":
        """Grid with the requested spacing; dx must tile the domain exactly."""
        if dx <= 0:
            raise ValueError("dx must be positive")
        intervals = (xmax - xmin) / dx
        n = round(intervals)
        if n < 2 or abs(intervals - n) > 1e-9 * max(1.0, abs(intervals)):
            raise ValueError(f"dx={dx} does not tile [{xmin}, {xmax}] evenly")
        return cls(xmin, xmax, n + 1)


@dataclass(frozen=True)
class Field:
    """One real value per grid node."""

    values: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.nx,):
            raise ValueError(
                f"field has {values.shape} values for a grid of {self.grid.nx} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: float, grid: Grid1D) -> "Field":
        return cls(np.full(grid.nx, float(value)), grid)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], grid: Grid1D) -> "Field":
        return cls(np.asarray(fn(grid.x), dtype=float), grid)


@dataclass(frozen=True)
class PopulationState:
    """Infected and uninfected density fields at one time."""

    ni: Field
    nu: Field
    time: float = 0.0

    def __post_init__(self):
        if self.ni.grid != self.nu.grid:
            raise ValueError("population fields must share one grid")
        low = min(self.ni.values.min(), self.nu.values.min())
        if low < -NEGATIVE_TOL:
            raise ValueError(f"negative density {low:.3e} beyond round-off")

    @property
    def grid(self) -> Grid1D:
        return self.ni.grid


class BoundaryCondition(Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class SolverConfig:
    """Grid, time step, diffusivity profile and stepping options.

    diffusivity may be a constant, a callable sampled on the grid nodes, or
    an array of per-node values; it must stay strictly positive.
    """

    grid: Grid1D
    dt: float
    t_end: float
    diffusivity: float | Callable[[np.ndarray], np.ndarray] | Sequence[float] = 0.1
    output_every: int = 200
    clip_negatives: bool = True
    bc: BoundaryCondition = BoundaryCondition.NEUMANN

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must cover at least one step")
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError("t_end must be an integer number of steps")
        if int(self.output_every) != self.output_every or self.output_every < 1:
            raise ValueError("output_every must be a positive integer")
        a = self.diffusivity_values
        if a.min() <= 0.0:
            raise ValueError("diffusivity must be strictly positive everywhere")

    @cached_property
    def diffusivity_values(self) -> np.ndarray:
        if callable(self.diffusivity):
            a = np.asarray(self.diffusivity(self.grid.x), dtype=float)
        elif np.ndim(self.diffusivity) == 0:
            a = np.full(self.grid.nx, float(self.diffusivity))
        else:
            a = np.asarray(self.diffusivity, dtype=float)
        if a.shape != (self.grid.nx,):
            raise ValueError("diffusivity profile does not match the grid")
        if not np.all(np.isfinite(a)):
            raise ValueError("diffusivity contains non-finite values")
        return a

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)


@dataclass(frozen=True)
class TridiagonalSystem:
    """Tridiagonal linear system; lower/upper have one entry fewer than diag."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.lower) != n - 1 or len(self.upper) != n - 1 or len(self.rhs) != n:
            raise ValueError("inconsistent tridiagonal band lengths")

    def with_rhs(self, rhs: np.ndarray) -> "TridiagonalSystem":
        return TridiagonalSystem(self.lower, self.diag, self.upper, np.asarray(rhs, dtype=float))

    def is_diagonally_dominant(self) -> bool:
        n = len(self.diag)
        off = np.zeros(n)
        off[:-1] += np.abs(self.upper)
        off[1:] += np.abs(self.lower)
        return bool(np.all(np.abs(self.diag) >= off))

    def dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.upper, 1)
            + np.diag(self.lower, -1)
        )


def assemble_diffusion(config: SolverConfig) -> TridiagonalSystem:
    """Implicit-diffusion matrix I - dt*L as a tridiagonal template (rhs 0).

    Face diffusivities are arithmetic means of the neighbouring nodes.  Under
    Neumann boundaries the ghost faces carry zero flux, so a boundary row is
    1 + r*a_face on the diagonal with a single off-diagonal -r*a_face,
    r = dt/dx^2; row sums of L vanish and constants are invariant.  Under
    Dirichlet boundaries the first and last rows are identity rows and the
    stepper pins their rhs to the pre-step boundary values.
    """
    a = config.diffusivity_values
    nx = config.grid.nx
    r = config.dt / config.grid.dx ** 2
    face = 0.5 * (a[:-1] + a[1:]) * r  # nx-1 faces

    lower = -face.copy()
    upper = -face.copy()
    diag = np.ones(nx)
    diag[:-1] += face
    diag[1:] += face

    if config.bc is BoundaryCondition.DIRICHLET:
        diag[0] = 1.0
        diag[-1] = 1.0
        upper[0] = 0.0
        lower[-1] = 0.0
    return TridiagonalSystem(lower, diag, upper, np.zeros(nx))


def tridiagonal_solve(system: TridiagonalSystem) -> np.ndarray:
    """Solve by Thomas forward elimination / back substitution, O(n).

    A vanishing pivot raises SolverError; it cannot occur for diagonally
    dominant assemblies.
    """
    lower, diag, upper, rhs = system.lower, system.diag, system.upper, system.rhs
    n = len(diag)
    scratch = np.empty(n - 1)
    out = np.empty(n)

    pivot = diag[0]
    if pivot == 0.0:
        raise SolverError("zero pivot in tridiagonal elimination at row 0")
    scratch[0] = upper[0] / pivot
    out[0] = rhs[0] / pivot
    for i in range(1, n):
        pivot = diag[i] - lower[i - 1] * scratch[i - 1]
        if pivot == 0.0:
            raise SolverError(f"zero pivot in tridiagonal elimination at row {i}")
        if i < n - 1:
            scratch[i] = upper[i] / pivot
        out[i] = (rhs[i] - lower[i - 1] * out[i - 1]) / pivot
    for i in range(n - 2, -1, -1):
        out[i] -= scratch[i] * out[i + 1]
    return out


class _ImplicitDiffusion:
    """Prefactored banded form of the assembled system, solved per step."""

    def __init__(self, config: SolverConfig):
        self.config = config
        self.system = assemble_diffusion(config)
        nx = config.grid.nx
        ab = np.zeros((3, nx))
        ab[0, 1:] = self.system.upper
        ab[1, :] = self.system.diag
        ab[2, :-1] = self.system.lower
        self._ab = ab

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), self._ab, rhs, check_finite=False)


def _advance(op: _ImplicitDiffusion, values: np.ndarray, rate: np.ndarray,
             boundary_pin: np.ndarray | None) -> np.ndarray:
    star = values + op.config.dt * rate
    if boundary_pin is not None:
        star[0], star[-1] = boundary_pin
    return op.solve(star)


def _boundary_pin(config: SolverConfig, values: np.ndarray):
    if config.bc is BoundaryCondition.DIRICHLET:
        return values[0], values[-1]
    return None


def _settle_density(values: np.ndarray, config: SolverConfig, step: int, name: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise SolverError(f"{name} became non-finite", step)
    if config.clip_negatives:
        low = values.min()
        if low < -NEGATIVE_TOL:
            raise SolverError(f"{name} fell to {low:.3e}, beyond round-off", step)
        if low < 0.0:
            values = np.where(values < 0.0, 0.0, values)
    return values


def _step_fields(model: ScaledModel, ni: np.ndarray, nu: np.ndarray,
                 op: _ImplicitDiffusion, step: int) -> tuple[np.ndarray, np.ndarray]:
    config = op.config
    rate_i, rate_u = reaction_rates(model, ni, nu)
    new_i = _advance(op, ni, rate_i, _boundary_pin(config, ni))
    new_u = _advance(op, nu, rate_u, _boundary_pin(config, nu))
    new_i = _settle_density(new_i, config, step, "infected density")
    new_u = _settle_density(new_u, config, step, "uninfected density")
    return new_i, new_u


def step_system(model: ScaledModel, state: PopulationState, config: SolverConfig) -> PopulationState:
    """One semi-implicit step of the two-population system."""
    op = _ImplicitDiffusion(config)
    ni, nu = _step_fields(model, state.ni.values, state.nu.values, op, 0)
    grid = config.grid
    return PopulationState(Field(ni, grid), Field(nu, grid), state.time + config.dt)


FREQUENCY_TOL = 1e-12


def _check_frequency_box(values: np.ndarray) -> None:
    if values.min() < -FREQUENCY_TOL or values.max() > 1.0 + FREQUENCY_TOL:
        raise ValueError("frequency field must lie in [0, 1] up to round-off")


def _step_frequency(reaction, values: np.ndarray, op: _ImplicitDiffusion, step: int) -> np.ndarray:
    new = _advance(op, values, np.asarray(reaction(values), dtype=float),
                   _boundary_pin(op.config, values))
    if not np.all(np.isfinite(new)):
        raise SolverError("frequency became non-finite", step)
    low, high = new.min(), new.max()
    if low < -FREQUENCY_TOL or high > 1.0 + FREQUENCY_TOL:
        raise SolverError(
            f"frequency left [0, 1] by more than round-off: [{low:.6e}, {high:.6e}]", step
        )
    return np.clip(new, 0.0, 1.0)


def step_scalar(reaction: Callable[[np.ndarray], np.ndarray], p: Field,
                config: SolverConfig) -> Field:
    """One semi-implicit step of the scalar frequency equation.

    Round-off excursions of p outside [0, 1] (up to 1e-12) are clamped;
    larger excursions abort the step.
    """
    _check_frequency_box(p.values)
    op = _ImplicitDiffusion(config)
    return Field(_step_frequency(reaction, p.values, op, 0), config.grid)


def _output_steps(config: SolverConfig) -> set[int]:
    steps = config.n_steps
    wanted = set(range(0, steps + 1, config.output_every))
    wanted.add(steps)
    return wanted


def run_system(model: ScaledModel, state: PopulationState,
               config: SolverConfig) -> list[PopulationState]:
    """Integrate the two-population system to t_end.

    Returns snapshots at step 0, every output_every steps, and the final
    step, with times measured from the initial state's time.
    """
    if state.grid != config.grid:
        raise ValueError("initial state lives on a different grid")
    op = _ImplicitDiffusion(config)
    grid = config.grid
    t0 = state.time
    wanted = _output_steps(config)
    ni, nu = state.ni.values.copy(), state.nu.values.copy()
    out = [PopulationState(Field(ni, grid), Field(nu, grid), t0)]
    for step in range(1, config.n_steps + 1):
        try:
            ni, nu = _step_fields(model, ni, nu, op, step)
        except ValueError as exc:  # rejected state, e.g. runaway negativity
            raise SolverError(str(exc), step) from exc
        if step in wanted:
            out.append(PopulationState(Field(ni, grid), Field(nu, grid), t0 + step * config.dt))
    return out


def run_scalar(reaction: Callable[[np.ndarray], np.ndarray], p0: Field,
               config: SolverConfig) -> list[tuple[float, Field]]:
    """Integrate the scalar frequency equation to t_end; snapshot cadence as
    in run_system.  Returns (time, field) pairs."""
    if p0.grid != config.grid:
        raise ValueError("initial field lives on a different grid")
    _check_frequency_box(p0.values)
    op = _ImplicitDiffusion(config)
    wanted = _output_steps(config)
    values = p0.values.copy()
    out = [(0.0, Field(values, config.grid))]
    for step in range(1, config.n_steps + 1):
        values = _step_frequency(reaction, values, op, step)
        if step in wanted:
            out.append((step * config.dt, Field(values, config.grid)))
    return out


# ---------------------------------------------------------------------------
# discrete norms


def l2_space(field: Field) -> float:
    """Composite-trapezoid approximation of the spatial L2 norm."""
    sq = field.values ** 2
    dx = field.grid.dx
    return math.sqrt(dx * (sq.sum() - 0.5 * (sq[0] + sq[-1])))


def gradient_l2(field: Field) -> float:
    """Spatial L2 norm of the finite-difference gradient.

    Informational diagnostic only: gradient norms carry no quantitative
    convergence claim and are never asserted against.
    """
    return l2_space(Field(np.gradient(field.values, field.grid.dx), field.grid))


def l2_spacetime(series: Sequence[tuple[float, Field]], t_end: float) -> float:
    """Rectangle rule in time over squared spatial norms, then sqrt.

    Rectangles take their value at the right endpoint, so the quadrature
    samples (0, t_end]: the initial snapshot anchors the first interval but
    does not contribute its own value.  (With left endpoints, an initial
    layer shorter than the output cadence would freeze the t = 0 norm into
    the result forever.)  The series must hold at least two time-ordered
    snapshots starting at 0 and ending at t_end.
    """
    if len(series) < 2:
        raise ValueError("need at least two snapshots to integrate in time")
    times = np.array([t for t, _ in series], dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must be strictly increasing")
    tol = 1e-9 * max(1.0, abs(t_end))
    if abs(times[0]) > tol or abs(times[-1] - t_end) > tol:
        raise ValueError(f"series must cover [0, {t_end}]")
    squares = np.array([l2_space(f) ** 2 for _, f in series])
    return math.sqrt(float(np.sum(np.diff(times) * squares[1:])))
