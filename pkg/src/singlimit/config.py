"""Flat `section.key = value` run configuration with validated defaults.

Every key has a default; an empty file reproduces the reference traveling-
wave setup.  Values are floats (a ratio like 10/9 is accepted and stored as
the parsed double), integers, booleans, enum words, or comma-separated
lists.  Unknown keys, duplicate keys and invariant violations are rejected
with the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .experiments import InitialDataSpec
from .model import ScaledModel, Variant, WolbachiaParams
from .solver import BoundaryCondition, Grid1D, SolverConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "default_config", "format_config"]


class ConfigError(ValueError):
    """Configuration text violated the schema or an invariant."""


# key -> (default display text, ours?) ; keys not marked ours mirror the
# reference experiment values.
_SCHEMA: dict[str, tuple[str, bool]] = {
    "model.fu": ("1.12", False),
    "model.du": ("0.27", False),
    "model.delta": ("10/9", False),
    "model.sf": ("0.1", False),
    "model.sh": ("0.8", False),
    "model.sigma": ("1", False),
    "model.mu": ("0", False),
    "model.variant": ("perfect", False),
    "model.epsilon": ("0.1", True),
    "model.clip_logistic": ("auto", True),
    "grid.xmin": ("-15", False),
    "grid.xmax": ("15", False),
    "grid.dx": ("0.05", False),
    "time.dt": ("0.005", False),
    "time.t_end": ("25", True),
    "time.output_every": ("200", True),
    "time.clip_negatives": ("true", True),
    "diffusion.a": ("0.1", False),
    "diffusion.bc": ("neumann", True),
    "init.amplitude": ("0.4", True),
    "init.radius": ("1.6", True),
    "init.smoothing": ("0.5", True),
    "experiment.epsilons": ("0.3, 0.1, 0.05, 0.02", True),
    "experiment.speed_level": ("0.5", True),
    "experiment.speed_window": ("75, 125", True),
}


def _parse_float(text: str, key: str, line: int) -> float:
    text = text.strip()
    try:
        if "/" in text:
            return float(Fraction(text))
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"line {line}: {key}: not a number: {text!r}") from None


def _parse_int(text: str, key: str, line: int) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"line {line}: {key}: not an integer: {text!r}") from None


def _parse_bool(text: str, key: str, line: int) -> bool:
    word = text.strip().lower()
    if word in ("true", "yes", "on", "1"):
        return True
    if word in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"line {line}: {key}: not a boolean: {text!r}")


def _parse_floats(text: str, key: str, line: int) -> tuple[float, ...]:
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    if not parts:
        raise ConfigError(f"line {line}: {key}: empty list")
    return tuple(_parse_float(p, key, line) for p in parts)


def _parse_word(text: str, key: str, line: int, allowed: tuple[str, ...]) -> str:
    word = text.strip().lower()
    if word not in allowed:
        raise ConfigError(
            f"line {line}: {key}: expected one of {', '.join(allowed)}; got {text!r}"
        )
    return word


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; one field per config key."""

    fu: float = 1.12
    du: float = 0.27
    delta: float = 10.0 / 9.0
    sf: float = 0.1
    sh: float = 0.8
    sigma: float = 1.0
    mu: float = 0.0
    variant: Variant = Variant.PERFECT
    epsilon: float = 0.1
    clip_logistic: bool | None = None
    xmin: float = -15.0
    xmax: float = 15.0
    dx: float = 0.05
    dt: float = 0.005
    t_end: float = 25.0
    output_every: int = 200
    clip_negatives: bool = True
    a: float | tuple[float, ...] = 0.1
    bc: BoundaryCondition = BoundaryCondition.NEUMANN
    amplitude: float = 0.4
    radius: float = 1.6
    smoothing: float = 0.5
    epsilons: tuple[float, ...] = (0.3, 0.1, 0.05, 0.02)
    speed_level: float = 0.5
    speed_window: tuple[float, float] = (75.0, 125.0)
    raw: dict = field(default_factory=dict, compare=False)

    def params(self) -> WolbachiaParams:
        return WolbachiaParams(self.fu, self.du, self.delta, self.sf, self.sh,
                               self.sigma, self.mu)

    def scaled_model(self, epsilon: float | None = None,
                     variant: Variant | None = None) -> ScaledModel:
        return ScaledModel(self.params(),
                           self.epsilon if epsilon is None else epsilon,
                           self.variant if variant is None else variant,
                           self.clip_logistic)

    def grid(self) -> Grid1D:
        return Grid1D.from_spacing(self.xmin, self.xmax, self.dx)

    def diffusivity(self):
        if isinstance(self.a, tuple):
            grid = self.grid()
            knots_x = np.array([x for x, _ in _pairs(self.a)])
            knots_v = np.array([v for _, v in _pairs(self.a)])
            return np.interp(grid.x, knots_x, knots_v)
        return self.a

    def solver_config(self, t_end: float | None = None) -> SolverConfig:
        return SolverConfig(self.grid(), self.dt,
                            self.t_end if t_end is None else t_end,
                            self.diffusivity(), self.output_every,
                            self.clip_negatives, self.bc)

    def init_spec(self) -> InitialDataSpec:
        return InitialDataSpec(self.amplitude, self.radius, self.smoothing)


def _pairs(flat: tuple[float, ...]):
    return list(zip(flat[::2], flat[1::2]))


def default_config() -> RunConfig:
    return RunConfig()


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate config text; omitted keys take defaults."""
    values: dict[str, object] = {}
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'section.key = value': {line!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} (first set on line {raw[key][1]})"
            )
        if not value:
            raise ConfigError(f"line {lineno}: {key}: empty value")
        raw[key] = (value, lineno)

    def line_of(key: str) -> int:
        return raw[key][1] if key in raw else 0

    cfg = default_config()
    for key, (value, lineno) in raw.items():
        name = key.split(".", 1)[1]
        if key == "model.variant":
            word = _parse_word(value, key, lineno,
                               ("perfect", "imperfect", "alternative"))
            values["variant"] = Variant(word)
        elif key == "model.clip_logistic":
            if value.strip().lower() == "auto":
                values["clip_logistic"] = None
            else:
                values["clip_logistic"] = _parse_bool(value, key, lineno)
        elif key == "diffusion.bc":
            values["bc"] = BoundaryCondition(
                _parse_word(value, key, lineno, ("neumann", "dirichlet")))
        elif key == "diffusion.a":
            if "," in value or ":" in value:
                pairs = []
                for part in value.split(","):
                    if ":" not in part:
                        raise ConfigError(
                            f"line {lineno}: {key}: profile entries are x:value pairs"
                        )
                    xs, vs = part.split(":", 1)
                    pairs.append((_parse_float(xs, key, lineno),
                                  _parse_float(vs, key, lineno)))
                if any(b[0] <= a[0] for a, b in zip(pairs, pairs[1:])):
                    raise ConfigError(f"line {lineno}: {key}: profile x must increase")
                values["a"] = tuple(v for pair in pairs for v in pair)
            else:
                values["a"] = _parse_float(value, key, lineno)
        elif key == "time.output_every":
            values["output_every"] = _parse_int(value, key, lineno)
        elif key == "time.clip_negatives":
            values["clip_negatives"] = _parse_bool(value, key, lineno)
        elif key == "experiment.epsilons":
            values["epsilons"] = _parse_floats(value, key, lineno)
        elif key == "experiment.speed_window":
            window = _parse_floats(value, key, lineno)
            if len(window) != 2:
                raise ConfigError(f"line {lineno}: {key}: need exactly two times")
            values["speed_window"] = (window[0], window[1])
        else:
            values[name] = _parse_float(value, key, lineno)

    cfg = replace(cfg, **values, raw={k: v[0] for k, v in raw.items()})
    _validate(cfg, line_of)
    return cfg


def _validate(cfg: RunConfig, line_of) -> None:
    def fail(key: str, message: str):
        loc = line_of(key)
        where = f"line {loc}: " if loc else ""
        raise ConfigError(f"{where}{key}: {message}")

    def expect(key: str, ok: bool, message: str):
        if not ok:
            fail(key, message)

    expect("model.fu", cfg.fu > 0, "fu must be positive")
    expect("model.du", cfg.du > 0, "du must be positive")
    expect("model.delta", cfg.delta >= 1, "delta must be >= 1")
    expect("model.sf", 0 <= cfg.sf < 1, "sf must lie in [0, 1)")
    expect("model.sh", 0 < cfg.sh <= 1, "sh must lie in (0, 1]")
    expect("model.sf", cfg.sf < cfg.sh, f"requires sf < sh (sh = {cfg.sh:g})")
    expect("model.sigma", cfg.sigma > 0, "sigma must be positive")
    expect("model.mu", 0 <= cfg.mu < 1, "mu must lie in [0, 1)")
    if cfg.variant is not Variant.IMPERFECT and cfg.mu != 0:
        fail("model.mu", f"variant {cfg.variant.value!r} forces mu = 0")
    expect("model.epsilon", cfg.epsilon > 0, "epsilon must be positive")
    expect("grid.xmax", cfg.xmax > cfg.xmin, "xmax must exceed xmin")
    expect("grid.dx", cfg.dx > 0, "dx must be positive")
    expect("time.dt", cfg.dt > 0, "dt must be positive")
    expect("time.t_end", cfg.t_end >= cfg.dt, "t_end must cover at least one step")
    expect("time.output_every", cfg.output_every >= 1, "output_every must be >= 1")
    if isinstance(cfg.a, tuple):
        expect("diffusion.a", all(v > 0 for _, v in _pairs(cfg.a)),
               "diffusivity must be strictly positive")
    else:
        expect("diffusion.a", cfg.a > 0, "diffusivity must be strictly positive")
    expect("init.amplitude", 0 < cfg.amplitude < 1, "amplitude must lie in (0, 1)")
    expect("init.radius", cfg.radius > 0, "radius must be positive")
    expect("init.smoothing", cfg.smoothing >= 0, "smoothing must be >= 0")
    half = min(-cfg.xmin, cfg.xmax)
    expect("init.radius", cfg.radius + cfg.smoothing < half,
           "bump support must sit strictly inside the domain")
    eps = cfg.epsilons
    expect("experiment.epsilons", all(e > 0 for e in eps), "eps values must be positive")
    expect("experiment.epsilons", all(b < a for a, b in zip(eps, eps[1:])),
           "eps ladder must be strictly decreasing")
    expect("experiment.speed_level", 0 < cfg.speed_level < 1,
           "speed_level must lie in (0, 1)")
    expect("experiment.speed_window", 0 <= cfg.speed_window[0] < cfg.speed_window[1],
           "speed_window must be an increasing pair of times")

    # cross-checks by constructing the domain objects
    try:
        cfg.grid()
    except ValueError as exc:
        fail("grid.dx", str(exc))
    try:
        cfg.params()
        cfg.scaled_model()
        cfg.init_spec()
        cfg.solver_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def format_config(cfg: RunConfig) -> str:
    """Effective configuration as config text; '# choice' marks values that
    are defaults of this tool rather than reference-setup constants."""
    lines = []
    for key, (default_text, ours) in _SCHEMA.items():
        text = cfg.raw.get(key, default_text)
        mark = "  # choice" if ours else ""
        lines.append(f"{key} = {text}{mark}")
    return "\n".join(lines) + "\n"
