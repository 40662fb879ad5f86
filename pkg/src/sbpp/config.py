"""Experiment configuration: flat ``key = value`` files plus CLI overrides.

Arrays are comma-separated; torus seed points are semicolon-separated
comma-triplets, e.g. ``seed_points = 1.57,1.57,1.57; 4.71,4.71,4.71``.
Fractions of the period may be written as plain numbers in [0, L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ParameterError
from .nehari import SystemParams
from .solver import SolverOptions

__all__ = ["ExperimentConfig", "parse_config_file", "apply_overrides", "DEFAULT_CONFIG"]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ExperimentConfig:
    p: float = 5.0
    a: float = 0.25
    period_length: float = TWO_PI
    n_per_axis: int = 64
    epsilon_list: tuple[float, ...] = (0.4, 0.3, 0.2, 0.15)
    seed_points: tuple[tuple[float, float, float], ...] = ()
    output_dir: str = "out"
    rng_seed: int = 0
    max_iters: int = 2000
    grad_tol: float = 1e-6
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    cutoff_radius: float | None = None
    dealias: bool = False
    threads: int = 1
    plots: bool = True
    verbose: bool = False

    def __post_init__(self):
        if not self.seed_points:
            L = self.period_length
            # four pairwise well-separated points (face-centered pattern)
            object.__setattr__(self, "seed_points", (
                (0.25 * L, 0.25 * L, 0.25 * L),
                (0.75 * L, 0.75 * L, 0.25 * L),
                (0.75 * L, 0.25 * L, 0.75 * L),
                (0.25 * L, 0.75 * L, 0.75 * L),
            ))

    def validate(self, require_resolution: bool = True) -> "ExperimentConfig":
        if not (4.0 < self.p < 6.0):
            raise ParameterError(f"p must lie in (4, 6), got {self.p}")
        if not (0.0 < self.a < 0.5):
            raise ParameterError(f"a must lie in (0, 1/2), got {self.a}")
        if self.n_per_axis < 8 or self.n_per_axis % 2:
            raise ParameterError("n_per_axis must be even and >= 8")
        if not self.epsilon_list:
            raise ParameterError("epsilon_list must be nonempty")
        if any(b >= a for a, b in zip(self.epsilon_list, self.epsilon_list[1:])):
            raise ParameterError("epsilon_list must be strictly decreasing")
        h = self.period_length / self.n_per_axis
        for eps in self.epsilon_list:
            if eps <= 0:
                raise ParameterError(f"epsilon must be > 0, got {eps}")
            if require_resolution and eps < h:
                raise ParameterError(
                    f"epsilon {eps} below the grid spacing {h:.5g}: unresolvable"
                )
        if not self.seed_points:
            raise ParameterError("seed_points must be nonempty")
        if self.threads < 1:
            raise ParameterError("threads must be >= 1")
        self.solver_options()  # validates the solver block
        return self

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            step_init=self.step_init,
            backtrack_factor=self.backtrack_factor,
            armijo_c=self.armijo_c,
        )

    def system_params(self, epsilon: float) -> SystemParams:
        return SystemParams(p=self.p, a=self.a, epsilon=epsilon, dealias=self.dealias)


DEFAULT_CONFIG = ExperimentConfig()

_FLOAT_KEYS = {"p", "a", "period_length", "grad_tol", "step_init",
               "backtrack_factor", "armijo_c", "cutoff_radius"}
_INT_KEYS = {"n_per_axis", "rng_seed", "max_iters", "threads"}
_BOOL_KEYS = {"dealias", "plots", "verbose"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in {"1", "true", "yes", "on"}:
        return True
    if low in {"0", "false", "no", "off"}:
        return False
    raise ParameterError(f"not a boolean: {text!r}")


def _parse_seed_points(text: str):
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [float(x) for x in chunk.split(",")]
        if len(parts) != 3:
            raise ParameterError(f"seed point needs 3 coordinates: {chunk!r}")
        points.append(tuple(parts))
    return tuple(points)


def parse_config_file(path) -> dict:
    """Read flat key = value lines into an override dictionary."""
    overrides: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            overrides[key] = value
    return overrides


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Apply string-valued overrides (from file or CLI) onto a config."""
    kwargs = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in _FLOAT_KEYS:
            kwargs[key] = float(value)
        elif key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _BOOL_KEYS:
            kwargs[key] = value if isinstance(value, bool) else _parse_bool(value)
        elif key == "epsilon_list":
            if isinstance(value, (tuple, list)):
                kwargs[key] = tuple(float(x) for x in value)
            else:
                try:
                    kwargs[key] = tuple(
                        float(x) for x in value.split(",") if x.strip()
                    )
                except ValueError as exc:
                    raise ParameterError(f"bad epsilon_list: {value!r}") from exc
        elif key == "seed_points":
            if isinstance(value, (tuple, list)):
                kwargs[key] = tuple(tuple(float(c) for c in pt) for pt in value)
            else:
                kwargs[key] = _parse_seed_points(value)
        elif key == "output_dir":
            kwargs[key] = str(value)
        else:
            raise ParameterError(f"unknown configuration key: {key!r}")
    return replace(config, **kwargs)
