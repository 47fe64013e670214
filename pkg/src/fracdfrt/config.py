"""Experiment configuration: flat ``section.key = value`` text files.

Lines starting with ``#`` are comments. Lists are comma separated.
Example::

    system.preset = paper-B
    grid.n_points = 1001
    scan.n_values = 0.5, 0.999, 1.001, 1.5
    jump.delta = 1e-3
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .grid_model import Grid, ModelSystem, PotentialParams, check_theta, get_preset

OUT_ENV = "FRACDFRT_OUT"


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


# dotted key -> (field name, parser)
_KEYS = {
    "system.preset": ("preset", str),
    "system.a": ("a", float),
    "system.alpha": ("alpha", float),
    "system.b": ("b", float),
    "system.c": ("c", float),
    "system.d": ("d", float),
    "system.lambda": ("lam", float),
    "grid.x_min": ("x_min", float),
    "grid.x_max": ("x_max", float),
    "grid.n_points": ("n_points", int),
    "grid.order": ("order", int),
    "solver.theta": ("theta", float),
    "solver.tol": ("tol", float),
    "solver.seed": ("seed", int),
    "solver.dense_max": ("dense_max", int),
    "solver.mem_cap_gb": ("mem_cap_gb", float),
    "solver.how_many": ("how_many", int),
    "scan.theta_start": ("theta_start", float),
    "scan.theta_stop": ("theta_stop", float),
    "scan.theta_num": ("theta_num", int),
    "scan.n_values": ("n_values", _floats),
    "jump.J": ("J", int),
    "jump.delta": ("delta", float),
    "jump.region": ("region", float),
    "jump.plateau_deltas": ("plateau_deltas", _floats),
    "jump.plateau_tol": ("plateau_tol", float),
    "output.dir": ("out_dir", str),
}


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "paper-A"
    # None means "take from the preset"
    a: float | None = None
    alpha: float | None = None
    b: float | None = None
    c: float | None = None
    d: float | None = None
    lam: float | None = None
    x_min: float | None = None
    x_max: float | None = None
    n_points: int | None = None
    order: int = 4
    theta: float | None = None
    tol: float = 1e-10
    seed: int = 0
    dense_max: int = 3000
    mem_cap_gb: float = 3.0
    how_many: int = 12
    theta_start: float = 0.3
    theta_stop: float = 0.45
    theta_num: int = 7
    n_values: tuple[float, ...] = (0.5, 0.999, 1.0, 1.001, 1.5, 2.0)
    J: int = 1
    delta: float = 1e-3
    region: float = 0.2
    plateau_deltas: tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    plateau_tol: float = 0.02
    out_dir: str | None = None

    def __post_init__(self):
        p = get_preset(self.preset)  # raises for unknown presets
        bad = [N for N in self.n_values if not 0.0 <= N <= 2.0]
        if bad:
            raise ValueError(f"N-scan values must lie in [0, 2], got {bad}")
        check_theta(self.theta if self.theta is not None else p.theta)
        if not 0 < self.delta < 1:
            raise ValueError("jump.delta must be in (0, 1)")
        if self.theta_num < 2 or not self.theta_stop > self.theta_start:
            raise ValueError("theta scan needs theta_stop > theta_start and theta_num >= 2")

    def params(self) -> PotentialParams:
        base = get_preset(self.preset).params
        over = {k: getattr(self, k) for k in ("a", "alpha", "b", "c", "d") if getattr(self, k) is not None}
        return replace(base, **over)

    def grid(self) -> Grid:
        g = get_preset(self.preset).grid
        return Grid(self.x_min if self.x_min is not None else g.x_min,
                    self.x_max if self.x_max is not None else g.x_max,
                    self.n_points if self.n_points is not None else g.n_points)

    def system(self, theta: float | None = None) -> ModelSystem:
        p = get_preset(self.preset)
        th = theta if theta is not None else (self.theta if self.theta is not None else p.theta)
        lam = self.lam if self.lam is not None else p.lam
        return ModelSystem(self.grid(), self.params(), lam, th, self.order)

    @property
    def is_preset_system(self) -> bool:
        """True when nothing overrides the preset's physics or grid, so its targets apply."""
        return all(getattr(self, k) is None for k in ("a", "alpha", "b", "c", "d", "lam", "x_min", "x_max", "n_points")) \
            and self.order == 4 and self.theta in (None, get_preset(self.preset).theta)

    def thetas(self) -> list[float]:
        step = (self.theta_stop - self.theta_start) / (self.theta_num - 1)
        return [self.theta_start + k * step for k in range(self.theta_num)]

    def output_dir(self, override: str | None = None) -> Path:
        if override:
            return Path(override)
        if self.out_dir:
            return Path(self.out_dir)
        root = os.environ.get(OUT_ENV, "results")
        return Path(root) / self.preset

    def canonical_text(self) -> str:
        """Sorted key=value listing of every setting; its hash identifies the run.

        The output directory is excluded so relocating a run keeps the hash.
        """
        inv = {f: k for k, (f, _) in _KEYS.items()}
        lines = []
        for name, value in sorted(asdict(self).items(), key=lambda kv: inv[kv[0]]):
            if name == "out_dir" or value is None:
                continue
            if isinstance(value, tuple):
                value = ", ".join(repr(v) for v in value)
            lines.append(f"{inv[name]} = {value}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (t.strip() for t in line.split("=", 1))
        if key not in _KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}; known keys: {', '.join(sorted(_KEYS))}")
        name, conv = _KEYS[key]
        try:
            values[name] = conv(val)
        except ValueError as e:
            raise ValueError(f"line {lineno}: bad value for {key}: {e}") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())

