"""Solver configuration and experiment manifests."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

TASKS = ("norm-check", "wulff", "cheeger1", "cheeger2", "hk", "eigen", "sweep", "twisted", "qtilde")


@dataclass
class SolverConfig:
    """Knobs shared by the grid solvers.

    ``relaxation`` selects the perimeter used by the Cheeger solvers:
    ``"stencil"`` (graph-cut stencil, exact discrete coarea) or ``"forward"``
    (forward-difference tv_F with the polar-ball dual).
    """

    tol: float = 1e-6
    inner_tol: float = 1e-3
    max_outer: int = 50
    max_inner: int = 4000
    seed: int = 0
    refinement: int = 0
    threads: int = 1
    projection_mode: str = "exact"
    relaxation: str = "stencil"
    stencil_radius: int = 5
    levels: int = 64
    check_every: int = 25
    seeds: int = 8
    # eigen solver
    eps_schedule: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6)
    eig_maxiter: int = 2000
    multilevel: int = 0
    max_transfer: int = 6
    max_residual: float = 50.0  # the dual-norm residual saturates near p = 1 (exponent p/(p-1))

    def __post_init__(self):
        for name in ("tol", "inner_tol", "max_residual"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", field=name)
        for name in ("max_outer", "max_inner", "threads", "levels", "check_every", "eig_maxiter", "stencil_radius"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1", field=name)
        if self.projection_mode not in ("exact", "gauge_rescale"):
            raise ConfigError("projection_mode must be 'exact' or 'gauge_rescale'", field="projection_mode")
        if self.relaxation not in ("stencil", "forward"):
            raise ConfigError("relaxation must be 'stencil' or 'forward'", field="relaxation")
        self.eps_schedule = tuple(float(e) for e in self.eps_schedule)
        if not self.eps_schedule or min(self.eps_schedule) > 1e-6 or min(self.eps_schedule) <= 0:
            raise ConfigError("eps_schedule must end at a value in (0, 1e-6]", field="eps_schedule")
        env = os.environ.get("WULFFLAB_THREADS")
        if env:
            try:
                self.threads = max(1, int(env))
            except ValueError:
                raise ConfigError("WULFFLAB_THREADS must be an integer", field="threads") from None

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown solver option {sorted(bad)[0]!r}", field=sorted(bad)[0])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return SolverConfig(**d)

    def to_json(self):
        d = asdict(self)
        d["eps_schedule"] = list(self.eps_schedule)
        return d


@dataclass
class ExperimentManifest:
    task: str
    domain: str | dict | None = None  # file path or inline spec
    norm: str | dict | None = None
    params: dict = field(default_factory=dict)
    output: str = "out"
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}", field="task")
        needs_domain = self.task in ("cheeger1", "cheeger2", "hk", "eigen", "sweep") or (
            self.task == "twisted" and self.params.get("mode", "solve") == "solve")
        if needs_domain and not self.domain:
            raise ConfigError(f"task {self.task} needs a domain", field="domain")
        for name in ("domain", "norm"):
            p = getattr(self, name)
            if p is not None and not isinstance(p, (str, dict)):
                raise ConfigError(f"{name} must be a file path or an object", field=name)
            if isinstance(p, str) and p and not Path(p).exists():
                raise ConfigError(f"{name} file {p} does not exist", field=name)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc.msg}", field="manifest") from None
        if not isinstance(raw, dict):
            raise ConfigError("manifest must be a JSON object", field="manifest")
        if "task" not in raw:
            raise ConfigError("manifest needs 'task'", field="task")
        base = path.parent
        for key in ("domain", "norm"):
            if isinstance(raw.get(key), str) and raw[key] and not Path(raw[key]).is_absolute():
                raw[key] = str(base / raw[key])
        bad = set(raw) - {f.name for f in fields(cls)}
        if bad:
            raise ConfigError(f"unknown manifest field {sorted(bad)[0]!r}", field=sorted(bad)[0])
        if not isinstance(raw.get("params", {}), dict):
            raise ConfigError("params must be an object", field="params")
        return cls(**raw)

    def solver_config(self):
        return SolverConfig.from_dict(self.solver)
