"""Flat key=value run configuration with strict validation.

Config files are plain text: one ``key = value`` pair per line, ``#``
comments, blank lines ignored.  Unknown keys are rejected.  Every output
CSV echoes the effective configuration as ``# key = value`` comment
lines, and re-running from that echo reproduces the output byte for byte
in serial mode.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields, replace

import numpy as np

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config_file", "load_config", "echo_lines",
           "config_from_lines"]

_SQRT_HALF = 0.7071067811865476  # default evaluation point coordinate


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    s: int = 8
    alpha: float = 1.0
    theta: float = 2.0
    family: str = "paper-sine"
    mesh_m: int = 5
    solver: str = "direct"
    solver_tol: float = 1e-10
    solver_maxit: int = 10_000
    qoi: str = "point"
    qoi_point: tuple = (_SQRT_HALF, _SQRT_HALF)
    weight_kind: str = "gaussian"
    mu: float = 0.05
    eps: float = 0.1
    weight_scheme: str = "practical"
    N_list: tuple = (251, 503, 1009, 2003, 4001)
    shifts: int = 8
    seed: int = 3
    t0: float = -0.2
    t1: float = 0.3
    t_points: int = 61
    t_ref: float = -0.02
    methods: tuple = ("qmc-preint",)
    ks_samples: int = 1000
    out_dir: str = "."
    threads: int = 1
    vector_file: str = ""
    tabulated_path: str = ""

    def validate(self) -> "RunConfig":
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.s < 0:
            raise ConfigError("s must be >= 0")
        if self.alpha <= 0 or self.theta <= 0:
            raise ConfigError("alpha and theta must be positive")
        if self.family not in ("paper-sine", "tabulated"):
            raise ConfigError(f"unknown family {self.family!r}")
        if self.family == "tabulated" and not self.tabulated_path:
            raise ConfigError("family = tabulated requires tabulated_path")
        if self.mesh_m < 1:
            raise ConfigError("mesh_m must be >= 1")
        if self.solver not in ("direct", "cg"):
            raise ConfigError("solver must be 'direct' or 'cg'")
        if self.qoi != "point":
            raise ConfigError("only the point-evaluation QoI is supported")
        if len(self.qoi_point) != self.dim:
            raise ConfigError("qoi_point must have one coordinate per dimension")
        if any(not 0 < x < 1 for x in self.qoi_point):
            raise ConfigError("qoi_point must lie strictly inside the domain")
        if self.weight_kind not in ("gaussian", "exponential"):
            raise ConfigError("weight_kind must be 'gaussian' or 'exponential'")
        if self.weight_kind == "gaussian":
            if not 0 < self.mu < 0.5:
                raise ConfigError("gaussian weight functions require mu < 1/2 "
                                  "(and mu > 0)")
            if not self.mu < self.eps <= 0.5:
                raise ConfigError("eps must lie in (mu, 1/2] for gaussian "
                                  "weight functions")
        else:
            if self.mu <= 0:
                raise ConfigError("exponential weight functions require mu > 0")
            if not 0 < self.eps <= 0.5:
                raise ConfigError("eps must lie in (0, 1/2]")
        if self.weight_scheme not in ("practical", "theoretical"):
            raise ConfigError("weight_scheme must be 'practical' or "
                              "'theoretical'")
        if not self.N_list or any(n < 2 for n in self.N_list):
            raise ConfigError("N_list entries must be >= 2")
        if self.shifts < 2:
            raise ConfigError("need at least 2 random shifts for an RMSE")
        if self.seed < 0 or self.seed > 2 ** 63:
            raise ConfigError("seed must fit in 64 bits")
        if not self.t0 < self.t1:
            raise ConfigError("t0 must be below t1")
        if self.t_points < 2:
            raise ConfigError("t_points must be >= 2")
        if not self.t0 <= self.t_ref <= self.t1:
            raise ConfigError("t_ref must lie in [t0, t1]")
        from .estimators import METHODS

        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if self.ks_samples < 30:
            raise ConfigError("ks_samples must be >= 30")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.t_points)

    def problem_spec(self):
        from .estimators import ProblemSpec

        return ProblemSpec(dim=self.dim, s=self.s, alpha=self.alpha,
                           theta=self.theta, mesh_m=self.mesh_m,
                           qoi_point=tuple(self.qoi_point[:self.dim]),
                           solver=self.solver, solver_tol=self.solver_tol,
                           solver_maxit=self.solver_maxit,
                           family=self.family,
                           tabulated_path=self.tabulated_path)

    def psi_spec(self):
        from .weights import WeightFunctionSpec

        return WeightFunctionSpec(kind=self.weight_kind, mu=self.mu)


_INT_KEYS = {"dim", "s", "mesh_m", "solver_maxit", "shifts", "seed",
             "t_points", "ks_samples", "threads"}
_FLOAT_KEYS = {"alpha", "theta", "solver_tol", "mu", "eps", "t0", "t1", "t_ref"}
_STR_KEYS = {"family", "solver", "qoi", "weight_kind", "weight_scheme",
             "out_dir", "vector_file", "tabulated_path"}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _STR_KEYS:
            return raw
        if key == "qoi_point":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if key == "N_list":
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if key == "methods":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    raise ConfigError(f"unknown config key {key!r}")


def _parse_lines(lines) -> dict:
    known = {f.name for f in dc_fields(RunConfig)}
    out = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in text.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def parse_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_lines(fh)


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    values = parse_config_file(path) if path else {}
    for key, raw in (overrides or {}).items():
        known = {f.name for f in dc_fields(RunConfig)}
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    return replace(RunConfig(), **values).validate()


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def echo_lines(cfg: RunConfig) -> list[str]:
    """Config echo placed at the top of every CSV output."""
    return [f"# {f.name} = {_format_value(getattr(cfg, f.name))}"
            for f in dc_fields(RunConfig)]


def config_from_lines(lines) -> RunConfig:
    """Rebuild a config from echoed '# key = value' comment lines."""
    stripped = [line[1:].strip() for line in lines
                if line.startswith("#") and "=" in line]
    return replace(RunConfig(), **_parse_lines(stripped)).validate()
