"""End-to-end estimators for the cdf and pdf of the quantity of interest.

Four methods are available:

  qmc-preint  randomly shifted lattice rule on the 2s preintegrated
              variables; yields both cdf and pdf estimates
  qmc         lattice rule on all 2s+1 variables with the raw indicator;
              cdf only (the Dirac delta cannot be evaluated pointwise)
  mc-preint   i.i.d. sampling of the 2s preintegrated variables
  mc          i.i.d. sampling with the raw indicator; cdf only

Every method reports, per t-grid value, the mean over R random shifts
(or R batches for Monte Carlo) plus an RMSE estimate: the unbiased
sample standard deviation across shifts divided by sqrt(R).  To keep
Monte Carlo comparable with an N-point, R-shift lattice rule it draws
R*N samples split into R batches.

One pass over a realization evaluates the whole t-grid, so the s+2 PDE
solves per lattice point are amortized across all t values.

Determinism: all randomness comes from counter-based Philox streams keyed
by (seed, purpose, index).  In serial mode the summation order is fixed
(ascending point index), and the parallel mode combines per-shift partial
results in fixed shift order, so results are reproducible bitwise for a
given worker-independent task split.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qmc, weights
from .errors import ConfigError, DiracEvaluationError
from .fields import make_sine_family
from .parametric import QoiProblem
from .preintegration import PreintPoint, g_both

__all__ = [
    "ProblemSpec",
    "DensityEstimate",
    "ConvergenceTable",
    "estimate_qmc",
    "estimate_qmc_preint",
    "estimate_mc",
    "convergence_sweep",
    "draw_qoi_samples",
    "ks_test",
    "KsResult",
    "build_scheme",
    "construct_rule",
    "METHODS",
]

METHODS = ("qmc-preint", "qmc", "mc-preint", "mc")


@dataclass(frozen=True)
class ProblemSpec:
    """Picklable description of a problem; workers rebuild and cache it.

    Tabulated families are referenced by the path of an .npz archive with
    arrays ``lbar`` (n_nodes,), ``ell`` (s+1, n_nodes) and ``a`` (s,
    n_nodes) on the nodes of the mesh given by ``mesh_m``.
    """

    dim: int
    s: int
    alpha: float
    theta: float
    mesh_m: int
    qoi_point: tuple
    solver: str = "direct"
    solver_tol: float = 1e-10
    solver_maxit: int = 10_000
    family: str = "paper-sine"
    tabulated_path: str = ""

    def build(self) -> QoiProblem:
        from . import fem
        from .fields import make_tabulated_family

        mesh = fem.make_mesh(self.dim, self.mesh_m)
        if self.family == "paper-sine":
            fe = make_sine_family(self.dim, self.s, self.alpha, self.theta)
        elif self.family == "tabulated":
            data = np.load(self.tabulated_path)
            fe = make_tabulated_family(mesh, data["lbar"], data["ell"],
                                       data["a"], self.alpha, self.theta)
            if fe.s != self.s:
                raise ConfigError(
                    f"tabulated file provides s = {fe.s}, config says {self.s}")
        else:
            raise ConfigError(f"unknown family {self.family!r}")
        return QoiProblem(mesh, fe, np.asarray(self.qoi_point),
                          solver=self.solver, solver_tol=self.solver_tol,
                          solver_maxit=self.solver_maxit)


_PROBLEM_CACHE: dict = {}


def _get_problem(spec) -> QoiProblem:
    if isinstance(spec, QoiProblem):
        return spec
    prob = _PROBLEM_CACHE.get(spec)
    if prob is None:
        prob = spec.build()
        _PROBLEM_CACHE[spec] = prob
    return prob


@dataclass
class DensityEstimate:
    """Per-shift estimates over a t-grid with their aggregate statistics."""

    t_grid: np.ndarray
    F_shift: np.ndarray  # (R, T)
    f_shift: np.ndarray | None  # (R, T) or None for indicator methods
    metadata: dict = field(default_factory=dict)

    @property
    def n_shifts(self) -> int:
        return self.F_shift.shape[0]

    @property
    def F_mean(self) -> np.ndarray:
        return self.F_shift.mean(axis=0)

    @property
    def f_mean(self) -> np.ndarray | None:
        return None if self.f_shift is None else self.f_shift.mean(axis=0)

    @property
    def F_rmse(self) -> np.ndarray:
        return self.F_shift.std(axis=0, ddof=1) / math.sqrt(self.n_shifts)

    @property
    def f_rmse(self) -> np.ndarray | None:
        if self.f_shift is None:
            return None
        return self.f_shift.std(axis=0, ddof=1) / math.sqrt(self.n_shifts)

    def at(self, t: float):
        """(F_rmse, f_rmse) at the grid value closest to t."""
        k = int(np.argmin(np.abs(self.t_grid - t)))
        f = None if self.f_shift is None else float(self.f_rmse[k])
        return float(self.F_rmse[k]), f


def _eval_preint_shift(problem: QoiProblem, Y: np.ndarray,
                       t_grid: np.ndarray):
    """Average g_cdf and g_pdf over one shifted point set (N, 2s)."""
    s = problem.fe.s
    T = t_grid.size
    F_sum = np.zeros(T)
    f_sum = np.zeros(T)
    if s == 0:
        comps = problem.components(np.zeros(0))
        point = PreintPoint(w=np.zeros(0), z=np.zeros(0), qoi=comps)
        F_row, f_row = g_both(t_grid, point)
        return F_row, f_row
    n = Y.shape[0]
    for k in range(n):
        w, z = Y[k, :s], Y[k, s:]
        comps = problem.components(z)
        F_row, f_row = g_both(t_grid, PreintPoint(w=w, z=z, qoi=comps))
        F_sum += F_row
        f_sum += f_row
    return F_sum / n, f_sum / n


def _eval_indicator_shift(problem: QoiProblem, Y: np.ndarray,
                          t_grid: np.ndarray):
    """Average the raw indicator 1(X <= t) over one point set (N, 2s+1)."""
    s = problem.fe.s
    F_sum = np.zeros(t_grid.size)
    n = Y.shape[0]
    for k in range(n):
        w, z = Y[k, :s + 1], Y[k, s + 1:]
        x = problem.qoi_full(w, z)
        F_sum += (x <= t_grid)
    return F_sum / n, None


def _task_run(args):
    spec, method, t_tuple, payload = args
    problem = _get_problem(spec)
    t_grid = np.asarray(t_tuple)
    if payload[0] == "lattice":
        _, N, z_tuple, shift_tuple = payload
        rule = qmc.LatticeRule(
            N=N, z_gen=np.asarray(z_tuple, dtype=np.int64),
            shifts=np.asarray(shift_tuple, dtype=float).reshape(1, -1))
        Y = qmc.to_gaussian(rule.points(0))
    else:
        _, n_draws, dims, seed, index = payload
        rng = qmc.substream(seed, qmc.PURPOSE_MC, index)
        Y = rng.standard_normal((n_draws, dims))
    if method.endswith("preint"):
        return _eval_preint_shift(problem, Y, t_grid)
    return _eval_indicator_shift(problem, Y, t_grid)


def _run_tasks(tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_task_run(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task_run, tasks, chunksize=1))


def _collect(results, t_grid, with_pdf: bool, metadata: dict) -> DensityEstimate:
    F = np.vstack([r[0] for r in results])
    f = np.vstack([r[1] for r in results]) if with_pdf else None
    return DensityEstimate(t_grid=t_grid, F_shift=F, f_shift=f,
                           metadata=metadata)


def estimate_qmc(spec, rule: qmc.LatticeRule, t_grid, preintegrate: bool = True,
                 workers: int = 1) -> DensityEstimate:
    """Lattice-rule estimate over the t-grid, one row per random shift."""
    t_grid = np.asarray(t_grid, dtype=float)
    if isinstance(spec, QoiProblem) and workers > 1:
        raise ConfigError("parallel mode needs a picklable ProblemSpec")
    s = _get_problem(spec).fe.s
    need = 2 * s if preintegrate else 2 * s + 1
    if rule.dims != need:
        raise ConfigError(f"lattice rule has {rule.dims} dimensions, "
                          f"needs {need}")
    method = "qmc-preint" if preintegrate else "qmc"
    tasks = [
        (spec, method, tuple(t_grid),
         ("lattice", rule.N, tuple(int(c) for c in rule.z_gen),
          tuple(map(float, rule.shifts[r]))))
        for r in range(rule.n_shifts)
    ]
    results = _run_tasks(tasks, workers)
    meta = {"method": method, "N": rule.N, "shifts": rule.n_shifts,
            "seed": rule.rng_seed}
    return _collect(results, t_grid, preintegrate, meta)


def estimate_qmc_preint(spec, rule, t_grid, workers: int = 1) -> DensityEstimate:
    return estimate_qmc(spec, rule, t_grid, preintegrate=True, workers=workers)


def estimate_mc(spec, M: int, t_grid, preintegrate: bool, n_batches: int,
                seed: int, request_pdf: bool | None = None,
                workers: int = 1, stream_offset: int = 0) -> DensityEstimate:
    """Plain Monte Carlo with M i.i.d. samples split into n_batches batches.

    Batch k draws from the Philox stream (purpose=MC, stream_offset + k);
    callers running a ladder of sample sizes pass distinct offsets so the
    runs are statistically independent.  Without preintegration only the
    indicator (cdf) path exists; asking for the pdf there raises
    DiracEvaluationError.
    """
    if M < 2 or n_batches < 2:
        raise ConfigError("Monte Carlo needs M >= 2 and at least two batches")
    if M % n_batches:
        raise ConfigError("M must be divisible by the batch count")
    if request_pdf and not preintegrate:
        raise DiracEvaluationError(
            "the Dirac delta cannot be evaluated without preintegration")
    if isinstance(spec, QoiProblem) and workers > 1:
        raise ConfigError("parallel mode needs a picklable ProblemSpec")
    t_grid = np.asarray(t_grid, dtype=float)
    s = _get_problem(spec).fe.s
    dims = 2 * s if preintegrate else 2 * s + 1
    method = "mc-preint" if preintegrate else "mc"
    per = M // n_batches
    tasks = [
        (spec, method, tuple(t_grid), ("mc", per, dims, seed, stream_offset + k))
        for k in range(n_batches)
    ]
    results = _run_tasks(tasks, workers)
    meta = {"method": method, "M": M, "batches": n_batches, "seed": seed}
    return _collect(results, t_grid, preintegrate, meta)


def build_scheme(spec, psi: weights.WeightFunctionSpec, eps: float,
                 kind: str = "practical", plain: bool = False,
                 t0: float = 0.0, t1: float = 0.0) -> weights.WeightScheme:
    """Weight scheme for the CBC construction of a problem's lattice rules.

    Preintegrated rules cover the coordinates (w_1..w_s, z_1..z_s) with
    the configured scheme.  The plain (no-preintegration) baseline rule
    covers (w_0..w_s, z_1..z_s) and deliberately uses unit product
    weights: tuning the rule towards w_0 would let it resolve the
    indicator discontinuity and stop being a fair untuned reference.
    """
    problem = _get_problem(spec)
    fe = problem.fe
    if plain:
        dims = 2 * fe.s + 1
        return weights.WeightScheme(gamma=np.ones(dims),
                                    log_order_ratio=np.zeros(dims),
                                    name="plain-product")
    if kind == "practical":
        return weights.practical_scheme(fe.c[1:], fe.b, psi, eps)
    if kind == "theoretical":
        consts = problem.constants(t0, t1)
        return weights.theoretical_scheme(consts, psi, eps)
    raise ConfigError(f"unknown weight scheme {kind!r}")


def construct_rule(spec, N: int, n_shifts: int, seed: int,
                   psi: weights.WeightFunctionSpec, eps: float,
                   scheme_kind: str = "practical", plain: bool = False,
                   z_gen=None, t0: float = 0.0, t1: float = 0.0,
                   shift_offset: int = 0) -> qmc.LatticeRule:
    """CBC-construct (or adopt) a generating vector and attach shifts."""
    s = _get_problem(spec).fe.s
    dims = 2 * s + 1 if plain else 2 * s
    if z_gen is None:
        if dims == 0:
            z_gen = np.zeros(0, dtype=np.int64)
        else:
            scheme = build_scheme(spec, psi, eps, scheme_kind, plain, t0, t1)
            z_gen = qmc.cbc_construct(N, dims, scheme.pod())
    return qmc.make_lattice(N, z_gen, n_shifts, seed, shift_offset)


@dataclass
class ConvergenceTable:
    """RMSE-vs-N rows at a reference t, with fitted log-log slopes."""

    t_ref: float
    rows: list  # (N, method, rmse_cdf, rmse_pdf | None)
    slopes: dict  # (method, "cdf" | "pdf") -> float

    def slope(self, method: str, target: str = "cdf") -> float:
        return self.slopes[(method, target)]


def _fit_slope(Ns, rmses) -> float:
    Ns = np.asarray(Ns, dtype=float)
    rmses = np.asarray(rmses, dtype=float)
    keep = rmses > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(Ns[keep]), np.log(rmses[keep]), 1)[0])


def convergence_sweep(spec, N_list, methods, t_grid, t_ref: float,
                      n_shifts: int, seed: int,
                      psi: weights.WeightFunctionSpec, eps: float,
                      scheme_kind: str = "practical", workers: int = 1,
                      keep_estimates: bool = False):
    """Run each method at each N and fit log RMSE against log N.

    Monte Carlo methods use n_shifts * N samples at each N so that the
    work is comparable with an n_shifts-shift lattice rule.
    """
    if not len(N_list):
        raise ConfigError("N_list must not be empty")
    for method in methods:
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}")
    t_grid = np.asarray(t_grid, dtype=float)
    if not (t_grid[0] <= t_ref <= t_grid[-1]):
        raise ConfigError("reference t must lie inside the t-grid")

    rows = []
    per_method: dict = {m: {"N": [], "cdf": [], "pdf": []} for m in methods}
    estimates = {}
    for i_N, N in enumerate(N_list):
        for method in methods:
            # Monte Carlo draws get disjoint streams per ladder entry so
            # RMSE noise is independent across N
            offset = 64 * (2 * i_N + (method == "mc"))
            if method == "qmc-preint":
                rule = construct_rule(spec, N, n_shifts, seed, psi, eps,
                                      scheme_kind, plain=False,
                                      t0=t_grid[0], t1=t_grid[-1],
                                      shift_offset=offset)
                est = estimate_qmc(spec, rule, t_grid, True, workers)
            elif method == "qmc":
                rule = construct_rule(spec, N, n_shifts, seed, psi, eps,
                                      scheme_kind, plain=True,
                                      t0=t_grid[0], t1=t_grid[-1],
                                      shift_offset=offset)
                est = estimate_qmc(spec, rule, t_grid, False, workers)
            elif method == "mc-preint":
                est = estimate_mc(spec, n_shifts * N, t_grid, True,
                                  n_shifts, seed, workers=workers,
                                  stream_offset=offset)
            else:
                est = estimate_mc(spec, n_shifts * N, t_grid, False,
                                  n_shifts, seed, workers=workers,
                                  stream_offset=offset)
            r_cdf, r_pdf = est.at(t_ref)
            rows.append((N, method, r_cdf, r_pdf))
            per_method[method]["N"].append(N)
            per_method[method]["cdf"].append(r_cdf)
            if r_pdf is not None:
                per_method[method]["pdf"].append(r_pdf)
            if keep_estimates:
                estimates[(method, N)] = est

    slopes = {}
    for method in methods:
        data = per_method[method]
        slopes[(method, "cdf")] = _fit_slope(data["N"], data["cdf"])
        if data["pdf"]:
            slopes[(method, "pdf")] = _fit_slope(data["N"], data["pdf"])
    table = ConvergenceTable(t_ref=t_ref, rows=rows, slopes=slopes)
    return (table, estimates) if keep_estimates else table


def draw_qoi_samples(spec, n: int, seed: int, stream: int = 0,
                     workers: int = 1) -> np.ndarray:
    """n i.i.d. realizations of the quantity of interest (full solve each)."""
    problem = _get_problem(spec)
    s = problem.fe.s
    rng = qmc.substream(seed, qmc.PURPOSE_SAMPLES, stream)
    Y = rng.standard_normal((n, 2 * s + 1))
    out = np.empty(n)
    for k in range(n):
        out[k] = problem.qoi_full(Y[k, :s + 1], Y[k, s + 1:])
    return out


@dataclass(frozen=True)
class KsResult:
    statistic: float
    threshold: float
    reject: bool
    n: int


def ks_test(t_grid, F_model, samples) -> KsResult:
    """One-sample Kolmogorov-Smirnov test against a tabulated cdf.

    The model cdf is interpolated piecewise-linearly between grid values,
    forced monotone (running maximum) and clamped to [0, 1]; outside the
    grid it continues with its boundary values.  The 5% asymptotic
    threshold is 1.358 / sqrt(n).
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    n = samples.size
    if n < 30:
        raise ConfigError("KS test needs at least 30 samples")
    F_model = np.clip(np.maximum.accumulate(np.asarray(F_model, dtype=float)),
                      0.0, 1.0)
    t_grid = np.asarray(t_grid, dtype=float)
    Fm = np.interp(samples, t_grid, F_model, left=F_model[0], right=F_model[-1])
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - Fm))
    d_minus = float(np.max(Fm - (i - 1) / n))
    d = max(d_plus, d_minus)
    threshold = 1.358 / math.sqrt(n)
    return KsResult(statistic=d, threshold=threshold, reject=d > threshold, n=n)


def trapezoid_pdf_mass(est: DensityEstimate) -> float:
    """Integral of the pdf estimate over the grid, trapezoid rule."""
    if est.f_shift is None:
        raise ConfigError("estimate carries no pdf")
    return float(np.trapezoid(est.f_mean, est.t_grid))


def grid_curvature_bound(est: DensityEstimate) -> float:
    """Crude trapezoid discretization bound from second differences:
    sum |f''| h^3 / 12 with f'' h^2 approximated by second differences."""
    f = est.f_mean
    h = float(est.t_grid[1] - est.t_grid[0])
    second = np.abs(np.diff(f, 2))
    return float(second.sum() * h / 12.0)
