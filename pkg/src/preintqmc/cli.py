"""Batch command-line front end.

Subcommands:

  cbc          construct a generating vector and write it to a file
               (line 1 is N, then one integer component per line)
  estimate     estimate F(t) and f(t) over the t-grid at N = N_list[0];
               writes CSV with columns t,F_mean,F_rmse,f_mean,f_rmse
  convergence  RMSE-vs-N table over N_list for the configured methods;
               writes CSV with columns N,method,rmse_cdf,rmse_pdf and
               fitted slopes as '#' footer lines
  kstest       Kolmogorov-Smirnov test of fresh Monte Carlo samples
               against the lattice-rule cdf; also writes the samples
  constants    print the error-constant stack (rho(eps), Gamma_m table,
               B_{1,eta} for |eta| <= 1, norm-bound logs)

Exit codes: 0 success, 2 configuration/validation error, 3 monotonicity
violation.  All CSV outputs start with the effective configuration echoed
as '# key = value' lines; re-running a serial run from that echo
reproduces the file byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import estimators, qmc, weights
from .config import RunConfig, echo_lines, load_config
from .errors import ConfigError, MonotonicityError, PreintQmcError

__all__ = ["main", "console_main"]


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".12g")


def _write_lines(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_vector_file(path: Path, N: int, z_gen) -> None:
    _write_lines(path, [str(int(N))] + [str(int(c)) for c in z_gen])


def read_vector_file(path: Path, expected_N: int | None = None) -> np.ndarray:
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    N = int(lines[0])
    if expected_N is not None and N != expected_N:
        raise ConfigError(f"vector file is for N = {N}, expected {expected_N}")
    return np.array([int(x) for x in lines[1:]], dtype=np.int64)


def _estimate_csv(cfg: RunConfig, est: estimators.DensityEstimate) -> list[str]:
    lines = echo_lines(cfg)
    lines.append("t,F_mean,F_rmse,f_mean,f_rmse")
    Fm, Fr = est.F_mean, est.F_rmse
    fm = est.f_mean
    fr = est.f_rmse
    for k, t in enumerate(est.t_grid):
        row = [_fmt(t), _fmt(Fm[k]), _fmt(Fr[k]),
               _fmt(fm[k]) if fm is not None else "",
               _fmt(fr[k]) if fr is not None else ""]
        lines.append(",".join(row))
    return lines


def _convergence_csv(cfg: RunConfig, table: estimators.ConvergenceTable) -> list[str]:
    lines = echo_lines(cfg)
    lines.append("N,method,rmse_cdf,rmse_pdf")
    for N, method, r_cdf, r_pdf in table.rows:
        lines.append(",".join([str(N), method, _fmt(r_cdf),
                               _fmt(r_pdf) if r_pdf is not None else ""]))
    for (method, target), slope in sorted(table.slopes.items()):
        lines.append(f"# slope method={method} target={target} value={_fmt(slope)}")
    return lines


def _cmd_cbc(cfg: RunConfig, out_dir: Path) -> int:
    spec = cfg.problem_spec()
    if cfg.s == 0:
        raise ConfigError("the preintegrated integrand has no remaining "
                          "variables for s = 0; nothing to construct")
    scheme = estimators.build_scheme(spec, cfg.psi_spec(), cfg.eps,
                                     cfg.weight_scheme, plain=False,
                                     t0=cfg.t0, t1=cfg.t1)
    N = cfg.N_list[0]
    z_gen = qmc.cbc_construct(N, 2 * cfg.s, scheme.pod())
    path = Path(cfg.vector_file) if cfg.vector_file else out_dir / "gen_vector.txt"
    write_vector_file(path, N, z_gen)
    print(f"cbc: N={N} dims={2 * cfg.s} scheme={cfg.weight_scheme} -> {path}")
    return 0


def _cmd_estimate(cfg: RunConfig, out_dir: Path) -> int:
    spec = cfg.problem_spec()
    N = cfg.N_list[0]
    z_gen = None
    if cfg.vector_file:
        z_gen = read_vector_file(Path(cfg.vector_file), expected_N=N)
    rule = estimators.construct_rule(spec, N, cfg.shifts, cfg.seed,
                                     cfg.psi_spec(), cfg.eps,
                                     cfg.weight_scheme, plain=False,
                                     z_gen=z_gen, t0=cfg.t0, t1=cfg.t1)
    est = estimators.estimate_qmc_preint(spec, rule, cfg.t_grid,
                                         workers=cfg.threads)
    path = out_dir / "estimate.csv"
    _write_lines(path, _estimate_csv(cfg, est))
    k = int(np.argmin(np.abs(est.t_grid - cfg.t_ref)))
    print(f"estimate: qmc-preint N={N} shifts={cfg.shifts} "
          f"F({est.t_grid[k]:g})={est.F_mean[k]:.6f} "
          f"rmse={est.F_rmse[k]:.2e} -> {path}")
    return 0


def _cmd_convergence(cfg: RunConfig, out_dir: Path) -> int:
    spec = cfg.problem_spec()
    table = estimators.convergence_sweep(
        spec, cfg.N_list, cfg.methods, cfg.t_grid, cfg.t_ref, cfg.shifts,
        cfg.seed, cfg.psi_spec(), cfg.eps, cfg.weight_scheme,
        workers=cfg.threads)
    path = out_dir / "convergence.csv"
    _write_lines(path, _convergence_csv(cfg, table))
    for (method, target), slope in sorted(table.slopes.items()):
        print(f"convergence: {method} {target} slope {slope:+.3f}")
    print(f"convergence: table -> {path}")
    return 0


def _cmd_kstest(cfg: RunConfig, out_dir: Path) -> int:
    spec = cfg.problem_spec()
    N = cfg.N_list[0]
    rule = estimators.construct_rule(spec, N, cfg.shifts, cfg.seed,
                                     cfg.psi_spec(), cfg.eps,
                                     cfg.weight_scheme, plain=False,
                                     t0=cfg.t0, t1=cfg.t1)
    est = estimators.estimate_qmc_preint(spec, rule, cfg.t_grid,
                                         workers=cfg.threads)
    samples = estimators.draw_qoi_samples(spec, cfg.ks_samples, cfg.seed)
    result = estimators.ks_test(est.t_grid, est.F_mean, samples)
    lines = echo_lines(cfg) + ["sample"] + [_fmt(x) for x in samples]
    lines.append(f"# ks D={result.statistic:.6g} "
                 f"threshold={result.threshold:.6g} reject={result.reject}")
    path = out_dir / "samples.csv"
    _write_lines(path, lines)
    verdict = "reject" if result.reject else "fail to reject"
    print(f"kstest: D={result.statistic:.4g} threshold={result.threshold:.4g} "
          f"({verdict} at 5%) n={result.n} -> {path}")
    return 0


def _cmd_constants(cfg: RunConfig, out_dir: Path) -> int:
    spec = cfg.problem_spec()
    problem = estimators._get_problem(spec)
    consts = problem.constants(cfg.t0, cfg.t1)
    psi = cfg.psi_spec()
    rho = weights.varrho(psi, cfg.eps)
    print(f"constants: weight kind={psi.kind} mu={psi.mu} eps={cfg.eps}")
    print(f"  varrho(eps)      = {rho:.6g}")
    print(f"  ||G|| surrogate  = {consts.g_norm:.6g}")
    print(f"  phi_0(0)         = {consts.phi0_zero:.6g}")
    print(f"  |u_0(.,0)|_W1inf = {consts.u0_w1inf:.6g}")
    for m in range(0, 5):
        print(f"  log Gamma_{m}      = {weights.log_Gamma_m(m, consts, psi.mu):.6g}")
    dims = 2 * cfg.s
    eta = np.zeros(dims, dtype=int)
    print(f"  log B_1,0        = {weights.log_B_constant(1, eta, consts, psi):.6g}")
    for j in range(dims):
        eta = np.zeros(dims, dtype=int)
        eta[j] = 1
        block = "w" if j < cfg.s else "z"
        idx = j + 1 if j < cfg.s else j - cfg.s + 1
        print(f"  log B_1,e({block}{idx})   = "
              f"{weights.log_B_constant(1, eta, consts, psi):.6g}")
    if cfg.s > 0:
        scheme = estimators.build_scheme(spec, psi, cfg.eps, cfg.weight_scheme,
                                         t0=cfg.t0, t1=cfg.t1)
        for which in ("cdf", "pdf"):
            val = weights.log_norm_bound(which, consts, psi, scheme)
            print(f"  log norm bound ({which}) = {val:.6g}")
    return 0


_COMMANDS = {
    "cbc": _cmd_cbc,
    "estimate": _cmd_estimate,
    "convergence": _cmd_convergence,
    "kstest": _cmd_kstest,
    "constants": _cmd_constants,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="preintqmc",
        description="cdf/pdf estimation via preintegration and lattice rules")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides: dict = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = value
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out_dir is not None:
            overrides["out_dir"] = args.out_dir
        cfg = load_config(args.config, overrides)
        out_dir = Path(cfg.out_dir)
        return _COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MonotonicityError as exc:
        print(f"monotonicity violated: {exc}", file=sys.stderr)
        return 3
    except PreintQmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
