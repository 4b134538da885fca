"""Command-line front end: ``rabiq <subcommand> [options]``.

Subcommands write plot-ready tables (see :mod:`rabiq.output`) to ``--output``
(default: standard output).  Exit codes: 0 success, 1 domain error (including
invalid arguments and failed verification checks), 2 numerical non-convergence.
``RABIQ_THREADS`` (integer >= 1) caps worker threads.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import berry_phase, jc_photon_number, spacing_histogram
from .dynamics import (LEAKAGE_TOL, POISSON_TAIL, coherent_initial, fock_initial, p_deep_strong, p_revival_delta0, p_rwa,
                       propagate, time_grid)
from .model import (TWO_PHOTON_CLASSES, ConvergenceError, DomainError, ModelParams, RabiqError,
                    Variant)
from .output import JobConfig, parse_config_text, write_table
from .heun import HEUN_TOL
from .recurrences import (POLE_GUARD, SERIES_CAP, SERIES_TOL, TWO_PHOTON_ORDER, aniso_values, asym_values, braak_values,
                          twophoton_values)
from .spectrum import (SIGN_TO_PARITY, asym_judd_points, judd_points, regular_spectrum,
                       twophoton_exceptional)

__all__ = ["main", "run", "build_parser"]

# fixed numerical tolerances, embedded in every output header
TOLERANCES = {
    "series_tol": SERIES_TOL,
    "series_cap": SERIES_CAP,
    "pole_guard": POLE_GUARD,
    "bisection_tol": 1e-13,
    "oracle_tol": 1e-10,
    "heun_tol": HEUN_TOL,
    "twophoton_order": TWO_PHOTON_ORDER,
    "leakage_tol": LEAKAGE_TOL,
    "poisson_tail": POISSON_TAIL,
}

SUBCOMMANDS = ("spectrum", "gfun", "judd", "dynamics", "stats", "berry", "verify")
# settings that describe the run environment rather than the job
_NOT_CONFIG = {"output", "config"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DomainError(f"{self.prog}: {message}")


def _model_args(p: argparse.ArgumentParser, g_required: bool = True) -> None:
    p.add_argument("--model", choices=[v.value for v in Variant], default="rabi")
    if g_required:
        p.add_argument("--g", type=float, default=None, help="coupling g")
    p.add_argument("--delta", type=float, default=None, help="qubit splitting parameter delta")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.0, help="bias (asymmetric model)")
    p.add_argument("--lam", type=float, default=0.0, help="counter-rotating weight (anisotropic model)")


def _io_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", default="-", help="output file ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", default=None, help="key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-parser per subcommand."""
    top = _Parser(prog="rabiq", description="Exact spectra and dynamics of Rabi-type models.")
    top.add_argument("--version", action="version", version=f"rabiq {__version__}")
    sub = top.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("spectrum", help="lowest levels from the G-function zeros")
    _model_args(p)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--method", choices=("default", "bogoliubov"), default="default")
    p.add_argument("--scan-step", type=float, default=0.05)
    p.add_argument("--pole-guard", type=float, default=POLE_GUARD)
    _io_args(p)

    p = sub.add_parser("gfun", help="G-function values on a grid")
    _model_args(p)
    p.add_argument("--x-range", type=float, nargs=2, default=[-1.0, 5.0], metavar=("LO", "HI"))
    p.add_argument("--samples", type=int, default=2400)
    p.add_argument("--series-tol", type=float, default=SERIES_TOL)
    _io_args(p)

    p = sub.add_parser("judd", help="exceptional (Judd) points")
    _model_args(p, g_required=False)
    p.add_argument("--n", type=int, default=1, help="pole index n (two-photon: N)")
    p.add_argument("--g-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--family", default=None,
                   help="asymmetric: '+' or '-'; two-photon: 'first' or 'second'")
    p.add_argument("--branch", type=int, default=1, help="two-photon second family N=3 branch (+1/-1)")
    p.add_argument("--no-verify", action="store_true", help="skip the oracle degeneracy check")
    _io_args(p)

    p = sub.add_parser("dynamics", help="population inversion P(t)")
    _model_args(p)
    p.add_argument("--alpha", type=float, default=math.sqrt(10.0))
    p.add_argument("--level", choices=("up", "down"), default="up")
    p.add_argument("--fock", type=int, default=None, help="start in a number state instead")
    p.add_argument("--t-end", type=float, default=None, help="default: 2 pi * 5 / omega")
    p.add_argument("--samples", type=int, default=2048)
    p.add_argument("--method", choices=("spectral", "ode", "rwa", "deep-strong", "delta0"),
                   default="spectral")
    p.add_argument("--n-max", type=int, default=None)
    _io_args(p)

    p = sub.add_parser("stats", help="nearest-neighbour spacing histogram of one parity chain")
    _model_args(p)
    p.add_argument("--parity", type=int, choices=(1, -1), default=1)
    p.add_argument("--levels", type=int, default=501)
    p.add_argument("--bin-width", type=float, default=0.02)
    _io_args(p)

    p = sub.add_parser("berry", help="Berry phase <a^dag a> along a coupling sweep")
    _model_args(p, g_required=False)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--parity", type=int, choices=(1, -1), default=1)
    p.add_argument("--g-range", type=float, nargs=2, default=[0.0, 1.0], metavar=("LO", "HI"))
    p.add_argument("--g-steps", type=int, default=51)
    _io_args(p)

    p = sub.add_parser("verify", help="analytic-versus-oracle acceptance suite")
    p.add_argument("--only", type=int, nargs="+", default=None, metavar="ID")
    _io_args(p)
    return top


# ---------------------------------------------------------------------------


def _params(a: argparse.Namespace, g: Optional[float] = None) -> ModelParams:
    g = a.g if g is None else g
    if g is None:
        raise DomainError("--g is required")
    if a.delta is None:
        raise DomainError("--delta is required")
    v = Variant(a.model)
    if v is Variant.RABI:
        return ModelParams.rabi(g, a.delta, a.omega)
    if v is Variant.ASYMMETRIC:
        return ModelParams.asymmetric(g, a.delta, a.epsilon, a.omega)
    if v is Variant.ANISOTROPIC:
        return ModelParams.anisotropic(g, a.delta, a.lam, a.omega)
    return ModelParams.two_photon(g, a.delta, a.omega)


def _job(a: argparse.Namespace) -> JobConfig:
    s = {k: v for k, v in vars(a).items() if k not in _NOT_CONFIG and k != "subcommand"}
    return JobConfig(a.subcommand, s)


def _cmd_spectrum(a):
    p = _params(a)
    levels = regular_spectrum(p, a.levels, scan_step=a.scan_step, pole_guard=a.pole_guard,
                              method=a.method)
    rows = [(l.x, l.energy, l.parity, l.n, l.kind.value, l.sector) for l in levels]
    return ["x", "energy", "parity", "n", "kind", "sector"], rows, {}


def _cmd_gfun(a):
    p = _params(a).reduced()
    lo, hi = a.x_range
    if not hi > lo or a.samples < 2:
        raise DomainError("--x-range needs LO < HI and --samples >= 2")
    x = np.linspace(lo, hi, a.samples)
    g, d, tol = p.g, p.delta, a.series_tol
    if p.variant is Variant.RABI:
        cols = ["x", "G_plus", "G_minus"]
        data = [braak_values(x, 1, g, d, tol)[0], braak_values(x, -1, g, d, tol)[0]]
    elif p.variant is Variant.ASYMMETRIC:
        cols = ["x", "G_eps"]
        data = [asym_values(x, g, d, p.epsilon, tol)[0]]
    elif p.variant is Variant.ANISOTROPIC:
        cols = ["x", "G_plus", "G_minus"]
        data = [aniso_values(x, 1, g, d, p.lam, tol)[0], aniso_values(x, -1, g, d, p.lam, tol)[0]]
    else:
        # the two-photon conditions are functions of the energy
        cols = ["E"] + [f"G_C={lab}" for lab in ("1", "-1", "i", "-i")]
        data = [twophoton_values(x, C, g, d) for C in (1, -1, 1j, -1j)]
    meta = {"parity_of_G_plus": SIGN_TO_PARITY[1]} if p.variant is not Variant.TWO_PHOTON else {}
    rows = [(x[i],) + tuple(col[i] for col in data) for i in range(x.size)]
    return cols, rows, meta


def _cmd_judd(a):
    v = Variant(a.model)
    if a.delta is None:
        raise DomainError("--delta is required")
    verify = not a.no_verify
    if v is Variant.RABI:
        pts = judd_points(a.n, a.delta, a.g_range, a.omega, verify=verify)
    elif v is Variant.ASYMMETRIC:
        fams = [a.family] if a.family else ["+", "-"]
        pts = [j for f in fams for j in asym_judd_points(a.n, a.delta, a.epsilon, f, a.g_range,
                                                         a.omega, verify=verify)]
    elif v is Variant.TWO_PHOTON:
        pts = twophoton_exceptional(a.n, a.delta, a.omega, a.family or "first", a.branch, verify=verify)
    else:
        raise DomainError("judd supports the rabi, asymmetric and twophoton models")
    cols = ["n", "g_star", "energy", "residual", "degeneracy_gap", "level_offset", "family"]
    rows = [(j.n, j.g_star, j.energy, j.residual, j.degeneracy_gap, j.level_offset, j.family)
            for j in pts]
    return cols, rows, {"points": len(rows)}


def _cmd_dynamics(a):
    p = _params(a)
    t_end = a.t_end if a.t_end is not None else 10 * math.pi / a.omega
    t = time_grid(t_end, a.samples)
    if a.method == "delta0":
        tr = p_revival_delta0(p.g, t, p.omega)
    elif a.method == "deep-strong":
        tr = p_deep_strong(p, a.alpha, t)
    else:
        s = fock_initial(a.fock, a.level) if a.fock is not None else coherent_initial(a.alpha, a.level)
        if a.method == "rwa":
            tr = p_rwa(s, p, t)
        else:
            tr = propagate(s, p, t, method=a.method, n_max=a.n_max)
    rev = tr.revival if tr.revival is not None else np.full_like(t, np.nan)
    rows = [(t[i], tr.inversion[i], rev[i]) for i in range(t.size)]
    meta = {"method": tr.method.value, "norm_drift": tr.norm_drift, "leakage": tr.leakage,
            "aliased": tr.aliased}
    meta.update({k: v for k, v in tr.info.items() if v is not None})
    return ["t", "inversion", "revival"], rows, meta


def _cmd_stats(a):
    h = spacing_histogram(_params(a), a.parity, a.levels, a.bin_width)
    rows = [(h.edges[i], h.edges[i + 1], int(h.counts[i])) for i in range(h.counts.size)]
    meta = {"levels_used": h.levels_used, "peaks": list(h.peaks), "peak_widths": list(h.peak_widths)}
    return ["bin_lo", "bin_hi", "count"], rows, meta


def _jc_label(p: ModelParams, n: int, parity: int):
    # the rotating-wave block that holds the same number state at g = 0
    up = -parity * (-1) ** n > 0
    N = n + 1 if up else n
    if N == 0:
        return 0, -1
    a_up, d_dn = N - 1 + p.delta, N - p.delta
    branch = (1 if a_up > d_dn else -1) if up else (1 if d_dn > a_up else -1)
    return N, branch


def _cmd_berry(a):
    if a.g_steps < 1:
        raise DomainError("--g-steps must be >= 1")
    lo, hi = a.g_range
    grid = np.linspace(lo, hi, a.g_steps)
    p = _params(a, g=0.0)
    r = berry_phase(p, a.n, grid, a.parity)
    N, br = _jc_label(p.reduced(), a.n, a.parity)
    jc = [jc_photon_number(p.with_g(float(g)), N, br) for g in grid]
    rows = [(r.g[i], r.gamma[i], r.energy[i], jc[i]) for i in range(grid.size)]
    meta = {"min_overlap": r.min_overlap, "ambiguous": list(r.ambiguous) or "none",
            "truncation_delta": r.truncation_delta, "n_max": r.n_max}
    return ["g", "gamma_over_2pi", "energy", "jc_gamma_over_2pi"], rows, meta


def _cmd_verify(a):
    from .checks import run_checks

    results = run_checks(a.only)
    rows = []
    for r in results:
        for k, v in r.metrics.items():
            rows.append((r.id, r.title, r.passed, k, v))
    width = max(len(r.title) for r in results)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.id:2d}  {r.title:<{width}}  {r.elapsed:7.2f} s",
              file=sys.stderr)
        if r.notes:
            print(f"        {r.notes}", file=sys.stderr)
    failed = [r.id for r in results if not r.passed]
    meta = {"checks": len(results), "failed": failed or "none"}
    return ["check", "title", "passed", "metric", "value"], rows, meta


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "gfun": _cmd_gfun,
    "judd": _cmd_judd,
    "dynamics": _cmd_dynamics,
    "stats": _cmd_stats,
    "berry": _cmd_berry,
    "verify": _cmd_verify,
}


def _config_argv(path: str, argv: List[str]) -> List[str]:
    """Splice config-file settings in front of the command-line flags (which win)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = parse_config_text(fh.read())
    except OSError as exc:
        raise DomainError(f"cannot read config {path!r}: {exc}") from exc
    sub = raw.pop("subcommand", None)
    extra: List[str] = []
    for k, v in raw.items():
        flag = "--" + k.replace("_", "-")
        if v == "":
            continue
        if v in ("true", "false"):
            if v == "true":
                extra.append(flag)
            continue
        extra.append(flag)
        extra.extend(v.split())
    has_sub = bool(argv) and argv[0] in SUBCOMMANDS
    if not has_sub:
        if sub is None:
            raise DomainError("no subcommand given on the command line or in the config")
        argv = [sub] + argv
    return argv[:1] + extra + argv[1:]


def _find_config(argv: Sequence[str]) -> Optional[str]:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _check_threads() -> None:
    raw = os.environ.get("RABIQ_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise DomainError(f"RABIQ_THREADS must be an integer >= 1, got {raw!r}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one job and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        _check_threads()
        cfg = _find_config(argv)
        if cfg is not None:
            argv = _config_argv(cfg, argv)
        a = build_parser().parse_args(argv)
        if a.subcommand is None:
            raise DomainError("a subcommand is required: " + ", ".join(SUBCOMMANDS))
        cols, rows, meta = _COMMANDS[a.subcommand](a)
        job = _job(a)
        if a.output == "-":
            write_table(sys.stdout, job, cols, rows, a.format, meta, TOLERANCES)
        else:
            with open(a.output, "w", encoding="utf-8", newline="") as fh:
                write_table(fh, job, cols, rows, a.format, meta, TOLERANCES)
        if a.subcommand == "verify" and meta["failed"] != "none":
            return 1
        return 0
    except ConvergenceError as exc:
        print(f"rabiq: ConvergenceError: {exc}", file=sys.stderr)
        return 2
    except RabiqError as exc:
        print(f"rabiq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"rabiq: DomainError: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    """Console-script entry point."""
    sys.exit(run())
