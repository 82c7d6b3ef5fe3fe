"""Command-line front end: parameter sweeps written as CSV/JSON plus SVG plots.

Exit codes: 0 when at least one row succeeded, 1 when every row failed,
2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from . import boundary, bulk, chain, quadratic, weyl
from .errors import (
    ConstraintViolated,
    GapClosed,
    NoConvergence,
    NoStableWindow,
    WeylSchaError,
)
from .scha import SchaConfig
from .svgplot import Curve, PlotSpec, emit_svg

log = logging.getLogger("weylscha")

COMMANDS = ("normal-form", "bulk-sf", "chain-phase", "classical-nc", "weyl-demo")
STATUSES = ("ok", "gap-closed", "no-window", "no-convergence")
FLOAT_FMT = "%.12e"


class ConfigError(Exception):
    """Invalid configuration; the message lists every problem found."""


@dataclass
class RunConfig:
    command: str
    params: dict
    output_path: Path
    format: str = "csv"
    threads: int = 1
    svg_path: Path | None = None
    scha: SchaConfig = field(default_factory=SchaConfig)


# ---------------------------------------------------------------- parsing

def _add_common(p):
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    p.add_argument("--output", "-o", dest="output", help="result file (default ./out/<command>-<timestamp>.<fmt>)")
    p.add_argument("--format", dest="format", choices=("csv", "json"))
    p.add_argument("--threads", type=int)
    p.add_argument("--svg", dest="svg", help="also write an SVG plot here")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--mixing", type=float)


def _add_mu_range(p):
    p.add_argument("--mu-min", dest="mu_min", type=float)
    p.add_argument("--mu-max", dest="mu_max", type=float)
    p.add_argument("--mu-steps", dest="mu_steps", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="weylscha", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("normal-form", help="normal modes and correlators of a quadratic form")
    p.add_argument("--input", help="matrix file: N, then A2, B2 and optional X blocks")
    p.add_argument("--beta", type=float)
    p.add_argument("--hbar", type=float)
    _add_common(p)

    p = sub.add_parser("bulk-sf", help="bulk spin-flop field versus anisotropy")
    p.add_argument("--dim", type=int)
    _add_mu_range(p)
    p.add_argument("--spin", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--beta", type=float)
    _add_common(p)

    p = sub.add_parser("chain-phase", help="critical fields of the odd open chain")
    p.add_argument("--n", dest="n", type=int)
    _add_mu_range(p)
    p.add_argument("--spin", type=float)
    _add_common(p)

    p = sub.add_parser("classical-nc", help="classical critical size N_c on a (mu, h) grid")
    _add_mu_range(p)
    p.add_argument("--h-min", dest="h_min", type=float)
    p.add_argument("--h-max", dest="h_max", type=float)
    p.add_argument("--grid", type=int)
    _add_common(p)

    p = sub.add_parser("weyl-demo", help="report of symbol identities")
    _add_common(p)
    return parser


DEFAULTS = {
    "normal-form": {"beta": math.inf, "hbar": 1.0},
    "bulk-sf": {"dim": 1, "spin": 0.5, "grid": 1024, "beta": math.inf},
    "chain-phase": {"spin": 0.5},
    "classical-nc": {"grid": 101},
    "weyl-demo": {},
}
REQUIRED = {
    "normal-form": ("input",),
    "bulk-sf": ("mu_min", "mu_max", "mu_steps"),
    "chain-phase": ("n", "mu_min", "mu_max", "mu_steps"),
    "classical-nc": ("mu_min", "mu_max", "h_min", "h_max"),
    "weyl-demo": (),
}
COMMON_KEYS = ("config", "output", "format", "threads", "svg", "tol", "max_iter", "mixing")


def read_config_file(path):
    """Parse ``key = value`` lines; '#' starts a comment, dashes in keys become underscores."""
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


def _default_threads():
    env = os.environ.get("WEYLSCHA_THREADS")
    if env:
        return env
    return os.cpu_count() or 1


def parse_config(argv=None, now=None) -> RunConfig:
    """Build a validated RunConfig; raises ConfigError listing every invalid field."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise ConfigError("a subcommand is required: " + ", ".join(COMMANDS))
    cmd = ns.command
    given = {k: v for k, v in vars(ns).items() if v is not None}
    merged = dict(DEFAULTS[cmd])
    errors = []
    if ns.config:
        try:
            file_vals = read_config_file(ns.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        sub = parser._subparsers._group_actions[0].choices[cmd]
        types = {a.dest: a.type for a in sub._actions}
        for key, raw in file_vals.items():
            if key not in types or key in ("config", "help"):
                errors.append(f"unknown key {key!r} in config file")
                continue
            conv = types[key] or str
            try:
                merged[key] = conv(raw)
            except ValueError:
                errors.append(f"{key}: cannot parse {raw!r}")
    merged.update(given)

    for key in REQUIRED[cmd]:
        if key not in merged:
            errors.append(f"{key.replace('_', '-')} is required")

    def check(cond, msg):
        if not cond:
            errors.append(msg)

    if "mu_min" in merged and "mu_max" in merged:
        check(merged["mu_min"] <= merged["mu_max"], "mu-min must not exceed mu-max")
        check(merged["mu_min"] > 0, "mu must be positive")
    if "mu_steps" in merged:
        check(merged["mu_steps"] >= 1, "mu-steps must be >= 1")
    if "h_min" in merged and "h_max" in merged:
        check(merged["h_min"] <= merged["h_max"], "h-min must not exceed h-max")
    if "n" in merged:
        check(merged["n"] >= 3 and merged["n"] % 2 == 1, "N must be odd (and >= 3)")
    if "spin" in merged:
        check(merged["spin"] > 0 and abs(2 * merged["spin"] - round(2 * merged["spin"])) < 1e-12,
              "spin must be a positive multiple of 1/2")
    if cmd == "bulk-sf":
        check(merged.get("dim") in (1, 2, 3), "dim must be 1, 2 or 3")
        check(merged.get("grid", 0) >= 2 and merged.get("grid", 1) % 2 == 0, "grid must be even and >= 2")
    if cmd == "classical-nc":
        check(merged.get("grid", 0) >= 1, "grid must be >= 1")
    if "beta" in merged:
        check(merged["beta"] > 0, "beta must be positive")
    if "input" in merged:
        check(Path(merged["input"]).is_file(), f"input file {merged['input']!r} not found")

    threads = merged.get("threads", _default_threads())
    try:
        threads = int(threads)
        check(threads >= 1, "threads must be >= 1")
    except (TypeError, ValueError):
        errors.append(f"threads: cannot parse {threads!r}")
    fmt = merged.get("format", "csv")
    check(fmt in ("csv", "json"), "format must be csv or json")

    scha_kw = {k: merged[k] for k in ("tol", "max_iter", "mixing") if k in merged}
    scha = SchaConfig()
    try:
        scha = SchaConfig(**scha_kw)
    except ValueError as exc:
        errors.append(str(exc))

    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))

    if "output" in merged:
        out = Path(merged["output"])
    else:
        stamp = (now or datetime.now()).strftime("%Y%m%d-%H%M%S")
        out = Path("out") / f"{cmd}-{stamp}.{fmt}"
    params = {k: v for k, v in merged.items() if k not in COMMON_KEYS and k not in ("command", "verbose")}
    svg = Path(merged["svg"]) if "svg" in merged else None
    return RunConfig(cmd, params, out, fmt, threads, svg, scha)


# ---------------------------------------------------------------- workers

def _status_of(exc):
    if isinstance(exc, NoStableWindow):
        return "no-window"
    if isinstance(exc, NoConvergence):
        return "no-convergence"
    return "gap-closed"


def _linspace(lo, hi, n):
    return [float(v) for v in np.linspace(lo, hi, n)] if n > 1 else [float(lo)]


def bulk_row(mu, p, scha):
    S_tilde = p["spin"] + 0.5
    lat = bulk.BulkLattice(p["dim"], p["grid"], mu, 0.0, S_tilde)
    h_cl = lat.z * math.sqrt(max(mu * mu - 1, 0.0))
    row = {"mu": mu, "h_cl": h_cl, "h_scha": math.nan, "h_first_order": math.nan,
           "D": math.nan, "D_prime": math.nan, "theta": math.nan, "mu_eff": math.nan,
           "converged": False, "iterations": 0, "residual": math.nan, "status": "ok"}
    try:
        st = bulk.scha_bulk(lat, scha, p.get("beta", math.inf))
    except WeylSchaError as exc:
        row["status"] = _status_of(exc)
        return row
    _, h_q, h_1 = bulk.h_sf(st)
    row.update(h_scha=h_q, h_first_order=h_1, D=st.D, D_prime=st.D_prime, theta=st.theta,
               mu_eff=st.mu_eff, converged=st.converged, iterations=st.iterations,
               residual=st.residual)
    return row


def chain_row(mu, p, scha):
    N = p["n"]
    row = {"N": N, "mu": mu}
    for k in ("h_minus_cl", "h_plus_cl", "h_minus_HA", "h_plus_HA", "h_minus_scha", "h_plus_scha"):
        row[k] = math.nan
    row.update(converged=False, iterations=0, residual=math.nan, status="ok")
    try:
        row["h_minus_cl"], row["h_plus_cl"] = boundary.solve_h_pm(N, mu)
        row["h_minus_HA"], row["h_plus_HA"], _ = chain.scha_chain(chain.ChainModel(N, mu))
        hm, hp, st = chain.scha_chain(chain.ChainModel(N, mu, 0.0, p["spin"] + 0.5), scha)
    except WeylSchaError as exc:
        row["status"] = _status_of(exc)
        last = getattr(exc, "last_state", None)
        if last is not None:
            row["iterations"] = last.iterations
            row["residual"] = last.residual
        return row
    row.update(h_minus_scha=hm, h_plus_scha=hp, converged=st.converged, iterations=st.iterations,
               residual=st.residual)
    return row


def nc_row(point, p, scha):
    mu, h = point
    return {"mu": mu, "h": h, "N_c": boundary.n_critical(h, mu), "status": "ok"}


def read_matrix_file(path):
    """Blocks A2, B2 and optionally X after a first line holding N; blank lines separate blocks."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty matrix file")
    try:
        n = int(lines[0].split()[0])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: first line must hold N") from exc
    blocks, cur = [], []
    for line in lines[1:]:
        if line.strip():
            cur.append([float(v) for v in line.split()])
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    if len(blocks) not in (2, 3):
        raise ConfigError(f"{path}: expected 2 or 3 matrix blocks, found {len(blocks)}")
    mats = []
    for b in blocks:
        m = np.array(b, dtype=float)
        if m.shape != (n, n):
            raise ConfigError(f"{path}: block of shape {m.shape}, expected {(n, n)}")
        mats.append(m)
    return mats


def normal_form_rows(p):
    mats = read_matrix_file(p["input"])
    X = mats[2] if len(mats) == 3 else None
    H = quadratic.QuadraticHamiltonian(mats[0], mats[1], X, hbar_eff=p["hbar"])
    try:
        basis = quadratic.normal_form(H)
    except ConstraintViolated as exc:
        raise ConfigError(str(exc)) from exc
    except WeylSchaError as exc:
        return [{"mode": 0, "omega": math.nan, "alpha": math.nan, "q2": math.nan,
                 "p2": math.nan, "status": _status_of(exc)}]
    C = quadratic.correlators(H, basis, p["beta"])
    return [{"mode": k, "omega": float(basis.omega[k]), "alpha": float(C.alpha[k]),
             "q2": float(C.Cqq[k, k]), "p2": float(C.Cpp[k, k]), "status": "ok"}
            for k in range(H.n_dof)]


def weyl_demo_rows():
    """Identity checks on the symbol algebra; each row reports pass or fail."""
    rng = np.random.default_rng(12345)
    HP = weyl.HolomorphicPolynomial
    rows = []

    def add(name, err, tol):
        rows.append({"check": name, "error": float(err), "tolerance": tol,
                     "passed": bool(err <= tol), "status": "ok"})

    n = HP({(1, 1): 1.0})
    target = HP({(1, 1): 1.0, (0, 0): -0.5}, weyl.Ordering.WEYL)
    add("normal_to_weyl(a*a) = a*a - 1/2", weyl.normal_to_weyl(n).max_abs_diff(target), 1e-15)
    worst_path = worst_trip = 0.0
    for _ in range(50):
        terms = {}
        for _ in range(6):
            m, k = rng.integers(0, 5, size=2)
            terms[(int(m), int(k))] = complex(*rng.normal(size=2))
        P = HP(terms)
        W = weyl.normal_to_weyl(P)
        worst_path = max(worst_path, W.max_abs_diff(weyl.gaussian_smoothing_weyl(P)))
        worst_trip = max(worst_trip, weyl.weyl_to_normal(W).max_abs_diff(P))
    add("gaussian smoothing = exp(-d2/2) on 50 random polynomials", worst_path, 1e-12)
    add("weyl_to_normal(normal_to_weyl(P)) = P", worst_trip, 1e-12)
    for f in (0.5, 1.0, 2.0):
        rho = weyl.thermal_ho_weyl(2 * f, 1.0)
        add(f"thermal symbol integral = 1/(2 sinh {f:g})",
            abs(rho.phase_space_integral() - 1 / (2 * math.sinh(f))), 1e-12)
    add("single_mode_bogoliubov(5, 3) = 4", abs(quadratic.single_mode_bogoliubov(5, 3) - 4), 1e-12)
    return rows


def _run_parallel(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_sweep(config: RunConfig):
    """Compute all rows in sweep order and write the result file (and SVG if asked)."""
    p, cmd = config.params, config.command
    if cmd == "bulk-sf":
        mus = _linspace(p["mu_min"], p["mu_max"], p["mu_steps"])
        records = _run_parallel(lambda mu: bulk_row(mu, p, config.scha), mus, config.threads)
    elif cmd == "chain-phase":
        mus = _linspace(p["mu_min"], p["mu_max"], p["mu_steps"])
        records = _run_parallel(lambda mu: chain_row(mu, p, config.scha), mus, config.threads)
    elif cmd == "classical-nc":
        g = p["grid"]
        pts = [(mu, h) for mu in _linspace(p["mu_min"], p["mu_max"], g)
               for h in _linspace(p["h_min"], p["h_max"], g)]
        records = _run_parallel(lambda pt: nc_row(pt, p, config.scha), pts, config.threads)
    elif cmd == "normal-form":
        records = normal_form_rows(p)
    else:
        records = weyl_demo_rows()
    write_records(records, config.output_path, config.format)
    if config.svg_path is not None:
        emit_svg(records, plot_spec(cmd, records, p), config.svg_path)
    return records


# ---------------------------------------------------------------- output

def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(FLOAT_FMT % v) if math.isfinite(v) else str(v)
    return v


def format_records(records, fmt="csv"):
    if fmt == "json":
        data = [{k: _json_value(v) for k, v in r.items()} for r in records]
        return json.dumps(data, indent=1) + "\n"
    buf = io.StringIO()
    if records:
        writer = csv.writer(buf, lineterminator="\n")
        cols = list(records[0])
        writer.writerow(cols)
        for r in records:
            writer.writerow([_cell(r[c]) for c in cols])
    return buf.getvalue()


def write_records(records, path, fmt="csv"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_records(records, fmt), encoding="utf-8")
    return path


def _nc_contours(records, p):
    """Curves h(mu) where N_c crosses each odd integer, by linear interpolation along h."""
    by_mu = {}
    for r in records:
        by_mu.setdefault(r["mu"], []).append((r["h"], r["N_c"]))
    finite = [r["N_c"] for r in records if math.isfinite(r["N_c"])]
    if not finite:
        return []
    top = int(min(max(finite), 41))
    curves = []
    for N in range(3, top + 1, 2):
        pts = []
        for mu in sorted(by_mu):
            col = sorted(by_mu[mu])
            for (h0, n0), (h1, n1) in zip(col, col[1:]):
                if math.isfinite(n0) and math.isfinite(n1) and (n0 - N) * (n1 - N) < 0:
                    pts.append((mu, h0 + (N - n0) * (h1 - h0) / (n1 - n0)))
        if pts:
            curves.append(Curve(f"N = {N}", sorted(pts, key=lambda t: (t[0], t[1]))))
    return curves


def plot_spec(cmd, records, p):
    if cmd == "bulk-sf":
        xs = [r["mu"] for r in records]
        return PlotSpec("bulk spin-flop field", "mu", "h_SF", [
            Curve("classical", list(zip(xs, (r["h_cl"] for r in records)))),
            Curve("SCHA", list(zip(xs, (r["h_scha"] for r in records)))),
            Curve("first order", list(zip(xs, (r["h_first_order"] for r in records)))),
        ])
    if cmd == "chain-phase":
        xs = [r["mu"] for r in records]
        curves = [Curve(f"{name} {side}", list(zip(xs, (r[f"h_{side}_{key}"] for r in records))))
                  for key, name in (("cl", "classical"), ("HA", "HA"), ("scha", "SCHA"))
                  for side in ("minus", "plus")]
        return PlotSpec(f"odd chain N = {p['n']}, S = {p['spin']:g}", "mu", "h", curves)
    if cmd == "classical-nc":
        curves = _nc_contours(records, p)
        if not curves:
            r = records[0]
            curves = [Curve("N_c", [(r["mu"], r["h"])])]
        return PlotSpec("classical critical size", "mu", "h", curves)
    raise ConfigError(f"no plot available for {cmd}")


def main(argv=None):
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"weylscha: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if "-v" in (argv or sys.argv[1:]) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        records = run_sweep(config)
    except ConfigError as exc:
        print(f"weylscha: {exc}", file=sys.stderr)
        return 2
    if config.command == "weyl-demo":
        for r in records:
            print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}  (error {r['error']:.2e})")
        return 0 if all(r["passed"] for r in records) else 1
    n_ok = sum(r["status"] == "ok" for r in records)
    print(f"{config.command}: {n_ok}/{len(records)} rows ok -> {config.output_path}")
    return 0 if n_ok else 1


if __name__ == "__main__":
    sys.exit(main())
