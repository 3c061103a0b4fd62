"""Command-line interface: ``conekernel <command> [options]``.

Commands
--------
eval         kernel values on a (t, r, s, d_h) grid as CSV
verify       invariant suites with a pass/fail table
fitbound     fit the Gaussian upper-bound constants, JSON report
lemma-check  fit the key-lemma envelope constants, JSON report
fd-compare   finite-volume evolution against the series kernel

Every run ends with a final stdout line ``status=ok``, ``status=fail`` or
``status=usage``. Exit codes: 0 success, 1 failed check, 2 usage or
configuration error, 3 truncation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import dataclass
from itertools import product

import numpy as np

from .cone_geometry import ConePoint
from .cross_section import CircleSection, SphereSection, read_spectral_file
from .errors import ConeKernelError, GridTooCoarse, InvalidPoint, SpectralFileError, TruncationFailure
from .heat_kernel import DEFAULT_C_LIST, HeatKernelEvaluator, format_float
from .oracles import fd_versus_series
from .suites import SUITES

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_TRUNCATION = 0, 1, 2, 3

DEFAULTS = {
    "L": 2.0 * math.pi,
    "n": 3,
    "a": None,  # section dependent, see build_section
    "tol": 1e-10,
    "k_max": 4096,
    "c_list": ",".join(format(c, "g") for c in DEFAULT_C_LIST),
    "suite": "all",
    "eps0": math.pi,
    "t0": 0.1,
    "t1": 0.4,
    "nr": 800,
    "ntheta": 256,
    "dt": 5e-4,
    "rmax": 8.0,
    "fd_tol": 1e-2,
}


class UsageError(Exception):
    """Bad command line or configuration; exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------------------- parsing
_PI_TOKEN = re.compile(r"^([+-]?\d*\.?\d*)\*?pi(?:/(\d*\.?\d+))?$")


def parse_number(text: str) -> float:
    """A float, or a multiple of pi such as ``pi``, ``2pi``, ``pi/2``, ``0.5*pi``."""
    token = text.strip().lower()
    m = _PI_TOKEN.match(token)
    if m:
        factor = m.group(1)
        factor = 1.0 if factor in ("", "+") else (-1.0 if factor == "-" else float(factor))
        divisor = float(m.group(2)) if m.group(2) else 1.0
        return factor * math.pi / divisor
    try:
        return float(token)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def parse_grid(text: str) -> list[float]:
    """Comma-separated values and inclusive ranges ``start:stop:step``."""
    values: list[float] = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) == 1:
            values.append(parse_number(parts[0]))
        elif len(parts) == 3:
            start, stop, step = (parse_number(p) for p in parts)
            if step <= 0.0:
                raise UsageError(f"range step must be positive in {item!r}")
            count = math.floor((stop - start) / step + 1e-9) + 1
            values.extend(start + k * step for k in range(max(count, 0)))
        else:
            raise UsageError(f"grid entries are numbers or start:stop:step, got {item!r}")
    return values


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


@dataclass
class RunConfig:
    """Merged settings: flags, then config file, then built-in defaults."""

    command: str
    values: dict

    def get(self, key, default=None):
        value = self.values.get(key)
        if value is None:
            value = DEFAULTS.get(key, default) if default is None else default
        return value

    def number(self, key, default=None) -> float | None:
        value = self.get(key, default)
        return None if value is None else (value if isinstance(value, (int, float)) else parse_number(value))

    def integer(self, key, default=None) -> int | None:
        value = self.number(key, default)
        if value is None:
            return None
        if value != int(value):
            raise UsageError(f"--{key.replace('_', '-')} must be an integer, got {value}")
        return int(value)

    def grid(self, key) -> list[float] | None:
        value = self.values.get(key)
        return None if value is None else parse_grid(value)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file; flags take precedence")
    p.add_argument("--section", choices=["circle", "sphere", "matrix"], help="cross-section kind")
    p.add_argument("--L", dest="L", help="circle circumference (default 2pi)")
    p.add_argument("--n", help="cone dimension for sphere sections (default 3)")
    p.add_argument("--a", help="potential constant V_0 = a")
    p.add_argument("--file", help="spectral data file for --section matrix")
    p.add_argument("--tol", help="series truncation tolerance (default 1e-10)")
    p.add_argument("--k-max", dest="k_max", help="most eigenvalue groups a series may use (default 4096)")
    p.add_argument("--out", help="output path (default stdout)")


def _add_grid(p: argparse.ArgumentParser) -> None:
    for name in ("t", "r", "s", "dh"):
        p.add_argument(f"--{name}", help="comma list or start:stop:step range")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conekernel", description="Heat kernels on metric cones with inverse-square potentials.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("eval", help="kernel values on a grid (CSV)")
    _add_common(p)
    _add_grid(p)

    p = sub.add_parser("verify", help="run invariant suites")
    _add_common(p)
    p.add_argument("--suite", help="comma list of suites or 'all': " + ",".join(SUITES))

    p = sub.add_parser("fitbound", help="fit Gaussian bound constants (JSON)")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--c-list", dest="c_list", help="candidate c values (default 2,4,8,16)")
    p.add_argument("--csv", help="also write the scan rows t,r,s,d_h,kernel,bound,ratio")
    p.add_argument("--workers", help="evaluation threads (default 1)")

    p = sub.add_parser("lemma-check", help="fit key-lemma envelope constants (JSON)")
    _add_common(p)
    p.add_argument("--z", help="values of rs/2t")
    p.add_argument("--dh", help="section distances")
    p.add_argument("--eps0", help="large-z branch boundary (default pi)")

    p = sub.add_parser("fd-compare", help="finite-volume run against the series (circle sections)")
    _add_common(p)
    p.add_argument("--t0", help="seed time (default 0.1)")
    p.add_argument("--t1", help="comparison time (default 0.4)")
    p.add_argument("--nr", help="radial cells (default 800)")
    p.add_argument("--ntheta", help="angular samples (default 256)")
    p.add_argument("--dt", help="time step (default 5e-4)")
    p.add_argument("--rmax", help="outer radius (default 8)")
    p.add_argument("--fd-tol", dest="fd_tol", help="relative agreement required (default 1e-2)")
    return parser


def parse_config(argv) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(parser.format_usage() + "conekernel: a command is required")
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    merged = read_config(args.config) if args.config else {}
    merged.update(flags)
    return RunConfig(args.command, merged)


# ---------------------------------------------------------------------------- commands
def build_section(cfg: RunConfig, required: bool = True):
    kind = cfg.get("section")
    if kind is None:
        if required:
            raise UsageError("--section is required (circle, sphere or matrix)\n" + build_parser().format_usage())
        return None
    try:
        if kind == "circle":
            return CircleSection(cfg.number("L"), cfg.number("a", 1.0))
        if kind == "sphere":
            return SphereSection(cfg.integer("n"), cfg.number("a", 0.0))
        if kind == "matrix":
            path = cfg.get("file")
            if path is None:
                raise UsageError("--section matrix needs --file")
            return read_spectral_file(path)
    except (ValueError, SpectralFileError, OSError) as exc:
        raise UsageError(f"invalid section: {exc}") from None
    raise UsageError(f"unknown section kind {kind!r}")


def make_evaluator(cfg: RunConfig, section) -> HeatKernelEvaluator:
    tol = cfg.number("tol")
    if not 0.0 < tol < 1.0:
        raise UsageError(f"--tol must lie in (0, 1), got {tol}")
    k_max = cfg.integer("k_max")
    if k_max < 1:
        raise UsageError(f"--k-max must be >= 1, got {k_max}")
    return HeatKernelEvaluator(section, tol=tol, k_max=k_max)


def _point_grid(cfg: RunConfig, section):
    grids = {k: cfg.grid(k) for k in ("t", "r", "s", "dh")}
    missing = [k for k, v in grids.items() if v is None]
    if missing:
        raise UsageError("missing grid flags: " + ", ".join("--" + k for k in missing))
    if any(v <= 0.0 for v in grids["r"] + grids["s"]):
        raise UsageError("radial coordinates must be > 0: cone tip excluded")
    if any(v <= 0.0 for v in grids["t"]):
        raise UsageError("times must be > 0")
    bad = [d for d in grids["dh"] if not 0.0 <= d <= section.diameter + 1e-12]
    if bad:
        raise UsageError(f"d_h values {bad} outside [0, {section.diameter}]")
    pairs = {d: section.points_at_distance(d) for d in grids["dh"]}
    out = []
    for t, r, s, d in product(grids["t"], grids["r"], grids["s"], grids["dh"]):
        y, y2 = pairs[d]
        out.append((t, ConePoint(r, y), ConePoint(s, y2)))
    return out


class _Output:
    def __init__(self, path):
        self.path = path
        self.fh = None

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def cmd_eval(cfg: RunConfig) -> int:
    section = build_section(cfg)
    ev = make_evaluator(cfg, section)
    grid = _point_grid(cfg, section)
    if not grid:
        raise UsageError("empty grid")
    rows = []
    for t, p, q in grid:
        res = ev.evaluate_full(t, p, q)
        if res.roundoff > ev.tol:
            print(f"warning: t={t:g} r={p.r:g} s={q.r:g}: cancellation limits relative accuracy "
                  f"to about {res.roundoff:.1e}", file=sys.stderr)
        rows.append((t, p.r, q.r, section.distance(p.y, q.y), res.value))
    with _Output(cfg.get("out")) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "r", "s", "d_h", "kernel"])
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    names = [s.strip() for s in str(cfg.get("suite")).split(",") if s.strip()]
    if names == ["all"]:
        names = list(SUITES)
    unknown = [s for s in names if s not in SUITES]
    if unknown or not names:
        raise UsageError(f"unknown suites {unknown}; choose from {', '.join(SUITES)} or all")
    section = build_section(cfg, required=False)
    results = []
    for name in names:
        kwargs = {}
        if name == "euclidean":
            kwargs["n"] = cfg.integer("n")
        elif name in ("scaling", "symmetry", "truncation") and section is not None:
            kwargs["sections"] = [section]
        elif name == "semigroup" and isinstance(section, CircleSection):
            kwargs["section"] = section
        elif name == "fd" and isinstance(section, CircleSection):
            kwargs.update(L=section.L, a=section.a)
        res = SUITES[name](**kwargs)
        results.append(res)
        print(res.line(), flush=True)
    ok = all(r.passed for r in results)
    if cfg.get("out"):
        with open(cfg.get("out"), "w") as fh:
            json.dump([{"suite": r.name, "passed": r.passed, "worst": r.worst, "threshold": r.threshold,
                        "checked": r.checked} for r in results], fh, indent=2)
    print(f"{sum(r.passed for r in results)}/{len(results)} suites passed")
    return EXIT_OK if ok else EXIT_FAIL


def default_bound_grid(ev: HeatKernelEvaluator):
    """``rs/2t`` from 1e-3 to 1e2 and ``d_h`` over ``[0, min(pi, diameter)]``."""
    z = np.logspace(-3, 2, 16)
    dh = np.linspace(0.0, min(math.pi, ev.section.diameter), 7)
    return ev.bound_grid(z, dh, t_values=(0.5, 1.0, 2.0), aspects=(1.0, 4.0))


def cmd_fitbound(cfg: RunConfig) -> int:
    section = build_section(cfg)
    ev = make_evaluator(cfg, section)
    if any(cfg.values.get(k) is not None for k in ("t", "r", "s", "dh")):
        grid = _point_grid(cfg, section)
    else:
        grid = default_bound_grid(ev)
    if not grid:
        raise UsageError("empty grid")
    c_list = parse_grid(cfg.get("c_list"))
    if not c_list or min(c_list) <= 0.0:
        raise UsageError("--c-list needs positive values")
    try:
        report = ev.fit_bound_constants(grid, c_list, workers=cfg.integer("workers", 1))
    except ValueError as exc:
        print(f"bound fit impossible: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if report.unresolved:
        print(f"{report.unresolved} of {report.grid_size} grid points excluded: cancellation beyond "
              "1e-6 relative", file=sys.stderr)
    with _Output(cfg.get("out")) as fh:
        fh.write(report.to_json() + "\n")
    if cfg.get("csv"):
        report.write_csv(cfg.get("csv"))
    if not report.finite:
        print(f"bound ratios diverge on the grid (worst point {report.worst_point})", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_lemma(cfg: RunConfig) -> int:
    section = build_section(cfg)
    ev = make_evaluator(cfg, section)
    z = cfg.grid("z") or list(np.logspace(-4, 2, 25))
    dh = cfg.grid("dh") or list(np.linspace(0.0, section.diameter, 9))
    try:
        report = ev.lemma_key_check(z, dh, eps0=cfg.number("eps0"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with _Output(cfg.get("out")) as fh:
        fh.write(json.dumps(report.to_dict(), indent=2) + "\n")
    if report.unresolved:
        print(f"{report.unresolved} grid points excluded: cancellation beyond 1e-6 relative", file=sys.stderr)
    finite = bool(report.constants) and all(math.isfinite(v) for v in report.constants.values())
    return EXIT_OK if finite else EXIT_FAIL


def cmd_fd(cfg: RunConfig) -> int:
    kind = cfg.get("section", "circle")
    if kind != "circle":
        raise UsageError("fd-compare supports circle sections only (n = 2)")
    try:
        section = CircleSection(cfg.number("L", 3.0 * math.pi), cfg.number("a", 1.0))
    except ValueError as exc:
        raise UsageError(f"invalid section: {exc}") from None
    t0, t1 = cfg.number("t0"), cfg.number("t1")
    if not 0.0 < t0 < t1:
        raise UsageError("need 0 < t0 < t1")
    cmp, sol = fd_versus_series(section, t0=t0, t1=t1, r_max=cfg.number("rmax"), nr=cfg.integer("nr"),
                                n_theta=cfg.integer("ntheta"), dt=cfg.number("dt"))
    if cfg.get("out"):
        sol.write_csv(cfg.get("out"))
    fd_tol = cfg.number("fd_tol")
    ok = cmp.max_rel_error <= fd_tol and cmp.mass_nonincreasing
    print(f"max_rel_error={cmp.max_rel_error:.3e} threshold={fd_tol:g} points={cmp.points_compared} "
          f"mass_t0={cmp.mass_t0:.6f} mass_t1={cmp.mass_t1:.6f} worst_r={cmp.worst[0]:.4f} "
          f"worst_theta={cmp.worst[1]:.4f}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "fitbound": cmd_fitbound,
            "lemma-check": cmd_lemma, "fd-compare": cmd_fd}


def _describe_point(point) -> str:
    if point is None or len(point) != 5:
        return str(point)
    t, r, s, y, y2 = point
    return (f"t={format_float(t)} r={format_float(r)} s={format_float(s)} "
            f"y={np.ravel(y).tolist()} y'={np.ravel(y2).tolist()}")


def main(argv=None) -> int:
    status = {EXIT_OK: "ok", EXIT_FAIL: "fail", EXIT_USAGE: "usage", EXIT_TRUNCATION: "fail"}
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        code = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        code = EXIT_USAGE
    except InvalidPoint as exc:
        print(f"invalid point: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except TruncationFailure as exc:
        print(f"truncation failure at point {_describe_point(exc.point)}: tail bound {exc.tail_bound:.3e}",
              file=sys.stderr)
        code = EXIT_TRUNCATION
    except GridTooCoarse as exc:
        print(f"grid too coarse: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except ConeKernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    except SystemExit as exc:  # --help
        code = EXIT_OK if not exc.code else EXIT_USAGE
    sys.stdout.flush()
    print(f"status={status[code]}")
    return code


if __name__ == "__main__":
    sys.exit(main())
