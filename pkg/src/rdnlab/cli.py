"""Batch driver: ``rdnlab snapshots|separation|certify|invnet-test``.

Configuration is a flat INI file with a single ``[experiment]`` section.
List values are comma separated; ``a:b:n`` is shorthand for ``n`` evenly
spaced values from ``a`` to ``b``; numbers may be written as multiples of
``pi`` (``2pi``, ``1.1*pi``).

Example::

    [experiment]
    problem = color
    times = 0:0.35:28
    mu1 = 0.25, 0.5
    mu2 = 2pi, 6pi
    mu3 = pi, 1.1pi
    test_times = 0.1, 0.2, 0.35
    n_delta = 4097
    sweep = 4, 6, 8, 12, 16, 24, 32, 40, 48
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import experiments as ex
from .hyperbolic import BurgersProblem, ColorProblem, snapshot_grid, write_shock_path_csv
from .invnet import MonotonicityError, build_inverse, check_monotone
from .netcore import DeepNetwork
from .nwidth import BallError, DependenceError, lower_bound_certificate, write_certificate_csv
from .reduction import ConvergenceError, write_snapshots_csv

log = logging.getLogger("rdnlab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
PROBLEMS = ("color", "burgers", "advection")
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

DEFAULT_SWEEP = {
    "color": "4, 6, 8, 12, 16, 24, 32, 40, 48",
    "advection": "4, 8, 16, 32, 64",
    "burgers": "6, 7, 8, 9, 10, 11, 12, 13, 14",
}
DEFAULT_ALPHA = {"color": 0.5, "advection": 0.5, "burgers": 1.5}


class ConfigError(ValueError):
    pass


_NUM = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*(pi)?$")


def parse_number(text: str) -> float:
    s = text.strip()
    m = _NUM.match(s)
    if not s or m is None or (m.group(1) is None and m.group(2) is None):
        raise ConfigError(f"not a number: {text!r}")
    v = float(m.group(1)) if m.group(1) is not None else 1.0
    return v * math.pi if m.group(2) else v


def parse_list(text: str) -> list[float]:
    s = text.strip()
    if not s:
        raise ConfigError("empty list")
    if ":" in s and "," not in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range needs a:b:n, got {text!r}")
        n = int(parts[2])
        if n < 1:
            raise ConfigError(f"range count must be >= 1 in {text!r}")
        return [float(v) for v in np.linspace(parse_number(parts[0]), parse_number(parts[1]), n)]
    return [parse_number(p) for p in s.split(",")]


def _int_list(text: str) -> list[int]:
    vals = parse_list(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise ConfigError(f"expected positive integers, got {text!r}")
    return [int(v) for v in vals]


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    times: tuple
    mus: tuple
    test_times: tuple
    n_delta: int
    sweep: tuple
    alpha: float
    x0: float = 0.3
    n_nets: int = 50
    n_points: int = 512
    l_inv: tuple = (4, 8, 12)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        except configparser.Error as err:
            raise ConfigError(str(err)) from err
        if "experiment" not in cp:
            raise ConfigError("missing [experiment] section")
        return cls.from_mapping(dict(cp["experiment"]))

    @classmethod
    def from_mapping(cls, sec: dict) -> "ExperimentConfig":
        problem = sec.get("problem", "").strip()
        if problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {problem!r}")
        default_times = {"color": "0:0.35:28", "advection": "0:1:256", "burgers": "0:3:256"}
        times = parse_list(sec.get("times", default_times[problem]))
        if problem == "color":
            axes = [parse_list(sec.get(k, d)) for k, d in
                    (("mu1", "0.3"), ("mu2", "2pi"), ("mu3", "pi"))]
            mus = tuple(tuple(float(v) for v in mu) for mu in
                        np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3))
        else:
            mus = (None,)
        default_test = {"color": "0.1, 0.2, 0.35", "advection": "0:1:17", "burgers": "1.0, 2.0, 2.9"}
        test_times = parse_list(sec.get("test_times", default_test[problem]))
        try:
            n_delta = int(sec.get("n_delta", "4097"))
        except ValueError as err:
            raise ConfigError(f"n_delta: {err}") from err
        if n_delta < 64:
            raise ConfigError(f"n_delta must be >= 64, got {n_delta}")
        sweep = _int_list(sec.get("sweep", DEFAULT_SWEEP[problem]))
        alpha = parse_number(sec.get("alpha", repr(DEFAULT_ALPHA[problem])))
        x0 = parse_number(sec.get("x0", "0.3"))
        n_nets = int(parse_number(sec.get("n_nets", "50")))
        n_points = int(parse_number(sec.get("n_points", "512")))
        l_inv = _int_list(sec.get("l_inv", "4, 8, 12"))
        return cls(problem, tuple(times), mus, tuple(test_times), n_delta, tuple(sweep),
                   alpha, x0, n_nets, n_points, tuple(l_inv))


# ---------------------------------------------------------------------------
# SVG

def write_svg(path, xs, series: dict, xlabel: str, ylabel: str, title: str,
              logy: bool = True) -> None:
    """Line chart with a log-scaled y axis; ``series`` maps label -> values."""
    W, H, L, R, T, B = 640, 420, 80, 150, 40, 60
    xs = np.asarray(xs, dtype=float)
    ys_all = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    ok = np.isfinite(ys_all) & ((ys_all > 0) if logy else True)
    ys_ok = ys_all[ok]
    f = np.log10 if logy else (lambda v: v)
    lo, hi = (math.floor(f(ys_ok.min())), math.ceil(f(ys_ok.max()))) if ys_ok.size else (0, 1)
    if hi <= lo:
        hi = lo + 1
    x0, x1 = float(xs.min()), float(xs.max())
    if x1 <= x0:
        x1 = x0 + 1.0

    def px(x):
        return L + (W - L - R) * (x - x0) / (x1 - x0)

    def py(y):
        return T + (H - T - B) * (hi - f(y)) / (hi - lo)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>',
           f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>']
    for e in range(lo, hi + 1):
        y = T + (H - T - B) * (hi - e) / (hi - lo)
        lab = f"1e{e}" if logy else f"{e}"
        out.append(f'<line x1="{L - 4}" y1="{y:.1f}" x2="{L}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{lab}</text>')
    for x in xs:
        out.append(f'<line x1="{px(x):.1f}" y1="{H - B}" x2="{px(x):.1f}" y2="{H - B + 4}" stroke="black"/>')
        out.append(f'<text x="{px(x):.1f}" y="{H - B + 18}" text-anchor="middle" '
                   f'font-size="11">{x:g}</text>')
    out.append(f'<text x="{(L + W - R) / 2:.1f}" y="{H - 15}" text-anchor="middle" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(T + H - B) / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 18 {(T + H - B) / 2:.1f})">{escape(ylabel)}</text>')
    for k, (name, vals) in enumerate(series.items()):
        col = colors[k % len(colors)]
        pts = [(px(x), py(y)) for x, y in zip(xs, np.asarray(vals, dtype=float))
               if np.isfinite(y) and (y > 0 or not logy)]
        ly = T + 20 * k + 10
        if pts:
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{coords}"/>')
        else:
            name = f"{name} = 0"
        out.append(f'<line x1="{W - R + 10}" y1="{ly}" x2="{W - R + 30}" y2="{ly}" stroke="{col}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{W - R + 35}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# commands

def _color_problem(mu) -> ColorProblem:
    return ex.color_jump_problem(mu)


def cmd_snapshots(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> list[Path]:
    if cfg.problem == "advection":
        problem = ColorProblem.advection()
    elif cfg.problem == "color":
        problem = _color_problem(cfg.mus[0])
    else:
        problem = BurgersProblem(x0=cfg.x0)
    log.info("snapshots: %s, %d times x %d mus", cfg.problem, len(cfg.times), len(cfg.mus))
    snaps = snapshot_grid(problem, cfg.times, cfg.mus, cfg.n_delta, jobs=jobs)
    paths = [out / f"snapshots_{cfg.problem}.csv"]
    write_snapshots_csv(snaps, paths[0])
    if cfg.problem == "burgers":
        paths.append(out / "shock_path.csv")
        write_shock_path_csv(problem, paths[1], cfg.times)
    return paths


def _write_separation(path: Path, res: ex.SeparationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "pod_error", "rdn_error"])
        for m, p, r in zip(res.dof, res.pod_error, res.rdn_error):
            w.writerow([int(m), repr(float(p)), repr(float(r))])


def cmd_separation(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> list[Path]:
    log.info("separation: %s, sweep %s", cfg.problem, cfg.sweep)
    if cfg.problem == "advection":
        res = ex.advection_separation(list(cfg.sweep), n_snap=len(cfg.times),
                                      n_delta=cfg.n_delta, test_times=cfg.test_times)
        res = ex.SeparationResult(res.ms, res.pod_error, res.rdn_error, res.ms)
    elif cfg.problem == "color":
        res = ex.color_separation(list(cfg.sweep), list(cfg.mus), cfg.times, cfg.test_times,
                                  cfg.n_delta, jobs=jobs)
    else:
        res = ex.burgers_separation(list(cfg.sweep), cfg.test_times,
                                    BurgersProblem(x0=cfg.x0), jobs=jobs)
    csv_path = out / f"separation_{cfg.problem}.csv"
    svg_path = out / f"separation_{cfg.problem}.svg"
    _write_separation(csv_path, res)
    write_svg(svg_path, res.dof, {"pod_error": res.pod_error, "rdn_error": res.rdn_error},
              "degrees of freedom M", "worst-case L2 error", f"{cfg.problem}: POD vs RDN")
    return [csv_path, svg_path]


def cmd_certify(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> list[Path]:
    log.info("certify: %s, N in %s, alpha=%g", cfg.problem, cfg.sweep, cfg.alpha)
    if cfg.problem == "advection":
        balls = [ex.advection_ball(N) for N in cfg.sweep]
    elif cfg.problem == "color":
        balls = [ex.color_jump_ball(N, cfg.mus[0]) for N in cfg.sweep]
    else:
        problem = BurgersProblem(x0=cfg.x0)
        balls = [ex.burgers_y_ball(problem, N) for N in cfg.sweep]
    report = lower_bound_certificate(balls, cfg.alpha)
    path = out / f"certificate_{cfg.problem}.csv"
    write_certificate_csv(report, path)
    log.info("certificate %s", "PASS" if report.passed else "FAIL")
    return [path]


def random_monotone_network(rng: np.random.Generator, n_hidden: int = 8) -> DeepNetwork:
    """Non-decreasing PL net on ``[0, 1]``: positive ramps at random knots."""
    knots = np.sort(rng.uniform(0.0, 1.0, n_hidden))
    slopes = rng.uniform(0.05, 2.0, n_hidden)
    w1 = np.ones((n_hidden + 1, 1))
    b1 = np.concatenate([-knots, [0.0]])
    w2 = np.concatenate([slopes, [rng.uniform(0.05, 1.0)]])[None, :]
    return DeepNetwork.from_arrays([w1, w2], [b1, [rng.uniform(-1.0, 1.0)]], [["relu"] * (n_hidden + 1)])


def scalar_bisection(f, y: float, a: float, b: float, steps: int) -> float:
    for _ in range(steps):
        m = 0.5 * (a + b)
        if f(m) > y:
            b = m
        else:
            a = m
    return 0.5 * (a + b)


def cmd_invnet_test(cfg: ExperimentConfig, out: Path, seed: int) -> tuple[list[Path], bool]:
    rng = np.random.default_rng(seed)
    rows = []
    ok = True
    l_invs = cfg.l_inv
    for k in range(cfg.n_nets):
        mono = check_monotone(random_monotone_network(rng))
        lo, hi = mono.image
        y = np.linspace(lo, hi, cfg.n_points)
        for L in l_invs:
            inv = build_inverse(mono, L)
            got = inv(y)
            ref = np.array([scalar_bisection(lambda v: float(mono(np.array([v]))[0]), yy, 0.0, 1.0, L)
                            for yy in y])
            d = float(np.max(np.abs(got - ref)))
            ok &= d <= 1e-9
            rows.append((k, L, d))
    path = out / "invnet_test.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["net", "l_inv", "max_oracle_diff"])
        for k, L, d in rows:
            w.writerow([k, L, repr(d)])
    return [path], ok


# ---------------------------------------------------------------------------
# entry point

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdnlab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["snapshots", "separation", "certify", "invnet-test"])
    p.add_argument("--config", required=True, help="INI file with an [experiment] section")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for per-(t, mu) work")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised commands")
    return p


def _setup_logging() -> None:
    level = os.environ.get("RDNLAB_LOG", "error").strip().lower()
    if level not in LOG_LEVELS:
        raise ConfigError(f"RDNLAB_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        _setup_logging()
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must fit in an unsigned 64-bit integer")
        cfg = ExperimentConfig.from_file(args.config)
    except ValueError as err:
        print(f"rdnlab: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "snapshots":
            paths = cmd_snapshots(cfg, out, args.jobs)
        elif args.command == "separation":
            paths = cmd_separation(cfg, out, args.jobs)
        elif args.command == "certify":
            paths = cmd_certify(cfg, out, args.jobs)
        else:
            paths, ok = cmd_invnet_test(cfg, out, args.seed)
            if not ok:
                print("rdnlab: inverse network disagrees with scalar bisection", file=sys.stderr)
                return EXIT_NUMERIC
    except OSError as err:
        print(f"rdnlab: I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    except (BallError, DependenceError) as err:
        print(f"rdnlab: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MonotonicityError, ConvergenceError, ArithmeticError, FloatingPointError) as err:
        print(f"rdnlab: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"rdnlab: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
