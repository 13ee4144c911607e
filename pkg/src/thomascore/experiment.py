"""Fixed-point versus floating-point error study on random pricing systems.

Every sample draws a rate and a volatility, builds the implicit step for a
call on ``[0, S_max]``, scales the payoff by ``0.45 Z / |y|`` and solves the
one tridiagonal system in double precision and in each fixed-point format.
Absolute differences are accumulated per grid node in price units.

By default the fixed-point solver receives its inputs through binary32, as
the host passes coefficients to the accelerator as 32-bit floats before the
float-to-fixed conversion.  ``input_precision="float64"`` quantises the
double-precision inputs directly.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .backends import FixedBackend
from .bounds import check_range_conditions
from .fixed_point import FixedFormat, expected_rounding_error
from .pricer import (GridSpec, MarketParams, PricingProblem, ScalingMode, build_coefficients,
                     grid_constraint_dt, payoff, price, scale_payoff)
from .tridiag import TridiagonalSystem, thomas_hw

__all__ = ["ExperimentConfig", "ErrorSummary", "ExperimentResult", "run_experiment",
           "emit_plot_data", "error_envelope"]

log = logging.getLogger(__name__)

CHUNK = 250   # samples per work unit; fixed so results do not depend on worker count


@dataclass
class ExperimentConfig:
    samples: int = 5000
    r_range: tuple = (0.01, 0.05)
    sigma_range: tuple = (0.10, 0.30)
    dt: float = 0.001
    S_max: float = 2.0
    K: float = 1.0
    Z: float = 2.0
    N: int = 100
    formats: tuple = ("[2,30]", "[2,22]", "[2,14]")
    seed: int = 0
    kind: str = "call"
    stencil: str = "halved"
    input_precision: str = "float32"
    full_pricing: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        for lo, hi in (self.r_range, self.sigma_range):
            if not lo <= hi:
                raise ValueError(f"distribution bounds out of order: {lo} > {hi}")
        self.formats = tuple(f if isinstance(f, FixedFormat) else FixedFormat.parse(f)
                             for f in self.formats)
        if self.input_precision not in ("float32", "float64"):
            raise ValueError("input_precision must be 'float32' or 'float64'")
        if not self.dt < grid_constraint_dt(self.sigma_range[1], self.N):
            raise ValueError(f"dt={self.dt} violates the grid constraint "
                             f"dt < {grid_constraint_dt(self.sigma_range[1], self.N):.4g} "
                             f"at sigma={self.sigma_range[1]}")

    @property
    def grid(self) -> GridSpec:
        return GridSpec.from_dt(self.N, self.dt, self.S_max)

    def draws(self):
        rng = np.random.default_rng(self.seed)
        r = rng.uniform(*self.r_range, size=self.samples)
        sigma = rng.uniform(*self.sigma_range, size=self.samples)
        return r, sigma


def error_envelope(S, fractional_bits: int) -> np.ndarray:
    """Worst-case error ``n S_n 2**-(f+2)`` at node ``n``."""
    S = np.asarray(S, dtype=float)
    return np.arange(S.size) * S * expected_rounding_error(fractional_bits)


@dataclass
class ErrorSummary:
    fmt: FixedFormat
    S: np.ndarray
    mean_error: np.ndarray
    max_error_node: np.ndarray
    samples: int
    overflow_events: int = 0
    failures: list = field(default_factory=list)

    @property
    def max_error(self) -> float:
        return float(self.max_error_node.max()) if self.max_error_node.size else 0.0

    @property
    def expected_rounding_error(self) -> float:
        return expected_rounding_error(self.fmt.fractional_bits)

    @property
    def envelope(self) -> np.ndarray:
        return error_envelope(self.S, self.fmt.fractional_bits)

    def to_dict(self) -> dict:
        return {
            "format": str(self.fmt),
            "samples": self.samples,
            "max_error": self.max_error,
            "max_mean_error": float(self.mean_error.max()) if self.mean_error.size else 0.0,
            "expected_rounding_error": self.expected_rounding_error,
            "overflow_events": self.overflow_events,
            "failures": len(self.failures),
        }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summaries: dict
    range_counts: dict

    def summary_table(self) -> list:
        return [s.to_dict() for s in self.summaries.values()]


def _to_binary32(sys: TridiagonalSystem) -> TridiagonalSystem:
    f32 = lambda v: v.astype(np.float32).astype(np.float64)
    return TridiagonalSystem(f32(sys.a), f32(sys.b), f32(sys.c), f32(sys.y))


def _run_chunk(cfg: ExperimentConfig, r, sigma, start):
    grid = cfg.grid
    S = grid.S
    nodes = S.size
    acc = {str(f): [np.zeros(nodes), np.zeros(nodes), 0, [], 0] for f in cfg.formats}
    prop = np.zeros(5, dtype=int)
    y = payoff(S, cfg.K, cfg.kind)
    for k, (rk, sk) in enumerate(zip(r, sigma)):
        idx = start + k
        market = MarketParams(float(rk), float(sk))
        A = build_coefficients(market, grid, stencil=cfg.stencil)
        ys, scale = scale_payoff(y, cfg.Z, A.b[0], float(np.max(np.abs(A.a))), ScalingMode.PRACTICAL)
        sys = A.with_rhs(ys)
        rep = check_range_conditions(sys, cfg.Z)
        prop += [rep.cond1, rep.cond2, rep.cond3, rep.cond4, rep.all_satisfied]
        try:
            if cfg.full_pricing:
                problem = PricingProblem(market, grid, cfg.K, cfg.kind, cfg.Z, stencil=cfg.stencil)
                ref = price(problem).V
            else:
                ref = thomas_hw(sys).x / scale
        except ArithmeticError as exc:
            log.warning("sample %d: reference solve failed: %s", idx, exc)
            for a in acc.values():
                a[3].append((idx, repr(exc)))
            continue
        sys_in = _to_binary32(sys) if cfg.input_precision == "float32" else sys
        for fmt in cfg.formats:
            a = acc[str(fmt)]
            be = FixedBackend(fmt, overflow="saturate")
            try:
                if cfg.full_pricing:
                    res = price(problem, be)
                    got = res.V
                    a[2] += len(res.overflow_events)
                else:
                    tr = thomas_hw(sys_in, be)
                    got = tr.x / scale
                    a[2] += len(tr.overflow_events)
            except ArithmeticError as exc:
                log.warning("sample %d format %s: %s", idx, fmt, exc)
                a[3].append((idx, repr(exc)))
                continue
            err = np.abs(got - ref)
            a[0] += err
            np.maximum(a[1], err, out=a[1])
            a[4] += 1
    return acc, prop


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run the error study; write per-format plot data and a JSON summary to ``out_dir``."""
    r, sigma = cfg.draws()
    starts = range(0, cfg.samples, CHUNK)
    args = [(cfg, r[s:s + CHUNK], sigma[s:s + CHUNK], s) for s in starts]
    if cfg.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_chunk_star, args))
    else:
        parts = [_run_chunk(*a) for a in args]

    S = cfg.grid.S
    summaries = {}
    prop = np.zeros(5, dtype=int)
    for fmt in cfg.formats:
        key = str(fmt)
        total = np.zeros(S.size)
        mx = np.zeros(S.size)
        events = 0
        failures = []
        ok = 0
        for acc, _ in parts:
            s, m, e, f, n_ok = acc[key]
            total += s
            np.maximum(mx, m, out=mx)
            events += e
            failures.extend(f)
            ok += n_ok
        mean = total / ok if ok else total
        summaries[key] = ErrorSummary(fmt, S, mean, mx, ok, events, failures)
    for _, p in parts:
        prop += p
    counts = dict(zip(("cond1", "cond2", "cond3", "cond4", "all"), (int(v) for v in prop)))
    counts["samples"] = cfg.samples
    result = ExperimentResult(cfg, summaries, counts)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for summary in summaries.values():
            emit_plot_data(summary, out)
        doc = {"config": _config_dict(cfg), "formats": result.summary_table(),
               "range_conditions": counts}
        (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return result


def _run_chunk_star(args):
    return _run_chunk(*args)


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["formats"] = [str(f) for f in cfg.formats]
    d["r_range"] = list(cfg.r_range)
    d["sigma_range"] = list(cfg.sigma_range)
    return d


def emit_plot_data(summary: ErrorSummary | None, out_dir, fmt: FixedFormat | None = None) -> Path:
    """Write ``n, S_n, mean error, max error, envelope`` for one format.

    Comma separated with a ``#`` header, readable by gnuplot with
    ``set datafile separator ","``.  An empty summary writes the header only.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = summary.fmt if summary is not None else fmt
    if fmt is None:
        raise ValueError("need a summary or a format")
    path = out_dir / f"error_f{fmt.fractional_bits}.csv"
    with open(path, "w", newline="") as fh:
        fh.write("# n,S,mean_abs_error,max_abs_error,envelope\n")
        if summary is not None and summary.samples:
            w = csv.writer(fh, lineterminator="\n")
            env = summary.envelope
            for n in range(summary.S.size):
                w.writerow([n, repr(float(summary.S[n])), repr(float(summary.mean_error[n])),
                            repr(float(summary.max_error_node[n])), repr(float(env[n]))])
    return path


def read_plot_data(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
