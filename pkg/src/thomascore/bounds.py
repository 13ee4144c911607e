"""Closed-form range bounds for the Thomas-algorithm intermediates.

For a row diagonally dominant system with positive, increasing diagonal the
intermediates of :func:`thomas_hw` obey (``|.|`` is the max-norm)::

    |d|   <= 3 |b|                                 (any diagonally dominant A)
    |d_n| >  d_lower = | b0 - |a| |c| / |b0| |
    |l|   <  l_upper = |a| / d_lower
    |d|   <= |b| + l_upper |c|
    |z|   <  z_upper = |y| / (1 - l_upper)           (needs l_upper < 1)
    |c/d| <= |c| / |b0|,   |z/d| <= z_upper / |b0|
    |x|   <  z_upper / (|b0| - 1)                    (needs b > 1, |c| < 1)

Applicability of the pivot lower bound needs more than diagonal growth
``max(diff(b)) <= |c|``: with a nearly constant diagonal the pivots decay
below ``d_lower`` (b0 = 1.01, a = c = 0.5 is a counterexample).  The
induction ``d_n >= b0`` goes through when every diagonal step satisfies
``diff(b) >= |a| |c| / |b0|``; both conditions are required here and both
are reported.

Bounds are always evaluated.  Whether a theorem *applies* is recorded
separately, so "precondition unmet" is never confused with "violated".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .backends import FixedBackend, RealBackend
from .tridiag import TridiagonalSystem, thomas_hw

__all__ = [
    "BoundsReport",
    "RangeConditions",
    "Violation",
    "compute_bounds",
    "check_range_conditions",
    "verify_bounds_empirically",
    "theorem_status",
    "HOLDS",
    "VIOLATED",
    "UNMET",
]

HOLDS = "holds"
VIOLATED = "violated"
UNMET = "precondition-unmet"

# bound name -> (trace quantity, relation, bound group)
BOUND_TABLE = {
    "d_upper_loose": ("max|d|", "<=", "pivot_any"),
    "d_lower": ("min|d|", ">", "pivot_lower"),
    "l_upper": ("max|l|", "<", "multiplier"),
    "d_upper_tight": ("max|d|", "<=", "pivot_upper"),
    "z_upper": ("max|z|", "<", "forward"),
    "cd_upper": ("max|c/d|", "<=", "quotient"),
    "zd_upper": ("max|z/d|", "<=", "quotient"),
    "x_upper": ("max|x|", "<", "solution"),
}


def _norm(v) -> float:
    return float(np.max(np.abs(v))) if len(v) else 0.0


def _safe_div(num, den):
    if den == 0.0:
        return math.inf if num != 0.0 else 0.0
    return num / den


@dataclass
class BoundsReport:
    norm_a: float
    norm_b: float
    norm_c: float
    norm_y: float
    d_upper_loose: float
    d_lower: float
    l_upper: float
    d_upper_tight: float
    z_upper: float
    cd_upper: float
    zd_upper: float
    x_upper: float
    preconditions: dict = field(default_factory=dict)
    applicable: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def compute_bounds(sys: TridiagonalSystem) -> BoundsReport:
    a, b, c, y = sys.a, sys.b, sys.c, sys.y
    na, nb, nc, ny = _norm(a), _norm(b), _norm(c), _norm(y)
    b0 = abs(float(b[0]))
    db = np.diff(b)

    d_upper_loose = 3.0 * nb
    d_lower = abs(b0 - _safe_div(na, b0) * nc)
    l_upper = _safe_div(na, d_lower)
    d_upper_tight = nb + l_upper * nc if nc else nb
    z_upper = ny / (1.0 - l_upper) if l_upper < 1.0 else math.inf
    cd_upper = _safe_div(nc, b0)
    zd_upper = _safe_div(z_upper, b0) if z_upper else 0.0
    x_upper = z_upper / (b0 - 1.0) if b0 > 1.0 else math.inf
    if z_upper == 0.0:
        x_upper = 0.0

    pre = {
        "row_dominant": sys.is_diagonally_dominant(),
        "col_dominant": sys.is_column_dominant(),
        "b_positive": bool(np.all(b > 0)),
        "b_increasing": bool(np.all(db >= 0)),
        "delta_b_le_norm_c": bool(db.max() <= nc) if db.size else True,
        "delta_b_ge_coupling": bool(db.min() >= _safe_div(na * nc, b0)) if db.size else True,
        "l_lt_1": l_upper < 1.0,
        "b0_gt_1": b0 > 1.0,
        "b_gt_1": bool(np.all(np.abs(b) > 1.0)),
        "norm_c_lt_1": nc < 1.0,
    }
    pivot_ok = (pre["row_dominant"] and pre["b_positive"] and pre["b_increasing"]
                and pre["delta_b_le_norm_c"] and pre["delta_b_ge_coupling"])
    app = {"pivot_any": pre["row_dominant"] or pre["col_dominant"],
           "pivot_lower": pivot_ok,
           "multiplier": pivot_ok}
    app["pivot_upper"] = app["multiplier"]
    app["forward"] = app["multiplier"] and pre["l_lt_1"]
    app["quotient"] = app["forward"]
    app["solution"] = app["quotient"] and pre["b_gt_1"] and pre["norm_c_lt_1"]

    return BoundsReport(na, nb, nc, ny, d_upper_loose, d_lower, l_upper, d_upper_tight,
                        z_upper, cd_upper, zd_upper, x_upper, pre, app)


@dataclass
class RangeConditions:
    """Sufficient conditions for every intermediate to stay below ``Z``.

    ``slack*`` is positive when the matching condition holds with room to
    spare.  Condition 4 also needs a positive, increasing diagonal.
    """

    Z: float
    cond1: bool
    cond2: bool
    cond3: bool
    cond4: bool
    slack1: float
    slack2: float
    slack3: float
    slack4: float
    y_scale_required: float

    @property
    def all_satisfied(self) -> bool:
        return self.cond1 and self.cond2 and self.cond3 and self.cond4

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_satisfied"] = self.all_satisfied
        return d


def check_range_conditions(sys: TridiagonalSystem, Z: float) -> RangeConditions:
    if Z <= 0:
        raise ValueError("Z must be > 0")
    na, nc, ny = _norm(sys.a), _norm(sys.c), _norm(sys.y)
    b0 = abs(float(sys.b[0]))
    db = np.diff(sys.b)
    y_limit = Z * (b0 - na) / (b0 + 1.0)
    s1 = b0 - na
    s2 = y_limit - ny
    s3 = b0 - nc
    s4 = nc - float(db.max()) if db.size else nc
    monotone = bool(np.all(sys.b > 0) and np.all(db >= 0))
    return RangeConditions(
        Z=Z,
        cond1=s1 > 0, cond2=s2 > 0, cond3=s3 > 0, cond4=monotone and s4 >= 0,
        slack1=s1, slack2=s2, slack3=s3, slack4=s4,
        y_scale_required=_safe_div(y_limit, ny),
    )


@dataclass
class Violation:
    bound: str
    theorem: str
    observed: float
    limit: float
    row: int


def _observed(trace):
    ad, al = np.abs(trace.d), np.abs(trace.l[1:])
    return {
        "d_upper_loose": (ad.max(), int(ad.argmax())),
        "d_lower": (ad.min(), int(ad.argmin())),
        "l_upper": (al.max() if al.size else 0.0, int(al.argmax()) + 1 if al.size else 0),
        "d_upper_tight": (ad.max(), int(ad.argmax())),
        "z_upper": (np.abs(trace.z).max(), int(np.abs(trace.z).argmax())),
        "cd_upper": (np.abs(trace.cd).max(), int(np.abs(trace.cd).argmax())),
        "zd_upper": (np.abs(trace.zd).max(), int(np.abs(trace.zd).argmax())),
        "x_upper": (np.abs(trace.x).max(), int(np.abs(trace.x).argmax())),
    }


def _default_tol(backend, n):
    if isinstance(backend, FixedBackend):
        # accumulated rounding, one ulp per row
        return n * backend.fmt.ulp
    return 0.0


def _check(bound, observed, limit, tol):
    if bound == "d_lower":
        lo = np.nextafter(limit, -np.inf) - tol
        return observed >= lo
    hi = np.nextafter(limit, np.inf) + tol
    return observed <= hi


def theorem_status(sys: TridiagonalSystem, backend=None, tol: float | None = None,
                   report: BoundsReport | None = None, trace=None) -> dict:
    """Tri-state verdict per bound: ``holds``, ``violated`` or ``precondition-unmet``.

    Comparisons are non-strict with a one-ulp allowance (plus ``tol``).
    """
    be = backend if backend is not None else RealBackend()
    rep = report if report is not None else compute_bounds(sys)
    tr = trace if trace is not None else thomas_hw(sys, be)
    tol = _default_tol(be, sys.n) if tol is None else tol
    obs = _observed(tr)
    out = {}
    for bound, (_, _, thm) in BOUND_TABLE.items():
        if not rep.applicable[thm]:
            out[bound] = UNMET
        else:
            out[bound] = HOLDS if _check(bound, obs[bound][0], getattr(rep, bound), tol) else VIOLATED
    return out


def verify_bounds_empirically(sys: TridiagonalSystem, backend=None,
                              tol: float | None = None) -> list:
    """Solve with :func:`thomas_hw` and list every applicable bound the trace breaks."""
    be = backend if backend is not None else RealBackend()
    rep = compute_bounds(sys)
    tr = thomas_hw(sys, be)
    status = theorem_status(sys, be, tol, rep, tr)
    obs = _observed(tr)
    return [Violation(bound, BOUND_TABLE[bound][2], float(obs[bound][0]),
                      float(getattr(rep, bound)), obs[bound][1])
            for bound, verdict in status.items() if verdict == VIOLATED]


check_prop1 = check_range_conditions
Prop1Report = RangeConditions
