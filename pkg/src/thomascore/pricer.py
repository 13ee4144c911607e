"""Implicit finite-difference pricing of European options under Black-Scholes.

The asset axis ``[0, S_max]`` is split into ``N`` steps (``N + 1`` nodes) and
time into ``M`` steps of ``dt = 1/M``.  Each implicit step solves::

    a[n] V[n-1] + b[n] V[n] + c[n] V[n+1] = V_prev[n]

with the stencil

    a[n] = -(n^2 sigma^2 - n r) dt
    b[n] = 1 + (n^2 sigma^2 + r) dt
    c[n] = -(n^2 sigma^2 + n r) dt

and the upper boundary row ``a[N] = N r dt``, ``b[N] = 1 - (N r - r) dt``.

That stencil (``stencil="printed"``) has no factor 1/2 on the off-diagonals
while the diagonal carries the full ``n^2 sigma^2 dt``, so interior row sums
are ``1 + r dt - n^2 sigma^2 dt < 1``: the implicit step amplifies instead of
discounting and prices exceed the payoff.  ``stencil="halved"`` (the default
for pricing) uses ``a/2`` and ``c/2`` on rows ``n < N``, which is the
standard central-difference scheme with row sums ``1 + r dt``.

For fixed-point runs the terminal payoff is scaled once so every solver
intermediate stays inside the format range; prices are unscaled on return.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .backends import RealBackend
from .bounds import check_range_conditions
from .tridiag import TridiagonalSystem, thomas_hw

__all__ = [
    "MarketParams",
    "GridSpec",
    "PricingProblem",
    "PricingResult",
    "ScalingMode",
    "ZeroPayoff",
    "CertificationFailed",
    "STENCILS",
    "build_coefficients",
    "grid_constraint_dt",
    "payoff",
    "scale_payoff",
    "price",
]


class ZeroPayoff(ValueError):
    pass


class CertificationFailed(ArithmeticError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"range conditions not satisfied: {report}")


class ScalingMode(str, enum.Enum):
    EXACT = "exact"      # factor Z (|b0| - ||a||) / ((|b0| + 1) ||y||)
    PRACTICAL = "045"    # factor 0.45 Z / ||y||
    NONE = "none"


@dataclass(frozen=True)
class MarketParams:
    r: float
    sigma: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be >= 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True)
class GridSpec:
    N: int
    M: int
    S_max: float

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if self.S_max <= 0:
            raise ValueError("S_max must be > 0")

    @classmethod
    def from_dt(cls, N: int, dt: float, S_max: float) -> "GridSpec":
        M = round(1.0 / dt)
        if not np.isclose(M * dt, 1.0):
            raise ValueError(f"dt={dt} does not divide the unit interval")
        return cls(N, M, S_max)

    @property
    def dt(self) -> float:
        if self.M == 0:
            raise ValueError("a grid with M = 0 has no time step")
        return 1.0 / self.M

    @property
    def dS(self) -> float:
        return self.S_max / self.N

    @property
    def S(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dS

    def satisfies_constraint(self, sigma: float) -> bool:
        return self.dt < grid_constraint_dt(sigma, self.N)


def grid_constraint_dt(sigma: float, N: int) -> float:
    """Largest admissible time step, ``1 / (sigma^2 N^2)`` (exclusive)."""
    if sigma <= 0 or N < 1:
        raise ValueError("need sigma > 0 and N >= 1")
    return 1.0 / (sigma * sigma * N * N)


STENCILS = ("printed", "halved")


def build_coefficients(market: MarketParams, grid: GridSpec, dt: float | None = None,
                       stencil: str = "printed") -> TridiagonalSystem:
    """Stencil rows ``n = 0..N``; the right-hand side is left at zero."""
    if stencil not in STENCILS:
        raise ValueError(f"stencil must be one of {STENCILS}, got {stencil!r}")
    dt = grid.dt if dt is None else dt
    r, s2 = market.r, market.sigma ** 2
    N = grid.N
    n = np.arange(N + 1, dtype=float)
    a = -(n * n * s2 - n * r) * dt
    b = 1.0 + (n * n * s2 + r) * dt
    c = -(n * n * s2 + n * r) * dt
    if stencil == "halved":
        a *= 0.5
        c *= 0.5
    a[N] = N * r * dt
    b[N] = 1.0 - (N * r - r) * dt
    a[0] = 0.0
    c[0] = 0.0  # -(0 + 0) dt, written out to avoid -0.0
    c[N] = 0.0
    return TridiagonalSystem(a, b, c, np.zeros(N + 1))


def payoff(S, K: float, kind: str = "call") -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if kind == "call":
        return np.maximum(S - K, 0.0)
    if kind == "put":
        return np.maximum(K - S, 0.0)
    raise ValueError(f"unknown payoff {kind!r}")


def scale_payoff(y, Z: float, b0: float, norm_a: float, mode=ScalingMode.PRACTICAL):
    """Scale ``y`` so the solver intermediates stay below ``Z``.

    Returns ``(scaled_y, factor)``.
    """
    y = np.asarray(y, dtype=float)
    norm_y = float(np.max(np.abs(y))) if y.size else 0.0
    if norm_y == 0.0:
        raise ZeroPayoff("payoff is identically zero")
    mode = ScalingMode(mode)
    if mode is ScalingMode.EXACT:
        factor = Z * (abs(b0) - norm_a) / ((abs(b0) + 1.0) * norm_y)
    elif mode is ScalingMode.PRACTICAL:
        factor = 0.45 * Z / norm_y
    else:
        factor = 1.0
    return y * factor, factor


@dataclass
class PricingProblem:
    market: MarketParams
    grid: GridSpec
    K: float = 1.0
    kind: str = "call"
    Z: float = 2.0
    scaling: ScalingMode = ScalingMode.PRACTICAL
    stencil: str = "halved"

    def __post_init__(self):
        self.scaling = ScalingMode(self.scaling)
        if self.stencil not in STENCILS:
            raise ValueError(f"stencil must be one of {STENCILS}, got {self.stencil!r}")

    def system(self) -> TridiagonalSystem:
        dt = self.grid.dt if self.grid.M else 0.0
        return build_coefficients(self.market, self.grid, dt=dt, stencil=self.stencil)

    def terminal(self) -> np.ndarray:
        return payoff(self.grid.S, self.K, self.kind)


@dataclass
class PricingResult:
    S: np.ndarray
    V: np.ndarray
    scale: float
    overflow_events: list = field(default_factory=list)   # (step, row, variable)
    max_abs: list = field(default_factory=list)           # per-step max |V| in solver units


def price(problem: PricingProblem, backend=None, certify: bool = False) -> PricingResult:
    """Step the payoff back ``M`` implicit steps with :func:`thomas_hw`.

    With ``certify=True`` the scaled first step must pass the sufficient
    range conditions for ``problem.Z``; otherwise :class:`CertificationFailed`.
    """
    be = backend if backend is not None else RealBackend()
    A = problem.system()
    y = problem.terminal()
    norm_a = float(np.max(np.abs(A.a)))
    if problem.scaling is ScalingMode.NONE or not np.any(y):
        scale = 1.0
        V = y.copy()
    else:
        V, scale = scale_payoff(y, problem.Z, A.b[0], norm_a, problem.scaling)
    if certify:
        rep = check_range_conditions(A.with_rhs(V), problem.Z)
        if not rep.all_satisfied:
            raise CertificationFailed(rep)
    result = PricingResult(S=problem.grid.S, V=V, scale=scale)
    for m in range(problem.grid.M):
        trace = thomas_hw(A.with_rhs(V), be)
        result.overflow_events.extend((m, row, var) for row, var in trace.overflow_events)
        V = trace.x
        result.max_abs.append(float(np.max(np.abs(V))))
    result.V = V / scale
    return result
