"""Tridiagonal systems and Thomas-algorithm solvers.

Row ``i`` of the system reads::

    a[i] * x[i-1] + b[i] * x[i] + c[i] * x[i+1] = y[i]

with ``a[0] = 0`` and ``c[n-1] = 0``.  Grid problems indexed ``0..N`` map to
``n = N + 1`` stored rows.

Two solvers share the same forward elimination:

* :func:`thomas_reference` back-substitutes with ``x[i] = (z[i] - c[i] x[i+1]) / d[i]``.
* :func:`thomas_hw` first forms ``c/d`` and ``z/d`` for every row, which are
  independent of the backward recurrence and can be computed by a dedicated
  divider alongside the forward sweep.  The backward sweep is then a
  multiply-subtract ``x[i] = zd[i] - cd[i] x[i+1]`` and only the two vectors
  ``cd`` and ``zd`` need to be stored between sweeps.

Both take an arithmetic backend (see :mod:`thomascore.backends`) so the same
code produces the real and the fixed-point results.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends import DependencyCounter, RealBackend
from .fixed_point import FixedFormat, Overflow

__all__ = [
    "TridiagonalSystem",
    "SolveTrace",
    "SingularPivot",
    "Singular",
    "SystemFormatError",
    "thomas_reference",
    "thomas_hw",
    "dense_solve",
    "residual",
    "critical_path",
    "read_csv",
    "write_csv",
    "read_json",
    "write_json",
]


class SingularPivot(ArithmeticError):
    """A pivot ``d[row]`` evaluated to zero."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"zero pivot d[{row}]")


class Singular(np.linalg.LinAlgError):
    pass


class SystemFormatError(ValueError):
    """Malformed system file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class TridiagonalSystem:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).copy()
        self.b = np.asarray(self.b, dtype=float).copy()
        self.c = np.asarray(self.c, dtype=float).copy()
        self.y = np.asarray(self.y, dtype=float).copy()
        n = self.b.shape[0]
        if self.b.ndim != 1 or n < 2:
            raise ValueError("a tridiagonal system needs at least 2 rows")
        for name in "acy":
            v = getattr(self, name)
            if v.shape != (n,):
                raise ValueError(f"{name} has shape {v.shape}, expected ({n},)")
        if self.a[0] != 0.0 or self.c[-1] != 0.0:
            raise ValueError("a[0] and c[n-1] must be 0")

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @classmethod
    def from_bands(cls, a, b, c, y) -> "TridiagonalSystem":
        """Build from possibly non-zero corner entries, zeroing ``a[0]`` and ``c[-1]``."""
        a = np.array(a, dtype=float)
        c = np.array(c, dtype=float)
        a[0] = 0.0
        c[-1] = 0.0
        return cls(a, b, c, y)

    def with_rhs(self, y) -> "TridiagonalSystem":
        return TridiagonalSystem(self.a, self.b, self.c, y)

    def to_dense(self) -> np.ndarray:
        n = self.n
        A = np.diag(self.b)
        A[np.arange(1, n), np.arange(n - 1)] = self.a[1:]
        A[np.arange(n - 1), np.arange(1, n)] = self.c[:-1]
        return A

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.b * x
        out[1:] += self.a[1:] * x[:-1]
        out[:-1] += self.c[:-1] * x[1:]
        return out

    def is_diagonally_dominant(self, strict: bool = False) -> bool:
        """Row diagonal dominance ``|b| >= |a| + |c|``."""
        lhs = np.abs(self.b)
        rhs = np.abs(self.a) + np.abs(self.c)
        return bool(np.all(lhs > rhs) if strict else np.all(lhs >= rhs))

    def is_column_dominant(self) -> bool:
        off = np.zeros(self.n)
        off[:-1] += np.abs(self.a[1:])
        off[1:] += np.abs(self.c[:-1])
        return bool(np.all(np.abs(self.b) >= off))


@dataclass
class SolveTrace:
    """Every intermediate of one solve, converted back to reals.

    ``cd`` and ``zd`` are only filled by :func:`thomas_hw`; the reference
    solver leaves them as NaN.
    """

    l: np.ndarray
    d: np.ndarray
    z: np.ndarray
    cd: np.ndarray
    zd: np.ndarray
    x: np.ndarray
    overflow_events: list = field(default_factory=list)
    backend: str = "real"


def _forward(sys, be, events):
    """Forward elimination shared by both solvers; returns backend values."""
    n = sys.n
    A = [be.from_real(v) for v in sys.a]
    Bv = [be.from_real(v) for v in sys.b]
    C = [be.from_real(v) for v in sys.c]
    Y = [be.from_real(v) for v in sys.y]
    if be.overflowed:
        events.append((-1, "input"))
        be.overflowed = False
    zero = be.from_real(0.0)
    L = [zero] * n
    D = [zero] * n
    Z = [zero] * n
    D[0] = Bv[0]
    Z[0] = Y[0]
    if be.is_zero(D[0]):
        raise SingularPivot(0)
    i = 0
    var = "l"
    try:
        for i in range(1, n):
            p = i - 1
            var = "l"
            li = be.div(A[i], D[p])
            if be.overflowed:
                events.append((i, "l"))
                be.overflowed = False
            var = "d"
            di = be.sub(Bv[i], be.mul(li, C[p]))
            if be.overflowed:
                events.append((i, "d"))
                be.overflowed = False
            var = "z"
            zi = be.sub(Y[i], be.mul(li, Z[p]))
            if be.overflowed:
                events.append((i, "z"))
                be.overflowed = False
            if be.is_zero(di):
                raise SingularPivot(i)
            L[i] = li
            D[i] = di
            Z[i] = zi
    except Overflow as exc:
        exc.row, exc.variable = i, var
        raise
    return C, L, D, Z


def _as_real(be, values):
    return np.array([be.to_real(v) for v in values], dtype=float)


def thomas_reference(sys: TridiagonalSystem, backend=None) -> SolveTrace:
    """Classic Thomas algorithm: forward elimination, then divide-per-row back substitution."""
    be = backend if backend is not None else RealBackend()
    events: list = []
    C, L, D, Z = _forward(sys, be, events)
    n = sys.n
    X = [None] * n
    i = n - 1
    try:
        X[i] = be.div(Z[i], D[i])
        for i in range(n - 2, -1, -1):
            X[i] = be.div(be.sub(Z[i], be.mul(C[i], X[i + 1])), D[i])
            if be.overflowed:
                events.append((i, "x"))
                be.overflowed = False
    except Overflow as exc:
        exc.row, exc.variable = i, "x"
        raise
    nan = np.full(n, np.nan)
    return SolveTrace(l=_as_real(be, L), d=_as_real(be, D), z=_as_real(be, Z),
                      cd=nan, zd=nan.copy(), x=_as_real(be, X),
                      overflow_events=events, backend=be.name)


def thomas_hw(sys: TridiagonalSystem, backend=None) -> SolveTrace:
    """Thomas algorithm with the backward division factored out.

    ``(z - c x) / d`` is rewritten as ``z/d - (c/d) x``; both quotients depend
    only on the forward sweep, leaving a multiply-subtract on the backward
    critical path.
    """
    be = backend if backend is not None else RealBackend()
    events: list = []
    C, L, D, Z = _forward(sys, be, events)
    n = sys.n
    CD = [None] * n
    ZD = [None] * n
    i = 0
    var = "cd"
    try:
        for i in range(n):
            var = "cd"
            CD[i] = be.div(C[i], D[i])
            if be.overflowed:
                events.append((i, "cd"))
                be.overflowed = False
            var = "zd"
            ZD[i] = be.div(Z[i], D[i])
            if be.overflowed:
                events.append((i, "zd"))
                be.overflowed = False
        X = [None] * n
        X[n - 1] = ZD[n - 1]
        var = "x"
        for i in range(n - 2, -1, -1):
            X[i] = be.sub(ZD[i], be.mul(CD[i], X[i + 1]))
            if be.overflowed:
                events.append((i, "x"))
                be.overflowed = False
    except Overflow as exc:
        exc.row, exc.variable = i, var
        raise
    return SolveTrace(l=_as_real(be, L), d=_as_real(be, D), z=_as_real(be, Z),
                      cd=_as_real(be, CD), zd=_as_real(be, ZD), x=_as_real(be, X),
                      overflow_events=events, backend=be.name)


@dataclass
class CriticalPath:
    length: int
    counts: dict


def critical_path(solver, n: int) -> CriticalPath:
    """Longest serial chain of arithmetic operations ``solver`` needs for an ``n``-row system."""
    be = DependencyCounter()
    sys = TridiagonalSystem.from_bands(np.ones(n), np.ones(n), np.ones(n), np.ones(n))
    trace = solver(sys, be)
    return CriticalPath(int(np.max(trace.x)), dict(be.counts))


def dense_solve(sys: TridiagonalSystem) -> np.ndarray:
    """Expand to a dense matrix and solve by LU with partial pivoting."""
    if sys.n > 1024:
        raise ValueError(f"dense oracle limited to n <= 1024, got {sys.n}")
    try:
        x = np.linalg.solve(sys.to_dense(), sys.y)
    except np.linalg.LinAlgError as exc:
        raise Singular(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise Singular("non-finite solution")
    return x


def residual(sys: TridiagonalSystem, x) -> float:
    """``||A x - y||_inf`` in double precision."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"solution has shape {x.shape}, expected ({sys.n},)")
    return float(np.max(np.abs(sys.matvec(x) - sys.y)))


# -- file I/O -----------------------------------------------------------------

_COLUMNS = ("a", "b", "c", "y")


def _parse_rows(lines) -> TridiagonalSystem:
    reader = csv.reader(lines)
    rows = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row) or row[0].lstrip().startswith("#"):
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen and [c.lower() for c in cells] == list(_COLUMNS):
            header_seen = True
            continue
        if len(cells) != 4:
            raise SystemFormatError(f"expected 4 columns a,b,c,y, got {len(cells)}", lineno)
        try:
            rows.append([float(v) for v in cells])
        except ValueError:
            raise SystemFormatError(f"non-numeric value in {cells}", lineno) from None
    if len(rows) < 2:
        raise SystemFormatError("a system needs at least 2 rows")
    arr = np.array(rows)
    if arr[0, 0] != 0.0:
        raise SystemFormatError("a[0] must be 0", None)
    if arr[-1, 2] != 0.0:
        raise SystemFormatError("c[n-1] must be 0", None)
    return TridiagonalSystem(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def read_csv(path) -> TridiagonalSystem:
    """Read a system stored as four columns ``a,b,c,y`` (optional header row)."""
    with open(path, newline="") as fh:
        return _parse_rows(fh)


def loads_csv(text: str) -> TridiagonalSystem:
    return _parse_rows(io.StringIO(text))


def write_csv(sys: TridiagonalSystem, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_COLUMNS)
        for row in zip(sys.a, sys.b, sys.c, sys.y):
            w.writerow([repr(float(v)) for v in row])


def write_json(sys: TridiagonalSystem, path, fmt: FixedFormat | None = None) -> None:
    doc = {
        "n": sys.n,
        "format": None if fmt is None else str(fmt),
        "a": sys.a.tolist(),
        "b": sys.b.tolist(),
        "c": sys.c.tolist(),
        "y": sys.y.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def read_json(path) -> tuple[TridiagonalSystem, FixedFormat | None]:
    """Read the JSON envelope ``{"n", "format", "a", "b", "c", "y"}``."""
    doc = json.loads(Path(path).read_text())
    try:
        sys = TridiagonalSystem(doc["a"], doc["b"], doc["c"], doc["y"])
    except KeyError as exc:
        raise SystemFormatError(f"missing key {exc.args[0]!r}") from None
    if "n" in doc and doc["n"] != sys.n:
        raise SystemFormatError(f"n={doc['n']} disagrees with vector length {sys.n}")
    fmt = doc.get("format")
    return sys, (FixedFormat.parse(fmt) if fmt else None)
