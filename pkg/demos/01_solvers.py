# Two ways to back-substitute a tridiagonal system, checked against a dense solve.
import numpy as np

from thomascore import TridiagonalSystem, dense_solve, residual, thomas_hw, thomas_reference
from thomascore.tridiag import critical_path

A = TridiagonalSystem(a=[0, 1, 1], b=[4, 4, 4], c=[1, 1, 0], y=[5, 6, 5])
print("reference:", thomas_reference(A).x)
print("hw       :", thomas_hw(A).x)
print("dense    :", dense_solve(A))

# the hw variant keeps c/d and z/d for the backward sweep, nothing else
tr = thomas_hw(A)
print("c/d =", tr.cd)
print("z/d =", tr.zd)

# a bigger random dominant system
rng = np.random.default_rng(0)
n = 64
a = rng.uniform(-1, 1, n); a[0] = 0
c = rng.uniform(-1, 1, n); c[-1] = 0
b = np.abs(a) + np.abs(c) + 0.5
S = TridiagonalSystem(a, b, c, rng.normal(size=n))
x = thomas_hw(S).x
print(f"n={n}: residual {residual(S, x):.2e}, "
      f"diff to reference {np.max(np.abs(x - thomas_reference(S).x)):.2e}")

# longest chain of dependent operations
for n in (10, 100):
    hw, ref = critical_path(thomas_hw, n), critical_path(thomas_reference, n)
    print(f"n={n}: serial chain hw {hw.length} (5n-4), reference {ref.length} (6n-5)")
