"""Step functions, Lorentz norms and the weak-space inequalities.

Builds a random step function, checks the dilation law for the Lorentz norm,
evaluates the interpolation inequality between two weak spaces and tabulates
the failure of Hoelder's inequality with a weak-L^p factor.

    python3 demos/lorentz_and_interpolation.py
"""

import math

import numpy as np

from hardylab import (InterpolationTriple, LorentzParams, StepFunction, TrialConfig,
                      check_interpolation, decreasing_rearrangement, dilate, holder_failure_ratio,
                      lorentz_norm, lp_norm, weak_norm)

rng = np.random.default_rng(1)
u = decreasing_rearrangement(StepFunction(rng.uniform(0.1, 5, 8), rng.uniform(0.1, 3, 8), 3))
print("random step function, N = 3")
for p, q in ((5, 2), (3, math.inf), (2, 2)):
    base = lorentz_norm(u, LorentzParams(p, q))
    m = 7.0
    got = lorentz_norm(dilate(u, m, 0.5, 3), LorentzParams(p, q))
    print(f"  ||u||_({p},{q}) = {base:.10f}   dilation ratio / m^(1/2 - 3/p) = "
          f"{got / base / m ** (0.5 - 3 / p):.15f}")

t = InterpolationTriple(2.0, 3.0, 6.0)
lhs = lp_norm(u, 3.0)
rhs = t.D * weak_norm(u, 2.0) ** t.lam * weak_norm(u, 6.0) ** (1 - t.lam)
print(f"\ninterpolation (2,3,6): lambda = {t.lam:.4f}, D = {t.D:.4f}, ||u||_3 = {lhs:.6f} <= {rhs:.6f}")
rep = check_interpolation(t, TrialConfig(trials=2000, seed=5))
print(f"  2000 random trials: {rep.violations} violations, worst lhs/rhs = {rep.max_ratio:.4f}")

print("\nHoelder with a weak factor, N = 3, p = 1.5, q = 4: ratio grows like eps^(-1/4)")
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    print(f"  eps = {eps:.0e}  ratio = {holder_failure_ratio(eps, 3, 1.5, 4.0):.6f}")
