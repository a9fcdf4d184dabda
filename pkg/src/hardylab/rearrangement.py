"""Layer-cake step functions, decreasing rearrangement and Lorentz norms.

A :class:`StepFunction` stores pairs (value v_i, measure m_i): the function
takes value v_i on a set of measure m_i.  Its decreasing rearrangement is
the step function on (0, inf) obtained by sorting the values, so every
norm below is a finite sum of closed-form power integrals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _spi

from .radial import Grid, RadialProfile, sphere_area

__all__ = [
    "StepFunction",
    "LorentzParams",
    "decreasing_rearrangement",
    "lorentz_norm",
    "lp_norm",
    "weak_norm",
    "dilate",
    "tail_head_bound",
    "symmetrize_radial",
    "ball_volume_radius",
    "load_step_csv",
    "save_step_csv",
    "polya_szego_energies",
]


@dataclass(frozen=True)
class StepFunction:
    values: np.ndarray
    measures: np.ndarray
    N: int = 2

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        m = np.array(self.measures, dtype=float).ravel()
        if v.shape != m.shape or v.size == 0:
            raise ValueError("values and measures must be nonempty and of equal length")
        if np.any(np.isnan(v)) or np.any(np.isnan(m)):
            raise ValueError("NaN in step function")
        if np.any(m <= 0):
            raise ValueError("measures must be positive")
        if np.any(np.isinf(m[:-1])) or not np.all(np.isfinite(v)):
            # an infinite measure is tolerated only on the last piece, which
            # lets callers express a non-decaying u*
            raise ValueError("values must be finite; only the last measure may be infinite")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "measures", m)

    def __len__(self):
        return self.values.size

    @property
    def breakpoints(self) -> np.ndarray:
        """Right endpoints T_i of the constancy intervals of u* (canonical form)."""
        return np.cumsum(self.measures)

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.measures))

    def moment(self, s: float) -> float:
        """Sum of v_i^s m_i, i.e. the integral of |u|^s."""
        with np.errstate(invalid="ignore"):
            terms = np.where(self.values == 0.0, 0.0, self.values ** s * self.measures)
        return float(np.sum(terms))

    def is_canonical(self) -> bool:
        return bool(np.all(np.diff(self.values) < 0))

    def __call__(self, t):
        """Evaluate u*(t), assuming canonical form (right-continuous)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breakpoints, t, side="right")
        vals = np.append(self.values, 0.0)
        return vals[idx]


@dataclass(frozen=True)
class LorentzParams:
    p: float
    q: float = math.inf

    def __post_init__(self):
        if not (1.0 <= self.p < math.inf):
            raise ValueError("Lorentz exponent p must lie in [1, inf)")
        if not (self.q >= 1.0):
            raise ValueError("Lorentz exponent q must be >= 1 or inf")


def decreasing_rearrangement(step: StepFunction) -> StepFunction:
    """Sort values decreasingly and merge equal values (canonical form)."""
    if np.any(step.values < 0):
        raise ValueError("rearrangement needs nonnegative values; apply abs() first")
    order = np.argsort(-step.values, kind="stable")
    v = step.values[order]
    m = step.measures[order]
    if np.isinf(m[:-1]).any():
        raise ValueError("an infinite-measure piece must carry the smallest value")
    uniq, start = np.unique(-v, return_index=True)
    merged = np.add.reduceat(m, start)
    return StepFunction(-uniq, merged, step.N)


def _canonical(step: StepFunction) -> StepFunction:
    return step if step.is_canonical() else decreasing_rearrangement(step)


def lorentz_norm(step: StepFunction, params: LorentzParams) -> float:
    """Lorentz (p, q) norm of a step function, exactly.

    For q < inf the integral of (t^(1/p) u*(t))^q dt/t over a constancy
    interval [T0, T1) equals v^q (p/q) (T1^(q/p) - T0^(q/p)).  For q = inf
    the supremum of t^(1/p) u*(t) is approached at right endpoints.
    Divergent norms are returned as +inf.
    """
    step = _canonical(step)
    p, q = params.p, params.q
    T1 = step.breakpoints
    T0 = np.concatenate([[0.0], T1[:-1]])
    v = step.values
    live = v > 0
    if not np.any(live):
        return 0.0
    if np.isinf(T1[live]).any():
        return math.inf
    if math.isinf(q):
        return float(np.max(T1[live] ** (1.0 / p) * v[live]))
    e = q / p
    total = float(np.sum(v[live] ** q * (p / q) * (T1[live] ** e - T0[live] ** e)))
    return total ** (1.0 / q)


def lp_norm(step: StepFunction, p: float) -> float:
    """L^p norm; p = inf gives the largest value."""
    if math.isinf(p):
        return float(np.max(step.values))
    live = step.values > 0
    if np.isinf(step.measures[live]).any():
        return math.inf
    return step.moment(p) ** (1.0 / p)


def weak_norm(step: StepFunction, p: float) -> float:
    """Weak-L^p quasi-norm; p = inf gives the L^inf norm."""
    if math.isinf(p):
        return float(np.max(step.values))
    return lorentz_norm(step, LorentzParams(p, math.inf))


def dilate(step: StepFunction, m: float, beta: float, N: int | None = None) -> StepFunction:
    """Layer cake of x -> m^beta u(m x): values times m^beta, measures times m^-N."""
    if not m > 0:
        raise ValueError("dilation factor must be positive")
    N = step.N if N is None else N
    return StepFunction(step.values * m ** beta, step.measures * m ** (-float(N)), N)


def tail_head_bound(step: StepFunction, params: LorentzParams, R: float, side: str = "tail",
                    exponent: float | None = None) -> tuple[float, float]:
    """Both sides of the weak-norm tail or head estimate.

    tail: ``int_R^inf u*^s dt <= W^s int_R^inf t^(-s/p) dt`` (needs p < s)
    head: ``int_0^R u*^s dt <= W^s int_0^R t^(-s/p) dt``   (needs p > s)

    with W the weak-L^p norm.  ``exponent`` s defaults to 2 for the tail and
    to 2N/(N-2) for the head.
    """
    step = _canonical(step)
    p = params.p
    if side == "tail":
        s = 2.0 if exponent is None else float(exponent)
        if not p < s:
            raise ValueError("tail bound needs p < exponent")
    elif side == "head":
        if exponent is None:
            if step.N <= 2:
                raise ValueError("head bound needs an explicit exponent when N <= 2")
            exponent = 2.0 * step.N / (step.N - 2)
        s = float(exponent)
        if not p > s:
            raise ValueError("head bound needs p > exponent")
    else:
        raise ValueError("side must be 'tail' or 'head'")
    if not R > 0:
        raise ValueError("R must be positive")
    W = weak_norm(step, p)
    if math.isinf(W):
        raise ValueError("weak norm diverges")
    T1 = step.breakpoints
    T0 = np.concatenate([[0.0], T1[:-1]])
    v = step.values
    if side == "tail":
        lo, hi = np.maximum(T0, R), T1
        rhs = W ** s * R ** (1.0 - s / p) / (s / p - 1.0)
    else:
        lo, hi = T0, np.minimum(T1, R)
        rhs = W ** s * R ** (1.0 - s / p) / (1.0 - s / p)
    seg = np.clip(hi - lo, 0.0, None)
    seg = np.where(v > 0, seg, 0.0)
    if np.isinf(seg).any():
        return math.inf, rhs
    lhs = float(np.sum(np.where(seg > 0, v ** s * seg, 0.0)))
    return lhs, rhs


def ball_volume_radius(t, N: int):
    """Radius r with |B_r| = t, i.e. t = omega_(N-1) r^N / N."""
    return (np.asarray(t, dtype=float) * N / sphere_area(N)) ** (1.0 / N)


def symmetrize_radial(profile: RadialProfile, grid: Grid) -> StepFunction:
    """Annulus-slab layer cake of a nonnegative radial profile, rearranged.

    The slab on [r_i, r_(i+1)) carries the midpoint value and the annulus
    measure omega_(N-1) (r_(i+1)^N - r_i^N) / N.  The result is u*; the
    Schwarz symmetrization is u#(r) = u*(|B_r|).
    """
    r = grid.nodes
    if r[0] < 0:
        raise ValueError("radii must be nonnegative")
    N = profile.N
    mid = 0.5 * (r[1:] + r[:-1])
    with np.errstate(all="ignore"):
        samples = profile.value(r)
        vals = profile.value(mid)
    inner = r > 0
    if np.any(samples[inner] < 0) or np.any(vals < 0):
        raise ValueError("symmetrization needs a nonnegative profile")
    meas = sphere_area(N) * (r[1:] ** N - r[:-1] ** N) / N
    return decreasing_rearrangement(StepFunction(vals, meas, N))


def load_step_csv(path, N: int = 2) -> StepFunction:
    """Read a ``value,measure`` CSV and return the canonical form."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["value", "measure"]:
            raise ValueError(f"expected header 'value,measure', got {','.join(header)!r}")
        rows = [(float(a), float(b)) for a, b in (row for row in reader if row)]
    if not rows:
        raise ValueError("empty step-function file")
    return decreasing_rearrangement(StepFunction([a for a, _ in rows], [b for _, b in rows], N))


def save_step_csv(step: StepFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("value,measure\n")
        for v, m in zip(step.values, step.measures):
            fh.write(f"{v:.17g},{m:.17g}\n")


def polya_szego_energies(r, f, N: int) -> tuple[float, float]:
    """Dirichlet energies of a piecewise-linear radial profile and of its
    Schwarz symmetrization.

    ``f`` holds nonnegative nodal values on the increasing radii ``r``, is
    constant on [0, r[0]] and must vanish at ``r[-1]``.  The original energy is exact; the symmetrized
    one uses the coarea form
    ``int (omega rho^(N-1))^2 / |mu'(lam)| dlam`` with mu the distribution
    function and rho(lam) the radius of the ball of measure mu(lam).
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("profile must be nonnegative")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be increasing")
    if f[-1] != 0:
        raise ValueError("profile must vanish at the last node")
    om = sphere_area(N)
    slopes = np.diff(f) / np.diff(r)
    orig = float(np.sum(slopes ** 2 * (r[1:] ** N - r[:-1] ** N) / N) * om)

    def crossings(lam):
        # radii where the PL profile crosses level lam, with |f'| there
        out = []
        for i in range(r.size - 1):
            a, b = f[i], f[i + 1]
            if a == b:
                continue
            lo, hi = min(a, b), max(a, b)
            if lo < lam < hi:
                x = r[i] + (lam - a) / slopes[i]
                out.append((x, abs(slopes[i]), a < b))
        return out

    def integrand(lam):
        cs = crossings(lam)
        if not cs:
            return 0.0
        # mu(lam) = |{f > lam}|: superlevel set is a union of annuli
        pts = sorted(cs)
        mu = 0.0
        inside = f[0] > lam
        prev = r[0]
        for x, _, up in pts:
            if inside:
                mu += om * (x ** N - prev ** N) / N
            inside = up
            prev = x
        if inside:
            mu += om * (r[-1] ** N - prev ** N) / N
        if f[0] > lam and r[0] > 0:
            # the disk inside the first node also belongs to the set
            mu += om * r[0] ** N / N
        dmu = sum(om * x ** (N - 1) / s for x, s, _ in cs)
        rho = (mu * N / om) ** (1.0 / N)
        return (om * rho ** (N - 1)) ** 2 / dmu

    levels = np.unique(f)
    total = 0.0
    for lo, hi in zip(levels[:-1], levels[1:]):
        val, _ = _spi.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return orig, total
