"""Mode-restricted Hardy quotients as 1D Sturm-Liouville eigenproblems.

A quotient restricted to angular mode k >= 1 (spherical average zero) is
rewritten in a logarithmic radial variable:

* critical disk, t = log(a/r) on (log a, inf)::

      int (f'^2 + k^2 f^2) dt  /  int f^2 t^-2 dt

* classical ball, s = log(1/r) on (0, inf), and the whole space on
  (-inf, inf)::

      int (f'^2 + mu_k f^2) e^{-(N-2)s} ds  /  int f^2 e^{-(N-2)s} ds

Both are discretized with continuous piecewise-linear elements and
Dirichlet conditions at the truncation ends, so each discrete eigenvalue is
an upper bound of the continuum infimum.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import lambertw

from .radial import (AngularMode, ClassicalBall, ClassicalWholeSpace, CriticalDisk, Grid,
                     RadialProfile)

__all__ = [
    "ModeProblem",
    "SLProblem1D",
    "TridiagPair",
    "SharpEstimate",
    "reduce_mode",
    "sl_mesh",
    "assemble",
    "count_below",
    "smallest_eigen",
    "sharp_constant",
    "lq_angular_constant",
    "lq_quotient",
    "minimize_lq_quotient",
    "LqResult",
    "DEFAULT_T",
    "DEFAULT_H",
]

log = logging.getLogger(__name__)

DEFAULT_T = (11.0, 21.0, 41.0)
DEFAULT_H = (0.02, 0.01, 0.005)


@dataclass(frozen=True)
class ModeProblem:
    geometry: CriticalDisk | ClassicalBall | ClassicalWholeSpace
    k: int = 1
    q: float = 2.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("mode k = 0 violates the spherical-average-zero constraint")
        if isinstance(self.geometry, CriticalDisk) and not self.geometry.a > 1:
            raise ValueError("a must exceed 1")
        if isinstance(self.geometry, (ClassicalBall, ClassicalWholeSpace)) and self.q != 2:
            raise ValueError("only q = 2 is supported for classical geometries")
        if self.q < 2:
            raise ValueError("q must be >= 2")

    @property
    def N(self) -> int:
        return self.geometry.N

    @property
    def mode(self) -> AngularMode:
        return AngularMode(self.k, self.N)

    def with_mode(self, k: int) -> "ModeProblem":
        return ModeProblem(self.geometry, k, self.q)


@dataclass(frozen=True)
class SLProblem1D:
    """``int (f'^2 + V f^2) e^{-c t} dt / int f^2 w(t) dt`` on (lower, upper).

    ``mass`` is ``"exp"`` for w = e^{-c t} or ``"inv_square"`` for w = t^-2
    (then c must be 0).
    """

    lower: float
    upper: float = math.inf
    rate: float = 0.0
    potential: float = 0.0
    mass: str = "exp"
    variable: str = "t"
    label: str = ""

    def __post_init__(self):
        if self.mass not in ("exp", "inv_square"):
            raise ValueError("mass weight must be 'exp' or 'inv_square'")
        if self.mass == "inv_square" and (self.rate != 0 or not self.lower > 0):
            raise ValueError("inverse-square mass needs rate 0 and a positive lower end")

    def weight(self, t):
        t = np.asarray(t, dtype=float)
        return t ** -2.0 if self.mass == "inv_square" else np.exp(-self.rate * t)

    def stiffness_weight(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    @property
    def continuum_infimum(self) -> float | None:
        """Known infimum where it is elementary (exp-weighted problems)."""
        if self.mass == "exp":
            return self.rate ** 2 / 4.0 + self.potential
        return None

    @property
    def lower_bound(self) -> float:
        """Certified lower bound of the continuum infimum.

        For the inverse-square problem, int f'^2 >= (1/4) int f^2/t^2 on
        (L, inf) with f(L) = 0, and int f^2 >= L^2 int f^2/t^2 because t >= L.
        """
        if self.mass == "exp":
            return self.continuum_infimum
        return 0.25 + self.potential * self.lower ** 2


def reduce_mode(problem: ModeProblem) -> SLProblem1D:
    """Exact change of variables from a mode-k quotient to a 1D problem."""
    geo, k = problem.geometry, problem.k
    if k < 1:
        raise ValueError("mode k = 0 violates the spherical-average-zero constraint")
    if isinstance(geo, CriticalDisk):
        if not geo.a > 1:
            raise ValueError("a must exceed 1")
        return SLProblem1D(math.log(geo.a), math.inf, 0.0, float(k * k), "inv_square", "t",
                           f"critical-disk a={geo.a:g} k={k}")
    mu = problem.mode.mu
    c = float(geo.N - 2)
    if isinstance(geo, ClassicalBall):
        return SLProblem1D(0.0, math.inf, c, mu, "exp", "s", f"classical-ball N={geo.N} k={k}")
    if isinstance(geo, ClassicalWholeSpace):
        return SLProblem1D(-math.inf, math.inf, c, mu, "exp", "s",
                           f"whole-space N={geo.N} k={k}")
    raise TypeError(f"unknown geometry {geo!r}")


# --------------------------------------------------------------------------
# Meshes
# --------------------------------------------------------------------------


def _stretch(t):
    return t + np.log(t)


def _unstretch(xi):
    return np.real(lambertw(np.exp(xi)))


def sl_mesh(slp: SLProblem1D, T: float, h: float, h_coarse: float | None = None) -> Grid:
    """Mesh on the truncated interval with step ``h``.

    The inverse-square problem is meshed uniformly in xi = t + log t, which
    resolves the 1/t^2 weight near small lower ends; exp-weighted problems
    are meshed uniformly in t.  The element count is a multiple of
    ``h_coarse / h`` so that meshes of a dyadic refinement plan nest and the
    truncation point T (rounded up onto the coarse lattice) is shared.
    """
    h_coarse = h if h_coarse is None else h_coarse
    ratio = h_coarse / h
    mult = int(round(ratio))
    if abs(ratio - mult) > 1e-9 * ratio:
        mult = 1
        h_coarse = h
    if slp.mass == "inv_square":
        lo, hi = _stretch(slp.lower), _stretch(T)
    elif math.isinf(slp.lower):
        lo, hi = -T, T
    else:
        lo, hi = slp.lower, T
    if not hi > lo:
        raise ValueError("truncation point must exceed the lower end")
    n = int(math.ceil((hi - lo) / h_coarse - 1e-9)) * mult
    xi = lo + h * np.arange(n + 1)
    if slp.mass == "inv_square":
        nodes = _unstretch(xi)
        nodes[0] = slp.lower
    else:
        nodes = xi
    return Grid(nodes, "uniform", None, (float(nodes[0]), float(nodes[-1])))


# --------------------------------------------------------------------------
# Assembly
# --------------------------------------------------------------------------


def _inv_square_moments(x):
    """I_k(x) = int_0^1 u^k (1 + x u)^-2 du for k = 0, 1, 2."""
    x = np.asarray(x, dtype=float)
    I = np.empty((3,) + x.shape)
    small = x <= 0.25
    xs = x[small]
    n = np.arange(48)[:, None]
    pw = (n + 1) * (-xs[None, :]) ** n
    for k in range(3):
        I[k][small] = np.sum(pw / (n + k + 1), axis=0)
    xl = x[~small]
    lg = np.log1p(xl)
    I[0][~small] = 1.0 / (1.0 + xl)
    I[1][~small] = (lg / xl - 1.0 / (1.0 + xl)) / xl
    I[2][~small] = (1.0 - 2.0 * lg / xl + 1.0 / (1.0 + xl)) / xl ** 2
    return I


def _exp_moments(z):
    """J_k(z) = int_0^1 u^k e^{-z u} du for k = 0, 1, 2."""
    z = np.asarray(z, dtype=float)
    J = np.empty((3,) + z.shape)
    small = np.abs(z) <= 1.0
    zs = z[small]
    n = np.arange(30)[:, None]
    fact = np.array([math.factorial(i) for i in range(30)], dtype=float)[:, None]
    pw = (-zs[None, :]) ** n / fact
    for k in range(3):
        J[k][small] = np.sum(pw / (n + k + 1), axis=0)
    zl = z[~small]
    e = np.exp(-zl)
    J[0][~small] = -np.expm1(-zl) / zl
    J[1][~small] = (J[0][~small] - e) / zl
    J[2][~small] = (2.0 * J[1][~small] - e) / zl
    return J


def element_matrices(slp: SLProblem1D, t1, t2):
    """Exact local stiffness+potential and mass entries (11, 12, 22) per element."""
    t1 = np.asarray(t1, dtype=float)
    h = np.asarray(t2, dtype=float) - t1
    if slp.rate == 0.0:
        stiff = 1.0 / h
        pm = h * np.array([[1.0 / 3], [1.0 / 6], [1.0 / 3]])
        K = np.array([stiff, -stiff, stiff]) + slp.potential * pm
    else:
        E = np.exp(-slp.rate * t1)
        J = _exp_moments(slp.rate * h)
        stiff = E * J[0] / h
        pm = E * h * np.array([J[0] - 2 * J[1] + J[2], J[1] - J[2], J[2]])
        K = np.array([stiff, -stiff, stiff]) + slp.potential * pm
    if slp.mass == "inv_square":
        I = _inv_square_moments(h / t1)
        s = h / t1 ** 2
        M = s * np.array([I[0] - 2 * I[1] + I[2], I[1] - I[2], I[2]])
    else:
        M = pm
    return K, M


@dataclass(frozen=True)
class TridiagPair:
    """Interior-node tridiagonal stiffness ``K`` and mass ``M`` (diag, off)."""

    k_diag: np.ndarray
    k_off: np.ndarray
    m_diag: np.ndarray
    m_off: np.ndarray
    mesh: Grid | None = None

    @property
    def n(self) -> int:
        return self.k_diag.size

    def dense(self):
        K = np.diag(self.k_diag) + np.diag(self.k_off, 1) + np.diag(self.k_off, -1)
        M = np.diag(self.m_diag) + np.diag(self.m_off, 1) + np.diag(self.m_off, -1)
        return K, M

    def kmul(self, x):
        return _tri_mul(self.k_diag, self.k_off, x)

    def mmul(self, x):
        return _tri_mul(self.m_diag, self.m_off, x)


def _tri_mul(d, o, x):
    y = d * x
    y[:-1] += o * x[1:]
    y[1:] += o * x[:-1]
    return y


def _ldl_pivots(d, o):
    d = d.tolist()
    o2 = (np.asarray(o) ** 2).tolist()
    piv = [0.0] * len(d)
    prev = d[0]
    piv[0] = prev
    for i in range(1, len(d)):
        if prev == 0.0:
            prev = 1e-300
        prev = d[i] - o2[i - 1] / prev
        piv[i] = prev
    return np.array(piv)


def assemble(slp: SLProblem1D, mesh: Grid) -> TridiagPair:
    """P1 Galerkin pair with Dirichlet conditions at both mesh ends."""
    t = mesh.nodes
    if slp.mass == "inv_square" and not t[0] >= slp.lower - 1e-12:
        raise ValueError("mesh starts below the problem's lower end")
    if not math.isinf(slp.lower) and t[0] < slp.lower - 1e-12:
        raise ValueError("mesh does not fit the problem domain")
    n_el = t.size - 1
    if n_el < 2:
        raise ValueError("mesh has no interior nodes")
    K, M = element_matrices(slp, t[:-1], t[1:])
    k_diag = K[2][:-1] + K[0][1:]
    m_diag = M[2][:-1] + M[0][1:]
    k_off = K[1][1:-1].copy()
    m_off = M[1][1:-1].copy()
    pair = TridiagPair(k_diag, k_off, m_diag, m_off, mesh)
    if np.any(_ldl_pivots(k_diag, k_off) <= 0) or np.any(_ldl_pivots(m_diag, m_off) <= 0):
        raise RuntimeError("assembled matrices are not positive definite")
    return pair


# --------------------------------------------------------------------------
# Eigen-solver
# --------------------------------------------------------------------------


def count_below(pair: TridiagPair, lam: float) -> int:
    """Number of generalized eigenvalues below ``lam`` (Sylvester inertia of K - lam M)."""
    d = pair.k_diag - lam * pair.m_diag
    o = pair.k_off - lam * pair.m_off
    return int(np.count_nonzero(_ldl_pivots(d, o) < 0))


def _banded(d, o):
    ab = np.zeros((3, d.size))
    ab[0, 1:] = o
    ab[1] = d
    ab[2, :-1] = o
    return ab


def smallest_eigen(pair: TridiagPair, tol: float = 1e-10, max_iter: int = 200):
    """Smallest eigenvalue of K x = lam M x by inertia bisection.

    Bisection stops when the bracket is relatively narrower than ``tol``;
    inverse iteration at the lower bracket end then gives the eigenvector
    (M-normalized, positive sum).  The residual is checked against
    ``tol * |Kx|`` plus the rounding floor of the products.
    """
    lo = 0.0
    if count_below(pair, lo) != 0:
        raise RuntimeError("K is not positive definite")
    hi = float(np.min(pair.k_diag / pair.m_diag))
    for _ in range(60):
        if count_below(pair, hi) >= 1:
            break
        hi = hi * 2.0 + 1e-300
    else:
        raise RuntimeError("could not bracket the smallest eigenvalue")
    it = 0
    while hi - lo > tol * hi:
        it += 1
        if it > max_iter:
            raise RuntimeError("bisection did not converge")
        mid = 0.5 * (lo + hi)
        if count_below(pair, mid) >= 1:
            hi = mid
        else:
            lo = mid
    lam = 0.5 * (lo + hi)
    sigma = lo - (hi - lo)
    ab = _banded(pair.k_diag - sigma * pair.m_diag, pair.k_off - sigma * pair.m_off)
    x = np.ones(pair.n)
    for _ in range(4):
        x = solve_banded((1, 1), ab, pair.mmul(x))
        x /= math.sqrt(float(x @ pair.mmul(x)))
    if x.sum() < 0:
        x = -x
    Kx = pair.kmul(x)
    Mx = pair.mmul(x)
    rq = float(x @ Kx)
    if lo <= rq <= hi:
        lam = rq
    resid = float(np.linalg.norm(Kx - lam * Mx))
    absK = _tri_mul(np.abs(pair.k_diag), np.abs(pair.k_off), np.abs(x))
    absM = _tri_mul(np.abs(pair.m_diag), np.abs(pair.m_off), np.abs(x))
    floor = 8 * np.finfo(float).eps * float(np.linalg.norm(absK + lam * absM))
    if resid > tol * float(np.linalg.norm(Kx)) + floor:
        raise RuntimeError(f"eigen-residual {resid:.3g} exceeds tolerance")
    return lam, x


# --------------------------------------------------------------------------
# Sharp constants
# --------------------------------------------------------------------------


def _geometry_name(geo) -> str:
    return {CriticalDisk: "critical-disk", ClassicalBall: "classical-ball",
            ClassicalWholeSpace: "whole-space"}[type(geo)]


@dataclass
class SharpEstimate:
    geometry: str
    a: float | None
    N: int
    mode: int
    value: float
    trace: list = field(default_factory=list)
    mode_values: list = field(default_factory=list)
    one_sided: bool = True
    trace_monotone: bool = True
    mode_monotone: bool = True
    lower_bound: float | None = None

    @property
    def ok(self) -> bool:
        return self.one_sided and self.trace_monotone and self.mode_monotone

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry,
            "a": self.a,
            "N": self.N,
            "mode": self.mode,
            "value": self.value,
            "trace": [dict(t) for t in self.trace],
            "mode_values": [list(v) for v in self.mode_values],
            "one_sided": self.one_sided,
            "trace_monotone": self.trace_monotone,
            "mode_monotone": self.mode_monotone,
            "lower_bound": self.lower_bound,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def level_value(problem: ModeProblem, T: float, h: float, h_coarse: float | None = None,
                tol: float = 1e-11):
    slp = reduce_mode(problem)
    mesh = sl_mesh(slp, T, h, h_coarse)
    return smallest_eigen(assemble(slp, mesh), tol)[0], mesh


def sharp_constant(problem: ModeProblem, T_list=DEFAULT_T, h_list=DEFAULT_H, k_max: int = 3,
                   tol: float = 1e-11, slack: float = 1e-10) -> SharpEstimate:
    """Discrete minimum of the constrained quotient along a refinement plan.

    Level i uses truncation ``T_list[i]`` and step ``h_list[i]``; with a
    dyadic plan the discrete spaces are nested, so the trace must be
    nonincreasing.  Modes 1..k_max are solved at every level and must be
    nondecreasing in k; the k = 1 value at the last level is the estimate.
    """
    T_list = [float(t) for t in T_list]
    h_list = [float(h) for h in h_list]
    if not T_list or len(T_list) != len(h_list):
        raise ValueError("T_list and h_list must be nonempty and of equal length")
    if any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be increasing")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h_list must be decreasing")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    h0 = h_list[0]
    trace, mode_values = [], []
    for T, h in zip(T_list, h_list):
        vals = []
        for k in range(1, k_max + 1):
            lam, mesh = level_value(problem.with_mode(k), T, h, h0, tol)
            vals.append(lam)
        log.debug("T=%g h=%g values=%s", T, h, vals)
        trace.append({"T": float(mesh.nodes[-1]), "h": h, "value": vals[0]})
        mode_values.append(vals)
    trace_mono = all(b["value"] <= a["value"] * (1 + slack) for a, b in zip(trace, trace[1:]))
    mode_mono = all(all(v2 >= v1 * (1 - slack) for v1, v2 in zip(v, v[1:])) for v in mode_values)
    bound = reduce_mode(problem).lower_bound
    one_sided = all(t["value"] >= bound - 1e-9 for t in trace)
    geo = problem.geometry
    return SharpEstimate(
        geometry=_geometry_name(geo),
        a=getattr(geo, "a", None),
        N=geo.N,
        mode=1,
        value=trace[-1]["value"],
        trace=trace,
        mode_values=mode_values,
        one_sided=one_sided,
        trace_monotone=trace_mono,
        mode_monotone=mode_mono,
        lower_bound=bound,
    )


# --------------------------------------------------------------------------
# L^q quotient (mode-1 upper bound for the q > 2 problem)
# --------------------------------------------------------------------------


def lq_angular_constant(q: float) -> float:
    """int_0^{2 pi} |cos theta|^q d theta."""
    return AngularMode(1, 2).lq_mass(q)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class _LqFunctional:
    """pi int (f'^2 + f^2) dt / (c_q int |f|^q t^{-1-q/2} dt)^{2/q} on a P1 mesh."""

    def __init__(self, a: float, q: float, mesh: Grid):
        self.q = q
        slp = SLProblem1D(math.log(a), math.inf, 0.0, 1.0, "inv_square")
        pair = assemble(slp, mesh)
        self.kd, self.ko = math.pi * pair.k_diag, math.pi * pair.k_off
        self.cq = lq_angular_constant(q)
        t = mesh.nodes
        h = np.diff(t)
        u = 0.5 * (_GL_X + 1.0)
        self.tq = t[:-1, None] + h[:, None] * u[None, :]
        self.wq = 0.5 * h[:, None] * _GL_W[None, :] * self.tq ** (-1.0 - q / 2.0)
        self.u = u
        self.n = pair.n

    def energy(self, f):
        return float(f @ _tri_mul(self.kd, self.ko, f))

    def _full(self, f):
        return np.concatenate([[0.0], f, [0.0]])

    def lq(self, f):
        F = self._full(f)
        fh = F[:-1, None] * (1 - self.u) + F[1:, None] * self.u
        return float(np.sum(np.abs(fh) ** self.q * self.wq))

    def value(self, f):
        return self.energy(f) / (self.cq * self.lq(f)) ** (2.0 / self.q)

    def gradient(self, f):
        q = self.q
        F = self._full(f)
        fh = F[:-1, None] * (1 - self.u) + F[1:, None] * self.u
        core = q * np.abs(fh) ** (q - 2) * fh * self.wq
        gfull = np.zeros(F.size)
        gfull[:-1] += np.sum(core * (1 - self.u), axis=1)
        gfull[1:] += np.sum(core * self.u, axis=1)
        dQ = gfull[1:-1]
        E, Q = self.energy(f), self.lq(f)
        J = E / (self.cq * Q) ** (2.0 / q)
        dE = 2.0 * _tri_mul(self.kd, self.ko, f)
        return J * (dE / E - (2.0 / q) * dQ / Q), J


@dataclass
class LqResult:
    value: float
    profile: RadialProfile
    nodal: np.ndarray
    mesh: Grid
    trace: list
    upper_bound: bool = True


def lq_quotient(a: float, q: float, mesh: Grid, f) -> float:
    """Discrete quotient value of the nodal interior vector ``f``."""
    return _LqFunctional(a, q, mesh).value(np.asarray(f, dtype=float))


def _profile_from_nodes(a: float, mesh: Grid, f: np.ndarray) -> RadialProfile:
    t = mesh.nodes
    F = np.concatenate([[0.0], f, [0.0]])
    slopes = np.diff(F) / np.diff(t)
    r_in = a * math.exp(-t[-1])

    def value(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            tt = np.log(a / r)
        return np.where(r > r_in, np.interp(tt, t, F, left=0.0, right=0.0), 0.0)

    def derivative(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            tt = np.log(a / r)
        idx = np.clip(np.searchsorted(t, tt) - 1, 0, slopes.size - 1)
        inside = (tt > t[0]) & (tt < t[-1])
        return np.where(inside, -slopes[idx] / np.where(r > 0, r, 1.0), 0.0)

    bps = tuple(sorted(a * np.exp(-t[1:-1])))
    return RadialProfile(2, 1.0, value, derivative, True, bps, "lq-minimizer",
                         {"a": a, "t": t, "nodal": F})


def minimize_lq_quotient(a: float, q: float, init=None, tol: float = 1e-10, T: float = 21.0,
                         h: float = 0.01, max_iter: int = 500) -> LqResult:
    """Mode-1 discrete minimum of the q > 2 weighted quotient.

    Descent uses the H^1-preconditioned gradient (K^{-1} grad J) with Armijo
    backtracking and renormalization after each step; the quotient is scale
    invariant.  ``init`` may be a nodal vector on the mesh, a callable of t,
    or None for the first mode-1 eigenvector.  The result is a discrete value
    over a subspace of the admissible class, hence an upper bound.
    """
    if not q > 2:
        raise ValueError("q must exceed 2")
    if not a > 1:
        raise ValueError("a must exceed 1")
    problem = ModeProblem(CriticalDisk(a), 1)
    slp = reduce_mode(problem)
    mesh = sl_mesh(slp, T, h)
    fun = _LqFunctional(a, q, mesh)
    if init is None:
        _, f = smallest_eigen(assemble(slp, mesh))
    elif callable(init):
        f = np.asarray(init(mesh.nodes[1:-1]), dtype=float)
    else:
        f = np.asarray(init, dtype=float).copy()
    if f.shape != (fun.n,) or not np.any(f):
        raise ValueError("initial guess must be a nonzero vector on the interior nodes")
    ab = _banded(fun.kd, fun.ko)
    f = f / math.sqrt(fun.energy(f))
    J = fun.value(f)
    trace = [J]
    for _ in range(max_iter):
        g, J = fun.gradient(f)
        d = -solve_banded((1, 1), ab, g)
        slope = float(g @ d)
        step = 1.0
        for _ in range(60):
            trial = f + step * d
            Jt = fun.value(trial)
            if Jt <= J + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            if abs(slope) <= tol * J:
                break
            raise RuntimeError("objective did not decrease after backtracking")
        f = trial / math.sqrt(fun.energy(trial))
        trace.append(Jt)
        if J - Jt <= tol * J:
            break
    else:
        log.warning("minimize_lq_quotient hit max_iter=%d", max_iter)
    if f.sum() < 0:
        f = -f
    value = trace[-1]
    return LqResult(value, _profile_from_nodes(a, mesh, f), f, mesh, trace)
