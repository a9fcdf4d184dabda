"""Grids, radial profiles, weights and polar-coordinate energies.

All radial integrals exclude the angular factor: ``integrate`` returns
``int f(r)^2 w(r) r^(N-1) dr`` and ``mode_energy`` returns
``int (f'^2 + mu_k f^2 / r^2) r^(N-1) dr``.  Angular masses live on
:class:`AngularMode` and are applied by callers that need them.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _spi
from scipy.special import gammaln

__all__ = [
    "Grid",
    "build_grid",
    "merge_grids",
    "RadialProfile",
    "load_profile_csv",
    "WeightSpec",
    "PLAIN_MASS",
    "CLASSICAL_HARDY",
    "critical_hardy",
    "AngularMode",
    "CriticalDisk",
    "ClassicalBall",
    "ClassicalWholeSpace",
    "sphere_area",
    "integrate",
    "mode_energy",
    "integrate_adaptive",
    "mode_energy_adaptive",
    "grid_for",
]

ArrayFn = Callable[[np.ndarray], np.ndarray]


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere S^(N-1) in R^N."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


# --------------------------------------------------------------------------
# Grids
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    grading: str = "uniform"
    ratio: float | None = None
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("grid nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if self.grading == "geometric" and not (0.0 < (self.ratio or 0.0) < 1.0):
            raise ValueError("geometric ratio must lie in (0, 1)")
        interval = self.interval or (float(nodes[0]), float(nodes[-1]))
        if nodes[0] < interval[0] or nodes[-1] > interval[1]:
            raise ValueError("grid nodes leave the declared interval")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "interval", (float(interval[0]), float(interval[1])))

    def __len__(self):
        return self.nodes.size

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)


def build_grid(interval, count: int, grading: str = "uniform", ratio: float | None = None,
               toward: str = "left") -> Grid:
    """Build a uniform or geometrically graded grid.

    Geometric grids have node distances to the ``toward`` endpoint in
    geometric progression with the given ratio, so that endpoint is never a
    node.  ``build_grid((0, 1), 100, "geometric", 0.9)`` has
    ``nodes[i] / nodes[i + 1] == 0.9``.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"degenerate interval ({lo}, {hi})")
    if count < 2:
        raise ValueError("count must be at least 2")
    if grading == "uniform":
        nodes = np.linspace(lo, hi, count)
        return Grid(nodes, "uniform", None, (lo, hi))
    if grading == "geometric":
        if ratio is None or not 0.0 < ratio < 1.0:
            raise ValueError("geometric ratio must lie in (0, 1)")
        dist = (hi - lo) * ratio ** np.arange(count - 1, -1, -1, dtype=float)
        if toward == "left":
            nodes = lo + dist
        elif toward == "right":
            nodes = (hi - dist)[::-1]
        else:
            raise ValueError("toward must be 'left' or 'right'")
        return Grid(nodes, "geometric", ratio, (lo, hi))
    raise ValueError(f"unknown grading {grading!r}")


def merge_grids(*grids: Grid) -> Grid:
    """Union of several grids' nodes (duplicates dropped)."""
    nodes = np.unique(np.concatenate([g.nodes for g in grids]))
    lo = min(g.interval[0] for g in grids)
    hi = max(g.interval[1] for g in grids)
    return Grid(nodes, "mixed", None, (lo, hi))


# --------------------------------------------------------------------------
# Profiles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """A radial factor f(r) on (0, R) together with its derivative.

    ``breakpoints`` lists interior radii where f is only piecewise smooth;
    the adaptive integrators split there.
    """

    N: int
    R: float
    value: ArrayFn
    derivative: ArrayFn
    dirichlet: bool = False
    breakpoints: tuple[float, ...] = ()
    name: str = "profile"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError("dimension N must be an integer >= 2")
        if not self.R > 0:
            raise ValueError("outer radius must be positive")

    def __call__(self, r):
        return self.value(np.asarray(r, dtype=float))

    def validate(self, grid: Grid) -> None:
        """Check finiteness on the grid and the outer Dirichlet condition."""
        r = grid.nodes
        with np.errstate(all="ignore"):
            f = self.value(r)
            df = self.derivative(r)
        inner = r > 0
        if not (np.all(np.isfinite(f[inner])) and np.all(np.isfinite(df[inner]))):
            raise ValueError(f"{self.name}: non-finite value or derivative on grid")
        if self.dirichlet and np.isfinite(self.R):
            scale = float(np.max(np.abs(f[inner]))) if np.any(inner) else 0.0
            fR = abs(float(self.value(np.array([self.R]))[0]))
            if fR > 1e-12 * scale:
                raise ValueError(f"{self.name}: |f(R)| = {fR:g} violates the Dirichlet condition")

    @classmethod
    def from_samples(cls, r, values, N: int, dirichlet: bool = False, name: str = "sampled"):
        """Piecewise-linear interpolant of samples; derivative by finite differences.

        Central differences inside, one-sided second-order stencils at the ends.
        """
        r = np.asarray(r, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.shape != v.shape or r.ndim != 1 or r.size < 3:
            raise ValueError("need matching 1-D arrays with at least three samples")
        if np.any(np.diff(r) <= 0):
            raise ValueError("sample radii must be strictly increasing")
        if np.any(r < 0):
            raise ValueError("sample radii must be nonnegative")
        if not np.all(np.isfinite(v)):
            raise ValueError("samples must be finite")
        dv = np.gradient(v, r, edge_order=2)
        r.setflags(write=False)
        v.setflags(write=False)

        def value(x):
            return np.interp(x, r, v, right=0.0 if dirichlet else v[-1])

        def derivative(x):
            return np.interp(x, r, dv)

        return cls(N, float(r[-1]), value, derivative, dirichlet, tuple(r[1:-1]), name,
                   {"r": r, "values": v})


def load_profile_csv(path, N: int, dirichlet: bool = False) -> RadialProfile:
    """Read a ``r,value`` CSV into a sampled :class:`RadialProfile`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["r", "value"]:
            raise ValueError(f"expected header 'r,value', got {','.join(header)!r}")
        rows = [(float(a), float(b)) for a, b in (row for row in reader if row)]
    r = np.array([a for a, _ in rows])
    v = np.array([b for _, b in rows])
    d = np.diff(r)
    if np.any(d == 0):
        raise ValueError("duplicate radius in profile file")
    if np.any(d < 0):
        raise ValueError("radii in profile file are not increasing")
    return RadialProfile.from_samples(r, v, N, dirichlet=dirichlet, name=str(path))


# --------------------------------------------------------------------------
# Weights, modes, geometries
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Weight relative to the measure r^(N-1) dr.

    kind is ``"plain"`` (1), ``"hardy"`` (r^-2) or ``"critical"``
    (r^-2 log(a/r)^(-1-q/2), planar only).
    """

    kind: str = "plain"
    a: float = 1.0
    q: float = 2.0

    def __post_init__(self):
        if self.kind not in ("plain", "hardy", "critical"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "critical":
            if self.a < 1:
                raise ValueError("critical weight needs a >= 1")
            if self.q < 2:
                raise ValueError("critical weight needs q >= 2")

    def density(self, r, N: int) -> np.ndarray:
        """w(r) r^(N-1), evaluated as a single power to avoid 0 * inf."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "plain":
                return r ** (N - 1)
            if self.kind == "hardy":
                return r ** (N - 3.0)
            if N != 2:
                raise ValueError("critical Hardy weight requires N = 2")
            return 1.0 / (r * np.log(self.a / r) ** (1.0 + self.q / 2.0))

    def log_density(self, s, N: int) -> np.ndarray:
        """density(e^s) e^s, the weight in the variable s = log r.

        Computed from s directly, so it stays correct where e^s underflows.
        """
        s = np.asarray(s, dtype=float)
        if self.kind == "plain":
            return np.exp(N * s)
        if self.kind == "hardy":
            return np.exp((N - 2.0) * s)
        if N != 2:
            raise ValueError("critical Hardy weight requires N = 2")
        with np.errstate(divide="ignore", invalid="ignore"):
            return (math.log(self.a) - s) ** (-1.0 - self.q / 2.0)


PLAIN_MASS = WeightSpec("plain")
CLASSICAL_HARDY = WeightSpec("hardy")


def critical_hardy(a: float, q: float = 2.0) -> WeightSpec:
    return WeightSpec("critical", a, q)


@dataclass(frozen=True)
class AngularMode:
    """Spherical-harmonic mode k in R^N with eigenvalue mu_k = k(k + N - 2)."""

    k: int
    N: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError("mode index must be a nonnegative integer")
        if self.N < 2:
            raise ValueError("N must be >= 2")

    @property
    def mu(self) -> float:
        return float(self.k * (self.k + self.N - 2))

    def lq_mass(self, q: float = 2.0) -> float:
        """Integral of |g|^q over the sphere for the mode's eigenfunction.

        g = cos(k theta) for N = 2 and the coordinate function x_1 for k = 1.
        """
        if self.k == 0:
            return sphere_area(self.N)
        if self.N != 2 and self.k != 1:
            raise ValueError("angular masses are only tabulated for N = 2 or k = 1")
        N = self.N
        return 2.0 * math.exp(0.5 * (N - 1) * math.log(math.pi)
                              + gammaln((q + 1) / 2) - gammaln((N + q) / 2))

    @property
    def l2_mass(self) -> float:
        return self.lq_mass(2.0)


@dataclass(frozen=True)
class CriticalDisk:
    a: float

    N = 2

    def __post_init__(self):
        if not self.a >= 1:
            raise ValueError("a must be at least 1")

    def weight(self, q: float = 2.0) -> WeightSpec:
        return critical_hardy(self.a, q)


@dataclass(frozen=True)
class ClassicalBall:
    N: int = 3

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")

    def weight(self, q: float = 2.0) -> WeightSpec:
        return CLASSICAL_HARDY


@dataclass(frozen=True)
class ClassicalWholeSpace:
    N: int = 3

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")

    def weight(self, q: float = 2.0) -> WeightSpec:
        return CLASSICAL_HARDY


# --------------------------------------------------------------------------
# Composite quadrature
# --------------------------------------------------------------------------


def _trapezoid(x: np.ndarray, y: np.ndarray) -> tuple[float, list]:
    """Composite trapezoid over the cells whose endpoint values are finite.

    Returns the sum and the end cells left open (non-finite endpoint value)
    as ``(lo, hi)`` pairs, for the caller to cover.
    """
    lo, hi = 0, x.size - 1
    opened = []
    if not np.isfinite(y[0]):
        opened.append((x[0], x[1]))
        lo = 1
    if not np.isfinite(y[-1]) and x.size - 2 >= lo:
        opened.append((x[-2], x[-1]))
        hi = x.size - 2
    total = 0.0
    if hi > lo:
        yy = y[lo:hi + 1]
        total = float(np.sum(0.5 * (yy[1:] + yy[:-1]) * np.diff(x[lo:hi + 1])))
    return total, opened


def _composite(x: np.ndarray, fn: Callable[[np.ndarray], np.ndarray], cell=None,
               one_sided: tuple[bool, bool] = (False, False)) -> float:
    """Trapezoid sum of ``fn`` on ``x``.

    End cells where the integrand is not finite, and a cell touching r = 0,
    go to ``cell(lo, hi)`` (adaptive, in log r) when given, else to the
    midpoint rule.  Weights like 1/(r log(a/r)^2) keep mass arbitrarily
    close to 0 and derivatives like log(1/r)^(alpha-1) blow up at r = 1; no
    fixed grid resolves either.  With ``one_sided`` the end values are taken
    just inside the interval at the flagged ends (left, right), which is what
a piece ending at a kink needs.
    """
    total = 0.0
    if cell is not None and x[0] == 0.0:
        total += cell(0.0, x[1])
        x = x[1:]
        if x.size < 2:
            return total
    xe = x
    if any(one_sided):
        xe = x.copy()
        d = 1e-12 * (x[-1] - x[0])
        if one_sided[0]:
            xe[0] += min(d, 1e-3 * (x[1] - x[0]))
        if one_sided[1]:
            xe[-1] -= min(d, 1e-3 * (x[-1] - x[-2]))
    with np.errstate(all="ignore"):
        y = fn(xe)
    if np.any(np.isnan(y[1:-1])) or np.any(np.isinf(y[1:-1])):
        raise ValueError("integrand is singular or NaN at an interior node")
    part, opened = _trapezoid(x, y)
    total += part
    for lo, hi in opened:
        if cell is not None:
            total += cell(lo, hi)
            continue
        with np.errstate(all="ignore"):
            ym = float(fn(np.array([0.5 * (lo + hi)]))[0])
        if not np.isfinite(ym):
            raise ValueError("integrand not finite inside an end cell")
        total += ym * (hi - lo)
    return total


def _piecewise(x: np.ndarray, fn, cell=None, breaks=()) -> float:
    """:func:`_composite` summed over the pieces between breakpoints that are nodes."""
    cuts = [i for i in np.searchsorted(x, [b for b in breaks if x[0] < b < x[-1]])
            if x[i] in breaks]
    if not cuts:
        return _composite(x, fn, cell)
    idx = [0] + sorted(set(cuts)) + [x.size - 1]
    total = 0.0
    last = x.size - 1
    for i0, i1 in zip(idx[:-1], idx[1:]):
        if i1 > i0:
            total += _composite(x[i0:i1 + 1], fn, cell, one_sided=(i0 > 0, i1 < last))
    return total


def _richardson(x: np.ndarray, fn, cell=None, breaks=()) -> tuple[float, float]:
    fine = _piecewise(x, fn, cell, breaks)
    keep = np.zeros(x.size, dtype=bool)
    keep[::2] = True
    keep[-1] = True
    keep |= np.isin(x, list(breaks))
    coarse_x = x[keep]
    if coarse_x.size == x.size:
        return fine, math.inf
    coarse = _piecewise(coarse_x, fn, cell, breaks)
    return fine, abs(fine - coarse) / 3.0


def _log_cell(fs):
    def cell(lo, hi):
        a = -math.inf if lo == 0.0 else math.log(lo)
        return _quad_log(fs, [(a, math.log(hi))])[0]
    return cell


def _check_dims(profile: RadialProfile, N: int):
    if profile.N != N:
        raise ValueError(f"dimension mismatch: profile N={profile.N}, mode N={N}")


def integrate(profile: RadialProfile, weight: WeightSpec, grid: Grid, power: float = 2.0,
              full_output: bool = False):
    """Weighted radial integral of |f|^power by composite trapezoid on ``grid``.

    Returns the value, or ``(value, error_estimate)`` when ``full_output``;
    the error estimate comes from one Richardson halving step.  A cell
    touching r = 0 and end cells with a singular integrand are integrated
    adaptively in log r.
    """
    N = profile.N
    with np.errstate(all="ignore"):
        fv = profile.value(grid.nodes)
    if np.any(np.isnan(fv)):
        raise ValueError("NaN in profile values")

    def integrand(r):
        with np.errstate(all="ignore"):
            f = np.abs(profile.value(r))
            d = weight.density(r, N)
            out = np.where(f == 0.0, 0.0, f ** power * d)
        # an infinite density marks a singular end cell even where f vanishes
        return np.where(np.isfinite(d), out, np.inf)

    cell = _log_cell(_weighted_log_integrand(profile, weight, power))
    value, err = _richardson(grid.nodes, integrand, cell, profile.breakpoints)
    return (value, err) if full_output else value


def _mode_integrand(profile: RadialProfile, mu: float):
    N = profile.N

    def integrand(r):
        with np.errstate(all="ignore"):
            f = profile.value(r)
            df = profile.derivative(r)
            pot = np.where(f == 0.0, 0.0, mu * f * f * r ** (N - 3.0)) if mu else 0.0
            return df * df * r ** (N - 1.0) + pot

    return integrand


def _check_origin(profile: RadialProfile, mode: AngularMode, nodes: np.ndarray):
    if mode.k == 0 or profile.N != 2:
        return
    with np.errstate(all="ignore"):
        f0 = float(np.abs(profile.value(np.array([0.0]))[0]))
        scale = float(np.max(np.abs(profile.value(nodes[nodes > 0]))))
    if np.isfinite(f0) and f0 > 1e-12 * max(scale, 1e-300):
        raise ValueError("mode k >= 1 with f(0) != 0 has infinite energy")


def mode_energy(profile: RadialProfile, mode: AngularMode, grid: Grid, full_output: bool = False):
    """Radial energy of f(r) g_k for mode k on ``grid`` (angular factor excluded)."""
    _check_dims(profile, mode.N)
    _check_origin(profile, mode, grid.nodes)
    cell = _log_cell(_mode_log_integrand(profile, mode.mu))
    value, err = _richardson(grid.nodes, _mode_integrand(profile, mode.mu), cell,
                             profile.breakpoints)
    return (value, err) if full_output else value


# --------------------------------------------------------------------------
# Adaptive quadrature in the log-radius variable
# --------------------------------------------------------------------------


def _log_pieces(profile: RadialProfile, hi: float | None = None):
    R = profile.R if hi is None else hi
    cuts = sorted(b for b in profile.breakpoints if 0 < b < R)
    edges = [-math.inf] + [math.log(b) for b in cuts] + [math.log(R) if np.isfinite(R) else math.inf]
    return list(zip(edges[:-1], edges[1:]))


def _tail_diverges(fs, edge: float, direction: float) -> bool:
    """Whether an infinite tail of ``fs`` (in s = log r) fails to be integrable.

    quad maps an infinite range onto a finite one and can return a large
    finite number with a tiny error for a divergent tail, so the tail is
    probed first: ``|fs(s)| |s - edge|`` must keep shrinking, by at least a
    factor 0.7 per fourfold distance, as s runs out along the tail.
    """
    if not np.isfinite(edge):
        edge = 0.0
    # beyond |s| ~ 160 plain powers of r start to overflow on their own
    d = np.array([10.0, 40.0, 160.0])
    pts = edge + direction * d
    pts = pts[pts <= 700.0]
    if pts.size < 2:
        return False
    with np.errstate(all="ignore"):
        v = np.abs(np.asarray(fs(pts), dtype=float)) * (pts - edge) * direction
    if not np.all(np.isfinite(v)):
        # overflow (possibly as inf * 0 = nan) means the integrand does not decay
        return True
    return bool(v[-1] > 0 and v[-1] >= 0.7 * v[-2])


def _quad_log(fs, pieces, epsrel: float = 1e-13) -> tuple[float, float]:
    """Sum of adaptive integrals of ``fs`` (a function of s = log r) over ``pieces``."""
    def g(s):
        if s > 700.0:
            return 0.0
        v = float(fs(np.array([s]))[0])
        return v if np.isfinite(v) else 0.0

    total, err = 0.0, 0.0
    for a, b in pieces:
        if (math.isinf(a) and _tail_diverges(fs, b, -1.0)) or (
                math.isinf(b) and _tail_diverges(fs, a, 1.0)):
            return math.inf, math.inf
        with warnings.catch_warnings():
            # endpoint singularities; the returned error estimate still reflects them
            warnings.simplefilter("ignore", _spi.IntegrationWarning)
            val, e = _spi.quad(g, a, b, epsabs=0.0, epsrel=epsrel, limit=400)
        total += val
        err += e
    return total, err


def _weighted_log_integrand(profile: RadialProfile, weight: WeightSpec, power: float):
    N = profile.N

    def fs(s):
        with np.errstate(all="ignore"):
            f = np.abs(profile.value(np.exp(s)))
            return np.where(f == 0.0, 0.0, f ** power * weight.log_density(s, N))

    return fs


def _mode_log_integrand(profile: RadialProfile, mu: float):
    N = profile.N

    def fs(s):
        r = np.exp(s)
        with np.errstate(all="ignore"):
            f = profile.value(r)
            df = profile.derivative(r)
            pot = np.where(f == 0.0, 0.0, mu * f * f * np.exp((N - 2.0) * s)) if mu else 0.0
            return df * df * np.exp(N * s) + pot

    return fs


def integrate_adaptive(profile: RadialProfile, weight: WeightSpec, power: float = 2.0,
                       full_output: bool = False):
    """Same integral as :func:`integrate`, by adaptive quadrature over the
    profile's smooth pieces in the variable log r."""
    value, err = _quad_log(_weighted_log_integrand(profile, weight, power), _log_pieces(profile))
    return (value, err) if full_output else value


def mode_energy_adaptive(profile: RadialProfile, mode: AngularMode, full_output: bool = False):
    _check_dims(profile, mode.N)
    value, err = _quad_log(_mode_log_integrand(profile, mode.mu), _log_pieces(profile))
    return (value, err) if full_output else value


def grid_for(profile: RadialProfile, count: int = 2001, r_min: float = 1e-8,
             r_max: float | None = None) -> Grid:
    """Grid for a profile: r = 0, geometric nodes toward 0, and breakpoints.

    For a finite outer radius a second geometric family clusters toward R,
    where derivatives such as log(1/r)^(alpha-1) are singular; the cell
    touching R is then integrated adaptively by :func:`integrate` and
    :func:`mode_energy`.
    """
    R = profile.R if np.isfinite(profile.R) else (r_max or 1e3)
    ratio = (r_min / R) ** (1.0 / (count - 1))
    parts = [[0.0], build_grid((0.0, R), count, "geometric", ratio).nodes]
    if np.isfinite(profile.R):
        # the last cell stays wide enough (1e-3 R) for the adaptive end-cell
        # rule to extrapolate an algebraic singularity; closer to R, r = R e^s
        # rounds to R before the singular mass is resolved
        parts.append(R - R * np.geomspace(0.5, 1e-3, count // 2 + 1))
    parts.append([b for b in profile.breakpoints if 0 < b < R])
    return Grid(np.unique(np.concatenate(parts)), "mixed", None, (0.0, R))
