"""Explicit test families, their Rayleigh quotients, and the u_lambda transform.

Every family is a radial factor paired with the first nonconstant angular
mode (k = 1): cos(theta) in the plane, the coordinate function x_1 for
N >= 3.  Numerator and denominator then share the angular factor, so the
reported quotients are purely radial.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate as _spi
from scipy.interpolate import CubicHermiteSpline
from scipy.special import exp1

from .radial import (AngularMode, ClassicalBall, ClassicalWholeSpace, CriticalDisk,
                     RadialProfile, grid_for, integrate, integrate_adaptive, mode_energy,
                     mode_energy_adaptive, critical_hardy)

__all__ = [
    "UAlpha",
    "VM",
    "FABall",
    "FAWholeSpace",
    "ULambda",
    "QuotientReport",
    "make_family",
    "quotient",
    "transform_u_lambda",
    "dirichlet_energy",
    "weighted_lq",
    "weighted_inner",
]

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class UAlpha:
    alpha: float
    a: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise ValueError("alpha must exceed 1/2")
        if not self.a >= 1:
            raise ValueError("a must be at least 1")


@dataclass(frozen=True)
class VM:
    m: int
    N: int = 3

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")
        if self.N < 3:
            raise ValueError("v_m needs N >= 3")


@dataclass(frozen=True)
class FABall:
    a_exp: float
    N: int = 2

    def __post_init__(self):
        if not self.a_exp > 0:
            raise ValueError("exponent must be positive")


@dataclass(frozen=True)
class FAWholeSpace:
    a_exp: float
    N: int = 3

    def __post_init__(self):
        if not self.a_exp > (self.N - 2) / 2:
            raise ValueError("exponent must exceed (N-2)/2; the weighted tail integral diverges")


@dataclass(frozen=True)
class ULambda:
    lam: float
    a: float
    base: object = field(default_factory=lambda: UAlpha(1.0, 2.0))


# --------------------------------------------------------------------------
# Piecewise profiles with exact power-term integrals
# --------------------------------------------------------------------------

Terms = list  # [(coef, exponent)], meaning sum coef * r**exponent


def _mul(a: Terms, b: Terms) -> Terms:
    return [(c1 * c2, e1 + e2) for c1, e1 in a for c2, e2 in b]


def _int_terms(terms: Terms, lo: float, hi: float) -> float:
    total = 0.0
    for c, e in terms:
        if c == 0.0:
            continue
        if abs(e + 1.0) < 1e-14:
            total += c * math.log(hi / lo)
        elif math.isinf(hi):
            if e >= -1:
                return math.inf
            total += -c * lo ** (e + 1) / (e + 1)
        else:
            total += c * (hi ** (e + 1) - (lo ** (e + 1) if lo > 0 or e > -1 else math.inf)) / (e + 1)
    return total


@dataclass
class _Piece:
    lo: float
    hi: float
    f: object       # callable
    df: object      # callable
    terms: Terms | None = None  # power-term form of f, when available


def _poly_terms(poly: np.polynomial.Polynomial) -> Terms:
    return [(float(c), float(j)) for j, c in enumerate(poly.coef)]


def _piecewise_profile(pieces: list[_Piece], N: int, name: str, params: dict,
                       dirichlet: bool = True) -> RadialProfile:
    for left, right in zip(pieces, pieces[1:]):
        x = np.array([left.hi])
        fl, fr = float(left.f(x)[0]), float(right.f(x)[0])
        if abs(fl - fr) > 1e-12 * max(1.0, abs(fl)):
            raise ValueError(f"{name}: discontinuity {fl} vs {fr} at r = {left.hi}")
    R = pieces[-1].hi

    def _select(which):
        def fn(r):
            r = np.asarray(r, dtype=float)
            out = np.zeros_like(r)
            with np.errstate(all="ignore"):
                for i, pc in enumerate(pieces):
                    mask = (r >= pc.lo) & ((r < pc.hi) if i < len(pieces) - 1 else (r <= pc.hi))
                    if np.any(mask):
                        out[mask] = getattr(pc, which)(r[mask])
            return out
        return fn

    bps = tuple(pc.hi for pc in pieces[:-1])
    params = dict(params, pieces=pieces)
    return RadialProfile(N, R, _select("f"), _select("df"), dirichlet, bps, name, params)


def make_family(spec):
    """Build a family member; returns ``(profile, AngularMode(1, N))``."""
    if isinstance(spec, UAlpha):
        al = spec.alpha
        c = 2.0 * LOG2 ** al
        pieces = [
            _Piece(0.0, 0.5, lambda r: c * r, lambda r: c + 0 * r, [(c, 1.0)]),
            _Piece(0.5, 1.0, lambda r: np.log(1 / r) ** al,
                   lambda r: -al * np.log(1 / r) ** (al - 1) / r),
        ]
        prof = _piecewise_profile(pieces, 2, "u_alpha", {"family": spec})
        return prof, AngularMode(1, 2)
    if isinstance(spec, VM):
        m, N = spec.m, spec.N
        b = (N - 2) / 2
        r0, r1 = 1.0 / (2 * m), 1.0 / m
        s = 2.0 * m * (m ** b - 1.0)
        pieces = [
            _Piece(0.0, r0, lambda r: 0 * r, lambda r: 0 * r, [(0.0, 0.0)]),
            _Piece(r0, r1, lambda r: s * (r - r0), lambda r: s + 0 * r, [(s, 1.0), (-s * r0, 0.0)]),
            _Piece(r1, 1.0, lambda r: r ** -b - 1.0, lambda r: -b * r ** (-b - 1),
                   [(1.0, -b), (-1.0, 0.0)]),
        ]
        return _piecewise_profile(pieces, N, "v_m", {"family": spec}), AngularMode(1, N)
    if isinstance(spec, FABall):
        ae, N = spec.a_exp, spec.N
        herm = CubicHermiteSpline([0.5, 1.0], [0.5 ** ae, 0.0], [ae * 0.5 ** (ae - 1), 0.0])
        local = np.polynomial.Polynomial(herm.c[::-1, 0])
        poly = local(np.polynomial.Polynomial([-0.5, 1.0]))
        dpoly = poly.deriv()
        pieces = [
            _Piece(0.0, 0.5, lambda r: r ** ae, lambda r: ae * r ** (ae - 1), [(1.0, ae)]),
            _Piece(0.5, 1.0, poly, dpoly, _poly_terms(poly)),
        ]
        return _piecewise_profile(pieces, N, "f_a_ball", {"family": spec}), AngularMode(1, N)
    if isinstance(spec, FAWholeSpace):
        ae, N = spec.a_exp, spec.N
        pieces = [
            _Piece(0.0, 1.0, lambda r: r, lambda r: 1 + 0 * r, [(1.0, 1.0)]),
            _Piece(1.0, math.inf, lambda r: r ** -ae, lambda r: -ae * r ** (-ae - 1), [(1.0, -ae)]),
        ]
        return (_piecewise_profile(pieces, N, "f_a_whole", {"family": spec}, dirichlet=False),
                AngularMode(1, N))
    if isinstance(spec, ULambda):
        base, _ = make_family(spec.base)
        return transform_u_lambda(base, spec.lam, spec.a), AngularMode(1, 2)
    raise TypeError(f"unknown family spec {spec!r}")


# --------------------------------------------------------------------------
# Quotients
# --------------------------------------------------------------------------


@dataclass
class QuotientReport:
    family: str
    params: dict
    geometry: str
    numerator: float
    denominator: float
    quotient: float
    err: float
    angular_numerator: float
    angular_denominator: float
    method: str = "exact"

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def full_quotient(self) -> float:
        """Quotient with the angular factors restored."""
        return self.quotient * self.angular_numerator / self.angular_denominator


def _spec_params(spec) -> dict:
    if spec is None:
        return {}
    d = {}
    for k, v in asdict(spec).items():
        d[k] = v if not isinstance(v, dict) else str(v)
    return d


def _geo_name(geo) -> str:
    return {CriticalDisk: "critical-disk", ClassicalBall: "classical-ball",
            ClassicalWholeSpace: "whole-space"}[type(geo)]


def _exact_u_alpha(spec: UAlpha, a: float) -> tuple[float, float]:
    al = spec.alpha
    c2 = 4.0 * LOG2 ** (2 * al)
    num = c2 / 4.0 + al * al * LOG2 ** (2 * al - 1) / (2 * al - 1) + LOG2 ** (2 * al + 1) / (2 * al + 1)
    x = math.log(2.0 * a)
    den_in = c2 * a * a * (math.exp(-2 * x) / x - 2.0 * exp1(2 * x))
    if a == 1.0:
        den_out = LOG2 ** (2 * al - 1) / (2 * al - 1)
    else:
        la = math.log(a)
        den_out, _ = _spi.quad(lambda t: 1.0 / (t + la) ** 2, 0.0, LOG2, weight="alg",
                               wvar=(2 * al, 0.0), epsabs=0.0, epsrel=1e-13)
    return num, den_in + den_out


def _exact_power(pieces: list[_Piece], N: int, mu: float) -> tuple[float, float]:
    num = den = 0.0
    for pc in pieces:
        f = pc.terms
        df = [(c * e, e - 1) for c, e in f if e != 0.0]
        f2 = _mul(f, f)
        if df:
            num += _int_terms([(c, e + N - 1) for c, e in _mul(df, df)], pc.lo, pc.hi)
        num += mu * _int_terms([(c, e + N - 3) for c, e in f2], pc.lo, pc.hi)
        den += _int_terms([(c, e + N - 3) for c, e in f2], pc.lo, pc.hi)
    return num, den


def quotient(profile: RadialProfile, geometry, mode: AngularMode | None = None,
             method: str = "auto") -> QuotientReport:
    """Rayleigh quotient of ``profile * g_k`` for the geometry's Hardy weight.

    ``method`` is ``"exact"`` (piecewise closed forms, families only),
    ``"adaptive"`` (adaptive quadrature in log r) or ``"grid"`` (composite
    trapezoid with a Richardson error estimate); ``"auto"`` prefers exact.
    """
    N = profile.N
    mode = mode or AngularMode(1, N)
    if isinstance(geometry, CriticalDisk) and N != 2:
        raise ValueError("critical disk needs N = 2")
    if getattr(geometry, "N", N) != N:
        raise ValueError("profile and geometry dimensions differ")
    weight = geometry.weight(2.0)
    spec = profile.params.get("family")
    exact_ok = spec is not None and mode.k == 1 and (
        (isinstance(spec, UAlpha) and isinstance(geometry, CriticalDisk))
        or (not isinstance(spec, UAlpha) and not isinstance(geometry, CriticalDisk)))
    if method == "auto":
        method = "exact" if exact_ok else "adaptive"
    if method == "exact":
        if not exact_ok:
            raise ValueError("no closed form for this profile/geometry pair")
        if isinstance(spec, UAlpha):
            num, den = _exact_u_alpha(spec, geometry.a)
        else:
            num, den = _exact_power(profile.params["pieces"], N, mode.mu)
        err = 0.0
    elif method == "adaptive":
        num, e1 = mode_energy_adaptive(profile, mode, full_output=True)
        den, e2 = integrate_adaptive(profile, weight, full_output=True)
        err = (e1 + abs(num / den) * e2) / abs(den) if den else math.inf
    elif method == "grid":
        grid = grid_for(profile, count=4001)
        num, e1 = mode_energy(profile, mode, grid, full_output=True)
        den, e2 = integrate(profile, weight, grid, full_output=True)
        err = (e1 + abs(num / den) * e2) / abs(den) if den else math.inf
    else:
        raise ValueError(f"unknown method {method!r}")
    if not den > 0:
        raise ValueError("zero denominator")
    ang = mode.l2_mass
    return QuotientReport(profile.name, _spec_params(spec), _geo_name(geometry), num, den,
                          num / den, err, ang, ang, method)


# --------------------------------------------------------------------------
# u_lambda
# --------------------------------------------------------------------------


def transform_u_lambda(base: RadialProfile, lam: float, a: float) -> RadialProfile:
    """u_lambda(r) = lam^(-1/2) u(s) with s = a (r/a)^lam.

    The base must be planar and supported in the unit disk; the image is
    supported in the disk of radius a^(1 - 1/lam).
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if lam > 1:
        raise ValueError("lambda must not exceed 1")
    if not a > 1:
        raise ValueError("a must exceed 1")
    if base.N != 2:
        raise ValueError("u_lambda is defined for planar profiles")
    if base.R > 1:
        raise ValueError("base profile must be supported in the unit disk")
    scale = lam ** -0.5

    def s_of(r):
        return a * (np.asarray(r, dtype=float) / a) ** lam

    def value(r):
        r = np.asarray(r, dtype=float)
        s = s_of(r)
        return np.where(s <= base.R, scale * base.value(np.minimum(s, base.R)), 0.0)

    def derivative(r):
        r = np.asarray(r, dtype=float)
        s = s_of(r)
        with np.errstate(all="ignore"):
            d = scale * base.derivative(np.minimum(s, base.R)) * lam * s / r
        return np.where(s < base.R, d, 0.0)

    def r_of(s):
        return a * (s / a) ** (1.0 / lam)

    R = r_of(base.R)
    bps = tuple(r_of(b) for b in base.breakpoints)
    params = {"lam": lam, "a": a, "base": base.name, "support_radius": a ** (1 - 1 / lam)}
    return RadialProfile(2, R, value, derivative, base.dirichlet, bps, f"u_lambda({base.name})",
                         params)


def dirichlet_energy(profile: RadialProfile, mode: AngularMode | None = None) -> float:
    """Full Dirichlet energy of ``profile * g_k`` (angular factor included); k = 0 by default."""
    mode = mode or AngularMode(0, profile.N)
    return mode.l2_mass * mode_energy_adaptive(profile, mode)


def weighted_lq(profile: RadialProfile, a: float, q: float = 2.0,
                mode: AngularMode | None = None) -> float:
    """Full critical-weight integral of |u|^q, u = profile * g_k (k = 0 by default)."""
    mode = mode or AngularMode(0, 2)
    return mode.lq_mass(q) * integrate_adaptive(profile, critical_hardy(a, q), power=q)


def weighted_inner(p1: RadialProfile, p2: RadialProfile, a: float) -> float:
    """Inner product of two radial functions in the critical weighted L^2 (q = 2)."""
    bps = sorted(set(p1.breakpoints) | set(p2.breakpoints) | {p1.R, p2.R})
    R = min(p1.R, p2.R)
    edges = [-math.inf] + [math.log(b) for b in bps if 0 < b < R] + [math.log(R)]

    def g(s):
        r = math.exp(s)
        if r == 0.0:
            return 0.0
        x = np.array([r])
        return float(p1.value(x)[0] * p2.value(x)[0]) / math.log(a / r) ** 2

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _spi.quad(g, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    return 2.0 * math.pi * total
