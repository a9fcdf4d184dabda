"""Seeded property suites for the non-spectral inequalities and identities.

Each ``check_*`` function returns a :class:`Report`; the ``SUITES`` table
maps suite names (as used on the command line) to runners taking a
:class:`TrialConfig`.  Trial ``i`` draws from ``default_rng([seed, i])``, so
results depend only on (seed, index) and reruns are identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _spi

from .radial import RadialProfile, mode_energy_adaptive, integrate_adaptive, AngularMode, \
    PLAIN_MASS, sphere_area
from .rearrangement import (LorentzParams, StepFunction, decreasing_rearrangement, dilate,
                            lorentz_norm, lp_norm, tail_head_bound, weak_norm)

__all__ = [
    "TrialConfig",
    "Report",
    "InterpolationTriple",
    "random_step",
    "check_interpolation",
    "holder_failure_ratio",
    "holder_failure_slope",
    "check_radial_bound",
    "check_poincare_circle",
    "exponent_split",
    "check_hardy_1d",
    "SUITES",
    "run_suite",
]

REL_SLACK = 1e-12


@dataclass(frozen=True)
class TrialConfig:
    trials: int = 1000
    seed: int = 0
    pieces: tuple[int, int] = (1, 50)
    values: tuple[float, float] = (1e-3, 1e3)
    measures: tuple[float, float] = (1e-3, 1e3)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, index])


@dataclass
class Report:
    suite: str
    trials: int = 0
    violations: int = 0
    skipped: int = 0
    max_ratio: float = 0.0
    details: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, index: int, lhs: float, rhs: float, slack: float = REL_SLACK) -> bool:
        """Count one trial of ``lhs <= rhs``; returns whether it held."""
        self.trials += 1
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs <= 0 else math.inf)
        self.max_ratio = max(self.max_ratio, ratio)
        ok = lhs <= rhs + slack * abs(rhs)
        if not ok:
            self.violations += 1
            if len(self.failures) < 20:
                self.failures.append({"trial": index, "lhs": lhs, "rhs": rhs})
        return ok

    def merge(self, other: "Report") -> "Report":
        self.trials += other.trials
        self.violations += other.violations
        self.skipped += other.skipped
        self.max_ratio = max(self.max_ratio, other.max_ratio)
        self.failures.extend(other.failures[: max(0, 20 - len(self.failures))])
        return self

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "trials": self.trials,
            "violations": self.violations,
            "skipped": self.skipped,
            "max_ratio": self.max_ratio,
            "details": self.details,
            "failures": self.failures,
        }


def random_step(rng: np.random.Generator, cfg: TrialConfig, N: int = 3) -> StepFunction:
    """Canonical random step function with log-uniform values and measures."""
    n = int(rng.integers(cfg.pieces[0], cfg.pieces[1] + 1))
    lv = rng.uniform(math.log(cfg.values[0]), math.log(cfg.values[1]), n)
    lm = rng.uniform(math.log(cfg.measures[0]), math.log(cfg.measures[1]), n)
    return decreasing_rearrangement(StepFunction(np.exp(lv), np.exp(lm), N))


# --------------------------------------------------------------------------
# Interpolation between weak spaces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InterpolationTriple:
    p: float
    q: float
    r: float

    def __post_init__(self):
        if not (1 <= self.p < self.q < self.r):
            raise ValueError("need 1 <= p < q < r <= inf")

    @property
    def lam(self) -> float:
        p, q, r = self.p, self.q, self.r
        if math.isinf(r):
            return p / q
        return p * (r - q) / (q * (r - p))

    @property
    def D(self) -> float:
        p, q, r = self.p, self.q, self.r
        if math.isinf(r):
            return (q / (q - p)) ** (1 / q)
        return (q * (r - p) / ((r - q) * (q - p))) ** (1 / q)

    def split_terms(self, Wp: float, Wr: float):
        """(A, a, B, b) of the bound ``A s^a + B s^-b`` on ||u||_q^q."""
        p, q, r = self.p, self.q, self.r
        if math.isinf(r):
            A, a = Wr ** q, 1.0
        else:
            A, a = r / (r - q) * Wr ** q, (r - q) / r
        return A, a, p / (q - p) * Wp ** q, (q - p) / p

    def s_star(self, Wp: float, Wr: float) -> float:
        p, r = self.p, self.r
        expo = p if math.isinf(r) else p * r / (r - p)
        return (Wp / Wr) ** expo


def check_interpolation(triple: InterpolationTriple, cfg: TrialConfig, N: int = 3) -> Report:
    """||u||_q <= D ||u||_{p,inf}^lam ||u||_{r,inf}^(1-lam) over random step functions.

    Also checks that s* = (W_p / W_r)^(pr/(r-p)) is the minimizer of the
    split bound and that the bound there equals D^q W_p^(q lam) W_r^(q(1-lam)).
    """
    rep = Report(f"interpolation{(triple.p, triple.q, triple.r)}")
    lam, D, q = triple.lam, triple.D, triple.q
    opt_bad = 0
    for i in range(cfg.trials):
        u = random_step(cfg.rng(i), cfg, N)
        Wp = weak_norm(u, triple.p)
        Wr = weak_norm(u, triple.r)
        if Wr == 0:
            rep.skipped += 1
            continue
        lhs = lp_norm(u, q)
        rhs = D * Wp ** lam * Wr ** (1 - lam)
        rep.record(i, lhs, rhs)
        A, a, B, b = triple.split_terms(Wp, Wr)
        s = triple.s_star(Wp, Wr)
        s_direct = (B * b / (A * a)) ** (1 / (a + b))
        bound = A * s ** a + B * s ** -b
        closed = rhs ** q
        if (abs(s - s_direct) > 1e-9 * s or abs(bound - closed) > 1e-9 * closed
                or lhs ** q > bound * (1 + REL_SLACK)):
            opt_bad += 1
    rep.violations += opt_bad
    rep.details = {"lambda": lam, "D": D, "optimizer_violations": opt_bad}
    return rep


# --------------------------------------------------------------------------
# Hoelder failure in weak L^p
# --------------------------------------------------------------------------


def holder_failure_ratio(eps: float, N: int, p: float, q: float) -> float:
    """||fg||_2 / (||f||_q ||g||_{p,inf}) for f = |x|^-alpha 1_B, g = |x|^(-N/p).

    alpha = N/q - eps.  Closed forms on the unit ball:
    ||f||_q^q = omega/(q eps), ||g||_{p,inf} = (omega/N)^(1/p), and the product
    is taken with |fg|^2 = |x|^(-N + 2 eps), so ||fg||_2^2 = omega/(2 eps).
    The ratio grows like eps^(1/q - 1/2) as eps -> 0.
    """
    if not p < 2 < q:
        raise ValueError("need p < 2 < q")
    if N > 2 and not q < 2 * N / (N - 2):
        raise ValueError("need q < 2N/(N-2)")
    if not eps > 0:
        raise ValueError("eps must be positive")
    alpha = N / q - eps
    if not alpha > 0:
        raise ValueError(f"eps = {eps} too large: alpha = {alpha} <= 0")
    om = sphere_area(N)
    f_q = (om / (q * eps)) ** (1 / q)
    g_weak = (om / N) ** (1 / p)
    fg_2 = (om / (2 * eps)) ** 0.5
    return fg_2 / (f_q * g_weak)


def holder_failure_slope(N: int, p: float, q: float, eps_list=(1e-1, 1e-2, 1e-3, 1e-4)) -> float:
    """Least-squares slope of log ratio against log eps."""
    e = np.asarray(eps_list, dtype=float)
    ratios = np.array([holder_failure_ratio(x, N, p, q) for x in e])
    return float(np.polyfit(np.log(e), np.log(ratios), 1)[0])


# --------------------------------------------------------------------------
# Radial lemma, Poincare on the circle, exponent algebra, 1D Hardy
# --------------------------------------------------------------------------


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.rhs - self.lhs


def check_radial_bound(profile: RadialProfile, grid=None, slack: float = 1e-10) -> BoundCheck:
    """sup |f(r)| r^((N-1)/2) <= sqrt(2/omega) ||f||_2^(1/2) ||grad f||_2^(1/2)."""
    N = profile.N
    om = sphere_area(N)
    l2 = om * integrate_adaptive(profile, PLAIN_MASS)
    grad = om * mode_energy_adaptive(profile, AngularMode(0, N))
    if not (np.isfinite(l2) and np.isfinite(grad)):
        raise ValueError("profile norms are infinite")
    R = profile.R if np.isfinite(profile.R) else 1e3
    r = np.geomspace(1e-8 * R, R, 20001) if grid is None else np.asarray(getattr(grid, "nodes", grid))
    r = r[r > 0]
    lhs = float(np.max(np.abs(profile.value(r)) * r ** ((N - 1) / 2)))
    rhs = math.sqrt(2 / om) * l2 ** 0.25 * grad ** 0.25
    return BoundCheck(lhs, rhs, lhs <= rhs + slack, {"l2": l2, "grad": grad})


@dataclass
class PoincareCheck:
    mass: float
    energy: float
    holds: bool
    equality: bool


def check_poincare_circle(a, b=None) -> PoincareCheck:
    """Parseval form of the zero-mean Poincare inequality on the circle.

    ``g = sum_k a_k cos(k t) + b_k sin(k t)``, index 0 being the constant
    term, which must vanish.  ``mass`` and ``energy`` omit the common factor pi.
    """
    a = np.asarray(a, dtype=float)
    b = np.zeros_like(a) if b is None else np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("coefficient arrays differ in length")
    if a.size and a[0] != 0:
        raise ValueError("constant term present: g does not have zero mean")
    k = np.arange(a.size, dtype=float)
    c2 = a ** 2 + b ** 2
    c2[0] = 0.0
    mass = float(np.sum(c2))
    energy = float(np.sum(k ** 2 * c2))
    only_first = bool(np.all(c2[2:] == 0))
    return PoincareCheck(mass, energy, mass <= energy, only_first and mass == energy)


def exponent_split(p: float, q: float) -> tuple[float, float]:
    """Hoelder exponents r = q + (q-2)/(p-1) and r~ = p/(p-1) (1 + q/2 - 2/p).

    Raises AssertionError if r~ = r/2 + 1 fails beyond rounding.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if q < 2:
        raise ValueError("q must be >= 2")
    r = q + (q - 2) / (p - 1)
    # p/(p-1) (1 + q/2 - 2/p) regrouped as 2 + p(q-2)/(2(p-1)): both terms
    # are nonnegative, so nothing cancels as p -> 1
    rt = 2 + p * (q - 2) / (2 * (p - 1))
    if abs(rt - (r / 2 + 1)) > 1e-14 * max(1.0, abs(rt)):
        raise AssertionError(f"exponent identity fails: {rt} vs {r / 2 + 1}")
    return r, rt


def check_hardy_1d(f, df, L: float, upper: float = math.inf) -> BoundCheck:
    """int_L^upper f'^2 dt >= (1/4) int_L^upper f^2 / t^2 dt for f(L) = 0.

    Returned as ``lhs = (1/4) int f^2/t^2`` and ``rhs = int f'^2`` so that
    ``gap = rhs - lhs`` is the reported margin.
    """
    if not L >= 0:
        raise ValueError("L must be nonnegative")
    fL = abs(float(np.asarray(f(np.array([max(L, 1e-300)])))[0]))
    if fL > 1e-12:
        raise ValueError("boundary condition f(L) = 0 violated")

    def piece(fn):
        def g(s):
            e = math.exp(s) if s < 700 else math.inf
            t = L + e
            if not np.isfinite(t) or t > upper:
                return 0.0
            with np.errstate(all="ignore"):
                v = float(fn(t))
            return v * e if np.isfinite(v) else 0.0
        hi = math.log(upper - L) if np.isfinite(upper) else math.inf
        return _spi.quad(g, -math.inf, hi, epsabs=0.0, epsrel=1e-12, limit=400)[0]

    kinetic = piece(lambda t: np.square(np.asarray(df(np.array([t])))[0]))
    weighted = piece(lambda t: np.square(np.asarray(f(np.array([t])))[0] / t))
    lhs = 0.25 * weighted
    return BoundCheck(lhs, kinetic, lhs <= kinetic * (1 + REL_SLACK),
                      {"kinetic": kinetic, "weighted": weighted})


# --------------------------------------------------------------------------
# Suites
# --------------------------------------------------------------------------

INTERPOLATION_TRIPLES = ((1.0, 2.0, 3.0), (1.5, 2.0, 6.0), (2.0, 3.0, 50.0), (2.0, 3.0, math.inf))


def suite_interpolation(cfg: TrialConfig) -> Report:
    rep = Report("interpolation")
    per = {}
    for t in INTERPOLATION_TRIPLES:
        sub = check_interpolation(InterpolationTriple(*t), cfg)
        per[str(t)] = sub.to_dict()
        rep.merge(sub)
    rep.details = {"per_triple": {k: {kk: v[kk] for kk in ("trials", "violations", "max_ratio")}
                                  for k, v in per.items()}}
    return rep


def suite_lorentz_scaling(cfg: TrialConfig, N: int = 3) -> Report:
    rep = Report("lorentz-scaling")
    beta = (N - 2) / 2
    worst = 0.0
    for i in range(cfg.trials):
        rng = cfg.rng(i)
        u = random_step(rng, cfg, N)
        m = math.exp(rng.uniform(math.log(1e-2), math.log(1e2)))
        for p, q in ((5.0, 2.0), (3.0, math.inf), (2.0, 2.0)):
            base = lorentz_norm(u, LorentzParams(p, q))
            got = lorentz_norm(dilate(u, m, beta, N), LorentzParams(p, q))
            want = m ** (beta - N / p) * base
            rel = abs(got - want) / want
            worst = max(worst, rel)
            rep.record(i, rel, 1e-12, slack=0.0)
    rep.details = {"max_rel_error": worst}
    return rep


def suite_tail_head(cfg: TrialConfig) -> Report:
    rep = Report("tail-head")
    for i in range(cfg.trials):
        rng = cfg.rng(i)
        u = random_step(rng, cfg, 3)
        R = float(np.median(u.breakpoints))
        lhs, rhs = tail_head_bound(u, LorentzParams(1.2), R, "tail")
        rep.record(i, lhs, rhs)
        lhs, rhs = tail_head_bound(u, LorentzParams(8.0), R, "head")
        rep.record(i, lhs, rhs)
    return rep


def _random_bump_profile(rng: np.random.Generator, N: int) -> RadialProfile:
    n = int(rng.integers(1, 5))
    c = rng.uniform(-2, 2, n)
    r0 = rng.uniform(0, 3, n)
    w = rng.uniform(0.2, 1.5, n)

    def value(r):
        r = np.asarray(r, dtype=float)[..., None]
        return np.sum(c * np.exp(-((r - r0) / w) ** 2), axis=-1)

    def derivative(r):
        r = np.asarray(r, dtype=float)[..., None]
        z = (r - r0) / w
        return np.sum(-2 * c * z / w * np.exp(-z ** 2), axis=-1)

    return RadialProfile(N, 30.0, value, derivative, False, (), "bumps")


def suite_radial_lemma(cfg: TrialConfig) -> Report:
    rep = Report("radial-lemma")
    for i in range(cfg.trials):
        rng = cfg.rng(i)
        N = int(rng.choice([3, 4]))
        chk = check_radial_bound(_random_bump_profile(rng, N), np.linspace(1e-6, 30.0, 6001))
        rep.record(i, chk.lhs, chk.rhs + 1e-10, slack=0.0)
    return rep


def suite_poincare(cfg: TrialConfig) -> Report:
    rep = Report("poincare")
    bad_equality = 0
    for i in range(cfg.trials):
        rng = cfg.rng(i)
        a = rng.normal(size=11)
        b = rng.normal(size=11)
        a[0] = 0.0
        if i % 4 == 0:
            # single first-mode polynomial: equality case
            a[2:] = 0.0
            b[2:] = 0.0
        chk = check_poincare_circle(a, b)
        rep.record(i, chk.mass, chk.energy)
        # equality exactly when only the k = 1 coefficients survive
        if chk.equality != (i % 4 == 0):
            bad_equality += 1
    rep.violations += bad_equality
    rep.details = {"equality_mismatches": bad_equality}
    return rep


def suite_exponent_split(cfg: TrialConfig) -> Report:
    rep = Report("exponent-split")
    for i in range(cfg.trials):
        rng = cfg.rng(i)
        p = 1.0 + math.exp(rng.uniform(math.log(1e-3), math.log(1e3)))
        q = 2.0 + math.exp(rng.uniform(math.log(1e-3), math.log(1e3)))
        r, rt = exponent_split(p, q)
        rep.record(i, abs(rt - (r / 2 + 1)), 1e-14 * max(1.0, rt), slack=0.0)
    return rep


def suite_holder(cfg: TrialConfig) -> Report:
    rep = Report("holder")
    cases = [(2, 1.5, 3.0), (3, 1.5, 4.0), (3, 1.0, 5.0), (4, 1.8, 3.0)]
    slopes = {}
    for N, p, q in cases:
        s = holder_failure_slope(N, p, q)
        slopes[str((N, p, q))] = s
        rep.record(len(slopes), abs(s - (1 / q - 0.5)), 0.05, slack=0.0)
    rep.details = {"slopes": slopes}
    return rep


def suite_hardy_1d(cfg: TrialConfig) -> Report:
    rep = Report("hardy-1d")
    for i in range(cfg.trials):
        rng = cfg.rng(i)
        L = float(rng.uniform(0.0, 3.0))
        k = float(rng.uniform(0.3, 3.0))
        n = float(rng.uniform(1.0, 3.0))
        f = lambda t, L=L, k=k, n=n: (t - L) ** n * np.exp(-k * (t - L))
        df = lambda t, L=L, k=k, n=n: ((n * (t - L) ** (n - 1) - k * (t - L) ** n)
                                       * np.exp(-k * (t - L)))
        chk = check_hardy_1d(f, df, L)
        rep.record(i, chk.lhs, chk.rhs)
    return rep


def suite_rearrangement(cfg: TrialConfig) -> Report:
    rep = Report("rearrangement")
    for i in range(cfg.trials):
        rng = cfg.rng(i)
        n = int(rng.integers(cfg.pieces[0], cfg.pieces[1] + 1))
        raw = StepFunction(np.exp(rng.uniform(-3, 3, n)), np.exp(rng.uniform(-3, 3, n)))
        star = decreasing_rearrangement(raw)
        for s in (1.0, 2.0, 2.5, 6.0):
            want = raw.moment(s)
            rep.record(i, abs(star.moment(s) - want), 1e-12 * want, slack=0.0)
    return rep


SUITES = {
    "interpolation": suite_interpolation,
    "lorentz-scaling": suite_lorentz_scaling,
    "tail-head": suite_tail_head,
    "radial-lemma": suite_radial_lemma,
    "poincare": suite_poincare,
    "exponent-split": suite_exponent_split,
    "holder": suite_holder,
    "hardy-1d": suite_hardy_1d,
    "rearrangement": suite_rearrangement,
}


def run_suite(name: str, cfg: TrialConfig) -> Report:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn(cfg)
