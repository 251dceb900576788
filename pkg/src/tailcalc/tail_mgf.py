"""Tail envelopes to MGF envelopes and back.

Tail to MGF goes through the integral ``I(lam) = int exp(lam x - zeta(x)) dx``
bounded by an infimum over ``eps`` of ``K(eps) exp((1-eps) zeta*(lam/(1-eps)))``.
MGF to tail is the Chernov bound ``exp(-kappa*(x))``.  The bounded-support pair
(tails ``x^theta L(x) e^-x`` against MGFs blowing up at ``|lam| = 1``) lives here too.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

from .gls import slowly_varying
from .gridfn import GridFunction, build_grid_function, conjugate_values, symmetric_grid
from .tail_moment import BoundsWarning, RegimeError, TailEnvelope, log_moment_bound

EPS_LO, EPS_HI, EPS_POINTS = 1e-3, 0.999, 200
BISECTION_RTOL = 1e-3
THETA_REGIME = 0.5


class DivergenceError(ValueError):
    """An integral or series needed by the conversion diverges."""


class KramerError(ValueError):
    """Kramer's condition fails: the MGF is not finite near 0."""


# ---------------------------------------------------------------------------
# Young functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class YoungFunction:
    """Even convex ``phi`` with ``phi(0) = 0``, finite on ``(-r, r)``.

    With ``strict=True`` the superlinear-growth check at the grid end is
    enforced; envelopes produced by conversions use ``strict=False``.
    """

    phi: GridFunction
    support_radius: float = np.inf
    strict: bool = True

    def __post_init__(self):
        g, v = self.phi.grid, self.phi.values
        if not np.allclose(g, -g[::-1], atol=1e-12 * max(1.0, np.abs(g).max())):
            raise ValueError("Young function grid must be symmetric about 0")
        k0 = np.flatnonzero(np.isclose(g, 0.0, atol=1e-14))
        if k0.size != 1 or abs(v[k0[0]]) > 1e-12:
            raise ValueError("Young function must vanish at 0 (0 on the grid)")
        fin = np.isfinite(v)
        if np.any(fin != fin[::-1]) or not np.allclose(v[fin], v[::-1][fin], rtol=1e-9, atol=1e-12):
            raise ValueError("Young function must be even")
        if self.strict:
            if not self.phi.is_convex(1e-8):
                raise ValueError("Young function must be convex")
            idx = np.flatnonzero(fin & (g > 0))
            if idx.size >= 3:
                ratio = v[idx[-3:]] / g[idx[-3:]]
                if not np.all(np.diff(ratio) > 0):
                    raise ValueError("Young function must grow superlinearly toward the support edge")

    @classmethod
    def from_callable(cls, fn: Callable, radius: float = 20.0, n: int = 4001, *, support_radius: float = np.inf, strict: bool = True) -> "YoungFunction":
        """Sample ``fn`` on a uniform symmetric grid of half-width ``radius``
        (pulled inside an open bounded support)."""
        if np.isfinite(support_radius):
            radius = min(radius, support_radius * (1 - 1e-6))
        grid = symmetric_grid(radius, n)
        return cls(build_grid_function(fn, grid), support_radius, strict)

    @property
    def grid(self) -> np.ndarray:
        return self.phi.grid

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        a = np.abs(lam)
        out = np.asarray(self.phi(a), dtype=float)
        out = np.where(a >= self.support_radius, np.inf, out)
        return out if out.ndim else float(out)

    def conjugate(self, x):
        """``phi*(x) = sup_lam (lam x - phi(lam))``.  Past a finite grid under the
        slope extension with unbounded support, ``x`` beyond the last slope gives ``inf``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vals = conjugate_values(self.phi, x)
        if not np.isfinite(self.support_radius) and self.phi.extension == "slope":
            s = self.phi.slopes()
            last = s[np.isfinite(s)][-1]
            vals = np.where(np.abs(x) > last, np.inf, vals)
        return vals

    def to_json(self) -> str:
        import json

        d = json.loads(self.phi.to_json())
        d["support_radius"] = "inf" if not np.isfinite(self.support_radius) else self.support_radius
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str, strict: bool = False) -> "YoungFunction":
        import json

        d = json.loads(text)
        r = d.pop("support_radius", "inf")
        r = np.inf if r == "inf" else float(r)
        return cls(GridFunction.from_json(json.dumps(d)), r, strict)


# ---------------------------------------------------------------------------
# epsilon-split integrals
# ---------------------------------------------------------------------------


def _cell_exp_integrals(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``int exp(-l(x)) dx`` on each cell for the linear interpolant ``l`` of ``z``."""
    h = np.diff(x)
    dz = np.diff(z)
    out = np.empty(h.size)
    small = np.abs(dz) < 1e-10
    out[small] = h[small] * np.exp(-z[:-1][small])
    big = ~small
    # h * (exp(-z0) - exp(-z1)) / dz, written stably
    out[big] = h[big] * np.exp(-z[:-1][big]) * (-np.expm1(-dz[big])) / dz[big]
    return out


def k_integral(zeta, eps: float) -> float:
    """``K(eps) = int_0^inf exp(-eps zeta(x)) dx`` for a tail exponent on ``x >= 0``.

    Exact on the grid's piecewise-linear interpolant; ``[0, x_0]`` uses
    ``exp(-eps zeta(x_0))`` bounded by 1, and past the grid the integrand is
    continued as the power law ``x^-a`` with ``a = eps dzeta/dln x`` from the
    last cell.  ``a <= 1`` raises :class:`DivergenceError`.

    >>> z = build_grid_function(lambda x: x, np.linspace(0, 200, 20001))
    >>> round(k_integral(z, 0.5), 6)
    2.0
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    zg = zeta.zeta if isinstance(zeta, TailEnvelope) else zeta
    x = zg.grid if not isinstance(zeta, TailEnvelope) else zeta.grid
    z = np.maximum(zg.values, 0.0)
    keep = (x >= 0) & np.isfinite(z)
    x, z = x[keep], eps * z[keep]
    if x.size < 2:
        raise ValueError("need at least two nonnegative grid points")
    total = x[0] * 1.0 + float(np.sum(_cell_exp_integrals(x, z)))
    if x[-2] <= 0:
        raise ValueError("grid too coarse near 0 for the tail extrapolation")
    a = (z[-1] - z[-2]) / np.log(x[-1] / x[-2])
    if a <= 1:
        raise DivergenceError(f"K({eps:g}) diverges: integrand decays like x^-{a:.3g} at the grid end")
    total += np.exp(-z[-1]) * x[-1] / (a - 1.0)
    return float(total)


def zeta_star(tail, lam):
    """``zeta*(lam) = sup_{x >= 0} (lam x - zeta(x))`` with the slope
    continuation past the grid (``inf`` if ``lam`` exceeds the last slope)."""
    zg = tail.zeta if isinstance(tail, TailEnvelope) else tail
    K = tail.K if isinstance(tail, TailEnvelope) else 1.0
    g = GridFunction(zg.grid * K, zg.values, zg.extension)
    g = g.restrict(0.0)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    vals = conjugate_values(g, lam)
    s = g.slopes()
    last = s[np.isfinite(s)][-1]
    return np.where(lam > last, np.inf, vals)


def theta_of_lambda(zstar: GridFunction, lam: float, C1: float = 1.0) -> float:
    """``theta(lam) = C1 / (lam zeta*'(lam))`` with a central finite difference.

    Raises :class:`RegimeError` when ``theta > 0.5`` (``lam`` below the regime).
    """
    if lam <= 0:
        raise RegimeError("lambda must be positive")
    h = 1e-4 * max(1.0, abs(lam))
    d = (float(zstar(lam + h)) - float(zstar(lam - h))) / (2 * h)
    if not d > 0:
        raise ValueError(f"zeta*' is not positive at lambda={lam:g}")
    th = C1 / (lam * d)
    if th > THETA_REGIME:
        raise RegimeError(f"theta({lam:g}) = {th:.4g} > {THETA_REGIME}: lambda below lambda_0")
    return float(th)


def solve_lambda0(zstar: GridFunction, C1: float = 1.0, bracket=None) -> float:
    """Solve ``theta(lam0) = 0.5`` for the start of the large-lambda regime."""

    def f(lam):
        h = 1e-4 * max(1.0, lam)
        d = (float(zstar(lam + h)) - float(zstar(lam - h))) / (2 * h)
        if not d > 0:
            # flat conjugate: theta is unbounded, so lam lies below the regime
            return 1.0
        return C1 / (lam * d) - THETA_REGIME

    lo, hi = bracket if bracket is not None else (1e-3, float(zstar.grid[-1]) * 0.99)
    return float(optimize.brentq(f, lo, hi, xtol=1e-10))


def _zstar_grid(tail, lam_max: float, n: int = 4001) -> GridFunction:
    lam = np.linspace(0.0, lam_max, n)
    return GridFunction(lam, zeta_star(tail, lam))


@dataclass(frozen=True)
class RegularityResult:
    regular: bool
    C3: float
    kbar: np.ndarray
    lam: np.ndarray
    mode: str


def regularity_check(tail, lam_grid, C3_range=(1.0, 10.0), *, C1: float = 1.0, kbar_mode: str = "identity", n_C3: int = 200) -> RegularityResult:
    """Search ``C3`` with ``Kbar(lam) <= exp zeta*(C3 lam)`` on ``lam_grid``.

    ``kbar_mode="identity"``: ``Kbar(lam) = K(theta(lam))``.
    ``kbar_mode="conjugate"``: ``Kbar(lam) = int exp(-theta(lam) zeta*(x)) dx``.
    """
    if kbar_mode not in ("identity", "conjugate"):
        raise ValueError("kbar_mode must be 'identity' or 'conjugate'")
    lam = np.asarray(lam_grid, dtype=float)
    zs = _zstar_grid(tail, 2.0 * lam.max())
    logk = np.empty(lam.size)
    for i, l in enumerate(lam):
        th = theta_of_lambda(zs, l, C1)
        if kbar_mode == "identity":
            logk[i] = np.log(k_integral(tail, th))
        else:
            fin = np.isfinite(zs.values)
            logk[i] = np.log(k_integral(GridFunction(zs.grid[fin], zs.values[fin]), th))
    for C3 in np.geomspace(C3_range[0], C3_range[1], n_C3):
        if np.all(logk <= zeta_star(tail, C3 * lam)):
            return RegularityResult(True, float(C3), np.exp(logk), lam, kbar_mode)
    return RegularityResult(False, np.nan, np.exp(logk), lam, kbar_mode)


def eps_grid() -> np.ndarray:
    return np.geomspace(EPS_LO, EPS_HI, EPS_POINTS)


def eps_split_bound(tail, lam: float, *, eps=None, measure: float | None = None):
    """``ln`` of the bound on ``I(lam) = int_0^inf exp(lam x - zeta(x)) mu(dx)``.

    Infinite measure (Lebesgue): ``inf_eps [ln K(eps) + (1-eps) zeta*(lam/(1-eps))]``
    over a geometric grid, refined once around the best ``eps``.
    Finite measure ``M``: ``ln M + zeta*(lam)``.
    Returns ``(log_bound, eps_opt)``.
    """
    if measure is not None:
        if not measure > 0:
            raise ValueError("measure must be positive")
        return float(np.log(measure) + zeta_star(tail, lam)[0]), np.nan

    def objective(e):
        out = np.empty(e.size)
        for i, ei in enumerate(e):
            try:
                lk = np.log(k_integral(tail, float(ei)))
            except DivergenceError:
                out[i] = np.inf
                continue
            out[i] = lk + (1.0 - ei) * zeta_star(tail, lam / (1.0 - ei))[0]
        return out

    e = eps_grid() if eps is None else np.asarray(eps, dtype=float)
    val = objective(e)
    k = int(np.argmin(val))
    if not np.isfinite(val[k]):
        raise DivergenceError(f"no eps in the grid gives a finite epsilon-split bound at lambda={lam:g}")
    if eps is None:
        lo, hi = e[max(k - 1, 0)], e[min(k + 1, e.size - 1)]
        fine = np.linspace(lo, hi, 41)
        fv = objective(fine)
        j = int(np.argmin(fv))
        if fv[j] < val[k]:
            return float(fv[j]), float(fine[j])
    return float(val[k]), float(e[k])


# ---------------------------------------------------------------------------
# tail -> MGF
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MgfEnvelope:
    """``ln E exp(lam xi) <= zeta*(C |lam|)`` for ``|lam| >= e`` and ``<= c lam^2`` below."""

    tail: TailEnvelope
    C: float
    c_taylor: float
    lam: np.ndarray
    log_bound_values: np.ndarray
    raw_log_I: np.ndarray
    eps_opt: np.ndarray
    notes: tuple = ()

    def log_bound(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        a = np.abs(lam)
        big = np.asarray(zeta_star(self.tail, self.C * np.maximum(a, np.e)), dtype=float)
        return np.where(a >= np.e, big, self.c_taylor * lam**2)

    def __call__(self, lam):
        return np.exp(self.log_bound(lam))


def _taylor_log_series(log_m: Callable[[np.ndarray], np.ndarray], lam: np.ndarray, k_max: int = 1000):
    """``ln(1 + sum_{k>=2} |lam|^k m_k / k!)`` with ``ln m_k`` from ``log_m``.

    Terms past ``k_max`` are bounded geometrically by the last ratio; ``inf``
    when the terms are not decreasing there.
    """
    k = np.arange(2, k_max + 1, dtype=float)
    lm = np.asarray(log_m(k), dtype=float)
    out = np.empty(lam.size)
    for i, l in enumerate(np.abs(lam)):
        terms = k * np.log(l) + lm - special.gammaln(k + 1.0)
        if not np.all(np.isfinite(terms)) or not np.all(np.diff(terms[-10:]) < 0):
            out[i] = np.inf
            continue
        lr = terms[-1] - terms[-2]
        s = np.logaddexp(special.logsumexp(terms), terms[-1] + lr - np.log(-np.expm1(lr)))
        out[i] = np.logaddexp(0.0, s)
    return out


def tail_to_mgf(tail: TailEnvelope, lam_grid, *, moments=None, measure: float | None = None, eps=None, C_range=(1.0, 50.0)) -> MgfEnvelope:
    """MGF envelope for a centred variable obeying ``tail``.

    For ``|lam| >= e``: ``E exp(lam xi) <= 1 + 2|lam| I(|lam|)`` with ``I`` from
    the epsilon-split bound, then ``C`` is the smallest value with
    ``ln(1 + 2|lam| I) <= zeta*(C|lam|)`` at every probe.
    For ``|lam| < e``: ``exp(c lam^2)`` with ``c`` the largest
    ``ln(1 + sum_{k>=2} |lam|^k m_k/k!) / lam^2`` on a fine grid of ``(0, e)``
    (of ``(0, max |lam|]`` when every probe is below ``e``);
    ``m_k`` are the envelope's moment bounds or come from ``moments``
    (a callable ``k -> E|xi|^k`` or a model exposing ``log_abs_moment``).
    """
    lam = np.asarray(lam_grid, dtype=float)
    notes = []
    a = np.abs(lam)
    big = a >= np.e
    raw = np.full(lam.size, np.nan)
    eps_opt = np.full(lam.size, np.nan)
    need = np.empty(lam.size)
    for i in np.flatnonzero(big):
        lb, e = eps_split_bound(tail, float(a[i]), eps=eps, measure=measure)
        raw[i], eps_opt[i] = lb, e
        need[i] = np.logaddexp(0.0, np.log(2.0 * a[i]) + lb)
    C = np.nan
    if np.any(big):
        def ok(c):
            return bool(np.all(zeta_star(tail, c * a[big]) >= need[big]))

        lo, hi = C_range
        if not ok(hi):
            raise DivergenceError(f"no C in [{lo:g}, {hi:g}] makes zeta*(C lam) dominate the epsilon-split bound")
        if ok(lo):
            C = lo
        else:
            while hi / lo > 1 + BISECTION_RTOL:
                mid = np.sqrt(lo * hi)
                lo, hi = (lo, mid) if ok(mid) else (mid, hi)
            C = hi
    if moments is None:
        def log_m(k):
            return log_moment_bound(tail, k)
    elif hasattr(moments, "log_abs_moment"):
        def log_m(k):
            return np.array([moments.log_abs_moment(float(q)) for q in k])
    else:
        def log_m(k):
            return np.log(np.array([float(moments(q)) for q in k]))

    # the cap covers (0, e), or only up to the largest probe when all probes sit below e
    top = np.e if np.any(big) else float(a.max())
    small_probe = np.linspace(1e-3, top, 200)
    ls = _taylor_log_series(log_m, small_probe)
    c_taylor = float(np.max(ls / small_probe**2))
    if not np.isfinite(c_taylor):
        notes.append("Taylor series for |lambda| < e diverges: the tail does not support an MGF there")
    vals = np.where(big, np.asarray(zeta_star(tail, np.where(big, C, 0.0) * a)), c_taylor * lam**2)
    return MgfEnvelope(tail, float(C), c_taylor, lam, vals, raw, eps_opt, tuple(notes))


# ---------------------------------------------------------------------------
# MGF -> tail (Chernov)
# ---------------------------------------------------------------------------


def chernov_tail(kappa: YoungFunction, x_grid, *, two_sided: bool = False) -> TailEnvelope:
    """``P(xi >= x) <= exp(-kappa*(x))`` with the supremum over ``lam >= 0``.

    With ``two_sided=True`` the bound ``P(|xi| >= x) <= 2 exp(-kappa*(x))`` is
    returned instead (``zeta`` shifted by ``ln 2``).
    Raises :class:`KramerError` when ``kappa`` is not finite next to 0.
    """
    g, v = kappa.phi.grid, kappa.phi.values
    pos = g >= 0
    gp, vp = g[pos], v[pos]
    if gp.size < 2 or not np.isfinite(vp[1]) or not np.isfinite(vp[0]):
        raise KramerError("Kramer's condition fails: kappa is not finite in a neighbourhood of 0")
    x = np.asarray(x_grid, dtype=float)
    if np.any(x < 0):
        raise ValueError("x-grid must be nonnegative")
    half = GridFunction(gp, vp, kappa.phi.extension)
    zeta, arg = conjugate_values(half, x, return_argmax=True)
    fin = np.isfinite(vp)
    edge = gp[fin][-1]
    notes = []
    at_edge = arg >= edge
    if np.any(at_edge & (x > 0)):
        if not np.isfinite(kappa.support_radius):
            last = (vp[fin][-1] - vp[fin][-2]) / (gp[fin][-1] - gp[fin][-2])
            beyond = x > last
            zeta = np.where(beyond, np.inf, zeta)
            notes.append("argmax at the lambda-grid edge; x beyond the last slope of kappa set to +inf")
        else:
            notes.append("argmax at the edge of the bounded lambda support for some x")
    zeta = np.maximum(zeta, 0.0)
    sides = "one"
    if two_sided:
        zeta = np.maximum(zeta - np.log(2.0), 0.0)
        sides = "two"
    return TailEnvelope(GridFunction(x, zeta, "slope"), 1.0, sides, tuple(notes), {"argmax_lambda": arg})


# ---------------------------------------------------------------------------
# B(phi) norm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BphiNormEstimate:
    tau: float
    certificate: np.ndarray
    warnings: tuple = ()


def bphi_norm(mgf_oracle, phi: YoungFunction, lam_grid, *, tau_range=(1e-3, 1e3)) -> BphiNormEstimate:
    """Smallest ``tau`` with ``max(E e^{lam xi}, E e^{-lam xi}) <= exp(phi(lam tau))``
    at every probe, by bisection on ``ln tau`` to relative tolerance 1e-3.

    ``mgf_oracle`` is a callable ``lam -> E exp(lam xi)`` or a fixture model.
    """
    from .oracle import DistributionModel, KramerViolation

    notes = []
    fn = mgf_oracle.mgf if isinstance(mgf_oracle, DistributionModel) else mgf_oracle
    radius = mgf_oracle.mgf_radius if isinstance(mgf_oracle, DistributionModel) else getattr(mgf_oracle, "mgf_radius", np.inf)
    lam = np.asarray(lam_grid, dtype=float)
    lam = lam[lam != 0]
    try:
        lg = np.array([np.log(max(fn(l), fn(-l))) for l in lam])
    except KramerViolation as exc:
        raise DivergenceError(f"no finite tau: {exc}") from exc
    if not np.all(np.isfinite(lg)):
        raise DivergenceError("no finite tau: oracle MGF infinite on the probe grid")
    if np.isfinite(radius):
        msg = f"oracle MGF is finite only for |lambda| < {radius:g}; tau certifies the truncated probe grid only"
        warnings.warn(msg, BoundsWarning, stacklevel=2)
        notes.append(msg)

    def ok(t):
        return bool(np.all(lg <= np.asarray(phi(lam * t))))

    lo, hi = tau_range
    if not ok(hi):
        raise DivergenceError(f"no tau in the search range up to {hi:g}")
    if ok(lo):
        return BphiNormEstimate(float(lo), lam, tuple(notes))
    while hi / lo > 1 + BISECTION_RTOL:
        mid = np.sqrt(lo * hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return BphiNormEstimate(float(hi), lam, tuple(notes))


# ---------------------------------------------------------------------------
# bounded MGF support
# ---------------------------------------------------------------------------


def _upper_tail_integral(theta: float, L, a: float) -> float:
    """``int_1^inf exp(-a x) x^theta L(x) dx`` for ``a > 0``."""
    if L is None or L == 0:
        return float(special.gammaincc(theta + 1.0, a) * np.exp(special.gammaln(theta + 1.0) - (theta + 1.0) * np.log(a)))

    def f(x):
        return np.exp(-a * x) * x**theta * float(slowly_varying(L, x))

    peak = max(theta / a, 1.0)
    val = integrate.quad(f, 1.0, 1.0 + 10 * peak, epsrel=1e-10, limit=500)[0]
    val += integrate.quad(f, 1.0 + 10 * peak, np.inf, epsrel=1e-10, limit=500)[0]
    return float(val)


@dataclass(frozen=True, eq=False)
class BoundedMgfEnvelope:
    """``E exp(lam xi) <= C2 (1-|lam|)^(-1-theta) L(1/(1-|lam|))`` on ``(-1, 1)``."""

    theta: float
    L: object
    C2: float
    lam: np.ndarray
    mgf_bound: np.ndarray

    def shape(self, lam):
        a = 1.0 - np.abs(np.asarray(lam, dtype=float))
        return a ** (-1.0 - self.theta) * slowly_varying(self.L, 1.0 / a)

    def __call__(self, lam):
        return self.C2 * self.shape(lam)

    @property
    def exponent(self) -> float:
        return 1.0 + self.theta


def bounded_mgf_from_tail(theta: float, L, C1: float, lam_grid) -> BoundedMgfEnvelope:
    """MGF bound from ``P(|xi| >= x) <= C1 x^theta L(x) e^-x`` (``x >= 1``).

    ``E e^{lam xi} <= e^{|lam|} + |lam| C1 int_1^inf e^{-(1-|lam|)x} x^theta L(x) dx``,
    and ``C2`` is the largest ratio of that to the shape on ``lam_grid``.
    """
    if not theta > -1:
        raise ValueError("theta must exceed -1")
    lam = np.asarray(lam_grid, dtype=float)
    if np.any(np.abs(lam) >= 1):
        raise ValueError("lambda-grid must lie in (-1, 1)")
    a = np.abs(lam)
    U = np.array([np.exp(ai) + ai * C1 * _upper_tail_integral(theta, L, 1.0 - ai) for ai in a])
    env = BoundedMgfEnvelope(theta, L, 1.0, lam, U)
    C2 = float(np.max(U / env.shape(lam)))
    return BoundedMgfEnvelope(theta, L, C2, lam, U)


@dataclass(frozen=True, eq=False)
class BoundedTailReport:
    envelope: TailEnvelope
    full_sup: TailEnvelope
    C3: float
    lam0: np.ndarray
    exponent: float


def tail_from_bounded_mgf(theta: float, L, C2: float, x_grid, *, n_lam: int = 20001) -> BoundedTailReport:
    """Chernov bound from ``E e^{lam xi} <= C2 (1-|lam|)^(-1-theta) L(1/(1-|lam|))``.

    Uses the test point ``lam0 = 1 - (theta+1)/x`` (so ``x >= 2(theta+1)``)
    and reports ``C3`` against the shape ``x^(theta+1) L(x) e^-x``; the full
    supremum over a ``lam`` grid in ``(0, 1)`` is returned alongside.
    Both are one-sided bounds on ``P(xi >= x)``.
    """
    if not theta > -1:
        raise ValueError("theta must exceed -1")
    x = np.asarray(x_grid, dtype=float)
    if np.any(x < 2 * (theta + 1)):
        raise RegimeError(f"x must be at least 2(theta+1) = {2 * (theta + 1):g}")

    def log_mgf(lm):
        gap = 1.0 - lm
        return np.log(C2) - (1.0 + theta) * np.log(gap) + np.log(slowly_varying(L, 1.0 / gap))

    lam0 = 1.0 - (theta + 1.0) / x
    zeta0 = lam0 * x - log_mgf(lam0)
    shape_log = (theta + 1.0) * np.log(x) + np.log(slowly_varying(L, x)) - x
    C3 = float(np.max(np.exp(-zeta0 - shape_log)))
    lam = 1.0 - np.geomspace(1.0, 1e-9, n_lam)
    lam = lam[lam > 0]
    lm = log_mgf(lam)
    zfull = np.max(x[:, None] * lam[None, :] - lm[None, :], axis=1)
    zfull = np.maximum(zfull, zeta0)
    env = TailEnvelope(GridFunction(x, np.maximum(zeta0, 0.0)), 1.0, "one", (), {"lam0": lam0})
    full = TailEnvelope(GridFunction(x, np.maximum(zfull, 0.0)), 1.0, "one")
    return BoundedTailReport(env, full, C3, lam0, theta + 1.0)
