"""MGF envelopes to moment envelopes and back.

``beta(y) = phi(e^y)`` turns a Young function into moments
``psi(p) = p exp(-beta*(p)/p)``.  In the other direction moments
``|xi|_p <= p exp(-Delta(p)/p)`` give ``phi_Delta(lam) = Delta*(ln |lam|)`` when the
condition (Delta) holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .gls import MomentOracle, PsiFunction, gls_norm
from .gridfn import GridFunction, build_grid_function, conjugate_values, symmetric_grid
from .tail_mgf import DivergenceError, YoungFunction, bphi_norm

DELTA_P_LO, DELTA_P_HI, DELTA_POINTS = 1e-2, 1e7, 6000
SIGMA_K_MAX = 400
EPS1_LO, EPS1_HI, EPS1_POINTS = 0.01, 0.99, 100


class DeltaConditionError(ValueError):
    """Condition (Delta) fails for the given moment envelope."""


# ---------------------------------------------------------------------------
# phi -> moments
# ---------------------------------------------------------------------------


def beta_of_phi(phi: YoungFunction, y_grid) -> GridFunction:
    """``beta(y) = phi(e^y)`` on ``y_grid``."""
    y = np.asarray(y_grid, dtype=float)
    lam = np.exp(y)
    if np.any(lam >= phi.support_radius):
        raise ValueError("e^y leaves the support of phi")
    if np.any(lam > phi.grid[-1]) and phi.phi.extension == "inf":
        raise ValueError("e^y leaves the grid of phi")
    return GridFunction(y, np.asarray(phi(lam), dtype=float))


def _default_y_grid(phi: YoungFunction, n: int = 6001) -> np.ndarray:
    top = min(phi.grid[-1], phi.support_radius * (1 - 1e-9))
    return np.linspace(np.log(top) - 25.0, np.log(top), n)


def beta_star(phi: YoungFunction, p, y_grid=None) -> np.ndarray:
    """``beta*(p) = sup_y (p y - phi(e^y))`` over ``y_grid``."""
    y = _default_y_grid(phi) if y_grid is None else np.asarray(y_grid, dtype=float)
    b = beta_of_phi(phi, y)
    return conjugate_values(b, np.atleast_1d(np.asarray(p, dtype=float)))


def mgf_to_moments(phi: YoungFunction, bphi: float, p_grid, *, y_grid=None) -> PsiFunction:
    """``psi_(phi)(p) = p exp(-beta*(p)/p)`` scaled by ``e^-1 ||xi||_B(phi)``.

    The returned psi already carries the factor, so ``|xi|_p <= psi(p)`` is the
    claimed bound; the table holds the unscaled ``p exp(-beta*(p)/p)``.
    """
    p = np.asarray(p_grid, dtype=float)
    if np.any(p < 1):
        raise ValueError("p-grid must lie in [1, inf)")
    if not bphi > 0:
        raise ValueError("B(phi) norm must be positive")
    y = _default_y_grid(phi) if y_grid is None else np.asarray(y_grid, dtype=float)
    bs, arg = conjugate_values(beta_of_phi(phi, y), p, return_argmax=True)
    if np.any(arg >= y[-1]) or not np.all(np.isfinite(bs)):
        raise DivergenceError("conjugate of beta is degenerate: phi does not grow superlinearly on its grid")
    unit = p * np.exp(-bs / p)
    table = GridFunction(p, unit, "clamp")
    return PsiFunction("psi_grid", {"from": "phi", "scale": float(bphi) / np.e}, np.inf, table)


# ---------------------------------------------------------------------------
# Delta functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeltaFunction:
    """``Delta(p)`` with moments ``|xi|_p <= p exp(-Delta(p)/p)``."""

    delta: GridFunction
    convex: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "convex", bool(self.delta.is_convex(1e-8)))

    @classmethod
    def from_callable(cls, fn: Callable, p_grid=None) -> "DeltaFunction":
        p = np.geomspace(DELTA_P_LO, DELTA_P_HI, DELTA_POINTS) if p_grid is None else np.asarray(p_grid, dtype=float)
        return cls(build_grid_function(fn, p))

    @classmethod
    def from_psi(cls, psi: PsiFunction, p_grid=None) -> "DeltaFunction":
        """``Delta(p) = p ln(p / psi(p))`` on ``p >= 1``."""
        p = np.geomspace(1.0, 1e4, 2000) if p_grid is None else np.asarray(p_grid, dtype=float)
        return cls(GridFunction(p, p * (np.log(p) - np.asarray(psi.log(p)))))

    @classmethod
    def from_phi(cls, phi: YoungFunction, p_grid=None) -> "DeltaFunction":
        """``Delta_phi = beta*_phi``."""
        p = np.geomspace(1.0, 1e4, 2000) if p_grid is None else np.asarray(p_grid, dtype=float)
        return cls(GridFunction(p, beta_star(phi, p)))

    @property
    def grid(self) -> np.ndarray:
        return self.delta.grid

    def __call__(self, p):
        return self.delta(p)

    def psi(self, p):
        p = np.asarray(p, dtype=float)
        return p * np.exp(-np.asarray(self(p)) / p)

    def conjugate(self, mu):
        """``Delta*(mu) = sup_{p >= 1} (p mu - Delta(p))``; ``inf`` when the
        supremum runs off the grid end."""
        scalar = np.ndim(mu) == 0
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        g = self.delta.restrict(1.0)
        vals, arg = conjugate_values(g, mu, return_argmax=True)
        out = np.where(arg >= g.grid[-1], np.inf, vals)
        return float(out[0]) if scalar else out


def sigma_delta(delta: DeltaFunction, eps: float, k_max: int = SIGMA_K_MAX) -> float:
    """``sum_{k=2,4,...} exp(Delta(eps k) - Delta(k))`` with a geometric tail bound.

    Raises :class:`DivergenceError` when the terms stop decreasing.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    k = np.arange(2, k_max + 1, 2, dtype=float)
    if eps * k[0] < delta.grid[0] or k[-1] > delta.grid[-1]:
        raise ValueError("Delta grid does not cover the needed orders")
    logt = np.asarray(delta(eps * k)) - np.asarray(delta(k))
    r = np.exp(logt[-1] - logt[-2])
    if not np.all(np.diff(logt[-10:]) < 0) or r >= 1:
        raise DivergenceError(f"sigma_Delta({eps:g}) diverges: series terms are not decreasing")
    s = special.logsumexp(logt)
    tail = logt[-1] + np.log(r) - np.log1p(-r)
    return float(np.exp(np.logaddexp(s, tail)))


def eps1_grid() -> np.ndarray:
    return np.geomspace(EPS1_LO, EPS1_HI, EPS1_POINTS)


def delta1_star(delta: DeltaFunction, mu, *, eps=None) -> np.ndarray:
    """``Delta1*(mu) = inf_eps [ln sigma(eps) + Delta*(mu/eps)]`` on a geometric eps grid."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    e = eps1_grid() if eps is None else np.asarray(eps, dtype=float)
    best = np.full(mu.size, np.inf)
    any_finite = False
    for ei in e:
        try:
            ls = np.log(sigma_delta(delta, float(ei)))
        except DivergenceError:
            continue
        any_finite = True
        best = np.minimum(best, ls + delta.conjugate(mu / ei))
    if not any_finite:
        raise DivergenceError("sigma_Delta diverges for every eps: condition (Delta) cannot hold")
    return best


@dataclass(frozen=True)
class DeltaCheck:
    holds: bool
    C4: float
    lam: np.ndarray
    delta1: np.ndarray

    def __iter__(self):
        return iter((self.holds, self.C4))


def check_delta_condition(delta: DeltaFunction, lam_grid, C4_range=(1.0, 100.0), n_C4: int = 400) -> DeltaCheck:
    """Search ``C4`` with ``Delta1*(ln lam) <= Delta*(ln(C4 lam))`` on ``lam_grid``."""
    lam = np.abs(np.asarray(lam_grid, dtype=float))
    try:
        d1 = delta1_star(delta, np.log(lam))
    except DivergenceError:
        return DeltaCheck(False, np.nan, lam, np.full(lam.size, np.inf))
    if not np.all(np.isfinite(d1)):
        return DeltaCheck(False, np.nan, lam, d1)
    for C in np.geomspace(C4_range[0], C4_range[1], n_C4):
        if np.all(d1 <= delta.conjugate(np.log(C * lam))):
            return DeltaCheck(True, float(C), lam, d1)
    return DeltaCheck(False, np.nan, lam, d1)


# ---------------------------------------------------------------------------
# moments -> phi
# ---------------------------------------------------------------------------


def log_series_bound(delta: DeltaFunction, norm: float, lam, k_max: int | None = None) -> np.ndarray:
    """``ln(1 + sum_{k>=2} (norm |lam|)^k k^k exp(-Delta(k)) / k!)`` for a centred variable.

    ``k_max`` adapts so the dropped terms are below ``e^-40`` of the sum.
    """
    lam = np.abs(np.atleast_1d(np.asarray(lam, dtype=float)))
    top = delta.grid[-1]
    out = np.empty(lam.size)
    for i, l in enumerate(lam):
        if l == 0:
            out[i] = 0.0
            continue
        km = 64 if k_max is None else k_max
        while True:
            k = np.arange(2, km + 1, dtype=float)
            t = k * np.log(norm * l) + k * np.log(k) - np.asarray(delta(k)) - special.gammaln(k + 1.0)
            s = special.logsumexp(t)
            if k_max is not None or (t[-1] < s - 40 and t[-1] < t[-2]):
                break
            if 2 * km > top:
                raise DivergenceError(f"moment series does not converge at lambda={l:g}")
            km *= 2
        out[i] = np.logaddexp(0.0, s)
    return out


@dataclass(frozen=True, eq=False)
class DeltaMgfEnvelope:
    """``ln E e^{lam xi} <= Delta*(ln(C |lam|))`` on the probe grid."""

    phi: YoungFunction
    C: float
    C4: float
    norm: float
    lam: np.ndarray
    log_series: np.ndarray
    delta1: np.ndarray
    convex: bool

    def log_bound(self, lam):
        return np.asarray(self.phi(lam))


def moments_to_mgf(delta: DeltaFunction, norm: float, lam_grid, *, C_range=(1e-2, 1e3), radius=None, n: int = 2001) -> DeltaMgfEnvelope:
    """Young-function envelope from moments ``|xi|_p <= norm * p exp(-Delta(p)/p)``.

    The condition (Delta) is verified first on the probes with ``|lam| >= e``.
    The series bound ``S(lam)`` on ``E e^{lam xi}`` then fixes the rescale ``C``
    as the smallest value with ``ln S(lam) <= Delta*(ln(C norm |lam|))`` at those
    probes.  The envelope is ``Delta*(ln(C norm |lam|))`` for ``|lam| >= e`` and
    the series itself below, on a symmetric grid.
    """
    if not norm > 0:
        raise ValueError("norm must be positive")
    lam = np.abs(np.asarray(lam_grid, dtype=float))
    big = lam[lam >= np.e]
    if big.size == 0:
        raise ValueError("lambda-grid needs probes with |lambda| >= e")
    chk = check_delta_condition(delta, big)
    if not chk.holds:
        raise DeltaConditionError("condition (Δ) fails: Delta1*(ln lam) <= Delta*(ln C4 lam) has no witness C4")
    ls = log_series_bound(delta, norm, big)

    def ok(c):
        return bool(np.all(delta.conjugate(np.log(c * norm * big)) >= ls))

    lo, hi = C_range
    if not ok(hi):
        raise DivergenceError("no rescale constant makes Delta*(ln C lam) dominate the moment series")
    while hi / lo > 1 + 1e-4:
        mid = np.sqrt(lo * hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    C = hi
    R = lam.max() * 1.5 if radius is None else radius
    g = symmetric_grid(R, n)
    a = np.abs(g)
    v = np.empty(g.size)
    outer = a >= np.e
    v[outer] = delta.conjugate(np.log(C * norm * a[outer]))
    v[~outer] = log_series_bound(delta, norm, a[~outer])
    gf = GridFunction(g, v)
    phi = YoungFunction(gf, np.inf, strict=False)
    return DeltaMgfEnvelope(phi, float(C), chk.C4, float(norm), big, ls, chk.delta1, bool(gf.is_convex(1e-6)))


# ---------------------------------------------------------------------------
# norm equivalence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormEquivalenceRow:
    label: str
    bphi: float
    gls: float
    ratio: float
    lower_ok: bool
    upper_ok: bool
    note: str = ""


@dataclass(frozen=True)
class NormEquivalenceReport:
    C4: float
    C5: float
    rows: tuple


def norm_equivalence_44(phi: YoungFunction, fixtures, lam_grid, p_grid=None) -> NormEquivalenceReport:
    """Compare ``||xi||_B(phi)`` with ``||xi||_G psi_phi`` on each fixture.

    ``psi_phi = p exp(-beta*(p)/p)``.  The lower side uses ``C5 = e^-1``
    (``G <= e^-1 B``); the upper side uses the rescale ``C`` of
    :func:`moments_to_mgf` for ``Delta_phi = beta*_phi`` (``B <= C G``).
    Divergence on both sides is recorded as consistent.
    """
    p = np.geomspace(1.0, 100.0, 200) if p_grid is None else np.asarray(p_grid, dtype=float)
    unit = mgf_to_moments(phi, np.e, p)
    delta = DeltaFunction.from_phi(phi, np.geomspace(DELTA_P_LO, 1e5, 4000))
    env = moments_to_mgf(delta, 1.0, np.asarray(lam_grid)[np.asarray(lam_grid) >= np.e])
    C4, C5 = env.C, np.exp(-1.0)
    rows = []
    for fx in fixtures:
        label = getattr(fx, "name", str(fx))
        try:
            tau = bphi_norm(fx, phi, lam_grid).tau
            if np.isfinite(getattr(fx, "mgf_radius", np.inf)):
                tau = np.inf
        except DivergenceError:
            tau = np.inf
        oracle = MomentOracle.from_model(fx)
        g = gls_norm(oracle, unit, p)
        rising = g == float(np.exp(np.log(oracle(p[-1])) - unit.log(p[-1])))
        if rising and np.isinf(tau):
            g = np.inf
        if np.isinf(tau) or np.isinf(g):
            consistent = np.isinf(tau) and np.isinf(g)
            rows.append(NormEquivalenceRow(label, float(tau), float(g), np.nan, consistent, consistent, "both diverge" if consistent else "one side diverges"))
            continue
        rows.append(NormEquivalenceRow(label, float(tau), float(g), float(g / tau), bool(g <= C5 * tau), bool(tau <= C4 * g)))
    return NormEquivalenceReport(float(C4), float(C5), tuple(rows))
