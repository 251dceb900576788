"""Tail envelopes from moment envelopes and back.

Moments to tail is Markov's inequality optimised over the order ``p``:
``P(|xi| >= y) <= exp(-nu*(ln(y/norm)))`` with ``nu(p) = p ln psi(p)``.
Tail to moments integrates the envelope against ``p x^(p-1)`` with a rigorous
upper Riemann sum and normalises by ``exp(Z*(p)/p)``, ``Z(u) = zeta(e^u)``.
"""

from __future__ import annotations

import io
import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .gls import PsiError, PsiFunction, make_psi_family, nu_of_psi, slowly_varying
from .gridfn import GridFunction, conjugate_values

CURVATURE_THRESHOLD = 1e-6
# auto-chosen C1 must leave at least this fraction of the grid in the curved region
MIN_CURVED_FRACTION = 0.25


class RegimeError(ValueError):
    """Input lies outside the regime where the conversion is stated."""


class ConditionError(ValueError):
    """A structural precondition of a conversion fails; the message names it."""


class BoundsWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class TailEnvelope:
    """Upper bound ``P(|xi| >= y) <= exp(-zeta(y / K))`` (``sides="two"``) or the
    same for ``P(xi >= y)`` (``sides="one"``)."""

    zeta: GridFunction
    K: float = 1.0
    sides: str = "two"
    notes: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.K <= 0:
            raise ValueError("K must be positive")
        if self.sides not in ("one", "two"):
            raise ValueError("sides must be 'one' or 'two'")
        fin = self.zeta.values[np.isfinite(self.zeta.values)]
        if np.any(fin < -1e-12):
            raise ValueError("zeta must be nonnegative")

    @property
    def grid(self) -> np.ndarray:
        """Abscissae in ``y`` units (``K`` applied)."""
        return self.K * self.zeta.grid

    def log_bound(self, y):
        return -np.maximum(np.asarray(self.zeta(np.asarray(y, dtype=float) / self.K)), 0.0)

    def __call__(self, y):
        out = np.exp(self.log_bound(y))
        return out if np.ndim(out) else float(out)

    def step_bound(self, y):
        """Rigorous off-grid bound using monotonicity of the tail:
        the envelope at the largest grid node ``<= y`` (1 below the grid)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        g = self.grid
        z = np.maximum.accumulate(np.maximum(np.where(np.isfinite(self.zeta.values), self.zeta.values, np.inf), 0.0))
        j = np.searchsorted(g, y, side="right") - 1
        out = np.where(j >= 0, np.exp(-z[np.clip(j, 0, None)]), 1.0)
        return out

    def is_monotone_past_min(self, rtol: float = 1e-9) -> bool:
        v = self.zeta.values
        k = int(np.argmin(np.where(np.isfinite(v), v, np.inf)))
        tail = v[k:]
        return bool(np.all(np.diff(tail) >= -rtol * (1 + np.abs(tail[1:]))))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("y,zeta\n")
        for y, z in zip(self.grid, self.zeta.values):
            buf.write(f"{float(y)!r},{'inf' if z == np.inf else repr(float(z))}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, sides: str = "two") -> "TailEnvelope":
        rows = [r for r in csv.reader(io.StringIO(text))][1:]
        ys = np.array([float(r[0]) for r in rows if r])
        zs = np.array([np.inf if r[1] == "inf" else float(r[1]) for r in rows if r])
        return cls(GridFunction(ys, zs), 1.0, sides)


def tail_envelope(fn, grid, *, K: float = 1.0, sides: str = "two") -> TailEnvelope:
    """Envelope from a closed-form ``zeta`` sampled on ``grid``."""
    g = np.asarray(grid, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.asarray(fn(g), dtype=float)
    return TailEnvelope(GridFunction(g, np.maximum(z, 0.0)), K, sides)


# ---------------------------------------------------------------------------
# moments -> tail
# ---------------------------------------------------------------------------


def markov_p_grid(b: float = np.inf, n: int = 12000, p_max: float = 1e5) -> np.ndarray:
    """Dense p-grid for the Markov optimisation: geometric on ``[1, p_max]``
    when ``b`` is infinite, otherwise clustered toward ``b``."""
    if not np.isfinite(b):
        return np.geomspace(1.0, p_max, n)
    gaps = np.geomspace(b - 1.0, max(1e-9 * b, 1e-12), n)
    return np.unique(b - gaps)


def moments_to_tail(
    psi: PsiFunction,
    norm: float,
    y_grid,
    *,
    enforce_regime: bool = True,
    p_grid=None,
) -> TailEnvelope:
    """Tail envelope ``zeta(y) = nu*(ln(y / norm))`` from ``||xi|| <= norm`` in G(psi).

    The conjugate is the exact supremum over ``p_grid``; every order on the
    grid is a valid Markov exponent, so truncating the grid keeps the bound
    valid and only loosens it.

    >>> env = moments_to_tail(make_psi_family("psi_one"), 1.0, [3.0, 10.0])
    >>> bool(np.allclose(env.zeta.values, [3 / np.e, 10 / np.e], rtol=1e-4))
    True
    """
    if norm <= 0:
        raise ValueError("norm must be positive")
    y = np.asarray(y_grid, dtype=float)
    notes = []
    if enforce_regime and np.any(y <= np.e * norm):
        raise RegimeError(f"y must exceed e*norm = {np.e * norm:.6g} (opt out with enforce_regime=False)")
    if np.any(y <= 0):
        raise RegimeError("y must be positive")
    b = psi.support_end
    if np.isfinite(b):
        msg = f"psi has finite support end b={b:g}: the tail bound may be far from sharp"
        warnings.warn(msg, BoundsWarning, stacklevel=2)
        notes.append(msg)
    if p_grid is None:
        if psi.family == "psi_grid":
            p = psi.table.grid[psi.table.grid < b]
            extra = markov_p_grid(b, n=2000, p_max=min(1e5, p[-1]))
            p = np.unique(np.concatenate([p, extra[extra <= p[-1]]]))
        else:
            p = markov_p_grid(b)
            if np.isfinite(b):
                p = p[p < b]
    else:
        p = np.asarray(p_grid, dtype=float)
    nu = nu_of_psi(psi, p)
    z = np.log(y / norm)
    zeta, argp = conjugate_values(nu, z, return_argmax=True)
    if np.any(argp >= p[-1]):
        msg = "optimal order reached the end of the p-grid for some y; bound is valid but loose there"
        notes.append(msg)
    env = TailEnvelope(
        GridFunction(y, np.maximum(zeta, 0.0)),
        1.0,
        "two",
        tuple(notes),
        {"argmax_p": argp, "p_end": float(p[-1]), "norm": norm},
    )
    return env


# ---------------------------------------------------------------------------
# tail -> moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentEnvelope:
    """``|xi|_p <= psi(p) = C3 exp(Z*(p)/p)`` on ``p_grid``.

    ``J`` is the rigorous bound on ``E|xi|^p`` behind ``C3``; ``J1`` and ``J2``
    split it at ``u = C1``.
    """

    psi: PsiFunction
    p_grid: np.ndarray
    C3: float
    C1: float
    curvature_min: float
    Zstar: np.ndarray
    log_J: np.ndarray
    log_J1: np.ndarray
    log_J2: np.ndarray

    def moment_bound(self, p=None) -> np.ndarray:
        """``J(p)^(1/p)``, the bound before rounding up by ``C3``."""
        return np.exp(self.log_J / self.p_grid)


def second_differences(u: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Centred nonuniform second differences at interior nodes."""
    hl = u[1:-1] - u[:-2]
    hr = u[2:] - u[1:-1]
    return 2.0 * ((Z[2:] - Z[1:-1]) / hr - (Z[1:-1] - Z[:-2]) / hl) / (hl + hr)


def _curved_start(u: np.ndarray, d2: np.ndarray, threshold: float, curvature_from):
    """Index (into ``u``) where the curvature region starts, or raise."""
    if curvature_from is not None:
        idx = np.flatnonzero(u[1:-1] >= curvature_from)
        if idx.size == 0:
            raise ConditionError("condition (2.6) fails: no grid points past C1")
        sub = d2[idx]
        if np.min(sub) < threshold:
            raise ConditionError(
                f"condition (2.6) fails: inf Z'' = {np.min(sub):.3g} < {threshold:g} on u >= {curvature_from:g}"
            )
        return int(idx[0]) + 1
    bad = np.flatnonzero(d2 < threshold)
    start = 0 if bad.size == 0 else int(bad[-1]) + 1
    if d2.size - start < max(3, MIN_CURVED_FRACTION * d2.size):
        raise ConditionError(
            "condition (2.6) fails: Z(u) = zeta(e^u) has no region of uniformly positive curvature "
            f"(second differences below {threshold:g})"
        )
    return start + 1


def _log_diff_pow(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """``ln(b^p - a^p)`` for ``0 <= a < b``."""
    with np.errstate(divide="ignore"):
        return p * np.log(b) + np.log1p(-((a / b) ** p))


def _log_moment_parts(x: np.ndarray, zeta: np.ndarray, p: np.ndarray, C1: float):
    """``ln`` of the two parts of an upper bound on ``int_0^inf p x^(p-1) exp(-zeta(x)) dx``.

    Cells ``[x_i, x_i+1]`` use the running maximum of ``zeta`` at their left
    end (the tail is nonincreasing), ``[0, x_0]`` uses 1, and past the grid
    ``Z(u) = zeta(e^u)`` continues with its last slope ``S``; orders ``p >= S``
    give ``inf``.  Part one collects cells ending at or below ``u = C1``.
    """
    u = np.log(x)
    run = np.maximum.accumulate(np.maximum(zeta, 0.0))
    S = (zeta[-1] - zeta[-2]) / (u[-1] - u[-2])
    in1 = u[1:] <= C1
    logJ1 = np.empty(p.size)
    logJ2 = np.empty(p.size)
    for k, pk in enumerate(p):
        head = pk * np.log(x[0])
        cells = _log_diff_pow(x[:-1], x[1:], pk) - run[:-1]
        rest = np.log(pk) + pk * u[-1] - zeta[-1] - np.log(S - pk) if S > pk else np.inf
        parts1 = np.concatenate([[head], cells[in1]])
        parts2 = np.concatenate([cells[~in1], [rest]])
        logJ1[k] = special.logsumexp(parts1)
        logJ2[k] = special.logsumexp(parts2)
    return logJ1, logJ2


def log_moment_bound(tail: "TailEnvelope", p) -> np.ndarray:
    """``ln`` of a rigorous upper bound on ``E|xi|^p`` for every ``xi`` obeying ``tail``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    x = tail.grid
    zeta = np.maximum(tail.zeta.values, 0.0)
    keep = (x > 0) & np.isfinite(zeta)
    j1, j2 = _log_moment_parts(x[keep], zeta[keep], p, -np.inf)
    return np.logaddexp(j1, j2)


def tail_to_moments(
    tail: TailEnvelope,
    p_grid,
    *,
    curvature_from: float | None = None,
    threshold: float = CURVATURE_THRESHOLD,
) -> MomentEnvelope:
    """Moment envelope ``psi(p) = C3 exp(Z*(p)/p)`` implied by a tail envelope.

    ``C3`` is computed, not assumed: ``E|xi|^p = int p x^(p-1) T(x) dx`` is
    bounded by an upper Riemann sum of the nonincreasing running envelope
    plus a closed-form tail past the grid that extends ``Z`` by its last slope
    (valid because ``Z`` is convex there).  ``C3`` is the largest ratio of
    ``J(p)^(1/p)`` to ``exp(Z*(p)/p)`` over ``p_grid``.

    Raises :class:`ConditionError` naming (2.6) when ``Z`` lacks uniformly
    positive curvature on some ``u >= C1``.
    """
    p = np.asarray(p_grid, dtype=float)
    if np.any(p < 1):
        raise ValueError("p-grid must lie in [1, inf)")
    x = tail.grid
    zeta = np.maximum(tail.zeta.values, 0.0)
    keep = (x > 0) & np.isfinite(zeta)
    x, zeta = x[keep], zeta[keep]
    if x.size < 4:
        raise ValueError("tail grid too short")
    u = np.log(x)
    d2 = second_differences(u, zeta)
    start = _curved_start(u, d2, threshold, curvature_from)
    C1 = float(u[start]) if curvature_from is None else float(curvature_from)
    curv = float(np.min(d2[start - 1 :]))

    Zg = GridFunction(u, zeta)
    Zstar = conjugate_values(Zg, p)

    S = (zeta[-1] - zeta[-2]) / (u[-1] - u[-2])
    if S <= p.max():
        raise RegimeError(
            f"tail grid ends too early: last slope of Z is {S:.4g} but p reaches {p.max():g}; extend the grid"
        )
    logJ1, logJ2 = _log_moment_parts(x, zeta, p, C1)
    logJ = np.logaddexp(logJ1, logJ2)
    C3 = float(np.max(np.exp((logJ - Zstar) / p)))
    table = GridFunction(p, C3 * np.exp(Zstar / p), "slope")
    psi = PsiFunction("psi_grid", {"C3": C3}, np.inf, table)
    return MomentEnvelope(psi, p, C3, C1, curv, Zstar, logJ, logJ1, logJ2)


# ---------------------------------------------------------------------------
# round trip
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundTripReport:
    p_grid: np.ndarray
    ratio: np.ndarray
    ratio_min: float
    ratio_max: float
    spread: float
    C3: float
    tail: TailEnvelope
    moments: MomentEnvelope


def roundtrip_equivalence(psi: PsiFunction, p_grid, y_grid, *, markov_p=None) -> RoundTripReport:
    """Run moments -> tail -> moments and report ``psi_recovered / psi``.

    The parameterisation is ``psi = exp(nu(p)/p)``; ``nu`` must be convex and
    ``u -> nu(e^u)`` must satisfy the curvature condition (2.6).
    """
    p = np.asarray(p_grid, dtype=float)
    nu = nu_of_psi(psi, p)
    if not nu.is_convex():
        raise ConditionError("nu(p) = p ln psi(p) is not convex on the p-grid")
    u = np.log(p)
    if p.size >= 3 and np.min(second_differences(u, nu.values)) < CURVATURE_THRESHOLD:
        raise ConditionError("condition (2.6) fails for u -> nu(e^u)")
    tail = moments_to_tail(psi, 1.0, y_grid, enforce_regime=False, p_grid=markov_p)
    # where the optimal order hits the p-grid end the envelope turns linear in
    # ln y; those points carry no curvature information, so drop them
    ok = tail.meta["argmax_p"] < tail.meta["p_end"]
    if np.count_nonzero(ok) < 4:
        raise RegimeError("y-grid lies beyond the reach of the Markov p-grid")
    tail = TailEnvelope(GridFunction(tail.zeta.grid[ok], tail.zeta.values[ok]), 1.0, "two", tail.notes, tail.meta)
    mom = tail_to_moments(tail, p)
    ratio = mom.psi(p) / psi(p)
    lo, hi = float(np.min(ratio)), float(np.max(ratio))
    return RoundTripReport(p, ratio, lo, hi, hi / lo, mom.C3, tail, mom)


# ---------------------------------------------------------------------------
# power-log tails with bounded moment support
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLogTailParams:
    """``P(|xi| >= x) <= (x/K)^-beta ln(x/K)^gamma L(ln(x/K))`` for ``x >= K``,
    with ``L`` constant (``L=None``) or ``(ln max(t, e))^L``."""

    beta: float
    gamma: float = 0.0
    L: float | None = None
    K: float = 1.0

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError("power-log tail needs beta > 1")
        if not self.gamma > -1:
            raise ValueError("power-log tail needs gamma > -1")
        if not self.K > 0:
            raise ValueError("K must be positive")

    def tail(self, x):
        t = np.asarray(x, dtype=float) / self.K
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.log(np.maximum(t, 1.0))
            v = t ** (-self.beta) * lt**self.gamma * slowly_varying(self.L, lt)
        return np.minimum(1.0, np.where(t <= 1.0, 1.0, v))


def _powerlog_shape(beta, gamma, L, p):
    gap = beta - p
    return gap ** (-(gamma + 1.0) / beta) * slowly_varying(L, 1.0 / gap) ** (1.0 / beta)


def _powerlog_I(params: PowerLogTailParams, p: float) -> float:
    """``int_0^inf exp(-y (beta - p)) y^gamma L(y) dy``."""
    a = params.beta - p
    g = params.gamma
    if params.L is None or params.L == 0:
        return float(np.exp(special.gammaln(g + 1.0) - (g + 1.0) * np.log(a)))

    def f(y):
        return np.exp(-y * a) * y**g * float(slowly_varying(params.L, y))

    peak = max(g / a, np.e)
    val = integrate.quad(f, 0.0, np.e, epsrel=1e-10, limit=500)[0]
    val += integrate.quad(f, np.e, np.e + 10 * peak, epsrel=1e-10, limit=500)[0]
    val += integrate.quad(f, np.e + 10 * peak, np.inf, epsrel=1e-10, limit=500)[0]
    return float(val)


@dataclass(frozen=True, eq=False)
class PowerLogMoments:
    psi: PsiFunction
    p_grid: np.ndarray
    C1: float
    moment_bound: np.ndarray
    exponent: float


def powerlog_tail_to_moments(params: PowerLogTailParams, p_grid) -> PowerLogMoments:
    """``|xi|_p <= C1 (beta-p)^(-(gamma+1)/beta) L^(1/beta)(1/(beta-p))``.

    From ``E|xi|^p <= K^p (1 + p I(p))`` with ``I`` the Gamma-type integral;
    ``C1`` (including ``K``) is the largest ratio to the shape on ``p_grid``.
    """
    p = np.asarray(p_grid, dtype=float)
    if np.any(p < 1) or np.any(p >= params.beta):
        raise ValueError(f"p-grid must lie in [1, beta={params.beta:g})")
    bound = np.array([params.K * (1.0 + pk * _powerlog_I(params, pk)) ** (1.0 / pk) for pk in p])
    shape = _powerlog_shape(params.beta, params.gamma, params.L, p)
    C1 = float(np.max(bound / shape))
    psi = make_psi_family("powerlog", beta=params.beta, gamma=params.gamma, L=params.L, scale=C1)
    return PowerLogMoments(psi, p, C1, bound, (params.gamma + 1.0) / params.beta)


@dataclass(frozen=True, eq=False)
class PowerLogTailReport:
    envelope: TailEnvelope
    beta: float
    log_exponent: float
    input_gamma: float
    drift: float
    C2: float
    fitted_log_exponent: float


def powerlog_moments_to_tail(psi: PsiFunction, y_grid) -> PowerLogTailReport:
    """Tail envelope ``C2 x^-beta (ln x)^(gamma+1) L(ln x)`` from a power-log moment
    envelope, computed by the Markov optimisation over ``p in [1, beta)``.

    The shape's log exponent ``gamma + 1`` is one more than the ``gamma`` in the
    moment envelope's exponent ``(gamma+1)/beta``; ``drift`` reports that gap.
    """
    if psi.family != "powerlog":
        raise PsiError("expected a power-log moment envelope")
    beta, gamma, L = psi.params["beta"], psi.params["gamma"], psi.params.get("L")
    y = np.asarray(y_grid, dtype=float)
    if np.any(y <= 1):
        raise RegimeError("power-log tail needs x > 1")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundsWarning)
        env = moments_to_tail(psi, 1.0, y, enforce_regime=False, p_grid=markov_p_grid(beta, n=20000))
    lx = np.log(y)
    shape = y ** (-beta) * lx ** (gamma + 1.0) * slowly_varying(L, lx)
    bound = env(y)
    C2 = float(np.max(bound / shape))
    # log exponent of (ln x) in bound * x^beta / L, fitted on the upper half of the grid
    h = y.size // 2
    resid = np.log(bound[h:]) + beta * lx[h:] - np.log(slowly_varying(L, lx[h:]))
    slope = float(np.polyfit(np.log(lx[h:]), resid, 1)[0])
    return PowerLogTailReport(env, beta, gamma + 1.0, gamma, 1.0, C2, slope)
