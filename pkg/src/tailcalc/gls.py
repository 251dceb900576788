"""Moment-growth envelopes psi, the nu transform and Grand Lebesgue Space norms.

The GLS norm of a random variable against ``psi`` is ``sup_p |xi|_p / psi(p)``
over ``p`` in ``[1, b)``.  Here the supremum is always a maximum over a finite
p-grid, so it is a lower bound of the true value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .gridfn import GridFunction

PSI_FAMILIES = (
    "psi_one",
    "psi_m_r",
    "psi_m_L_generic",
    "psi_exp_Cbeta",
    "psi_grid",
    "powerlog",
)

DEFAULT_P_MAX = 100.0
DEFAULT_P_POINTS = 200
# natural psi near a finite support end stops at b - TRUNCATION * b
TRUNCATION = 0.01


class PsiError(ValueError):
    """Invalid psi family, parameters, or evaluation outside [1, b)."""


def slowly_varying(tag, x):
    """``L(x)`` for the two supported tags: ``None``/``0`` (constant 1) or a
    log power ``r`` meaning ``(ln max(x, e))^r``."""
    x = np.asarray(x, dtype=float)
    if tag is None or tag == 0:
        return np.ones_like(x)
    return np.log(np.maximum(x, np.e)) ** float(tag)


@dataclass(frozen=True, eq=False)
class PsiFunction:
    """Moment envelope ``psi(p)`` on ``[1, b)``."""

    family: str
    params: dict = field(default_factory=dict)
    support_end: float = np.inf
    table: GridFunction | None = None

    def __post_init__(self):
        if self.family not in PSI_FAMILIES:
            raise PsiError(f"unknown psi family {self.family!r}")
        if not self.support_end > 1:
            raise PsiError("support end b must exceed 1")
        if self.family == "psi_grid" and self.table is None:
            raise PsiError("psi_grid needs a table")

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p < 1) or np.any(p >= self.support_end):
            raise PsiError(f"p outside the support [1, {self.support_end})")
        v = self.params.get("scale", 1.0) * self._eval(p)
        return v if np.ndim(v) else float(v)

    def log(self, p):
        """``ln psi(p)``; avoids overflow for fast-growing families."""
        p = np.asarray(p, dtype=float)
        if self.family == "psi_exp_Cbeta":
            if np.any(p < 1) or np.any(p >= self.support_end):
                raise PsiError(f"p outside the support [1, {self.support_end})")
            out = self.params["C"] * p ** self.params["beta"] + np.log(self.params.get("scale", 1.0))
            return out if np.ndim(out) else float(out)
        return np.log(self(p))

    def _eval(self, p):
        f, k = self.family, self.params
        if f == "psi_one":
            return p.copy()
        if f == "psi_m_r":
            m, r = k["m"], k.get("r", 0.0)
            return p ** (1.0 / m) * np.log(p + 1.0) ** (-r / (m - 1.0))
        if f == "psi_m_L_generic":
            m = k["m"]
            L = slowly_varying(k.get("L"), p ** ((m - 1.0) ** 2 / m))
            return p ** (1.0 / m) * L ** (-1.0 / (m - 1.0))
        if f == "psi_exp_Cbeta":
            return np.exp(k["C"] * p ** k["beta"])
        if f == "powerlog":
            beta, gamma = k["beta"], k["gamma"]
            gap = beta - p
            L = slowly_varying(k.get("L"), 1.0 / gap)
            return gap ** (-(gamma + 1.0) / beta) * L ** (1.0 / beta)
        return self.table(p)

    def scaled(self, c: float) -> "PsiFunction":
        """``c * psi`` on the same support."""
        params = dict(self.params)
        params["scale"] = params.get("scale", 1.0) * c
        return PsiFunction(self.family, params, self.support_end, self.table)

    def check(self, p_grid=None) -> None:
        """Invariant check: positive, finite, bounded away from 0 on sample points."""
        grid = default_p_grid(self.support_end) if p_grid is None else np.asarray(p_grid, dtype=float)
        lv = np.asarray(self.log(grid), dtype=float)
        if not np.all(np.isfinite(lv)):
            raise PsiError("psi must be positive and finite on [1, b)")

    def to_json(self) -> str:
        d = {"family": self.family, "params": self.params}
        if np.isfinite(self.support_end):
            d["support_end"] = self.support_end
        if self.table is not None:
            d["table"] = json.loads(self.table.to_json())
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "PsiFunction":
        d = json.loads(text)
        table = None
        if "table" in d:
            table = GridFunction.from_json(json.dumps(d["table"]))
        return cls(d["family"], d.get("params", {}), float(d.get("support_end", np.inf)), table)


def make_psi_family(family: str, **params) -> PsiFunction:
    """Closed-form psi families.

    >>> make_psi_family("psi_m_r", m=2, r=0)(4.0)
    2.0
    >>> make_psi_family("psi_one")(3.0)
    3.0
    """
    if family == "psi_one":
        return PsiFunction("psi_one", {})
    if family in ("psi_m_r", "psi_m_L_generic"):
        m = float(params.get("m", 2.0))
        if m <= 1:
            raise PsiError("m must exceed 1")
        clean = {"m": m}
        if family == "psi_m_r":
            clean["r"] = float(params.get("r", 0.0))
        else:
            clean["L"] = params.get("L")
        return PsiFunction(family, clean)
    if family == "psi_exp_Cbeta":
        C, beta = float(params.get("C", 1.0)), float(params.get("beta", 1.0))
        if C <= 0 or beta <= 0:
            raise PsiError("C and beta must be positive")
        return PsiFunction(family, {"C": C, "beta": beta})
    if family == "powerlog":
        beta, gamma = float(params["beta"]), float(params.get("gamma", 0.0))
        if beta <= 1 or gamma <= -1:
            raise PsiError("powerlog needs beta > 1 and gamma > -1")
        clean = {"beta": beta, "gamma": gamma, "L": params.get("L"), "scale": float(params.get("scale", 1.0))}
        return PsiFunction(family, clean, beta)
    if family == "psi_grid":
        table = params["table"]
        b = float(params.get("support_end", np.inf))
        return PsiFunction(family, {}, b, table)
    raise PsiError(f"unknown psi family {family!r}")


def psi_from_nu(nu: GridFunction, support_end: float = np.inf) -> PsiFunction:
    """Grid-backed ``psi = exp(nu(p)/p)``."""
    p = nu.grid
    return PsiFunction("psi_grid", {"from": "nu"}, support_end, GridFunction(p, np.exp(nu.values / p)))


def default_p_grid(b: float = np.inf, n: int = DEFAULT_P_POINTS, p_max: float = DEFAULT_P_MAX) -> np.ndarray:
    """Geometric grid on ``[1, min(p_max, b - 0.01 b)]``."""
    hi = p_max if not np.isfinite(b) else min(p_max, b - TRUNCATION * b)
    return np.geomspace(1.0, hi, n)


# ---------------------------------------------------------------------------
# moment oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentOracle:
    """``p -> |xi|_p`` with a reliability cap ``max_p``."""

    moment_fn: Callable[[float], float]
    max_p: float = np.inf
    source: str = "closed_form"
    label: str = ""

    def __call__(self, p):
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        if np.any(p_arr > self.max_p):
            raise ValueError(f"p={p_arr.max():g} above the oracle limit {self.max_p:g}")
        vals = np.array([float(self.moment_fn(float(q))) for q in p_arr])
        return vals if np.ndim(p) else float(vals[0])

    def scaled(self, c: float) -> "MomentOracle":
        return MomentOracle(lambda p: c * self.moment_fn(p), self.max_p, self.source, f"{c:g}*{self.label}")

    def lyapunov_ok(self, p_grid, rtol: float = 1e-9) -> bool:
        m = np.asarray(self(np.asarray(p_grid, dtype=float)))
        return bool(np.all(np.diff(m) >= -rtol * np.abs(m[1:])))

    @classmethod
    def closed_form(cls, fn: Callable[[float], float], max_p: float = np.inf, label: str = "") -> "MomentOracle":
        return cls(fn, max_p, "closed_form", label)

    @classmethod
    def from_model(cls, model) -> "MomentOracle":
        return cls(model.moment, model.moment_limit, "closed_form", model.name)

    @classmethod
    def from_density(cls, density: Callable[[float], float], support=(-np.inf, np.inf), max_p: float = np.inf, label: str = "") -> "MomentOracle":
        a, b = support

        def mom(p):
            def g(x):
                return abs(x) ** p * density(x)

            pts = [0.0] if a < 0 < b else None
            if pts and np.isfinite(a) and np.isfinite(b):
                val = integrate.quad(g, a, b, points=pts, epsrel=1e-8, limit=500)[0]
            elif a < 0 < b:
                val = integrate.quad(g, a, 0.0, epsrel=1e-8, limit=500)[0] + integrate.quad(g, 0.0, b, epsrel=1e-8, limit=500)[0]
            else:
                val = integrate.quad(g, a, b, epsrel=1e-8, limit=500)[0]
            return val ** (1.0 / p)

        return cls(mom, max_p, "quadrature", label)

    @classmethod
    def from_samples(cls, samples, noise_cap: float = 0.25, p_probe=None, label: str = "") -> "MomentOracle":
        """Empirical oracle; ``max_p`` is the first probe order whose moment has
        relative standard error above ``noise_cap``."""
        from .oracle import relative_moment_se

        a = np.abs(np.asarray(samples, dtype=float).ravel())
        probe = np.geomspace(1.0, 200.0, 120) if p_probe is None else np.asarray(p_probe, dtype=float)
        max_p = 1.0
        for p in probe:
            if relative_moment_se(a, p) > noise_cap:
                break
            max_p = float(p)
        top = a.max()

        def mom(p):
            return top * np.mean((a / top) ** p) ** (1.0 / p)

        return cls(mom, max_p, "samples", label)


def nu_of_psi(psi: PsiFunction, p_grid) -> GridFunction:
    """``nu(p) = p ln psi(p)`` on ``p_grid``.

    >>> nu = nu_of_psi(make_psi_family("psi_one"), [1.0, np.e])
    >>> round(float(nu.values[1]), 6)
    2.718282
    """
    p = np.asarray(p_grid, dtype=float)
    if np.any(p < 1) or np.any(p >= psi.support_end):
        raise PsiError("p-grid outside the support of psi")
    return GridFunction(p, p * np.asarray(psi.log(p)))


def _ratio(oracle: MomentOracle, psi: PsiFunction, p: np.ndarray) -> np.ndarray:
    m = np.asarray(oracle(p), dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(np.log(m) - np.asarray(psi.log(p)))


def gls_norm(oracle: MomentOracle, psi: PsiFunction, p_grid=None, *, return_argmax: bool = False):
    """``max_p |xi|_p / psi(p)`` over the grid.

    Without an explicit grid a geometric 200-point grid on ``[1, min(b, max_p, 100)]``
    is used and refined once around the argmax.
    """
    if p_grid is None:
        hi_b = psi.support_end
        grid = default_p_grid(hi_b, p_max=min(DEFAULT_P_MAX, oracle.max_p))
        r = _ratio(oracle, psi, grid)
        k = int(np.argmax(r))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        if hi > lo:
            fine = np.linspace(lo, hi, 41)
            grid = np.union1d(grid, fine)
    else:
        grid = np.asarray(p_grid, dtype=float)
        if np.any(grid < 1) or np.any(grid >= psi.support_end):
            raise PsiError("p-grid outside the support of psi")
    r = _ratio(oracle, psi, grid)
    if np.any(np.isnan(r)):
        raise ValueError("oracle returned NaN")
    k = int(np.argmax(r))
    val = float(r[k])
    return (val, float(grid[k])) if return_argmax else val


def sup_at_edge(oracle: MomentOracle, psi: PsiFunction, p_grid) -> bool:
    """True when the grid maximum sits at the last order and is still rising,
    i.e. the true supremum is likely infinite."""
    grid = np.asarray(p_grid, dtype=float)
    r = _ratio(oracle, psi, grid)
    return bool(np.argmax(r) == r.size - 1 and r[-1] > r[-2])


def natural_psi(oracle: MomentOracle, b: float = np.inf, p_grid=None) -> PsiFunction:
    """Grid-backed ``psi(p) = |xi|_p``; support end ``b`` truncated to ``0.99 b``."""
    b = min(b, oracle.max_p * (1 + 1e-12)) if np.isfinite(oracle.max_p) else b
    if p_grid is None:
        p = default_p_grid(b)
    else:
        p = np.asarray(p_grid, dtype=float)
        if np.isfinite(b):
            p = p[p <= b - TRUNCATION * b]
    vals = np.asarray(oracle(p), dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise PsiError("natural psi needs finite positive moments (degenerate or infinite moment met)")
    end = b if np.isfinite(b) else np.inf
    if np.isfinite(end) and p[-1] >= end:
        raise PsiError("p-grid reaches the support end")
    return PsiFunction("psi_grid", {"natural": oracle.label}, end, GridFunction(p, vals, "clamp"))


# ---------------------------------------------------------------------------
# Tauberian check for log-Weibull type tails
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TauberianReport:
    theta: float
    theta_prime: float
    y_probes: np.ndarray
    tail_ratios: np.ndarray
    p_probes: np.ndarray
    moment_ratios: np.ndarray
    moment_form: str


def tauberian_check(oracle: MomentOracle, tail: Callable, theta: float, y_probes, p_probes, *, moment_form: str = "norm") -> TauberianReport:
    """Ratios ``|ln T(y)| / (ln^theta y / theta)`` and the moment-side ratio.

    ``moment_form="norm"`` uses ``ln |eta|_p / (p^theta' / theta')``;
    ``moment_form="log_moment"`` uses ``ln E|eta|^p = p ln |eta|_p`` in the
    numerator instead.
    """
    if not theta > 1:
        raise ValueError("theta must exceed 1 (theta' undefined otherwise)")
    if moment_form not in ("norm", "log_moment"):
        raise ValueError(f"unknown moment_form {moment_form!r}")
    tp = theta / (theta - 1.0)
    y = np.asarray(y_probes, dtype=float)
    T = np.asarray(tail(y), dtype=float)
    if np.any((T <= 0) | (T >= 1)):
        raise ValueError("tail probe with T = 0 or T = 1")
    tail_ratios = np.abs(np.log(T)) / (np.log(y) ** theta / theta)
    p = np.asarray(p_probes, dtype=float)
    ln_norm = np.log(np.asarray(oracle(p), dtype=float))
    num = ln_norm if moment_form == "norm" else p * ln_norm
    moment_ratios = num / (p**tp / tp)
    return TauberianReport(theta, tp, y, tail_ratios, p, moment_ratios, moment_form)
