"""Closed-form fixture distributions and empirical estimators.

Every bound produced elsewhere in the package is checked against one of these
models: an exact tail/moment/MGF where one exists, numeric quadrature where it
does not, and seeded inverse-CDF samples for Monte-Carlo checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import integrate, optimize, special, stats
from statsmodels.stats.proportion import proportion_confint

FAMILIES = ("gaussian", "laplace", "pareto_unit", "stretched_exp", "log_weibull")

QUAD_RTOL = 1e-8
# two-sided 99% normal quantile, used for mean-type CIs
Z99 = float(stats.norm.ppf(0.995))


class KramerViolation(ValueError):
    """The MGF does not exist at the requested point (tail too heavy)."""


class OracleError(ValueError):
    """Bad model parameters or an estimator asked for more than the data supports."""


def _quad(fn, a, b, **kw) -> float:
    val, _ = integrate.quad(fn, a, b, epsrel=QUAD_RTOL, epsabs=0.0, limit=500, **kw)
    return float(val)


@dataclass(frozen=True)
class DistributionModel:
    """A fixture random variable.

    Families (``params`` in brackets):

    * ``gaussian`` [sigma]: centred normal.
    * ``laplace`` []: density ``exp(-|x|)/2``.
    * ``pareto_unit`` [alpha]: ``omega**-alpha`` for ``omega`` uniform on (0, 1).
    * ``stretched_exp`` [m, r]: symmetric, ``P(|xi| >= x) = exp(-x^q (ln x)^(-(q-1) r))``
      for ``x >= e`` with ``q = m/(m-1)``, linear from 1 down to ``T(e)`` on ``[0, e)``.
    * ``log_weibull`` [theta]: positive, ``P(xi >= y) = exp(-ln(y)^theta / theta)`` for ``y >= 1``.
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise OracleError(f"unknown family {self.family!r}")
        p = dict(self.params)
        if self.family == "gaussian":
            p.setdefault("sigma", 1.0)
            if p["sigma"] <= 0:
                raise OracleError("sigma must be positive")
        elif self.family == "pareto_unit":
            a = p.setdefault("alpha", 0.25)
            if not 0 < a < 0.5:
                raise OracleError("pareto_unit needs alpha in (0, 1/2)")
        elif self.family == "stretched_exp":
            m = p.setdefault("m", 2.0)
            r = p.setdefault("r", 0.0)
            if m <= 1:
                raise OracleError("stretched_exp needs m > 1")
            if r > m:
                raise OracleError("stretched_exp needs r <= m for a monotone tail at x = e")
        elif self.family == "log_weibull":
            t = p.setdefault("theta", 2.0)
            if t <= 1:
                raise OracleError("log_weibull needs theta > 1")
        object.__setattr__(self, "params", p)

    # -- constructors -----------------------------------------------------

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "DistributionModel":
        return cls("gaussian", {"sigma": float(sigma)})

    @classmethod
    def laplace(cls) -> "DistributionModel":
        return cls("laplace", {})

    @classmethod
    def pareto_unit(cls, alpha: float = 0.25) -> "DistributionModel":
        return cls("pareto_unit", {"alpha": float(alpha)})

    @classmethod
    def stretched_exp(cls, m: float = 2.0, r: float = 0.0) -> "DistributionModel":
        return cls("stretched_exp", {"m": float(m), "r": float(r)})

    @classmethod
    def log_weibull(cls, theta: float = 2.0) -> "DistributionModel":
        return cls("log_weibull", {"theta": float(theta)})

    @classmethod
    def from_json(cls, text: str) -> "DistributionModel":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        return cls(d["family"], dict(d.get("params", {})))

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "params": self.params})

    @property
    def name(self) -> str:
        if not self.params:
            return self.family
        args = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.family}({args})"

    @property
    def symmetric(self) -> bool:
        return self.family in ("gaussian", "laplace", "stretched_exp")

    @property
    def mgf_radius(self) -> float:
        """Half-width of the open interval where ``E exp(lam xi)`` is finite."""
        return {
            "gaussian": np.inf,
            "laplace": 1.0,
            "stretched_exp": np.inf,
            "pareto_unit": 0.0,
            "log_weibull": 0.0,
        }[self.family]

    @property
    def moment_limit(self) -> float:
        """Supremum of orders with finite absolute moments."""
        if self.family == "pareto_unit":
            return 1.0 / self.params["alpha"]
        return np.inf

    # -- tails ------------------------------------------------------------

    def _q(self) -> float:
        m = self.params["m"]
        return m / (m - 1.0)

    def _stretched_tail_far(self, y):
        q, r = self._q(), self.params["r"]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.exp(-(y**q) * np.log(y) ** (-(q - 1.0) * r))

    def _stretched_log_far(self, p: float) -> float:
        # ln of p * int_e^inf y^(p-1) T(y) dy, integrated in t = ln y around the peak
        q, r = self._q(), self.params["r"]

        def logf(t):
            with np.errstate(over="ignore"):
                return np.log(p) + p * t - np.exp(q * t) * t ** (-(q - 1.0) * r)

        res = optimize.minimize_scalar(lambda t: -logf(t), bounds=(1.0, max(2.0, np.log(p) + 5.0)), method="bounded")
        tpk = float(res.x)
        peak = logf(tpk)
        body = _quad(lambda t: np.exp(logf(t) - peak), 1.0, tpk) + _quad(lambda t: np.exp(logf(t) - peak), tpk, np.inf)
        return float(peak + np.log(body))

    def tail(self, y):
        """Two-sided ``P(|xi| >= y)``."""
        y = np.asarray(y, dtype=float)
        ya = np.maximum(y, 0.0)
        f = self.family
        if f == "gaussian":
            out = special.erfc(ya / (self.params["sigma"] * np.sqrt(2.0)))
        elif f == "laplace":
            out = np.exp(-ya)
        elif f == "pareto_unit":
            out = np.minimum(1.0, np.maximum(ya, 1.0) ** (-1.0 / self.params["alpha"]))
        elif f == "stretched_exp":
            te = float(self._stretched_tail_far(np.e))
            near = 1.0 - (1.0 - te) * ya / np.e
            far = self._stretched_tail_far(np.maximum(ya, np.e))
            out = np.where(ya < np.e, near, far)
        else:
            th = self.params["theta"]
            lg = np.log(np.maximum(ya, 1.0))
            out = np.exp(-(lg**th) / th)
        out = np.where(y <= 0, 1.0, out)
        return out if out.ndim else float(out)

    def tail_one_sided(self, y):
        """``P(xi >= y)``."""
        y = np.asarray(y, dtype=float)
        if self.family == "gaussian":
            out = stats.norm.sf(y / self.params["sigma"])
        elif self.symmetric:
            t = np.asarray(self.tail(np.abs(y)))
            out = np.where(y >= 0, 0.5 * t, 1.0 - 0.5 * t)
            out = np.where(y == 0, 0.5, out)
        else:
            out = np.where(y <= 0, 1.0, self.tail(y))
        return out if np.ndim(out) else float(out)

    # -- moments ----------------------------------------------------------

    def moment(self, p: float) -> float:
        """``|xi|_p = (E|xi|^p)^(1/p)``; ``inf`` past the moment limit."""
        if p <= 0:
            raise OracleError("moment order must be positive")
        lm = self.log_abs_moment(p)
        return float(np.exp(lm / p)) if np.isfinite(lm) else np.inf

    def log_abs_moment(self, p: float) -> float:
        """``ln E|xi|^p``, computed in log space where it matters."""
        f = self.family
        if f == "gaussian":
            s = self.params["sigma"]
            return float(
                p * np.log(s) + 0.5 * p * np.log(2.0) + special.gammaln((p + 1) / 2) - 0.5 * np.log(np.pi)
            )
        if f == "laplace":
            return float(special.gammaln(p + 1.0))
        if f == "pareto_unit":
            a = self.params["alpha"]
            if a * p >= 1:
                return np.inf
            return float(-np.log1p(-a * p))
        if f == "stretched_exp":
            te = float(self._stretched_tail_far(np.e))
            near = np.e**p * (1.0 - (1.0 - te) * p / (p + 1.0))
            return float(np.logaddexp(np.log(near), self._stretched_log_far(p)))
        return self._log_weibull_log_moment(p)

    def _log_weibull_log_moment(self, p: float) -> float:
        # E xi^p = 1 + p * int_0^inf exp(p t) T(e^t) dt with t = ln y;
        # the integrand peaks at t* = p^(1/(theta-1)), integrate in shifted log space
        th = self.params["theta"]
        tstar = p ** (1.0 / (th - 1.0))

        def logf(t):
            return p * t - t**th / th

        peak = logf(tstar)
        width = max(10.0, 10.0 * (th - 1.0) ** -0.5 * tstar ** (1 - th / 2))
        lo = max(0.0, tstar - width)
        hi = tstar + width
        body = _quad(lambda t: np.exp(logf(t) - peak), lo, hi, points=[tstar])
        rest = 0.0
        if lo > 0:
            rest += _quad(lambda t: np.exp(logf(t) - peak), 0.0, lo)
        rest += _quad(lambda t: np.exp(logf(t) - peak), hi, np.inf)
        return float(np.logaddexp(0.0, np.log(p) + peak + np.log(body + rest)))

    def moments(self, ps) -> np.ndarray:
        return np.array([self.moment(float(p)) for p in np.atleast_1d(ps)])

    # -- MGF --------------------------------------------------------------

    def mgf(self, lam: float) -> float:
        """``E exp(lam xi)``; raises :class:`KramerViolation` where it does not exist."""
        lam = float(lam)
        if lam == 0.0:
            return 1.0
        f = self.family
        if f == "gaussian":
            return float(np.exp(0.5 * (self.params["sigma"] * lam) ** 2))
        if f == "laplace":
            if abs(lam) >= 1:
                raise KramerViolation(f"laplace MGF is infinite for |lambda| >= 1 (got {lam})")
            return 1.0 / (1.0 - lam * lam)
        if f == "log_weibull":
            raise KramerViolation(
                "log_weibull does not satisfy Kramer's condition: its MGF does not exist"
            )
        if f == "pareto_unit":
            if lam > 0:
                raise KramerViolation("pareto_unit has a power tail: MGF infinite for lambda > 0")
            a = self.params["alpha"]
            return _quad(lambda w: np.exp(lam * w ** (-a)), 0.0, 1.0)
        # stretched_exp: symmetric, E cosh(lam |xi|) = 1 + int lam sinh(lam y) T(y) dy
        a = abs(lam)

        def integrand(y):
            lt = np.log(float(self.tail(y)))
            return 0.5 * a * (np.exp(a * y + lt) - np.exp(-a * y + lt))

        cut = max(10.0, 2.0 * (a / self._q()) ** (self.params["m"] - 1.0) + 10.0)
        with np.errstate(divide="ignore", over="ignore"):
            body = _quad(integrand, 0.0, np.e) + _quad(integrand, np.e, cut)
            return 1.0 + body + _quad(integrand, cut, np.inf)

    def log_mgf(self, lam: float) -> float:
        return float(np.log(self.mgf(lam)))

    def abs_mgf(self, lam: float) -> float:
        """``max(E exp(lam xi), E exp(-lam xi))``."""
        return max(self.mgf(lam), self.mgf(-lam))

    # -- sampling ---------------------------------------------------------

    def quantile(self, u):
        """Inverse CDF of ``xi``."""
        u = np.asarray(u, dtype=float)
        f = self.family
        if f == "gaussian":
            out = self.params["sigma"] * stats.norm.ppf(u)
        elif f == "laplace":
            with np.errstate(divide="ignore"):
                out = np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))
        elif f == "pareto_unit":
            # the construction xi = omega**-alpha with omega = u; decreasing in u,
            # which is harmless for sampling since u and 1-u share a law
            out = u ** (-self.params["alpha"])
        elif f == "log_weibull":
            th = self.params["theta"]
            with np.errstate(divide="ignore"):
                out = np.exp((-th * np.log(u)) ** (1.0 / th))
        else:
            s = np.where(u < 0.5, 2.0 * u, 2.0 * (1.0 - u))
            mag = self._abs_tail_inverse(s)
            out = np.where(u < 0.5, -mag, mag)
        return out if out.ndim else float(out)

    def _abs_tail_inverse(self, s: np.ndarray) -> np.ndarray:
        """Solve ``T(y) = s`` by vectorised bisection (``T`` continuous, decreasing)."""
        s = np.asarray(s, dtype=float)
        lo = np.zeros_like(s)
        hi = np.full_like(s, np.e)
        while True:
            grow = np.asarray(self.tail(hi)) > s
            if not np.any(grow):
                break
            hi = np.where(grow, 2.0 * hi, hi)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = np.asarray(self.tail(mid)) > s
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return 0.5 * (lo + hi)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """``n`` draws by inverse CDF from ``numpy.random.default_rng(seed)``."""
        if n < 1:
            raise OracleError("n must be positive")
        u = np.random.default_rng(seed).random(n)
        # keep u inside (0, 1) so quantiles stay finite
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
        return self.quantile(u)


# ---------------------------------------------------------------------------
# product fixtures for the multivariate suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndependentVector:
    """Vector of independent fixture coordinates."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not 1 <= len(self.components) <= 3:
            raise OracleError("dimension must be between 1 and 3")

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def name(self) -> str:
        return "x".join(c.name for c in self.components)

    def sample(self, n: int, seed: int) -> np.ndarray:
        seqs = np.random.SeedSequence(seed).spawn(self.dim)
        cols = [c.sample(n, int(s.generate_state(1)[0])) for c, s in zip(self.components, seqs)]
        return np.column_stack(cols)

    def mgf(self, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        return float(np.prod([c.mgf(l) for c, l in zip(self.components, lam)]))

    def u_tail(self, x) -> float:
        """Exact ``max over sign patterns of P(eps_j xi_j > x_j for all j)``."""
        x = np.asarray(x, dtype=float)
        best = 0.0
        for eps in product((-1, 1), repeat=self.dim):
            pr = 1.0
            for c, e, xj in zip(self.components, eps, x):
                # P(e * xi > x) = P(xi > x) for e=1, P(xi < -x) for e=-1
                if e == 1:
                    pr *= float(c.tail_one_sided(xj))
                else:
                    pr *= 1.0 - float(c.tail_one_sided(-xj))
            best = max(best, pr)
        return best

    def min_coordinate_tail(self, y: float) -> float:
        return float(np.prod([c.tail(y) for c in self.components]))


# ---------------------------------------------------------------------------
# empirical estimators
# ---------------------------------------------------------------------------


def empirical_tail(samples, y, *, one_sided: bool = False, alpha: float = 0.01):
    """Frequency of ``|xi| >= y`` (or ``xi >= y``) with a Wilson CI half-width.

    The half-width is the larger distance from the estimate to the Wilson
    bounds at confidence ``1 - alpha``.  Vectorised over ``y``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise OracleError("no samples")
    srt = np.sort(x if one_sided else np.abs(x))
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    counts = srt.size - np.searchsorted(srt, yv, side="left")
    est = counts / srt.size
    lo, hi = proportion_confint(counts, srt.size, alpha=alpha, method="wilson")
    hw = np.maximum(est - lo, hi - est)
    if np.ndim(y) == 0:
        return float(est[0]), float(hw[0])
    return est, hw


def relative_moment_se(samples, p: float) -> float:
    """Relative standard error of the sample mean of ``|xi|^p``."""
    a = np.abs(np.asarray(samples, dtype=float).ravel())
    # work in scaled form to avoid overflow for large p
    top = a.max()
    if top == 0:
        return np.inf
    w = (a / top) ** p
    mean = w.mean()
    if mean == 0:
        return np.inf
    return float(w.std(ddof=1) / (np.sqrt(a.size) * mean))


def empirical_moment(
    samples, p: float, *, n_boot: int = 100, seed: int = 0, noise_cap: float = 0.25, alpha: float = 0.01
):
    """``|xi|_p`` from samples with a percentile-bootstrap CI half-width.

    Raises :class:`OracleError` when the relative standard error of the p-th
    moment exceeds ``noise_cap``.
    """
    if p < 1:
        raise OracleError("moment order must be at least 1")
    a = np.abs(np.asarray(samples, dtype=float).ravel())
    rse = relative_moment_se(a, p)
    if not rse <= noise_cap:
        raise OracleError(f"p={p} is above the noise cap (relative SE {rse:.3g} > {noise_cap})")
    top = a.max()
    w = (a / top) ** p
    est = top * w.mean() ** (1.0 / p)
    rng = np.random.default_rng(seed)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, a.size, a.size)
        boots[b] = top * w[idx].mean() ** (1.0 / p)
    lo, hi = np.quantile(boots, [alpha / 2, 1 - alpha / 2])
    return float(est), float(max(est - lo, hi - est))


def empirical_mgf(source, lam: float, *, model: DistributionModel | None = None):
    """``E exp(lam xi)`` with a 99% normal-approximation CI half-width.

    ``source`` is a sample array or a :class:`DistributionModel` (exact or
    quadrature value, half-width 0).  When ``model`` is given, or ``source``
    is a model, ``lam`` is checked against the model's MGF support first.
    """
    lam = float(lam)
    mdl = source if isinstance(source, DistributionModel) else model
    if mdl is not None and lam != 0.0:
        if mdl.family == "log_weibull":
            raise KramerViolation(
                "log_weibull does not satisfy Kramer's condition: its MGF does not exist"
            )
        if abs(lam) >= mdl.mgf_radius and not (mdl.family == "pareto_unit" and lam < 0):
            raise KramerViolation(f"lambda={lam} outside the MGF support of {mdl.name}")
    if isinstance(source, DistributionModel):
        return source.mgf(lam), 0.0
    x = np.asarray(source, dtype=float).ravel()
    if lam == 0.0:
        return 1.0, 0.0
    v = np.exp(lam * x)
    return float(v.mean()), float(Z99 * v.std(ddof=1) / np.sqrt(x.size))


def lyapunov_ok(moments, rtol: float = 1e-9) -> bool:
    """``p -> |xi|_p`` nondecreasing along a sorted p-grid."""
    m = np.asarray(moments, dtype=float)
    return bool(np.all(np.diff(m) >= -rtol * np.abs(m[1:])))
