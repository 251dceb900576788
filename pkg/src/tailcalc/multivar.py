"""Vector-valued versions of the tail, moment and MGF conversions (``d <= 3``).

The tail of a random vector is measured by the sign-pattern function
``U(x) = max_eps P(eps_j xi_j > x_j for all j)``, moments by the mixed functional
``|xi|_r = (E prod |xi_j|^{r_j})^{1/|r|}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
from scipy import special
from statsmodels.stats.proportion import proportion_confint

from .gridfn import GridError, GridFunctionND, conjugate_values_nd
from .tail_moment import CURVATURE_THRESHOLD, ConditionError, RegimeError

MAX_DIM = 3


def sign_vectors(d: int) -> np.ndarray:
    """All ``2^d`` sign patterns as rows, in lexicographic order of ``(-1, 1)``.

    >>> sign_vectors(2).tolist()
    [[-1, -1], [-1, 1], [1, -1], [1, 1]]
    """
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must be between 1 and {MAX_DIM}")
    return np.array(list(product((-1, 1), repeat=d)), dtype=int)


def u_tail_empirical(samples, x, *, ci: bool = False, alpha: float = 0.01):
    """Empirical ``U(x)``: the largest sign-pattern orthant frequency.

    With ``ci=True`` returns ``(estimate, half-width)`` with the Wilson half-width
    of the maximising pattern.  ``x`` may be one vector or an ``(M, d)`` array.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2:
        raise ValueError("samples must be an (n, d) matrix")
    n, d = s.shape
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    if xs.shape[1] != d:
        raise ValueError("x dimension does not match the samples")
    if np.any(xs < 0):
        raise ValueError("x must be nonnegative coordinatewise")
    eps = sign_vectors(d)
    counts = np.zeros((xs.shape[0], eps.shape[0]), dtype=np.int64)
    for k, e in enumerate(eps):
        se = s * e[None, :]
        for i, xi in enumerate(xs):
            counts[i, k] = np.count_nonzero(np.all(se > xi[None, :], axis=1))
    best = counts.max(axis=1)
    est = best / n
    single = np.ndim(x) == 1
    if not ci:
        return float(est[0]) if single else est
    lo, hi = proportion_confint(best, n, alpha=alpha, method="wilson")
    hw = np.maximum(est - lo, hi - est)
    return (float(est[0]), float(hw[0])) if single else (est, hw)


def natural_phi_nd(mgf_oracle, lam_axes) -> GridFunctionND:
    """``phi_xi(lam) = ln max_eps E exp(sum_j eps_j lam_j xi_j)`` on a tensor grid.

    ``mgf_oracle`` maps a ``lam`` vector to ``E exp((lam, xi))``; objects with an
    ``mgf`` method (such as :class:`~tailcalc.oracle.IndependentVector`) are accepted.
    """
    fn = mgf_oracle.mgf if hasattr(mgf_oracle, "mgf") else mgf_oracle
    axes = tuple(np.asarray(a, dtype=float) for a in lam_axes)
    d = len(axes)
    eps = sign_vectors(d)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.empty(pts.shape[0])
    for i, lam in enumerate(pts):
        m = max(float(fn(e * lam)) for e in eps)
        if not np.isfinite(m) or m <= 0:
            raise ValueError(f"MGF oracle diverges at lambda={lam.tolist()}")
        vals[i] = np.log(m)
    return GridFunctionND(axes, vals.reshape(mesh[0].shape))


def _conj(phi: GridFunctionND, x: np.ndarray) -> np.ndarray:
    vals = conjugate_values_nd(phi, x)
    if not np.all(np.isfinite(vals)):
        raise GridError("degenerate conjugate")
    return vals


def chernov_nd(phi: GridFunctionND, x):
    """``U(x) <= exp(-phi*(x))`` for ``||xi||_B(phi) <= 1``.

    ``phi`` is taken even under sign flips, so the supremum over ``lam >= 0``
    that the sign-pattern bound needs equals the full conjugate.
    """
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise ValueError("x must be nonnegative coordinatewise")
    out = np.exp(-np.maximum(_conj(phi, xs), 0.0))
    return float(out[0]) if np.ndim(x) == 1 else out


def min_coordinate_bound(phi: GridFunctionND, norm: float, y, d: int | None = None):
    """``P(min_j |xi_j| > y) <= 2^d exp(-phi*(y/norm, ..., y/norm))``."""
    d = phi.dim if d is None else d
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    pts = np.repeat((y / norm)[:, None], d, axis=1)
    out = 2.0**d * np.exp(-np.maximum(_conj(phi, pts), 0.0))
    return out if out.size > 1 else float(out[0])


# ---------------------------------------------------------------------------
# moments <-> tails for vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VectorTailEnvelope:
    """``P(|xi_j| > y_j for all j) <= exp(-zeta(y))`` (so also ``U(y)``)."""

    zeta: GridFunctionND
    norm: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.zeta.dim

    def log_bound(self, y):
        return -np.maximum(np.asarray(self.zeta(np.asarray(y, dtype=float))), 0.0)

    def __call__(self, y):
        return np.exp(self.log_bound(y))


def moments_to_tail_nd(nu: GridFunctionND, y_points, norm: float = 1.0, *, enforce_regime: bool = True) -> np.ndarray:
    """Markov bound ``exp(-nu*(ln(y/norm)))`` from mixed moments.

    ``nu(p) = |p| ln psi(p)`` is sampled on a box of ``p >= 1`` vectors with
    ``|xi|_p <= norm psi(p)``.  Returns ``zeta(y) = nu*(ln(y/norm))`` at the
    ``(M, d)`` array ``y_points``; the bound on ``P(|xi_j| > y_j)`` is ``exp(-zeta)``.
    """
    if any(a[0] < 1 for a in nu.axes):
        raise ValueError("the p-box must lie in p >= 1")
    y = np.atleast_2d(np.asarray(y_points, dtype=float))
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    if enforce_regime and np.any(y <= np.e * norm):
        raise RegimeError("every coordinate of y must exceed e * norm")
    return conjugate_values_nd(nu, np.log(y / norm))


def moments_to_tail_nd_envelope(nu: GridFunctionND, y_axes, norm: float = 1.0, **kw) -> VectorTailEnvelope:
    """Tensor-grid version of :func:`moments_to_tail_nd`."""
    axes = tuple(np.asarray(a, dtype=float) for a in y_axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    z = moments_to_tail_nd(nu, pts, norm, **kw).reshape(mesh[0].shape)
    return VectorTailEnvelope(GridFunctionND(axes, z), norm)


@dataclass(frozen=True, eq=False)
class VectorMomentEnvelope:
    """``|xi|_p <= C3 exp(Z*(p)/|p|)`` on a box of moment vectors."""

    p_points: np.ndarray
    C3: float
    Zstar: np.ndarray
    log_J: np.ndarray
    lambda_min: float

    def moment_bound(self) -> np.ndarray:
        return self.C3 * np.exp(self.Zstar / self.p_points.sum(axis=1))

    def nu(self) -> np.ndarray:
        """``|p| ln(moment bound)``."""
        return self.p_points.sum(axis=1) * np.log(self.moment_bound())


def min_hessian_eigenvalue(Z: np.ndarray, axes) -> float:
    """Smallest eigenvalue of the finite-difference Hessian over interior nodes."""
    d = Z.ndim
    grads = np.gradient(Z, *axes, edge_order=2)
    if d == 1:
        grads = [grads]
    H = np.empty(Z.shape + (d, d))
    for i in range(d):
        gi = np.gradient(grads[i], *axes, edge_order=2)
        if d == 1:
            gi = [gi]
        for j in range(d):
            H[..., i, j] = gi[j]
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    inner = tuple(slice(2, -2) for _ in range(d))
    ev = np.linalg.eigvalsh(H[inner])
    return float(ev[..., 0].min())


def tail_to_moments_nd(zeta, x_axes, p_points, *, threshold: float = CURVATURE_THRESHOLD) -> VectorMomentEnvelope:
    """Mixed-moment bound from ``P(|xi_j| > x_j for all j) <= exp(-zeta(x))``.

    ``zeta`` is a callable on ``(N, d)`` arrays or a :class:`GridFunctionND`;
    ``x_axes`` are positive geometric axes on which ``Z(u) = zeta(e^u)`` is sampled.
    The Hessian of ``Z`` must have smallest eigenvalue above ``threshold``.
    ``E prod |xi_j|^{p_j} <= 2^d prod p_j int e^{(p,u) - Z(u)} du`` is integrated
    on the grid and ``C3 = max_p exp((ln J - Z*(p))/|p|)``.
    """
    axes = tuple(np.asarray(a, dtype=float) for a in x_axes)
    if any(np.any(a <= 0) for a in axes):
        raise ValueError("x-axes must be positive")
    d = len(axes)
    u_axes = tuple(np.log(a) for a in axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    fn = zeta if callable(zeta) and not isinstance(zeta, GridFunctionND) else zeta.__call__
    Z = np.maximum(np.asarray(fn(pts), dtype=float).reshape(mesh[0].shape), 0.0)
    if not np.all(np.isfinite(Z)):
        raise ValueError("zeta must be finite on the x-grid")
    lam_min = min_hessian_eigenvalue(Z, u_axes)
    if not lam_min >= threshold:
        raise ConditionError(
            f"minimal-eigenvalue condition fails: Hessian of Z(u)=zeta(e^u) has eigenvalue {lam_min:.3g} < {threshold:g}"
        )
    P = np.atleast_2d(np.asarray(p_points, dtype=float))
    if P.shape[1] != d or np.any(P < 1):
        raise ValueError("moment vectors must have d coordinates, each >= 1")
    Zf = GridFunctionND(u_axes, Z)
    Zstar = conjugate_values_nd(Zf, P)
    U = np.stack([m.ravel() for m in np.meshgrid(*u_axes, indexing="ij")], axis=1)
    Zr = Z.ravel()
    # trapezoid weights in u
    w = np.ones(1)
    for a in u_axes:
        wa = np.zeros(a.size)
        h = np.diff(a)
        wa[:-1] += h / 2
        wa[1:] += h / 2
        w = np.multiply.outer(w, wa).ravel() if w.size > 1 else wa
    logw = np.log(w)
    log_J = np.empty(P.shape[0])
    for i, p in enumerate(P):
        expo = U @ p - Zr + logw
        log_J[i] = d * np.log(2.0) + np.sum(np.log(p)) + special.logsumexp(expo)
    C3 = float(np.max(np.exp((log_J - Zstar) / P.sum(axis=1))))
    return VectorMomentEnvelope(P, C3, Zstar, log_J, lam_min)


def vector_mgf_to_moments(phi: GridFunctionND, bphi: float, r_points, *, mu_points: int = 161) -> np.ndarray:
    """``|xi|_r <= e^-1 2^{d/|r|} prod r_j^{r_j/|r|} exp(-Phi*(r)/|r|) ||xi||_B(phi)``
    with ``Phi(mu) = phi(e^mu)`` sampled on the positive part of ``phi``'s axes."""
    R = np.atleast_2d(np.asarray(r_points, dtype=float))
    d = phi.dim
    if R.shape[1] != d or np.any(R < 1):
        raise ValueError("r vectors must have d coordinates, each >= 1")
    mu_axes = []
    for a in phi.axes:
        top = a[a > 0].max()
        mu_axes.append(np.linspace(np.log(top) - 12.0, np.log(top), mu_points))
    mesh = np.meshgrid(*mu_axes, indexing="ij")
    pts = np.exp(np.stack([m.ravel() for m in mesh], axis=1))
    Phi = GridFunctionND(tuple(mu_axes), np.asarray(phi(pts)).reshape(mesh[0].shape))
    Pstar = conjugate_values_nd(Phi, R)
    if not np.all(np.isfinite(Pstar)):
        raise GridError("degenerate conjugate of Phi")
    s = R.sum(axis=1)
    log_b = -1.0 + d * np.log(2.0) / s + np.sum(R * np.log(R), axis=1) / s - Pstar / s + np.log(bphi)
    return np.exp(log_b)


def separable_sum(fns: list[Callable], pts) -> np.ndarray:
    """``sum_j f_j(x_j)`` for an ``(N, d)`` array; helper for separable fixtures."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return sum(np.asarray(f(pts[:, j])) for j, f in enumerate(fns))
