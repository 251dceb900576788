"""Grid-sampled extended-real functions and Legendre-Fenchel conjugation.

A :class:`GridFunction` is a finite table ``(x_i, f_i)`` with ``f_i`` real or
``+inf``.  Off-grid queries interpolate linearly between finite neighbours;
outside the grid the ``extension`` rule applies.  All conjugates are exact
suprema over the finite grid points, i.e. the conjugate of the piecewise
linear interpolant restricted to the grid hull.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

EXTENSIONS = ("clamp", "slope", "inf")

# Convexity checks on second differences use this relative slack.
_CONVEX_RTOL = 1e-10


class GridError(ValueError):
    """Invalid grid, value table, or query outside the covered domain."""


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise GridError("grid must be one-dimensional with at least 2 points")
    if not np.all(np.isfinite(g)):
        raise GridError("grid abscissae must be finite")
    if np.any(np.diff(g) <= 0):
        raise GridError("grid must be strictly increasing")
    return g


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real-valued function sampled on a strictly increasing 1D grid.

    ``values`` may contain ``+inf`` (outside the effective domain) but never
    ``-inf`` or NaN.
    """

    grid: np.ndarray
    values: np.ndarray
    extension: str = "slope"

    def __post_init__(self):
        g = _as_grid(self.grid)
        v = np.asarray(self.values, dtype=float).copy()
        if v.shape != g.shape:
            raise GridError(f"values shape {v.shape} does not match grid {g.shape}")
        if np.any(np.isnan(v)) or np.any(v == -np.inf):
            raise GridError("values must be real or +inf (no NaN, no -inf)")
        if not np.any(np.isfinite(v)):
            raise GridError("at least one value must be finite")
        if self.extension not in EXTENSIONS:
            raise GridError(f"unknown extension {self.extension!r}")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    # -- basic properties -------------------------------------------------

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def domain(self) -> tuple[float, float]:
        """Smallest and largest abscissa carrying a finite value."""
        xs = self.grid[self.finite_mask]
        return float(xs[0]), float(xs[-1])

    def slopes(self) -> np.ndarray:
        """Slopes of consecutive segments; NaN where an endpoint is infinite."""
        with np.errstate(invalid="ignore"):
            s = np.diff(self.values) / np.diff(self.grid)
        s[~(self.finite_mask[:-1] & self.finite_mask[1:])] = np.nan
        return s

    def is_convex(self, rtol: float = _CONVEX_RTOL) -> bool:
        """Discrete convexity on the finite part: nondecreasing slopes and a
        contiguous finite domain."""
        idx = np.flatnonzero(self.finite_mask)
        if idx[-1] - idx[0] + 1 != idx.size:
            return False
        if idx.size < 3:
            return True
        x = self.grid[idx]
        v = self.values[idx]
        s = np.diff(v) / np.diff(x)
        scale = np.maximum(1.0, np.abs(s[:-1]) + np.abs(s[1:]))
        return bool(np.all(np.diff(s) >= -rtol * scale))

    # -- evaluation -------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x, dtype=float)
        flat = x.ravel()
        res = out.ravel()
        g, v = self.grid, self.values
        lo_x, hi_x = g[0], g[-1]
        inside = (flat >= lo_x) & (flat <= hi_x)
        if np.any(inside):
            xi = flat[inside]
            j = np.clip(np.searchsorted(g, xi, side="right") - 1, 0, g.size - 2)
            x0, x1 = g[j], g[j + 1]
            v0, v1 = v[j], v[j + 1]
            t = (xi - x0) / (x1 - x0)
            both = np.isfinite(v0) & np.isfinite(v1)
            r = np.full(xi.shape, np.inf)
            r[both] = v0[both] + t[both] * (v1[both] - v0[both])
            # exact hits on a grid node keep that node's value even if the
            # neighbour is infinite
            at0 = t == 0.0
            r[at0] = v0[at0]
            at1 = t == 1.0
            r[at1] = v1[at1]
            res[inside] = r
        for side in ("lo", "hi"):
            m = flat < lo_x if side == "lo" else flat > hi_x
            if not np.any(m):
                continue
            res[m] = self._extend(flat[m], side)
        return out if out.ndim else float(out)

    def _extend(self, xs: np.ndarray, side: str) -> np.ndarray:
        g, v = self.grid, self.values
        end = 0 if side == "lo" else -1
        if self.extension == "inf":
            return np.full(xs.shape, np.inf)
        if not np.isfinite(v[end]):
            return np.full(xs.shape, np.inf)
        if self.extension == "clamp":
            return np.full(xs.shape, v[end])
        nb = 1 if side == "lo" else -2
        if not np.isfinite(v[nb]):
            return np.full(xs.shape, v[end])
        slope = (v[end] - v[nb]) / (g[end] - g[nb])
        return v[end] + slope * (xs - g[end])

    def with_extension(self, extension: str) -> "GridFunction":
        return GridFunction(self.grid, self.values, extension)

    def restrict(self, lo: float = -np.inf, hi: float = np.inf) -> "GridFunction":
        """Sub-table on ``lo <= x <= hi``."""
        m = (self.grid >= lo) & (self.grid <= hi)
        return GridFunction(self.grid[m], self.values[m], self.extension)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "grid": [float(x) for x in self.grid],
                "values": [_enc(v) for v in self.values],
                "extension": self.extension,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        d = json.loads(text)
        return cls(
            np.array(d["grid"], dtype=float),
            np.array([_dec(v) for v in d["values"]], dtype=float),
            d.get("extension", "slope"),
        )

    def to_csv(self, header: str = "x,value") -> str:
        buf = io.StringIO()
        buf.write(header + "\n")
        for x, v in zip(self.grid, self.values):
            buf.write(f"{float(x)!r},{_enc(v)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, extension: str = "slope") -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        body = [r for r in rows[1:] if r]
        xs = np.array([float(r[0]) for r in body])
        vs = np.array([_dec(r[1]) for r in body])
        return cls(xs, vs, extension)


def _enc(v: float):
    v = float(v)
    return "inf" if v == np.inf else v


def _dec(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity"):
            return np.inf
        return float(v)
    return float(v)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

_CLOSED_FORMS: dict[str, Callable[..., Callable[[np.ndarray], np.ndarray]]] = {
    "quadratic": lambda c=1.0: (lambda x: 0.5 * c * x**2),
    "abs": lambda c=1.0: (lambda x: c * np.abs(x)),
    "power": lambda m=2.0: (lambda x: np.abs(x) ** m / m),
    "neg_quadratic": lambda: (lambda x: -(x**2)),
    "double_well": lambda: (lambda x: (x**2 - 1.0) ** 2),
    "laplace_logmgf": lambda: (
        lambda x: np.where(np.abs(x) < 1, -np.log1p(-np.minimum(x**2, 1 - 1e-300)), np.inf)
    ),
    "zero": lambda: (lambda x: np.zeros_like(x)),
}


def build_grid_function(
    spec,
    grid: Sequence[float] | None = None,
    *,
    extension: str = "slope",
    support: tuple[float, float] | None = None,
    **params,
) -> GridFunction:
    """Build a :class:`GridFunction`.

    ``spec`` is either a ``(grid, values)`` pair, a callable, or the name of
    a closed form (``"quadratic"``, ``"abs"``, ``"power"``, ...) evaluated on
    ``grid``.  ``support=(a, b)`` sets values outside ``[a, b]`` to ``+inf``.

    >>> f = build_grid_function("quadratic", np.linspace(-10, 10, 2001))
    >>> float(f(0.0)), float(f(10.0))
    (0.0, 50.0)
    """
    if isinstance(spec, tuple) and len(spec) == 2:
        g, vals = spec
        g = _as_grid(g)
        vals = np.asarray(vals, dtype=float)
    else:
        if grid is None:
            raise GridError("a grid is required for closed-form specs")
        g = _as_grid(grid)
        if callable(spec):
            fn = spec
        elif spec in _CLOSED_FORMS:
            fn = _CLOSED_FORMS[spec](**params)
        else:
            raise GridError(f"unknown closed form {spec!r}")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.asarray(fn(g), dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    if support is not None:
        a, b = support
        vals = np.where((g < a) | (g > b), np.inf, vals)
    return GridFunction(g, vals, extension)


def symmetric_grid(radius: float, n: int, *, inner: float | None = None) -> np.ndarray:
    """Odd-sized grid symmetric about 0.

    With ``inner`` set, points are geometric between ``inner`` and
    ``radius`` on each side (plus 0); otherwise uniform.
    """
    if inner is None:
        return np.linspace(-radius, radius, 2 * (n // 2) + 1)
    half = np.geomspace(inner, radius, n // 2)
    return np.concatenate([-half[::-1], [0.0], half])


# ---------------------------------------------------------------------------
# tolerances
# ---------------------------------------------------------------------------


def grid_tolerance(f: GridFunction) -> float:
    """``10 * h * Lip`` with ``h`` the largest spacing and ``Lip`` the largest
    finite segment slope (at least 1)."""
    s = f.slopes()
    lip = np.nanmax(np.abs(s)) if np.any(np.isfinite(s)) else 1.0
    h = float(np.max(np.diff(f.grid)))
    return 10.0 * h * max(float(lip), 1.0)


def local_grid_tolerance(f: GridFunction) -> np.ndarray:
    """Per-node ``10 * h_i * Lip_i`` using the two adjacent segments."""
    h = np.diff(f.grid)
    s = np.abs(f.slopes())
    s = np.where(np.isfinite(s), s, 0.0)
    hl = np.concatenate([[h[0]], h])
    hr = np.concatenate([h, [h[-1]]])
    sl = np.concatenate([[s[0]], s])
    sr = np.concatenate([s, [s[-1]]])
    return 10.0 * np.maximum(hl, hr) * np.maximum(np.maximum(sl, sr), 1.0)


# ---------------------------------------------------------------------------
# 1D conjugation
# ---------------------------------------------------------------------------


def _lower_hull(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points sorted by x (monotone chain)."""
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> i
            cross = (x[b] - x[a]) * (v[i] - v[a]) - (v[b] - v[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def _conjugate_merge(x: np.ndarray, v: np.ndarray, y: np.ndarray):
    """Linear-time conjugate for convex data: walk sorted duals against the
    nondecreasing slope sequence.  ``y`` must be sorted."""
    s = np.diff(v) / np.diff(x)
    # argmax index for dual y: first node whose right slope exceeds y
    # (ties resolved toward the smallest abscissa)
    idx = np.empty(y.size, dtype=int)
    k = 0
    n = x.size
    for j, yj in enumerate(y):
        while k < n - 1 and s[k] < yj:
            k += 1
        idx[j] = k
    vals = x[idx] * y - v[idx]
    return vals, idx


def _conjugate_brute(x: np.ndarray, v: np.ndarray, y: np.ndarray, chunk: int = 2048):
    vals = np.empty(y.size)
    idx = np.empty(y.size, dtype=int)
    for lo in range(0, y.size, chunk):
        yy = y[lo : lo + chunk]
        obj = yy[:, None] * x[None, :] - v[None, :]
        k = np.argmax(obj, axis=1)  # first maximum = smallest abscissa
        idx[lo : lo + chunk] = k
        vals[lo : lo + chunk] = obj[np.arange(yy.size), k]
    return vals, idx


def conjugate_values(f: GridFunction, y, *, return_argmax: bool = False):
    """``sup_i (x_i * y - f(x_i))`` over finite grid nodes, for arbitrary ``y``.

    Uses the linear-time merge when ``f`` is convex on its grid and a
    vectorised brute force otherwise.  Both give the exact grid supremum.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = f.finite_mask
    if not np.any(m):
        raise GridError("empty finite domain")
    x = f.grid[m]
    v = f.values[m]
    order = np.argsort(y, kind="stable")
    ys = y[order]
    if f.is_convex() and x.size >= 2:
        vals, idx = _conjugate_merge(x, v, ys)
        # merge picks the hull argmax; re-evaluate ties on the left neighbour
        left = np.maximum(idx - 1, 0)
        tie = (x[left] * ys - v[left]) >= vals
        idx = np.where(tie, left, idx)
        vals = x[idx] * ys - v[idx]
    else:
        vals, idx = _conjugate_brute(x, v, ys)
    out = np.empty_like(vals)
    out[order] = vals
    arg = np.empty_like(idx)
    arg[order] = idx
    if return_argmax:
        return out, x[arg]
    return out


def fenchel_conjugate(
    f: GridFunction, dual_grid, *, extension: str = "slope"
) -> GridFunction:
    """Young-Fenchel conjugate of ``f`` sampled on ``dual_grid``.

    >>> lam = np.linspace(-10, 10, 2001)
    >>> fs = fenchel_conjugate(build_grid_function("quadratic", lam), np.linspace(-5, 5, 11))
    >>> bool(np.allclose(fs.values, 0.5 * fs.grid**2))
    True
    """
    dg = _as_grid(dual_grid)
    return GridFunction(dg, conjugate_values(f, dg), extension)


def biconjugate(f: GridFunction) -> GridFunction:
    """``f**`` on ``f``'s own grid: the closed convex minorant of ``f``.

    The dual grid is the set of hull slopes, which makes the double
    conjugation exact at grid nodes; nodes outside the finite domain stay
    ``+inf``.
    """
    m = f.finite_mask
    x = f.grid[m]
    v = f.values[m]
    if x.size == 1:
        vals = np.where(f.grid == x[0], v[0], np.inf)
        return GridFunction(f.grid, vals, f.extension)
    hull = _lower_hull(x, v)
    hs = np.diff(v[hull]) / np.diff(x[hull])
    dual = np.unique(hs)
    if dual.size == 1:
        dual = np.array([dual[0] - 1.0, dual[0], dual[0] + 1.0])
    fstar = GridFunction(dual, conjugate_values(f, dual), "slope")
    lo, hi = x[0], x[-1]
    vals = np.full(f.grid.shape, np.inf)
    inside = (f.grid >= lo) & (f.grid <= hi)
    vals[inside] = conjugate_values(fstar, f.grid[inside])
    return GridFunction(f.grid, vals, f.extension)


def radial_conjugate(g1: GridFunction, d: int, dual_grid=None) -> GridFunction:
    """Profile of the conjugate of ``x -> g1(|x|)`` in dimension ``d``.

    The conjugate of a radial function is radial with profile
    ``s -> sup_{r >= 0} (r s - g1(r))``.
    """
    if d < 1:
        raise GridError("dimension must be positive")
    if g1.grid[0] < 0:
        raise GridError("radial profile must live on nonnegative abscissae")
    if dual_grid is None:
        s = g1.slopes()
        smax = float(np.nanmax(s)) if np.any(np.isfinite(s)) else 1.0
        dual_grid = np.linspace(0.0, max(smax, 1e-12), g1.grid.size)
    dg = _as_grid(dual_grid)
    if dg[0] < 0:
        raise GridError("radial dual grid must be nonnegative")
    return fenchel_conjugate(g1, dg)


def young_gap(f: GridFunction, lam: float, u: float, gamma: float) -> float:
    """``f(gamma*u) + f*(lam/gamma) - lam*u``; nonnegative for convex ``f``."""
    if gamma <= 0:
        raise GridError("gamma must be positive")
    arg = gamma * u
    if f.extension == "inf" and not (f.grid[0] <= arg <= f.grid[-1]):
        raise GridError(f"gamma*u={arg} outside grid coverage under +inf extension")
    val = float(f(arg))
    conj = float(conjugate_values(f, [lam / gamma])[0])
    return val + conj - lam * u


# ---------------------------------------------------------------------------
# n-dimensional functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridFunctionND:
    """Function sampled on a dense tensor grid (``d <= 3``)."""

    axes: tuple
    values: np.ndarray
    hessian_at_zero: np.ndarray | None = None
    extension: str = "slope"
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        axes = tuple(_as_grid(a) for a in self.axes)
        v = np.asarray(self.values, dtype=float).copy()
        if v.shape != tuple(a.size for a in axes):
            raise GridError(f"values shape {v.shape} does not match axes")
        if np.any(np.isnan(v)) or np.any(v == -np.inf):
            raise GridError("values must be real or +inf")
        if not np.any(np.isfinite(v)):
            raise GridError("at least one value must be finite")
        if self.extension not in ("slope", "clamp", "inf"):
            raise GridError(f"unknown extension {self.extension!r}")
        v.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def points(self) -> np.ndarray:
        """All grid nodes as an ``(N, d)`` array in row-major order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if self._interp is None:
            finite = np.isfinite(self.values)
            filled = np.where(finite, self.values, 0.0)
            fill = None if self.extension == "slope" else np.nan
            vi = RegularGridInterpolator(self.axes, filled, bounds_error=False, fill_value=fill)
            mi = RegularGridInterpolator(
                self.axes, finite.astype(float), bounds_error=False, fill_value=fill
            )
            object.__setattr__(self, "_interp", (vi, mi))
        vi, mi = self._interp
        q = pts
        if self.extension == "clamp":
            q = np.column_stack(
                [np.clip(pts[:, j], a[0], a[-1]) for j, a in enumerate(self.axes)]
            )
        val = vi(q)
        ok = mi(q)
        out = np.where(ok >= 1.0 - 1e-12, val, np.inf)
        out = np.where(np.isnan(out), np.inf, out)
        return float(out[0]) if single else out

    def is_even(self, tol: float = 1e-9) -> bool:
        """Symmetry ``f(-x) = f(x)`` on grids symmetric about the origin."""
        for a in self.axes:
            if not np.allclose(a, -a[::-1]):
                return False
        flipped = self.values[tuple(slice(None, None, -1) for _ in self.axes)]
        both = np.isfinite(self.values) & np.isfinite(flipped)
        if np.any(np.isfinite(self.values) != np.isfinite(flipped)):
            return False
        return bool(np.all(np.abs(self.values[both] - flipped[both]) <= tol * (1 + np.abs(self.values[both]))))

    def to_json(self) -> str:
        d = {
            "axes": [[float(x) for x in a] for a in self.axes],
            "values": [_enc(v) for v in self.values.ravel()],
            "extension": self.extension,
        }
        if self.hessian_at_zero is not None:
            d["hessian_at_zero"] = np.asarray(self.hessian_at_zero).tolist()
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "GridFunctionND":
        d = json.loads(text)
        axes = tuple(np.array(a, dtype=float) for a in d["axes"])
        vals = np.array([_dec(v) for v in d["values"]], dtype=float).reshape(
            tuple(a.size for a in axes)
        )
        h = d.get("hessian_at_zero")
        return cls(axes, vals, None if h is None else np.array(h), d.get("extension", "slope"))


def build_grid_function_nd(fn: Callable[[np.ndarray], np.ndarray], axes, **kw) -> GridFunctionND:
    """Sample ``fn`` (taking an ``(N, d)`` array) on the tensor grid ``axes``."""
    axes = tuple(_as_grid(a) for a in axes)
    if len(axes) > 3:
        raise GridError("dimension above 3 is not supported")
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.asarray(fn(pts), dtype=float).reshape(mesh[0].shape)
    vals = np.where(np.isnan(vals), np.inf, vals)
    return GridFunctionND(axes, vals, **kw)


def conjugate_values_nd(f: GridFunctionND, ys) -> np.ndarray:
    """``sup_x ((x, y) - f(x))`` over finite nodes, for an ``(M, d)`` array of
    dual points.  Vectorised brute force."""
    if f.dim > 3:
        raise GridError("dimension above 3 is not supported")
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    m = np.isfinite(f.values).ravel()
    if not np.any(m):
        raise GridError("empty finite domain")
    xs = f.points()[m]
    v = f.values.ravel()[m]
    out = np.empty(ys.shape[0])
    chunk = max(1, int(4e6 // max(xs.shape[0], 1)))
    for lo in range(0, ys.shape[0], chunk):
        yy = ys[lo : lo + chunk]
        out[lo : lo + chunk] = np.max(yy @ xs.T - v[None, :], axis=1)
    return out


def conjugate_nd(f: GridFunctionND, dual_axes, *, check_even: bool = True) -> GridFunctionND:
    """Conjugate of an nD grid function on the tensor grid ``dual_axes``.

    Computed by nested one-dimensional suprema, which is algebraically the
    same grid supremum as the full brute force
    ``sup_x ((x, y) - f(x))`` but costs ``O(n^{d+1})`` instead of
    ``O(n^{2d})``.
    """
    d = f.dim
    if d > 3:
        raise GridError("dimension above 3 is not supported")
    dual_axes = tuple(_as_grid(a) for a in dual_axes)
    if len(dual_axes) != d:
        raise GridError("dual axes dimension mismatch")
    # h holds -(partial conjugate); transform one axis at a time.
    h = np.array(f.values, dtype=float)
    for ax in range(d):
        x = f.axes[ax]
        y = dual_axes[ax]
        h = np.moveaxis(h, ax, -1)
        shape = h.shape
        flat = h.reshape(-1, shape[-1])
        res = np.empty((flat.shape[0], y.size))
        for i, row in enumerate(flat):
            fin = np.isfinite(row)
            if not np.any(fin):
                res[i] = -np.inf
                continue
            xr, vr = x[fin], row[fin]
            res[i] = np.max(y[:, None] * xr[None, :] - vr[None, :], axis=1)
        # g(..., y) = sup_x (x y - h(..., x)); next axis needs -g as "function"
        h = -res.reshape(shape[:-1] + (y.size,))
        h = np.moveaxis(h, -1, ax)
    out = -h
    if not np.any(np.isfinite(out)):
        raise GridError("empty finite domain")
    out = np.where(np.isneginf(out), np.inf, out)
    res_fn = GridFunctionND(dual_axes, out)
    # an even input on a centrally symmetric box must give an even conjugate
    if check_even and f.is_even() and all(np.allclose(a, -a[::-1]) for a in dual_axes):
        scale = 1.0 + float(np.max(np.abs(out[np.isfinite(out)])))
        if not res_fn.is_even(1e-9 * scale):
            raise GridError("conjugate of an even function came out non-even")
    return res_fn


def radial_to_nd(profile: GridFunction, axes) -> GridFunctionND:
    """Compose a radial profile with the Euclidean norm on a tensor grid."""
    return build_grid_function_nd(lambda p: profile(np.linalg.norm(p, axis=1)), axes)


def finite_difference_hessian(f: Callable[[np.ndarray], float], x0, h: float = 1e-3) -> np.ndarray:
    """Central-difference Hessian of a scalar function of a vector."""
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    H = np.empty((d, d))
    e = np.eye(d) * h
    f0 = f(x0)
    for i in range(d):
        for j in range(i, d):
            if i == j:
                H[i, i] = (f(x0 + e[i]) - 2 * f0 + f(x0 - e[i])) / h**2
            else:
                H[i, j] = H[j, i] = (
                    f(x0 + e[i] + e[j]) - f(x0 + e[i] - e[j]) - f(x0 - e[i] + e[j]) + f(x0 - e[i] - e[j])
                ) / (4 * h**2)
    return H
