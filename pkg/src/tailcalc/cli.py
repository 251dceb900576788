"""``tailcalc`` command line.

Curves go out as CSV, structured results as JSON.  Exit codes: 0 success,
2 validation failure, 3 dominance violation in ``verify``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .gls import PsiError, PsiFunction, MomentOracle, gls_norm, make_psi_family, natural_psi
from .gridfn import (
    GridError,
    GridFunction,
    GridFunctionND,
    build_grid_function,
    build_grid_function_nd,
    fenchel_conjugate,
    symmetric_grid,
)
from .mgf_moment import DeltaFunction, check_delta_condition, mgf_to_moments, moments_to_mgf
from .multivar import (
    chernov_nd,
    min_coordinate_bound,
    natural_phi_nd,
    u_tail_empirical,
    vector_mgf_to_moments,
)
from .oracle import (
    FAMILIES,
    DistributionModel,
    IndependentVector,
    KramerViolation,
    empirical_mgf,
    empirical_tail,
)
from .tail_mgf import KramerError, YoungFunction, bphi_norm, chernov_tail, tail_to_mgf
from .tail_moment import (
    BoundsWarning,
    PowerLogTailParams,
    TailEnvelope,
    markov_p_grid,
    moments_to_tail,
    powerlog_tail_to_moments,
    tail_envelope,
    tail_to_moments,
)

EXIT_OK, EXIT_VALIDATION, EXIT_VIOLATION = 0, 2, 3
DEFAULT_POINTS = 400


class CliError(ValueError):
    pass


def grid_points(default: int = DEFAULT_POINTS) -> int:
    """Resolution, overridable by ``TAILCALC_GRID_POINTS``."""
    raw = os.environ.get("TAILCALC_GRID_POINTS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise CliError(f"TAILCALC_GRID_POINTS must be an integer, got {raw!r}") from exc
    if n < 3:
        raise CliError("TAILCALC_GRID_POINTS must be at least 3")
    return n


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def parse_fixture(text: str) -> DistributionModel:
    """``gaussian``, ``gaussian:sigma=2``, a JSON object, or a path to a JSON file."""
    if os.path.isfile(text):
        with open(text) as fh:
            return DistributionModel.from_json(fh.read())
    if text.lstrip().startswith("{"):
        return DistributionModel.from_json(text)
    name, _, rest = text.partition(":")
    if name not in FAMILIES:
        raise CliError(f"unknown fixture {name!r}; choose from {', '.join(FAMILIES)}")
    params = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        params[k.strip()] = float(v)
    return DistributionModel(name, params)


ND_FIXTURES = {
    "gaussian_iid": lambda: IndependentVector((DistributionModel.gaussian(1.0),) * 2),
    "gaussian_diag14": lambda: IndependentVector((DistributionModel.gaussian(1.0), DistributionModel.gaussian(2.0))),
    "laplace_pair": lambda: IndependentVector((DistributionModel.laplace(),) * 2),
}


def young_from_args(name: str, m: float, n: int, radius: float) -> YoungFunction:
    if name == "quadratic":
        return YoungFunction.from_callable(lambda l: l**2 / 2, radius, n)
    if name == "power":
        if m <= 1:
            raise CliError("power Young function needs m > 1")
        return YoungFunction.from_callable(lambda l: np.abs(l) ** m / m, radius, n)
    if name == "laplace":
        return YoungFunction.from_callable(lambda l: -np.log1p(-(l**2)), 1.0, n, support_radius=1.0, strict=False)
    if name == "abs":
        return YoungFunction.from_callable(np.abs, radius, n, strict=False)
    raise CliError(f"unknown Young function {name!r}")


def psi_from_args(a) -> PsiFunction:
    if a.psi == "psi_one":
        return make_psi_family("psi_one")
    if a.psi in ("psi_m_r", "psi_m_L_generic"):
        return make_psi_family(a.psi, m=a.m, r=a.r, L=a.L)
    if a.psi == "psi_exp_Cbeta":
        return make_psi_family(a.psi, C=a.C, beta=a.beta)
    if a.psi == "powerlog":
        return make_psi_family(a.psi, beta=a.beta, gamma=a.gamma, L=a.L)
    raise CliError(f"unknown psi family {a.psi!r}")


def write_out(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def curve_csv(header: str, cols) -> str:
    lines = [header]
    for row in zip(*cols):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# conversion commands
# ---------------------------------------------------------------------------


def cmd_conjugate(a) -> int:
    if a.input:
        with open(a.input) as fh:
            text = fh.read()
        f = GridFunction.from_json(text) if text.lstrip().startswith("{") else GridFunction.from_csv(text)
    else:
        grid = symmetric_grid(a.radius, grid_points(a.points))
        f = build_grid_function(a.fn, grid, m=a.m) if a.fn == "power" else build_grid_function(a.fn, grid)
    dual = np.linspace(a.dual_min, a.dual_max, grid_points(a.points))
    g = fenchel_conjugate(f, dual)
    write_out(g.to_json() if a.format == "json" else g.to_csv(), a.out)
    return EXIT_OK


def cmd_mom2tail(a) -> int:
    psi = psi_from_args(a)
    y = np.geomspace(a.ymin, a.ymax, grid_points(a.points))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundsWarning)
        env = moments_to_tail(psi, a.norm, y)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_out(curve_csv("y,zeta,bound", (y, env.zeta.values, env(y))), a.out)
    return EXIT_OK


def _zeta_from_args(a, grid):
    if a.zeta == "linear":
        return tail_envelope(lambda x: x, grid)
    if a.zeta == "quadratic":
        return tail_envelope(lambda x: x**2 / 2, grid)
    if a.zeta == "power":
        if a.m <= 1:
            raise CliError("power tail needs m > 1")
        return tail_envelope(lambda x: x**a.m / a.m, grid)
    if a.zeta == "csv":
        if not a.file:
            raise CliError("--zeta csv needs --file")
        with open(a.file) as fh:
            return TailEnvelope.from_csv(fh.read())
    raise CliError(f"unknown tail shape {a.zeta!r}")


def cmd_tail2mom(a) -> int:
    p = np.geomspace(a.pmin, a.pmax, grid_points(a.points // 4 or 3))
    if a.zeta == "powerlog":
        if a.beta is None:
            raise CliError("--zeta powerlog needs --beta")
        params = PowerLogTailParams(a.beta, a.gamma, a.L)
        p = p[p < a.beta * (1 - 1e-2)]
        if p.size == 0:
            raise CliError("no moment orders below beta")
        res = powerlog_tail_to_moments(params, p)
        write_out(curve_csv("p,psi", (p, res.moment_bound)), a.out)
        print(json.dumps({"C1": res.C1, "exponent": res.exponent}), file=sys.stderr)
        return EXIT_OK
    grid = np.linspace(0.0, a.xmax, grid_points(a.points * 10))
    env = tail_to_moments(_zeta_from_args(a, grid), p)
    write_out(curve_csv("p,psi", (p, env.moment_bound())), a.out)
    print(json.dumps({"C3": env.C3, "C1": env.C1}), file=sys.stderr)
    return EXIT_OK


def cmd_tail2mgf(a) -> int:
    grid = np.linspace(0.0, a.xmax, grid_points(a.points * 10))
    tail = _zeta_from_args(a, grid)
    lam = np.linspace(np.e, a.lam_max, grid_points(a.points // 10 or 3))
    env = tail_to_mgf(tail, lam)
    write_out(curve_csv("lambda,log_mgf_bound", (lam, env.log_bound(lam))), a.out)
    print(json.dumps({"C": env.C, "c_taylor": env.c_taylor}), file=sys.stderr)
    return EXIT_OK


def cmd_mgf2tail(a) -> int:
    kappa = young_from_args(a.kappa, a.m, grid_points(a.points * 10), a.radius)
    x = np.linspace(0.0, a.xmax, grid_points(a.points))
    env = chernov_tail(kappa, x, two_sided=a.two_sided)
    for n in env.notes:
        print(f"note: {n}", file=sys.stderr)
    write_out(curve_csv("x,zeta,bound", (x, env.zeta.values, env(x))), a.out)
    return EXIT_OK


def cmd_mgf2mom(a) -> int:
    phi = young_from_args(a.phi, a.m, grid_points(a.points * 10), a.radius)
    p = np.geomspace(1.0, a.pmax, grid_points(a.points // 4 or 3))
    psi = mgf_to_moments(phi, a.bphi, p)
    write_out(curve_csv("p,psi", (p, psi(p))), a.out)
    return EXIT_OK


DELTAS = {
    "half_plogp": lambda p: 0.5 * p * np.log(p),
    "plogp": lambda p: p * np.log(p),
    "zero": lambda p: 0.0 * p,
}


def _delta_from_args(a) -> DeltaFunction:
    if a.delta not in DELTAS:
        raise CliError(f"unknown Delta {a.delta!r}; choose from {', '.join(DELTAS)}")
    return DeltaFunction.from_callable(DELTAS[a.delta])


def cmd_mom2mgf(a) -> int:
    lam = np.geomspace(np.e, a.lam_max, grid_points(a.points // 10 or 3))
    env = moments_to_mgf(_delta_from_args(a), a.norm, lam)
    g = env.phi.grid
    keep = g >= 0
    write_out(curve_csv("lambda,phi", (g[keep], env.phi.phi.values[keep])), a.out)
    print(json.dumps({"C": env.C, "C4": env.C4, "convex": env.convex}), file=sys.stderr)
    return EXIT_OK


def cmd_check_delta(a) -> int:
    lam = np.geomspace(np.e, a.lam_max, grid_points(a.points // 10 or 3))
    chk = check_delta_condition(_delta_from_args(a), lam)
    write_out(json.dumps({"holds": chk.holds, "C4": None if not chk.holds else chk.C4}), a.out)
    if not chk.holds:
        raise CliError("condition (Δ) fails on the probe grid")
    return EXIT_OK


def cmd_bphi_norm(a) -> int:
    model = parse_fixture(a.fixture)
    phi = young_from_args(a.phi, a.m, grid_points(a.points * 10), a.radius)
    lam_max = min(a.lam_max, model.mgf_radius * (1 - 1e-2)) if np.isfinite(model.mgf_radius) else a.lam_max
    lam = np.linspace(lam_max / grid_points(a.points // 4 or 3), lam_max, grid_points(a.points // 4 or 3))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundsWarning)
        est = bphi_norm(model, phi, lam)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_out(json.dumps({"tau": est.tau, "warnings": list(est.warnings)}), a.out)
    return EXIT_OK


def cmd_nd(a) -> int:
    if a.dim != 2:
        raise CliError("the built-in vector fixtures are two-dimensional")
    if a.fixture not in ND_FIXTURES:
        raise CliError(f"unknown vector fixture {a.fixture!r}; choose from {', '.join(ND_FIXTURES)}")
    vec = ND_FIXTURES[a.fixture]()
    radius = 0.95 if a.fixture == "laplace_pair" else a.radius
    ax = symmetric_grid(radius, grid_points(81))
    phi = natural_phi_nd(vec, (ax, ax))
    x = np.array(a.x if a.x else [1.0, 1.0], dtype=float)
    if x.size != a.dim:
        raise CliError("--x needs one value per dimension")
    if a.op == "natural-phi":
        write_out(phi.to_json(), a.out)
    elif a.op == "chernov":
        out = {"x": x.tolist(), "bound": chernov_nd(phi, x)}
        if a.samples:
            if a.seed is None:
                raise CliError("--samples needs an explicit --seed")
            est, hw = u_tail_empirical(vec.sample(a.samples, a.seed), x, ci=True)
            out.update(empirical=est, ci=hw, dominates=bool(out["bound"] >= est - hw))
        write_out(json.dumps(out), a.out)
    elif a.op == "min-coord":
        write_out(json.dumps({"y": float(x[0]), "bound": min_coordinate_bound(phi, 1.0, float(x[0]))}), a.out)
    elif a.op == "mgf2mom":
        r = np.array(a.x if a.x else [2.0, 2.0], dtype=float)
        write_out(json.dumps({"r": r.tolist(), "bound": float(vector_mgf_to_moments(phi, 1.0, r)[0])}), a.out)
    else:
        raise CliError(f"unknown nd op {a.op!r}")
    return EXIT_OK


def cmd_fixtures(a) -> int:
    if a.fixture is None:
        for fam in FAMILIES:
            print(fam)
        for name in ND_FIXTURES:
            print(name)
        return EXIT_OK
    if a.seed is None:
        raise CliError("sampling needs an explicit --seed")
    if a.fixture in ND_FIXTURES:
        s = ND_FIXTURES[a.fixture]().sample(a.n, a.seed)
        header = ",".join(f"x{j + 1}" for j in range(s.shape[1]))
        write_out(curve_csv(header, s.T), a.out)
        return EXIT_OK
    model = parse_fixture(a.fixture)
    s = model.sample(a.n, a.seed)
    write_out(curve_csv("x", (s,)), a.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    conversion: str
    fixture: str
    probes: list
    bound: list
    oracle: list
    ci: list
    verdict: list
    sharpness: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def dominates(self) -> bool:
        return all(v == "dominates" for v in self.verdict)

    def to_json(self) -> str:
        d = asdict(self)
        d["dominates"] = self.dominates
        return json.dumps(d, indent=2)


def build_report(conversion, fixture, probes, bound, est, hw, notes=()) -> VerificationReport:
    bound, est, hw = (np.asarray(v, dtype=float) for v in (bound, est, hw))
    verdict = ["dominates" if b >= e - h else "violates" for b, e, h in zip(bound, est, hw)]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(est > 0, bound / est, np.inf)
    fin = ratio[np.isfinite(ratio)]
    sharp = {"min": float(fin.min()), "max": float(fin.max()), "ratios": [float(r) for r in ratio]} if fin.size else {}
    return VerificationReport(conversion, fixture, [float(p) for p in probes], bound.tolist(), est.tolist(), hw.tolist(), verdict, sharp, list(notes))


def _natural_kappa(model: DistributionModel, n: int) -> YoungFunction:
    r = model.mgf_radius
    radius = 12.0 if not np.isfinite(r) else r * (1 - 1e-3)
    grid = symmetric_grid(radius, n)
    vals = np.array([np.log(max(model.mgf(l), model.mgf(-l))) for l in grid])
    return YoungFunction(GridFunction(grid, vals), r, strict=False)


def verify_chernov(model: DistributionModel, probes, n, seed) -> VerificationReport:
    if model.family == "log_weibull" or model.mgf_radius == 0:
        raise KramerViolation(f"{model.name} does not satisfy Kramer's condition: its MGF does not exist")
    kappa = _natural_kappa(model, grid_points(2001))
    env = chernov_tail(kappa, probes)
    est, hw = empirical_tail(model.sample(n, seed), probes, one_sided=True)
    return build_report("chernov", model.name, probes, env(probes), est, hw, env.notes)


def verify_mom2tail(model: DistributionModel, probes, n, seed) -> VerificationReport:
    oracle = MomentOracle.from_model(model)
    psi = natural_psi(oracle, model.moment_limit)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundsWarning)
        env = moments_to_tail(psi, 1.0, probes)
    est, hw = empirical_tail(model.sample(n, seed), probes)
    notes = list(env.notes)
    rep = build_report("mom2tail", model.name, probes, env(probes), est, hw, notes)
    exact = np.asarray(model.tail(probes), dtype=float)
    rep.sharpness["exact_ratios"] = [float(b / t) if t > 0 else None for b, t in zip(rep.bound, exact)]
    return rep


def verify_mgf(model: DistributionModel, probes, n, seed) -> VerificationReport:
    if model.family == "log_weibull":
        raise KramerViolation("log_weibull does not satisfy Kramer's condition: its MGF does not exist")
    grid = np.linspace(0.0, 60.0, 60001)
    with np.errstate(divide="ignore"):
        tail = tail_envelope(lambda y: -np.log(np.asarray(model.tail(y), dtype=float)), grid)
    env = tail_to_mgf(tail, probes, moments=model)
    s = model.sample(n, seed)
    pairs = [empirical_mgf(s, float(l), model=model) for l in probes]
    est = [p[0] for p in pairs]
    hw = [p[1] for p in pairs]
    return build_report("mgf", model.name, probes, env(probes), est, hw, env.notes)


VERIFIERS = {"chernov": verify_chernov, "mom2tail": verify_mom2tail, "mgf": verify_mgf}


def cmd_verify(a) -> int:
    if a.seed is None:
        raise CliError("verify needs an explicit --seed")
    model = parse_fixture(a.fixture)
    probes = np.array(a.probes, dtype=float) if a.probes else np.linspace(a.pmin, a.pmax, a.nprobes)
    rep = VERIFIERS[a.conversion](model, probes, a.n, a.seed)
    write_out(rep.to_json(), a.out)
    return EXIT_OK if rep.dominates else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------


def _add_psi_args(p):
    p.add_argument("--psi", default="psi_one", choices=["psi_one", "psi_m_r", "psi_m_L_generic", "psi_exp_Cbeta", "powerlog"])
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tailcalc", description="Convert between tail, moment and MGF envelopes.")
    ap.add_argument("--points", type=int, default=DEFAULT_POINTS, help="base grid resolution")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--points", type=int, default=DEFAULT_POINTS, help="base grid resolution")
        p.set_defaults(func=fn)
        return p

    p = add("conjugate", cmd_conjugate, "Legendre-Fenchel conjugate of a grid function")
    p.add_argument("--input", help="GridFunction JSON or CSV")
    p.add_argument("--fn", default="quadratic")
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--dual-min", type=float, default=-5.0)
    p.add_argument("--dual-max", type=float, default=5.0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = add("mom2tail", cmd_mom2tail, "tail envelope from a moment envelope")
    _add_psi_args(p)
    p.add_argument("--norm", type=float, default=1.0)
    p.add_argument("--ymin", type=float, default=3.0)
    p.add_argument("--ymax", type=float, default=30.0)

    p = add("tail2mom", cmd_tail2mom, "moment envelope from a tail envelope")
    p.add_argument("--zeta", default="quadratic", choices=["linear", "quadratic", "power", "powerlog", "csv"])
    p.add_argument("--file")
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--xmax", type=float, default=60.0)
    p.add_argument("--pmin", type=float, default=1.0)
    p.add_argument("--pmax", type=float, default=20.0)

    p = add("tail2mgf", cmd_tail2mgf, "MGF envelope from a tail envelope")
    p.add_argument("--zeta", default="quadratic", choices=["linear", "quadratic", "power", "csv"])
    p.add_argument("--file")
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--xmax", type=float, default=60.0)
    p.add_argument("--lam-max", type=float, default=10.0)

    p = add("mgf2tail", cmd_mgf2tail, "Chernov tail bound from an MGF envelope")
    p.add_argument("--kappa", default="quadratic", choices=["quadratic", "power", "laplace", "abs"])
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--radius", type=float, default=20.0)
    p.add_argument("--xmax", type=float, default=5.0)
    p.add_argument("--two-sided", action="store_true")

    p = add("mgf2mom", cmd_mgf2mom, "moment envelope from an MGF envelope")
    p.add_argument("--phi", default="quadratic", choices=["quadratic", "power"])
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--radius", type=float, default=60.0)
    p.add_argument("--bphi", type=float, default=1.0)
    p.add_argument("--pmax", type=float, default=100.0)

    for name, fn, help_ in (
        ("mom2mgf", cmd_mom2mgf, "MGF envelope from a moment envelope"),
        ("check-delta", cmd_check_delta, "test the moment-to-MGF bridge condition"),
    ):
        p = add(name, fn, help_)
        p.add_argument("--delta", default="half_plogp", help=f"one of {', '.join(DELTAS)}")
        p.add_argument("--norm", type=float, default=1.0)
        p.add_argument("--lam-max", type=float, default=100.0)

    p = add("bphi-norm", cmd_bphi_norm, "B(phi) norm of a fixture")
    p.add_argument("--fixture", default="gaussian")
    p.add_argument("--phi", default="quadratic", choices=["quadratic", "power"])
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--radius", type=float, default=60.0)
    p.add_argument("--lam-max", type=float, default=5.0)

    p = add("nd", cmd_nd, "two-dimensional conversions on vector fixtures")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--fixture", default="gaussian_iid")
    p.add_argument("--op", default="chernov", choices=["natural-phi", "chernov", "min-coord", "mgf2mom"])
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--radius", type=float, default=6.0)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)

    p = add("fixtures", cmd_fixtures, "list fixtures or emit samples")
    p.add_argument("--fixture", default=None)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)

    p = add("verify", cmd_verify, "Monte-Carlo dominance check of a conversion")
    p.add_argument("--conversion", required=True, choices=sorted(VERIFIERS))
    p.add_argument("--fixture", required=True)
    p.add_argument("--probes", type=float, nargs="+")
    p.add_argument("--pmin", type=float, default=0.5)
    p.add_argument("--pmax", type=float, default=4.0)
    p.add_argument("--nprobes", type=int, default=8)
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=None)
    return ap


VALIDATION_ERRORS = (CliError, ValueError, PsiError, GridError, KramerViolation, KramerError, ArithmeticError)


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return a.func(a)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
