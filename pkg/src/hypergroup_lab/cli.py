"""Command-line interface.

Exit codes: 0 when the checked property holds, 2 when it fails, 1 on bad
input (unreadable files, malformed JSON, invalid parameters).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import finite_hypergroup as fh
from . import group_characters as gc
from . import jacobi_gasper as jg
from . import sturm_liouville_wave as sl
from .config import RunConfig
from .numerics import recurrence_table
from .serialization import csv_text, dumps, tensor_csv, write_atomic


class InputError(Exception):
    pass


@dataclass
class Outcome:
    payload: dict
    passed: bool = True
    table: tuple | None = None  # (header, rows) for csv output
    csv_override: str | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------

def _read(path: str) -> str:
    try:
        with open(path) as fh_:
            return fh_.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _space(args) -> fh.FiniteBasisSpace:
    if args.input:
        try:
            return fh.FiniteBasisSpace.from_dict(_load_json(args.input))
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"invalid space: {exc}") from exc
    if args.hypercube is not None:
        return fh.hypercube(args.hypercube)
    if args.two_point is not None:
        return fh.two_point(args.two_point)
    raise InputError("give --input, --hypercube N or --two-point THETA")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _group(args) -> gc.FiniteGroup:
    if args.cyclic is not None:
        return gc.cyclic_group(args.cyclic)
    if args.dihedral is not None:
        return gc.dihedral_group(args.dihedral)
    if args.product is not None:
        return gc.product_of([gc.cyclic_group(int(v)) for v in _floats(args.product)])
    if args.input:
        try:
            return gc.group_from_json(_read(args.input))
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise InputError(f"invalid group: {exc}") from exc
    raise InputError("give --cyclic N, --dihedral N, --product n1,n2,... or --input")


def _problem(args) -> sl.SLProblem:
    if args.input:
        try:
            return sl.SLProblem.from_dict(_load_json(args.input))
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"invalid problem: {exc}") from exc
    if args.density == "uniform":
        return sl.SLProblem.uniform(args.half_width)
    return sl.SLProblem.gaussian(args.sigma, args.half_width)


def _space_payload(space: fh.FiniteBasisSpace) -> dict:
    return space.to_dict()


# ---------------------------------------------------------------------------
# finite
# ---------------------------------------------------------------------------

def finite_validate(args, cfg):
    rep = fh.validate_uob(_space(args), cfg.tolerances.uob)
    return Outcome({"uob": rep}, rep.passed)


def finite_gks(args, cfg):
    tol = cfg.tolerances.gks
    if args.theta_sweep:
        n = args.theta_sweep
        thetas = np.arange(1, n) * (math.pi / 2) / n
        mins = np.array([fh.is_gks(fh.two_point(t), tol).min_coefficient for t in thetas])
        ok = mins >= -tol
        first = float(thetas[np.argmax(ok)]) if ok.any() else None
        step = math.pi / 2 / n
        contiguous = bool(ok.any() and ok[np.argmax(ok):].all())
        payload = {"points": n - 1, "step": step, "transition": first,
                   "reference": math.pi / 4, "contiguous_upper_range": contiguous}
        passed = first is not None and contiguous and abs(first - math.pi / 4) <= step
        rows = [[float(t), float(m), bool(o)] for t, m, o in zip(thetas, mins, ok)]
        return Outcome(payload, bool(passed), (["theta", "min_coefficient", "gks"], rows))
    if args.uniform_search:
        hits, best = fh.uniform_three_point_search(args.uniform_search, args.seed, tol)
        return Outcome({"trials": args.uniform_search, "seed": args.seed, "hits": hits,
                        "best_min_coefficient": best}, hits == 0)
    space = _space(args)
    res = fh.is_gks(space, tol)
    out = {"gks": res}
    if res.passed:
        try:
            out["gks_point"] = fh.find_gks_point(space)
        except fh.GKSPointError as exc:
            out["gks_point_error"] = str(exc)
    csv = tensor_csv(fh.multiplication_tensor(space)) if cfg.fmt == "csv" else None
    return Outcome(out, res.passed, csv_override=csv)


def _x0(args, space) -> int:
    if args.x0 is not None:
        if not 0 <= args.x0 < space.size:
            raise InputError(f"x0 must be in 0..{space.size - 1}")
        return args.x0
    try:
        return fh.find_gks_point(space).index
    except fh.GKSPointError as exc:
        raise InputError(f"{exc}; pass --x0") from exc


def finite_hgp(args, cfg):
    space = _space(args)
    x0 = _x0(args, space)
    try:
        res = fh.is_hgp(space, x0, cfg.tolerances.hgp)
    except fh.VanishingBaseValue as exc:
        raise InputError(str(exc)) from exc
    payload = {"x0": x0, "passed": res.passed, "min_value": res.min_value,
               "witness": res.witness, "max_imaginary": res.max_imaginary,
               "normalization_defect": res.kernel.normalization_defect(space.mu)}
    csv = tensor_csv(res.kernel.K) if cfg.fmt == "csv" else None
    return Outcome(payload, res.passed, csv_override=csv)


def finite_dual(args, cfg):
    space = _space(args)
    x0 = _x0(args, space)
    d = fh.dual_space(space, x0)
    rep = fh.validate_uob(d, cfg.tolerances.uob)
    return Outcome({"x0": x0, "dual": _space_payload(d), "uob": rep}, rep.passed)


def finite_represent(args, cfg):
    space = _space(args)
    x0 = _x0(args, space)
    if args.lam is None:
        raise InputError("--lam is required")
    lam = _floats(args.lam)
    if len(lam) != space.size:
        raise InputError(f"--lam needs {space.size} values")
    try:
        m = fh.represent_markov_sequence(space, x0, lam, cfg.tolerances.hgp, diagnostic=True)
    except fh.VanishingBaseValue as exc:
        raise InputError(str(exc)) from exc
    kern = fh.markov_kernel_from_sequence(space, lam, cfg.tolerances.hgp)
    return Outcome({"x0": x0, "weights": m.masses, "probability": m.probability,
                    "kernel_is_markov": kern.is_markov}, bool(m.probability))


def finite_hadamard(args, cfg):
    if args.sylvester is not None:
        M = fh.walsh_matrix(args.sylvester)
    elif args.paley is not None:
        M = fh.paley_hadamard(args.paley)
    elif args.input:
        data = _load_json(args.input)
        M = np.array(data["matrix"] if isinstance(data, dict) else data, dtype=float)
    else:
        raise InputError("give --sylvester K, --paley Q or --input")
    try:
        rep = fh.hadamard_gks_analyze(M, cfg.tolerances.hadamard)
    except fh.HadamardError as exc:
        raise InputError(str(exc)) from exc
    return Outcome({"hadamard": rep}, rep.is_gks)


def finite_gks1(args, cfg):
    space = _space(args)
    rng = np.random.default_rng(args.seed)
    F = fh.random_nonnegative_coefficients(rng, args.trials, space.size)
    H = fh.random_nonnegative_coefficients(rng, args.trials, space.size, scale=2.0)
    res = fh.gks1_check(space, F, H, cfg.tolerances.gks1)
    return Outcome({"trials": args.trials, "seed": args.seed, "min_integral": res.min_integral,
                    "passed": res.passed}, res.passed)


def finite_gks2(args, cfg):
    space = _space(args)
    res = fh.gks2_search(space, args.trials, args.seed)
    return Outcome({"trials": res.trials, "seed": args.seed, "min_correlation": res.min_correlation,
                    "witness": res.witness, "note": "exploration; recorded, not asserted"}, True)


# ---------------------------------------------------------------------------
# group
# ---------------------------------------------------------------------------

def _class_payload(cs: gc.ClassSpace) -> dict:
    chars = cs.chars.real if cs.is_real() else cs.chars
    return {"classes": [list(c) for c in cs.classes], "nu": cs.nu, "chars": chars,
            "identity_class": cs.identity_class}


def group_build(args, cfg):
    G = _group(args)
    cs = gc.character_table(G)
    return Outcome({"order": G.order, "abelian": G.is_abelian(), **_class_payload(cs)}, True)


def group_verify(args, cfg):
    cs = gc.character_table(_group(args))
    rep = gc.verify_gks_hgp(cs, cfg.tolerances.group)
    return Outcome({"report": rep}, rep.passed)


def group_count_check(args, cfg):
    G = _group(args)
    dev = gc.kernel_count_check(G, gc.character_table(G))
    return Outcome({"deviation": dev}, dev < cfg.tolerances.group)


def group_realify(args, cfg):
    cs = gc.character_table(_group(args))
    real = gc.realify(cs)
    rep = gc.verify_gks_hgp(real, cfg.tolerances.group)
    return Outcome({**_class_payload(real), "report": rep}, rep.gks and rep.hgp)


# ---------------------------------------------------------------------------
# jacobi
# ---------------------------------------------------------------------------

def _params(args) -> jg.JacobiParams:
    try:
        return jg.JacobiParams(args.p, args.q)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def jacobi_eigencheck(args, cfg):
    prm = _params(args)
    kmax = args.k if args.k is not None else 20
    basis = jg.jacobi_basis(prm.p, prm.q, kmax)
    res = [jg.eigen_residual(basis, k) for k in range(kmax + 1)]
    mx = float(max(res))
    return Outcome({"p": prm.p, "q": prm.q, "kmax": kmax, "max_residual": mx, "residuals": res},
                   mx < cfg.tolerances.eigen,
                   (["k", "residual"], [[k, r] for k, r in enumerate(res)]))


def jacobi_koornwinder(args, cfg):
    prm = _params(args)
    kmax = args.k if args.k is not None else 10
    if args.limit_check:
        offs = sorted({0.5, 0.1, round(prm.q - prm.p, 12)}, reverse=True)
        if prm.q - prm.p > 0.1:
            offs = [0.5, 0.1, 0.02]
        dev = jg.limit_consistency_check(prm.p, [prm.p + o for o in offs], kmax, 0.3)
        dec = bool(np.all(np.diff(dev) < 0))
        return Outcome({"p": prm.p, "offsets": offs, "k": kmax, "x": 0.3, "deviations": dev,
                        "strictly_decreasing": dec}, dec)
    if not prm.koornwinder_valid:
        raise InputError("the Koornwinder integral needs q > p > 1")
    x = np.linspace(-1, 1, 21)
    order = args.order or jg.default_order(kmax)
    rule = jg.koornwinder_rule(prm, order)
    tab = recurrence_table(prm.p, prm.q, kmax, x)
    one = recurrence_table(prm.p, prm.q, kmax, np.array(1.0))
    devs = [float(np.max(np.abs(jg.koornwinder_eval(prm, k, x, rule) - tab[k] / one[k])))
            for k in range(kmax + 1)]
    mx = max(devs)
    return Outcome({"p": prm.p, "q": prm.q, "kmax": kmax, "max_deviation": mx, "deviations": devs},
                   mx < cfg.tolerances.koornwinder)


def jacobi_product(args, cfg):
    prm = _params(args)
    if not prm.koornwinder_valid:
        raise InputError("the product measure needs q > p > 1")
    kmax = args.k if args.k is not None else 10
    basis = jg.jacobi_basis(prm.p, prm.q, kmax)
    rule = jg.koornwinder_rule(prm, args.order or 40)
    vals = np.linspace(-0.9, 0.9, args.grid or 9)
    rows, meas, bate, smin, smax, mmin = [], 0.0, 0.0, np.inf, -np.inf, np.inf
    for s in vals:
        for t in vals:
            if s + t > 0.1:
                r = jg.product_formula_residual(basis, s, t, kmax, rule, "measure")
                m = jg.gasper_measure(prm, s, t, rule)
                smin, smax = min(smin, m.support.min()), max(smax, m.support.max())
                mmin = min(mmin, m.masses.min())
                meas = max(meas, r)
                rows.append([float(s), float(t), "measure", r])
            else:
                r = jg.product_formula_residual(basis, s, t, kmax, route="bateman")
                bate = max(bate, r)
                rows.append([float(s), float(t), "bateman", r])
    tol = cfg.tolerances.product
    ok = meas < tol and bate < tol and mmin >= 0 and smin >= -1 - 1e-9 and smax <= 1 + 1e-9
    return Outcome({"p": prm.p, "q": prm.q, "kmax": kmax, "measure_residual": meas,
                    "bateman_residual": bate, "support": [smin, smax], "min_mass": mmin},
                   bool(ok), (["s", "t", "route", "residual"], rows))


def jacobi_kernel_scan(args, cfg):
    prm = _params(args)
    K = args.K if args.K is not None else 20
    t = args.t if args.t is not None else 0.05
    basis = jg.jacobi_basis(prm.p, prm.q, K)
    scan = jg.kernel_scan(basis, K, t, args.grid or 15)
    return Outcome({"p": prm.p, "q": prm.q, "scan": scan,
                    "in_positivity_region": jg.gasper_positivity_region(prm.p, prm.q)},
                   scan.min_value >= -cfg.tolerances.heat)


def jacobi_region(args, cfg):
    prm = _params(args)
    inside = jg.gasper_positivity_region(prm.p, prm.q)
    return Outcome({"p": prm.p, "q": prm.q, "in_region": inside}, inside)


# ---------------------------------------------------------------------------
# sl
# ---------------------------------------------------------------------------

def _wave_data(problem: sl.SLProblem, name: str):
    a, b = problem.a, problem.b
    L = b - a
    if name == "one":
        return lambda x: np.ones_like(x)
    if name == "cos":
        return lambda x: 1 + np.cos(np.pi * (x - a) / L)
    if name == "bump":
        c = a + 0.4 * L
        return lambda x: np.exp(-40 * ((x - c) / L) ** 2) * np.cos(np.pi * (x - a) / L) ** 2
    raise InputError(f"unknown boundary data {name!r}")


def sl_eigens(args, cfg):
    prob = _problem(args)
    K = args.K if args.K is not None else 6
    basis = sl.solve_neumann_eigens(prob, args.grid or 2000, K)
    rows = [[float(x)] + [float(v) for v in basis.eigenfunctions[:, j]]
            for j, x in enumerate(basis.x)]
    payload = {"problem": prob.name, "a": prob.a, "b": prob.b, "K": K,
               "eigenvalues": basis.eigenvalues, "raw_eigenvalues": basis.raw_eigenvalues,
               "orthonormality_defect": basis.orthonormality_defect(),
               "parity_defect": sl.parity_defect(basis)}
    return Outcome(payload, basis.orthonormality_defect() < 1e-8,
                   (["x"] + [f"f{i}" for i in range(K + 1)], rows))


def sl_heat(args, cfg):
    prob = _problem(args)
    K = args.K if args.K is not None else 12
    t = args.t if args.t is not None else 0.1
    basis = sl.solve_neumann_eigens(prob, args.grid or 2000, K)
    try:
        rep = sl.heat_hgp_check(basis, args.x0_end, t, args.heat_grid)
    except sl.VanishingBaseValue as exc:
        raise InputError(str(exc)) from exc
    return Outcome({"min": rep.min_kernel, "argmin": rep.argmin, "tail_bound": rep.tail_bound,
                    "grid": rep.grid, "K": rep.K, "t": rep.t}, rep.min_kernel >= -cfg.tolerances.heat)


def sl_wave(args, cfg):
    prob = _problem(args)
    n = args.grid or 400
    sol = sl.wave_solve(prob, _wave_data(prob, args.data), n, args.x0_end)
    thr = -5 * sol.h
    mn = float(sol.F.min())
    payload = {"data": args.data, "grid": n, "min": mn, "threshold": thr, "residual": sol.residual}
    table = None
    if cfg.fmt == "csv":
        step = max(1, n // 50)
        table = (["x", "y", "F"], [[float(sol.x[i]), float(sol.y[j]), float(sol.F[i, j])]
                                   for i in range(0, n + 1, step) for j in range(0, n + 1, step)])
    return Outcome(payload, mn >= thr, table)


def sl_achour(args, cfg):
    prob = _problem(args)
    K = args.K if args.K is not None else 12
    t = args.t if args.t is not None else 0.1
    data = [_wave_data(prob, nm) for nm in ("one", "cos", "bump")]
    rep = sl.achour_trimeche_verify(prob, K, (t,), args.grid or 2000, args.heat_grid,
                                    wave_data=data, wave_grid=400)
    ok = rep.hypotheses and rep.heat_min >= -cfg.tolerances.heat and rep.wave_min >= rep.wave_threshold
    return Outcome({"report": rep}, bool(ok))


def sl_volterra(args, cfg):
    prob = _problem(args)
    n = args.order or 16
    cg = sl.CharacteristicGrid.build(prob, prob.a, prob.b, n)
    norms, bounds, kappa = sl.volterra_norms(sl.repr2_family(prob), cg, 6)
    C = 2.0
    al, be = np.meshgrid(np.linspace(0, 1, 6), np.linspace(0, 1, 6))
    dens = sl.constant_resolvent_density(-C, al, be)
    err = float(np.max(np.abs(dens / (-C) - sl.bessel_series_F(C, 0.5 * al * be))))
    ok = bool(np.all(norms <= bounds * (1 + 1e-12))) and err < 1e-10
    return Outcome({"lattice": n, "kappa": kappa, "area": cg.apex_area, "norms": norms,
                    "bounds": bounds, "resolvent_series_error": err}, ok,
                   (["n", "norm", "bound"], [[i + 1, float(a), float(b)]
                                             for i, (a, b) in enumerate(zip(norms, bounds))]))


def sl_bessel(args, cfg):
    if args.area is None or args.amin is None:
        raise InputError("--area and --amin are required")
    try:
        rep = sl.bessel_positivity_criterion(args.amin, args.area)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return Outcome({"report": rep}, rep.criterion)


def sl_mass(args, cfg):
    prob = _problem(args)
    rep = sl.minimal_mass_check(prob, args.x0_end)
    return Outcome({"limit_max": rep.limit_max, "interior_limit_max": rep.interior_limit_max,
                    "passes": rep.passes, "r": rep.r}, rep.passes)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

HANDLERS = {
    ("finite", "validate"): finite_validate, ("finite", "gks"): finite_gks,
    ("finite", "hgp"): finite_hgp, ("finite", "dual"): finite_dual,
    ("finite", "represent"): finite_represent, ("finite", "hadamard"): finite_hadamard,
    ("finite", "gks1"): finite_gks1, ("finite", "gks2-search"): finite_gks2,
    ("group", "build"): group_build, ("group", "verify"): group_verify,
    ("group", "count-check"): group_count_check, ("group", "realify"): group_realify,
    ("jacobi", "eigencheck"): jacobi_eigencheck, ("jacobi", "koornwinder"): jacobi_koornwinder,
    ("jacobi", "product"): jacobi_product, ("jacobi", "kernel-scan"): jacobi_kernel_scan,
    ("jacobi", "region"): jacobi_region,
    ("sl", "eigens"): sl_eigens, ("sl", "heat-hgp"): sl_heat, ("sl", "wave"): sl_wave,
    ("sl", "achour-trimeche"): sl_achour, ("sl", "volterra"): sl_volterra,
    ("sl", "bessel-bound"): sl_bessel, ("sl", "mass-check"): sl_mass,
}


def _common(p):
    p.add_argument("--input", help="input JSON file")
    p.add_argument("--output", help="write the result here instead of stdout")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    p.add_argument("--tol", type=float, help="override every tolerance")
    p.add_argument("--grid", type=int, help="grid size")
    p.add_argument("--order", type=int, help="quadrature order or lattice size")
    p.add_argument("-K", type=int, help="number of retained modes")
    p.add_argument("-t", type=float, help="time / regularization parameter")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypergroup-lab", description=__doc__.splitlines()[0])
    top = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fin = top.add_parser("finite", help="finite spaces").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    for name in ("validate", "gks", "hgp", "dual", "represent", "hadamard", "gks1", "gks2-search"):
        p = fin.add_parser(name)
        _common(p)
        p.add_argument("--hypercube", type=int, metavar="N")
        p.add_argument("--two-point", type=float, metavar="THETA")
        p.add_argument("--x0", type=int)
        if name == "gks":
            p.add_argument("--theta-sweep", type=int, metavar="N")
            p.add_argument("--uniform-search", type=int, metavar="TRIALS")
        if name == "represent":
            p.add_argument("--lam", help="comma-separated Markov sequence")
        if name == "hadamard":
            p.add_argument("--sylvester", type=int, metavar="K")
            p.add_argument("--paley", type=int, metavar="Q")
        if name in ("gks1", "gks2-search"):
            p.add_argument("--trials", type=int, default=10_000)

    grp = top.add_parser("group", help="finite groups").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    for name in ("build", "verify", "count-check", "realify"):
        p = grp.add_parser(name)
        _common(p)
        p.add_argument("--cyclic", type=int, metavar="N")
        p.add_argument("--dihedral", type=int, metavar="N")
        p.add_argument("--product", metavar="n1,n2,...")

    jac = top.add_parser("jacobi", help="Jacobi polynomials").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    for name in ("eigencheck", "koornwinder", "product", "kernel-scan", "region"):
        p = jac.add_parser(name)
        _common(p)
        p.add_argument("-p", type=float, required=True)
        p.add_argument("-q", type=float, required=True)
        p.add_argument("-k", type=int)
        if name == "koornwinder":
            p.add_argument("--limit-check", action="store_true")

    slp = top.add_parser("sl", help="Sturm-Liouville and wave equation").add_subparsers(
        dest="action", required=True, parser_class=_Parser)
    for name in ("eigens", "heat-hgp", "wave", "achour-trimeche", "volterra", "bessel-bound",
                 "mass-check"):
        p = slp.add_parser(name)
        _common(p)
        p.add_argument("--density", choices=("uniform", "gauss"), default="gauss")
        p.add_argument("--sigma", type=float, default=0.5)
        p.add_argument("--half-width", type=float, default=1.0)
        p.add_argument("--x0", dest="x0_end", choices=("left", "right"), default="left")
        p.add_argument("--heat-grid", type=int, default=31)
        if name == "wave":
            p.add_argument("--data", choices=("one", "cos", "bump"), default="bump")
        if name == "bessel-bound":
            p.add_argument("--area", type=float)
            p.add_argument("--amin", type=float)
    return parser


def _render(outcome: Outcome, cfg: RunConfig) -> str:
    if cfg.fmt == "json":
        return dumps({"command": f"{cfg.command} {cfg.action}", "passed": outcome.passed,
                      **outcome.payload})
    if outcome.csv_override is not None:
        return outcome.csv_override
    if outcome.table is not None:
        return csv_text(*outcome.table)
    flat = [[k, v] for k, v in outcome.payload.items() if isinstance(v, (int, float, str, bool))]
    return csv_text(["key", "value"], [["passed", outcome.passed]] + flat)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.action, args.input, args.output, args.fmt, args.tol,
                    args.grid, args.order, args.K, args.t, args.seed)
    try:
        outcome = HANDLERS[(args.command, args.action)](args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError, gc.GroupSizeError, gc.UnsupportedGroupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = _render(outcome, cfg)
    if cfg.output:
        write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)
    return 0 if outcome.passed else 2
