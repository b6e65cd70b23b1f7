"""Acceptance criteria 1-12, each checked at its stated tolerance and runtime.

Run under pytest (a summary line per criterion is printed at the end) or
directly with ``python3 tests/test_acceptance.py``.
"""

import contextlib
import io
import json
import math
import sys
import time

import numpy as np
import pytest

from hypergroup_lab import finite_hypergroup as fh
from hypergroup_lab import group_characters as gc
from hypergroup_lab import jacobi_gasper as jg
from hypergroup_lab import sturm_liouville_wave as sl
from hypergroup_lab.cli import main as cli_main
from hypergroup_lab.numerics import bessel_first_zero, recurrence_table


def _cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main(argv)
    return code, json.loads(buf.getvalue())


# ---------------------------------------------------------------------------
# Criteria; each returns (passed, detail)
# ---------------------------------------------------------------------------

def criterion_1():
    worst_min, worst_oracle, codes = np.inf, 0.0, []
    for N in range(1, 5):
        space = fh.hypercube(N)
        g, h = fh.is_gks(space), fh.is_hgp(space, 0)
        worst_min = min(worst_min, g.min_coefficient, h.min_value)
        n = 2 ** N
        x, y, z = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        oracle = n * ((x ^ y) == z)
        worst_oracle = max(worst_oracle, float(np.max(np.abs(h.kernel.K - oracle))))
        codes += [_cli(["finite", "gks", "--hypercube", str(N)])[0],
                  _cli(["finite", "hgp", "--hypercube", str(N), "--x0", "0"])[0]]
    ok = worst_min >= -1e-12 and worst_oracle < 1e-10 and all(c == 0 for c in codes)
    return ok, f"min {worst_min:.3g}, kernel vs oracle {worst_oracle:.3g}"


def criterion_2():
    n = 1000
    thetas = np.arange(1, n) * (math.pi / 2) / n
    ok = np.array([fh.is_gks(fh.two_point(t)).passed for t in thetas])
    first = int(np.argmax(ok))
    monotone = ok.any() and not ok[:first].any() and ok[first:].all()
    step = (math.pi / 2) / n
    transition = float(thetas[first])
    passed = bool(monotone and abs(transition - math.pi / 4) <= step)
    return passed, f"transition at {transition:.6f} (pi/4 = {math.pi / 4:.6f}, step {step:.2e})"


def criterion_3():
    cs = gc.realify(gc.character_table(gc.cyclic_group(4)))
    space = gc.real_space(cs)
    measure_ok = np.allclose(np.sort(cs.nu), [0.25, 0.25, 0.5])
    gks_ok = fh.is_gks(space).passed
    hgp_ok = fh.is_hgp(space, cs.identity_class).passed
    hits, best = fh.uniform_three_point_search(10 ** 6, seed=0)
    ok = measure_ok and gks_ok and hgp_ok and hits == 0
    return ok, f"Z/4 realified GKS={gks_ok} HGP={hgp_ok}; uniform search hits {hits}, best {best:.4f}"


def criterion_4():
    groups = [(f"Z/{n}", gc.cyclic_group(n)) for n in range(1, 9)]
    groups += [("D3", gc.dihedral_group(3)), ("D4", gc.dihedral_group(4)),
               ("(Z/2)^3", gc.product_of([gc.cyclic_group(2)] * 3))]
    worst_int, worst_count, bad = 0.0, 0.0, []
    for name, G in groups:
        cs = gc.character_table(G)
        rep = gc.verify_gks_hgp(cs)
        dev = gc.kernel_count_check(G, cs)
        worst_int = max(worst_int, rep.integer_defect)
        worst_count = max(worst_count, dev)
        if not (rep.passed and rep.integer_defect < 1e-9 and dev < 1e-9):
            bad.append(name)
    return not bad, f"integer defect {worst_int:.2g}, count deviation {worst_count:.2g}, failing {bad}"


def criterion_5():
    certified = []
    for k in range(1, 5):
        rep = fh.hadamard_gks_analyze(fh.walsh_matrix(k))
        certified.append(rep.is_gks and rep.exponent == k and rep.identification["verified"])
    paley = fh.hadamard_gks_analyze(fh.paley_hadamard(11))
    ok = all(certified) and paley.is_hadamard and not paley.is_gks and paley.min_coefficient < 0
    return ok, f"Sylvester 2..16 certified {certified}; order 12 min {paley.min_coefficient:.4f}"


def criterion_6():
    worst = 0.0
    for p, q in [(2, 2), (3, 5), (2.5, 4.7), (1.5, 2.2)]:
        basis = jg.jacobi_basis(p, q, 20)
        worst = max(worst, max(jg.eigen_residual(basis, k) for k in range(21)))
    return worst < 1e-9, f"max residual {worst:.3g}"


def criterion_7():
    xs = np.linspace(-1, 1, 21)
    grid = np.linspace(-0.9, 0.9, 7)
    k_err = m_err = b_err = 0.0
    mass_min, sup = np.inf, 0.0
    for p, q in [(3, 5), (2.5, 4.7)]:
        basis = jg.jacobi_basis(p, q, 10)
        rule = jg.koornwinder_rule(basis.params, 40)
        ref = basis.table(xs) / basis.values_at_one[:, None]
        for k in range(11):
            k_err = max(k_err, float(np.max(np.abs(jg.koornwinder_eval(basis.params, k, xs, rule)
                                                   - ref[k]))))
        for s in grid:
            for t in grid:
                if s + t > 0.1:
                    m = jg.gasper_measure(basis.params, s, t, rule)
                    mass_min = min(mass_min, float(m.masses.min()))
                    sup = max(sup, float(np.max(np.abs(m.support))))
                    m_err = max(m_err, jg.product_formula_residual(basis, s, t, rule_uv=rule))
                else:
                    b_err = max(b_err, jg.product_formula_residual(basis, s, t, route="bateman"))
    ok = k_err < 1e-9 and m_err < 1e-8 and b_err < 1e-8 and mass_min >= 0 and sup <= 1 + 1e-9
    return ok, (f"koornwinder {k_err:.2g}, measure route {m_err:.2g}, expansion route "
                f"{b_err:.2g}, min mass {mass_min:.2g}, max |support| {sup:.12f}")


def criterion_8():
    prod = max(jg.ultraspherical_product_check(2, k, l) for k in range(6) for l in range(6))
    xs = np.linspace(-1, 1, 21)
    tab = recurrence_table(2, 2, 5, xs) / recurrence_table(2, 2, 5, np.array(1.0))[:, None]
    kw = max(float(np.max(np.abs(jg.ultraspherical_koornwinder(2, k, xs) - tab[k])))
             for k in range(6))
    lim = jg.limit_consistency_check(2, [2.5, 2.1, 2.02], 3, 0.3)
    decreasing = bool(np.all(np.diff(lim) < 0))
    ok = prod < 1e-8 and kw < 1e-9 and decreasing
    return ok, f"product check {prod:.2g}, ratios {kw:.2g}, limit {np.array2string(lim, precision=3)}"


def criterion_9():
    b, K = 1.0, 6
    prob = sl.SLProblem.uniform(b)
    basis = sl.solve_neumann_eigens(prob, 2000, K)
    k = np.arange(K + 1)
    lam = (k * math.pi / (2 * b)) ** 2
    lam_err = float(np.max(np.abs(basis.eigenvalues[1:] - lam[1:]) / lam[1:]))
    ref = math.sqrt(2) * np.cos(np.outer(k, basis.x + b) * math.pi / (2 * b))
    ref[0] = 1
    f_err = float(np.max(np.abs(basis.eigenfunctions - ref)) / math.sqrt(2))
    orders = sl.convergence_order(prob, [250, 500, 1000, 2000], K, reference=lam)
    ok = lam_err < 1e-6 and f_err < 1e-6 and float(orders.min()) >= 1.9
    return ok, f"eigenvalues {lam_err:.2g}, eigenfunctions {f_err:.2g}, min order {orders.min():.3f}"


def criterion_10():
    prob = sl.SLProblem.gaussian(sigma=0.5)
    grid = 400
    data = [lambda x: np.ones_like(x), lambda x: 1 + np.cos(math.pi * x),
            lambda x: np.exp(-25 * (x - 0.3) ** 2), lambda x: np.clip(x, 0, None)]
    rep = sl.achour_trimeche_verify(prob, K=12, t_list=(0.1,), grid=2000, heat_grid=31,
                                    wave_data=data, wave_grid=grid)
    heat = rep.heat[0]
    ok = (rep.symmetric and rep.log_concave and rep.sign_conditions and rep.hypotheses
          and heat.min_kernel >= -1e-6 and rep.wave_min >= rep.wave_threshold)
    return ok, (f"heat min {heat.min_kernel:.4g} (tail bound {heat.tail_bound:.2g}), "
                f"wave min {rep.wave_min:.3g} vs {rep.wave_threshold:.3g}")


def criterion_11():
    prob = sl.SLProblem.gaussian(sigma=1.0)
    cg = sl.CharacteristicGrid.build(prob, -1, 1, 10)
    norms, bounds, _ = sl.volterra_norms(sl.repr2_family(prob), cg, 6)
    cgu = sl.CharacteristicGrid.build(sl.SLProblem.uniform(), -1, 1, 10)
    cn, cb, _ = sl.volterra_norms(sl.constant_family(1.0), cgu, 6)
    norms_ok = bool(np.all(norms <= bounds * (1 + 1e-12)) and np.all(cn <= cb * (1 + 1e-12)))
    mu0 = bessel_first_zero()
    mu_ok = abs(mu0 - 2.404825557695773) < 1e-9
    C = 1.3
    al, be = np.meshgrid(np.linspace(0, 1.5, 7), np.linspace(0, 1.5, 7))
    res_err = float(np.max(np.abs(sl.constant_resolvent_density(-C, al, be)
                                  + C * sl.bessel_series_F(C, 0.5 * al * be))))
    hi = sl.bessel_positivity_criterion(-2.8, 1.0, run_solver=False).criterion
    lo = sl.bessel_positivity_criterion(-3.0, 1.0, run_solver=False).criterion
    ok = norms_ok and mu_ok and res_err < 1e-10 and hi and not lo
    return ok, (f"max norm/bound {max(np.max(norms / bounds), np.max(cn / cb)):.3g}, "
                f"mu0 {mu0:.15f}, resolvent {res_err:.2g}, flip {hi}->{lo}")


def criterion_12():
    space = fh.hypercube(3)
    rng = np.random.default_rng(12)
    F = rng.exponential(size=(10_000, 8)) * rng.integers(0, 2, size=(10_000, 8))
    H = rng.exponential(size=(10_000, 8)) * rng.integers(0, 2, size=(10_000, 8))
    g1 = fh.gks1_check(space, F, H)
    g2 = fh.gks2_search(space, 10_000, seed=12)
    ok = g1.passed and g1.min_integral >= -1e-12 and g2.min_correlation >= -1e-12
    return ok, f"GKS1 min {g1.min_integral:.3g}; GKS2 search min {g2.min_correlation:.3g} (recorded)"


CRITERIA = {
    1: ("hypercube exactness", criterion_1, 5),
    2: ("two-point boundary", criterion_2, 1),
    3: ("three-point extremal case", criterion_3, 60),
    4: ("group kernels", criterion_4, 30),
    5: ("Hadamard", criterion_5, 10),
    6: ("Jacobi eigen-identity", criterion_6, 5),
    7: ("Koornwinder and product formula", criterion_7, 120),
    8: ("ultraspherical", criterion_8, 60),
    9: ("Sturm-Liouville closed form", criterion_9, 20),
    10: ("heat and wave surrogates", criterion_10, 120),
    11: ("Volterra and Bessel", criterion_11, 30),
    12: ("GKS1 property suite", criterion_12, 60),
}


def evaluate(number: int):
    name, fn, limit = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    ok = bool(ok) and elapsed < limit
    line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {name}: {detail}; "
            f"{elapsed:.2f}s (limit {limit}s)")
    return ok, line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    ok, line = evaluate(number)
    acceptance_log.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
