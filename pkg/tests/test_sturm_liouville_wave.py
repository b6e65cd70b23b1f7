import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypergroup_lab.sturm_liouville_wave import (
    CharacteristicGrid, DensityError, EigenCollisionError, KernelFamily, SLProblem,
    VanishingBaseValue, achour_trimeche_verify, bessel_positivity_criterion, bessel_series_F,
    bessel_threshold, constant_family, constant_kernel_iterates, constant_resolvent_density,
    convergence_order, heat_hgp_check, minimal_mass_check, operator_residual,
    separated_psi_candidate, parity_defect, proppsi_kernels, repr1_residual, repr2_family,
    repr2_kernels, repr2_residual, semigroup_defect, solve_neumann_eigens, volterra_norms,
    volterra_solve, wave_positivity, wave_solve, wave_solve_spectral)

SQRT2 = math.sqrt(2)


@pytest.fixture(scope="module")
def uniform():
    return SLProblem.uniform()


@pytest.fixture(scope="module")
def gauss():
    return SLProblem.gaussian(sigma=1.0)


@pytest.fixture(scope="module")
def gauss_basis(gauss):
    return solve_neumann_eigens(gauss, 2000, 12)


# -- eigenpairs -------------------------------------------------------------

def test_uniform_closed_form(uniform):
    basis = solve_neumann_eigens(uniform, 2000, 4)
    k = np.arange(5)
    exact = (k * math.pi / 2) ** 2
    assert np.allclose(basis.eigenvalues, exact, rtol=1e-8, atol=1e-12)
    ref = SQRT2 * np.cos(np.outer(k, basis.x + 1) * math.pi / 2)
    ref[0] = 1
    assert np.max(np.abs(basis.eigenfunctions - ref)) < 1e-6
    assert basis.orthonormality_defect() < 1e-8


def test_k_zero_is_constant(uniform):
    basis = solve_neumann_eigens(uniform, 16, 0)
    assert basis.eigenvalues.tolist() == [0.0]
    assert np.all(basis.eigenfunctions[0] == 1)


def test_gaussian_order_parity_orthonormality(gauss, gauss_basis):
    orders = convergence_order(gauss, [100, 200, 400, 800], 4)
    assert np.all(orders > 1.9)
    assert gauss_basis.orthonormality_defect() < 1e-8
    assert np.max(parity_defect(gauss_basis)) < 1e-7


def test_operator_residual_second_order(uniform):
    f = lambda x: np.cos(math.pi * (x + 1))  # noqa: E731
    r = [operator_residual(uniform, f, math.pi ** 2, n) for n in (50, 100, 200)]
    assert math.log2(r[0] / r[1]) == pytest.approx(2, abs=0.1)
    assert math.log2(r[1] / r[2]) == pytest.approx(2, abs=0.1)


def test_eigen_input_errors(uniform):
    with pytest.raises(ValueError):
        solve_neumann_eigens(uniform, 100, -1)
    with pytest.raises(ValueError):
        solve_neumann_eigens(uniform, 40, 12)
    with pytest.raises(EigenCollisionError):
        solve_neumann_eigens(uniform, 200, 4, gap_tol=1e6)


# -- heat kernels ----------------------------------------------------------

def test_heat_uniform_nonnegative(uniform):
    basis = solve_neumann_eigens(uniform, 2000, 12)
    rep = heat_hgp_check(basis, "left", 0.1, 21)
    assert rep.min_kernel >= -1e-8


def test_heat_gaussian_and_long_time(gauss_basis):
    rep = heat_hgp_check(gauss_basis, "left", 0.1, 21)
    assert rep.min_kernel > 0 and rep.tail_bound < 1e-6
    late = heat_hgp_check(gauss_basis, "right", 60.0, 9)
    assert late.min_kernel == pytest.approx(1, abs=1e-10)
    with pytest.raises(ValueError):
        heat_hgp_check(gauss_basis, "left", 0.0)


def test_heat_semigroup(gauss_basis):
    assert semigroup_defect(gauss_basis, 0.05, 0.1) < 1e-8


def test_vanishing_base_value(uniform):
    basis = solve_neumann_eigens(uniform, 200, 2)
    basis.eigenfunctions[1, 0] = 0.0
    with pytest.raises(VanishingBaseValue):
        heat_hgp_check(basis, "left")


# -- wave equation ----------------------------------------------------------

def test_wave_constant_data(gauss):
    sol = wave_solve(gauss, lambda x: np.ones_like(x), 200)
    assert np.max(np.abs(sol.F - 1)) < 1e-12


def test_wave_reproduces_discrete_separated_solution(gauss):
    N = 200
    basis = solve_neumann_eigens(gauss, N, 3)
    for i in range(1, 4):
        f = basis.eigenfunctions[i]
        sol = wave_solve(gauss, f, N)
        assert np.max(np.abs(sol.F - np.outer(f, f) / f[0])) < 1e-9
        right = wave_solve(gauss, f, N, base="right")
        assert np.max(np.abs(right.F - np.outer(f, f) / f[-1])) < 1e-9


def test_wave_uniform_dalembert(uniform):
    f = lambda x: np.cos(math.pi * (x + 1))  # noqa: E731
    # with equal steps in x and y the scheme follows characteristics exactly
    sol = wave_solve(uniform, f, 200)
    exact = np.outer(f(sol.x), f(sol.y))
    assert np.max(np.abs(sol.F - exact)) < 1e-12


def test_wave_marching_matches_spectral_full_basis(gauss):
    N = 60
    basis = solve_neumann_eigens(gauss, N, N, extrapolate=False, min_points_per_mode=1)
    data = lambda x: np.exp(-8 * (x - 0.2) ** 2)  # noqa: E731
    F = wave_solve(gauss, data, N).F
    G = wave_solve_spectral(basis, data)
    assert np.max(np.abs(F - G)) < 1e-8


def test_wave_errors(gauss):
    with pytest.raises(ValueError):
        wave_solve(gauss, np.ones(5), 20)
    with pytest.raises(ValueError):
        wave_solve(gauss, lambda x: x, 20, base="middle")


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0.05, 0.5))
def test_wave_positivity_gaussian(c, width):
    grid = 200
    h = 2 / grid
    data = [lambda x: np.exp(-((x - c) / width) ** 2)]
    assert wave_positivity(SLProblem.gaussian(1.0), data, grid) >= -5 * h


# -- first representation -----------------------------------------------------

def test_repr1_uniform_and_constant(uniform, gauss):
    x = np.linspace(-1, 1, 201)
    f = np.cos(math.pi * (x + 1))
    F = np.outer(f, f)
    assert repr1_residual(uniform, F, x, 100, 40) < 1e-8
    ones = np.ones((201, 201))
    assert repr1_residual(uniform, ones, x, 100, 60) < 1e-12
    with pytest.raises(ValueError):
        repr1_residual(uniform, ones, x, 10, 40)


def test_repr1_gaussian_second_order(gauss):
    res = []
    for n in (100, 200, 400):
        basis = solve_neumann_eigens(gauss, n, 2, extrapolate=False)
        f = basis.eigenfunctions[2]
        F = np.outer(f, f) / f[0]
        res.append(repr1_residual(gauss, F, basis.x, n // 2, n // 4))
    assert math.log2(res[0] / res[1]) == pytest.approx(2, abs=0.15)
    assert math.log2(res[1] / res[2]) == pytest.approx(2, abs=0.15)


# -- second representation --------------------------------------------------

def test_repr2_uniform_kernels_vanish(uniform):
    k = repr2_kernels(uniform)
    Sx, Sy = np.meshgrid(np.linspace(-0.5, 0.5, 5), np.linspace(-0.9, -0.5, 5))
    assert np.all(k.a(0.0, 0.0, Sx, Sy) == 0)
    assert np.all(k.theta(0.0, 0.0, Sx, Sy) == 1)
    s = np.linspace(-1, 1, 7)
    assert np.all(k.a0(0.0, 0.0, s) == 0)


def gauss_a_oracle(Mx, My, Sx, Sy, y0=-1.0):
    """a(M, S) for rho = exp(-x^2), written out by hand."""
    ap = lambda x, y: -SQRT2 * (x + y)  # noqa: E731
    am = lambda x, y: SQRT2 * (x - y)  # noqa: E731
    h = lambda x, y: -(x * x + y * y) / 2  # noqa: E731
    Mm, Mp = Mx - (My - y0), Mx + (My - y0)
    Sm, Sp = Sx - (Sy - y0), Sx + (Sy - y0)
    lx, ly = (Mm + Sp) / 2, y0 + (Sp - Mm) / 2
    rx, ry = (Sm + Mp) / 2, y0 + (Mp - Sm) / 2
    left = ap(lx, ly) * math.exp(h(Sx, Sy) - h(lx, ly)) * am(Sx, Sy)
    right = am(rx, ry) * math.exp(h(Sx, Sy) - h(rx, ry)) * ap(Sx, Sy)
    a = (left + right) / 2
    a0 = (ap(lx, ly) * math.exp(h(Sx, Sy) - h(lx, ly))
          + am(rx, ry) * math.exp(h(Sx, Sy) - h(rx, ry))) / (2 * SQRT2)
    return a, a0


@pytest.mark.parametrize("M,S", [((0.0, 0.0), (0.1, -0.5)), ((0.2, -0.3), (0.1, -0.6)),
                                 ((-0.1, 0.4), (0.3, -0.2))])
def test_repr2_gaussian_kernel_oracle(gauss, M, S):
    k = repr2_kernels(gauss)
    a, _ = gauss_a_oracle(*M, *S)
    assert k.a(*M, *S) == pytest.approx(a, rel=1e-12, abs=1e-14)
    _, a0 = gauss_a_oracle(*M, S[0], -1.0)
    assert k.a0(*M, np.array(S[0])) == pytest.approx(a0, rel=1e-12, abs=1e-14)


def test_repr2_theta_identity(gauss):
    k = repr2_kernels(gauss)
    assert k.theta_identity_residual(0.1, -0.3) < 1e-5
    with pytest.raises(ValueError):
        repr2_kernels(gauss, M=(0.9, 0.5))


def test_repr2_residual_second_order(gauss, gauss_basis):
    sp = gauss_basis.splines()
    F = lambda x, y: sp[2](x) * sp[2](y) / sp[2](-1.0)  # noqa: E731
    r = [repr2_residual(gauss, F, (0.0, 0.0), n) for n in (16, 32, 64)]
    assert math.log2(r[0] / r[1]) == pytest.approx(2, abs=0.1)
    assert math.log2(r[1] / r[2]) == pytest.approx(2, abs=0.1)


# -- Volterra series ---------------------------------------------------------

def test_volterra_without_interior_kernel(uniform):
    cg = CharacteristicGrid.build(uniform, -1, 1, 10)
    g = lambda s: s ** 2  # noqa: E731
    res = volterra_solve(KernelFamily(0.5, 0.5, None, None), cg, g)
    i, k, X, Y = res.nodes
    m = -1 + 0.2 * i
    p = -1 + 0.2 * k
    assert np.allclose(res.values, (g(m) + g(p)) / 2)


def test_volterra_repr2_converges_to_solution(gauss, gauss_basis):
    sp = gauss_basis.splines()

    def H(x, y):
        return sp[2](x) * sp[2](y) / sp[2](-1.0) * np.exp(0.5 * (gauss.w(x) + gauss.w(y))
                                                         - gauss.log_z)

    errs = []
    for n in (16, 32):
        cg = CharacteristicGrid.build(gauss, -1, 1, n)
        res = volterra_solve(repr2_family(gauss), cg, lambda s: H(s, np.full_like(s, -1.0)))
        _, _, X, Y = res.nodes
        errs.append(np.max(np.abs(res.values - H(X, Y))))
        assert res.certificate < 1e-14
    assert errs[1] < 1e-3 and math.log2(errs[0] / errs[1]) > 1.8


def test_volterra_norms_below_bounds(gauss):
    cg = CharacteristicGrid.build(gauss, -1, 1, 10)
    norms, bounds, kappa = volterra_norms(repr2_family(gauss), cg, 4)
    assert kappa > 0
    assert np.all(norms <= bounds * (1 + 1e-12))


def test_volterra_norms_constant_kernel(uniform):
    cg = CharacteristicGrid.build(uniform, -1, 1, 12)
    norms, bounds, _ = volterra_norms(constant_family(1.0), cg, 4)
    ratios = norms / bounds
    exact = np.array([2 ** m * math.factorial(m) ** 2 / math.factorial(2 * m)
                      for m in range(1, 5)])
    assert ratios[0] == pytest.approx(1, abs=1e-12)
    assert np.max(np.abs(ratios - exact)) < 0.03


def test_constant_resolvent_matches_series():
    # kernel c = -C has resolvent density -C F(alpha beta / 2)
    C = 1.3
    al, be = np.meshgrid(np.linspace(0, 1, 6), np.linspace(0, 1, 6))
    dens = constant_resolvent_density(-C, al, be)
    assert np.max(np.abs(dens + C * bessel_series_F(C, 0.5 * al * be))) < 1e-10


def test_constant_kernel_iterates_exact():
    it = constant_kernel_iterates(2, 3)
    from fractions import Fraction
    assert it[0] == {(0, 0): Fraction(2)}
    assert it[1] == {(1, 1): Fraction(2)}
    assert it[2] == {(2, 2): Fraction(1, 2)}


# -- Bessel criterion ----------------------------------------------------------

def test_bessel_threshold_and_examples():
    assert bessel_threshold(1.0) == pytest.approx(-2.404825557695773 ** 2 / 2, rel=1e-10)
    assert bessel_positivity_criterion(-2.8, 1.0, run_solver=False).criterion
    assert not bessel_positivity_criterion(-3.0, 1.0).criterion
    assert bessel_positivity_criterion(0.0, 1.0, run_solver=False).criterion
    with pytest.raises(ValueError):
        bessel_positivity_criterion(0.0, 0.0)


def test_bessel_diagnostic_solution_goes_negative():
    # the constant-kernel solve is cos(sqrt(-a/2) D) with D = 2 for area 1
    rep = bessel_positivity_criterion(-2.8, 1.0, n=32)
    assert rep.criterion and rep.solution_nonnegative is False
    assert rep.solution_min == pytest.approx(math.cos(math.sqrt(5.6)), abs=2e-3)
    zero = bessel_positivity_criterion(0.0, 1.0, n=16)
    assert zero.solution_min == pytest.approx(1, abs=1e-12)


# -- hypotheses and surrogates ------------------------------------------------

def test_achour_trimeche_uniform_and_gauss(uniform, gauss):
    for prob in (uniform, gauss):
        rep = achour_trimeche_verify(prob, K=8, grid=400, heat_grid=15)
        assert rep.hypotheses and rep.symmetric and rep.log_concave
        assert rep.heat_min >= -1e-8


def test_achour_trimeche_anti_gauss():
    rep = achour_trimeche_verify(SLProblem.gaussian(1.0, sign=1.0), K=8, grid=400, heat_grid=15)
    assert not rep.hypotheses and not rep.log_concave
    assert len(rep.heat) == 1 and math.isfinite(rep.heat_min)


@settings(max_examples=8, deadline=None)
@given(st.floats(0, 2), st.floats(0, 1))
def test_log_concave_even_polynomials(c2, c4):
    prob = SLProblem.polynomial([0, 0, -c2, 0, -c4])
    rep = achour_trimeche_verify(prob, K=8, grid=400, heat_grid=11)
    assert rep.hypotheses
    assert rep.heat_min >= -rep.heat[0].tail_bound - 1e-8
    basis = solve_neumann_eigens(prob, 400, 8)
    assert basis.orthonormality_defect() < 1e-8
    assert np.max(parity_defect(basis)) < 1e-7


def test_proppsi(uniform, gauss):
    rep = proppsi_kernels(uniform, lambda X, Y: np.ones_like(X), 50)
    assert rep.K_plus_min == 0 and rep.K_minus_min == 0 and rep.defect_max == 0
    basis = solve_neumann_eigens(gauss, 100, 2, extrapolate=False)
    f = basis.eigenfunctions[1]
    sep = proppsi_kernels(gauss, 5 + np.outer(f, f), 100)
    assert np.max(np.abs(sep.defect)) < 1e-9
    cand = separated_psi_candidate(basis)
    assert np.all(np.isfinite(cand)) and cand[-1, -1] == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        proppsi_kernels(gauss, cand, 100)
    with pytest.raises(ValueError):
        proppsi_kernels(gauss, np.ones((3, 3)), 100)


def test_minimal_mass(uniform, gauss):
    rep = minimal_mass_check(uniform)
    assert rep.interior_limit_max == pytest.approx(0.5, abs=1e-6)
    assert rep.limit_max == pytest.approx(1, abs=1e-6) and rep.passes
    g = minimal_mass_check(gauss, "left")
    inner = (g.x > -0.9) & (g.x < 0.9)
    oracle = gauss.rho(-1.0) / (2 * gauss.rho(g.x[inner]))
    assert np.max(np.abs(g.limits[inner] - oracle)) < 1e-4
    with pytest.raises(ValueError):
        minimal_mass_check(uniform, r_list=(0.0, 0.1))


# -- problem definitions ---------------------------------------------------------

def test_problem_validation_and_json():
    with pytest.raises(DensityError):
        SLProblem.polynomial([0], 1, -1)
    with pytest.raises(DensityError):
        SLProblem.polynomial([0, 0, -100])
    assert SLProblem.polynomial([0, 0, -100], diagnostic=True).diagnostic
    with pytest.raises(DensityError):
        SLProblem.trig_jacobi(0.5, 0.5, 0.0, 1.0)
    p = SLProblem.from_json(json.dumps({"a": -1, "b": 1, "log_density":
                                        {"kind": "polynomial", "coefficients": [0, 0, -1]}}))
    assert p.rho(0.3) == pytest.approx(SLProblem.gaussian(1.0).rho(0.3))
    xs = np.linspace(-1, 1, 41)
    s = SLProblem.from_dict({"log_density": {"kind": "samples", "x": xs.tolist(),
                                             "w": (-xs ** 2).tolist()}})
    assert s.rho(0.3) == pytest.approx(p.rho(0.3), rel=1e-5)
    with pytest.raises(ValueError):
        SLProblem.from_dict({"log_density": {"kind": "spline"}})
    with pytest.raises(ValueError):
        SLProblem.from_dict({})
    with pytest.raises(ValueError):
        p.endpoint("middle")


def test_density_normalized(gauss):
    from scipy.integrate import quad
    assert quad(gauss.rho, -1, 1)[0] == pytest.approx(1, rel=1e-12)
