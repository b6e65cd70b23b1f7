"""Jacobi polynomials for mu_{p,q} and the positive product formula.

The polynomials P_k are orthonormal in L^2(mu_{p,q}) with P_k(1) > 0 and
are eigenfunctions of

    L_{p,q} f = (1 - x^2) f'' - (q (x+1)/2 + p (x-1)/2) f'

with eigenvalue -k((p+q)/2 + k - 1). For q > p > 1 the normalized value
P_k(x)/P_k(1) is the k-th moment of a complex variable built from
mu_{p,q-p} (x) mu_{p-1,p-1}; combined with the expansion of P_k in powers of
(s+1) this yields an explicit nonnegative measure m(s, t, dz) with

    P_k(s) P_k(t) / P_k(1) = int P_k(z) m(s, t, dz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .numerics import (
    DensePolynomial, QuadratureRule, gauss_jacobi_rule, jacobi_recurrence, recurrence_table,
    tensor_rule)


class InvalidParameterRegion(ValueError):
    pass


class DegenerateAnchorError(ValueError):
    """Raised for |s + t| <= delta; use the expansion route instead."""


@dataclass(frozen=True)
class JacobiParams:
    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError(f"need p > 0 and q > 0, got ({self.p}, {self.q})")

    @property
    def alpha(self) -> float:
        return (self.q - 2) / 2

    @property
    def beta(self) -> float:
        return (self.p - 2) / 2

    @property
    def koornwinder_valid(self) -> bool:
        return self.q > self.p > 1

    def eigenvalue(self, k):
        """lambda_k with L P_k = -lambda_k P_k."""
        k = np.asarray(k, dtype=float)
        return k * ((self.p + self.q) / 2 + k - 1)


@lru_cache(maxsize=64)
def _exact_monic(p: float, q: float, kmax: int) -> tuple:
    a, b = jacobi_recurrence(p, q, kmax + 1, exact=True)
    x = DensePolynomial((Fraction(0), Fraction(1)))
    polys = [DensePolynomial((Fraction(1),))]
    if kmax >= 1:
        polys.append(x - DensePolynomial((a[0],)))
    for m in range(1, kmax):
        polys.append((x - DensePolynomial((a[m],))) * polys[m] - polys[m - 1] * b[m])
    return tuple(polys), tuple(b)


@dataclass(frozen=True, eq=False)
class JacobiBasis:
    params: JacobiParams
    max_degree: int
    rec_a: np.ndarray = field(repr=False)
    rec_b: np.ndarray = field(repr=False)
    values_at_one: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, params: JacobiParams, max_degree: int) -> "JacobiBasis":
        a, b = jacobi_recurrence(params.p, params.q, max_degree + 1)
        v1 = recurrence_table(params.p, params.q, max_degree, np.array(1.0))
        return cls(params, max_degree, a, b, v1)

    def table(self, x) -> np.ndarray:
        return recurrence_table(self.params.p, self.params.q, self.max_degree, x)

    def monic_exact(self, k: int) -> DensePolynomial:
        return _exact_monic(self.params.p, self.params.q, self.max_degree)[0][k]

    def normalized_polynomial(self, k: int) -> DensePolynomial:
        """Monomial coefficients of the orthonormal P_k (floats)."""
        monic = self.monic_exact(k)
        b = _exact_monic(self.params.p, self.params.q, self.max_degree)[1]
        h = math.prod(float(bi) for bi in b[1:k + 1]) if k else 1.0
        return DensePolynomial(tuple(float(c) / math.sqrt(h) for c in monic.coefficients))

    def ratio_polynomial(self, k: int) -> DensePolynomial:
        """Exact coefficients of P_k(x) / P_k(1)."""
        monic = self.monic_exact(k)
        return monic * (1 / monic(Fraction(1)))


def jacobi_basis(p: float, q: float, max_degree: int) -> JacobiBasis:
    return JacobiBasis.build(JacobiParams(p, q), max_degree)


def default_order(k: int) -> int:
    return max(40, 4 * k)


# ---------------------------------------------------------------------------
# The operator
# ---------------------------------------------------------------------------

def apply_L(params: JacobiParams, poly: DensePolynomial) -> DensePolynomial:
    """L_{p,q} on a polynomial, coefficientwise (exact for Fraction input)."""
    c = poly.coefficients
    n = len(c)
    exact = isinstance(c[0], Fraction)
    p = Fraction(params.p) if exact else params.p
    q = Fraction(params.q) if exact else params.q
    zero = c[0] * 0

    def get(j):
        return c[j] if 0 <= j < n else zero

    out = []
    for j in range(n):
        out.append(get(j + 2) * (j + 2) * (j + 1) - get(j) * j * (j - 1)
                   - (p + q) / 2 * j * get(j) - (q - p) / 2 * (j + 1) * get(j + 1))
    return DensePolynomial(tuple(out))


def eigen_residual(basis: JacobiBasis, k: int, exact: bool = False) -> float:
    """Relative coefficient residual of L P_k + lambda_k P_k.

    The float route uses the orthonormal coefficients rounded to doubles and
    divides by lambda_k times the largest coefficient; the exact route works
    on the rational monic polynomial and must return 0.
    """
    prm = basis.params
    if exact:
        P = basis.monic_exact(k)
        lam = Fraction(k) * ((Fraction(prm.p) + Fraction(prm.q)) / 2 + k - 1)
        res = apply_L(prm, P) + P * lam
        return float(max(abs(c) for c in res.coefficients))
    P = basis.normalized_polynomial(k)
    lam = float(prm.eigenvalue(k))
    res = apply_L(prm, P) + P * lam
    scale = max(1.0, lam) * max(abs(c) for c in P.coefficients)
    return float(max(abs(c) for c in res.coefficients) / scale)


def trig_form_apply(params: JacobiParams, g, theta: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """(1/4)[g'' + ((q-1) cot - (p-1) tan) g'] by central differences in theta."""
    g0, gp, gm = g(theta), g(theta + h), g(theta - h)
    d1 = (gp - gm) / (2 * h)
    d2 = (gp - 2 * g0 + gm) / h ** 2
    drift = (params.q - 1) / np.tan(theta) - (params.p - 1) * np.tan(theta)
    return (d2 + drift * d1) / 4


# ---------------------------------------------------------------------------
# Expansion about -1 and the addition-type identity
# ---------------------------------------------------------------------------

def bateman_coeffs_exact(basis: JacobiBasis, k: int) -> tuple:
    """b_{k,r} with P_k(s)/P_k(1) = sum_r b_{k,r} (s+1)^r, as Fractions."""
    return basis.ratio_polynomial(k).shift(Fraction(-1)).coefficients


def bateman_coeffs(basis: JacobiBasis, k: int) -> np.ndarray:
    if k > basis.max_degree:
        raise ValueError("k exceeds the basis degree")
    c = bateman_coeffs_exact(basis, k)
    out = np.zeros(k + 1)
    out[:len(c)] = [float(v) for v in c]
    return out


def bateman_rhs(basis: JacobiBasis, k: int, s, t, exact: bool = False):
    """sum_r b_{k,r} (s+t)^r P_r(x*)/P_r(1), x* = (1+st)/(s+t), without dividing.

    Each term is expanded as sum_j c_j^{(r)} (1+st)^j (s+t)^{r-j}, which stays
    finite through s + t = 0. The coefficients alternate in sign, so the
    float sum loses a few digits for k near 10; ``exact=True`` evaluates the
    whole expression in rational arithmetic at the (exact) binary anchors
    and rounds once.
    """
    if k > basis.max_degree:
        raise ValueError("k exceeds the basis degree")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if exact:
        coeffs = [basis.ratio_polynomial(r).coefficients for r in range(k + 1)]
        b = bateman_coeffs_exact(basis, k)
        out = np.empty(np.broadcast(s, t).shape)
        for idx, (si, ti) in zip(np.ndindex(out.shape), np.broadcast(s, t)):
            fs, ft = Fraction(float(si)), Fraction(float(ti))
            num, den = 1 + fs * ft, fs + ft
            total = Fraction(0)
            for r, br in enumerate(b):
                total += br * sum(cj * num ** j * den ** (r - j) for j, cj in enumerate(coeffs[r]))
            out[idx] = float(total)
        return out[()] if out.ndim == 0 else out
    b = bateman_coeffs(basis, k)
    num, den = 1 + s * t, s + t
    total = np.zeros(np.broadcast(s, t).shape)
    for r in range(k + 1):
        c = basis.ratio_polynomial(r).coefficients
        term = np.zeros_like(total)
        for j, cj in enumerate(c):
            term = term + float(cj) * num ** j * den ** (r - j)
        total = total + b[r] * term
    return total


def bateman_identity_residual(basis: JacobiBasis, k: int, s, t) -> float:
    vals = basis.table(np.stack(np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))))
    lhs = vals[k, 0] * vals[k, 1] / basis.values_at_one[k] ** 2
    return float(np.max(np.abs(lhs - bateman_rhs(basis, k, s, t))))


# ---------------------------------------------------------------------------
# Moment representation
# ---------------------------------------------------------------------------

def koornwinder_rule(params: JacobiParams, order: int):
    if not params.koornwinder_valid:
        raise InvalidParameterRegion(f"need q > p > 1, got ({params.p}, {params.q})")
    return tensor_rule(gauss_jacobi_rule(params.p, params.q - params.p, order),
                       gauss_jacobi_rule(params.p - 1, params.p - 1, order))


def koornwinder_integrand(x, U, V):
    """(2(1+x) - (1-x)(1+u))/4 + i sqrt(1-x^2) sqrt((1+u)/2) v."""
    x = np.asarray(x, dtype=float)[..., None, None]
    re = (2 * (1 + x) - (1 - x) * (1 + U)) / 4
    im = np.sqrt(np.clip(1 - x * x, 0, None)) * np.sqrt((1 + U) / 2) * V
    return re + 1j * im


def koornwinder_eval(params: JacobiParams, k: int, x, rule_uv=None, imag_tol: float = 1e-10):
    """P_k(x)/P_k(1) as the k-th moment of the complex integrand."""
    U, V, W = rule_uv if rule_uv is not None else koornwinder_rule(params, default_order(k))
    x = np.asarray(x, dtype=float)
    w = koornwinder_integrand(x, U, V)
    val = np.sum(w ** k * W, axis=(-2, -1))
    imag = float(np.max(np.abs(val.imag)))
    if imag > imag_tol:
        raise ArithmeticError(f"imaginary part {imag:.3g} does not vanish")
    out = val.real
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    s: float
    t: float
    support: np.ndarray
    masses: np.ndarray

    def integrate(self, f) -> np.ndarray:
        return np.asarray(f(self.support)) @ self.masses


def gasper_measure(params: JacobiParams, s: float, t: float, rule_uv=None,
                   delta: float = 1e-3) -> ProductMeasure:
    """Image of mu_{p,q-p} (x) mu_{p-1,p-1} under (u, v) -> (s+t) psi - 1."""
    if not params.koornwinder_valid:
        raise InvalidParameterRegion(f"need q > p > 1, got ({params.p}, {params.q})")
    if not (-1 < s < 1 and -1 < t < 1):
        raise ValueError("anchors must lie in (-1, 1)")
    if abs(s + t) <= delta:
        raise DegenerateAnchorError(f"|s+t| = {abs(s + t):.3g} <= {delta}; use bateman_rhs")
    U, V, W = rule_uv if rule_uv is not None else koornwinder_rule(params, 40)
    x = (1 + s * t) / (s + t)
    r = np.sqrt(x * x - 1)
    psi = (2 * (1 + x) - (1 - x) * (1 + U)) / 4 + r * np.sqrt((1 + U) / 2) * V
    z = (s + t) * psi - 1
    return ProductMeasure(float(s), float(t), z.ravel(), W.ravel())


def product_formula_residual(basis: JacobiBasis, s: float, t: float, kmax: int | None = None,
                             rule_uv=None, route: str = "measure") -> float:
    """max_k |int P_k dm(s,t) - P_k(s) P_k(t) / P_k(1)| over k <= kmax."""
    kmax = basis.max_degree if kmax is None else kmax
    v1 = basis.values_at_one[:kmax + 1]
    st = basis.table(np.array([s, t]))[:kmax + 1]
    rhs = st[:, 0] * st[:, 1] / v1
    if route == "measure":
        m = gasper_measure(basis.params, s, t, rule_uv)
        lhs = basis.table(m.support)[:kmax + 1] @ m.masses
    elif route == "bateman":
        lhs = np.array([bateman_rhs(basis, k, s, t, exact=True) for k in range(kmax + 1)]) * v1
    else:
        raise ValueError(f"unknown route {route!r}")
    return float(np.max(np.abs(lhs - rhs)))


def gasper_positivity_region(p: float, q: float) -> bool:
    return bool(q >= p and (p >= 1 or p + q >= 4))


# ---------------------------------------------------------------------------
# Truncated kernel
# ---------------------------------------------------------------------------

def gasper_kernel_truncated(basis: JacobiBasis, K: int, t_reg: float, x, y, z):
    if K > basis.max_degree:
        raise ValueError("K exceeds the basis degree")
    w = np.exp(-basis.params.eigenvalue(np.arange(K + 1)) * t_reg) / basis.values_at_one[:K + 1]
    X, Y, Z = (basis.table(np.asarray(v, dtype=float))[:K + 1] for v in (x, y, z))
    return np.einsum("k,k...,k...,k...->...", w, X, Y, Z)


@dataclass(frozen=True)
class KernelScan:
    min_value: float
    argmin: tuple
    grid: int
    K: int
    t_reg: float


def kernel_scan(basis: JacobiBasis, K: int, t_reg: float, n: int = 15) -> KernelScan:
    """Minimum of the truncated kernel over an n^3 grid of [-1, 1]^3."""
    g = np.linspace(-1, 1, n)
    T = basis.table(g)[:K + 1]
    w = np.exp(-basis.params.eigenvalue(np.arange(K + 1)) * t_reg) / basis.values_at_one[:K + 1]
    vals = np.einsum("k,kx,ky,kz->xyz", w, T, T, T)
    idx = np.unravel_index(np.argmin(vals), vals.shape)
    return KernelScan(float(vals[idx]), tuple(float(g[i]) for i in idx), n, K, t_reg)


# ---------------------------------------------------------------------------
# The symmetric case
# ---------------------------------------------------------------------------

def ultraspherical_product_check(p: float, k: int, l: int, z_grid=None,
                                 order: int | None = None) -> float:
    """max_z |int P_k(x) P_l(zx + sqrt(1-z^2) sqrt(1-x^2) t) - delta_kl P_k(z)/P_k(1)|."""
    if p <= 1:
        raise InvalidParameterRegion("need p > 1")
    order = default_order(max(k, l)) if order is None else order
    X, T, W = tensor_rule(gauss_jacobi_rule(p, p, order), gauss_jacobi_rule(p - 1, p - 1, order))
    z = np.linspace(-1, 1, 21) if z_grid is None else np.asarray(z_grid, dtype=float)
    n = max(k, l)
    Pk = recurrence_table(p, p, n, X)[k]
    arg = z[:, None, None] * X + np.sqrt(1 - z[:, None, None] ** 2) * np.sqrt(1 - X ** 2) * T
    Pl = recurrence_table(p, p, n, arg)[l]
    lhs = np.sum(Pk * Pl * W, axis=(1, 2))
    if k == l:
        tab = recurrence_table(p, p, n, z)
        rhs = tab[k] / recurrence_table(p, p, n, np.array(1.0))[k]
    else:
        rhs = np.zeros_like(z)
    return float(np.max(np.abs(lhs - rhs)))


def ultraspherical_koornwinder(p: float, k: int, x, rule_v: QuadratureRule | None = None,
                               imag_tol: float = 1e-10):
    """P_k(x)/P_k(1) for p = q as the k-th moment of x + i sqrt(1-x^2) v."""
    if p <= 1:
        raise InvalidParameterRegion("need p > 1")
    rule = rule_v if rule_v is not None else gauss_jacobi_rule(p - 1, p - 1, default_order(k))
    x = np.asarray(x, dtype=float)
    w = x[..., None] + 1j * np.sqrt(np.clip(1 - x[..., None] ** 2, 0, None)) * rule.nodes
    val = (w ** k) @ rule.weights
    imag = float(np.max(np.abs(val.imag)))
    if imag > imag_tol:
        raise ArithmeticError(f"imaginary part {imag:.3g} does not vanish")
    out = val.real
    return out[()] if out.ndim == 0 else out


def limit_consistency_check(p: float, q_list, k: int, x: float) -> np.ndarray:
    """|koornwinder(p, q) - ultraspherical(p)| for q decreasing to p."""
    q_list = list(q_list)
    if any(q <= p for q in q_list) or any(b >= a for a, b in zip(q_list, q_list[1:])):
        raise ValueError("q_list must decrease strictly towards p from above")
    ref = ultraspherical_koornwinder(p, k, x)
    return np.array([abs(koornwinder_eval(JacobiParams(p, q), k, x) - ref) for q in q_list])
