"""Shared numerical substrate.

Jacobi-weight quadrature (Golub-Welsch), orthonormal three-term recurrences,
a small exact-capable dense polynomial type, a series root finder for the
Bessel-type function G(x) = sum (-x^2/4)^n / (n!)^2, and a nonnegative
least-squares simplex membership test.

Measures on [-1, 1] are parametrized by (p, q):

    mu_{p,q}(dx) = C_{p,q} (1 - x)^{(q-2)/2} (1 + x)^{(p-2)/2} dx,

so the classical Jacobi exponents are alpha = (q-2)/2, beta = (p-2)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.optimize import brentq, nnls


class QuadratureError(RuntimeError):
    """Raised when the tridiagonal eigen-solve for a Gauss rule fails."""


class NoSignChangeError(ValueError):
    """Raised when a root bracket does not contain a sign change."""


def _check_pq(p: float, q: float) -> None:
    if not (p > 0 and q > 0):
        raise ValueError(f"need p > 0 and q > 0, got p={p}, q={q}")


# ---------------------------------------------------------------------------
# Recurrence coefficients
# ---------------------------------------------------------------------------

def jacobi_recurrence(p, q, n: int, exact: bool = False):
    """Monic recurrence coefficients for mu_{p,q}.

    Returns ``(a, b)`` with ``a[0..n-1]`` the diagonal and ``b[1..n-1]`` the
    squared off-diagonal entries of the Jacobi matrix, so that the monic
    polynomials satisfy ``P_{m+1} = (x - a_m) P_m - b_m P_{m-1}``. ``b[0]`` is
    set to 1 (the total mass). With ``exact=True`` the coefficients are
    ``Fraction`` objects built from the exact binary values of p and q.
    """
    _check_pq(float(p), float(q))
    if exact:
        one = Fraction(1)
        al = (Fraction(q) - 2) / 2
        be = (Fraction(p) - 2) / 2
    else:
        one = 1.0
        al = (q - 2.0) / 2.0
        be = (p - 2.0) / 2.0
    a = [one * 0] * n
    b = [one * 0] * n
    for m in range(n):
        s = 2 * m + al + be
        if m == 0:
            a[m] = (be - al) / (al + be + 2)
        else:
            a[m] = (be * be - al * al) / (s * (s + 2))
        if m == 0:
            b[m] = one
        elif m == 1:
            b[m] = 4 * (1 + al) * (1 + be) / ((2 + al + be) ** 2 * (3 + al + be))
        else:
            b[m] = 4 * m * (m + al) * (m + be) * (m + al + be) / (s * s * (s + 1) * (s - 1))
    if exact:
        return a, b
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    param_p: float
    param_q: float
    order: int

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate sampled values (last axis = nodes) against the rule."""
        return np.asarray(values) @ self.weights


def gauss_jacobi_rule(p: float, q: float, order: int) -> QuadratureRule:
    """Gauss rule for the probability measure mu_{p,q} by Golub-Welsch.

    The weights are renormalized to sum exactly to 1.
    """
    _check_pq(p, q)
    if order < 1:
        raise ValueError("order must be >= 1")
    a, b = jacobi_recurrence(p, q, order)
    if order == 1:
        return QuadratureRule(np.array([a[0]]), np.array([1.0]), float(p), float(q), 1)
    try:
        nodes, vecs = eigh_tridiagonal(a, np.sqrt(b[1:]))
    except (LinAlgError, ValueError) as exc:
        raise QuadratureError(f"eigen-solve failed for p={p}, q={q}, order={order}") from exc
    w = vecs[0, :] ** 2
    w = w / w.sum()
    return QuadratureRule(nodes, w, float(p), float(q), order)


def tensor_rule(r1: QuadratureRule, r2: QuadratureRule):
    """Tensor-product nodes ``(U, V)`` and weights ``W`` of shape (n1, n2)."""
    U, V = np.meshgrid(r1.nodes, r2.nodes, indexing="ij")
    return U, V, np.outer(r1.weights, r2.weights)


# ---------------------------------------------------------------------------
# Orthonormal recurrence evaluation
# ---------------------------------------------------------------------------

def recurrence_table(p: float, q: float, kmax: int, x) -> np.ndarray:
    """Values of the orthonormal P_0..P_kmax at ``x``; shape (kmax+1, *x.shape).

    Normalization is L^2(mu_{p,q}) with positive leading coefficient, which
    forces P_k(1) > 0. Complex ``x`` is accepted.
    """
    x = np.asarray(x)
    dtype = np.result_type(x.dtype, float)
    a, b = jacobi_recurrence(p, q, kmax + 1)
    sb = np.sqrt(b)
    out = np.empty((kmax + 1,) + x.shape, dtype=dtype)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = (x - a[0]) / sb[1]
    for m in range(1, kmax):
        out[m + 1] = ((x - a[m]) * out[m] - sb[m] * out[m - 1]) / sb[m + 1]
    return out


def recurrence_eval(p: float, q: float, k: int, x):
    """Value of the normalized Jacobi polynomial P_k^{p,q} at ``x``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    val = recurrence_table(p, q, k, x)[k]
    return val[()] if np.ndim(val) == 0 else val


def values_at_one(p: float, q: float, kmax: int) -> np.ndarray:
    return recurrence_table(p, q, kmax, np.array(1.0))


# ---------------------------------------------------------------------------
# Dense polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensePolynomial:
    """Polynomial in the monomial basis, lowest degree first.

    Coefficients may be floats, complex numbers or ``Fraction`` objects; the
    arithmetic never coerces, so exact rational computations stay exact.
    """

    coefficients: tuple

    def __post_init__(self):
        c = list(self.coefficients)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0]
        object.__setattr__(self, "coefficients", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def __add__(self, other: "DensePolynomial") -> "DensePolynomial":
        n = max(len(self.coefficients), len(other.coefficients))
        zero = self.coefficients[0] * 0
        c1 = list(self.coefficients) + [zero] * (n - len(self.coefficients))
        c2 = list(other.coefficients) + [zero] * (n - len(other.coefficients))
        return DensePolynomial(tuple(u + v for u, v in zip(c1, c2)))

    def __mul__(self, other):
        if isinstance(other, DensePolynomial):
            zero = self.coefficients[0] * 0
            out = [zero] * (len(self.coefficients) + len(other.coefficients) - 1)
            for i, u in enumerate(self.coefficients):
                for j, v in enumerate(other.coefficients):
                    out[i + j] = out[i + j] + u * v
            return DensePolynomial(tuple(out))
        return DensePolynomial(tuple(c * other for c in self.coefficients))

    __rmul__ = __mul__

    def __sub__(self, other: "DensePolynomial") -> "DensePolynomial":
        return self + other * -1

    def derivative(self) -> "DensePolynomial":
        c = self.coefficients
        if len(c) == 1:
            return DensePolynomial((c[0] * 0,))
        return DensePolynomial(tuple(c[m] * m for m in range(1, len(c))))

    def shift(self, h) -> "DensePolynomial":
        """Coefficients of ``y -> self(y + h)``, i.e. re-expansion about -h."""
        res = DensePolynomial((self.coefficients[0] * 0,))
        lin = DensePolynomial((h, h * 0 + 1))
        for c in reversed(self.coefficients):
            res = res * lin + DensePolynomial((c,))
        return res

    def as_float(self) -> np.ndarray:
        return np.array([complex(c) if isinstance(c, complex) else float(c) for c in self.coefficients])


# ---------------------------------------------------------------------------
# Series root finding
# ---------------------------------------------------------------------------

def bessel_g_term(n: int, x: float) -> float:
    """n-th term of G(x) = sum_n (-x^2/4)^n / (n!)^2."""
    return (-x * x / 4.0) ** n / math.factorial(n) ** 2


def sum_series(term: Callable[[int, float], float], x: float, tol: float, nmax: int = 400) -> float:
    """Sum a factorially decaying series with a tail bound below tol/10.

    Summation stops once a term is below tol/10 and consecutive term ratios
    are below 1/2, so the neglected tail is bounded by twice the next term.
    """
    total = 0.0
    prev = None
    for n in range(nmax):
        t = term(n, x)
        total += t
        if prev is not None and prev != 0:
            ratio = abs(t / prev)
            if abs(t) < tol / 10 and ratio < 0.5:
                return total
        prev = t
    raise RuntimeError("series did not reach the tail criterion")


def find_root_series(term: Callable[[int, float], float], bracket: tuple[float, float],
                     tol: float = 1e-12) -> float:
    """Root of ``x -> sum_n term(n, x)`` inside ``bracket`` by Brent's method."""
    lo, hi = bracket
    f = lambda x: sum_series(term, x, tol * 1e-3)  # noqa: E731
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChangeError(f"no sign change on [{lo}, {hi}]: G={flo:.3g}, {fhi:.3g}")
    return brentq(f, lo, hi, xtol=tol / 10, rtol=4 * np.finfo(float).eps, maxiter=200)


def bessel_first_zero(tol: float = 1e-12) -> float:
    """First positive zero mu_0 of G, i.e. of the Bessel function J_0."""
    return find_root_series(bessel_g_term, (2.0, 3.0), tol)


# ---------------------------------------------------------------------------
# Measures and simplex membership
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasureOnGrid:
    support: np.ndarray
    masses: np.ndarray
    probability: bool = False

    def __post_init__(self):
        if len(self.support) != len(self.masses):
            raise ValueError("support and masses differ in length")

    def check_probability(self, tol: float = 1e-10) -> bool:
        m = np.asarray(self.masses)
        return bool(np.all(m.real >= -tol) and abs(m.sum() - 1) <= tol)


@dataclass(frozen=True)
class Infeasible:
    """Certificate that a target is outside the cone/simplex of generators."""

    violation: float
    best_weights: np.ndarray


def nnls_simplex_membership(targets: Sequence[float], generators: np.ndarray,
                            tol: float = 1e-10):
    """Nonnegative weights nu with generators @ nu = targets, or Infeasible.

    The first row of ``generators`` must be all ones, which turns the cone
    condition into membership of the convex hull of the columns.
    """
    G = np.asarray(generators, dtype=float)
    t = np.asarray(targets, dtype=float)
    if G.ndim != 2 or G.shape[0] != t.shape[0]:
        raise ValueError(f"dimension mismatch: generators {G.shape}, targets {t.shape}")
    if not np.allclose(G[0], 1.0, atol=1e-12):
        raise ValueError("first generator row must be all ones")
    nu, _ = nnls(G, t, maxiter=50 * G.shape[1])
    violation = float(np.max(np.abs(G @ nu - t)))
    if violation > tol:
        return Infeasible(violation, nu)
    return MeasureOnGrid(np.arange(G.shape[1]), nu, probability=True)
