"""Neumann Sturm-Liouville bases, heat kernels and the modified wave equation.

A problem is a density rho = e^w / Z on [a, b] with operator
L f = f'' + w' f'. Its Neumann eigenbasis has the hypergroup property at an
endpoint x0 exactly when the wave equation L_x F = L_y F with data at
y = x0 preserves positivity. This module discretizes the eigenproblem, the
heat kernels, the wave equation and the characteristic integral identities,
and implements the Volterra series attached to those identities.

Characteristic coordinates: a point (x, y) above the base line y = y0 has
feet m = x - (y - y0) and p = x + (y - y0); the triangle Delta_M under M is
{M_m <= m <= p <= M_p} and dx dy = dm dp / 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .numerics import bessel_first_zero, bessel_g_term, sum_series

SQRT2 = math.sqrt(2.0)


class DensityError(ValueError):
    pass


class EigenCollisionError(RuntimeError):
    pass


class VanishingBaseValue(ValueError):
    pass


# ---------------------------------------------------------------------------
# Problem definition
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SLProblem:
    """Density rho = exp(w) / Z on [a, b]; ``w`` and ``dw`` must be vectorized."""

    a: float
    b: float
    w: Callable = field(repr=False)
    dw: Callable = field(repr=False)
    d2w: Callable | None = field(default=None, repr=False)
    name: str = "custom"
    smoothness: int = 2
    diagnostic: bool = False
    log_z: float = field(default=0.0, init=False, repr=False)

    def __post_init__(self):
        if not self.a < self.b:
            raise DensityError("need a < b")
        xs = np.linspace(self.a, self.b, 4001)
        wv = np.asarray(self.w(xs), dtype=float)
        if not np.all(np.isfinite(wv)):
            raise DensityError("density is not bounded above and away from 0 on [a, b]")
        span = float(wv.max() - wv.min())
        if span > 60 and not self.diagnostic:
            raise DensityError(f"log-density range {span:.3g} is too wide to be bounded away from 0")
        shift = float(wv.max())
        z, _ = quad(lambda x: math.exp(float(self.w(np.array(x))) - shift), self.a, self.b,
                    limit=200, epsabs=0, epsrel=1e-13)
        object.__setattr__(self, "log_z", shift + math.log(z))

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def rho(self, x):
        return np.exp(np.asarray(self.w(x), dtype=float) - self.log_z)

    def drift(self, x):
        return np.asarray(self.dw(x), dtype=float)

    def second(self, x, h: float = 1e-4):
        if self.d2w is not None:
            return np.asarray(self.d2w(x), dtype=float)
        x = np.asarray(x, dtype=float)
        return (self.drift(x + h) - self.drift(x - h)) / (2 * h)

    def a_plus(self, x, y):
        return (self.drift(x) + self.drift(y)) / SQRT2

    def a_minus(self, x, y):
        return (self.drift(y) - self.drift(x)) / SQRT2

    def endpoint(self, x0) -> float:
        if x0 in ("left", "a"):
            return self.a
        if x0 in ("right", "b"):
            return self.b
        raise ValueError(f"x0 must be 'left' or 'right', got {x0!r}")

    # -- factories ----------------------------------------------------------
    @classmethod
    def polynomial(cls, coefficients, a: float = -1.0, b: float = 1.0, name: str = "polynomial",
                   diagnostic: bool = False) -> "SLProblem":
        P = np.polynomial.Polynomial(coefficients)
        d1, d2 = P.deriv(1), P.deriv(2)
        return cls(a, b, P, d1, d2, name, smoothness=10 ** 6, diagnostic=diagnostic)

    @classmethod
    def uniform(cls, b: float = 1.0) -> "SLProblem":
        return cls.polynomial([0.0], -b, b, "uniform")

    @classmethod
    def gaussian(cls, sigma: float = 1.0, b: float = 1.0, sign: float = -1.0) -> "SLProblem":
        """rho proportional to exp(sign * x^2 / sigma^2) on [-b, b]."""
        name = "gauss" if sign < 0 else "anti-gauss"
        return cls.polynomial([0.0, 0.0, sign / sigma ** 2], -b, b, name)

    @classmethod
    def samples(cls, x, w, name: str = "samples", diagnostic: bool = False) -> "SLProblem":
        x = np.asarray(x, dtype=float)
        spline = CubicSpline(x, np.asarray(w, dtype=float), bc_type="not-a-knot")
        return cls(float(x[0]), float(x[-1]), spline, spline.derivative(1), spline.derivative(2),
                   name, smoothness=2, diagnostic=diagnostic)

    @classmethod
    def trig_jacobi(cls, alpha: float, beta: float, a: float, b: float) -> "SLProblem":
        """Drift alpha tan x - beta cot x on [a, b] inside (0, pi/2); diagnostic only."""
        if not (0 < a < b < math.pi / 2):
            raise DensityError("the density degenerates at 0 and pi/2; choose a subinterval")
        w = lambda x: -alpha * np.log(np.cos(x)) - beta * np.log(np.sin(x))  # noqa: E731
        dw = lambda x: alpha * np.tan(x) - beta / np.tan(x)  # noqa: E731
        d2w = lambda x: alpha / np.cos(x) ** 2 + beta / np.sin(x) ** 2  # noqa: E731
        return cls(a, b, w, dw, d2w, "trig-jacobi", smoothness=10 ** 6, diagnostic=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SLProblem":
        ld = d.get("log_density")
        if ld is None or "kind" not in ld:
            raise ValueError("missing log_density.kind")
        a, b = float(d.get("a", -1.0)), float(d.get("b", 1.0))
        diag = bool(d.get("diagnostic", False))
        if ld["kind"] == "polynomial":
            return cls.polynomial(ld["coefficients"], a, b, diagnostic=diag)
        if ld["kind"] == "samples":
            return cls.samples(ld["x"], ld["w"], diagnostic=diag)
        if ld["kind"] == "trig-jacobi":
            return cls.trig_jacobi(ld["alpha"], ld["beta"], a, b)
        raise ValueError(f"unknown log_density kind {ld['kind']!r}")

    @classmethod
    def from_json(cls, text: str) -> "SLProblem":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Discrete operator and eigenbasis
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FluxGrid:
    """Uniform grid with the symmetric flux-form discretization of -(rho f')'."""

    x: np.ndarray
    h: float
    rho: np.ndarray
    rho_half: np.ndarray
    mass: np.ndarray

    @classmethod
    def build(cls, problem: SLProblem, n: int) -> "FluxGrid":
        x = np.linspace(problem.a, problem.b, n + 1)
        h = (problem.b - problem.a) / n
        rho = problem.rho(x)
        rho_half = problem.rho(0.5 * (x[1:] + x[:-1]))
        trap = np.full(n + 1, h)
        trap[[0, -1]] = h / 2
        return cls(x, h, rho, rho_half, trap * rho)

    @property
    def n(self) -> int:
        return len(self.x) - 1

    def apply_L(self, F: np.ndarray, axis: int = 0) -> np.ndarray:
        """Discrete L along ``axis`` with mirrored ghost points (Neumann)."""
        F = np.moveaxis(np.asarray(F), axis, 0)
        d = np.diff(F, axis=0)
        shape = (-1,) + (1,) * (F.ndim - 1)
        flux = self.rho_half.reshape(shape) * d
        out = np.empty_like(F, dtype=float)
        out[1:-1] = flux[1:] - flux[:-1]
        out[0] = 2 * flux[0]
        out[-1] = -2 * flux[-1]
        out = out / (self.h ** 2 * self.rho.reshape(shape))
        return np.moveaxis(out, 0, axis)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    problem: SLProblem
    grid: FluxGrid
    eigenvalues: np.ndarray
    raw_eigenvalues: np.ndarray
    coarse_eigenvalues: np.ndarray | None
    eigenfunctions: np.ndarray
    weights: np.ndarray

    @property
    def K(self) -> int:
        return len(self.eigenvalues) - 1

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def orthonormality_defect(self) -> float:
        G = (self.eigenfunctions * self.weights) @ self.eigenfunctions.T
        return float(np.max(np.abs(G - np.eye(self.K + 1))))

    def splines(self) -> list:
        return [CubicSpline(self.x, f) for f in self.eigenfunctions]

    def evaluate(self, x) -> np.ndarray:
        """Eigenfunctions at arbitrary points by cubic-spline interpolation."""
        x = np.asarray(x, dtype=float)
        if x.size == len(self.x) and np.array_equal(x.ravel(), self.x):
            return self.eigenfunctions.reshape((self.K + 1,) + x.shape)
        return np.stack([s(x) for s in self.splines()])

    def endpoint_values(self, x0) -> np.ndarray:
        idx = 0 if self.problem.endpoint(x0) == self.problem.a else -1
        return self.eigenfunctions[:, idx]


def _raw_eigens(problem: SLProblem, n: int, K: int):
    g = FluxGrid.build(problem, n)
    s = 1 / np.sqrt(g.mass)
    diag = np.zeros(n + 1)
    diag[:-1] += g.rho_half / g.h
    diag[1:] += g.rho_half / g.h
    off = -g.rho_half / g.h
    try:
        lam, vec = eigh_tridiagonal(diag * s * s, off * s[:-1] * s[1:], select="i",
                                    select_range=(0, K))
    except Exception as exc:  # scipy raises LinAlgError or ValueError
        raise RuntimeError(f"eigen-solve failed for n={n}, K={K}") from exc
    f = vec * s[:, None] * math.sqrt(g.mass.sum())
    return g, lam, f.T


def solve_neumann_eigens(problem: SLProblem, grid_size: int, K: int,
                         extrapolate: bool = True, gap_tol: float = 1e-8,
                         min_points_per_mode: int = 8) -> EigenBasis:
    """First K+1 Neumann eigenpairs of -(rho f')' = lambda rho f.

    The discrete measure is the trapezoid rule times rho, renormalized to
    mass 1, so f_0 = 1 and lambda_0 = 0 exactly. Eigenvalues are Richardson
    extrapolated from grids n and n/2 when ``extrapolate`` is set (n even).
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if grid_size < max(min_points_per_mode * K, K, 4):
        raise ValueError(f"grid_size must be at least {min_points_per_mode}K")
    g, lam, f = _raw_eigens(problem, grid_size, K)
    gaps = np.diff(lam)
    if len(gaps) and gaps.min() <= gap_tol:
        i = int(np.argmin(gaps))
        raise EigenCollisionError(f"eigenvalues {i} and {i + 1} collide (gap {gaps[i]:.3g})")
    lam = lam.copy()
    lam[0] = 0.0
    f[0] = 1.0
    f = f * np.where(f[:, 0] < 0, -1.0, 1.0)[:, None]
    coarse = None
    lam_out = lam.copy()
    if extrapolate and grid_size % 2 == 0 and grid_size // 2 > K:
        _, coarse, _ = _raw_eigens(problem, grid_size // 2, K)
        coarse = coarse.copy()
        coarse[0] = 0.0
        lam_out = (4 * lam - coarse) / 3
    weights = g.mass / g.mass.sum()
    return EigenBasis(problem, g, lam_out, lam, coarse, f, weights)


def convergence_order(problem: SLProblem, sizes, K: int, reference=None) -> np.ndarray:
    """Observed orders log2(err(n)/err(2n)) of the raw eigenvalues.

    Without a reference the differences between successive grids are used.
    """
    lams = np.array([_raw_eigens(problem, n, K)[1][1:] for n in sizes])
    if reference is not None:
        err = np.abs(lams - np.asarray(reference)[1:K + 1])
        return np.log2(err[:-1] / err[1:])
    d = np.abs(np.diff(lams, axis=0))
    return np.log2(d[:-1] / d[1:])


def operator_residual(problem: SLProblem, f: Callable, lam: float, n: int) -> float:
    """max |L_h f + lam f| on the n-grid for a smooth function f."""
    g = FluxGrid.build(problem, n)
    vals = f(g.x)
    return float(np.max(np.abs(g.apply_L(vals) + lam * vals)))


def parity_defect(basis: EigenBasis) -> np.ndarray:
    """For each mode, distance to the nearest of even/odd about the midpoint."""
    f = basis.eigenfunctions
    r = f[:, ::-1]
    return np.minimum(np.max(np.abs(f - r), axis=1), np.max(np.abs(f + r), axis=1))


# ---------------------------------------------------------------------------
# Heat kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeatReport:
    min_kernel: float
    argmin: tuple
    tail_bound: float
    grid: int
    K: int
    t: float
    x0: str


def heat_hgp_check(basis: EigenBasis, x0: str = "left", t: float = 0.1, grid: int = 31,
                   K: int | None = None) -> HeatReport:
    """min over grid^3 of sum_i e^{-lambda_i t} f_i(x) f_i(y) f_i(z) / f_i(x0).

    The tail estimate is e^{-lambda_K t} sum_{i<=K} max|f_i|^3 / |f_i(x0)|.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    K = basis.K if K is None else K
    base = basis.endpoint_values(x0)[:K + 1]
    if np.any(np.abs(base) < 1e-12):
        raise VanishingBaseValue(f"f_{int(np.argmin(np.abs(base)))}(x0) vanishes")
    lam = basis.eigenvalues[:K + 1]
    pts = np.linspace(basis.problem.a, basis.problem.b, grid)
    V = basis.evaluate(pts)[:K + 1]
    w = np.exp(-lam * t) / base
    vals = np.einsum("k,kx,ky,kz->xyz", w, V, V, V)
    idx = np.unravel_index(np.argmin(vals), vals.shape)
    fmax = np.max(np.abs(basis.eigenfunctions[:K + 1]), axis=1)
    tail = float(np.exp(-lam[K] * t) * np.sum(fmax ** 3 / np.abs(base)))
    return HeatReport(float(vals[idx]), tuple(float(pts[i]) for i in idx), tail, grid, K, t, x0)


def heat_kernel_matrix(basis: EigenBasis, t: float) -> np.ndarray:
    """p_t(x_j, x_l) = sum_i e^{-lambda_i t} f_i(x_j) f_i(x_l) on the basis grid."""
    F = basis.eigenfunctions
    return (F.T * np.exp(-basis.eigenvalues * t)) @ F


def semigroup_defect(basis: EigenBasis, t: float, s: float) -> float:
    """max |p_t (weights) p_s - p_{t+s}| with the discrete measure."""
    Pt, Ps, Pts = (heat_kernel_matrix(basis, u) for u in (t, s, t + s))
    return float(np.max(np.abs((Pt * basis.weights) @ Ps - Pts)))


# ---------------------------------------------------------------------------
# Wave equation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WaveSolution:
    x: np.ndarray
    y: np.ndarray
    F: np.ndarray  # F[ix, iy]
    residual: float
    h: float
    base: str

    def interpolator(self):
        from scipy.interpolate import RectBivariateSpline
        return RectBivariateSpline(self.x, self.y, self.F, kx=3, ky=3)


def wave_solve(problem: SLProblem, boundary_f, grid: int, base: str = "left") -> WaveSolution:
    """March L_y F = L_x F in y from F(., y0) = f with Neumann data at y0.

    The y-direction uses the same flux form as x, so a discrete eigenvector
    f_i is propagated to exactly f_i(x) f_i(y) / f_i(y0). Walls in x are
    handled by mirrored ghost points.
    """
    g = FluxGrid.build(problem, grid)
    f0 = np.asarray(boundary_f(g.x) if callable(boundary_f) else boundary_f, dtype=float)
    if f0.shape != g.x.shape:
        raise ValueError("boundary data must live on the grid")
    rho, rh, h = g.rho, g.rho_half, g.h
    if base == "right":
        rho, rh = rho[::-1], rh[::-1]
    elif base != "left":
        raise ValueError("base must be 'left' or 'right'")
    n = g.n
    F = np.empty((n + 1, n + 1))
    F[:, 0] = f0
    F[:, 1] = f0 + h * h * rho[0] * g.apply_L(f0) / (2 * rh[0])
    for k in range(1, n):
        F[:, k + 1] = F[:, k] + (h * h * rho[k] * g.apply_L(F[:, k])
                                 + rh[k - 1] * (F[:, k] - F[:, k - 1])) / rh[k]
    if base == "right":
        F = F[:, ::-1]
    # residual of the discrete wave operator, y-direction with the true rho
    Ly = g.apply_L(F, axis=1)
    Lx = g.apply_L(F, axis=0)
    res = float(np.max(np.abs(Lx - Ly)) * h * h / max(1.0, np.max(np.abs(F))))
    return WaveSolution(g.x, g.x.copy(), F, res, h, base)


def wave_solve_spectral(basis: EigenBasis, boundary_f, base: str = "left", K: int | None = None):
    """F = sum_i a_i f_i(x) f_i(y) / f_i(y0) with a_i the discrete coefficients of f."""
    K = basis.K if K is None else K
    F = basis.eigenfunctions[:K + 1]
    f0 = np.asarray(boundary_f(basis.x) if callable(boundary_f) else boundary_f, dtype=float)
    coef = F @ (f0 * basis.weights)
    y0 = basis.endpoint_values(base)[:K + 1]
    return np.einsum("i,ix,iy->xy", coef / y0, F, F)


def wave_positivity(problem: SLProblem, data, grid: int, eps: float = 0.0) -> float:
    """Minimum of the marched solution for each nonnegative boundary datum."""
    out = []
    for f in data:
        sol = wave_solve(problem, lambda x, f=f: f(x) + eps, grid)
        out.append(float(sol.F.min()) - eps)
    return min(out)


# ---------------------------------------------------------------------------
# Characteristic identities
# ---------------------------------------------------------------------------

def repr1_residual(problem: SLProblem, F: np.ndarray, x: np.ndarray, j: int, n: int,
                   y0: float | None = None) -> float:
    """|2G(M) - G(M-) - G(M+) - int_{[M-,M]} G a+ ds - int_{[M,M+]} G a- ds|.

    G = F rho(x) rho(y) is sampled on the square grid ``x`` (same in y) and
    M is the grid point (j, n) above the base row 0. Both segments run along
    grid diagonals, integrated by the composite trapezoid rule.
    """
    h = x[1] - x[0]
    if n < 1 or j - n < 0 or j + n > len(x) - 1:
        raise ValueError("the characteristic triangle leaves the domain")
    rho = problem.rho(x)
    G = F * rho[:, None] * rho[None, :]
    k = np.arange(n + 1)
    left_x, left_y = j - n + k, k  # M- to M
    right_x, right_y = j + k, n - k  # M to M+
    ds = SQRT2 * h

    def trap(v):
        return ds * (v.sum() - 0.5 * (v[0] + v[-1]))

    il = trap(G[left_x, left_y] * problem.a_plus(x[left_x], x[left_y]))
    ir = trap(G[right_x, right_y] * problem.a_minus(x[right_x], x[right_y]))
    return float(abs(2 * G[j, n] - G[j - n, 0] - G[j + n, 0] - il - ir))


@dataclass(frozen=True, eq=False)
class CharacteristicGrid:
    """Lattice in foot coordinates over the triangle with base [A, B] at y0."""

    problem: SLProblem
    A: float
    B: float
    n: int
    y0: float

    @classmethod
    def build(cls, problem: SLProblem, A: float, B: float, n: int, y0: float | None = None):
        y0 = problem.a if y0 is None else y0
        if not (problem.a <= A < B <= problem.b):
            raise ValueError("base must lie inside the interval")
        return cls(problem, A, B, n, y0)

    @property
    def delta(self) -> float:
        return (self.B - self.A) / self.n

    def index_arrays(self):
        i, k = np.triu_indices(self.n + 1)
        return i, k

    def coords(self, i, k):
        m = self.A + np.asarray(i) * self.delta
        p = self.A + np.asarray(k) * self.delta
        return 0.5 * (m + p), self.y0 + 0.5 * (p - m)

    @property
    def apex_area(self) -> float:
        return (self.B - self.A) ** 2 / 4

    def triangle_weights(self, L: int) -> np.ndarray:
        """Weights on {0 <= i <= k <= L} integrating dx dy = dm dp / 2 (P1 on diagonal cells)."""
        d2 = self.delta ** 2
        W = np.zeros((L + 1, L + 1))
        if L == 0:
            return W
        i, k = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
        full = k >= i + 1
        fi, fk = i[full], k[full]
        for di, dk in ((0, 0), (1, 0), (0, 1), (1, 1)):
            np.add.at(W, (fi + di, fk + dk), d2 / 4)
        diag = np.arange(L)
        for di, dk in ((0, 0), (0, 1), (1, 1)):
            np.add.at(W, (diag + di, diag + dk), d2 / 6)
        return W / 2


@dataclass(frozen=True, eq=False)
class KernelFamily:
    """F(M) = c- F(M-) + c+ F(M+) + int_base F d0(M,.) ds + int_Delta F d1(M,.) dS.

    ``d0(Mx, My, s)`` and ``d1(Mx, My, Sx, Sy)`` must broadcast.
    """

    c_minus: float
    c_plus: float
    d0: Callable | None
    d1: Callable | None
    name: str = "custom"


def repr2_family(problem: SLProblem, y0: float | None = None) -> KernelFamily:
    """The family of the second representation for H = F sqrt(R), R = rho(x) rho(y)."""
    y0 = problem.a if y0 is None else y0
    k = repr2_kernels(problem, y0=y0)
    return KernelFamily(0.5, 0.5,
                        lambda Mx, My, s: 0.5 * k.a0(Mx, My, s),
                        lambda Mx, My, Sx, Sy: 0.5 * k.a(Mx, My, Sx, Sy), "repr2")


def constant_family(c: float) -> KernelFamily:
    return KernelFamily(0.5, 0.5, None, lambda Mx, My, Sx, Sy: np.full(np.broadcast(Mx, Sx).shape, c),
                        f"constant({c})")


@dataclass(frozen=True, eq=False)
class Repr2Kernels:
    problem: SLProblem
    y0: float

    def _half_log_r(self, x, y):
        return 0.5 * (self.problem.w(x) + self.problem.w(y))

    def feet(self, Mx, My):
        return Mx - (My - self.y0), Mx + (My - self.y0)

    def theta(self, Mx, My, Sx, Sy):
        return np.exp(self._half_log_r(Mx, My) - self._half_log_r(Sx, Sy))

    def _projections(self, Mx, My, Sx, Sy):
        Mm, Mp = self.feet(Mx, My)
        Sm, Sp = self.feet(Sx, Sy)
        # S^{-M} = (M_m, S_p) and S^{+M} = (S_m, M_p) in foot coordinates
        lx, ly = 0.5 * (Mm + Sp), self.y0 + 0.5 * (Sp - Mm)
        rx, ry = 0.5 * (Sm + Mp), self.y0 + 0.5 * (Mp - Sm)
        return lx, ly, rx, ry

    def _weights(self, Mx, My, Sx, Sy):
        P = self.problem
        lx, ly, rx, ry = self._projections(Mx, My, Sx, Sy)
        hs = self._half_log_r(Sx, Sy)
        wl = P.a_plus(lx, ly) * np.exp(hs - self._half_log_r(lx, ly))
        wr = P.a_minus(rx, ry) * np.exp(hs - self._half_log_r(rx, ry))
        return wl, wr

    def a(self, Mx, My, Sx, Sy):
        wl, wr = self._weights(Mx, My, Sx, Sy)
        P = self.problem
        return 0.5 * (wl * P.a_minus(Sx, Sy) + wr * P.a_plus(Sx, Sy))

    def a0(self, Mx, My, s):
        wl, wr = self._weights(Mx, My, s, np.full_like(np.asarray(s, dtype=float), self.y0))
        return (wl + wr) / (2 * SQRT2)

    def theta_identity_residual(self, Mx: float, My: float, n: int = 400) -> float:
        """Both integral equations of theta_M along [M-, M] and [M, M+]."""
        P = self.problem
        L = SQRT2 * (My - self.y0)
        s = np.linspace(0, L, n + 1)
        ds = s[1] - s[0]
        out = 0.0
        for side, coef in ((-1, P.a_plus), (1, P.a_minus)):
            # points at distance s from M towards the foot
            ux = Mx + side * s / SQRT2
            uy = My - s / SQRT2
            th = self.theta(Mx, My, ux, uy)
            integrand = th * coef(ux, uy)
            cum = np.concatenate(([0.0], np.cumsum(0.5 * ds * (integrand[1:] + integrand[:-1]))))
            out = max(out, float(np.max(np.abs(th - 1 - 0.5 * cum))))
        return out


def repr2_kernels(problem: SLProblem, M=None, y0: float | None = None) -> Repr2Kernels:
    y0 = problem.a if y0 is None else y0
    if M is not None:
        Mx, My = M
        if not (My > y0 and problem.a <= Mx - (My - y0) and Mx + (My - y0) <= problem.b):
            raise ValueError("M must be interior with its triangle inside the domain")
    return Repr2Kernels(problem, y0)


def repr2_residual(problem: SLProblem, Ffun: Callable, M, n: int = 64) -> float:
    """Residual of 2H(M) = H(M-) + H(M+) + int a0 H + int_Delta a H, H = F sqrt(R)."""
    Mx, My = M
    ker = repr2_kernels(problem, M)
    A, B = ker.feet(Mx, My)
    cg = CharacteristicGrid.build(problem, A, B, n, ker.y0)

    def H(x, y):
        return Ffun(x, y) * np.exp(0.5 * (problem.w(x) + problem.w(y)) - problem.log_z)

    i, k = cg.index_arrays()
    Sx, Sy = cg.coords(i, k)
    W = cg.triangle_weights(n)[i, k]
    interior = float(np.sum(W * H(Sx, Sy) * ker.a(Mx, My, Sx, Sy)))
    s = np.linspace(A, B, n + 1)
    tw = np.full(n + 1, cg.delta)
    tw[[0, -1]] /= 2
    base = float(np.sum(tw * H(s, np.full_like(s, ker.y0)) * ker.a0(Mx, My, s)))
    y0 = ker.y0
    return float(abs(2 * H(Mx, My) - H(A, y0) - H(B, y0) - base - interior))


# ---------------------------------------------------------------------------
# Volterra series
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VolterraResult:
    values: np.ndarray  # on the lattice nodes (triu order)
    terms: int
    kappa: float
    certificate: float
    nodes: tuple


def _family_matrices(family: KernelFamily, cg: CharacteristicGrid):
    """Discrete V0 (nodes x base) and V1 (nodes x nodes) on the lattice."""
    n = cg.n
    i, k = cg.index_arrays()
    N = len(i)
    pos = -np.ones((n + 1, n + 1), dtype=np.int64)
    pos[i, k] = np.arange(N)
    X, Y = cg.coords(i, k)
    V0 = np.zeros((N, n + 1))
    V0[np.arange(N), i] += family.c_minus
    V0[np.arange(N), k] += family.c_plus
    V1 = np.zeros((N, N))
    tables = [cg.triangle_weights(L) for L in range(n + 1)]
    base_x = cg.A + np.arange(n + 1) * cg.delta
    for r in range(N):
        mi, mk = i[r], k[r]
        L = mk - mi
        if L == 0:
            continue
        if family.d0 is not None:
            s = np.arange(mi, mk + 1)
            tw = np.full(L + 1, cg.delta)
            tw[[0, -1]] /= 2
            V0[r, s] += tw * family.d0(X[r], Y[r], base_x[s])
        if family.d1 is not None:
            si, sk = np.triu_indices(L + 1)
            gi, gk = si + mi, sk + mi
            w = tables[L][si, sk]
            V1[r, pos[gi, gk]] += w * family.d1(X[r], Y[r], X[pos[gi, gk]], Y[pos[gi, gk]])
    return V0, V1, (i, k, X, Y)


def family_kappa(family: KernelFamily, cg: CharacteristicGrid) -> float:
    if family.d1 is None:
        return 0.0
    i, k = cg.index_arrays()
    X, Y = cg.coords(i, k)
    best = 0.0
    for r in range(len(i)):
        sel = (i >= i[r]) & (k <= k[r]) & (i <= k)
        best = max(best, float(np.max(np.abs(family.d1(X[r], Y[r], X[sel], Y[sel])))))
    return best


def volterra_solve(family: KernelFamily, cg: CharacteristicGrid, boundary_data,
                   tol: float = 1e-14, max_terms: int = 200, split: KernelFamily | None = None):
    """F = sum_n V1^n V0(F_0) truncated once kappa^n |Delta|^n / (n!)^2 < tol.

    With ``split`` = V2 (so V3 = V1 - V2), the solution is computed as
    F = W2 V0(F) + W2 V3(F) with W2 = sum_n V2^n instead.
    """
    V0, V1, nodes = _family_matrices(family, cg)
    base_x = cg.A + np.arange(cg.n + 1) * cg.delta
    g = np.asarray(boundary_data(base_x) if callable(boundary_data) else boundary_data, dtype=float)
    kappa = family_kappa(family, cg)
    area = cg.apex_area

    def series(M, v, kap):
        term, total, nterm = v, v.copy(), 0
        for nterm in range(1, max_terms + 1):
            cert = (kap * area) ** nterm / math.factorial(nterm) ** 2
            term = M @ term
            total += term
            if cert < tol and np.max(np.abs(term)) < tol:
                return total, nterm, cert
        raise RuntimeError(f"Neumann series did not reach tol after {max_terms} terms")

    if split is None:
        F, terms, cert = series(V1, V0 @ g, kappa)
        return VolterraResult(F, terms, kappa, cert, nodes)
    _, V2, _ = _family_matrices(split, cg)
    V3 = V1 - V2
    k2 = family_kappa(split, cg)
    N = V1.shape[0]
    W2 = np.eye(N)
    term = np.eye(N)
    for _ in range(max_terms):
        term = V2 @ term
        W2 += term
        if np.max(np.abs(term)) < tol:
            break
    F, terms, cert = series(W2 @ V3, W2 @ (V0 @ g), kappa + k2)
    return VolterraResult(F, terms, kappa, cert, nodes)


def volterra_norms(family: KernelFamily, cg: CharacteristicGrid, nmax: int = 6):
    """sup over apexes M' in the lattice of int |a_n(M', S)| dS, n = 1..nmax.

    The iterated densities are composed with the tensor trapezoid rule on
    each order rectangle {S <= U <= M'}, which is aligned with the lattice.
    Returns (norms, bounds, kappa) with bounds = kappa^n |Delta|^n / (n!)^2.
    """
    n = cg.n
    idx = np.arange(n + 1)
    I1, K1, I2, K2 = np.meshgrid(idx, idx, idx, idx, indexing="ij")
    valid = (I1 <= I2) & (I2 <= K2) & (K2 <= K1)
    X1, Y1 = cg.coords(I1, K1)
    X2, Y2 = cg.coords(I2, K2)
    a1 = np.where(valid, family.d1(X1, Y1, X2, Y2), 0.0)
    kappa = float(np.max(np.abs(a1)))
    c = 0.5 * cg.delta ** 2
    tables = [cg.triangle_weights(L) for L in range(n + 1)]

    def compose(a, b):
        ein = np.einsum
        full = (a.reshape((n + 1) ** 2, -1) @ b.reshape((n + 1) ** 2, -1)).reshape(a.shape)
        tA = ein("abav,avcd->abcd", a, b)
        tB = ein("abcv,cvcd->abcd", a, b)
        tC = ein("abub,ubcd->abcd", a, b)
        tD = ein("abud,udcd->abcd", a, b)
        tAC = ein("abab,abcd->abcd", a, b)
        tAD = ein("abad,adcd->abcd", a, b)
        tBC = ein("abcb,cbcd->abcd", a, b)
        tBD = ein("abcd,cdcd->abcd", a, b)
        out = full - 0.5 * (tA + tB + tC + tD) + 0.25 * (tAC + tAD + tBC + tBD)
        return np.where(valid, c * out, 0.0)

    def norm(a):
        best = 0.0
        for mi in range(n + 1):
            for mk in range(mi, n + 1):
                L = mk - mi
                block = np.abs(a[mi, mk, mi:mk + 1, mi:mk + 1])
                best = max(best, float(np.sum(tables[L] * block)))
        return best

    norms, an = [], a1
    for step in range(1, nmax + 1):
        if step > 1:
            an = compose(a1, an)
        norms.append(norm(an))
    area = cg.apex_area
    bounds = [(kappa * area) ** m / math.factorial(m) ** 2 for m in range(1, nmax + 1)]
    return np.array(norms), np.array(bounds), kappa


# ---------------------------------------------------------------------------
# Constant kernel: exact iterated densities
# ---------------------------------------------------------------------------

def constant_kernel_iterates(c, nmax: int):
    """a_n(alpha, beta) for the constant density c, as exact polynomials.

    alpha = S_m - M_m and beta = M_p - S_p are the offsets of S from the apex;
    composition over the order rectangle is a convolution in both offsets,
    evaluated with the Beta integral int_0^a u^i (a-u)^j du = a^{i+j+1} i! j!/(i+j+1)!.
    Polynomials are dicts {(i, j): coefficient}.
    """
    from fractions import Fraction
    c = Fraction(c)

    def conv1(i, j):
        return Fraction(math.factorial(i) * math.factorial(j), math.factorial(i + j + 1))

    first = {(0, 0): c}
    out = [first]
    for _ in range(1, nmax):
        prev = out[-1]
        nxt = {}
        for (i1, j1), c1 in first.items():
            for (i2, j2), c2 in prev.items():
                key = (i1 + i2 + 1, j1 + j2 + 1)
                val = Fraction(1, 2) * c1 * c2 * conv1(i1, i2) * conv1(j1, j2)
                nxt[key] = nxt.get(key, 0) + val
        out.append(nxt)
    return out


def constant_resolvent_density(c: float, alpha, beta, nmax: int = 60) -> np.ndarray:
    """Density of sum_{n>=1} V^n for V = c 1_Delta dS at offsets (alpha, beta)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    total = np.zeros(np.broadcast(alpha, beta).shape)
    for poly in constant_kernel_iterates(c, nmax):
        for (i, j), coef in poly.items():
            total = total + float(coef) * alpha ** i * beta ** j
    return total


def bessel_series_F(C: float, x, tol: float = 1e-16) -> np.ndarray:
    """F(x) = sum_n (-C x)^n / (n!)^2."""
    x = np.asarray(x, dtype=float)
    flat = [sum_series(bessel_g_term, 2 * math.sqrt(C * xi), tol) for xi in x.ravel()]
    return np.array(flat).reshape(x.shape)


@dataclass(frozen=True)
class BesselReport:
    criterion: bool
    threshold: float
    mu0: float
    solution_min: float | None
    solution_nonnegative: bool | None


def bessel_threshold(area: float, tol: float = 1e-12) -> float:
    """-mu0^2 / (2 |Delta|), the lowest admissible interior density."""
    return -bessel_first_zero(tol) ** 2 / (2 * area)


def bessel_positivity_criterion(a_min: float, triangle_area: float, run_solver: bool = True,
                                n: int = 32) -> BesselReport:
    """a_min >= -mu0^2 / (2 |Delta|), plus a diagnostic constant-kernel solve.

    With constant interior density a_min, V0 = (delta_- + delta_+)/2 and data
    1 on the base, the solution at height-scale D (|Delta| = D^2/4) equals
    cos(sqrt(-a_min/2) D), which can be negative while the criterion holds.
    The solve is reported, not raised.
    """
    if triangle_area <= 0:
        raise ValueError("area must be positive")
    mu0 = bessel_first_zero()
    thr = bessel_threshold(triangle_area)
    ok = bool(a_min >= thr)
    sol_min = None
    nonneg = None
    if ok and run_solver:
        D = 2 * math.sqrt(triangle_area)
        prob = SLProblem.uniform(b=D)
        cg = CharacteristicGrid.build(prob, -D / 2, D / 2, n)
        res = volterra_solve(constant_family(a_min), cg, lambda s: np.ones_like(s),
                             split=constant_family(min(a_min, 0.0)))
        sol_min = float(res.values.min())
        nonneg = bool(sol_min >= -1e-12)
    return BesselReport(ok, thr, mu0, sol_min, nonneg)


# ---------------------------------------------------------------------------
# Achour-Trimeche hypotheses and the psi criterion
# ---------------------------------------------------------------------------

@dataclass
class ATReport:
    symmetric: bool
    symmetry_defect: float
    log_concave: bool
    max_second_derivative: float
    increasing: bool
    a_plus_min: float
    a_minus_min: float
    sign_conditions: bool
    hypotheses: bool
    heat: list
    heat_min: float
    wave_min: float | None = None
    wave_threshold: float | None = None


def achour_trimeche_verify(problem: SLProblem, K: int = 12, t_list=(0.1,), grid: int = 2000,
                           heat_grid: int = 31, tol: float = 1e-10, wave_data=None,
                           wave_grid: int = 400) -> ATReport:
    """Check the hypotheses on a grid and run the heat and wave surrogates."""
    xs = np.linspace(problem.a, problem.b, 2001)
    c = problem.midpoint
    sym_def = float(np.max(np.abs(problem.w(xs) - problem.w(2 * c - xs))))
    d2 = problem.second(xs)
    d1 = problem.drift(xs)
    logc = bool(np.max(d2) <= tol)
    increasing = bool(np.min(d1) >= -tol) and logc
    X, Y = np.meshgrid(xs[::20], xs[::20], indexing="ij")
    ap = problem.a_plus(X, Y)
    am = problem.a_minus(X, Y)
    mask_p = (X - c) + (Y - c) <= 0
    mask_m = Y <= X
    ap_min = float(ap[mask_p].min())
    am_min = float(am[mask_m].min())
    signs = ap_min >= -tol and am_min >= -tol
    symmetric = sym_def <= 1e-9
    hyp = bool((symmetric and logc and signs) or increasing)
    basis = solve_neumann_eigens(problem, grid, K)
    heat = [heat_hgp_check(basis, "left", t, heat_grid) for t in t_list]
    rep = ATReport(symmetric, sym_def, logc, float(np.max(d2)), increasing, ap_min, am_min,
                   bool(signs), hyp, heat, min(h.min_kernel for h in heat))
    if wave_data is not None:
        rep.wave_min = wave_positivity(problem, wave_data, wave_grid)
        rep.wave_threshold = -5 * (problem.b - problem.a) / wave_grid
    return rep


@dataclass(frozen=True, eq=False)
class PsiReport:
    K_plus: np.ndarray
    K_minus: np.ndarray
    defect: np.ndarray
    K_plus_min: float
    K_minus_min: float
    defect_max: float
    criterion_holds: bool


def proppsi_kernels(problem: SLProblem, psi, grid: int, tol: float = 1e-10) -> PsiReport:
    """K+- = sqrt2 (d_x +- d_y) log(psi sqrt(rho rho)) and (L_x - L_y) psi / psi.

    ``psi`` is a callable psi(X, Y) or an array on the (grid+1)^2 square grid.
    Derivatives are central differences (one-sided at walls); the defect uses
    the flux-form discrete operator in both variables.
    """
    g = FluxGrid.build(problem, grid)
    X, Y = np.meshgrid(g.x, g.x, indexing="ij")
    P = np.asarray(psi(X, Y) if callable(psi) else psi, dtype=float)
    if P.shape != X.shape:
        raise ValueError("psi must live on the square grid")
    if np.any(P <= 0):
        raise ValueError("psi must be positive")
    logp = np.log(P) + 0.5 * (problem.w(X) + problem.w(Y))
    dx = np.gradient(logp, g.h, axis=0)
    dy = np.gradient(logp, g.h, axis=1)
    Kp = SQRT2 * (dx + dy)
    Km = SQRT2 * (dy - dx)
    defect = (g.apply_L(P, axis=0) - g.apply_L(P, axis=1)) / P
    ok = bool(Kp.min() >= -tol and Km.min() >= -tol and defect.max() <= tol)
    return PsiReport(Kp, Km, defect, float(Kp.min()), float(Km.min()), float(defect.max()), ok)


def separated_psi_candidate(basis: EigenBasis):
    """psi = 1 - f1(x) f1(y) / f1(b)^2 on the basis grid."""
    f1 = basis.eigenfunctions[1]
    return 1 - np.outer(f1, f1) / f1[-1] ** 2


# ---------------------------------------------------------------------------
# Minimal mass at the endpoint
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MassReport:
    x: np.ndarray
    r: np.ndarray
    ratios: np.ndarray  # [r, x]
    limits: np.ndarray
    limit_max: float
    interior_limit_max: float
    passes: bool


def minimal_mass_check(problem: SLProblem, x0: str = "left", r_list=(0.04, 0.02, 0.01),
                       n_x: int = 101) -> MassReport:
    """mu(B(x0, r)) / mu(B(x, r)) on [a, b], with a linear extrapolation r -> 0.

    The limit is reported over points at distance > max(r) from x0, and
    separately over points that are that far from both endpoints.
    """
    r = np.sort(np.asarray(r_list, dtype=float))[::-1]
    if np.any(r <= 0) or r.max() >= (problem.b - problem.a) / 2:
        raise ValueError("radii must lie in (0, (b-a)/2)")
    fine = np.linspace(problem.a, problem.b, 40001)
    rho = problem.rho(fine)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(fine) * (rho[1:] + rho[:-1]))))

    def mass(lo, hi):
        lo = np.clip(lo, problem.a, problem.b)
        hi = np.clip(hi, problem.a, problem.b)
        return np.interp(hi, fine, cdf) - np.interp(lo, fine, cdf)

    e = problem.endpoint(x0)
    xs = np.linspace(problem.a, problem.b, n_x)
    ratios = np.array([mass(e - ri, e + ri) / mass(xs - ri, xs + ri) for ri in r])
    # ratio(r) ~ L + c r: extrapolate with the two smallest radii
    r1, r2 = r[-2], r[-1]
    lim = (ratios[-1] * r1 - ratios[-2] * r2) / (r1 - r2)
    far = np.abs(xs - e) > r.max()
    lim_max = float(lim[far].max())
    inner = (xs - problem.a > r.max()) & (problem.b - xs > r.max())
    return MassReport(xs, r, ratios, lim, lim_max, float(lim[inner].max()),
                      bool(lim_max <= 1 + 1e-9))
