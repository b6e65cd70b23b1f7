"""Finite probability spaces carrying a unitary orthonormal basis (UOB).

A space is ``n+1`` points with weights ``mu`` and a basis matrix ``F`` with
``F[i, x] = f_i(x)`` and ``f_0 = 1``. Two positivity properties are decided:

* GKS: every structure coefficient ``a_ijk = <f_i f_j conj(f_k)>`` is >= 0;
* HGP at x0: every ``K(x,y,z) = sum_i f_i(x) f_i(y) conj(f_i(z)) / f_i(x0)``
  is >= 0, i.e. the ``(f_i(x)/f_i(x0))_i`` are Markov sequences.

The orthogonal matrix ``O[x, i] = sqrt(mu(x)) f_i(x)`` ties the two together:
HGP of a space at x0 is GKS of its dual.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import Infeasible, MeasureOnGrid, nnls_simplex_membership


class DimensionError(ValueError):
    pass


class GKSPointError(RuntimeError):
    """No or several GKS-point candidates: a numerical-degeneracy diagnostic."""

    def __init__(self, message: str, candidates: Sequence[int]):
        super().__init__(message)
        self.candidates = list(candidates)


class VanishingBaseValue(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """A computed quantity contradicts a proven statement."""


# ---------------------------------------------------------------------------
# The space
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteBasisSpace:
    points: tuple
    mu: np.ndarray
    basis: np.ndarray
    field: str = "real"

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        basis = np.asarray(self.basis)
        basis = basis.astype(complex if self.field == "complex" else float)
        n = len(self.points)
        if mu.shape != (n,) or basis.shape != (n, n):
            raise DimensionError(
                f"{n} points but mu has shape {mu.shape} and basis {basis.shape}")
        if self.field not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "basis", basis)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def is_complex(self) -> bool:
        return self.field == "complex"

    def orthogonal_matrix(self) -> np.ndarray:
        """``O[x, i] = sqrt(mu(x)) f_i(x)``; unitary for a UOB."""
        return np.sqrt(self.mu)[:, None] * self.basis.T

    def reordered(self, perm: Sequence[int]) -> "FiniteBasisSpace":
        perm = list(perm)
        return FiniteBasisSpace(tuple(self.points[i] for i in perm), self.mu[perm],
                                self.basis[:, perm], self.field)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        if self.is_complex:
            basis = [[[float(v.real), float(v.imag)] for v in row] for row in self.basis]
        else:
            basis = self.basis.tolist()
        return {"points": [p if isinstance(p, (int, str)) else list(p) for p in self.points],
                "mu": self.mu.tolist(), "basis": basis, "field": self.field}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteBasisSpace":
        for key in ("points", "mu", "basis"):
            if key not in d:
                raise ValueError(f"missing key {key!r}")
        fld = d.get("field", "real")
        rows = d["basis"]
        if fld == "complex":
            basis = np.array([[complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
                               for v in row] for row in rows])
        else:
            basis = np.array(rows, dtype=float)
        pts = tuple(tuple(p) if isinstance(p, list) else p for p in d["points"])
        return cls(pts, np.array(d["mu"], dtype=float), basis, fld)

    @classmethod
    def from_json(cls, text: str) -> "FiniteBasisSpace":
        return cls.from_dict(json.loads(text))


def from_orthogonal(O: np.ndarray, points: Sequence | None = None) -> FiniteBasisSpace:
    """Space from a unitary matrix with positive first column (rows = points)."""
    O = np.asarray(O)
    if np.any(np.abs(np.imag(O[:, 0])) > 1e-14) or np.any(np.real(O[:, 0]) <= 0):
        raise ValueError("first column of O must be positive")
    mu = np.real(O[:, 0]) ** 2
    basis = (O / np.sqrt(mu)[:, None]).T
    fld = "complex" if np.iscomplexobj(O) and np.any(np.abs(O.imag) > 0) else "real"
    pts = tuple(range(len(mu))) if points is None else tuple(points)
    return FiniteBasisSpace(pts, mu, basis if fld == "complex" else np.real(basis), fld)


def walsh_matrix(k: int) -> np.ndarray:
    """Sylvester-Hadamard matrix of order 2^k in natural (bitmask) order."""
    idx = np.arange(2 ** k)
    bits = np.bitwise_and.outer(idx, idx)
    parity = np.zeros_like(bits)
    for j in range(k):
        parity ^= (bits >> j) & 1
    return 1.0 - 2.0 * parity


def hypercube(N: int) -> FiniteBasisSpace:
    """{-1,1}^N with uniform measure and basis omega_A(w) = prod_{j in A} w_j.

    Point index x encodes w by bits (bit j set means w_j = -1), basis index
    encodes the subset A, so point 0 is (1, ..., 1).
    """
    pts = tuple(tuple(-1 if (x >> j) & 1 else 1 for j in range(N)) for x in range(2 ** N))
    return FiniteBasisSpace(pts, np.full(2 ** N, 2.0 ** -N), walsh_matrix(N), "real")


def sylvester_hadamard(k: int) -> FiniteBasisSpace:
    if k < 0:
        raise ValueError("k must be >= 0")
    return FiniteBasisSpace(tuple(range(2 ** k)), np.full(2 ** k, 2.0 ** -k), walsh_matrix(k))


def two_point(theta: float) -> FiniteBasisSpace:
    """Two-point space from O = [[cos, sin], [sin, -cos]]."""
    c, s = np.cos(theta), np.sin(theta)
    return from_orthogonal(np.array([[c, s], [s, -c]]))


# ---------------------------------------------------------------------------
# Validation and tensors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UOBReport:
    orthonormality_defect: float
    unitarity_defect: float
    mu_positive: bool
    mu_sum_defect: float
    f0_defect: float
    passed: bool


def validate_uob(space: FiniteBasisSpace, tol: float = 1e-10) -> UOBReport:
    F, mu = space.basis, space.mu
    gram = (F * mu) @ F.conj().T
    orth = float(np.max(np.abs(gram - np.eye(space.size))))
    O = space.orthogonal_matrix()
    unit = float(np.max(np.abs(O.T @ O.conj() - np.eye(space.size))))
    mu_pos = bool(np.all(mu > 0))
    sum_def = float(abs(mu.sum() - 1))
    f0_def = float(np.max(np.abs(F[0] - 1)))
    ok = orth <= tol and unit <= tol and mu_pos and sum_def <= tol and f0_def <= tol
    return UOBReport(orth, unit, mu_pos, sum_def, f0_def, bool(ok))


def multiplication_tensor(space: FiniteBasisSpace) -> np.ndarray:
    """``a[i, j, k] = <f_i f_j conj(f_k)>``."""
    F = space.basis
    return np.einsum("ix,jx,kx,x->ijk", F, F, F.conj(), space.mu, optimize=True)


def multiplication_tensor_matrix_form(space: FiniteBasisSpace) -> np.ndarray:
    """The same tensor as ``sum_x O_xj O_xk conj(O_xl) / O_x0``."""
    O = space.orthogonal_matrix()
    return np.einsum("xj,xk,xl,x->jkl", O, O, O.conj(), 1.0 / O[:, 0], optimize=True)


@dataclass(frozen=True)
class GKSResult:
    passed: bool
    min_coefficient: float
    witness: tuple
    max_imaginary: float
    crosscheck_defect: float


def _min_with_witness(T: np.ndarray):
    idx = np.unravel_index(np.argmin(T.real), T.shape)
    return float(T.real[idx]), tuple(int(i) for i in idx)


def is_gks(space: FiniteBasisSpace, tol: float = 1e-10) -> GKSResult:
    a = multiplication_tensor(space)
    b = multiplication_tensor_matrix_form(space)
    cross = float(np.max(np.abs(a - b)))
    mn, wit = _min_with_witness(a)
    imag = float(np.max(np.abs(np.imag(a)))) if space.is_complex else 0.0
    return GKSResult(bool(mn >= -tol and imag <= tol), mn, wit, imag, cross)


@dataclass(frozen=True)
class GKSPoint:
    index: int
    mu_minimal: bool


def find_gks_point(space: FiniteBasisSpace, tie_tol: float = 1e-9) -> GKSPoint:
    """The point where every f_i reaches max_x |f_i(x)| (with positive value)."""
    F = space.basis
    maxabs = np.max(np.abs(F), axis=1)
    close = np.abs(F - maxabs[:, None]) <= tie_tol
    cand = np.flatnonzero(np.all(close, axis=0))
    tag = " (complex setting: reported as a finding)" if space.is_complex else ""
    if len(cand) == 0:
        raise GKSPointError("no GKS-point candidate" + tag, [])
    if len(cand) > 1:
        raise GKSPointError(f"multiple GKS-point candidates {cand.tolist()}" + tag, cand)
    x0 = int(cand[0])
    return GKSPoint(x0, bool(space.mu[x0] <= space.mu.min() + tie_tol))


# ---------------------------------------------------------------------------
# HGP
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HgpKernel:
    K: np.ndarray
    base_point: int

    def normalization_defect(self, mu: np.ndarray) -> float:
        return float(np.max(np.abs(self.K @ mu - 1)))


def _base_values(space: FiniteBasisSpace, x0: int) -> np.ndarray:
    b = space.basis[:, x0]
    if np.any(np.abs(b) < 1e-14):
        i = int(np.argmin(np.abs(b)))
        raise VanishingBaseValue(f"f_{i}(x0) vanishes at x0={x0}")
    return b


def hgp_kernel(space: FiniteBasisSpace, x0: int) -> HgpKernel:
    F = space.basis
    b = _base_values(space, x0)
    K = np.einsum("ix,iy,iz,i->xyz", F, F, F.conj(), 1.0 / b, optimize=True)
    if not space.is_complex:
        K = K.real
    return HgpKernel(K, x0)


@dataclass(frozen=True, eq=False)
class HGPResult:
    passed: bool
    min_value: float
    witness: tuple
    max_imaginary: float
    kernel: HgpKernel


def is_hgp(space: FiniteBasisSpace, x0: int, tol: float = 1e-10) -> HGPResult:
    ker = hgp_kernel(space, x0)
    mn, wit = _min_with_witness(ker.K)
    imag = float(np.max(np.abs(np.imag(ker.K)))) if space.is_complex else 0.0
    passed = bool(mn >= -tol and imag <= tol)
    if passed:
        F = space.basis
        bound = np.max(np.abs(F), axis=1) - np.abs(F[:, x0])
        if np.max(bound) > 1e-8 or space.mu[x0] > space.mu.min() + 1e-8:
            raise InconsistencyError(
                "HGP holds but |f_i| <= f_i(x0) or the minimality of mu(x0) fails")
    return HGPResult(passed, mn, wit, imag, ker)


def dual_space(space: FiniteBasisSpace, x0: int) -> FiniteBasisSpace:
    """Dual space on the function labels {0..n}.

    Points are reordered so that x0 comes first, and each f_i is flipped in
    sign so that f_i(x0) > 0. The dual measure is nu(i) = O_{0i}^2 and the
    dual functions are g_x(i) = O_{xi} / O_{0i}.
    """
    perm = [x0] + [x for x in range(space.size) if x != x0]
    s = space.reordered(perm)
    b = _base_values(s, 0)
    if s.is_complex and np.any(np.abs(np.imag(b)) > 1e-12):
        raise ValueError("f_i(x0) must be real for the dual construction")
    signs = np.sign(np.real(b))
    O = s.orthogonal_matrix() * signs[None, :]
    first = np.real(O[0])
    G = O / first[None, :]
    fld = s.field
    return FiniteBasisSpace(tuple(range(s.size)), first ** 2, G if fld == "complex" else G.real, fld)


# ---------------------------------------------------------------------------
# Markov sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarkovKernelResult:
    matrix: np.ndarray
    is_markov: bool
    min_entry: float
    row_sum_defect: float


def markov_kernel_from_sequence(space: FiniteBasisSpace, lam: Sequence,
                                tol: float = 1e-10) -> MarkovKernelResult:
    """``k(x, y) = sum_i lam_i f_i(x) conj(f_i(y)) mu(y)``."""
    lam = np.asarray(lam)
    if lam.shape != (space.size,):
        raise DimensionError("sequence length must equal the number of points")
    if abs(lam[0] - 1) > tol:
        raise ValueError("lambda_0 must be 1")
    F = space.basis
    k = np.einsum("i,ix,iy,y->xy", lam, F, F.conj(), space.mu)
    if not space.is_complex:
        k = k.real
    rows = float(np.max(np.abs(k.sum(axis=1) - 1)))
    if rows > 1e-8:
        raise InconsistencyError(f"row sums deviate from 1 by {rows:.3g}")
    mn = float(np.min(k.real))
    imag = float(np.max(np.abs(np.imag(k))))
    return MarkovKernelResult(k, bool(mn >= -tol and imag <= tol), mn, rows)


def vertex_sequence(space: FiniteBasisSpace, x0: int, x: int) -> np.ndarray:
    """lambda(x) = (f_i(x) / f_i(x0))_i."""
    return space.basis[:, x] / _base_values(space, x0)


def represent_markov_sequence(space: FiniteBasisSpace, x0: int, lam: Sequence,
                              tol: float = 1e-10, diagnostic: bool = False) -> MeasureOnGrid:
    """Weights nu with lam_i = sum_x nu(x) f_i(x)/f_i(x0).

    The square system is solved directly and cross-checked against the
    closed form nu(y) = k_lam(x0, y). Without ``diagnostic`` the space must
    have HGP at x0 and a negative weight is an internal inconsistency.
    """
    lam = np.asarray(lam)
    if not diagnostic:
        hgp = is_hgp(space, x0, tol)
        if not hgp.passed:
            raise ValueError("HGP fails at x0; use diagnostic=True to probe")
    R = space.basis / _base_values(space, x0)[:, None]
    nu = np.linalg.solve(R, lam)
    closed = markov_kernel_from_sequence(space, lam, tol=np.inf).matrix[x0]
    if np.max(np.abs(nu - closed)) > 1e-8:
        raise InconsistencyError("linear solve disagrees with the kernel row at x0")
    if not space.is_complex:
        nu = nu.real
    if not diagnostic and np.min(np.real(nu)) < -tol:
        raise InconsistencyError(f"negative weight {np.min(np.real(nu)):.3g} although HGP holds")
    prob = bool(np.min(np.real(nu)) >= -tol)
    return MeasureOnGrid(np.arange(space.size), nu, probability=prob)


def represent_via_simplex(space: FiniteBasisSpace, x0: int, lam: Sequence, tol: float = 1e-10):
    """Same representation through the NNLS simplex-membership route."""
    b = _base_values(space, x0)
    gens = np.real(space.basis / b[:, None])
    return nnls_simplex_membership(np.real(np.asarray(lam)), gens, tol)


def markov_sequence_vertices(space: FiniteBasisSpace, tol: float = 1e-9) -> np.ndarray:
    """Vertices of the Markov-sequence polytope for real spaces with n <= 3.

    The polytope is {lam: lam_0 = 1, sum_i lam_i f_i(x) f_i(y) >= 0 for all
    x, y}. Vertices are found by exhaustive intersection of n constraints.
    Exposed as data only; nothing is asserted about its shape.
    """
    if space.is_complex:
        raise ValueError("vertex enumeration is implemented for real bases")
    n = space.size - 1
    if n > 3 or n < 1:
        raise ValueError("vertex enumeration is limited to 2..4 points")
    F = space.basis
    rows = np.array([[F[i, x] * F[i, y] for i in range(n + 1)]
                     for x in range(n + 1) for y in range(n + 1)])
    A, c = rows[:, 1:], rows[:, 0]  # constraint: A @ lam' + c >= 0
    verts = []
    for sub in itertools.combinations(range(len(rows)), n):
        M = A[list(sub)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        lam = np.linalg.solve(M, -c[list(sub)])
        if np.all(A @ lam + c >= -tol) and not any(np.allclose(lam, v, atol=1e-8) for v in verts):
            verts.append(lam)
    verts = sorted(verts, key=lambda v: tuple(np.round(v, 9)))
    return np.array([np.concatenate(([1.0], v)) for v in verts])


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

def convolve(space: FiniteBasisSpace, x0: int, nu1: Sequence, nu2: Sequence,
             tol: float = 1e-10, diagnostic: bool = False) -> MeasureOnGrid:
    """Bilinear extension of delta_x * delta_y = K(x, y, .) mu(.)."""
    m1 = np.asarray(getattr(nu1, "masses", nu1))
    m2 = np.asarray(getattr(nu2, "masses", nu2))
    ker = hgp_kernel(space, x0)
    if not diagnostic and np.min(np.real(ker.K)) < -tol:
        raise ValueError("HGP fails at x0; convolution of probabilities is not positive")
    out = np.einsum("x,y,xyz,z->z", m1, m2, ker.K, space.mu)
    ident = np.einsum("y,yz,z->z", m2, ker.K[x0], space.mu)
    if np.max(np.abs(ident - m2)) > 1e-8:
        raise InconsistencyError("delta_x0 is not the identity for the convolution")
    if not space.is_complex and not np.iscomplexobj(m1) and not np.iscomplexobj(m2):
        out = np.real(out)
    return MeasureOnGrid(np.arange(space.size), out)


# ---------------------------------------------------------------------------
# Hadamard matrices
# ---------------------------------------------------------------------------

class HadamardError(ValueError):
    pass


def paley_hadamard(q: int) -> np.ndarray:
    """Paley type I Hadamard matrix of order q+1 for a prime q = 3 mod 4."""
    if q % 4 != 3 or any(q % d == 0 for d in range(2, int(q ** 0.5) + 1)):
        raise ValueError("q must be a prime congruent to 3 mod 4")
    residues = {(i * i) % q for i in range(1, q)}
    chi = np.array([0] + [1 if r in residues else -1 for r in range(1, q)])
    Q = chi[(np.arange(q)[None, :] - np.arange(q)[:, None]) % q]
    S = np.zeros((q + 1, q + 1))
    S[0, 1:] = 1
    S[1:, 0] = -1
    S[1:, 1:] = Q
    return np.eye(q + 1) + S


@dataclass
class HadamardReport:
    is_hadamard: bool
    is_gks: bool
    order: int
    normalized_rows: bool
    gks_point: int | None = None
    exponent: int | None = None
    pairings: list = field(default_factory=list)
    identification: dict | None = None
    min_coefficient: float | None = None


def _gks_uniform_min(H: np.ndarray) -> float:
    m = H.shape[0]
    return float(np.einsum("ix,jx,kx->ijk", H, H, H, optimize=True).min() / m)


def hadamard_gks_analyze(M: np.ndarray, tol: float = 1e-9) -> HadamardReport:
    """Decide GKS for a Hadamard matrix and certify order 2^k recursively.

    Rows are functions, columns are points of the uniform space. A row of
    ones is taken as f_0 (columns are sign-normalized if no such row exists).
    Every column is tried as the GKS point after flipping function signs, so
    a negative answer covers every admissible sign choice.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise HadamardError("matrix must be square")
    if not np.all(np.isin(M, (-1.0, 1.0))):
        raise HadamardError("entries must be +-1")
    m = M.shape[0]
    if not np.allclose(M @ M.T, m * np.eye(m)):
        raise HadamardError("rows are not orthogonal")
    const = [i for i in range(m) if np.all(M[i] == M[i, 0])]
    normalized_rows = bool(const)
    if const:
        i0 = const[0]
        H = np.vstack([M[i0], np.delete(M, i0, axis=0)]) * M[i0, 0]
    else:
        # standard Hadamard normalization: flip columns so row 0 is constant
        H = M * M[0][None, :]
    best = None
    for c in range(m):
        Hc = H * H[:, c][:, None]
        mn = _gks_uniform_min(Hc)
        if best is None or mn > best[0]:
            best = (mn, c, Hc)
        if mn >= -tol:
            break
    mn, c, Hc = best
    rep = HadamardReport(True, bool(mn >= -tol), m, normalized_rows, min_coefficient=mn)
    if not rep.is_gks:
        return rep
    rep.gks_point = c
    perm = [c] + [x for x in range(m) if x != c]
    Hc = Hc[:, perm]
    rep.exponent, rep.pairings = _certify_power_of_two(Hc, tol)
    rep.identification = _walsh_identification(Hc)
    return rep


def _certify_power_of_two(H: np.ndarray, tol: float):
    """Recursive halving through the Markov projector on {f_1 = 1}."""
    pairings = []
    k = 0
    while H.shape[0] > 1:
        m = H.shape[0]
        if _gks_uniform_min(H) < -tol:
            raise InconsistencyError("sub-matrix lost the GKS property")
        A = np.flatnonzero(H[1] == 1)
        P = H[:, A] @ H[:, A].T / m
        if not (np.allclose(P, P.T) and np.allclose(P @ P, P, atol=1e-12)
                and np.allclose(P.sum(axis=1), 1) and np.all(P >= -tol)):
            raise InconsistencyError("projector matrix is not a symmetric Markov projector")
        if not np.all(np.isclose(P, 0) | np.isclose(P, 0.5)):
            raise InconsistencyError("projector entries outside {0, 1/2}")
        if not np.allclose(np.diag(P), 0.5):
            raise InconsistencyError("projector diagonal differs from 1/2")
        pairs = []
        seen = set()
        for i in range(m):
            if i in seen:
                continue
            partners = [j for j in range(m) if j != i and np.isclose(P[i, j], 0.5)]
            if len(partners) != 1:
                raise InconsistencyError("recurrence class is not a pair")
            j = partners[0]
            pairs.append((i, j))
            seen.update((i, j))
        pairings.append(pairs)
        reps = [min(pr) for pr in pairs]
        H = H[np.ix_(reps, A)]
        k += 1
    return k, pairings


def _walsh_identification(H: np.ndarray):
    """Label rows and columns by bitmasks so that H becomes the Walsh matrix."""
    m = H.shape[0]
    rows = {tuple(r): i for i, r in enumerate(H.astype(int))}
    for i in range(m):
        for j in range(m):
            if tuple((H[i] * H[j]).astype(int)) not in rows:
                return None
    gens, span = [], {tuple(np.ones(m, dtype=int))}
    for i in range(m):
        r = tuple(H[i].astype(int))
        if r not in span:
            gens.append(i)
            span = span | {tuple(np.array(s) * np.array(r)) for s in span}
    col_mask = [sum(1 << g for g, gi in enumerate(gens) if H[gi, x] < 0) for x in range(m)]
    row_mask = []
    for i in range(m):
        for mask in range(m):
            prod = np.ones(m)
            for g, gi in enumerate(gens):
                if (mask >> g) & 1:
                    prod = prod * H[gi]
            if np.array_equal(prod, H[i]):
                row_mask.append(mask)
                break
    W = walsh_matrix(len(gens))
    ok = all(H[i, x] == W[row_mask[i], col_mask[x]] for i in range(m) for x in range(m))
    return {"generators": gens, "row_mask": row_mask, "col_mask": col_mask, "verified": bool(ok)}


# ---------------------------------------------------------------------------
# GKS1 / GKS2
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GKS1Result:
    integrals: np.ndarray
    min_integral: float
    passed: bool


def _gibbs_weights(space: FiniteBasisSpace, H_coeffs: np.ndarray) -> np.ndarray:
    H = np.real(np.atleast_2d(H_coeffs) @ space.basis)
    H = H - H.max(axis=1, keepdims=True)
    w = np.exp(H) * space.mu
    return w / w.sum(axis=1, keepdims=True)


def gks1_check(space: FiniteBasisSpace, F_coeffs, H_coeffs, tol: float = 1e-12,
               diagnostic: bool = False) -> GKS1Result:
    """integral of F against mu_H = e^H mu / Z_H, batched over rows."""
    Fc = np.atleast_2d(np.asarray(F_coeffs, dtype=float))
    Hc = np.atleast_2d(np.asarray(H_coeffs, dtype=float))
    if not diagnostic and (np.any(Fc < 0) or np.any(Hc < 0)):
        raise ValueError("coefficients must be nonnegative (diagnostic=True to probe)")
    w = _gibbs_weights(space, Hc)
    vals = np.real(Fc @ space.basis)
    integrals = np.sum(vals * w, axis=1)
    mn = float(integrals.min())
    return GKS1Result(integrals, mn, bool(mn >= -tol))


@dataclass(frozen=True, eq=False)
class GKS2Result:
    min_correlation: float
    witness: tuple
    trials: int


def gks2_correlations(space: FiniteBasisSpace, F, G, H) -> np.ndarray:
    w = _gibbs_weights(space, H)
    fv = np.real(np.atleast_2d(F) @ space.basis)
    gv = np.real(np.atleast_2d(G) @ space.basis)
    return np.sum(fv * gv * w, axis=1) - np.sum(fv * w, axis=1) * np.sum(gv * w, axis=1)


def random_nonnegative_coefficients(rng: np.random.Generator, trials: int, n: int,
                                    scale: float = 1.0) -> np.ndarray:
    """Sparse exponential draws with a random overall scale per trial."""
    c = rng.exponential(1.0, size=(trials, n)) * (rng.random((trials, n)) < 0.5)
    return c * rng.uniform(0, scale, size=(trials, 1))


def gks2_search(space: FiniteBasisSpace, trials: int, seed: int = 0,
                batch: int = 4096) -> GKS2Result:
    """Minimum of <FG>_H - <F>_H <G>_H over seeded nonnegative draws.

    An exploration tool: the value found is reported, never asserted.
    """
    rng = np.random.default_rng(seed)
    n = space.size
    best = (np.inf, None)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        F = random_nonnegative_coefficients(rng, b, n)
        G = random_nonnegative_coefficients(rng, b, n)
        H = random_nonnegative_coefficients(rng, b, n, scale=2.0)
        corr = gks2_correlations(space, F, G, H)
        i = int(np.argmin(corr))
        if corr[i] < best[0]:
            best = (float(corr[i]), (F[i], G[i], H[i]))
        done += b
    return GKS2Result(best[0], best[1], trials)


# ---------------------------------------------------------------------------
# Three-point families
# ---------------------------------------------------------------------------

def three_point_orthogonal(o00: float, o01: float, o10: float, branch: int) -> np.ndarray | None:
    """3x3 orthogonal matrix with prescribed O00, O01, O10 (two branches).

    Returns None when the data admit no completion with a positive first
    column. Rows are points, columns are functions.
    """
    r0sq = 1 - o00 ** 2 - o01 ** 2
    c0sq = 1 - o00 ** 2 - o10 ** 2
    if r0sq < 0 or c0sq <= 0:
        return None
    o02 = np.sqrt(r0sq)
    o20 = np.sqrt(c0sq)
    # row 1 = (o10, o11, o12) orthonormal to row 0 and unit length
    # o10*o00 + o11*o01 + o12*o02 = 0, o10^2 + o11^2 + o12^2 = 1
    rhs = -o10 * o00
    rest = 1 - o10 ** 2
    nrm = o01 ** 2 + o02 ** 2
    if nrm == 0:
        return None
    base = rhs / nrm
    disc = rest - base ** 2 * nrm
    if disc < 0:
        return None
    t = np.sqrt(disc / nrm) * (1 if branch == 0 else -1)
    o11 = base * o01 - t * o02
    o12 = base * o02 + t * o01
    r0 = np.array([o00, o01, o02])
    r1 = np.array([o10, o11, o12])
    r2 = np.cross(r0, r1)
    if r2[0] < 0:
        r2 = -r2
    if abs(r2[0] - o20) > 1e-9 or r2[0] <= 0:
        return None
    return np.vstack([r0, r1, r2])


def uniform_three_point_search(trials: int, seed: int = 0, tol: float = 0.0,
                               batch: int = 100_000):
    """Seeded search for a real GKS basis on 3 points with uniform measure.

    The first column is fixed to 1/sqrt(3); the remaining two columns are an
    orthonormal basis of the complement, parametrized by an angle and a
    reflection bit. Function signs are covered by the angle and the bit.
    Returns (number of GKS hits, best minimal coefficient).
    """
    rng = np.random.default_rng(seed)
    e1 = np.array([1, -1, 0]) / np.sqrt(2)
    e2 = np.array([1, 1, -2]) / np.sqrt(6)
    hits, best = 0, -np.inf
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        phi = rng.uniform(0, 2 * np.pi, b)
        refl = rng.integers(0, 2, b) * 2 - 1
        c, s = np.cos(phi)[:, None], np.sin(phi)[:, None]
        f1 = np.sqrt(3) * (c * e1 + s * e2)
        f2 = np.sqrt(3) * refl[:, None] * (-s * e1 + c * e2)
        f = np.stack([np.ones((b, 3)), f1, f2], axis=1)
        a = np.einsum("tix,tjx,tkx->tijk", f, f, f, optimize=True) / 3
        mins = a.reshape(b, -1).min(axis=1)
        hits += int(np.sum(mins >= -tol))
        best = max(best, float(mins.max()))
        done += b
    return hits, best
