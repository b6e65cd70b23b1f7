"""Class spaces of finite groups with their character bases.

Groups are stored as multiplication tables over element indices. Character
values come from closed forms for cyclic and dihedral groups, tensor
products for direct products, extension along a subgroup chain for abelian
tables, or a user-supplied table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .finite_hypergroup import (
    FiniteBasisSpace, convolve, hgp_kernel, is_gks, is_hgp, multiplication_tensor, validate_uob)

MAX_ORDER = 4096


class GroupSizeError(ValueError):
    pass


class UnsupportedGroupError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    order: int
    mult: np.ndarray
    inverse: np.ndarray
    identity: int
    # ("cyclic", n) / ("dihedral", n) factors, row-major over a product
    factors: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.mult, dtype=np.int64)
        if m.shape != (self.order, self.order):
            raise ValueError("multiplication table has the wrong shape")
        object.__setattr__(self, "mult", m)
        object.__setattr__(self, "inverse", np.asarray(self.inverse, dtype=np.int64))

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.T))

    def power(self, g: int, k: int) -> int:
        out = self.identity
        for _ in range(k):
            out = int(self.mult[out, g])
        return out

    def check_axioms(self, exhaustive_limit: int = 64, samples: int = 20000, seed: int = 0) -> None:
        n, m, e = self.order, self.mult, self.identity
        idx = np.arange(n)
        if not (np.array_equal(m[e], idx) and np.array_equal(m[:, e], idx)):
            raise ValueError("identity law fails")
        if not (np.all(m[idx, self.inverse] == e) and np.all(m[self.inverse, idx] == e)):
            raise ValueError("inverse law fails")
        if n <= exhaustive_limit:
            lhs = m[m[:, :, None], idx[None, None, :]]
            rhs = m[idx[:, None, None], m[None, :, :]]
            ok = np.array_equal(lhs, rhs)
        else:
            rng = np.random.default_rng(seed)
            a, b, c = rng.integers(0, n, (3, samples))
            ok = np.array_equal(m[m[a, b], c], m[a, m[b, c]])
        if not ok:
            raise ValueError("associativity fails")


def _from_table(mult: np.ndarray, factors: tuple = ()) -> FiniteGroup:
    mult = np.asarray(mult, dtype=np.int64)
    n = mult.shape[0]
    if n > MAX_ORDER:
        raise GroupSizeError(f"order {n} exceeds the cap {MAX_ORDER}")
    ids = [e for e in range(n) if np.array_equal(mult[e], np.arange(n))]
    if len(ids) != 1:
        raise ValueError("table has no unique identity")
    e = ids[0]
    if mult.ndim != 2 or mult.shape[1] != n or not np.all(np.any(mult == e, axis=1)):
        raise ValueError("some element has no inverse")
    inv = np.array([int(np.flatnonzero(mult[g] == e)[0]) for g in range(n)])
    G = FiniteGroup(n, mult, inv, e, factors)
    G.check_axioms()
    return G


def cyclic_group(n: int) -> FiniteGroup:
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_ORDER:
        raise GroupSizeError(f"order {n} exceeds the cap {MAX_ORDER}")
    a = np.arange(n)
    return _from_table((a[:, None] + a[None, :]) % n, (("cyclic", n),))


def dihedral_group(n: int) -> FiniteGroup:
    """Symmetries of the n-gon; element k + n*e stands for r^k s^e."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if 2 * n > MAX_ORDER:
        raise GroupSizeError(f"order {2 * n} exceeds the cap {MAX_ORDER}")
    g = np.arange(2 * n)
    k, e = g % n, g // n
    sign = 1 - 2 * e
    rot = (k[:, None] + sign[:, None] * k[None, :]) % n
    ref = (e[:, None] + e[None, :]) % 2
    return _from_table(rot + n * ref, (("dihedral", n),))


def direct_product(G: FiniteGroup, H: FiniteGroup) -> FiniteGroup:
    """Element g*|H| + h stands for (g, h)."""
    n = G.order * H.order
    if n > MAX_ORDER:
        raise GroupSizeError(f"order {n} exceeds the cap {MAX_ORDER}")
    mult = (G.mult[:, None, :, None] * H.order + H.mult[None, :, None, :]).reshape(n, n)
    factors = G.factors + H.factors if G.factors and H.factors else ()
    return _from_table(mult, factors)


def product_of(groups) -> FiniteGroup:
    out = groups[0]
    for G in groups[1:]:
        out = direct_product(out, G)
    return out


def group_from_json(text: str) -> FiniteGroup:
    d = json.loads(text)
    if "mult" not in d:
        raise ValueError("missing key 'mult'")
    mult = np.array(d["mult"], dtype=np.int64)
    if "order" in d and d["order"] != mult.shape[0]:
        raise ValueError("order does not match the table")
    return _from_table(mult)


# ---------------------------------------------------------------------------
# Classes and characters
# ---------------------------------------------------------------------------

def conjugacy_classes(G: FiniteGroup) -> list[tuple]:
    """Classes sorted by (size, smallest element)."""
    seen = np.zeros(G.order, dtype=bool)
    classes = []
    for x in range(G.order):
        if seen[x]:
            continue
        orbit = np.unique(G.mult[G.mult[:, x], G.inverse])  # g x g^{-1}
        seen[orbit] = True
        classes.append(tuple(int(v) for v in orbit))
    return sorted(classes, key=lambda c: (len(c), c[0]))


def _cyclic_chars(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n)


def _dihedral_chars(n: int) -> np.ndarray:
    g = np.arange(2 * n)
    k, e = g % n, g // n
    rows = [np.ones(2 * n), (-1.0) ** e]
    if n % 2 == 0:
        rows += [(-1.0) ** k, (-1.0) ** (k + e)]
    for h in range(1, (n - 1) // 2 + 1):
        rows.append(np.where(e == 0, 2 * np.cos(2 * np.pi * h * k / n), 0.0))
    return np.array(rows, dtype=complex)


def _abelian_chars(G: FiniteGroup) -> np.ndarray:
    """Characters of an abelian table by extension along a subgroup chain."""
    members = [G.identity]
    chars = np.ones((1, 1), dtype=complex)  # chars[c, position in members]
    pos = {G.identity: 0}
    while len(members) < G.order:
        g = next(x for x in range(G.order) if x not in pos)
        m, gm = 1, g
        while gm not in pos:
            gm = int(G.mult[gm, g])
            m += 1
        new_members = list(members)
        for j in range(1, m):
            gj = G.power(g, j)
            new_members += [int(G.mult[h, gj]) for h in members]
        new_chars = []
        for chi in chars:
            base = chi[pos[gm]]
            root = base ** (1.0 / m) if base != 0 else 1.0
            for r in range(m):
                w = root * np.exp(2j * np.pi * r / m)
                new_chars.append(np.concatenate([chi * w ** j for j in range(m)]))
        members = new_members
        pos = {x: i for i, x in enumerate(members)}
        chars = np.array(new_chars)
    order = [pos[x] for x in range(G.order)]
    return chars[:, order]


def element_characters(G: FiniteGroup) -> np.ndarray:
    """Character values per element, trivial character first."""
    if G.factors:
        out = np.ones((1, 1), dtype=complex)
        for kind, n in G.factors:
            block = _cyclic_chars(n) if kind == "cyclic" else _dihedral_chars(n)
            out = np.einsum("ag,bh->abgh", out, block).reshape(
                out.shape[0] * block.shape[0], out.shape[1] * block.shape[1])
        return out
    if G.is_abelian():
        return _abelian_chars(G)
    raise UnsupportedGroupError("non-abelian table without a supplied character table")


@dataclass(frozen=True, eq=False)
class ClassSpace:
    classes: tuple
    nu: np.ndarray
    chars: np.ndarray
    identity_class: int = 0
    group: FiniteGroup | None = field(default=None, repr=False)

    def to_space(self) -> FiniteBasisSpace:
        return FiniteBasisSpace(tuple(self.classes), self.nu, self.chars, "complex")

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.chars.imag)) <= tol)


def character_table(G: FiniteGroup, table=None, tol: float = 1e-10) -> ClassSpace:
    """Class space of G; ``table`` (characters x classes) overrides the closed forms."""
    classes = conjugacy_classes(G)
    nu = np.array([len(c) for c in classes], dtype=float) / G.order
    if table is not None:
        chars = np.asarray(table, dtype=complex)
    else:
        el = element_characters(G)
        chars = el[:, [c[0] for c in classes]]
        # keep one copy of each class function (product tables repeat none)
        for i, c in enumerate(classes):
            if np.max(np.abs(el[:, list(c)] - chars[:, [i]])) > 1e-9:
                raise UnsupportedGroupError("closed-form values are not class functions")
    if chars.shape != (len(classes), len(classes)):
        raise ValueError(f"need {len(classes)} characters on {len(classes)} classes")
    e_cls = next(i for i, c in enumerate(classes) if G.identity in c)
    triv = np.flatnonzero(np.all(np.abs(chars - 1) < 1e-12, axis=1))
    if len(triv) != 1:
        raise ValueError("table must contain exactly one trivial character")
    order = [int(triv[0])] + [i for i in range(len(classes)) if i != triv[0]]
    cs = ClassSpace(tuple(classes), nu, chars[order], e_cls, G)
    rep = validate_uob(cs.to_space(), tol)
    if not rep.passed:
        raise ValueError(f"character table fails orthonormality ({rep.orthonormality_defect:.3g})")
    return cs


def character_table_from_json(G: FiniteGroup, text: str) -> ClassSpace:
    d = json.loads(text)
    rows = d["chars"] if isinstance(d, dict) else d
    table = [[complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in row]
             for row in rows]
    return character_table(G, table)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupReport:
    uob_defect: float
    gks: bool
    gks_min: float
    hgp: bool
    hgp_min: float
    integer_defect: float
    max_imaginary: float
    passed: bool


def verify_gks_hgp(cs: ClassSpace, tol: float = 1e-9) -> GroupReport:
    space = cs.to_space()
    uob = validate_uob(space, 1e-10)
    g = is_gks(space, tol)
    h = is_hgp(space, cs.identity_class, tol)
    a = multiplication_tensor(space)
    int_def = float(np.max(np.abs(a - np.round(a.real))))
    imag = max(g.max_imaginary, h.max_imaginary)
    ok = uob.passed and g.passed and h.passed and int_def < tol
    return GroupReport(uob.orthonormality_defect, g.passed, g.min_coefficient, h.passed,
                       h.min_value, int_def, imag, bool(ok))


class CountInconsistency(RuntimeError):
    pass


def structure_counts(G: FiniteGroup, classes) -> np.ndarray:
    """m[x, y, z] = #{(g1, g2) in x times y with g1 g2 = g} for g in z."""
    c = len(classes)
    label = np.empty(G.order, dtype=np.int64)
    for i, cl in enumerate(classes):
        label[list(cl)] = i
    m = np.zeros((c, c, c), dtype=np.int64)
    for z, cz in enumerate(classes):
        counts = []
        for g in cz:
            # g1 g2 = g  <=>  g2 = g1^{-1} g
            g2 = G.mult[G.inverse, g]
            cnt = np.zeros((c, c), dtype=np.int64)
            np.add.at(cnt, (label, label[g2]), 1)
            counts.append(cnt)
        if any(not np.array_equal(counts[0], cnt) for cnt in counts[1:]):
            raise CountInconsistency(f"count depends on the representative of class {z}")
        m[:, :, z] = counts[0]
    return m


def kernel_count_check(G: FiniteGroup, cs: ClassSpace) -> float:
    """max |K(x,y,z) - |G| m(x,y,z) / (|x||y|)| over all class triples."""
    m = structure_counts(G, cs.classes)
    sizes = np.array([len(c) for c in cs.classes], dtype=float)
    k_count = G.order * m / (sizes[:, None, None] * sizes[None, :, None])
    K = hgp_kernel(cs.to_space(), cs.identity_class).K
    return float(np.max(np.abs(K - k_count)))


def class_convolution(cs: ClassSpace, nu1, nu2) -> np.ndarray:
    return convolve(cs.to_space(), cs.identity_class, nu1, nu2).masses


def realify(cs: ClassSpace, tol: float = 1e-10) -> ClassSpace:
    """Merge each class with its inverse class and keep real parts of characters."""
    G = cs.group
    if G is None:
        raise ValueError("realify needs the underlying group")
    index = {x: i for i, c in enumerate(cs.classes) for x in c}
    merged, seen = [], set()
    for i, c in enumerate(cs.classes):
        if i in seen:
            continue
        j = index[int(G.inverse[c[0]])]
        group_ids = sorted({i, j})
        seen.update(group_ids)
        merged.append(group_ids)
    elems = [tuple(sorted(x for gi in ids for x in cs.classes[gi])) for ids in merged]
    order = sorted(range(len(merged)), key=lambda r: (len(elems[r]), elems[r][0]))
    merged = [merged[r] for r in order]
    elems = [elems[r] for r in order]
    nu = np.array([cs.nu[ids].sum() for ids in merged])
    reps = [ids[0] for ids in merged]
    kept, used = [], set()
    for i, chi in enumerate(cs.chars):
        if i in used:
            continue
        conj = [j for j in range(len(cs.chars))
                if j not in used and np.max(np.abs(cs.chars[j] - chi.conj())) < 1e-9]
        used.add(i)
        used.update(conj)
        kept.append(i)
    re = cs.chars[kept][:, reps].real
    norms = np.sqrt((re ** 2) @ nu)
    re = re / norms[:, None]
    e_cls = next(r for r, ids in enumerate(merged) if cs.identity_class in ids)
    out = ClassSpace(tuple(elems), nu, re.astype(complex), e_cls, G)
    space = FiniteBasisSpace(out.classes, nu, re, "real")
    if not validate_uob(space, tol).passed:
        raise RuntimeError("real parts do not form an orthonormal basis")
    if not is_gks(space, tol).passed or not is_hgp(space, e_cls, tol).passed:
        raise RuntimeError("realified space lost GKS or HGP")
    return out


def real_space(cs: ClassSpace) -> FiniteBasisSpace:
    field_flag = "real" if cs.is_real() else "complex"
    basis = cs.chars.real if field_flag == "real" else cs.chars
    return FiniteBasisSpace(tuple(cs.classes), cs.nu, basis, field_flag)
