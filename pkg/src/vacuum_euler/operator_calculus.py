"""Exact polynomial substrate for the tangential/radial operator calculus.

Polynomials are dicts mapping exponent triples to exact rationals (ints or
Fractions). Operator atoms are strings:

    "L"    Lambda = x_i d_i
    "Pij"  angular derivative x_i d_j - x_j d_i   (i, j in 1..3)
    "Di"   rectangular derivative d_i

A word is a tuple of atoms composed left to right, so ("L", "D1") means
Lambda(d_1 F). Rational coefficients that appear in the decomposition of d_i
are stored as ``Coeff(num, k)`` meaning num / (r^2)^k, which keeps every
identity check exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable

import numpy as np

Mono = tuple[int, int, int]
Poly = dict  # Mono -> rational

AXES = (0, 1, 2)
ANGULAR = ("P12", "P13", "P23")
_ORDER = {"L": 0, "P12": 1, "P13": 2, "P23": 3}


# ---------------------------------------------------------------------------
# scalar polynomial kernel


def _clean(p: Poly) -> Poly:
    return {m: c for m, c in p.items() if c != 0}


def padd(*ps: Poly) -> Poly:
    out: Poly = {}
    for p in ps:
        for m, c in p.items():
            out[m] = out.get(m, 0) + c
    return _clean(out)


def pscale(p: Poly, s) -> Poly:
    if s == 0:
        return {}
    return {m: c * s for m, c in p.items()}


def pmul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for (a, b, c), u in p.items():
        for (d, e, f), v in q.items():
            k = (a + d, b + e, c + f)
            out[k] = out.get(k, 0) + u * v
    return _clean(out)


def pdiff(p: Poly, i: int) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        if m[i]:
            k = list(m)
            k[i] -= 1
            out[tuple(k)] = out.get(tuple(k), 0) + c * m[i]
    return _clean(out)


def pmulx(p: Poly, i: int) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        k = list(m)
        k[i] += 1
        out[tuple(k)] = c
    return out


def peval(p: Poly, pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.zeros(len(pts))
    for (a, b, c), v in p.items():
        out += float(v) * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c
    return out


def monomial(a: int, b: int, c: int, coef=1) -> Poly:
    return {(a, b, c): coef}


def x(i: int) -> Poly:
    e = [0, 0, 0]
    e[i] = 1
    return {tuple(e): 1}


R2: Poly = {(2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1}


def r2_power(k: int) -> Poly:
    out: Poly = {(0, 0, 0): 1}
    for _ in range(k):
        out = pmul(out, R2)
    return out


def monomial_basis(max_degree: int) -> list[Mono]:
    return [
        (a, b, c)
        for d in range(max_degree + 1)
        for a in range(d + 1)
        for b in range(d - a + 1)
        for c in [d - a - b]
    ]


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class PolyField:
    """Scalar (arity 1) or 3-vector polynomial field with exact coefficients."""

    comps: tuple

    @staticmethod
    def scalar(p: Poly) -> "PolyField":
        return PolyField((_clean(dict(p)),))

    @staticmethod
    def vector(p1: Poly, p2: Poly, p3: Poly) -> "PolyField":
        return PolyField((_clean(dict(p1)), _clean(dict(p2)), _clean(dict(p3))))

    @property
    def arity(self) -> int:
        return len(self.comps)

    def map(self, f) -> "PolyField":
        return PolyField(tuple(f(c) for c in self.comps))

    def __add__(self, other: "PolyField") -> "PolyField":
        return PolyField(tuple(padd(a, b) for a, b in zip(self.comps, other.comps, strict=True)))

    def __sub__(self, other: "PolyField") -> "PolyField":
        return PolyField(
            tuple(padd(a, pscale(b, -1)) for a, b in zip(self.comps, other.comps, strict=True))
        )

    def times(self, p: Poly) -> "PolyField":
        return self.map(lambda c: pmul(c, p))

    def is_zero(self) -> bool:
        return all(not c for c in self.comps)

    def evaluate(self, pts) -> np.ndarray:
        return np.stack([peval(c, pts) for c in self.comps], axis=-1)


def _as_field(F) -> PolyField:
    return F if isinstance(F, PolyField) else PolyField.scalar(F)


# ---------------------------------------------------------------------------
# atoms and words


def _axes(atom: str) -> tuple[int, int]:
    return int(atom[1]) - 1, int(atom[2]) - 1


def apply_atom_poly(atom: str, p: Poly) -> Poly:
    if atom == "L":
        return _clean({m: c * sum(m) for m, c in p.items()})
    if atom[0] == "P":
        i, j = _axes(atom)
        if i == j:
            return {}
        return padd(pmulx(pdiff(p, j), i), pscale(pmulx(pdiff(p, i), j), -1))
    if atom[0] == "D":
        return pdiff(p, int(atom[1]) - 1)
    raise ValueError(f"unknown atom {atom!r}")


def apply(word: Iterable[str], F) -> PolyField:
    """Apply a word (leftmost atom acts last) to a polynomial field."""
    F = _as_field(F)
    for atom in reversed(tuple(word)):
        F = F.map(lambda c, a=atom: apply_atom_poly(a, c))
    return F


def ndell_word(m: int, n: tuple[int, int, int]) -> tuple[str, ...]:
    """Lambda^m dslash_12^n1 dslash_13^n2 dslash_23^n3."""
    return ("L",) * m + ("P12",) * n[0] + ("P13",) * n[1] + ("P23",) * n[2]


def rect_word(k: tuple[int, int, int]) -> tuple[str, ...]:
    return ("D1",) * k[0] + ("D2",) * k[1] + ("D3",) * k[2]


def commutator(word_a, word_b, F) -> PolyField:
    F = _as_field(F)
    return apply(word_a, apply(word_b, F)) - apply(word_b, apply(word_a, F))


# ---------------------------------------------------------------------------
# rational coefficients num / (r^2)^k


@dataclass(frozen=True)
class Coeff:
    num: tuple  # frozen items of a Poly
    k: int

    @staticmethod
    def of(num: Poly, k: int = 0) -> "Coeff":
        return Coeff(tuple(sorted(_clean(num).items())), k)

    @property
    def poly(self) -> Poly:
        return dict(self.num)

    def is_zero(self) -> bool:
        return not self.num

    def lift(self, k: int) -> Poly:
        """Numerator over the common denominator (r^2)^k."""
        return pmul(self.poly, r2_power(k - self.k))

    def __add__(self, other: "Coeff") -> "Coeff":
        k = max(self.k, other.k)
        return Coeff.of(padd(self.lift(k), other.lift(k)), k)

    def __mul__(self, other: "Coeff") -> "Coeff":
        return Coeff.of(pmul(self.poly, other.poly), self.k + other.k)

    def scale(self, s) -> "Coeff":
        return Coeff.of(pscale(self.poly, s), self.k)

    def act(self, atom: str) -> "Coeff":
        """Derivative of the coefficient by a first-order atom."""
        p = self.poly
        if atom == "L":
            # Lambda (r^2)^-k = -2k (r^2)^-k
            return Coeff.of(padd(apply_atom_poly("L", p), pscale(p, -2 * self.k)), self.k)
        if atom[0] == "P":
            return Coeff.of(apply_atom_poly(atom, p), self.k)
        i = int(atom[1]) - 1
        return Coeff.of(
            padd(pmul(pdiff(p, i), R2), pscale(pmulx(p, i), -2 * self.k)), self.k + 1
        )

    def evaluate(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rr = np.sum(pts**2, axis=1)
        return peval(self.poly, pts) / rr**self.k


ONE = Coeff.of({(0, 0, 0): 1})

Expr = dict  # word -> Coeff


def _expr_add(e: Expr, word: tuple, c: Coeff) -> None:
    if c.is_zero():
        return
    cur = e.get(word)
    s = c if cur is None else cur + c
    if s.is_zero():
        e.pop(word, None)
    else:
        e[word] = s


def decompose_rect(q: int) -> list[tuple[Coeff, str]]:
    """d_q = (x_j/r^2) dslash_jq + (x_q/r^2) Lambda, as (coefficient, atom) pairs."""
    out = [(Coeff.of(x(j), 1), f"P{j + 1}{q + 1}") for j in AXES if j != q]
    out.append((Coeff.of(x(q), 1), "L"))
    return out


def _canon_angular(atom: str) -> tuple[int, str | None]:
    i, j = _axes(atom)
    if i == j:
        return 0, None
    if i < j:
        return 1, atom
    return -1, f"P{j + 1}{i + 1}"


def _angular_bracket(a: str, b: str) -> list[tuple[int, str]]:
    """[L_ij, L_kl] = d_jk L_il - d_ik L_jl - d_jl L_ik + d_il L_jk."""
    i, j = _axes(a)
    k, l = _axes(b)
    out = []
    for cond, sign, p, q in (
        (j == k, 1, i, l),
        (i == k, -1, j, l),
        (j == l, -1, i, k),
        (i == l, 1, j, k),
    ):
        if cond and p != q:
            out.append((sign, f"P{p + 1}{q + 1}"))
    return out


def normal_order(expr: Expr) -> Expr:
    """Rewrite words over {L, Pij} as Lambda^a dslash_12^b1 dslash_13^b2 dslash_23^b3."""
    out: Expr = {}
    work = list(expr.items())
    while work:
        word, c = work.pop()
        # canonical angular atoms, absorbing signs
        sign, atoms = 1, []
        for at in word:
            if at == "L":
                atoms.append(at)
                continue
            if at[0] != "P":
                raise ValueError(f"cannot normal-order atom {at!r}")
            s, canon = _canon_angular(at)
            if canon is None:
                sign = 0
                break
            sign *= s
            atoms.append(canon)
        if sign == 0:
            continue
        if sign < 0:
            c = c.scale(-1)
        for p in range(len(atoms) - 1):
            a, b = atoms[p], atoms[p + 1]
            if _ORDER[a] > _ORDER[b]:
                swapped = atoms[:p] + [b, a] + atoms[p + 2 :]
                work.append((tuple(swapped), c))
                if a != "L" and b != "L":
                    for s, at in _angular_bracket(a, b):
                        work.append((tuple(atoms[:p] + [at] + atoms[p + 2 :]), c.scale(s)))
                break
        else:
            _expr_add(out, tuple(atoms), c)
    return out


def word_signature(word: tuple) -> tuple[int, tuple[int, int, int]]:
    """(a, b) for a normal-ordered word Lambda^a dslash^b."""
    a = word.count("L")
    return a, tuple(word.count(p) for p in ANGULAR)


def _push_left(prefix: tuple, c: Coeff, rest: tuple, out: Expr) -> None:
    """Accumulate prefix o (c * rest) with the coefficient moved to the far left."""
    if not prefix:
        _expr_add(out, rest, c)
        return
    y = prefix[-1]
    dc = c.act(y)
    if not dc.is_zero():
        _push_left(prefix[:-1], dc, rest, out)
    _push_left(prefix[:-1], c, (y,) + rest, out)


def _bracket_with_rect(atom: str, s: int) -> list[tuple[int, int]]:
    """[atom, d_s] as a signed list of rectangular derivatives (sign, axis)."""
    if atom == "L":
        return [(-1, s)]
    j, l = _axes(atom)
    # [dslash_jl, d_s] = -(delta_sj d_l - delta_sl d_j)
    out = []
    if s == j:
        out.append((-1, l))
    if s == l:
        out.append((1, j))
    return out


@dataclass(frozen=True)
class CommutatorExpansion:
    m: int
    n: tuple[int, int, int]
    s: int  # 1-based axis
    terms: dict  # (a, b) -> Coeff

    def max_k(self) -> int:
        return max((c.k for c in self.terms.values()), default=0)

    def index_constraint_ok(self) -> bool:
        cap = self.m + 1 if sum(self.n) > 0 else self.m
        total = self.m + sum(self.n)
        return all(a <= cap and 1 <= a + sum(b) <= total for a, b in self.terms)


def expand_commutator(m: int, n: tuple[int, int, int], s: int) -> CommutatorExpansion:
    """Constructive expansion of [Lambda^m dslash^n, d_s] into sum K Lambda^a dslash^b.

    d_s starts at the right end of the word and is swapped leftwards one atom at
    a time. Each swap leaves a bracket; the rectangular derivative it produces
    is rewritten with the decomposition identity and its coefficient is pushed
    to the left of the remaining atoms. After d_s reaches the far left the
    leading term cancels against -d_s Lambda^m dslash^n.
    """
    n = tuple(n)
    if m < 0 or min(n) < 0 or m + sum(n) < 1:
        raise ValueError("need m + |n| >= 1 with nonnegative indices")
    si = s - 1
    word = ndell_word(m, n)
    remainder: Expr = {}
    for p in range(len(word), 0, -1):
        prefix, atom, suffix = word[: p - 1], word[p - 1], word[p:]
        for sign, q in _bracket_with_rect(atom, si):
            for c, new in decompose_rect(q):
                _push_left(prefix, c.scale(sign), (new,) + suffix, remainder)
    ordered = normal_order(remainder)
    terms: dict = {}
    for w, c in ordered.items():
        key = word_signature(w)
        terms[key] = terms[key] + c if key in terms else c
    terms = {k: v for k, v in terms.items() if not v.is_zero()}
    return CommutatorExpansion(m, n, s, terms)


def _exact_difference(lhs: PolyField, rhs_terms: list[tuple[Coeff, PolyField]]) -> PolyField:
    """(r^2)^K * lhs - sum num (r^2)^(K-k) * field, exactly."""
    K = max((c.k for c, _ in rhs_terms), default=0)
    acc = lhs.times(r2_power(K))
    for c, f in rhs_terms:
        acc = acc - f.times(c.lift(K))
    return acc


def _pointwise(lhs: PolyField, rhs_terms, samples) -> float:
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    val = lhs.evaluate(pts)
    for c, f in rhs_terms:
        val = val - c.evaluate(pts)[:, None] * f.evaluate(pts)
    return float(np.max(np.abs(val))) if val.size else 0.0


def _check_samples(samples) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if np.any(np.sum(pts**2, axis=1) == 0.0):
        raise ValueError("sample at the origin: decomposition coefficients are singular there")
    return pts


def annulus_samples(count: int = 100, r_lo: float = 0.4, r_hi: float = 0.95, seed: int = 0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v * rng.uniform(r_lo, r_hi, size=count)[:, None]


def rect_decomposition_residual(i: int, F, samples) -> float:
    """Max pointwise gap in d_i F = (x_j/r^2) dslash_ji F + (x_i/r^2) Lambda F (i is 1-based)."""
    F = _as_field(F)
    pts = _check_samples(samples)
    lhs = apply((f"D{i}",), F)
    rhs = [(c, apply((atom,), F)) for c, atom in decompose_rect(i - 1)]
    return _pointwise(lhs, rhs, pts)


def higher_commutator_expand(m, n, s, F, samples=None) -> dict:
    """Check the constructive expansion on F, exactly and pointwise."""
    F = _as_field(F)
    exp = expand_commutator(m, tuple(n), s)
    word = ndell_word(m, tuple(n))
    lhs = commutator(word, (f"D{s}",), F)
    rhs = [(c, apply(ndell_word(a, b), F)) for (a, b), c in exp.terms.items()]
    out = {
        "expansion": exp,
        "exact": _exact_difference(lhs, rhs).is_zero(),
        "index_ok": exp.index_constraint_ok(),
    }
    if samples is not None:
        out["residual"] = _pointwise(lhs, rhs, _check_samples(samples))
    return out


# ---------------------------------------------------------------------------
# conversions between the two derivative families


def ndell_rect_coefficients(m: int, n) -> dict:
    """Lambda^m dslash^n = sum_k Q_k d^k with polynomial Q_k, keyed by multi-index k."""
    op: dict = {(0, 0, 0): {(0, 0, 0): 1}}
    for atom in reversed(ndell_word(m, tuple(n))):
        if atom == "L":
            parts = [(1, i, i) for i in AXES]
        else:
            i, j = _axes(atom)
            parts = [(1, i, j), (-1, j, i)]
        new: dict = {}
        for k, q in op.items():
            for sign, mul, der in parts:
                # x_mul d_der (q d^k) = x_mul (d_der q) d^k + x_mul q d^(k + e_der)
                dq = pscale(pmulx(pdiff(q, der), mul), sign)
                kk = list(k)
                kk[der] += 1
                hq = pscale(pmulx(q, mul), sign)
                for key, val in ((k, dq), (tuple(kk), hq)):
                    if val:
                        new[key] = padd(new.get(key, {}), val)
        op = {k: v for k, v in new.items() if v}
    return op


def ndell_to_rect(m, n, F, samples=None) -> dict:
    F = _as_field(F)
    coeffs = ndell_rect_coefficients(m, n)
    lhs = apply(ndell_word(m, tuple(n)), F)
    rhs_terms = [(Coeff.of(q), apply(rect_word(k), F)) for k, q in coeffs.items()]
    out = {"coefficients": coeffs, "exact": _exact_difference(lhs, rhs_terms).is_zero()}
    if samples is not None:
        out["residual"] = _pointwise(lhs, rhs_terms, np.atleast_2d(samples))
    return out


def rect_ndell_coefficients(k) -> dict:
    """d^k = sum Z_(a,b) Lambda^a dslash^b with Z = num / (r^2)^j, keyed by (a, b)."""
    expr: Expr = {(): ONE}
    for atom in reversed(rect_word(tuple(k))):
        q = int(atom[1]) - 1
        new: Expr = {}
        for w, c in expr.items():
            _expr_add(new, w, c.act(atom))
            for dc, at in decompose_rect(q):
                _expr_add(new, (at,) + w, c * dc)
        expr = normal_order(new)
    terms: dict = {}
    for w, c in expr.items():
        key = word_signature(w)
        terms[key] = terms[key] + c if key in terms else c
    return {k2: v for k2, v in terms.items() if not v.is_zero()}


def rect_to_ndell(k, F, samples) -> dict:
    F = _as_field(F)
    pts = _check_samples(samples)
    coeffs = rect_ndell_coefficients(k)
    lhs = apply(rect_word(tuple(k)), F)
    rhs_terms = [(c, apply(ndell_word(a, b), F)) for (a, b), c in coeffs.items()]
    return {
        "coefficients": coeffs,
        "exact": _exact_difference(lhs, rhs_terms).is_zero(),
        "residual": _pointwise(lhs, rhs_terms, pts),
    }


# ---------------------------------------------------------------------------
# exhaustive suite


def _pairs():
    return [(i, j) for i in range(1, 4) for j in range(1, 4) if i != j]


def base_identity_suite(max_degree: int = 6) -> dict:
    """Exact check of the base commutators and structural facts on a monomial basis.

    Returns a mapping from identity name to the number of failing basis monomials.
    """
    basis = [PolyField.scalar(monomial(*m)) for m in monomial_basis(max_degree)]
    fails = {
        "[dslash_ij, Lambda] = 0": 0,
        "[dslash_ij, dslash_jk] = dslash_ik": 0,
        "[d_m, Lambda] = d_m": 0,
        "[d_m, dslash_ji] = delta_mj d_i - delta_mi d_j": 0,
        "Lambda homogeneity": 0,
        "dslash_ij = -dslash_ji": 0,
    }
    for F in basis:
        (mono,) = F.comps[0].keys()
        if not (apply(("L",), F) - F.times({(0, 0, 0): sum(mono)})).is_zero():
            fails["Lambda homogeneity"] += 1
        for i, j in _pairs():
            pij, pji = f"P{i}{j}", f"P{j}{i}"
            if not commutator((pij,), ("L",), F).is_zero():
                fails["[dslash_ij, Lambda] = 0"] += 1
            if not (apply((pij,), F) + apply((pji,), F)).is_zero():
                fails["dslash_ij = -dslash_ji"] += 1
            for k in range(1, 4):
                if k == j:
                    continue
                lhs = commutator((pij,), (f"P{j}{k}",), F)
                rhs = apply((f"P{i}{k}",), F) if i != k else PolyField.scalar({})
                if not (lhs - rhs).is_zero():
                    fails["[dslash_ij, dslash_jk] = dslash_ik"] += 1
            for mm in range(1, 4):
                lhs = commutator((f"D{mm}",), (pji,), F)
                rhs = PolyField.scalar({})
                if mm == j:
                    rhs = rhs + apply((f"D{i}",), F)
                if mm == i:
                    rhs = rhs - apply((f"D{j}",), F)
                if not (lhs - rhs).is_zero():
                    fails["[d_m, dslash_ji] = delta_mj d_i - delta_mi d_j"] += 1
        for mm in range(1, 4):
            if not (commutator((f"D{mm}",), ("L",), F) - apply((f"D{mm}",), F)).is_zero():
                fails["[d_m, Lambda] = d_m"] += 1
    return fails


def radial_annihilation_ok(max_power: int = 3) -> bool:
    for k in range(max_power + 1):
        F = PolyField.scalar(r2_power(k))
        for p in ANGULAR:
            if not apply((p,), F).is_zero():
                return False
    return True


def multi_indices(total_max: int, total_min: int = 0):
    return [
        (a, b, c)
        for a, b, c in product(range(total_max + 1), repeat=3)
        if total_min <= a + b + c <= total_max
    ]


def full_suite(max_degree: int = 6, max_order: int = 3, samples=None) -> dict:
    """Run every identity family. Values are failure counts (0 means pass)."""
    if samples is None:
        samples = annulus_samples()
    result = dict(base_identity_suite(max_degree))
    result["dslash annihilates p(r^2)"] = 0 if radial_annihilation_ok() else 1
    basis = [PolyField.scalar(monomial(*m)) for m in monomial_basis(max_degree)]

    exp_fail = 0
    idx_fail = 0
    for m in range(max_order + 1):
        for n in multi_indices(max_order - m):
            if m + sum(n) == 0:
                continue
            for s in (1, 2, 3):
                exp = expand_commutator(m, n, s)
                if not exp.index_constraint_ok():
                    idx_fail += 1
                word = ndell_word(m, n)
                for F in basis:
                    lhs = commutator(word, (f"D{s}",), F)
                    rhs = [(c, apply(ndell_word(a, b), F)) for (a, b), c in exp.terms.items()]
                    if not _exact_difference(lhs, rhs).is_zero():
                        exp_fail += 1
    result["higher-order commutator expansion"] = exp_fail
    result["expansion index constraint"] = idx_fail

    # pointwise reconstructions on a generic test field
    test = PolyField.scalar(
        padd(monomial(3, 2, 0), monomial(1, 1, 2, Fraction(1, 3)), monomial(0, 4, 1, -2), monomial(2, 0, 0))
    )
    tol = 1e-10
    b_fail = 0
    worst = 0.0
    for m in range(3):
        for n in multi_indices(2 - m):
            r = ndell_to_rect(m, n, test, samples)
            worst = max(worst, r["residual"])
            b_fail += (not r["exact"]) or r["residual"] > tol
    for k in multi_indices(2, 1):
        r = rect_to_ndell(k, test, samples)
        worst = max(worst, r["residual"])
        b_fail += (not r["exact"]) or r["residual"] > tol
    result["derivative-family reconstructions"] = int(b_fail)
    result["_worst_reconstruction_residual"] = worst
    return result
