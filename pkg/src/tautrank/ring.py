"""Graded polynomial arithmetic and graded pieces of (quotient) polynomial rings.

Monomials are exponent tuples and polynomials are plain ``{monomial: Fraction}``
dicts without zero coefficients.  Within one degree the canonical order is
lexicographic on exponent tuples, largest first, so ``x0**2`` precedes
``x0*x1`` precedes ``x1**2``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache

from .errors import ContractError, ParseError
from .exactla import Echelon, as_scalar

Monomial = tuple
Polynomial = dict


# ---------------------------------------------------------------------------
# arithmetic


def monomial_degree(m: Monomial) -> int:
    return sum(m)


def poly_add(p: Polynomial, q: Polynomial, scale=1) -> Polynomial:
    """Return ``p + scale*q`` as a new polynomial."""
    out = dict(p)
    add_into(out, q, scale)
    return out


def add_into(acc: Polynomial, q: Polynomial, scale=1) -> None:
    for m, c in q.items():
        v = acc.get(m, 0) + scale * c
        if v:
            acc[m] = v
        else:
            acc.pop(m, None)


def poly_scale(p: Polynomial, c) -> Polynomial:
    c = as_scalar(c)
    if not c:
        return {}
    return {m: v * c for m, v in p.items()}


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def monomial_times(mono: Monomial, p: Polynomial, scale=1) -> Polynomial:
    return {tuple(a + b for a, b in zip(mono, m)): c * scale for m, c in p.items()}


def poly_degree(p: Polynomial):
    """Common degree of a homogeneous polynomial; None for zero; raises if inhomogeneous."""
    degs = {sum(m) for m in p}
    if not degs:
        return None
    if len(degs) > 1:
        raise ContractError(f"polynomial is not homogeneous (degrees {sorted(degs)})")
    return degs.pop()


def is_homogeneous(p: Polynomial) -> bool:
    return len({sum(m) for m in p}) <= 1


def derive(p: Polynomial, var: int) -> Polynomial:
    out = {}
    for m, c in p.items():
        e = m[var]
        if e:
            mm = list(m)
            mm[var] -= 1
            out[tuple(mm)] = c * e
    return out


def euler(p: Polynomial) -> Polynomial:
    """Apply the Euler operator sum_i x_i d/dx_i."""
    out = {}
    for m, c in p.items():
        d = sum(m)
        if d:
            out[m] = c * d
    return out


def variable(nvars: int, i: int) -> Polynomial:
    return {tuple(int(j == i) for j in range(nvars)): Fraction(1)}


def constant(nvars: int, c=1) -> Polynomial:
    c = as_scalar(c)
    return {(0,) * nvars: c} if c else {}


# ---------------------------------------------------------------------------
# graded pieces


def monomials_of_degree(nvars: int, degree: int) -> list[Monomial]:
    """All exponent tuples of total ``degree``, lexicographically decreasing."""
    if nvars == 0:
        return [()] if degree == 0 else []
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for e in range(remaining, -1, -1):
            rec(prefix + (e,), remaining - e, slots - 1)

    rec((), degree, nvars)
    return out


class GradedPiece:
    """An ordered basis of one graded component with reverse index lookup."""

    def __init__(self, degree: int, basis):
        self.degree = degree
        self.basis = tuple(basis)
        self.index = {b: i for i, b in enumerate(self.basis)}
        if len(self.index) != len(self.basis):
            raise ContractError("graded piece basis entries must be distinct")

    def __len__(self):
        return len(self.basis)

    def __iter__(self):
        return iter(self.basis)

    def __contains__(self, item):
        return item in self.index

    def __repr__(self):
        return f"{type(self).__name__}(degree={self.degree}, dim={len(self)})"


@lru_cache(maxsize=256)
def graded_piece(nvars: int, degree: int) -> GradedPiece:
    return GradedPiece(degree, monomials_of_degree(nvars, degree))


class QuotientPiece(GradedPiece):
    """Degree-d component of k[x]/I, with normal-form reduction.

    The basis consists of the monomials whose unit vectors complement
    ``I_d`` inside the ambient piece.  ``reduce`` is the projection onto their
    span along ``I_d``, so reducing twice changes nothing.
    """

    def __init__(self, ambient: GradedPiece, echelon: Echelon):
        pivots = set(echelon.pivots)
        super().__init__(ambient.degree, [m for i, m in enumerate(ambient.basis) if i not in pivots])
        self.ambient = ambient
        self._echelon = echelon

    @property
    def ideal_dimension(self) -> int:
        return len(self._echelon)

    def reduce(self, p: Polynomial) -> Polynomial:
        idx = self.ambient.index
        vec = {}
        for m, c in p.items():
            if m not in idx:
                raise ContractError(f"monomial {m} is not of degree {self.degree}")
            vec[idx[m]] = c
        rem = self._echelon.reduce(vec)
        return {self.ambient.basis[i]: c for i, c in rem.items()}

    def in_ideal(self, p: Polynomial) -> bool:
        return not self.reduce(p)


def _freeze(gens):
    return tuple(tuple(sorted(g.items())) for g in gens)


def quotient_piece(nvars: int, ideal_gens, degree: int) -> QuotientPiece:
    return _quotient_piece(nvars, _freeze(ideal_gens), degree)


@lru_cache(maxsize=128)
def _quotient_piece(nvars, frozen_gens, degree):
    gens = [dict(g) for g in frozen_gens]
    ambient = graded_piece(nvars, degree)
    ech = Echelon()
    for g in gens:
        if not g:
            continue
        e = poly_degree(g)
        if e > degree:
            continue
        for mono in monomials_of_degree(nvars, degree - e):
            ech.add({ambient.index[m]: c for m, c in monomial_times(mono, g).items()})
    return QuotientPiece(ambient, ech)


# ---------------------------------------------------------------------------
# text format: terms like ``3/2*x0^2*x1`` joined by + and -


_TERM_SPLIT = re.compile(r"\s*([+-])\s*")
_NUMBER = re.compile(r"^\d+(/\d+)?$")
_POWER = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(\d+))?$")


def parse_polynomial(text: str, names: dict) -> Polynomial:
    """Parse ``text`` into a polynomial over the variables in ``names``.

    ``names`` maps a variable token to its index.  Raises ParseError naming
    the offending token.
    """
    nvars = len(set(names.values()))
    src = text.strip()
    if not src:
        raise ParseError("empty polynomial", token="")
    if src[0] not in "+-":
        src = "+" + src
    parts = _TERM_SPLIT.split(src)
    # split yields ['', sign, term, sign, term, ...]
    if parts[0].strip():
        raise ParseError(f"unexpected token {parts[0]!r}", token=parts[0])
    out = {}
    for sign, term in zip(parts[1::2], parts[2::2]):
        term = term.strip()
        if not term:
            raise ParseError(f"missing term after {sign!r}", token=sign)
        coeff = Fraction(-1 if sign == "-" else 1)
        exps = [0] * nvars
        for factor in term.split("*"):
            factor = factor.strip()
            if _NUMBER.match(factor):
                coeff *= Fraction(factor)
                continue
            m = _POWER.match(factor)
            if not m or m.group(1) not in names:
                raise ParseError(f"unknown token {factor!r}", token=factor)
            exps[names[m.group(1)]] += int(m.group(2) or 1)
        add_into(out, {tuple(exps): coeff})
    return out


def format_polynomial(p: Polynomial, names) -> str:
    """Inverse of parse_polynomial; ``names`` lists the variable tokens by index."""
    if not p:
        return "0"
    pieces = []
    for mono in sorted(p, key=lambda m: (-sum(m), tuple(-e for e in m))):
        c = p[mono]
        factors = []
        for i, e in enumerate(mono):
            if e == 1:
                factors.append(names[i])
            elif e > 1:
                factors.append(f"{names[i]}^{e}")
        mag = abs(c)
        if mag != 1 or not factors:
            factors.insert(0, str(mag))
        pieces.append(("-" if c < 0 else "+", "*".join(factors)))
    first_sign, first = pieces[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text
