"""Anticanonical models of P^n and G(2,N) with the action of gl = sl + C.

The graded ring R = sum_r Gamma(X, -r K_X) is realised inside the ambient
polynomial ring: R_r is the degree ``r * acdegree`` piece (modulo the Plücker
quadrics for G(2,N)).  Every Lie algebra generator acts through a linear
vector field, i.e. a derivation sending each variable to a linear form, and
on R with twist f by

    phi  ->  Z(x) phi + phi * Z(x) f - beta(x) phi.

The centre acts as -(1/acdegree) times the Euler operator with beta = 1, so
on R_r it sends phi to -(r + 1) phi - phi f.  For G(2,N) and a valence-2
graph G that is -(2 G + G f).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

from . import graphcalc as gc
from .errors import CapabilityError, ContractError, ParseError
from .ring import (
    add_into,
    format_polynomial,
    monomials_of_degree,
    parse_polynomial,
    poly_degree,
)

# Scale of our centre generator relative to the "(1/2) x_i d_i + 1" operator
# that produces 2G + Gf on valence-2 graphs.
CENTER_SCALE = -1


@dataclass(frozen=True)
class Model:
    kind: str  # "pn" or "g2n"
    param: int
    beta_scalar: Fraction = Fraction(1)

    def __post_init__(self):
        if self.kind == "pn" and self.param < 1:
            raise ContractError("P^n needs n >= 1")
        if self.kind == "g2n" and self.param < 3:
            raise ContractError("G(2,N) needs N >= 3")
        if self.kind not in ("pn", "g2n"):
            raise CapabilityError(f"unsupported model kind {self.kind!r}")

    @property
    def id(self):
        return f"{self.kind}:{self.param}"

    @property
    def nvars(self):
        return self.param + 1 if self.kind == "pn" else comb(self.param, 2)

    @property
    def acdegree(self):
        return self.param + 1 if self.kind == "pn" else self.param

    @property
    def dim(self):
        """Dimension of X."""
        return self.param if self.kind == "pn" else 2 * (self.param - 2)

    @property
    def weight_length(self):
        return self.param + 1 if self.kind == "pn" else self.param

    @property
    def pairs(self):
        return _pairs(self.param)

    @property
    def var_names(self):
        if self.kind == "pn":
            return [f"x{i}" for i in range(self.nvars)]
        sep = "_" if self.param >= 10 else ""
        return [f"p{i}{sep}{j}" for i, j in self.pairs]

    @property
    def name_index(self):
        names = {n: k for k, n in enumerate(self.var_names)}
        if self.kind == "g2n":
            for k, (i, j) in enumerate(self.pairs):
                names[f"p{i}_{j}"] = k
        return names

    @property
    def ideal_gens(self):
        return _plucker_quadrics(self.param) if self.kind == "g2n" else []

    # -- graphs <-> monomials (G(2,N) only) ------------------------------

    def graph_of(self, mono) -> gc.PluckerGraph:
        edges = []
        for k, e in enumerate(mono):
            edges.extend([self.pairs[k]] * e)
        return gc.PluckerGraph(self.param, tuple(sorted(edges)))

    def monomial_of(self, g: gc.PluckerGraph):
        index = _pair_index(self.param)
        mono = [0] * self.nvars
        for e in g.edges:
            mono[index[e]] += 1
        return tuple(mono)

    # -- normal forms and bases -------------------------------------------

    def normal_form(self, poly):
        if self.kind == "pn":
            return dict(poly)
        out = {}
        for mono, c in poly.items():
            for g, cg in gc.straighten_graph(self.graph_of(mono)).terms.items():
                add_into(out, {self.monomial_of(g): cg}, c)
        return out

    def raw_weight(self, mono):
        """Exponent vector (P^n) or valence vector (G(2,N)) of a monomial."""
        if self.kind == "pn":
            return tuple(mono)
        val = [0] * self.param
        for k, e in enumerate(mono):
            if e:
                i, j = self.pairs[k]
                val[i - 1] += e
                val[j - 1] += e
        return tuple(val)

    def basis(self, r: int, raw_weight=None):
        """Sorted monomial basis of R_r, optionally restricted to one raw weight."""
        return _basis(self, r, None if raw_weight is None else tuple(raw_weight))

    def zero_weight(self, r: int):
        """Raw weight of the torus-invariant part of R_r."""
        return (r,) * self.weight_length if self.kind == "pn" else (2 * r,) * self.weight_length


@lru_cache(maxsize=None)
def _pairs(N):
    return tuple((i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1))


@lru_cache(maxsize=None)
def _pair_index(N):
    return {e: k for k, e in enumerate(_pairs(N))}


@lru_cache(maxsize=None)
def _plucker_quadrics(N):
    index = _pair_index(N)
    nv = len(index)
    gens = []
    for a in range(1, N + 1):
        for b in range(a + 1, N + 1):
            for c in range(b + 1, N + 1):
                for d in range(c + 1, N + 1):
                    q = {}
                    for (e1, e2), coeff in (
                        (((a, c), (b, d)), 1),
                        (((a, b), (c, d)), -1),
                        (((a, d), (b, c)), -1),
                    ):
                        m = [0] * nv
                        m[index[e1]] += 1
                        m[index[e2]] += 1
                        q[tuple(m)] = Fraction(coeff)
                    gens.append(q)
    return gens


@lru_cache(maxsize=512)
def _basis(model, r, raw_weight):
    if r < 0:
        return ()
    deg = r * model.acdegree
    if model.kind == "pn":
        if raw_weight is not None:
            if sum(raw_weight) != deg or min(raw_weight) < 0:
                return ()
            return (tuple(raw_weight),)
        return tuple(monomials_of_degree(model.nvars, deg))
    graphs = gc.crossing_free_graphs(model.param, deg, raw_weight)
    monos = [model.monomial_of(g) for g in graphs]
    return tuple(sorted(monos, reverse=True))


_MODEL_RE = re.compile(r"^(pn|g2n):(\d+)$")


def parse_model(text: str, beta=1) -> Model:
    m = _MODEL_RE.match(text.strip().lower())
    if not m:
        raise ParseError(f"bad model {text!r}; expected pn:<n> or g2n:<N>", token=text)
    return Model(m.group(1), int(m.group(2)), Fraction(beta))


# ---------------------------------------------------------------------------
# Lie algebra generators


@dataclass(frozen=True)
class LieGenerator:
    """A linear vector field on the ambient space with its beta value.

    ``images[v]`` is the linear form Z(x)(x_v) as a tuple of
    ``(variable, coefficient)`` pairs.  ``shift`` is the change of raw torus
    weight the generator causes.
    """

    label: str
    kind: str  # "root", "cartan" or "center"
    images: tuple
    beta: Fraction
    shift: tuple

    def apply(self, poly):
        """Z(x) acting as a derivation."""
        out = {}
        for mono, c in poly.items():
            for v, e in enumerate(mono):
                if not e:
                    continue
                for w, a in self.images[v]:
                    m = list(mono)
                    m[v] -= 1
                    m[w] += 1
                    m = tuple(m)
                    val = out.get(m, 0) + c * e * a
                    if val:
                        out[m] = val
                    else:
                        out.pop(m, None)
        return out


def _gen(label, kind, images_dict, nvars, beta, shift):
    images = tuple(tuple(sorted(images_dict.get(v, {}).items())) for v in range(nvars))
    return LieGenerator(label, kind, images, Fraction(beta), tuple(shift))


@lru_cache(maxsize=None)
def lie_basis(model: Model) -> tuple:
    """sl generators (roots then Cartan) followed by the centre."""
    nv, L = model.nvars, model.weight_length
    gens = []

    def unit(k, sign=1):
        vec = [0] * L
        vec[k] = sign
        return vec

    if model.kind == "pn":
        n = model.param
        for i in range(n + 1):
            for j in range(n + 1):
                if i != j:
                    # -x_i d/dx_j
                    shift = [a + b for a, b in zip(unit(i), unit(j, -1))]
                    gens.append(_gen(f"X{i}{j}", "root", {j: {i: Fraction(-1)}}, nv, 0, shift))
        for i in range(1, n + 1):
            gens.append(_gen(f"H{i}", "cartan", {0: {0: Fraction(-1)}, i: {i: Fraction(1)}}, nv, 0, [0] * L))
    else:
        N = model.param
        index = _pair_index(N)
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                if i == j:
                    continue
                images = {}
                for k, (p, q) in enumerate(model.pairs):
                    if p == i:
                        e, sign = gc.oriented(j, q)
                    elif q == i:
                        e, sign = gc.oriented(p, j)
                    else:
                        continue
                    if sign:
                        images[k] = {index[e]: Fraction(sign)}
                shift = [a + b for a, b in zip(unit(j - 1), unit(i - 1, -1))]
                gens.append(_gen(f"x{j}d{i}", "root", images, nv, 0, shift))
        for i in range(1, N):
            images = {}
            for k, (p, q) in enumerate(model.pairs):
                w = (p == i) + (q == i) - (p == i + 1) - (q == i + 1)
                if w:
                    images[k] = {k: Fraction(w)}
            gens.append(_gen(f"H{i}", "cartan", images, nv, 0, [0] * L))
    center = {v: {v: Fraction(-1, model.acdegree)} for v in range(nv)}
    gens.append(_gen("center", "center", center, nv, model.beta_scalar, [0] * L))
    return tuple(gens)


def torus_weight(model: Model, mono) -> tuple:
    """Traceless torus weight, scaled by the weight length to stay integral.

    It vanishes exactly when the exponent (P^n) or valence (G(2,N)) vector
    is constant.
    """
    raw = model.raw_weight(mono)
    total = sum(raw)
    return tuple(len(raw) * a - total for a in raw)


def is_weight_zero(model: Model, poly) -> bool:
    return all(not any(torus_weight(model, m)) for m in poly)


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class Section:
    model: Model
    terms: tuple  # sorted (monomial, coefficient) pairs in normal form
    text: str = ""

    @property
    def poly(self):
        return dict(self.terms)

    def __str__(self):
        return self.text or format_polynomial(self.poly, self.model.var_names)


def make_section(model: Model, poly, text="") -> Section:
    deg = poly_degree(poly)
    if deg is not None and deg != model.acdegree:
        raise ContractError(f"section has degree {deg}, expected {model.acdegree}")
    if any(len(m) != model.nvars for m in poly):
        raise ContractError("section monomials have the wrong number of variables")
    nf = model.normal_form(poly)
    if nf != {m: c for m, c in poly.items() if c}:
        raise ContractError("section is not in normal form; reduce it with model.normal_form first")
    return Section(model, tuple(sorted(poly.items())), text)


def fermat(model: Model) -> Section:
    if model.kind != "pn":
        raise CapabilityError("the fermat section is defined on P^n only")
    n = model.param
    poly = {}
    for i in range(n + 1):
        m = [0] * (n + 1)
        m[i] = n + 1
        poly[tuple(m)] = Fraction(1)
    return make_section(model, poly, "fermat")


def cyclic(model: Model) -> Section:
    if model.kind != "g2n":
        raise CapabilityError("the cyclic section is defined on G(2,N) only")
    g = gc.cyclic_graph(model.param)
    return make_section(model, {model.monomial_of(g): Fraction(1)}, "cyclic")


def parse_polynomial_on(model: Model, text: str):
    """Parse a homogeneous polynomial and return its normal form."""
    poly = parse_polynomial(text, model.name_index)
    poly_degree(poly)
    return model.normal_form(poly)


def parse_section(model: Model, text: str) -> Section:
    key = text.strip().lower()
    if key == "fermat":
        return fermat(model)
    if key == "cyclic":
        return cyclic(model)
    poly = parse_polynomial(text, model.name_index)
    deg = poly_degree(poly)
    if deg is not None and deg != model.acdegree:
        raise ContractError(f"section has degree {deg}, expected {model.acdegree}")
    return make_section(model, model.normal_form(poly), text.strip())


# ---------------------------------------------------------------------------
# action


class ActionCache:
    """Per-(model, section) cache of Z(x) f for every generator."""

    def __init__(self, model: Model, f: Section):
        self.model = model
        self.f = f
        self.gens = lie_basis(model)
        fpoly = f.poly
        self.zf = [model.normal_form(g.apply(fpoly)) for g in self.gens]

    def image(self, k: int, mono, r: int):
        """Image of the basis monomial ``mono`` of R_r under generator k.

        Returns ``(low, high)``: normal-form polynomials in R_r and R_{r+1}.
        """
        model, gen = self.model, self.gens[k]
        single = {mono: Fraction(1)}
        low = model.normal_form(gen.apply(single))
        if gen.beta:
            add_into(low, single, -gen.beta)
        high = {}
        zf = self.zf[k]
        if zf:
            prod = {tuple(a + b for a, b in zip(mono, m)): c for m, c in zf.items()}
            high = model.normal_form(prod)
        return low, high


def action_matrix(model: Model, x: LieGenerator, f: Section, r: int):
    """Matrix of phi -> Z(x) phi + phi Z(x) f - beta(x) phi from R_r to R_r + R_{r+1}."""
    from .exactla import SparseMatrix

    if r < 0:
        raise ContractError("degree must be nonnegative")
    if f.model != model:
        raise ContractError("section belongs to a different model")
    cache = ActionCache(model, f)
    k = cache.gens.index(x)
    src = model.basis(r)
    low_idx = {m: i for i, m in enumerate(src)}
    high_basis = model.basis(r + 1)
    high_idx = {m: len(src) + i for i, m in enumerate(high_basis)}
    cols = []
    for mono in src:
        low, high = cache.image(k, mono, r)
        col = {low_idx[m]: c for m, c in low.items()}
        col.update({high_idx[m]: c for m, c in high.items()})
        cols.append(col)
    return SparseMatrix(len(src) + len(high_basis), len(src), cols)
