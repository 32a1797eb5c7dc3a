"""Polynomial differential forms on the affine cone and the twisted complex.

A form is a sum of terms ``c * x^a dx_S`` with S a sorted tuple of variable
indices.  Both x_i and dx_i have internal degree 1, so d preserves internal
degree and df raises it by deg f.

The twisted complex has pieces B^{s,t} = forms of form degree s + t + 1 and
internal degree N t, with differential D_f = d - t df^ on the (s, t)
piece.  Its degree-k cohomology is computed by truncating t <= T exactly
like the coinvariant truncation: sources are only taken from pieces whose
whole image stays inside the truncation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial

from .errors import CapabilityError, ContractError
from .exactla import ModularConfig, SparseMatrix, rank_report
from .models import Model, Section
from .ring import derive, monomials_of_degree

SCHEMA = 1
# middle cohomology of the complement of the cyclic hypersurface in G(2,N)
EXPECTED_DEGENERATE_DIM = 1


def _wedge_sign(S, T):
    """Sign of dx_S ^ dx_T relative to dx_{sorted(S+T)}; 0 if they overlap."""
    if set(S) & set(T):
        return 0
    inversions = sum(1 for a in S for b in T if a > b)
    return -1 if inversions % 2 else 1


class FormElement:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for k, c in dict(terms).items():
                self._add(k, c)

    def _add(self, key, c):
        v = self.terms.get(key, 0) + c
        if v:
            self.terms[key] = Fraction(v)
        else:
            self.terms.pop(key, None)

    @classmethod
    def from_poly(cls, nvars, poly, S=()):
        S = tuple(sorted(S))
        return cls(nvars, {(m, S): c for m, c in poly.items()})

    @classmethod
    def dx(cls, nvars, *idx):
        sign = 1
        S = []
        for i in idx:
            sg = _wedge_sign(tuple(S), (i,))
            if not sg:
                return cls(nvars)
            sign *= sg
            S = sorted(S + [i])
        return cls(nvars, {((0,) * nvars, tuple(S)): Fraction(sign)})

    def __add__(self, other):
        out = FormElement(self.nvars, self.terms)
        for k, c in other.terms.items():
            out._add(k, c)
        return out

    def __sub__(self, other):
        return self + other.scaled(-1)

    def scaled(self, c):
        return FormElement(self.nvars, {k: v * c for k, v in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, FormElement) and self.nvars == other.nvars and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"FormElement({self.nvars}, {len(self.terms)} terms)"

    def is_homogeneous(self):
        return len({(len(S), sum(m) + len(S)) for m, S in self.terms}) <= 1

    @property
    def form_degree(self):
        degs = {len(S) for _, S in self.terms}
        return degs.pop() if len(degs) == 1 else None

    @property
    def internal_degree(self):
        degs = {sum(m) + len(S) for m, S in self.terms}
        return degs.pop() if len(degs) == 1 else None

    def wedge(self, other):
        out = FormElement(self.nvars)
        for (m1, S), c1 in self.terms.items():
            for (m2, T), c2 in other.terms.items():
                sign = _wedge_sign(S, T)
                if sign:
                    key = (tuple(a + b for a, b in zip(m1, m2)), tuple(sorted(S + T)))
                    out._add(key, sign * c1 * c2)
        return out

    def d(self):
        out = FormElement(self.nvars)
        for (m, S), c in self.terms.items():
            for i, e in enumerate(m):
                if not e or i in S:
                    continue
                sign = _wedge_sign((i,), S)
                mm = list(m)
                mm[i] -= 1
                out._add((tuple(mm), tuple(sorted(S + (i,)))), sign * e * c)
        return out

    def contract(self, field_images):
        """Interior product with the vector field sum_i v_i d/dx_i.

        ``field_images[i]`` is the polynomial v_i.
        """
        out = FormElement(self.nvars)
        for (m, S), c in self.terms.items():
            for pos, i in enumerate(S):
                v = field_images[i]
                if not v:
                    continue
                rest = S[:pos] + S[pos + 1:]
                sign = -1 if pos % 2 else 1
                for mv, cv in v.items():
                    out._add((tuple(a + b for a, b in zip(m, mv)), rest), sign * c * cv)
        return out

    def euler_contract(self):
        """Delta: contraction with the Euler field sum_i x_i d/dx_i."""
        ident = [{tuple(int(j == i) for j in range(self.nvars)): Fraction(1)} for i in range(self.nvars)]
        return self.contract(ident)

    def times_poly(self, poly):
        return FormElement.from_poly(self.nvars, poly).wedge(self)


def euler_contract(w: FormElement) -> FormElement:
    return w.euler_contract()


def exterior_d(w: FormElement) -> FormElement:
    return w.d()


def differential(nvars, poly) -> FormElement:
    """df for a polynomial f."""
    return FormElement.from_poly(nvars, poly).d()


def top_form(nvars) -> FormElement:
    return FormElement.dx(nvars, *range(nvars))


def random_form(rng: random.Random, nvars: int, max_degree: int = 3, max_terms: int = 4, form_degree=None, degree=None):
    """Random form; fixing form_degree and degree makes it homogeneous."""
    out = FormElement(nvars)
    for _ in range(rng.randint(1, max_terms)):
        k = form_degree if form_degree is not None else rng.randint(0, nvars)
        S = tuple(sorted(rng.sample(range(nvars), k)))
        deg = degree if degree is not None else rng.randint(0, max_degree)
        m = [0] * nvars
        for _ in range(deg):
            m[rng.randrange(nvars)] += 1
        out._add((tuple(m), S), Fraction(rng.randint(-5, 5)))
    return out


# ---------------------------------------------------------------------------
# graded pieces of Omega modulo the differential ideal


@lru_cache(maxsize=None)
def _omega_basis(nvars, form_degree, internal):
    pdeg = internal - form_degree
    if form_degree > nvars or form_degree < 0 or pdeg < 0:
        return ()
    out = []
    for S in combinations(range(nvars), form_degree):
        for m in monomials_of_degree(nvars, pdeg):
            out.append((m, S))
    return tuple(out)


def omega_basis(m: Model, form_degree: int, internal: int):
    return _omega_basis(m.nvars, form_degree, internal)


def _ideal_forms(m: Model, form_degree: int, internal: int):
    """Spanning set of the differential ideal's piece: q w and dq ^ w."""
    out = []
    for q in m.ideal_gens:
        qdeg = sum(next(iter(q)))
        qf = FormElement.from_poly(m.nvars, q)
        dq = qf.d()
        for (mono, S) in _omega_basis(m.nvars, form_degree, internal - qdeg):
            out.append(qf.wedge(FormElement(m.nvars, {(mono, S): 1})))
        for (mono, S) in _omega_basis(m.nvars, form_degree - 1, internal - qdeg):
            out.append(dq.wedge(FormElement(m.nvars, {(mono, S): 1})))
    return [w for w in out if w]


def bst_basis(m: Model, s: int, t: int, experimental: bool = True):
    """Basis of B^{s,t}: forms of degree s + t + 1 and internal degree N t.

    For G(2,N) the forms are taken modulo the differential ideal of the
    Plücker quadrics and the returned list is a set of representatives of a
    basis of the quotient (a cokernel basis of the ideal's piece).
    """
    if m.kind == "g2n" and not experimental:
        raise CapabilityError("the G(2,N) form model is experimental and must be enabled explicitly (--experimental-g2n-derham)")
    k = s + t + 1
    if t < 0 or k < 0:
        return []
    ambient = omega_basis(m, k, m.acdegree * t)
    if not m.ideal_gens or not ambient:
        return list(ambient)
    from .exactla import Echelon

    index = {b: i for i, b in enumerate(ambient)}
    ech = Echelon()
    for w in _ideal_forms(m, k, m.acdegree * t):
        ech.add({index[key]: c for key, c in w.terms.items()})
    piv = set(ech.pivots)
    return [b for i, b in enumerate(ambient) if i not in piv]


# ---------------------------------------------------------------------------
# the truncated twisted complex


class _Slices:
    """Row/column bookkeeping for sums over t of Omega^j in internal degree N t."""

    def __init__(self, model: Model, f: Section, t_scale=True):
        self.model = model
        self.N = model.acdegree
        self.nv = model.nvars
        self.df = differential(self.nv, f.poly)
        self.t_scale = t_scale

    def index(self, j, ts):
        idx, off = {}, 0
        for t in ts:
            for b in omega_basis(self.model, j, self.N * t):
                idx[(t, b)] = off
                off += 1
        return idx, off

    def image(self, t, basis_elt):
        """D_f of one basis element of the t piece as {(t', key): coeff}."""
        w = FormElement(self.nv, {basis_elt: Fraction(1)})
        out = {}
        for key, c in w.d().terms.items():
            out[(t, key)] = c
        scale = t if self.t_scale else 1
        for key, c in self.df.wedge(w).terms.items():
            out[(t + 1, key)] = out.get((t + 1, key), 0) - scale * c
        return {k: v for k, v in out.items() if v}

    def differential_matrix(self, j, src_ts, dst_ts, extra_ideal=True):
        """Columns: D_f of every basis element of Omega^j over src_ts, into Omega^{j+1} over dst_ts."""
        dst, nrows = self.index(j + 1, dst_ts)
        cols = []
        for t in src_ts:
            for b in omega_basis(self.model, j, self.N * t):
                col = {}
                for key, c in self.image(t, b).items():
                    col[dst[key]] = c
                cols.append(col)
        return nrows, cols

    def ideal_columns(self, j, ts):
        if not self.model.ideal_gens:
            return []
        idx, _ = self.index(j, ts)
        cols = []
        for t in ts:
            for w in _ideal_forms(self.model, j, self.N * t):
                cols.append({idx[(t, key)]: c for key, c in w.terms.items()})
        return cols


def _rank(nrows, cols, mode, config):
    return rank_report(SparseMatrix(nrows, len(cols), cols), mode, config)


@dataclass
class DeRhamReport:
    model: str
    section: str
    k: int
    t_dims: list
    interior_dims: list
    dim: int | None
    stabilized: bool
    experimental: bool = False
    mode: str = "exact"
    finding: str | None = None

    def to_dict(self):
        d = {
            "model": self.model,
            "section": self.section,
            "k": self.k,
            "t_dims": list(self.t_dims),
            "interior_dims": list(self.interior_dims),
            "dim": self.dim if self.stabilized else "not stabilized",
            "stabilized": self.stabilized,
            "experimental": self.experimental,
            "mode": self.mode,
            "finding": self.finding,
            "schema": SCHEMA,
        }
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema", None)
        if d.get("dim") == "not stabilized":
            d["dim"] = None
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def default_tmax(model: Model) -> int:
    return model.param + 2 if model.kind == "pn" else 4


def _cohomology_at(sl: _Slices, k, T, mode, config):
    """dim H^k of the complex truncated at t <= T."""
    ts_a = list(range(1, T + 1))
    ts_b = list(range(1, T + 2))
    ts_c = list(range(1, T))
    j = k + 1  # every B^{s,t} with s + t = k has form degree k + 1
    _, n_a = sl.index(j, ts_a)
    n_b_rows, cols_a = sl.differential_matrix(j, ts_a, ts_b)
    ja = sl.ideal_columns(j, ts_a)
    jb = sl.ideal_columns(j + 1, ts_b)
    r_ja = _rank(n_a, ja, mode, config).rank if ja else 0
    r_jb = _rank(n_b_rows, jb, mode, config).rank if jb else 0
    r_ab = _rank(n_b_rows, cols_a + jb, mode, config).rank
    _, cols_c = sl.differential_matrix(j - 1, ts_c, ts_a) if ts_c else (n_a, [])
    r_ca = _rank(n_a, cols_c + ja, mode, config).rank if (cols_c or ja) else 0
    kernel = (n_a - r_ja) - (r_ab - r_jb)
    return kernel - (r_ca - r_ja)


def _interior(sl: _Slices, k, T, mode, config):
    """dim of (cocycles on t <= T - 1) / (coboundaries inside the truncation meeting t <= T - 1)."""
    j = k + 1
    lo = list(range(1, T))
    if not lo:
        return 0
    _, n_lo = sl.index(j, lo)
    rows_b, cols_lo = sl.differential_matrix(j, lo, list(range(1, T + 1)))
    jl = sl.ideal_columns(j, lo)
    jb = sl.ideal_columns(j + 1, list(range(1, T + 1)))
    r_jl = _rank(n_lo, jl, mode, config).rank if jl else 0
    r_jb = _rank(rows_b, jb, mode, config).rank if jb else 0
    r_lb = _rank(rows_b, cols_lo + jb, mode, config).rank
    kernel = (n_lo - r_jl) - (r_lb - r_jb)
    # a coboundary from t <= T - 1 may reach the top slice; intersect exactly
    src = list(range(1, T))
    _, n_all = sl.index(j, list(range(1, T + 1)))
    _, cols_c = sl.differential_matrix(j - 1, src, list(range(1, T + 1)))
    ja_all = sl.ideal_columns(j, list(range(1, T + 1)))
    cut = n_lo
    top_c = [{i - cut: c for i, c in col.items() if i >= cut} for col in cols_c + ja_all]
    n_top = n_all - cut
    r_full = _rank(n_all, cols_c + ja_all, mode, config).rank if (cols_c or ja_all) else 0
    r_top = _rank(n_top, top_c, mode, config).rank if top_c else 0
    meet = r_full - r_top  # dim(coboundaries + J) meet low slice
    return kernel - (meet - r_jl)


def twisted_cohomology_dim(model: Model, f: Section, k: int | None = None, tmax: int | None = None,
                           mode: str = "exact", config: ModularConfig | None = None,
                           experimental: bool = False) -> DeRhamReport:
    """Truncated dimensions of H^k(B, D_f) for T = 1..tmax.

    ``t_dims`` holds the full truncated cohomology, ``interior_dims`` the part
    carried by cocycles with t <= T - 1 modulo all coboundaries inside the
    truncation.  As with coinvariants the top slice can keep spurious
    classes, so stabilization and the reported dim use the interior values.
    G(2,N) needs ``experimental=True``; its result is reported with a flag
    and compared against the expected value 1 for the cyclic section.
    """
    if f.model != model:
        raise ContractError("section belongs to a different model")
    if model.kind == "g2n" and not experimental:
        raise CapabilityError("the G(2,N) form model is experimental and must be enabled explicitly (--experimental-g2n-derham)")
    k = model.dim if k is None else k
    tmax = default_tmax(model) if tmax is None else tmax
    if tmax < 1:
        raise ContractError("tmax must be at least 1")
    sl = _Slices(model, f)
    dims, interior = [], []
    for T in range(1, tmax + 1):
        dims.append(_cohomology_at(sl, k, T, mode, config))
        interior.append(_interior(sl, k, T, mode, config))
    use = interior
    stabilized = len(use) >= 2 and use[-1] == use[-2]
    report = DeRhamReport(
        model=model.id,
        section=str(f),
        k=k,
        t_dims=dims,
        interior_dims=interior,
        dim=use[-1] if stabilized else None,
        stabilized=stabilized,
        experimental=model.kind == "g2n",
        mode=mode,
    )
    if model.kind == "g2n" and str(f) == "cyclic" and k == model.dim:
        if stabilized and report.dim == EXPECTED_DEGENERATE_DIM:
            report.finding = "matches the expected value 1 (experimental form model)"
        else:
            report.finding = (
                f"MISMATCH: expected 1, got {report.dim if stabilized else 'no stable value'} "
                "(experimental form model)"
            )
    return report


# ---------------------------------------------------------------------------
# rescaling


def rescale_check(model: Model, f: Section, k: int | None = None, tmax: int | None = None) -> bool:
    """diag(mu) conjugates d - t df^ into d - df^ with mu = 1/(t-1)! on the t piece."""
    k = model.dim if k is None else k
    tmax = default_tmax(model) if tmax is None else tmax
    ts = list(range(1, tmax + 1))
    ts_b = list(range(1, tmax + 2))
    twisted = _Slices(model, f, t_scale=True)
    plain = _Slices(model, f, t_scale=False)
    for j in (k, k + 1):
        _, cols_t = twisted.differential_matrix(j, ts, ts_b)
        _, cols_p = plain.differential_matrix(j, ts, ts_b)
        dst, _ = twisted.index(j + 1, ts_b)
        mu_row = {i: Fraction(1, factorial(t - 1)) for (t, _), i in dst.items()}
        src_t = [t for t in ts for _ in omega_basis(model, j, model.acdegree * t)]
        for col_t, col_p, t in zip(cols_t, cols_p, src_t):
            lhs = {i: mu_row[i] * c for i, c in col_t.items()}
            mu_src = Fraction(1, factorial(t - 1))
            rhs = {i: c * mu_src for i, c in col_p.items()}
            if lhs != rhs:
                return False
    return True


def complex_squares_to_zero(model: Model, f: Section, k: int, T: int) -> bool:
    """D_f o D_f = 0 on the slice of total degree k with t <= T."""
    sl = _Slices(model, f)
    j = k + 1
    ts = list(range(1, T + 1))
    for t in ts:
        for b in omega_basis(model, j, model.acdegree * t):
            first = sl.image(t, b)
            acc = {}
            for (t1, key), c in first.items():
                for (t2, key2), c2 in sl.image(t1, key).items():
                    acc[(t2, key2)] = acc.get((t2, key2), 0) + c * c2
            if any(acc.values()):
                return False
    return True


# ---------------------------------------------------------------------------
# Chevalley-Eilenberg chains -> forms


@dataclass
class ChainMapResult:
    ok: bool
    sign: int | None
    samples: int
    nontrivial: int
    failures: list = field(default_factory=list)


def linear_field(matrix):
    """The vector field sum_{i,j} A_ij x_j d/dx_i as per-variable polynomials."""
    n = len(matrix)
    out = []
    for i in range(n):
        poly = {}
        for j in range(n):
            if matrix[i][j]:
                poly[tuple(int(l == j) for l in range(n))] = Fraction(matrix[i][j])
        out.append(poly)
    return out


def _apply_field(field_images, poly):
    out = {}
    for i, v in enumerate(field_images):
        if not v:
            continue
        dp = derive(poly, i)
        for m1, c1 in dp.items():
            for m2, c2 in v.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c}


def _bracket(A, B):
    """Matrix of the vector field bracket [xi_A, xi_B] = xi_{BA - AB}."""
    n = len(A)
    return [[sum(B[i][l] * A[l][j] - A[i][l] * B[l][j] for l in range(n)) for j in range(n)] for i in range(n)]


def _module_action(A, f, g):
    """xi . g = xi(g) + xi(f) g + trace(A) g: the Lie derivative of g e^f times the top form."""
    xi = linear_field(A)
    out = dict(_apply_field(xi, g))
    xf = _apply_field(xi, f)
    for m1, c1 in xf.items():
        for m2, c2 in g.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
    tr = sum(A[i][i] for i in range(len(A)))
    if tr:
        for m, c in g.items():
            out[m] = out.get(m, 0) + tr * c
    return {m: c for m, c in out.items() if c}


def ce_boundary(chain, f):
    """Chevalley-Eilenberg boundary of sum of (fields tuple, polynomial) chains.

    Left-module convention: the i-th field (counted from 1) acts with sign
    (-1)^i, brackets of the i-th and j-th fields carry (-1)^(i+j).
    """
    out = []
    for fields, g in chain:
        p = len(fields)
        for i in range(p):
            rest = fields[:i] + fields[i + 1:]
            sign = -1 if i % 2 == 0 else 1
            out.append((rest, {m: sign * c for m, c in _module_action(fields[i], f, g).items()}))
        for i in range(p):
            for j in range(i + 1, p):
                sign = 1 if (i + j) % 2 == 0 else -1
                rest = [fields[l] for l in range(p) if l not in (i, j)]
                out.append((tuple([_bracket(fields[i], fields[j])] + rest), {m: sign * c for m, c in g.items()}))
    return out


def chain_to_form(chain, nvars):
    """phi(x_1 ^ ... ^ x_p (x) g) = g i_{x_1} ... i_{x_p} omega with omega = dx_0 ^ ... ^ dx_n."""
    out = FormElement(nvars)
    omega = top_form(nvars)
    for fields, g in chain:
        w = omega
        for A in reversed(fields):
            w = w.contract(linear_field(A))
        out = out + w.times_poly(g)
    return out


def chain_map_check(n: int, f: Section, p: int, samples: int = 20, seed: int = 0,
                    max_degree: int = 2) -> ChainMapResult:
    """Check phi(d_CE c) = eps (d + df^) phi(c) with one global sign eps on random chains."""
    if f.model.kind != "pn" or f.model.param != n:
        raise CapabilityError("chain_map_check is defined for sections on P^n")
    if p < 1:
        raise ContractError("homological degree must be at least 1")
    nv = n + 1
    fpoly = f.poly
    df = differential(nv, fpoly)
    rng = random.Random(seed)
    sign = None
    nontrivial = 0
    failures = []
    for s in range(samples):
        fields = tuple(
            [[rng.randint(-2, 2) for _ in range(nv)] for _ in range(nv)] for _ in range(p)
        )
        deg = rng.randint(0, max_degree)
        g = {}
        for mono in rng.sample(monomials_of_degree(nv, deg), k=min(2, len(monomials_of_degree(nv, deg)))):
            g[mono] = Fraction(rng.randint(1, 4))
        chain = [(fields, g)]
        lhs = chain_to_form(ce_boundary(chain, fpoly), nv)
        phi = chain_to_form(chain, nv)
        rhs = phi.d() + df.wedge(phi)
        if not lhs and not rhs:
            continue
        nontrivial += 1
        if lhs == rhs:
            eps = 1
        elif lhs == rhs.scaled(-1):
            eps = -1
        else:
            failures.append(s)
            continue
        if sign is None:
            sign = eps
        elif eps != sign:
            failures.append(s)
    ok = not failures and (sign is not None or nontrivial == 0)
    return ChainMapResult(ok, sign, samples, nontrivial, failures)


def ce_boundary_squared_vanishes(n: int, f: Section, p: int, samples: int = 5, seed: int = 0) -> bool:
    """d_CE o d_CE = 0 on random p-chains, with chains compared through their canonical terms."""
    nv = n + 1
    rng = random.Random(seed)
    for _ in range(samples):
        fields = tuple([[rng.randint(-2, 2) for _ in range(nv)] for _ in range(nv)] for _ in range(p))
        g = {monomials_of_degree(nv, 1)[rng.randrange(nv)]: Fraction(1)}
        twice = ce_boundary(ce_boundary([(fields, g)], f.poly), f.poly)
        if chain_to_form(twice, nv):
            return False
    return True
