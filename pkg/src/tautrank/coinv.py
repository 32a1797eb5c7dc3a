"""Truncated coinvariants H_0(gl, R e^f).

Q_D is the quotient of R_0 + ... + R_D by the images of every generator
applied to R_r for r <= D - 1, so each image lies wholly inside the
truncation.

Classes living in the top piece R_D are only killed by relations whose
sources sit above the cutoff, so for degenerate sections dim Q_D can
overshoot forever.  The report therefore also tracks the interior
dimension: the dimension of the image of R_0 + ... + R_{D-1} in Q_D, i.e.
dim R_{<=D-1} minus dim(image span meet R_{<=D-1}).  No partial image is
projected away; the intersection is exact.  The rank is read off once the
interior sequence stops changing.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .errors import ContractError, OracleInapplicable
from .exactla import Echelon, ModularConfig, SparseMatrix, rank_report
from .models import CENTER_SCALE, ActionCache, Model, Section, fermat, is_weight_zero, torus_weight
from .ring import derive, monomials_of_degree, quotient_piece

log = logging.getLogger(__name__)

SCHEMA = 1
DEFAULT_MAX_ROWS = 250_000


def default_dmax(model: Model, weight_zero: bool = False) -> int:
    if model.kind == "pn":
        return 6 if model.param <= 2 else 4
    if model.param == 4:
        return 6 if weight_zero else 3
    return 4 if weight_zero else 2


@dataclass
class CoinvariantReport:
    model: str
    section: str
    degrees: list
    dims: list
    interior_dims: list
    stabilized: bool
    rank: int | None
    mode: str
    weight_zero: bool
    probabilistic: bool = False
    partial: bool = False
    confirmed_by: list = field(default_factory=list)
    center_scale: int = CENTER_SCALE
    matrix_shapes: list = field(default_factory=list)

    @property
    def status(self):
        if not self.stabilized:
            return "not stabilized"
        return "confirmed" if self.confirmed_by else "unconfirmed"

    def to_dict(self):
        d = asdict(self)
        d["rank"] = self.rank if self.stabilized else "not stabilized"
        d["status"] = self.status
        d["dims"] = list(self.dims)
        d["interior_dims"] = list(self.interior_dims)
        d["schema"] = SCHEMA
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema", None)
        d.pop("status", None)
        if d.get("rank") == "not stabilized":
            d["rank"] = None
        d["matrix_shapes"] = [tuple(s) for s in d.get("matrix_shapes", [])]
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


class ImageAssembler:
    """Grows the image span of gl acting on R e^f one source degree at a time.

    Rows are the concatenated (optionally weight-zero) bases of R_0, R_1, ...;
    columns are appended in (degree, generator, basis index) order so the
    matrix is deterministic.
    """

    def __init__(self, model: Model, f: Section, weight_zero: bool = False):
        if f.model != model:
            raise ContractError("section belongs to a different model")
        if model.normal_form(f.poly) != f.poly:
            raise ContractError("section is not in normal form")
        if weight_zero and not is_weight_zero(model, f.poly):
            raise ContractError("weight-zero mode needs a torus-invariant section")
        self.model = model
        self.f = f
        self.weight_zero = weight_zero
        self.cache = ActionCache(model, f)
        self.targets = []  # basis of each R_r
        self.offsets = []
        self.index = {}  # (r, monomial) -> row
        self.columns = []
        self.sources_done = 0

    @property
    def nrows(self):
        return self.offsets[-1] + len(self.targets[-1]) if self.targets else 0

    def _target(self, r):
        if self.weight_zero:
            return self.model.basis(r, self.model.zero_weight(r))
        return self.model.basis(r)

    def ensure_rows(self, D):
        while len(self.targets) <= D:
            r = len(self.targets)
            basis = self._target(r)
            self.offsets.append(self.nrows)
            self.targets.append(basis)
            off = self.offsets[-1]
            for i, m in enumerate(basis):
                self.index[(r, m)] = off + i

    def row_count(self, D):
        """Rows needed for truncation D, without building anything."""
        return sum(len(self._target(r)) for r in range(D + 1))

    def sources(self, k, r):
        gen = self.cache.gens[k]
        if not self.weight_zero:
            return self.model.basis(r)
        want = tuple(a - s for a, s in zip(self.model.zero_weight(r), gen.shift))
        return self.model.basis(r, want)

    def column(self, k, mono, r):
        low, high = self.cache.image(k, mono, r)
        col = {}
        try:
            for m, c in low.items():
                col[self.index[(r, m)]] = c
            for m, c in high.items():
                col[self.index[(r + 1, m)]] = c
        except KeyError as exc:  # pragma: no cover - would mean a weight bookkeeping bug
            raise ContractError(f"image left the truncation: {exc}") from None
        return col

    def extend_to(self, D):
        """Add all columns with source degree <= D - 1."""
        self.ensure_rows(D)
        while self.sources_done < D:
            r = self.sources_done
            for k in range(len(self.cache.gens)):
                for mono in self.sources(k, r):
                    col = self.column(k, mono, r)
                    if col:
                        self.columns.append(col)
            self.sources_done += 1

    def matrix(self, D):
        self.extend_to(D)
        nrows = self.offsets[D] + len(self.targets[D])
        return SparseMatrix(nrows, len(self.columns), list(self.columns))

    def top_matrix(self, D):
        """The image columns projected onto R_D (used to measure the interior)."""
        self.extend_to(D)
        cut = self.offsets[D]
        cols = [{i - cut: c for i, c in col.items() if i >= cut} for col in self.columns]
        return SparseMatrix(len(self.targets[D]), len(cols), cols)

    def vector(self, poly, r):
        """Row-space coordinates of a normal-form element of R_r."""
        self.ensure_rows(r)
        out = {}
        for m, c in poly.items():
            key = (r, m)
            if key not in self.index:
                raise ContractError(f"monomial {m} is not a basis element of R_{r} here")
            out[self.index[key]] = c
        return out


def _stabilized(dims, window):
    return len(dims) >= window and len(set(dims[-window:])) == 1


def coinvariant_rank(
    model: Model,
    f: Section,
    Dmax: int | None = None,
    stab_window: int = 2,
    mode: str = "auto",
    config: ModularConfig | None = None,
    weight_zero: bool = False,
    max_rows: int = DEFAULT_MAX_ROWS,
    confirm: bool = True,
) -> CoinvariantReport:
    """Dimension sequences of Q_D and of its interior for D = 0..Dmax.

    The rank is the interior dimension once its last ``stab_window`` values
    agree.
    """
    if stab_window < 2:
        raise ContractError("stab_window must be at least 2")
    if Dmax is None:
        Dmax = default_dmax(model, weight_zero)
    if Dmax < 0:
        raise ContractError("Dmax must be nonnegative")
    asm = ImageAssembler(model, f, weight_zero)
    dims, interior, degrees, shapes = [], [], [], []
    used_mode, probabilistic, partial = "exact", False, False
    for D in range(Dmax + 1):
        if asm.row_count(D) > max_rows:
            log.warning("truncation %d needs more than %d rows; stopping", D, max_rows)
            partial = True
            break
        m = asm.matrix(D)
        res = rank_report(m, mode, config)
        top = rank_report(asm.top_matrix(D), mode, config)
        dims.append(m.nrows - res.rank)
        # dim(span meet R_{<=D-1}) = rank - rank of the projection to R_D
        interior.append(asm.offsets[D] - (res.rank - top.rank))
        degrees.append(D)
        shapes.append((m.nrows, m.ncols))
        for rr in (res, top):
            if rr.mode == "modular":
                used_mode = "modular"
                probabilistic = probabilistic or rr.probabilistic
        log.info("D=%d rows=%d cols=%d dim=%d interior=%d", D, m.nrows, m.ncols, dims[-1], interior[-1])
    stabilized = not partial and _stabilized(interior[1:], stab_window)
    report = CoinvariantReport(
        model=model.id,
        section=str(f),
        degrees=degrees,
        dims=dims,
        interior_dims=interior,
        stabilized=stabilized,
        rank=interior[-1] if stabilized else None,
        mode=used_mode,
        weight_zero=weight_zero,
        probabilistic=probabilistic,
        partial=partial,
        matrix_shapes=shapes,
    )
    if confirm and stabilized and model.kind == "pn":
        try:
            if jacobian_oracle(model.param, f) == report.rank:
                report.confirmed_by.append("jacobian_oracle")
        except OracleInapplicable:
            pass
    return report


def weight_zero_rank(model: Model, f: Section, Dmax: int | None = None, stab_window: int = 2, **kw) -> CoinvariantReport:
    """coinvariant_rank restricted to torus weight zero (f must be torus-invariant)."""
    return coinvariant_rank(model, f, Dmax, stab_window, weight_zero=True, **kw)


# ---------------------------------------------------------------------------
# Jacobian ring oracle


def jacobian_oracle(n: int, f: Section) -> int:
    """Sum of dim (C[x]/J(f))_d over d divisible by n + 1.

    Only valid for smooth f.  Raises OracleInapplicable when the partials do
    not cut out the origin alone, detected by a nonzero quotient just above
    the socle degree (n + 1)(n - 1).
    """
    model = f.model
    if model.kind != "pn" or model.param != n:
        raise OracleInapplicable(f"jacobian oracle needs a section on P^{n}")
    nv = n + 1
    partials = [derive(f.poly, i) for i in range(nv)]
    socle = (n + 1) * (n - 1)
    if len(quotient_piece(nv, partials, socle + 1)):
        raise OracleInapplicable("Jacobian ideal is not zero-dimensional (singular section)")
    # the quotient vanishes from socle + 1 on, so degrees up to n(n+1) reduce to these
    return sum(len(quotient_piece(nv, partials, d)) for d in range(0, socle + 1, n + 1))


def fermat_oracle(n: int) -> int:
    from .models import parse_model

    return jacobian_oracle(n, fermat(parse_model(f"pn:{n}")))


# ---------------------------------------------------------------------------
# membership


@dataclass
class Membership:
    holds: bool
    c: Fraction | None  # None when not unique or not holding


def membership(model: Model, f: Section, class1, class2, D: int, r1: int | None = None, r2: int | None = None,
               weight_zero: bool = False, assembler: ImageAssembler | None = None) -> Membership:
    """Decide whether class1 e^f - c class2 e^f lies in the image span at truncation D.

    Classes are normal-form polynomials; their graded degrees are inferred
    from the ambient degree unless given.
    """
    r1 = _class_degree(model, class1) if r1 is None else r1
    r2 = _class_degree(model, class2) if r2 is None else r2
    if D < max(r1, r2) + 1:
        raise ContractError("truncation must exceed both class degrees")
    asm = assembler or ImageAssembler(model, f, weight_zero)
    asm.extend_to(D)
    ech = _echelon_for(asm, D)
    v1 = ech.reduce(asm.vector(model.normal_form(class1), r1))
    v2 = ech.reduce(asm.vector(model.normal_form(class2), r2))
    if not v2:
        return Membership(not v1, None)
    k = min(v2)
    c = v1.get(k, 0) / v2[k]
    rest = dict(v1)
    for kk, x in v2.items():
        val = rest.get(kk, 0) - c * x
        if val:
            rest[kk] = val
        else:
            rest.pop(kk, None)
    if rest:
        return Membership(False, None)
    return Membership(True, Fraction(c))


def _echelon_for(asm, D):
    key = (D, len(asm.columns))
    cached = getattr(asm, "_echelon_cache", None)
    if cached and cached[0] == key:
        return cached[1]
    ech = Echelon()
    for col in asm.columns:
        ech.add(col)
    asm._echelon_cache = (key, ech)
    return ech


def _class_degree(model, poly):
    if not poly:
        return 0
    degs = {sum(m) for m in poly}
    if len(degs) != 1 or next(iter(degs)) % model.acdegree:
        raise ContractError("class is not a homogeneous element of some R_r")
    return next(iter(degs)) // model.acdegree


def one(model: Model):
    return {(0,) * model.nvars: Fraction(1)}


def weight_of(model, poly):
    ws = {torus_weight(model, m) for m in poly}
    return ws.pop() if len(ws) == 1 else None


__all__ = [
    "CoinvariantReport",
    "ImageAssembler",
    "Membership",
    "coinvariant_rank",
    "default_dmax",
    "fermat_oracle",
    "jacobian_oracle",
    "membership",
    "monomials_of_degree",
    "one",
    "weight_zero_rank",
]


# ---------------------------------------------------------------------------
# cross-checking graph certificates


def in_image(model: Model, f: Section, parts: dict, D: int, weight_zero: bool = False,
             assembler: ImageAssembler | None = None) -> bool:
    """Whether the element with graded pieces ``parts`` (r -> polynomial) lies in the image span at D."""
    asm = assembler or ImageAssembler(model, f, weight_zero)
    asm.extend_to(D)
    vec = {}
    for r, poly in parts.items():
        if r > D:
            raise ContractError(f"piece of degree {r} lies above the truncation {D}")
        vec.update(asm.vector(model.normal_form(poly), r))
    return not _echelon_for(asm, D).reduce(vec)


def graph_parts(model: Model, s) -> dict:
    """Split a GraphSum into graded polynomials r -> {monomial: coeff}."""
    parts = {}
    for g, c in s.terms.items():
        r = g.edge_count // model.param
        mono = model.monomial_of(g)
        parts.setdefault(r, {})[mono] = c
    return parts


@dataclass
class TraceCheck:
    relations_verified: int
    relations_total: int
    certificate_exact: bool
    plucker_monotone: bool
    membership_constant: Fraction | None
    constant_agrees: bool

    @property
    def ok(self):
        return (
            self.relations_verified == self.relations_total
            and self.certificate_exact
            and self.plucker_monotone
            and self.constant_agrees
        )


def verify_trace(trace, model: Model | None = None) -> TraceCheck:
    """Check every relation of a rank-one certificate against the action matrices.

    The truncation is D = (edge count of the target) / N + 1.  The constant is
    compared with an independent membership solve.
    """
    from . import graphcalc as gc
    from .models import cyclic, parse_model

    model = model or parse_model(f"g2n:{trace.N}")
    f = cyclic(model)
    target = gc.parse_graph(f"{trace.N}: {trace.target}")
    D = target.edge_count // trace.N + 1
    zero_asm = ImageAssembler(model, f, weight_zero=True)
    full_asm = None
    verified = 0
    rels = trace.relation_steps
    for step in rels:
        parts = graph_parts(model, trace.relation_sum(step))
        if all(is_weight_zero(model, p) for p in parts.values()):
            asm = zero_asm
        else:
            full_asm = full_asm or ImageAssembler(model, f)
            asm = full_asm
        if in_image(model, f, parts, D, assembler=asm):
            verified += 1
    target_poly = {model.monomial_of(target): Fraction(1)}
    if is_weight_zero(model, target_poly):
        asm = zero_asm
    else:
        full_asm = full_asm or ImageAssembler(model, f)
        asm = full_asm
    mem = membership(model, f, target_poly, one(model), D, assembler=asm)
    c = mem.c if mem.holds else None
    return TraceCheck(
        relations_verified=verified,
        relations_total=len(rels),
        certificate_exact=trace.check_certificate(),
        plucker_monotone=trace.plucker_steps_decrease(),
        membership_constant=c,
        constant_agrees=mem.holds and c == trace.constant,
    )
