"""Plücker monomials of G(2,N) as chord multigraphs on a circle of N vertices.

A monomial x_{i1 j1} ... x_{ik jk} is the multigraph with one chord per
factor.  Two chords cross when their endpoints strictly interleave around
the circle; the quadratic Plücker relation rewrites a crossing pair as the
sum of its two non-crossing resolutions, and crossing-free graphs form a
basis of the coordinate ring.  Rewriting terminates because every
resolution lowers (sum of chord lengths, product of chord lengths)
lexicographically.  Vertices are numbered 1..N.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import ContractError, ParseError


@dataclass(frozen=True, order=True)
class PluckerGraph:
    N: int
    edges: tuple  # sorted tuple of (i, j) with 1 <= i < j <= N

    def __post_init__(self):
        for i, j in self.edges:
            if not (1 <= i < j <= self.N):
                raise ContractError(f"edge {i}-{j} invalid for N={self.N}")
        if list(self.edges) != sorted(self.edges):
            raise ContractError("edges must be sorted; use PluckerGraph.of")

    @classmethod
    def of(cls, N, edges):
        norm = []
        for i, j in edges:
            if i == j:
                raise ContractError(f"self-loop at vertex {i}")
            norm.append((min(i, j), max(i, j)))
        return cls(N, tuple(sorted(norm)))

    @property
    def edge_count(self):
        return len(self.edges)

    def valence(self):
        val = [0] * self.N
        for i, j in self.edges:
            val[i - 1] += 1
            val[j - 1] += 1
        return tuple(val)

    def multiplicity(self, edge):
        return self.edges.count(edge)

    def replace(self, remove, add):
        edges = list(self.edges)
        for e in remove:
            edges.remove(e)
        return PluckerGraph.of(self.N, edges + list(add))

    def union(self, other):
        if other.N != self.N:
            raise ContractError("graphs on different vertex sets")
        return PluckerGraph(self.N, tuple(sorted(self.edges + other.edges)))

    def __str__(self):
        return ",".join(f"{i}-{j}" for i, j in self.edges)


class GraphSum:
    """Formal rational combination of Plücker graphs."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for g, c in dict(terms).items():
                self.add(g, c)

    @classmethod
    def single(cls, g, c=1):
        return cls({g: Fraction(c)})

    def add(self, g, c):
        v = self.terms.get(g, 0) + c
        if v:
            self.terms[g] = Fraction(v)
        else:
            self.terms.pop(g, None)

    def add_sum(self, other, scale=1):
        for g, c in other.terms.items():
            self.add(g, scale * c)
        return self

    def __add__(self, other):
        return GraphSum(self.terms).add_sum(other)

    def __sub__(self, other):
        return GraphSum(self.terms).add_sum(other, -1)

    def scaled(self, c):
        return GraphSum({g: v * c for g, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, GraphSum):
            return NotImplemented
        return self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def items(self):
        return sorted(self.terms.items())

    def coefficient(self, g):
        return self.terms.get(g, Fraction(0))

    def __str__(self):
        if not self.terms:
            return "0"
        out = []
        for g, c in self.items():
            body = str(g) or "1"
            if c == 1:
                out.append(("+", body))
            elif c == -1:
                out.append(("-", body))
            else:
                out.append(("-" if c < 0 else "+", f"{abs(c)}*{body}"))
        text = ("-" if out[0][0] == "-" else "") + out[0][1]
        for s, b in out[1:]:
            text += f" {s} {b}"
        return text

    def __repr__(self):
        return f"GraphSum({self})"


# ---------------------------------------------------------------------------
# text format  "N: i-j,i-j,..."

_EDGE = re.compile(r"^\s*(\d+)\s*-\s*(\d+)\s*$")


def parse_graph(text: str, N: int | None = None) -> PluckerGraph:
    body = text
    if ":" in text:
        head, body = text.split(":", 1)
        try:
            N_text = int(head)
        except ValueError:
            raise ParseError(f"bad vertex count {head!r}", token=head) from None
        if N is not None and N != N_text:
            raise ParseError(f"vertex count {N_text} conflicts with N={N}", token=head)
        N = N_text
    if N is None:
        raise ParseError("vertex count missing; write 'N: i-j,...'", token=text)
    edges = []
    for tok in body.split(","):
        if not tok.strip():
            continue
        m = _EDGE.match(tok)
        if not m:
            raise ParseError(f"bad edge token {tok.strip()!r}", token=tok.strip())
        i, j = int(m.group(1)), int(m.group(2))
        if not (1 <= i <= N and 1 <= j <= N) or i == j:
            raise ParseError(f"edge {tok.strip()!r} invalid for N={N}", token=tok.strip())
        edges.append((i, j))
    return PluckerGraph.of(N, edges)


def format_graph(g: PluckerGraph) -> str:
    return f"{g.N}: {g}"


# ---------------------------------------------------------------------------
# distances and the termination measure


def distance(N: int, i: int, j: int) -> int:
    d = abs(i - j) % N
    return min(d, N - d)


def Ia(g: PluckerGraph) -> int:
    return sum(distance(g.N, i, j) for i, j in g.edges)


def Im(g: PluckerGraph) -> int:
    out = 1
    for i, j in g.edges:
        out *= distance(g.N, i, j)
    return out


def measure(g: PluckerGraph) -> tuple:
    return (Ia(g), Im(g))


def chords_cross(e1, e2) -> bool:
    (a, b), (c, d) = e1, e2
    return a < c < b < d or c < a < d < b


def crossings(g: PluckerGraph) -> list:
    """Distinct crossing pairs ``(e1, e2)`` with ``e1 < e2``, sorted."""
    distinct = sorted(set(g.edges))
    out = []
    for k, e1 in enumerate(distinct):
        for e2 in distinct[k + 1:]:
            if chords_cross(e1, e2):
                out.append((e1, e2))
    return out


def is_crossing_free(g: PluckerGraph) -> bool:
    distinct = sorted(set(g.edges))
    return not any(
        chords_cross(e1, e2) for k, e1 in enumerate(distinct) for e2 in distinct[k + 1:]
    )


def plucker_op(g: PluckerGraph, pair) -> GraphSum:
    """Resolve one crossing: x_{ac} x_{bd} = x_{ab} x_{cd} + x_{ad} x_{bc}  (a<b<c<d)."""
    e1, e2 = pair
    if not chords_cross(e1, e2) or e1 not in g.edges or e2 not in g.edges:
        raise ContractError(f"{e1} and {e2} are not a crossing pair of {g}")
    a, b, c, d = sorted(e1 + e2)
    g1 = g.replace([e1, e2], [(a, b), (c, d)])
    g2 = g.replace([e1, e2], [(a, d), (b, c)])
    out = GraphSum()
    out.add(g1, 1)
    out.add(g2, 1)
    return out


@lru_cache(maxsize=200_000)
def _normal_form(g: PluckerGraph) -> tuple:
    stack = [g]
    memo = {}
    while stack:
        h = stack[-1]
        if h in memo:
            stack.pop()
            continue
        cr = crossings(h)
        if not cr:
            memo[h] = ((h, Fraction(1)),)
            stack.pop()
            continue
        children = list(plucker_op(h, cr[0]).terms)
        pending = [c for c in children if c not in memo]
        if pending:
            stack.extend(pending)
            continue
        acc = GraphSum()
        for child in children:
            for gg, cc in memo[child]:
                acc.add(gg, cc)
        memo[h] = tuple(acc.items())
        stack.pop()
    return memo[g]


def straighten_graph(g: PluckerGraph) -> GraphSum:
    return GraphSum(dict(_normal_form(g)))


def straighten(s: GraphSum) -> GraphSum:
    """Crossing-free combination equal to ``s`` modulo the Plücker relations.

    Crossings are always resolved at the lexicographically least crossing
    pair, so the output does not depend on the order of terms in ``s``.
    """
    out = GraphSum()
    for g, c in s.terms.items():
        for h, ch in _normal_form(g):
            out.add(h, c * ch)
    return out


# ---------------------------------------------------------------------------
# Lie algebra action  x_j d/dx_i : x_{pq} -> delta_{pi} x_{jq} + delta_{qi} x_{pj}


def oriented(i, j):
    """(edge, sign) for x_{ij} written with i<j; x_{ii} is zero (sign 0)."""
    if i == j:
        return None, 0
    if i < j:
        return (i, j), 1
    return (j, i), -1


def g_action(j: int, i: int, s: GraphSum) -> GraphSum:
    if i == j:
        raise ContractError("g_action needs i != j")
    out = GraphSum()
    for g, c in s.terms.items():
        edges = list(g.edges)
        for pos, (p, q) in enumerate(edges):
            if p == i:
                e, sign = oriented(j, q)
            elif q == i:
                e, sign = oriented(p, j)
            else:
                continue
            if not sign:
                continue
            new = edges[:pos] + edges[pos + 1:] + [e]
            out.add(PluckerGraph(g.N, tuple(sorted(new))), sign * c)
    return out


def cartan_action(i: int, s: GraphSum) -> GraphSum:
    """x_i d/dx_i: multiplies each graph by its valence at i."""
    out = GraphSum()
    for g, c in s.terms.items():
        v = g.valence()[i - 1]
        if v:
            out.add(g, c * v)
    return out


# ---------------------------------------------------------------------------
# cyclic structure relative to F = {(1,2),(2,3),...,(N,1)}


def cyclic_graph(N: int, copies: int = 1) -> PluckerGraph:
    return PluckerGraph.of(N, [(i, i % N + 1) for i in range(1, N + 1)] * copies)


def f_edges(N):
    return sorted({(min(i, i % N + 1), max(i, i % N + 1)) for i in range(1, N + 1)})


def cyclic_loops(g: PluckerGraph) -> list:
    """All cyclic loops ``(start, length)``: edges i~i+1~...~i+s-1~i (mod N).

    A length-2 loop is a doubled side; the length-N loop is F itself and is
    reported once, with start 1.
    """
    N = g.N
    counts = {}
    for e in g.edges:
        counts[e] = counts.get(e, 0) + 1

    def has(a, b, k=1):
        e, _ = oriented((a - 1) % N + 1, (b - 1) % N + 1)
        return e is not None and counts.get(e, 0) >= k

    out = []
    for s in range(2, N + 1):
        starts = [1] if s == N else range(1, N + 1)
        for i in starts:
            if s == 2:
                if has(i, i + 1, 2):
                    out.append((i, 2))
                continue
            path = all(has(i + t, i + t + 1) for t in range(s - 1))
            if path and has(i + s - 1, i):
                out.append((i, s))
    return out


def d_value(g: PluckerGraph) -> int:
    present = set(g.edges)
    return sum(1 for e in f_edges(g.N) if e not in present)


def contains_f(g: PluckerGraph) -> bool:
    return d_value(g) == 0


# ---------------------------------------------------------------------------
# enumeration of crossing-free graphs


def crossing_free_graphs(N: int, nedges: int, valence=None) -> list:
    """All crossing-free multigraphs on N vertices with ``nedges`` chords.

    When ``valence`` is given, only graphs with exactly that valence vector
    are produced.  The result is sorted.
    """
    return list(_crossing_free(N, nedges, None if valence is None else tuple(valence)))


@lru_cache(maxsize=1024)
def _crossing_free(N, nedges, valence):
    all_edges = [(i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1)]
    if valence is not None:
        if len(valence) != N or sum(valence) != 2 * nedges or min(valence, default=0) < 0:
            return ()
        remaining = list(valence)
    out = []
    chosen = []

    def rec(idx, left):
        if left == 0:
            if valence is None or not any(remaining):
                out.append(PluckerGraph(N, tuple(chosen)))
            return
        if idx == len(all_edges):
            return
        i, j = all_edges[idx]
        if valence is not None:
            # every edge touching vertex i has been considered once we pass (i, N)
            if j == i + 1 and i > 1 and remaining[i - 2] != 0:
                return
        blocked = any(chords_cross((i, j), e) for e in set(chosen))
        cap = left
        if valence is not None:
            cap = min(cap, remaining[i - 1], remaining[j - 1])
        if blocked:
            cap = 0
        for mult in range(cap, -1, -1):
            chosen.extend([(i, j)] * mult)
            if valence is not None:
                remaining[i - 1] -= mult
                remaining[j - 1] -= mult
            rec(idx + 1, left - mult)
            if valence is not None:
                remaining[i - 1] += mult
                remaining[j - 1] += mult
            del chosen[len(chosen) - mult:]

    rec(0, nedges)
    return tuple(sorted(out))


def all_graphs_with_valence(N: int, valence) -> list:
    """All multigraphs (crossings allowed) with the given valence vector."""
    valence = tuple(valence)
    if sum(valence) % 2:
        return []
    nedges = sum(valence) // 2
    all_edges = [(i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1)]
    remaining = list(valence)
    out, chosen = [], []

    def rec(idx, left):
        if left == 0:
            if not any(remaining):
                out.append(PluckerGraph(N, tuple(chosen)))
            return
        if idx == len(all_edges):
            return
        i, j = all_edges[idx]
        if j == i + 1 and i > 1 and remaining[i - 2] != 0:
            return
        cap = min(left, remaining[i - 1], remaining[j - 1])
        for mult in range(cap, -1, -1):
            chosen.extend([(i, j)] * mult)
            remaining[i - 1] -= mult
            remaining[j - 1] -= mult
            rec(idx + 1, left - mult)
            remaining[i - 1] += mult
            remaining[j - 1] += mult
            del chosen[len(chosen) - mult:]

    rec(0, nedges)
    return sorted(out)


# ---------------------------------------------------------------------------
# rank-one reduction with certificates
#
# A relation is the image of one generator applied to G e^f, written as a
# (generally inhomogeneous) combination of crossing-free graphs: the part
# with G's edge count plus the part carrying one more copy of the degree of
# f.  The centre acts as -(1/N) Euler with beta = 1, so on a graph H with
# kN edges its relation is -(k+1) H - H F.


@dataclass
class TraceStep:
    rule: str  # "plucker", "cartan", "center" or "root"
    label: str
    source: str | None = None
    coefficient: Fraction | None = None
    consumed: list = field(default_factory=list)
    produced: list = field(default_factory=list)
    measure_before: tuple | None = None
    measure_after: list = field(default_factory=list)
    relation: dict = field(default_factory=dict)  # graph text -> coefficient

    def to_dict(self):
        return {
            "rule": self.rule,
            "label": self.label,
            "source": self.source,
            "coefficient": None if self.coefficient is None else str(self.coefficient),
            "consumed": list(self.consumed),
            "produced": list(self.produced),
            "measure_before": None if self.measure_before is None else list(self.measure_before),
            "measure_after": [list(m) for m in self.measure_after],
            "relation": {k: str(v) for k, v in self.relation.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            rule=d["rule"],
            label=d["label"],
            source=d.get("source"),
            coefficient=None if d.get("coefficient") is None else Fraction(d["coefficient"]),
            consumed=list(d.get("consumed", [])),
            produced=list(d.get("produced", [])),
            measure_before=None if d.get("measure_before") is None else tuple(d["measure_before"]),
            measure_after=[tuple(m) for m in d.get("measure_after", [])],
            relation={k: Fraction(v) for k, v in d.get("relation", {}).items()},
        )


@dataclass
class ReductionTrace:
    N: int
    target: str
    steps: list = field(default_factory=list)
    constant: Fraction | None = None
    status: str = "unknown"  # "certified", "budget exhausted" or "unknown"
    relations_considered: int = 0

    @property
    def relation_steps(self):
        return [s for s in self.steps if s.rule != "plucker"]

    @property
    def plucker_steps(self):
        return [s for s in self.steps if s.rule == "plucker"]

    def relation_sum(self, step) -> GraphSum:
        return GraphSum({parse_graph(f"{self.N}: {k}"): v for k, v in step.relation.items()})

    def plucker_steps_decrease(self) -> bool:
        """Every recorded Plücker child is lexicographically below its parent."""
        return all(all(tuple(a) < tuple(s.measure_before) for a in s.measure_after) for s in self.plucker_steps)

    def check_certificate(self) -> bool:
        """straighten(target) - constant = sum of coefficient * relation, exactly."""
        if self.constant is None:
            return False
        lhs = straighten_graph(parse_graph(f"{self.N}: {self.target}"))
        lhs.add(PluckerGraph(self.N, ()), -self.constant)
        rhs = GraphSum()
        for s in self.relation_steps:
            rhs.add_sum(self.relation_sum(s), s.coefficient)
        return lhs == rhs

    def to_dict(self):
        return {
            "N": self.N,
            "target": self.target,
            "constant": None if self.constant is None else str(self.constant),
            "status": self.status,
            "relations_considered": self.relations_considered,
            "steps": [s.to_dict() for s in self.steps],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        return cls(
            N=d["N"],
            target=d["target"],
            steps=[TraceStep.from_dict(s) for s in d["steps"]],
            constant=None if d.get("constant") is None else Fraction(d["constant"]),
            status=d.get("status", "unknown"),
            relations_considered=d.get("relations_considered", 0),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, ReductionTrace):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def straighten_traced(s: GraphSum, steps: list) -> GraphSum:
    """straighten, appending one TraceStep per Plücker operation applied."""
    out = GraphSum()
    seen = set()
    work = [(g, c) for g, c in s.items()]
    while work:
        g, c = work.pop()
        cr = crossings(g)
        if not cr:
            out.add(g, c)
            continue
        children = plucker_op(g, cr[0])
        if g not in seen:
            seen.add(g)
            kids = [h for h, _ in children.items()]
            steps.append(TraceStep(
                rule="plucker",
                label=f"{cr[0][0][0]}-{cr[0][0][1]} x {cr[0][1][0]}-{cr[0][1][1]}",
                consumed=[str(g)],
                produced=[str(h) for h in kids],
                measure_before=measure(g),
                measure_after=[measure(h) for h in kids],
            ))
        for h, ch in children.items():
            work.append((h, c * ch))
    return out


def _times(s: GraphSum, g: PluckerGraph) -> GraphSum:
    return GraphSum({h.union(g): c for h, c in s.terms.items()})


def center_relation(H: PluckerGraph) -> GraphSum:
    k = H.edge_count // H.N
    F = cyclic_graph(H.N)
    rel = GraphSum.single(H, -(k + 1))
    rel.add(H.union(F), -1)
    return rel


def root_relation(j: int, i: int, G: PluckerGraph) -> GraphSum:
    """x_j d_i (G e^f) = x_j d_i G + G * x_j d_i F, before straightening."""
    F = GraphSum.single(cyclic_graph(G.N))
    rel = g_action(j, i, GraphSum.single(G))
    rel.add_sum(_times(g_action(j, i, F), G))
    return rel


def _relation_sources(N, m):
    """(rule, label, source graph, i, j) for every weight-compatible source up to degree m."""
    out = []
    for k in range(m + 1):
        zero = (2 * k,) * N
        for H in crossing_free_graphs(N, k * N, zero):
            out.append(("center", "center", H, None, None))
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                if i == j:
                    continue
                # x_j d_i raises the valence at j and lowers it at i
                val = list(zero)
                val[j - 1] -= 1
                val[i - 1] += 1
                for G in crossing_free_graphs(N, k * N, val):
                    out.append(("root", f"x{j}d{i}", G, i, j))
    return out


def rank1_reduce(N: int, g: PluckerGraph, budget: int = 20_000):
    """Certify g e^f = c e^f modulo the image of gl, for the cyclic section f.

    Returns ``(c, trace)``.  ``c`` is None when no certificate was found
    within ``budget`` relations.  The trace lists the Plücker steps used to
    straighten g, then every generator relation with its coefficient in the
    certificate  straighten(g) - c = sum coefficient * relation.
    """
    if g.N != N:
        raise ContractError("graph lives on a different vertex count")
    if g.edge_count % N:
        raise ContractError(f"edge count {g.edge_count} is not a multiple of N={N}")
    m = g.edge_count // N
    trace = ReductionTrace(N, str(g))
    target = straighten_traced(GraphSum.single(g), trace.steps)
    val = g.valence()
    if len(set(val)) > 1:
        # a Cartan element with nonzero eigenvalue kills the class outright
        i = next(i for i in range(1, N) if val[i - 1] != val[i])
        w = val[i - 1] - val[i]
        rel = GraphSum()
        rel.add_sum(cartan_action(i, target)).add_sum(cartan_action(i + 1, target), -1)
        trace.steps.append(TraceStep(
            rule="cartan",
            label=f"H{i}",
            source=str(g),
            coefficient=Fraction(1, w),
            consumed=[str(h) for h, _ in target.items()],
            relation={str(h): c for h, c in rel.items()},
        ))
        trace.constant = Fraction(0)
        trace.status = "certified"
        return trace.constant, trace
    if not target:
        trace.constant = Fraction(0)
        trace.status = "certified"
        return trace.constant, trace

    sources = _relation_sources(N, m)
    if len(sources) > budget:
        sources = sources[:budget]
        trace.status = "budget exhausted"
    trace.relations_considered = len(sources)
    relations = []
    index = {}

    def coords(s):
        out = {}
        for h, c in s.items():
            if h not in index:
                index[h] = len(index)
            out[index[h]] = c
        return out

    from .exactla import Echelon

    ech = Echelon(track=True)
    for rule, label, src, i, j in sources:
        raw = center_relation(src) if rule == "center" else root_relation(j, i, src)
        local = []
        rel = straighten_traced(raw, local)
        relations.append((rule, label, src, rel, local))
        ech.add(coords(rel))
    one = PluckerGraph(N, ())
    r_target = ech.reduce(coords(target))
    r_one = ech.reduce(coords(GraphSum.single(one)))
    if not r_one:
        # 1 itself is a relation: every class vanishes
        c = Fraction(0)
        if r_target:
            trace.status = "unknown"
            return None, trace
    else:
        k0 = min(r_one)
        c = r_target.get(k0, Fraction(0)) / r_one[k0]
        rest = dict(r_target)
        for kk, x in r_one.items():
            v = rest.get(kk, 0) - c * x
            if v:
                rest[kk] = v
            else:
                rest.pop(kk, None)
        if rest:
            if trace.status != "budget exhausted":
                trace.status = "unknown"
            return None, trace
    diff = GraphSum(target.terms)
    diff.add(one, -c)
    combo = ech.solve(coords(diff))
    for k in sorted(combo):
        a = combo[k]
        rule, label, src, rel, local = relations[k]
        trace.steps.extend(local)
        trace.steps.append(TraceStep(
            rule=rule,
            label=label,
            source=str(src),
            coefficient=a,
            consumed=[str(src)],
            produced=[str(h) for h, _ in rel.items()],
            relation={str(h): x for h, x in rel.items()},
        ))
    trace.constant = c
    trace.status = "certified"
    return c, trace
