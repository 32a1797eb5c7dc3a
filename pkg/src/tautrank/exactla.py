"""Exact sparse linear algebra over Q, with a multi-modular fast path.

Matrices are stored column-major as lists of ``{row: Fraction}`` dicts since
every caller in this package builds matrices one image vector at a time.
Rank computations first split the matrix into connected components of its
row/column incidence graph; graded problems with a hidden finite grading
(Fermat sections, torus weights) decompose into many small blocks this way.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ContractError, ResourceError

Scalar = Fraction

# Largest primes below 2**31: residues multiply without overflowing int64.
DEFAULT_PRIMES = (2147483647, 2147483629, 2147483587)

AUTO_MODULAR_THRESHOLD = 2000
# Components larger than this (rows * cols) use dense numpy elimination mod p.
_DENSE_CUTOFF = 40_000
# Hard cap on a dense workspace, in matrix entries.
MAX_DENSE_ENTRIES = 60_000_000


@dataclass(frozen=True)
class ModularConfig:
    primes: tuple[int, ...] = DEFAULT_PRIMES
    agreement_count: int = 2

    def __post_init__(self):
        if len(set(self.primes)) != len(self.primes):
            raise ContractError("modular primes must be distinct")
        if any(p <= 2**20 for p in self.primes):
            raise ContractError("modular primes must exceed 2**20")
        if any(p >= 2**31 for p in self.primes):
            raise ContractError("modular primes must stay below 2**31")
        if self.agreement_count < 2 or self.agreement_count > len(self.primes):
            raise ContractError("agreement_count must be in [2, len(primes)]")


@dataclass(frozen=True)
class RankResult:
    rank: int
    mode: str  # "exact" or "modular"
    probabilistic: bool = False
    per_prime: tuple[int, ...] = field(default_factory=tuple)


def as_scalar(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise ContractError("floating point values are not exact scalars")
    return Fraction(x)


class SparseMatrix:
    """An ``nrows x ncols`` matrix with exact rational entries, stored by column."""

    __slots__ = ("nrows", "ncols", "_cols")

    def __init__(self, nrows: int, ncols: int, columns=None):
        if nrows < 0 or ncols < 0:
            raise ContractError("matrix dimensions must be nonnegative")
        self.nrows = nrows
        self.ncols = ncols
        if columns is None:
            columns = [{} for _ in range(ncols)]
        if len(columns) != ncols:
            raise ContractError("column count mismatch")
        cols = []
        for col in columns:
            clean = {}
            for r, v in col.items():
                if not 0 <= r < nrows:
                    raise ContractError(f"row index {r} out of range")
                v = as_scalar(v)
                if v:
                    clean[r] = v
            cols.append(clean)
        self._cols = cols

    @classmethod
    def from_entries(cls, nrows, ncols, entries):
        cols = [{} for _ in range(ncols)]
        for r, c, v in entries:
            if not 0 <= c < ncols:
                raise ContractError(f"column index {c} out of range")
            if r in cols[c]:
                raise ContractError(f"duplicate entry at ({r}, {c})")
            cols[c][r] = v
        return cls(nrows, ncols, cols)

    @classmethod
    def from_columns(cls, nrows, columns):
        return cls(nrows, len(columns), list(columns))

    @classmethod
    def from_dense(cls, rows):
        rows = [list(r) for r in rows]
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        cols = [{} for _ in range(ncols)]
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ContractError("ragged dense matrix")
            for j, v in enumerate(row):
                if v:
                    cols[j][i] = v
        return cls(nrows, ncols, cols)

    @classmethod
    def identity(cls, n):
        return cls(n, n, [{i: Fraction(1)} for i in range(n)])

    @property
    def entries(self):
        return sorted((r, c, v) for c, col in enumerate(self._cols) for r, v in col.items())

    def column(self, c) -> dict:
        return dict(self._cols[c])

    def columns(self):
        return [dict(c) for c in self._cols]

    def nnz(self) -> int:
        return sum(len(c) for c in self._cols)

    def transpose(self) -> "SparseMatrix":
        cols = [{} for _ in range(self.nrows)]
        for c, col in enumerate(self._cols):
            for r, v in col.items():
                cols[r][c] = v
        return SparseMatrix(self.ncols, self.nrows, cols)

    def matvec(self, x) -> list:
        if len(x) != self.ncols:
            raise ContractError("vector length does not match column count")
        out = [Fraction(0)] * self.nrows
        for c, col in enumerate(self._cols):
            xc = as_scalar(x[c])
            if xc:
                for r, v in col.items():
                    out[r] += v * xc
        return out

    def to_dense(self):
        out = [[Fraction(0)] * self.ncols for _ in range(self.nrows)]
        for c, col in enumerate(self._cols):
            for r, v in col.items():
                out[r][c] = v
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (self.nrows, self.ncols, self._cols) == (other.nrows, other.ncols, other._cols)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


# ---------------------------------------------------------------------------
# component splitting


def _components(cols):
    """Group nonzero columns by connected component of the incidence graph.

    Returns a list of ``(column_ids, row_ids)`` with both lists sorted, ordered
    by smallest column id so the traversal order is deterministic.
    """
    parent = {}

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for c, col in enumerate(cols):
        if not col:
            continue
        key = ("c", c)
        parent.setdefault(key, key)
        for r in col:
            rk = ("r", r)
            parent.setdefault(rk, rk)
            a, b = find(key), find(rk)
            if a != b:
                parent[b] = a
    groups = {}
    for c, col in enumerate(cols):
        if col:
            groups.setdefault(find(("c", c)), ([], set()))
            cid, rows = groups[find(("c", c))]
            cid.append(c)
            rows.update(col)
    return [(cid, sorted(rows)) for cid, rows in groups.values()]


def _integer_column(col):
    den = 1
    for v in col.values():
        den = den * v.denominator // math.gcd(den, v.denominator)
    return {r: int(v * den) for r, v in col.items()}


# ---------------------------------------------------------------------------
# elimination kernels


def _eliminate_int(vectors, coords):
    """Fraction-free elimination on integer vectors; returns pivot coordinates.

    Each vector is a ``{coord: int}`` dict and is consumed.  Coordinates are
    processed in increasing order; among candidate vectors the pivot is the
    entry of smallest bit length, then the sparsest vector, then the lowest
    vector index.  Rows are divided by their content after every update to
    keep coefficient growth in check.
    """
    occ = {k: set() for k in coords}
    for vid, v in enumerate(vectors):
        for k in v:
            occ[k].add(vid)
    pivots = []
    for k in coords:
        cand = occ[k]
        if not cand:
            continue
        piv = min(cand, key=lambda i: (abs(vectors[i][k]).bit_length(), len(vectors[i]), i))
        pv = vectors[piv]
        for kk in pv:
            occ[kk].discard(piv)
        pivots.append(k)
        a = pv[k]
        for vid in list(cand):
            v = vectors[vid]
            b = v[k]
            g = math.gcd(a, b)
            ma, mb = a // g, b // g
            if ma != 1:
                for kk in v:
                    v[kk] *= ma
            for kk, pval in pv.items():
                nv = v.get(kk, 0) - mb * pval
                if nv:
                    if kk not in v:
                        occ[kk].add(vid)
                    v[kk] = nv
                elif kk in v:
                    del v[kk]
                    occ[kk].discard(vid)
            if v:
                content = 0
                for val in v.values():
                    content = math.gcd(content, val)
                    if content == 1:
                        break
                if content > 1:
                    for kk in v:
                        v[kk] //= content
        vectors[piv] = {}
    return pivots


def _eliminate_modp(vectors, coords, p):
    occ = {k: set() for k in coords}
    for vid, v in enumerate(vectors):
        for k in v:
            occ[k].add(vid)
    rank = 0
    for k in coords:
        cand = occ[k]
        if not cand:
            continue
        piv = min(cand, key=lambda i: (len(vectors[i]), i))
        pv = vectors[piv]
        for kk in pv:
            occ[kk].discard(piv)
        rank += 1
        inv = pow(pv[k], p - 2, p)
        for vid in list(cand):
            v = vectors[vid]
            m = v[k] * inv % p
            for kk, pval in pv.items():
                nv = (v.get(kk, 0) - m * pval) % p
                if nv:
                    if kk not in v:
                        occ[kk].add(vid)
                    v[kk] = nv
                elif kk in v:
                    del v[kk]
                    occ[kk].discard(vid)
        vectors[piv] = {}
    return rank


def _rank_dense_modp(a, p):
    """Row echelon rank of an int64 array modulo p (array is modified)."""
    nrows, ncols = a.shape
    if nrows > ncols:
        a = np.ascontiguousarray(a.T)
        nrows, ncols = ncols, nrows
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        below = r + 1 + np.flatnonzero(a[r + 1:, c])
        if below.size:
            factors = a[below, c][:, None]
            a[below] = (a[below] - factors * a[r][None, :]) % p
        r += 1
    return r


def _component_rank_modp(cols, rows, p):
    index = {r: i for i, r in enumerate(rows)}
    size = len(rows) * len(cols)
    if size > _DENSE_CUTOFF:
        if size > MAX_DENSE_ENTRIES:
            raise ResourceError(f"elimination workspace of {size} entries exceeds the budget")
        a = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for j, col in enumerate(cols):
            for r, v in col.items():
                a[index[r], j] = (v.numerator % p) * pow(v.denominator, p - 2, p) % p
        return _rank_dense_modp(a, p)
    vecs = []
    for col in cols:
        v = {}
        for r, val in col.items():
            x = (val.numerator % p) * pow(val.denominator % p, p - 2, p) % p
            if x:
                v[r] = x
        vecs.append(v)
    return _eliminate_modp(vecs, rows, p)


def _worker_count():
    try:
        return max(1, int(os.environ.get("TAUTRANK_THREADS", "1")))
    except ValueError:
        return 1


def _sum_over_components(m, fn):
    comps = _components(m._cols)
    jobs = [([m._cols[c] for c in cids], rows) for cids, rows in comps]
    workers = _worker_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return sum(ex.map(lambda job: fn(*job), jobs))
    return sum(fn(cols, rows) for cols, rows in jobs)


def rank_exact(m: SparseMatrix) -> int:
    def comp(cols, rows):
        return len(_eliminate_int([_integer_column(c) for c in cols], rows))

    return _sum_over_components(m, comp)


def rank_modp(m: SparseMatrix, p: int) -> int:
    return _sum_over_components(m, lambda cols, rows: _component_rank_modp(cols, rows, p))


def rank_report(m: SparseMatrix, mode: str = "auto", config: ModularConfig | None = None) -> RankResult:
    """Rank of ``m`` in ``exact``, ``modular`` or ``auto`` mode.

    ``auto`` switches to modular arithmetic once either dimension exceeds
    ``AUTO_MODULAR_THRESHOLD``.  A modular rank is the maximum over the
    configured primes (reduction mod p can only lose rank); it is flagged
    probabilistic unless at least ``agreement_count`` primes attain it.
    """
    if mode == "auto":
        mode = "modular" if max(m.nrows, m.ncols) > AUTO_MODULAR_THRESHOLD else "exact"
    if mode == "exact":
        return RankResult(rank_exact(m), "exact")
    if mode != "modular":
        raise ContractError(f"unknown rank mode {mode!r}")
    config = config or ModularConfig()
    ranks = tuple(rank_modp(m, p) for p in config.primes)
    best = max(ranks)
    agree = sum(r == best for r in ranks)
    return RankResult(best, "modular", agree < config.agreement_count, ranks)


def rank(m: SparseMatrix, mode: str = "exact", config: ModularConfig | None = None) -> int:
    return rank_report(m, mode, config).rank


def cokernel_basis(m: SparseMatrix) -> list[int]:
    """Row indices whose unit vectors span a complement of the column span."""
    pivots = set()
    for cids, rows in _components(m._cols):
        vecs = [_integer_column(m._cols[c]) for c in cids]
        pivots.update(_eliminate_int(vecs, rows))
    return [r for r in range(m.nrows) if r not in pivots]


class Echelon:
    """Incrementally built echelon basis of a subspace of Q^n.

    Each stored vector is normalised to 1 at its pivot, the smallest
    coordinate in its support.  ``reduce`` therefore returns a remainder with
    zero entries at every pivot, which makes it a projection onto the span of
    the non-pivot unit vectors along the subspace.  With ``track=True`` each
    stored vector remembers how it combines the inserted vectors.
    """

    def __init__(self, track: bool = False):
        self.track = track
        self._basis = {}
        self._combo = {}
        self._count = 0

    @property
    def pivots(self):
        return sorted(self._basis)

    def __len__(self):
        return len(self._basis)

    def _reduce(self, v, combo):
        basis = self._basis
        while True:
            hits = [k for k in v if k in basis]
            if not hits:
                return v, combo
            k = min(hits)
            c = v[k]
            for kk, bv in basis[k].items():
                nv = v.get(kk, 0) - c * bv
                if nv:
                    v[kk] = nv
                else:
                    v.pop(kk, None)
            if combo is not None:
                for kk, cv in self._combo[k].items():
                    nv = combo.get(kk, 0) - c * cv
                    if nv:
                        combo[kk] = nv
                    else:
                        combo.pop(kk, None)

    def add(self, vec) -> bool:
        """Insert a vector; returns True when it enlarged the span."""
        label = self._count
        self._count += 1
        v = {k: as_scalar(x) for k, x in vec.items() if x}
        combo = {label: Fraction(1)} if self.track else None
        v, combo = self._reduce(v, combo)
        if not v:
            return False
        k = min(v)
        lead = v[k]
        self._basis[k] = {kk: x / lead for kk, x in v.items()}
        if self.track:
            self._combo[k] = {kk: x / lead for kk, x in combo.items()}
        return True

    def reduce(self, vec) -> dict:
        v = {k: as_scalar(x) for k, x in vec.items() if x}
        return self._reduce(v, None)[0]

    def solve(self, vec):
        """Combination of inserted vectors equal to ``vec``, or None."""
        if not self.track:
            raise ContractError("solve requires an Echelon built with track=True")
        v = {k: as_scalar(x) for k, x in vec.items() if x}
        rem, combo = self._reduce(v, {})
        if rem:
            return None
        return {k: -x for k, x in combo.items()}


def in_span(m: SparseMatrix, v) -> list | None:
    """Coefficients ``c`` with ``m @ c == v``, or None when v is not in the column span."""
    if len(v) != m.nrows:
        raise ContractError(f"vector has length {len(v)}, expected {m.nrows}")
    ech = Echelon(track=True)
    for col in m._cols:
        ech.add(col)
    combo = ech.solve({i: x for i, x in enumerate(v)})
    if combo is None:
        return None
    out = [Fraction(0)] * m.ncols
    for k, x in combo.items():
        out[k] = x
    return out
