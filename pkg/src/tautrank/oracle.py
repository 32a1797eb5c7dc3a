"""Closed-form and combinatorial ground truths."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

from .errors import CapabilityError, ContractError, ResourceError
from .models import Model, parse_model

_lock = threading.Lock()


def nu(n: int) -> int:
    """n/(n+1) * (n^n - (-1)^n), always an integer."""
    if n < 1:
        raise ContractError("nu needs n >= 1")
    num = n * (n**n - (-1) ** n)
    q, r = divmod(num, n + 1)
    if r:  # pragma: no cover - n^n - (-1)^n is divisible by n + 1
        raise ArithmeticError(f"nu({n}) is not integral")
    return q


def bounded_compositions(n: int) -> list:
    """a(s) for s = 0..(n+1)(n-1): solutions of k_0 + ... + k_n = s with 0 <= k_i <= n-1."""
    if n < 1:
        raise ContractError("need n >= 1")
    counts = [1]
    for _ in range(n + 1):
        new = [0] * (len(counts) + n - 1)
        for s, c in enumerate(counts):
            for k in range(n):
                new[s + k] += c
        counts = new
    return counts


def count_a(n: int) -> int:
    """Sum of a(s) over s divisible by n + 1."""
    return sum(c for s, c in enumerate(bounded_compositions(n)) if s % (n + 1) == 0)


def _partitions_in_box(rows: int, cols: int, cells: int) -> int:
    @lru_cache(maxsize=None)
    def count(r, maxpart, left):
        if left == 0:
            return 1
        if r == 0:
            return 0
        return sum(count(r - 1, part, left - part) for part in range(min(maxpart, left), 0, -1))

    return count(rows, cols, cells)


def grassmann_betti(N: int, degree: int) -> int:
    """Betti number b_degree of G(2,N): partitions in a 2 x (N-2) box with degree/2 cells."""
    if N < 2:
        raise ContractError("G(2,N) needs N >= 2")
    if degree < 0 or degree % 2:
        return 0
    return _partitions_in_box(2, N - 2, degree // 2)


def primitive_middle(N: int) -> int:
    n = 2 * (N - 2)
    return grassmann_betti(N, n) - grassmann_betti(N, n - 2)


def pn_primitive_middle(n: int) -> int:
    # every even Betti number of P^n is 1
    return 0


def is_complete(model: Model | str) -> bool:
    if isinstance(model, str):
        model = parse_model(model)
    if model.kind == "pn":
        return pn_primitive_middle(model.param) == 0
    if model.kind == "g2n":
        return primitive_middle(model.param) == 0
    raise CapabilityError(f"no Betti data for {model.kind}")


@dataclass(frozen=True)
class RankPrediction:
    model: str
    period_rank: int | None
    solution_rank: int | None
    complete: bool


def predict(model: Model | str) -> RankPrediction:
    """Predicted ranks where a closed form is known (P^n at smooth sections)."""
    if isinstance(model, str):
        model = parse_model(model)
    if model.kind == "pn":
        v = nu(model.param)
        return RankPrediction(model.id, v, v, True)
    return RankPrediction(model.id, None, None, is_complete(model))


_hilbert_cache: dict = {}


def hilbert_g2n(N: int, d: int, budget: int = 5_000_000) -> int:
    """Number of crossing-free multigraphs on N cyclically ordered vertices with d edges.

    Counted by an interval recursion that never lists a graph.  Crossing
    on the circle is the same as crossing on the segment 1..N.  Split on the
    farthest neighbour c of the first vertex a: every other chord lies in
    [a, c] (with no further a-c chord) or in [c, b].
    """
    if N < 1 or d < 0:
        raise ContractError("need N >= 1 and d >= 0")
    key = (N, d)
    with _lock:
        if key in _hilbert_cache:
            return _hilbert_cache[key]
    calls = [0]

    def tick():
        calls[0] += 1
        if calls[0] > budget:
            raise ResourceError("hilbert_g2n budget exhausted")

    @lru_cache(maxsize=None)
    def full(a, b, e):
        tick()
        if e == 0:
            return 1
        if b <= a:
            return 0
        total = full(a + 1, b, e)
        for c in range(a + 1, b + 1):
            for mu in range(1, e + 1):
                rest = e - mu
                for left in range(rest + 1):
                    total += without_chord(a, c, left) * full(c, b, rest - left)
        return total

    @lru_cache(maxsize=None)
    def without_chord(a, c, e):
        # graphs on [a, c] with no a-c chord
        tick()
        return full(a, c, e) - sum(without_chord(a, c, e - mu) for mu in range(1, e + 1))

    value = full(1, N, d)
    with _lock:
        _hilbert_cache[key] = value
    return value
