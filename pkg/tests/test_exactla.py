import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tautrank.errors import ContractError, ResourceError
from tautrank import exactla
from tautrank.exactla import (
    DEFAULT_PRIMES,
    ModularConfig,
    SparseMatrix,
    cokernel_basis,
    in_span,
    rank,
    rank_modp,
    rank_report,
)

small_ints = st.integers(min_value=-3, max_value=3)


@st.composite
def matrices(draw, max_dim=7):
    r = draw(st.integers(1, max_dim))
    c = draw(st.integers(1, max_dim))
    rows = draw(st.lists(st.lists(small_ints, min_size=c, max_size=c), min_size=r, max_size=r))
    return SparseMatrix.from_dense(rows)


def random_pm1(n, density, rng):
    entries = []
    for i in range(n):
        for j in range(n):
            if rng.random() < density:
                entries.append((i, j, rng.choice((-1, 1))))
    return SparseMatrix.from_entries(n, n, entries)


def test_identity_rank():
    assert rank(SparseMatrix.identity(2)) == 2


def test_proportional_rows():
    assert rank(SparseMatrix.from_dense([[1, 2], [2, 4]])) == 1


def test_random_pm1_exact_equals_modular():
    m = random_pm1(50, 0.08, random.Random(7))
    exact = rank(m, "exact")
    rep = rank_report(m, "modular", ModularConfig(DEFAULT_PRIMES, 3))
    assert rep.per_prime == (exact,) * 3
    assert not rep.probabilistic


def test_entries_are_canonical():
    m = SparseMatrix.from_entries(2, 2, [(0, 0, Fraction(2, 4)), (1, 1, 0)])
    assert m.entries == [(0, 0, Fraction(1, 2))]
    assert m.nnz() == 1


def test_duplicate_or_out_of_range_entries_rejected():
    with pytest.raises(ContractError):
        SparseMatrix.from_entries(2, 2, [(0, 0, 1), (0, 0, 2)])
    with pytest.raises(ContractError):
        SparseMatrix.from_entries(2, 2, [(2, 0, 1)])


def test_float_entries_rejected():
    with pytest.raises(ContractError):
        SparseMatrix.from_dense([[0.5]])


def test_cokernel_zero_and_identity():
    assert cokernel_basis(SparseMatrix(3, 3)) == [0, 1, 2]
    assert cokernel_basis(SparseMatrix.identity(3)) == []


def test_cokernel_of_single_vector():
    m = SparseMatrix.from_dense([[1], [1], [0]])
    assert len(cokernel_basis(m)) == 2


def test_in_span_examples():
    ident = SparseMatrix.identity(3)
    assert in_span(ident, [0, 0, 0]) == [0, 0, 0]
    assert in_span(ident, [1, -2, 5]) == [1, -2, 5]
    m = SparseMatrix.from_dense([[1, 1], [1, -1]])
    assert in_span(m, [2, 0]) == [1, 1]
    assert in_span(SparseMatrix.from_dense([[1], [1]]), [1, 0]) is None


def test_in_span_length_mismatch():
    with pytest.raises(ContractError):
        in_span(SparseMatrix.identity(2), [1, 2, 3])


def test_modular_config_validation():
    with pytest.raises(ContractError):
        ModularConfig((2147483647, 2147483647))
    with pytest.raises(ContractError):
        ModularConfig((101, 2147483647))
    with pytest.raises(ContractError):
        ModularConfig(DEFAULT_PRIMES, 1)


def test_modular_rank_can_drop_and_is_flagged():
    p = DEFAULT_PRIMES[0]
    m = SparseMatrix.from_dense([[1, 1], [1, 1 + p]])
    rep = rank_report(m, "modular")
    assert rep.rank == 2 == rank(m, "exact")
    assert rep.per_prime[0] == 1


def test_auto_mode_switches_on_size():
    assert rank_report(SparseMatrix.identity(3), "auto").mode == "exact"
    big = SparseMatrix.identity(exactla.AUTO_MODULAR_THRESHOLD + 1)
    rep = rank_report(big, "auto")
    assert rep.mode == "modular" and rep.rank == big.nrows


def test_dense_workspace_budget(monkeypatch):
    monkeypatch.setattr(exactla, "MAX_DENSE_ENTRIES", 10)
    monkeypatch.setattr(exactla, "_DENSE_CUTOFF", 0)
    m = random_pm1(20, 0.5, random.Random(1))
    with pytest.raises(ResourceError):
        rank(m, "modular")


def test_thread_count_does_not_change_results(monkeypatch):
    m = SparseMatrix.from_columns(40, [{i: 1, (i + 1) % 40: 2} for i in range(0, 40, 2)] + [{5: 3}])
    monkeypatch.setenv("TAUTRANK_THREADS", "1")
    single = (rank(m), cokernel_basis(m))
    monkeypatch.setenv("TAUTRANK_THREADS", "4")
    assert (rank(m), cokernel_basis(m)) == single


@given(matrices())
def test_rank_equals_transpose_rank(m):
    assert rank(m) == rank(m.transpose())


@given(matrices())
def test_modular_rank_never_exceeds_exact(m):
    exact = rank(m)
    for p in (1048583, *DEFAULT_PRIMES):
        assert rank_modp(m, p) <= exact


@given(matrices())
def test_cokernel_size_plus_rank(m):
    assert len(cokernel_basis(m)) + rank(m) == m.nrows


@given(matrices(), st.lists(small_ints, min_size=7, max_size=7))
def test_in_span_reproduces_vector(m, coeffs):
    v = m.matvec(coeffs[: m.ncols])
    c = in_span(m, v)
    assert c is not None
    assert m.matvec(c) == v
