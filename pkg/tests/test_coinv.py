import pytest

from tautrank.coinv import (
    CoinvariantReport,
    ImageAssembler,
    coinvariant_rank,
    fermat_oracle,
    graph_parts,
    in_image,
    jacobian_oracle,
    membership,
    one,
    verify_trace,
    weight_zero_rank,
)
from tautrank.errors import ContractError, OracleInapplicable
from tautrank.graphcalc import parse_graph, rank1_reduce, root_relation, straighten
from tautrank.models import cyclic, fermat, parse_model, parse_polynomial_on, parse_section

P1, P2, P3, G24 = (parse_model(s) for s in ("pn:1", "pn:2", "pn:3", "g2n:4"))


def test_p1_rank():
    rep = coinvariant_rank(P1, fermat(P1), Dmax=4)
    assert rep.stabilized and rep.rank == 1
    assert rep.confirmed_by == ["jacobian_oracle"]


def test_p2_rank():
    rep = coinvariant_rank(P2, fermat(P2), Dmax=4)
    assert rep.stabilized and rep.rank == 2


def test_g24_rank_full_and_weight_zero_agree():
    full = coinvariant_rank(G24, cyclic(G24), Dmax=3)
    zero = weight_zero_rank(G24, cyclic(G24), Dmax=4)
    assert full.rank == zero.rank == 1
    assert zero.matrix_shapes[-1][0] < full.matrix_shapes[-1][0]


def test_weight_zero_piece_of_r1():
    asm = ImageAssembler(G24, cyclic(G24), weight_zero=True)
    asm.ensure_rows(1)
    assert len(asm.targets[1]) == 3


def test_truncation_zero():
    rep = coinvariant_rank(G24, cyclic(G24), Dmax=0, weight_zero=True)
    assert rep.dims == [1] and not rep.stabilized


def test_weight_zero_requires_invariant_section():
    with pytest.raises(ContractError):
        weight_zero_rank(P2, fermat(P2))


def test_rank_invariant_under_torus_rescaling():
    base = coinvariant_rank(P2, fermat(P2), Dmax=3)
    moved = parse_section(P2, "x0^3 + 8*x1^3 + 1/27*x2^3")
    assert coinvariant_rank(P2, moved, Dmax=3).rank == base.rank


def test_singular_section_accepted_but_oracle_refuses():
    f = parse_section(P2, "x0^3 + x1^3")
    coinvariant_rank(P2, f, Dmax=2)
    with pytest.raises(OracleInapplicable):
        jacobian_oracle(2, f)


def test_jacobian_oracle_values():
    assert [fermat_oracle(n) for n in (1, 2, 3, 4)] == [1, 2, 21, 204]


def test_report_json_round_trip():
    rep = coinvariant_rank(P1, fermat(P1), Dmax=3)
    assert CoinvariantReport.from_json(rep.to_json()) == rep
    unstable = coinvariant_rank(P2, fermat(P2), Dmax=1)
    d = unstable.to_dict()
    assert d["rank"] == "not stabilized" and d["schema"] == 1
    assert CoinvariantReport.from_json(unstable.to_json()) == unstable


def test_row_budget_gives_partial_report():
    rep = coinvariant_rank(P2, fermat(P2), Dmax=5, max_rows=100)
    assert rep.partial and not rep.stabilized


def test_membership_examples():
    f = fermat(P2)
    x = {(1, 1, 1): 1}
    mem = membership(P2, f, x, x, 2)
    assert mem.holds and mem.c == 1
    mem = membership(P2, f, f.poly, one(P2), 2)
    assert mem.holds and mem.c == -1
    g = cyclic(G24)
    nonzero = parse_polynomial_on(G24, "p12^2*p13*p24")
    mem = membership(G24, g, nonzero, one(G24), 2)
    assert mem.holds and mem.c == 0


def test_membership_needs_room():
    with pytest.raises(ContractError):
        membership(P2, fermat(P2), one(P2), one(P2), 0)


def test_root_relations_from_graphs_match_the_action():
    f = cyclic(G24)
    asm = ImageAssembler(G24, f)
    for text in ("4: 1-2,1-3,2-4,3-4", "4: 1-2,1-2,3-4,3-4", "4: 1-4,1-4,2-3,2-3"):
        rel = straighten(root_relation(2, 1, parse_graph(text)))
        assert in_image(G24, f, graph_parts(G24, rel), 2, assembler=asm)


def test_doubled_matching_constant_matches_linear_algebra():
    g = parse_graph("4: 1-2,1-2,3-4,3-4")
    c, trace = rank1_reduce(4, g)
    chk = verify_trace(trace)
    assert chk.ok and chk.membership_constant == c
