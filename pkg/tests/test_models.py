from fractions import Fraction

import pytest

from tautrank.errors import CapabilityError, ContractError, ParseError
from tautrank.models import (
    ActionCache,
    action_matrix,
    cyclic,
    fermat,
    lie_basis,
    make_section,
    parse_model,
    parse_polynomial_on,
    parse_section,
    torus_weight,
)
from tautrank.ring import add_into, quotient_piece

P1, P2, G24 = parse_model("pn:1"), parse_model("pn:2"), parse_model("g2n:4")


def gen(model, label):
    return next(g for g in lie_basis(model) if g.label == label)


def mono(model, text):
    (m,) = parse_polynomial_on(model, text)
    return m


def test_model_shapes():
    assert (P2.nvars, P2.acdegree) == (3, 3)
    assert (G24.nvars, G24.acdegree) == (6, 4)
    assert G24.var_names == ["p12", "p13", "p14", "p23", "p24", "p34"]
    assert len(G24.ideal_gens) == 1
    with pytest.raises(ParseError):
        parse_model("p3:2")


def test_pn_root_generator_on_square():
    # X_10 acts as -x1 d/dx0
    assert gen(P1, "X10").apply({(2, 0): 1}) == {(1, 1): -2}


def test_g2n_root_generator_antisymmetry():
    # x3 d1 sends p12 to p32 = -p23
    assert gen(G24, "x3d1").apply({mono(G24, "p12"): 1}) == {mono(G24, "p23"): -1}
    # x2 d1 sends p12 to p22 = 0
    assert gen(G24, "x2d1").apply({mono(G24, "p12"): 1}) == {}


def test_center_column_on_constant():
    f = fermat(P1)
    m = action_matrix(P1, gen(P1, "center"), f, 0)
    col = m.column(0)
    # R_0 = {1}; R_1 basis x0^2, x0 x1, x1^2
    assert col == {0: -1, 1: -1, 3: -1}


def test_root_column_example():
    f = make_section(P1, {(2, 0): Fraction(1), (0, 2): Fraction(1)})
    x = gen(P1, "X01")  # -x0 d/dx1
    m = action_matrix(P1, x, f, 1)
    r1 = P1.basis(1)
    r2 = P1.basis(2)
    col = m.column(r1.index((0, 2)))
    assert col == {r1.index((1, 1)): -2, len(r1) + r2.index((1, 3)): -2}


def test_cartan_column_is_weight_times_identity():
    f = cyclic(G24)
    h = gen(G24, "H1")
    m = action_matrix(G24, h, f, 1)
    basis = G24.basis(1)
    for k, b in enumerate(basis):
        w = G24.raw_weight(b)
        assert m.column(k) == ({k: w[0] - w[1]} if w[0] != w[1] else {})


def test_parse_section_keywords():
    assert str(parse_section(P2, "fermat")) == "fermat"
    assert fermat(P2).poly == parse_polynomial_on(P2, "x0^3 + x1^3 + x2^3")
    assert cyclic(G24).poly == {mono(G24, "p12*p23*p34*p14"): 1}
    with pytest.raises(CapabilityError):
        parse_section(G24, "fermat")


def test_plucker_reduction_normal_form():
    assert parse_polynomial_on(G24, "p12*p34 - p13*p24") == {mono(G24, "p14*p23"): -1}


def test_parse_section_rejects_wrong_degree_and_tokens():
    with pytest.raises(ContractError):
        parse_section(G24, "p12*p34 - p13*p24")
    with pytest.raises(ParseError) as exc:
        parse_section(P2, "x0^3 + x9^3")
    assert exc.value.token == "x9^3"


def test_section_must_be_normal_form():
    with pytest.raises(ContractError):
        make_section(G24, {(0, 2, 0, 0, 2, 0): Fraction(1)})  # p13^2 p24^2 has crossings


def test_torus_weights():
    assert any(torus_weight(P2, (3, 0, 0)))
    assert not any(torus_weight(G24, next(iter(cyclic(G24).poly))))
    assert not any(torus_weight(G24, mono(G24, "p12^2*p34^2")))


def test_derivations_preserve_the_plucker_ideal():
    q = quotient_piece(6, G24.ideal_gens, 2)
    for g in lie_basis(G24):
        for quad in G24.ideal_gens:
            assert q.in_ideal(g.apply(quad)), g.label


def _matrix_on_r1(model, g):
    basis = model.basis(1)
    idx = {b: i for i, b in enumerate(basis)}
    return [[g.apply({b: 1}).get(a, 0) for b in basis] for a in basis], idx


def test_pn_generators_satisfy_bracket_relations():
    gens = {g.label: g for g in lie_basis(P2) if g.kind == "root"}

    def compose(a, b, poly):
        return a.apply(b.apply(poly))

    # [X01, X12] acts like -X02 on every basis element of R_1 (matrices multiply as derivations)
    for b in P2.basis(1):
        lhs = compose(gens["X01"], gens["X12"], {b: 1})
        add_into(lhs, compose(gens["X12"], gens["X01"], {b: 1}), -1)
        rhs = {m: -c for m, c in gens["X02"].apply({b: 1}).items()}
        assert lhs == rhs


def test_cartan_kills_cyclic_section():
    f = cyclic(G24)
    cache = ActionCache(G24, f)
    for g, zf in zip(cache.gens, cache.zf):
        if g.kind == "cartan":
            assert zf == {}


def test_center_on_cyclic_graph_gives_2g_plus_gf():
    f = cyclic(G24)
    cache = ActionCache(G24, f)
    k = [g.kind for g in cache.gens].index("center")
    g = mono(G24, "p12^2*p34^2")
    low, high = cache.image(k, g, 1)
    assert low == {g: -2}
    prod = tuple(a + b for a, b in zip(g, next(iter(f.poly))))
    assert high == G24.normal_form({prod: Fraction(-1)})
