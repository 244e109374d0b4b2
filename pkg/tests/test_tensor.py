from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from boxworld import BoxTensor, dot, make_tensor, marginal, relabel, reorder, tensor_product
from boxworld.errors import ShapeError, SignatureMismatch
from boxworld.states import deterministic_single, deterministic_vertices, is_local, maximally_mixed, mix, pr_box
from boxworld.tensor import (
    as_signature,
    format_rational,
    index_pairs,
    parse_rational,
    reduce_to,
    tensor_from_data,
    tensor_product_all,
    tensor_to_data,
)
from boxworld.wiring import normalisation_functional

import oracles

SINGLE = ((2, 2),)
BIPARTITE = ((2, 2), (2, 2))

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=7)
small_signatures = st.lists(st.lists(st.integers(1, 3), min_size=1, max_size=2), min_size=1, max_size=2).map(
    as_signature)


@st.composite
def tensors(draw, sig=None):
    sig = draw(small_signatures) if sig is None else sig
    n = len(index_pairs(sig))
    return BoxTensor(sig, tuple(draw(st.lists(rationals, min_size=n, max_size=n))))


@st.composite
def relabellings(draw, sig):
    spec = []
    for sub in sig:
        fperm = draw(st.permutations(range(len(sub))))
        operms = [draw(st.permutations(range(k))) for k in sub]
        spec.append((fperm, operms))
    return spec


def test_canonical_order_matches_documented_layout():
    assert index_pairs(SINGLE) == (((0,), (0,)), ((1,), (0,)), ((0,), (1,)), ((1,), (1,)))
    assert list(index_pairs(BIPARTITE)) == oracles.canonical_pairs(BIPARTITE)
    assert index_pairs(BIPARTITE)[:2] == (((0, 0), (0, 0)), ((0, 1), (0, 0)))


def test_make_tensor_single_system_layout():
    entries = {((0,), (0,)): 1, ((1,), (0,)): 0, ((0,), (1,)): Fraction(1, 3), ((1,), (1,)): Fraction(2, 3)}
    t = make_tensor([[2, 2]], entries)
    assert t.signature == SINGLE
    assert t.entries == (1, 0, Fraction(1, 3), Fraction(2, 3))


def test_make_tensor_bipartite():
    pairs = index_pairs(BIPARTITE)
    t = make_tensor(BIPARTITE, {p: i for i, p in enumerate(pairs)})
    assert len(t.entries) == 16
    assert t[(0, 1), (0, 0)] == 1


def test_make_tensor_shape_errors():
    full = {p: 0 for p in index_pairs(SINGLE)}
    missing = dict(full)
    missing.pop(((1,), (1,)))
    with pytest.raises(ShapeError):
        make_tensor(SINGLE, missing)
    with pytest.raises(ShapeError):
        make_tensor(SINGLE, {**full, ((2,), (0,)): 0})
    with pytest.raises(ShapeError):
        make_tensor(SINGLE, {**full, ((0,), (2,)): 0})


def test_ragged_signature():
    sig = as_signature([[3, 2], [2]])
    assert len(index_pairs(sig)) == (3 + 2) * 2
    m = maximally_mixed(sig)
    assert m[(2, 1), (0, 0)] == Fraction(1, 6)
    assert m[(1, 1), (1, 0)] == Fraction(1, 4)


def test_bad_signatures():
    for bad in ([], [[]], [[0]], [[2, -1]]):
        with pytest.raises(ShapeError):
            as_signature(bad)


def test_rational_round_trip():
    assert parse_rational("-3/9") == Fraction(-1, 3)
    assert format_rational(Fraction(4)) == "4"
    assert format_rational(Fraction(-1, 3)) == "-1/3"
    for bad in ("0.5", "1/0", "a", "1//2", ""):
        with pytest.raises(ValueError):
            parse_rational(bad)


@given(tensors())
def test_json_round_trip(t):
    assert tensor_from_data(tensor_to_data(t)) == t


def test_dot_examples():
    p = pr_box()
    assert dot(BoxTensor.zeros(BIPARTITE), p) == 0
    assert dot(normalisation_functional(BIPARTITE), p) == 1
    tri = ((2, 2),) * 3
    r0 = BoxTensor.unit(tri, (0, 0, 1), (0, 0, 0))
    assert dot(r0, maximally_mixed(tri)) == Fraction(1, 8)
    with pytest.raises(SignatureMismatch):
        dot(r0, p)


@given(st.data())
def test_dot_bilinear_and_symmetric(data):
    sig = data.draw(small_signatures)
    r, p, q = (data.draw(tensors(sig)) for _ in range(3))
    c = data.draw(rationals)
    assert dot(r, p) == dot(p, r)
    assert dot(r, p + q.scale(c)) == dot(r, p) + c * dot(r, q)


@settings(max_examples=120)
@given(st.data())
def test_tensor_product_factorises_dot(data):
    s1, s2 = data.draw(small_signatures), data.draw(small_signatures)
    r1, p1 = data.draw(tensors(s1)), data.draw(tensors(s1))
    r2, p2 = data.draw(tensors(s2)), data.draw(tensors(s2))
    assert dot(tensor_product(r1, r2), tensor_product(p1, p2)) == dot(r1, p1) * dot(r2, p2)


def test_tensor_product_examples():
    d1 = deterministic_single((2, 2), (0, 1))
    d2 = deterministic_single((2, 2), (1, 1))
    prod = tensor_product(d1, d2)
    assert prod in list(deterministic_vertices(BIPARTITE))
    assert tensor_product(maximally_mixed(SINGLE), maximally_mixed(SINGLE)) == maximally_mixed(BIPARTITE)
    assert tensor_product_all([maximally_mixed(SINGLE)] * 3) == maximally_mixed(((2, 2),) * 3)


def test_marginal_examples():
    p = pr_box()
    m0 = marginal(p, 1, 0)
    assert m0.signature == SINGLE
    assert m0.entries == (Fraction(1, 2),) * 4
    assert marginal(p, 1, 1) == m0
    assert marginal(p, 0, 0) == marginal(p, 0, 1)
    with pytest.raises(ShapeError):
        marginal(p, 2, 0)


def test_marginal_of_product_state():
    d1 = deterministic_single((2, 2), (1, 0))
    prod = tensor_product(d1, maximally_mixed(SINGLE))
    assert marginal(prod, 1, 0) == d1
    # marginalising the only subsystem leaves the normalisation scalar
    assert marginal(d1, 0, 1).entries == (1,)


@given(st.data())
def test_marginal_commutes_with_mixing(data):
    w = data.draw(st.fractions(min_value=0, max_value=1, max_denominator=9))
    vs = list(deterministic_vertices(BIPARTITE))
    p, q = data.draw(st.sampled_from(vs)), data.draw(st.sampled_from([pr_box()] + vs))
    mixed = mix([p, q], [w, 1 - w])
    for sub in (0, 1):
        for x in (0, 1):
            assert marginal(mixed, sub, x) == marginal(p, sub, x).scale(w) + marginal(q, sub, x).scale(1 - w)


def test_reduce_to_keeps_requested_subsystems():
    p = tensor_product(pr_box(), maximally_mixed(SINGLE))
    assert reduce_to(p, [0, 1]) == pr_box()
    assert reduce_to(p, [2]) == maximally_mixed(SINGLE)


def test_relabel_examples():
    p = pr_box()
    assert relabel(p, [None, None]) == p
    assert relabel(p, [((0, 1), ((0, 1), (0, 1)))] * 2) == p
    d = deterministic_single((2, 2), (0, 0))
    flipped = relabel(d, [((0, 1), ((1, 0), (0, 1)))])
    assert flipped == deterministic_single((2, 2), (1, 0))


def test_relabel_permutes_ragged_signature():
    t = maximally_mixed(as_signature([[3, 2]]))
    out = relabel(t, [((1, 0), ((0, 1, 2), (1, 0)))])
    assert out.signature == ((2, 3),)
    assert out == maximally_mixed(((2, 3),))


def test_relabel_rejects_malformed():
    with pytest.raises(ShapeError):
        relabel(pr_box(), [((0, 0), ((0, 1), (0, 1))), None])
    with pytest.raises(ShapeError):
        relabel(pr_box(), [((0, 1), ((0, 1),)), None])
    with pytest.raises(ShapeError):
        relabel(pr_box(), [None])


def test_relabel_keeps_local_states_local():
    for v in deterministic_vertices(BIPARTITE):
        for spec in ([((1, 0), ((1, 0), (0, 1))), None], [None, ((0, 1), ((0, 1), (1, 0)))]):
            out = relabel(v, spec)
            assert out in list(deterministic_vertices(BIPARTITE))
            assert is_local(out).local


@given(st.data())
def test_relabel_invertible_and_composes(data):
    sig = data.draw(small_signatures)
    t = data.draw(tensors(sig))
    spec = data.draw(relabellings(sig))
    out = relabel(t, spec)
    inverse = []
    for (fperm, operms) in spec:
        inv_f = [0] * len(fperm)
        for old, new in enumerate(fperm):
            inv_f[new] = old
        inv_o = [None] * len(fperm)
        for old, new in enumerate(fperm):
            op = operms[old]
            inv = [0] * len(op)
            for o, n in enumerate(op):
                inv[n] = o
            inv_o[new] = inv
        inverse.append((inv_f, inv_o))
    assert relabel(out, inverse) == t

    spec2 = data.draw(relabellings(out.signature))
    twice = relabel(relabel(t, spec), spec2)
    composed = []
    for (f1, o1), (f2, o2) in zip(spec, spec2):
        composed.append(([f2[f1[i]] for i in range(len(f1))],
                         [[o2[f1[i]][o1[i][o]] for o in range(len(o1[i]))] for i in range(len(f1))]))
    assert relabel(t, composed) == twice


def test_reorder_swaps_subsystems():
    d = tensor_product(deterministic_single((2, 2), (0, 1)), maximally_mixed(((3,),)))
    swapped = reorder(d, [1, 0])
    assert swapped == tensor_product(maximally_mixed(((3,),)), deterministic_single((2, 2), (0, 1)))
    assert reorder(swapped, [1, 0]) == d
    with pytest.raises(ShapeError):
        reorder(d, [0, 0])


def test_arithmetic_requires_matching_signatures():
    with pytest.raises(SignatureMismatch):
        pr_box() + maximally_mixed(SINGLE)


def test_exactness_never_rounds():
    third = BoxTensor(SINGLE, (Fraction(1, 3),) * 4)
    assert dot(third, third.scale(3)) == Fraction(4, 3)
    assert all(isinstance(v, Fraction) for v in third.entries)
