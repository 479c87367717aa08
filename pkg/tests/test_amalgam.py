import json
import random

import pytest

from fraisse.amalgam import (
    NONCONJUGATE,
    Span,
    ap_failure_demo,
    ap_failure_report_json,
    ap_failure_span,
    find_conjugator,
    ice_amalgamate,
    jep_product,
    limit_group_amalgam,
    random_span,
    verify_cocone,
)
from fraisse.errors import DomainError, NeedsWitness
from fraisse.tower import (
    Tower,
    commutes,
    equals,
    extend_centralizer,
    is_trivial,
    make_tower,
)
from fraisse.words import parse_word as W

C = make_tower(2)


def ext(T, *pairs):
    for u, name in pairs:
        T = extend_centralizer(T, W(u), name)
    return T


def test_non_conjugate_single_step():
    A, B = ext(C, ("a", "s")), ext(C, ("b", "t"))
    co = ice_amalgamate(Span(C, A, B))
    assert co.D == ext(C, ("a", "s"), ("b", "t"))
    assert co.g2.image("t") == W("t")


def test_conjugate_single_step_with_base_witness():
    A, B = ext(C, ("a", "s")), ext(C, ("b^-1 a b", "t"))
    co = ice_amalgamate(Span(C, A, B))
    assert co.D == A
    assert co.g2.image("t") == W("b^-1 s b")
    assert verify_cocone(Span(C, A, B), co)


def test_trivial_span():
    co = ice_amalgamate(Span(C, C, C))
    assert co.D == C
    assert all(w == W(g) for g, w in co.g1.images)


def test_inverse_root_counts_as_conjugate():
    A, B = ext(C, ("a b", "s")), ext(C, ("b^-1 a^-1", "t"))
    co = ice_amalgamate(Span(C, A, B))
    assert co.D == A


def test_needs_witness_above_base():
    C1 = ext(C, ("a", "t0"))
    # u's mixing t0 and b have no visible base anchor
    A = ext(C1, ("t0 b", "s"))
    B = ext(C1, ("b t0", "t"))
    with pytest.raises(NeedsWitness):
        ice_amalgamate(Span(C1, A, B))
    # b t0 = b (t0 b) b^-1, so d = b^-1 works as a witness: d (b t0) d^-1 = t0 b
    co = ice_amalgamate(Span(C1, A, B, (( ("s", "t"), W("b^-1") ),)))
    assert co.D == A
    co = ice_amalgamate(Span(C1, A, B, ((("s", "t"), NONCONJUGATE),)))
    assert co.D.depth == 3
    with pytest.raises(DomainError):
        ice_amalgamate(Span(C1, A, B, ((("s", "t"), W("a")),)))


def test_two_step_ladders_identify():
    A = ext(C, ("a", "s1"), ("s1", "s2"))
    B = ext(C, ("a", "t1"), ("t1", "t2"))
    co = ice_amalgamate(Span(C, A, B))
    assert co.D == A
    assert co.g2.image("t2") == W("s2")


def test_identify_false_stacks():
    A, B = ext(C, ("a", "s")), ext(C, ("a", "t"))
    co = ice_amalgamate(Span(C, A, B), identify=False)
    assert co.D == ext(C, ("a", "s"), ("a", "t"))
    assert commutes(co.D, W("s"), W("t"))


def test_letter_clash_renamed():
    A, B = ext(C, ("a", "t1")), ext(C, ("b", "t1"))
    co = ice_amalgamate(Span(C, A, B))
    assert co.D.depth == 2
    new = co.g2.image("t1")
    assert new != W("t1") and commutes(co.D, new, W("b"))


def test_random_spans_commute_and_symmetry():
    rng = random.Random(0)
    for _ in range(40):
        sp = random_span(rng, 2, 2)
        co = ice_amalgamate(sp)
        assert verify_cocone(sp, co)
        swapped = ice_amalgamate(Span(sp.C, sp.B, sp.A))
        assert verify_cocone(Span(sp.C, sp.B, sp.A), swapped)
        if len(sp.A_steps) == len(sp.B_steps) == 1:
            assert co.D.depth == swapped.D.depth
            if co.D.depth == sp.C.depth + 2:
                assert {s.u for s in co.D.steps} == {s.u for s in swapped.D.steps}


def test_limit_group_examples():
    r = limit_group_amalgam(C, [(W("a"), "s1")], [(W("b"), "t1")])
    assert r.N == ext(C, ("a", "s1"), ("b", "t1"))
    assert dict(r.cases[0])["case"] == "not conjugate in K"
    r = limit_group_amalgam(C, [(W("a"), "s1")], [(W("a"), "t1")])
    assert commutes(r.N, W("s1"), W("t1"))
    assert dict(r.cases[0])["case"] == "conjugate"
    r = limit_group_amalgam(C, [], [])
    assert r.N == C
    assert r.certificate is None


def test_limit_group_conjugate_case_relations():
    # c1 = d1^g with g = b: [t^g, s] = 1 in N
    r = limit_group_amalgam(C, [(W("a"), "s1")], [(W("b a b^-1"), "t1")])
    case = dict(r.cases[0])
    assert case["case"] == "conjugate"
    g = W(case["g"])
    tg = g * W("t1") * g.inverse()
    assert commutes(r.N, tg, W("s1"))
    assert commutes(r.N, W("a"), tg)


def test_limit_group_certificate():
    S = [W("t1"), W("s1 t1"), W("t1 a t1^-1"), W("b")]
    r = limit_group_amalgam(C, [(W("a"), "s1")], [(W("b"), "t1")], sample=S)
    h = r.certificate
    assert h.target == ext(C, ("a", "s1"))
    imgs = [h.apply(x) for x in S]
    for i in range(len(S)):
        assert not is_trivial(h.target, imgs[i])
        for j in range(i):
            assert not equals(h.target, imgs[i], imgs[j])


def test_jep_examples():
    x = W("c a c^-1 a^-1")
    P, cert, _ = jep_product(C, Tower(("c",)), [x])
    assert P == Tower(("a", "b", "c"))
    assert not cert.apply(x).is_identity
    P, cert, _ = jep_product(C, Tower(("c",)), [])
    assert cert.target == C
    M = extend_centralizer(Tower(("c", "d")), W("c"), "t")
    P, cert, ren = jep_product(C, M, [W("t d"), W("c d c^-1 d^-1")])
    assert P == extend_centralizer(Tower(("a", "b", "c", "d")), W("c"), "t")
    with pytest.raises(DomainError):
        jep_product(make_tower(1), Tower(("c",)), [])


def test_jep_renames_clashing_base():
    M = extend_centralizer(make_tower(2), W("a"), "t")
    P, cert, ren = jep_product(C, M, [])
    assert ren == {"a": "a1", "b": "b1"}
    assert P == extend_centralizer(Tower(("a", "b", "a1", "b1")), W("a1"), "t")


def test_special_embedding_axioms_syntactic():
    A = ext(C, ("a", "s"))
    B = ext(A, ("s", "s2"))
    D = ext(B, ("b", "s3"))
    prefix = lambda X, Y: Y.prefix(X.depth) == X
    assert prefix(A, A)
    assert prefix(A, B) and prefix(B, D) and prefix(A, D)
    # interpolation: A below D and B a step prefix between them
    assert prefix(A, B)


def test_ap_failure_demo():
    rep = ap_failure_demo(3)
    assert rep["three_squares"]["all_commuting"]
    assert rep["three_squares"]["violations"] == []
    assert rep["commutes_a_b"] is False
    assert rep["obstruction"] is True
    assert ap_failure_demo(1)["obstruction"] is True
    assert ap_failure_report_json(2) == ap_failure_report_json(2)
    span = ap_failure_span()
    assert json.loads(json.dumps(span)) == span


def test_span_roundtrip():
    rng = random.Random(4)
    sp = random_span(rng)
    assert Span.from_dict(json.loads(json.dumps(sp.to_dict()))) == sp


def test_find_conjugator_base_exact():
    d = find_conjugator(C, W("a"), W("b a^2 b^-1"))
    assert d is not None and commutes(C, d * W("b a^2 b^-1") * d.inverse(), W("a"))
    assert find_conjugator(C, W("a"), W("b")) is None
