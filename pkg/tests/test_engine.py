import json

import networkx as nx
import pytest

from fraisse import lattice as L
from fraisse.engine import (
    LimitElem,
    back_and_forth,
    build_chain,
    check_axioms,
    extension_property_test,
    homogeneity_witness,
    locate,
    make_category,
    replay,
)
from fraisse.engine.categories import FinLinOrder, decode_sequence, graph_canonical
from fraisse.engine.chain import ChainState
from fraisse.errors import DomainError, InputError
from fraisse.tower import extend_centralizer, make_tower
from fraisse.words import parse_word as W

ICE = {"category": "ice", "base_rank": 2}


@pytest.fixture(scope="module")
def graph_chain():
    return build_chain("fin_graph", 120, 0)


@pytest.fixture(scope="module")
def order_chains():
    return build_chain("fin_linorder", 300, 0), build_chain("fin_linorder", 300, 1)


@pytest.fixture(scope="module")
def ice_chain():
    return build_chain(ICE, 40, 0)


def test_decode_sequence_is_injective():
    seen = {tuple(decode_sequence(i)) for i in range(2000)}
    assert len(seen) == 2000
    assert decode_sequence(0) == []


def test_first_stage_is_first_object():
    c = build_chain("fin_linorder", 1, 0)
    assert c.length == 1 and c.stage(1).size == 0
    with pytest.raises(DomainError):
        build_chain("fin_linorder", 0, 0)
    with pytest.raises(InputError):
        make_category({"category": "nope"})


def test_graph_chain_has_edge_and_nonedge():
    st = build_chain("fin_graph", 40, 0).stage(40)
    g = st.to_graph()
    assert g.number_of_edges() > 0
    assert nx.complement(g).number_of_edges() > 0


def test_abelian_rank_nondecreasing():
    c = build_chain("free_abelian_forall", 40, 0)
    ranks = [c.stage(i) for i in range(1, 41)]
    assert ranks == sorted(ranks)
    for m in c.maps:
        assert m is None or L.is_pure_embedding(m)


@pytest.mark.parametrize("spec", ["fin_graph", "fin_linorder", "free_abelian_forall",
                                  "free_abelian_plain", ICE, "fpce"])
def test_chain_validity_fairness_and_replay(spec):
    c = build_chain(spec, 30, 3)
    cat = c.category
    for i in range(1, c.length):
        assert cat.is_connecting_special(c.stage(i), c.maps[i - 1], c.stage(i + 1))
    for q, t in enumerate(c.tasks):
        assert t["stage"] <= c.horizon(q)
    text = c.to_json()
    assert build_chain(spec, 30, 3).to_json() == text
    assert replay(text).to_json() == text
    bad = json.loads(text)
    bad["log"][1]["kind"] = "forged"
    with pytest.raises(DomainError):
        replay(bad)


def test_errors_are_requeued_as_data():
    class Flaky(FinLinOrder):
        def ap(self, tpl, emb, st):
            if tpl.info["gap"] == 0:
                raise DomainError("oracle declined")
            return super().ap(tpl, emb, st)

    c = ChainState(Flaky(), 0).grow_to(30)
    und = c.undischarged()
    assert und and all("oracle declined" in t["error"] for t in und)
    assert c.length == 30


def test_locate_examples(graph_chain):
    loc = locate(graph_chain, graph_chain.category.object(0))
    assert loc.found and loc.stage == 1
    tri = nx.complete_graph(3)
    loc = locate(graph_chain, tri)
    idx = graph_chain.category.index_of(tri)
    assert idx == 7 and loc.found and loc.stage <= 2 * idx + 1
    assert locate(build_chain("fin_graph", 3, 0), tri) == type(loc)(False, horizon=15)
    ab = build_chain("free_abelian_forall", 30, 0)
    loc = locate(ab, 3)
    assert loc.found
    assert L.invariant_factors(L.transpose(loc.embedding)) == [1, 1, 1]


def test_limit_elem_coherence():
    c = build_chain("free_abelian_plain", 40, 0)
    s = next(i for i in range(1, 41) if c.stage(i) >= 2)
    x = LimitElem(s, [1] + [0] * (c.stage(s) - 1))
    y = LimitElem(s, [0, 1] + [0] * (c.stage(s) - 2))
    for a, b in ((x, x), (x, y)):
        assert c.limit_equal(a, b, at=s + 5) == c.limit_equal(a, b, at=40)
    assert c.limit_equal(x, c.push(x, 30))
    assert not c.limit_equal(x, y)


def test_back_and_forth_same_seed_is_identity(graph_chain):
    other = build_chain("fin_graph", 120, 0)
    pi = back_and_forth(graph_chain, other, 6)
    assert pi.verified
    assert all(a.value == b.value for a, b in pi.pairs)


def test_back_and_forth_orders(order_chains):
    X, Y = order_chains
    pi = back_and_forth(X, Y, 10)
    assert pi.verified
    xs = [a.value for a, _ in pi.pairs]
    ys = [b.value for _, b in pi.pairs]
    assert set(range(10)) <= set(xs) and set(range(10)) <= set(ys)
    sx, sy = X.stage(X.length), Y.stage(Y.length)
    for i in range(len(xs)):
        for j in range(len(xs)):
            assert sx.less(xs[i], xs[j]) == sy.less(ys[i], ys[j])


def test_back_and_forth_graphs(graph_chain):
    other = build_chain("fin_graph", 120, 1)
    pi = back_and_forth(graph_chain, other, 6)
    xs = [a.value for a, _ in pi.pairs]
    ys = [b.value for _, b in pi.pairs]
    gx = graph_chain.stage(graph_chain.length).to_graph().subgraph(xs)
    gy = other.stage(other.length).to_graph().subgraph(ys)
    assert pi.verified
    assert nx.to_numpy_array(gx, nodelist=xs).tolist() == nx.to_numpy_array(gy, nodelist=ys).tolist()


def test_homogeneity_identity_and_order(order_chains, graph_chain):
    X, _ = order_chains
    cat = X.category
    embs = list(cat.embeddings(2, X.stage(20), __import__("random").Random(1)))
    e1, e2 = embs[0], embs[-1]
    pi = homogeneity_witness(X, 2, 2, [0, 1], depth=6, emb_a=(20, e1), emb_b=(20, e2))
    assert pi.verified
    st = X.stage(X.length)
    pairs = [(a.value, b.value) for a, b in pi.pairs]
    assert pairs[:2] == [(e1[0], e2[0]), (e1[1], e2[1])]
    for x1, y1 in pairs:
        for x2, y2 in pairs:
            assert st.less(x1, x2) == st.less(y1, y2)
    k2 = nx.complete_graph(2)
    pi = homogeneity_witness(graph_chain, k2, k2, [0, 1], depth=0)
    assert [(a.value, b.value) for a, b in pi.pairs] == [(a.value, a.value) for a, _ in pi.pairs]


def test_homogeneity_ice_two_copies(ice_chain):
    cat = ice_chain.category
    A = extend_centralizer(make_tower(2), W("a"), "t1")
    M = ice_chain.stage(ice_chain.length)
    embs = list(cat.embeddings(A, M, __import__("random").Random(0)))
    assert len(embs) >= 2
    loc = locate(ice_chain, A)
    other = next(e for e in embs if e != loc.embedding)
    pi = homogeneity_witness(ice_chain, A, A, {"t1": "t1"}, depth=2, emb_a=(loc.stage, loc.embedding),
                             emb_b=(ice_chain.length, other), min_rounds=2)
    assert pi.verified and pi.rounds >= 2
    assert all(c["alpha"] and c["beta"] for c in pi.checks)
    with pytest.raises(DomainError):
        B = extend_centralizer(make_tower(2), W("b"), "t1")
        homogeneity_witness(ice_chain, A, B, {"t1": "t1"}, depth=2)


def test_back_and_forth_ice():
    X, Y = build_chain(ICE, 30, 0), build_chain(ICE, 30, 1)
    pi = back_and_forth(X, Y, 5)
    assert pi.verified
    json.dumps(pi.to_dict())


def test_check_axioms_reports():
    rep = check_axioms("fin_linorder", 15)
    assert rep["pass"]
    rep = check_axioms("free_abelian_forall", 15)
    assert rep["axioms"]["AP"]["pass"] and rep["axioms"]["AP"]["checked"] > 0
    rep = check_axioms(ICE, 8)
    assert rep["pass"]
    rep = check_axioms("limit_group_plain", 1)
    ap = rep["axioms"]["AP"]
    assert not ap["pass"] and ap["counterexample"]["obstruction"]


def test_graph_canonical_form():
    g = nx.cycle_graph(5)
    h = nx.relabel_nodes(g, {0: 3, 1: 0, 2: 4, 3: 1, 4: 2})
    assert graph_canonical(g) == graph_canonical(h)
    assert graph_canonical(g) != graph_canonical(nx.path_graph(5))


def test_extension_property_small(graph_chain, order_chains):
    rep = extension_property_test(graph_chain, trials=20)
    assert rep["failures"] == 0 and rep["discharged"] == rep["trials"] == 20
    rep = extension_property_test(order_chains[0], trials=20)
    assert rep["failures"] == 0 and rep["trials"] == 20
    ab = build_chain("free_abelian_forall", 60, 0)
    rep = extension_property_test(ab, trials=20)
    assert rep["failures"] == 0 and rep["success_rate"] == 1.0
