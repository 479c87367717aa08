import random

import pytest

from fraisse.errors import DomainError, InputError, SearchFailure
from fraisse.tower import (
    ExpSession,
    Tower,
    add_free_letters,
    britton_reduce,
    centralizer_generators,
    commutes,
    defining_relators,
    discriminate_to_free,
    discriminating_hom,
    equals,
    extend_centralizer,
    fpce_normalize,
    free_multiply,
    hom_apply,
    hom_compose,
    identity_hom,
    is_trivial,
    level_retraction,
    make_tower,
    poly_add,
    poly_eval,
    random_element,
    random_relator_conjugate,
    random_tower,
    retraction_composite,
    verify_hom,
)
from fraisse.words import Word, parse_word as W


@pytest.fixture
def Tat():
    return extend_centralizer(make_tower(2), W("a"), "t")


def test_make_tower():
    assert make_tower(2).base == ("a", "b")
    assert make_tower(1).base == ("a",)
    T = make_tower(2)
    assert equals(T, W("a b b^-1"), W("a"))
    assert not equals(T, W("a b"), W("b a"))
    with pytest.raises(DomainError):
        make_tower(0)


def test_extend_centralizer_examples():
    T = extend_centralizer(make_tower(2), W("a^2"), "t")
    assert T.steps[0].core == W("a")
    with pytest.raises(DomainError):
        extend_centralizer(make_tower(2), Word.identity(), "t")
    with pytest.raises(InputError):
        extend_centralizer(T, W("a"), "t")
    with pytest.raises(InputError):
        extend_centralizer(T, W("z"), "s")
    T2 = extend_centralizer(extend_centralizer(make_tower(2), W("a"), "t1"), W("a"), "t2")
    gens = centralizer_generators(T2, W("a"))
    assert gens == [W("a"), W("t1"), W("t2")]
    for x in gens:
        for y in gens:
            assert commutes(T2, x, y)
    assert not commutes(T2, W("b"), W("t2"))


def test_britton_examples(Tat):
    assert britton_reduce(Tat, Tat.parse("t^-1 a^3 t")) == W("a^3")
    assert britton_reduce(Tat, Tat.parse("t^-1 b t")) == W("t^-1 b t")
    x = Tat.parse("t^-1 a b t b^-1")
    y = britton_reduce(Tat, x)
    assert equals(Tat, x, y)
    for k in range(1, 33):
        r = level_retraction(Tat, k)
        assert r.apply(x) == r.apply(y)


def test_equals_and_commutes_examples(Tat):
    assert equals(Tat, Tat.parse("t^-1 a^3 t"), W("a^3"))
    assert not equals(Tat, Tat.parse("t^-1 b t"), W("b"))
    assert commutes(Tat, W("a"), W("t"))
    assert not commutes(Tat, W("b"), W("t"))
    T = extend_centralizer(Tat, W("t"), "t2")
    assert commutes(T, W("t"), W("t2"))
    assert commutes(T, W("a"), W("t2"))  # a and t2 both centralize t


def test_fp_letters_are_free():
    T = add_free_letters(make_tower(1), ["c"])
    assert not commutes(T, W("a"), W("c"))
    assert is_trivial(T, W("c a c^-1 a^-1 a c a^-1 c^-1"))
    assert not is_trivial(T, W("c a c^-1"))


def test_level_retraction_examples(Tat):
    r = level_retraction(Tat, 5)
    assert r.image("t") == W("a^5")
    assert hom_apply(r, Tat.parse("t^-1 b t")) == W("a^-5 b a^5")
    assert r.apply(W("a b^2")) == W("a b^2")
    with pytest.raises(DomainError):
        level_retraction(add_free_letters(Tat, ["c"]), 2)
    with pytest.raises(DomainError):
        level_retraction(Tat, 0)


def test_retraction_functoriality():
    rng = random.Random(1)
    for _ in range(20):
        T = random_tower(rng, 2, 2)
        h = retraction_composite(T, [rng.randint(1, 5), rng.randint(1, 5)])
        for _ in range(5):
            x = random_element(T, rng, 10)
            assert h.apply(britton_reduce(T, x)) == h.apply(x)


def test_discriminating_examples(Tat):
    X = [Tat.parse(s) for s in ["b", "t^-1 b t", "t^-2 b t^2"]]
    h = discriminating_hom(Tat, X, 1)
    assert dict(h.meta)["exponents"] == (1,)
    imgs = [h.apply(x) for x in X]
    assert imgs == [W("b"), W("a^-1 b a"), W("a^-2 b a^2")]
    assert len(set(imgs)) == 3
    h = discriminating_hom(Tat, [Word.identity()], 1)
    assert dict(h.meta)["exponents"] == (1,)
    h = discriminating_hom(Tat, [W("t"), W("a")], 1)
    assert level_retraction(Tat, 1).apply(W("t")) == W("a")
    assert dict(h.meta)["exponents"] == (2,)


def test_discriminating_cap_reports_failure(Tat):
    # t and a^k collide for k = 1; with cap 1 the search must say so
    with pytest.raises(SearchFailure) as exc:
        discriminating_hom(Tat, [W("t"), W("a")], 1, cap=1)
    assert exc.value.attempted["tried"] == [1]


def test_discriminate_to_free_examples(Tat):
    T = make_tower(2)
    h = discriminate_to_free(T, [W("a b")])
    assert h == identity_hom(T)
    x = Tat.parse("t^-1 b t b")
    h = discriminate_to_free(Tat, [x])
    assert h.image("t") == W("a")
    assert not h.apply(x).is_identity


def test_rank_one_free_factor_limitation():
    A = extend_centralizer(make_tower(1), W("a"), "t")
    B = Tower(("c",))
    P, ren = free_multiply(A, B)
    assert ren == {}
    x = W("c a c^-1 a^-1")
    # c can only go to powers of a, which kill [c, a]
    with pytest.raises(SearchFailure):
        discriminate_to_free(P, [x])
    N, _ = fpce_normalize(P)
    h = discriminate_to_free(N, [x])
    assert not h.apply(x).is_identity


def test_free_multiply_and_normalize_examples():
    A = extend_centralizer(make_tower(1), W("a"), "t")
    N, bij = fpce_normalize(free_multiply(A, Tower(("c",)))[0])
    assert N == extend_centralizer(Tower(("a", "c")), W("a"), "t")
    assert bij == {"a": "a", "t": "t", "c": "c"}
    N, _ = fpce_normalize(free_multiply(Tower(("a",)), Tower(("b",)))[0])
    assert N == Tower(("a", "b"))
    A2 = extend_centralizer(A, W("t"), "s")
    P, _ = free_multiply(A2, Tower(("c",)))
    N, _ = fpce_normalize(P)
    expected = extend_centralizer(extend_centralizer(Tower(("a", "c")), W("a"), "t"), W("t"), "s")
    assert N == expected
    for r in defining_relators(P):
        assert is_trivial(N, r)
    for r in defining_relators(N):
        assert is_trivial(P, r)


def test_free_multiply_renames_collisions():
    A = make_tower(2)
    B = extend_centralizer(make_tower(2), W("a"), "t1")
    P, ren = free_multiply(A, B)
    assert set(ren) == {"a", "b"}
    assert set(P.generators) == {"a", "b", ren["a"], ren["b"], "t1"}
    assert commutes(P, W(ren["a"]), W("t1"))
    assert not commutes(P, W("a"), W("t1"))


def test_hom_compose_and_identity():
    rng = random.Random(2)
    T = random_tower(rng, 2, 2)
    r2 = level_retraction(T, 3)
    r1 = level_retraction(r2.target, 2)
    c = hom_compose(r1, r2)
    idh = identity_hom(T)
    for _ in range(20):
        x = random_element(T, rng, 12)
        assert hom_apply(idh, x) == britton_reduce(T, x)
        assert hom_apply(c, x) == hom_apply(r1, hom_apply(r2, x))
    with pytest.raises(InputError):
        hom_compose(r2, r1)


def test_reduction_soundness_random():
    rng = random.Random(3)
    for _ in range(60):
        T = random_tower(rng, 2, rng.randint(1, 3))
        x = random_element(T, rng, 16)
        y = britton_reduce(T, x)
        assert equals(T, x, y)
        assert britton_reduce(T, y) == y


def test_relator_insertions_are_trivial():
    rng = random.Random(4)
    for _ in range(60):
        T = random_tower(rng, 2, rng.randint(1, 3))
        r = random_relator_conjugate(T, rng)
        assert is_trivial(T, r)
        x = random_element(T, rng, 10)
        assert equals(T, x * r, x)


def test_nonequal_pairs_separated_by_retraction():
    rng = random.Random(5)
    for _ in range(60):
        T = random_tower(rng, 2, rng.randint(1, 3))
        x, y = random_element(T, rng, 12), random_element(T, rng, 12)
        d = x * y.inverse()
        if is_trivial(T, d):
            continue
        h = discriminate_to_free(T, [d], cap=32)
        assert not h.apply(d).is_identity


def test_commutative_transitivity_samples():
    rng = random.Random(6)
    for _ in range(30):
        T = random_tower(rng, 2, 2)
        y = random_element(T, rng, 3)
        if is_trivial(T, y):
            continue
        pool = [y ** 2, W(T.steps[-1].letter), W(T.steps[0].letter), random_element(T, rng, 3)]
        pool += centralizer_generators(T, y)
        for x in pool:
            for z in pool:
                if commutes(T, x, y) and commutes(T, y, z):
                    assert commutes(T, x, z)


def test_tower_dict_roundtrip():
    rng = random.Random(7)
    T = random_tower(rng, 2, 3)
    assert Tower.from_dict(T.to_dict()) == T


def test_verify_hom_rejects_bad_map(Tat):
    from fraisse.tower import make_hom
    h = make_hom(Tat, make_tower(2), {"t": W("b")})
    with pytest.raises(DomainError):
        verify_hom(h)


# -- Z[t] exponentiation ---------------------------------------------------------

def test_zt_exp_examples():
    S = ExpSession(2)
    T, e = S.exp(W("a"), [2, 3])
    assert e == W("a^2 s1^3")
    assert T == extend_centralizer(make_tower(2), W("a"), "s1")
    assert level_retraction(T, 5).apply(e) == W("a^17")
    assert S.exp(W("a"), [0])[1].is_identity
    T, e = S.exp(W("a^2"), [0, 1])
    assert e == W("s1^2")
    assert S.evaluation_hom(7, T).apply(e) == W("a^14")
    with pytest.raises(DomainError):
        S.exp(Word.identity(), [1])


def test_zt_exp_conjugates_share_ladder():
    S = ExpSession(2)
    _, e1 = S.exp(W("a b"), [0, 1])
    _, e2 = S.exp(W("b a"), [0, 1])
    _, e3 = S.exp(W("b^-1 a^-1"), [0, 1])
    assert len(S.ladders) == 1
    T = S.tower
    k = 3
    h = S.evaluation_hom(k, T)
    assert h.apply(e1) == W("a b") ** k
    assert h.apply(e2) == W("b a") ** k
    assert h.apply(e3) == W("b^-1 a^-1") ** k


def test_zt_laws_random():
    rng = random.Random(8)
    S = ExpSession(2)
    for _ in range(40):
        g = random_element(S.tower.prefix(0), rng, 5)
        if g.is_identity:
            continue
        p = [rng.randint(-4, 4) for _ in range(rng.randint(1, 4))]
        q = [rng.randint(-4, 4) for _ in range(rng.randint(1, 4))]
        _, ep = S.exp(g, p)
        _, eq = S.exp(g, q)
        _, es = S.exp(g, poly_add(p, q))
        assert equals(S.tower, ep * eq, es)
        for k in range(1, 8):
            h = S.evaluation_hom(k)
            assert h.apply(ep) == g ** poly_eval(p, k)
