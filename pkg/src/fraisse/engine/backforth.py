"""Partial isomorphisms between chains, extended by back-and-forth.

For graphs, orders and abelian-forall the pairing is a list of elements
of the two final stages, extended with the category's type oracle.  For
tower categories the pairing is carried by two letter maps
``alpha: P -> X`` and ``beta: P -> Y`` out of a common tower P; a round
adds one step to P and checks both squares.  When no partner letter
exists yet, the matching step is appended to a private later stage and
counted in ``appended``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from fraisse.engine.categories import TowerCategory, rename_word
from fraisse.engine.chain import ChainState, LimitElem, locate
from fraisse.errors import DomainError, InputError, SearchFailure
from fraisse.tower import Tower, extend_centralizer, fresh_name, make_tower

GROW_LIMIT = 4000


@dataclass
class PartialIso:
    category: str
    pairs: list[tuple[LimitElem, LimitElem]]
    verified: bool
    rounds: int = 0
    checks: list[dict] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def val(x):
            return x.value if not hasattr(x.value, "syllables") else str(x.value)
        return {
            "category": self.category,
            "pairs": [[[a.stage, val(a)], [b.stage, val(b)]] for a, b in self.pairs],
            "verified": self.verified,
            "rounds": self.rounds,
            "checks": self.checks,
            "info": self.info,
        }


def _same_spec(cx: ChainState, cy: ChainState):
    if cx.category.params() != cy.category.params():
        raise InputError("back-and-forth needs two chains of the same category")


# -- element pairings ------------------------------------------------------------

def _key(v):
    return tuple(v) if isinstance(v, list) else v


def _grow(chain: ChainState, limit: int) -> bool:
    if chain.length >= limit:
        return False
    chain.grow_to(min(limit, chain.length * 2))
    return True


def _extend_pairing(cx, cy, xs, ys, depth, limit, min_rounds=0) -> PartialIso:
    """xs, ys are element values at the final stages of cx and cy."""
    cat = cx.category
    rounds = 0
    checks = []

    def partner(src, srcs, x, dst, dsts):
        while True:
            sx, sy = src.stage(src.length), dst.stage(dst.length)
            y = cat.find_partner(sx, srcs, x, sy, dsts)
            if y is not None:
                return y
            old = dst.length
            if not _grow(dst, limit):
                raise SearchFailure(f"no partner for {x} up to stage {limit}", {"limit": limit})
            # push the paired values on the grown side forward
            dsts[:] = [dst.push(LimitElem(old, v), dst.length).value for v in dsts]

    while True:
        ex = cat.elements(cx.stage(cx.length))[:depth]
        ey = cat.elements(cy.stage(cy.length))[:depth]
        todo_x = [x for x in ex if _key(x) not in {_key(v) for v in xs}]
        todo_y = [y for y in ey if _key(y) not in {_key(v) for v in ys}]
        if not todo_x and not todo_y and rounds >= min_rounds:
            break
        if not todo_x and not todo_y:
            more = [x for x in cat.elements(cx.stage(cx.length)) if _key(x) not in {_key(v) for v in xs}]
            if not more:
                break
            todo_x = more[:1]
        if todo_x:
            x = todo_x[0]
            y = partner(cx, xs, x, cy, ys)
            xs.append(x)
            ys.append(y)
            checks.append({"round": rounds, "dir": "forth", "ok": cat.pairing_ok(
                cx.stage(cx.length), xs, cy.stage(cy.length), ys)})
        if todo_y:
            y = todo_y[0]
            if _key(y) not in {_key(v) for v in ys}:
                x = partner(cy, ys, y, cx, xs)
                xs.append(x)
                ys.append(y)
                checks.append({"round": rounds, "dir": "back", "ok": cat.pairing_ok(
                    cy.stage(cy.length), ys, cx.stage(cx.length), xs)})
        rounds += 1
    nx_, ny_ = cx.length, cy.length
    ok = cat.pairing_ok(cx.stage(nx_), xs, cy.stage(ny_), ys) and all(c["ok"] for c in checks)
    pairs = [(LimitElem(nx_, x), LimitElem(ny_, y)) for x, y in zip(xs, ys)]
    return PartialIso(cat.name, pairs, ok, rounds, checks)


# -- tower pairings ---------------------------------------------------------------

@dataclass
class _Side:
    tower: Tower
    letters: list[str]  # enumeration of the original stage
    appended: int = 0


def _tower_elements(cat: TowerCategory, T: Tower) -> list[str]:
    ce = [s.letter for s in T.ce_steps]
    return ce if cat.fixed_base else list(T.base) + ce


def _tower_round(cat, P, maps, sides, src, letter):
    """Extend P by the step behind ``letter`` of side ``src``; returns new P."""
    f_src = maps[src]
    inv = {v: k for k, v in f_src.items()}
    S = sides[src].tower
    step = next((s for s in S.ce_steps if s.letter == letter), None)
    if step is None:  # a free base letter
        p = fresh_name(P, "p")
        P2 = cat._with_base(P, [p])
        want_u = None
    else:
        missing = step.u.generators() - set(inv) - (set(S.base) if cat.fixed_base else set())
        if missing:
            raise DomainError(f"letters {sorted(missing)} below {letter} are not paired yet")
        v = rename_word(step.u, inv)
        p = fresh_name(P, "p")
        P2 = extend_centralizer(P, v, p)
        want_u = v
    maps[src] = {**f_src, p: letter}
    dst = 1 - src
    f_dst = maps[dst]
    D = sides[dst].tower
    used = set(f_dst.values())
    target = None
    if want_u is None:
        target = next((y for y in D.base if y not in used), None)
        if target is None:
            target = fresh_name(D, "x")
            sides[dst].tower = cat._with_base(D, [target])
            sides[dst].appended += 1
    else:
        u2 = rename_word(want_u, f_dst)
        target = next((s.letter for s in D.ce_steps if s.letter not in used and s.u == u2), None)
        if target is None:
            target = fresh_name(D)
            sides[dst].tower = extend_centralizer(D, u2, target)
            sides[dst].appended += 1
    maps[dst] = {**f_dst, p: target}
    return P2


def _tower_check(cat, P, maps, sides, prev_maps) -> dict:
    out = {}
    for k, name in ((0, "alpha"), (1, "beta")):
        emb = tuple(sorted(maps[k].items()))
        out[name] = cat.is_special(P, emb, sides[k].tower)
        out[name + "_restricts"] = all(maps[k].get(g) == y for g, y in prev_maps[k].items())
    return out


def _tower_extend(cat, P, maps, sides, depth, min_rounds) -> tuple[Tower, int, list[dict]]:
    rounds = 0
    checks = []
    while True:
        todo = []
        for k in (0, 1):
            covered = set(maps[k].values())
            first = [x for x in sides[k].letters[:depth] if x not in covered]
            if not first and rounds < min_rounds:
                first = [x for x in sides[k].letters if x not in covered][:1]
            todo.append(first)
        if not todo[0] and not todo[1]:
            break
        for k, dirn in ((0, "forth"), (1, "back")):
            covered = set(maps[k].values())
            # lowest uncovered letter: everything below it is already paired
            pending = [x for x in sides[k].letters if x not in covered]
            if not todo[k] or not pending:
                continue
            prev = [dict(maps[0]), dict(maps[1])]
            P = _tower_round(cat, P, maps, sides, k, pending[0])
            chk = _tower_check(cat, P, maps, sides, prev)
            chk.update(round=rounds, dir=dirn, letter=pending[0])
            checks.append(chk)
        rounds += 1
    return P, rounds, checks


def _tower_iso(P, maps, sides, rounds, checks, cat, stages) -> PartialIso:
    ok = all(c["alpha"] and c["beta"] and c["alpha_restricts"] and c["beta_restricts"] for c in checks)
    final = [_tower_check(cat, P, maps, sides, maps)]
    ok = ok and final[0]["alpha"] and final[0]["beta"]
    sx, sy = stages[0] + sides[0].appended, stages[1] + sides[1].appended
    from fraisse.words import Word
    pairs = [(LimitElem(sx, Word.gen(maps[0][g])), LimitElem(sy, Word.gen(maps[1][g])))
             for g in P.generators if g in maps[0]]
    info = {"domain": P.to_dict(), "alpha": maps[0], "beta": maps[1],
            "appended": [sides[0].appended, sides[1].appended],
            "x_stage": sides[0].tower.to_dict() if sides[0].appended else None,
            "y_stage": sides[1].tower.to_dict() if sides[1].appended else None}
    return PartialIso(cat.name, pairs, ok, rounds, checks, info)


# -- public operations ----------------------------------------------------------

def back_and_forth(chain_x: ChainState, chain_y: ChainState, depth: int,
                   limit: int = GROW_LIMIT) -> PartialIso:
    """Verified partial isomorphism covering the first ``depth`` elements of each chain."""
    _same_spec(chain_x, chain_y)
    if depth < 0:
        raise InputError("depth must be nonnegative")
    cat = chain_x.category
    if isinstance(cat, TowerCategory):
        X, Y = chain_x.stage(chain_x.length), chain_y.stage(chain_y.length)
        P = make_tower(cat.base_rank) if cat.fixed_base else Tower(())
        sides = [_Side(X, _tower_elements(cat, X)), _Side(Y, _tower_elements(cat, Y))]
        maps = [{}, {}]
        P, rounds, checks = _tower_extend(cat, P, maps, sides, depth, 0)
        return _tower_iso(P, maps, sides, rounds, checks, cat, (chain_x.length, chain_y.length))
    return _extend_pairing(chain_x, chain_y, [], [], depth, limit)


def _check_relational_iso(cat, A, B, iso) -> bool:
    stA, stB = cat.start(A), cat.start(B)
    xs = cat.elements(stA)
    ys = [iso[i] for i in range(len(xs))]
    return sorted(ys) == cat.elements(stB) and cat.pairing_ok(stA, xs, stB, ys)


def homogeneity_witness(chain: ChainState, A, B, iso, depth: int, emb_a=None, emb_b=None,
                        min_rounds: int = 0, limit: int = GROW_LIMIT) -> PartialIso:
    """Extend the isomorphism A -> B between located copies to a larger pairing.

    ``iso`` maps the elements (or, for towers, the generators) of A to those
    of B.  ``emb_a``/``emb_b`` are ``(stage, embedding)``; by default A and B
    are located in the chain.
    """
    cat = chain.category
    if emb_a is None:
        loc = locate(chain, A)
        if not loc.found:
            raise SearchFailure("A is not located in the chain yet", {"horizon": loc.horizon})
        emb_a = (loc.stage, loc.embedding)
    if emb_b is None:
        loc = locate(chain, B)
        if not loc.found:
            raise SearchFailure("B is not located in the chain yet", {"horizon": loc.horizon})
        emb_b = (loc.stage, loc.embedding)
    n = chain.length
    ea = chain.push_emb(emb_a[1], emb_a[0], n)
    eb = chain.push_emb(emb_b[1], emb_b[0], n)
    M = chain.stage(n)
    if not (cat.is_special(A, ea, M) and cat.is_special(B, eb, M)):
        raise DomainError("located embeddings failed the special-embedding predicate")
    if isinstance(cat, TowerCategory):
        iso = dict(iso)
        gens = [s.letter for s in A.ce_steps] if cat.fixed_base else list(A.generators)
        if sorted(iso) != sorted(gens) or len(set(iso.values())) != len(iso) or A.depth != B.depth:
            raise InputError("iso must be a bijection on the generators of A")
        if not cat.is_special(A, tuple(sorted(iso.items())), B):
            raise DomainError("iso is not an isomorphism of towers")
        fa, fb = dict(ea), dict(eb)
        maps = [fa, {g: fb[iso[g]] for g in fa}]
        sides = [_Side(M, _tower_elements(cat, M)), _Side(M, _tower_elements(cat, M))]
        P, rounds, checks = _tower_extend(cat, A, maps, sides, depth, min_rounds)
        return _tower_iso(P, maps, sides, rounds, checks, cat, (n, n))
    if cat.name in ("free_abelian_forall", "free_abelian_plain"):
        raise DomainError("use extension_property_test for the abelian categories")
    if not _check_relational_iso(cat, A, B, iso):
        raise DomainError("iso is not an isomorphism")
    xs = [ea[i] for i in range(len(ea))]
    ys = [eb[iso[i]] for i in range(len(ea))]
    return _extend_pairing(chain, chain, xs, ys, depth, limit, min_rounds)
