"""Amalgams of towers: ICE amalgamation, limit-group amalgams, JEP, AP failure."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .errors import DomainError, InputError, NeedsWitness
from .tower import (
    CEStep,
    Hom,
    Tower,
    commutes,
    discriminate_down,
    discriminating_hom,
    equals,
    extend_centralizer,
    fpce_normalize,
    free_multiply,
    fresh_name,
    is_trivial,
    make_hom,
    verify_hom,
)
from .words import (
    Alphabet,
    Word,
    conjugator,
    cyclic_reduce,
    parse_word,
    primitive_root,
    three_squares_scan,
)


class _NonConjugate:
    """Witness value asserting two centralizers are not conjugate."""

    def __repr__(self):
        return "NONCONJUGATE"


NONCONJUGATE = _NonConjugate()

Witness = Union[Word, _NonConjugate]


@dataclass(frozen=True)
class Span:
    C: Tower
    A: Tower
    B: Tower
    # (A letter, B letter) -> conjugator d or NONCONJUGATE
    witnesses: tuple[tuple[tuple[str, str], Witness], ...] = ()

    def __post_init__(self):
        for name, T in (("A", self.A), ("B", self.B)):
            if T.prefix(self.C.depth) != self.C:
                raise InputError(f"{name} does not extend C by steps")
            for s in T.steps[self.C.depth:]:
                if s.kind != "CE":
                    raise InputError(f"{name} must extend C by CE steps only")

    @property
    def A_steps(self) -> tuple[CEStep, ...]:
        return self.A.steps[self.C.depth:]

    @property
    def B_steps(self) -> tuple[CEStep, ...]:
        return self.B.steps[self.C.depth:]

    def to_dict(self) -> dict:
        return {
            "C": self.C.to_dict(), "A": self.A.to_dict(), "B": self.B.to_dict(),
            "witnesses": [{"pair": list(p), "d": None if w is NONCONJUGATE else str(w)}
                          for p, w in self.witnesses],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Span":
        wit = []
        for item in d.get("witnesses", []):
            w = NONCONJUGATE if item["d"] is None else parse_word(item["d"])
            wit.append((tuple(item["pair"]), w))
        return cls(Tower.from_dict(d["C"]), Tower.from_dict(d["A"]), Tower.from_dict(d["B"]),
                   tuple(wit))


@dataclass(frozen=True)
class Cocone:
    D: Tower
    g1: Hom
    g2: Hom
    log: tuple = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "D": self.D.to_dict(),
            "g1": {g: str(w) for g, w in self.g1.images},
            "g2": {g: str(w) for g, w in self.g2.images},
            "log": [dict(e) for e in self.log],
        }


# -- centralizer conjugacy ------------------------------------------------------

def base_anchor(T: Tower, u: Word) -> Optional[Word]:
    """A base word r with C(u) = C(r), if one is visible.

    Base words anchor themselves via their primitive root; otherwise a
    CE step whose core is a base word and commutes with u (or with its
    cyclic core, when the conjugator is a base word) is used; equal
    centralizers follow by commutative transitivity.
    """
    base = set(T.base)
    if u.generators() <= base:
        return primitive_root(u)[0]
    core, c = cyclic_reduce(u)
    if not c.generators() <= base:
        core, c = u, Word.identity()
    for s in T.ce_steps:
        if s.core.generators() <= base and commutes(T, s.core, core):
            return c * s.core * c.inverse()
    return None


def find_conjugator(D: Tower, u_a: Word, u_b: Word,
                    witness: Optional[Witness] = None) -> Optional[Word]:
    """Some d with [d u_b d^-1, u_a] = 1, or None when the centralizers are not conjugate.

    Tries d = 1, then base-level conjugacy of anchors (exact, since towers
    retract onto the base), then the supplied witness.
    """
    if commutes(D, u_a, u_b):
        return Word.identity()
    ra, rb = base_anchor(D, u_a), base_anchor(D, u_b)
    if ra is not None and rb is not None:
        for target in (ra, ra.inverse()):
            h = conjugator(target, rb)
            if h is not None:
                d = h
                assert commutes(D, d * u_b * d.inverse(), u_a)
                return d
        return None
    if witness is NONCONJUGATE:
        return None
    if witness is not None:
        if not commutes(D, witness * u_b * witness.inverse(), u_a):
            raise DomainError(f"witness {witness} does not conjugate C({u_b}) into C({u_a})")
        return witness
    raise NeedsWitness(
        f"cannot decide whether C({u_a}) and C({u_b}) are conjugate above the base",
        pair=(str(u_a), str(u_b)),
    )


# -- ICE amalgamation -------------------------------------------------------------

def ice_amalgamate(span: Span, identify: bool = True) -> Cocone:
    """Amalgamate A and B over C one B-step at a time.

    Each B-step (u, t) is matched against the unmatched A-steps in order: if
    C(g(u)) is conjugate to C(u_i) via d, t goes to d^-1 s_i d; otherwise the
    step is stacked on top of D.  With identify=False every step is stacked.
    """
    wit = dict(span.witnesses)
    D = span.A
    g = {x: Word.gen(x) for x in span.C.generators}
    unmatched = [s for s in span.A_steps]
    log = []
    for s in span.B_steps:
        u = _subst(g, s.u)
        match = None
        if identify:
            for a in unmatched:
                d = find_conjugator(D, a.u, u, wit.get((a.letter, s.letter)))
                if d is not None:
                    cand = d.inverse() * Word.gen(a.letter) * d
                    if all(commutes(D, _subst(g, c), cand) for c in s.basis):
                        match = (a, d, cand)
                        break
        if match:
            a, d, cand = match
            unmatched.remove(a)
            g[s.letter] = cand
            log.append((("step", s.letter), ("case", "conjugate"), ("to", a.letter), ("d", str(d))))
        else:
            name = s.letter if s.letter not in D.level_of else fresh_name(D, s.letter.rstrip("0123456789") or "t")
            D = extend_centralizer(D, u, name)
            g[s.letter] = Word.gen(name)
            log.append((("step", s.letter), ("case", "stacked"), ("to", name)))
    g1 = make_hom(span.A, D, {})
    g2 = make_hom(span.B, D, g)
    _verify_cocone(span, D, g1, g2)
    return Cocone(D, g1, g2, tuple(log))


def _subst(images: Mapping[str, Word], w: Word) -> Word:
    out = Word.identity()
    for x, e in w.syllables:
        out = out * (images[x] ** e)
    return out


def _verify_cocone(span: Span, D: Tower, g1: Hom, g2: Hom) -> None:
    verify_hom(g1)
    verify_hom(g2)
    for x in span.C.generators:
        w = Word.gen(x)
        if not equals(D, g1.apply(w), g2.apply(w)):
            raise DomainError(f"square does not commute on {x}")


def verify_cocone(span: Span, cocone: Cocone) -> bool:
    _verify_cocone(span, cocone.D, cocone.g1, cocone.g2)
    return True


# -- the N_mn amalgam -----------------------------------------------------------

@dataclass(frozen=True)
class LimitAmalgam:
    N: Tower
    embL: Hom
    embM: Hom
    gamma_gens: tuple[Word, ...]
    cases: tuple
    certificate: Optional[Hom]


def limit_group_amalgam(K: Tower, L_steps: Sequence[tuple[Word, str]],
                        M_steps: Sequence[tuple[Word, str]],
                        witnesses: Optional[Mapping[tuple[str, str], Witness]] = None,
                        sample: Sequence[Word] = (), cap: int = 64) -> LimitAmalgam:
    """N = K(L-steps)(M-steps), with M's letters renamed on clashes.

    Conjugate-case relations [C_K(c), t^g] and [t^g, s] come for free from
    stacking; they are checked for each pair of first-level steps whose
    centralizers are conjugate in K.  A discriminating hom N -> L injective on
    `sample` is attached when a sample is given.
    """
    witnesses = dict(witnesses or {})
    L = K
    for u, name in L_steps:
        L = extend_centralizer(L, u, name)
    M = K
    for u, name in M_steps:
        M = extend_centralizer(M, u, name)
    N = L
    ren = {x: Word.gen(x) for x in K.generators}
    for s in M.steps[K.depth:]:
        name = s.letter if s.letter not in N.level_of else fresh_name(N, s.letter.rstrip("0123456789") or "t")
        N = extend_centralizer(N, _subst(ren, s.u), name)
        ren[s.letter] = Word.gen(name)
    embL = make_hom(L, N, {})
    embM = make_hom(M, N, ren)
    verify_hom(embL)
    verify_hom(embM)
    kgens = set(K.generators)
    cases = []
    for a in L.steps[K.depth:]:
        if not a.u.generators() <= kgens:
            continue
        for b in M.steps[K.depth:]:
            if not b.u.generators() <= kgens:
                continue
            gconj = find_conjugator(K, a.u, b.u, witnesses.get((a.letter, b.letter)))
            tb = ren[b.letter]
            if gconj is None:
                cases.append({"pair": [a.letter, b.letter], "case": "not conjugate in K"})
                continue
            # with c = d^g: [t^g, s] = 1 and [C_K(c), t^g] = 1
            tg = gconj * tb * gconj.inverse()
            ok = commutes(N, tg, Word.gen(a.letter)) and commutes(N, a.core, tg)
            if not ok:
                raise DomainError(f"conjugate-case relations fail for {a.letter}, {b.letter}")
            cases.append({"pair": [a.letter, b.letter], "case": "conjugate", "g": str(gconj)})
    gamma = tuple(Word.gen(x) for x in L.generators) + tuple(embM.apply(Word.gen(x)) for x in M.generators if x not in kgens)
    cert = None
    if sample:
        cert = discriminating_hom(N, list(sample), N.depth - L.depth, cap=cap)
    return LimitAmalgam(N, embL, embM, gamma, tuple(tuple(c.items()) for c in cases), cert)


# -- JEP ------------------------------------------------------------------------

def _nonabelian(T: Tower) -> bool:
    gens = [Word.gen(x) for x in T.generators]
    return any(not commutes(T, x, y) for i, x in enumerate(gens) for y in gens[:i])


def jep_product(L: Tower, M: Tower, sample: Sequence[Word] = (),
                fp_max_len: int = 4) -> tuple[Tower, Hom, dict[str, str]]:
    """P = L * M normalized, plus a hom P -> L injective on the sample.

    The hom retracts M's CE steps and substitutes M's base letters by
    shortlex words over L.  Returns (P, certificate, renaming of M).
    """
    if not _nonabelian(L):
        raise DomainError("L must be nonabelian for the free-product certificate")
    P0, ren = free_multiply(L, M)
    P, _ = fpce_normalize(P0)
    cert0 = discriminate_down(P0, list(sample), L.depth, L.alphabet, fp_max_len=fp_max_len)
    cert = Hom(P, L, cert0.images, cert0.meta)
    verify_hom(cert)
    return P, cert, ren


# -- AP failure -----------------------------------------------------------------

def ap_failure_span() -> dict:
    return {
        "C": {"base": ["z"], "steps": []},
        "A": {"base": ["a", "b"], "steps": []},
        "B": {"base": ["c"], "steps": []},
        "f1": {"z": "a^2 b^2"},
        "f2": {"z": "c^2"},
    }


def ap_failure_demo(max_len: int = 3) -> dict:
    """Why Z -> F(a,b), z -> a^2 b^2 and Z -> F(c), z -> c^2 have no limit-group cocone.

    In a cocone g1(a)^2 g1(b)^2 g2(c)^-2 = 1, and in a free group every
    solution of x^2 y^2 z^2 = 1 commutes; so g1(a), g1(b) would commute, but
    a and b do not commute and g1 is injective.
    """
    scan = three_squares_scan(max_len, Alphabet(("a", "b")))
    F = Tower(("a", "b"))
    ab = commutes(F, Word.gen("a"), Word.gen("b"))
    return {
        "span": ap_failure_span(),
        "three_squares": {
            "max_len": scan["max_len"],
            "alphabet": scan["alphabet"],
            "words_scanned": scan["words_scanned"],
            "solutions": len(scan["solutions"]),
            "violations": [[str(w) for w in t] for t in scan["violations"]],
            "all_commuting": scan["all_commuting"],
        },
        "commutes_a_b": ab,
        "obstruction": scan["all_commuting"] and not ab,
        "reason": ("a cocone forces g1(a)^2 g1(b)^2 (g2(c)^-1)^2 = 1; all scanned solutions of "
                   "x^2 y^2 z^2 = 1 commute, so g1(a) and g1(b) would commute, but [a, b] != 1 "
                   "and g1 is injective"),
    }


def ap_failure_report_json(max_len: int = 3) -> str:
    return json.dumps(ap_failure_demo(max_len), sort_keys=True, indent=2)


# -- sampling ---------------------------------------------------------------------

def random_span(rng, base_rank: int = 2, max_steps: int = 2, conj_bias: float = 0.4) -> Span:
    """Span over F(base) with 1..max_steps CE steps on each side.

    u's are short base words, earlier letters, or base conjugates of
    u's already used on the other side, so conjugate cases show up often.
    """
    from .tower import make_tower, random_element

    C = make_tower(base_rank)
    used: list[Word] = []

    def pick(T: Tower) -> Word:
        while True:
            r = rng.random()
            if used and r < conj_bias:
                d = random_element(C, rng, 2)
                u = d.inverse() * rng.choice(used) * d
            elif T.depth > C.depth and r < conj_bias + 0.2:
                u = Word.gen(T.steps[-1].letter)
            else:
                u = random_element(C, rng, 3)
            if not is_trivial(T, u) and u.generators() <= set(T.generators):
                return u

    sides = []
    for prefix in ("s", "t"):
        T = C
        for _ in range(rng.randint(1, max_steps)):
            u = pick(T)
            if u.generators() <= set(C.generators):
                used.append(u)
            T = extend_centralizer(T, u, fresh_name(T, prefix))
        sides.append(T)
    return Span(C, sides[0], sides[1])
