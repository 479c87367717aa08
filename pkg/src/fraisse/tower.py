"""Iterated centralizer extensions of free groups, with free factors.

A tower is a free base followed by steps.  A CE step adds a letter ``t``
commuting with the centralizer of a nontrivial ``u`` from below; an FP step
adds free letters.  For reduction every letter is its own HNN level: a CE
letter has associated subgroup C(u) (membership tested by commutation with
u), an FP letter has the trivial associated subgroup.

Equality is decided by Britton's lemma applied level by level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import DomainError, InputError, SearchFailure
from .words import (
    GEN_RE,
    Alphabet,
    Word,
    commutator,
    canonical_cyclic,
    conjugator,
    enumerate_words,
    parse_word,
    primitive_root,
    shortlex_key,
)

DEFAULT_CAP = 1 << 10


@dataclass(frozen=True)
class CEStep:
    u: Word
    letter: str
    core: Word
    basis: tuple[Word, ...]

    kind = "CE"

    @property
    def letters(self) -> tuple[str, ...]:
        return (self.letter,)


@dataclass(frozen=True)
class FPStep:
    letters: tuple[str, ...]

    kind = "FP"


Step = Union[CEStep, FPStep]


@dataclass(frozen=True)
class Tower:
    base: tuple[str, ...]
    steps: tuple[Step, ...] = ()

    @cached_property
    def levels(self) -> tuple[tuple[str, Step], ...]:
        """One entry per step letter, bottom to top."""
        return tuple((x, s) for s in self.steps for x in s.letters)

    @cached_property
    def level_of(self) -> dict[str, int]:
        d = {g: 0 for g in self.base}
        for i, (x, _) in enumerate(self.levels):
            d[x] = i + 1
        return d

    @cached_property
    def generators(self) -> tuple[str, ...]:
        return self.base + tuple(x for x, _ in self.levels)

    @cached_property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.generators)

    @cached_property
    def _memo(self) -> dict:
        return {}

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def ce_steps(self) -> tuple[CEStep, ...]:
        return tuple(s for s in self.steps if s.kind == "CE")

    def prefix(self, n_steps: int) -> "Tower":
        return Tower(self.base, self.steps[:n_steps])

    def word_level(self, w: Word) -> int:
        lv = 0
        for g, _ in w.syllables:
            try:
                lv = max(lv, self.level_of[g])
            except KeyError:
                raise InputError(f"unknown generator {g!r} for this tower") from None
        return lv

    def parse(self, text: str) -> Word:
        return parse_word(text, self.alphabet)

    def __str__(self) -> str:
        parts = [f"F({','.join(self.base)})"]
        for s in self.steps:
            if s.kind == "CE":
                parts.append(f"({s.u},{s.letter})")
            else:
                parts.append(" * " + "*".join(f"<{x}>" for x in s.letters))
        return "".join(parts)

    def to_dict(self) -> dict:
        steps = []
        for s in self.steps:
            if s.kind == "CE":
                steps.append({"kind": "CE", "u": str(s.u), "letter": s.letter,
                              "core": str(s.core), "basis": [str(c) for c in s.basis]})
            else:
                steps.append({"kind": "FP", "letters": list(s.letters)})
        return {"base": list(self.base), "steps": steps}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Tower":
        T = cls(tuple(d["base"]))
        Alphabet(T.base)
        for s in d.get("steps", []):
            if s["kind"] == "CE":
                T = extend_centralizer(T, T.parse(s["u"]), s["letter"])
            elif s["kind"] == "FP":
                T = add_free_letters(T, s["letters"])
            else:
                raise InputError(f"unknown step kind {s['kind']!r}")
        return T


# -- construction -------------------------------------------------------------

def make_tower(rank: int, names: Optional[Sequence[str]] = None) -> Tower:
    if rank < 1:
        raise DomainError("a tower needs a free base of rank >= 1")
    names = tuple(names) if names is not None else Alphabet.standard(rank).names
    if len(names) != rank:
        raise InputError("number of names does not match the rank")
    return Tower(Alphabet(names).names)


def trivial_tower() -> Tower:
    """Rank-0 seed for the free-product hierarchy; only FP steps may follow."""
    return Tower(())


def fresh_name(T: Tower, prefix: str = "t", taken: Iterable[str] = ()) -> str:
    used = set(T.generators) | set(taken)
    i = 1
    while f"{prefix}{i}" in used:
        i += 1
    return f"{prefix}{i}"


def _check_fresh(T: Tower, letter: str) -> None:
    if not GEN_RE.match(letter):
        raise InputError(f"bad generator name {letter!r}")
    if letter in T.level_of:
        raise InputError(f"letter {letter!r} is already used in the tower")


def _ce_letters(T: Tower) -> set[str]:
    return {s.letter for s in T.ce_steps}


def extend_centralizer(T: Tower, u: Word, letter: Optional[str] = None) -> Tower:
    """Append the step G(u, t) = <G, t | [C_G(u), t] = 1>."""
    letter = letter or fresh_name(T)
    _check_fresh(T, letter)
    T.word_level(u)
    if is_trivial(T, u):
        raise DomainError(f"cannot extend the centralizer of a trivial element ({u})")
    ce = _ce_letters(T)
    if u.generators() & ce:
        core = u
    else:
        # u lies in the free subgroup on base and FP letters
        core = primitive_root(u)[0]
    basis = [core]
    for s in T.ce_steps:
        t = Word.gen(s.letter)
        if t != core and commutes(T, t, u):
            basis.append(t)
    return Tower(T.base, T.steps + (CEStep(u, letter, core, tuple(basis)),))


def add_free_letters(T: Tower, letters: Sequence[str]) -> Tower:
    letters = tuple(letters)
    if not letters:
        raise InputError("an FP step needs at least one letter")
    for i, x in enumerate(letters):
        _check_fresh(T, x)
        if x in letters[:i]:
            raise InputError(f"duplicate letter {x!r}")
    return Tower(T.base, T.steps + (FPStep(letters),))


# -- Britton reduction ---------------------------------------------------------

def _in_edge_group(T: Tower, level: int, piece: Word) -> bool:
    if piece.is_identity:
        return True
    key = ("C", level, piece)
    memo = T._memo
    if key not in memo:
        _, step = T.levels[level - 1]
        if step.kind == "CE":
            memo[key] = is_trivial(T, commutator(piece, step.u))
        else:
            memo[key] = is_trivial(T, piece)
    return memo[key]


def _pinch(T: Tower, level: int, w: Word) -> tuple[list[Word], list[int]]:
    """Split w around the level's letter and remove every pinch.

    Returns pieces p0..pn and exponents e1..en with w = p0 t^e1 p1 ... t^en pn
    and no interior piece in the edge group.
    """
    letter = T.levels[level - 1][0]
    pieces: list[Word] = [Word.identity()]
    exps: list[int] = []
    chunk: list = []

    def flush():
        if chunk:
            pieces[-1] = pieces[-1] * Word(tuple(chunk))
            chunk.clear()

    for g, e in w.syllables:
        if g != letter:
            chunk.append((g, e))
            continue
        flush()
        merged = False
        while exps and _in_edge_group(T, level, pieces[-1]):
            # t^e0 c t^e = c t^(e0+e) since t centralizes c
            c = pieces.pop()
            e += exps.pop()
            pieces[-1] = pieces[-1] * c
            if e == 0:
                merged = True
                break
        if not merged:
            exps.append(e)
            pieces.append(Word.identity())
    flush()
    return pieces, exps


def is_trivial(T: Tower, w: Word) -> bool:
    if w.is_identity:
        return True
    level = T.word_level(w)
    if level == 0:
        return False
    memo = T._memo
    if w in memo:
        return memo[w]
    pieces, exps = _pinch(T, level, w)
    result = False if exps else is_trivial(T, pieces[0])
    memo[w] = result
    return result


def equals(T: Tower, x: Word, y: Word) -> bool:
    return is_trivial(T, x * y.inverse())


def commutes(T: Tower, x: Word, y: Word) -> bool:
    return is_trivial(T, commutator(x, y))


def britton_reduce(T: Tower, w: Word) -> Word:
    """An equal word with no pinch at any level."""
    level = T.word_level(w)
    if level == 0:
        return w
    letter = T.levels[level - 1][0]
    pieces, exps = _pinch(T, level, w)
    out = britton_reduce(T, pieces[0])
    for e, p in zip(exps, pieces[1:]):
        out = out * Word.gen(letter, e) * britton_reduce(T, p)
    return out


def centralizer_generators(T: Tower, x: Word) -> list[Word]:
    """Known generators of C(x): the root of x (or x) plus commuting CE letters.

    Only meant for witness checks; completeness is not claimed.
    """
    if is_trivial(T, x):
        raise DomainError("the centralizer of the identity is the whole group")
    gens = [x if x.generators() & _ce_letters(T) else primitive_root(x)[0]]
    for s in T.ce_steps:
        t = Word.gen(s.letter)
        if t != gens[0] and commutes(T, t, x):
            gens.append(t)
    return gens


# -- homomorphisms ----------------------------------------------------------------

@dataclass(frozen=True)
class Hom:
    source: Tower
    target: Tower
    images: tuple[tuple[str, Word], ...]
    # search record (exponents, substitutions); not part of the map itself
    meta: tuple = field(default=(), compare=False)

    @cached_property
    def _map(self) -> dict[str, Word]:
        return dict(self.images)

    def image(self, g: str) -> Word:
        try:
            return self._map[g]
        except KeyError:
            raise InputError(f"{g!r} is not a generator of the source tower") from None

    def apply(self, w: Word) -> Word:
        """Substitute generator images (free reduction only)."""
        out = Word.identity()
        m = self._map
        for g, e in w.syllables:
            if g not in m:
                raise InputError(f"{g!r} is not a generator of the source tower")
            out = out * (m[g] ** e)
        return out

    def to_dict(self) -> dict:
        return {"source": self.source.to_dict(), "target": self.target.to_dict(),
                "images": {g: str(w) for g, w in self.images}}


def make_hom(source: Tower, target: Tower, mapping: Mapping[str, Word]) -> Hom:
    """Hom with the given images; unlisted generators shared with the target are fixed."""
    images = []
    for g in source.generators:
        if g in mapping:
            w = mapping[g]
            target.word_level(w)
        elif g in target.level_of:
            w = Word.gen(g)
        else:
            raise InputError(f"no image given for {g!r}")
        images.append((g, w))
    extra = set(mapping) - set(source.generators)
    if extra:
        raise InputError(f"images given for unknown generators {sorted(extra)}")
    return Hom(source, target, tuple(images))


def identity_hom(T: Tower) -> Hom:
    return Hom(T, T, tuple((g, Word.gen(g)) for g in T.generators))


def hom_apply(h: Hom, x: Word) -> Word:
    return britton_reduce(h.target, h.apply(x))


def hom_compose(h2: Hom, h1: Hom) -> Hom:
    """h2 after h1."""
    if h1.target != h2.source:
        raise InputError("tower mismatch in composition")
    return Hom(h1.source, h2.target, tuple((g, h2.apply(w)) for g, w in h1.images))


def verify_hom(h: Hom) -> bool:
    """Check the defining relations of every CE step map to the identity.

    The recorded basis commutators [c, t] are always checked.  When h(core)
    is nontrivial, [h(core), h(t)] = 1 already forces the whole centralizer
    to commute with h(t) by commutative transitivity, and True is returned;
    False means only the recorded witnesses were checked.
    """
    complete = True
    for s in h.source.ce_steps:
        t = h.apply(Word.gen(s.letter))
        for c in s.basis:
            if not commutes(h.target, h.apply(c), t):
                raise DomainError(f"relation [{c}, {s.letter}] is not preserved")
        if is_trivial(h.target, h.apply(s.core)):
            complete = False
    return complete


# -- retractions and discrimination -------------------------------------------

def level_retraction(T: Tower, k: int, verify: bool = True) -> Hom:
    """Drop the top CE step by sending its letter to core^k."""
    if not T.steps:
        raise DomainError("tower has no steps to retract")
    top = T.steps[-1]
    if top.kind != "CE":
        raise DomainError("top step is a free factor; use discriminate_to_free")
    if k == 0:
        raise DomainError("retraction exponent must be nonzero")
    target = T.prefix(T.depth - 1)
    images = tuple((g, Word.gen(g)) for g in target.generators) + ((top.letter, top.core ** k),)
    h = Hom(T, target, images)
    if verify:
        verify_hom(h)
    return h


def retraction_composite(T: Tower, ks: Sequence[int]) -> Hom:
    """Retract the top len(ks) steps with exponents ks (top first)."""
    h = identity_hom(T)
    cur = T
    for k in ks:
        r = level_retraction(cur, k, verify=False)
        h = hom_compose(r, h)
        cur = r.target
    return h


def _dedupe(T: Tower, X: Sequence[Word]) -> tuple[list[Word], list[bool]]:
    reps: list[Word] = []
    for x in X:
        if not any(equals(T, x, y) for y in reps):
            reps.append(x)
    return reps, [not is_trivial(T, x) for x in reps]


def _separates(target: Tower, imgs: Sequence[Word], nontriv: Sequence[bool]) -> bool:
    for x, nt in zip(imgs, nontriv):
        if nt and is_trivial(target, x):
            return False
    for i in range(len(imgs)):
        for j in range(i):
            if equals(target, imgs[i], imgs[j]):
                return False
    return True


def _exponent_schedule(cap: int) -> list[int]:
    ks, k = [], 1
    while k <= cap:
        ks.append(k)
        k *= 2
    return ks


def discriminating_hom(T: Tower, X: Sequence[Word], levels_down: Optional[int] = None,
                       cap: int = DEFAULT_CAP) -> Hom:
    """Composite of level retractions that is injective on X.

    Exponents are searched per level over 1, 2, 4, ... up to cap; the result
    is verified before it is returned.
    """
    d = T.depth if levels_down is None else levels_down
    if d < 0 or d > T.depth:
        raise DomainError(f"levels_down must lie in 0..{T.depth}")
    for s in T.steps[T.depth - d:]:
        if s.kind != "CE":
            raise DomainError("free-factor step in range; use discriminate_to_free")
    for x in X:
        T.word_level(x)
    reps, nontriv = _dedupe(T, X)
    h = identity_hom(T)
    cur, imgs = T, reps
    chosen: list[int] = []
    for _ in range(d):
        for k in _exponent_schedule(cap):
            r = level_retraction(cur, k, verify=False)
            new = [r.apply(x) for x in imgs]
            if _separates(r.target, new, nontriv):
                break
        else:
            raise SearchFailure(
                f"no exponent <= {cap} separates X at step {cur.depth}",
                attempted={"chosen": chosen, "level": cur.depth,
                           "tried": _exponent_schedule(cap)},
            )
        chosen.append(k)
        h = hom_compose(r, h)
        cur, imgs = r.target, new
    if d:
        verify_hom(h)
    if not _separates(h.target, [h.apply(x) for x in reps], nontriv):
        raise SearchFailure("final verification failed", attempted={"chosen": chosen})
    return replace(h, meta=(("exponents", tuple(chosen)),))


def free_prefix_length(T: Tower) -> int:
    """Number of leading FP steps; base plus their letters generate a free group."""
    n = 0
    while n < T.depth and T.steps[n].kind == "FP":
        n += 1
    return n


def _drop_top_letter(T: Tower) -> Tower:
    top = T.steps[-1]
    if top.kind == "FP" and len(top.letters) > 1:
        return Tower(T.base, T.steps[:-1] + (FPStep(top.letters[:-1]),))
    return T.prefix(T.depth - 1)


def discriminate_down(T: Tower, X: Sequence[Word], stop: int, fp_alphabet: Alphabet,
                      cap: int = DEFAULT_CAP, fp_max_len: int = 4) -> Hom:
    """Hom from T onto its prefix of `stop` steps, injective on X.

    CE letters go to core^k as in discriminating_hom; FP letters are
    substituted by shortlex words over fp_alphabet (length <= fp_max_len).
    """
    for x in X:
        T.word_level(x)
    if not 0 <= stop <= T.depth:
        raise DomainError(f"stop must lie in 0..{T.depth}")
    candidates = [w for w in enumerate_words(fp_alphabet, fp_max_len) if not w.is_identity] \
        if len(fp_alphabet) else []
    reps, nontriv = _dedupe(T, X)
    h = identity_hom(T)
    cur, imgs = T, reps
    log: list = []
    while cur.depth > stop:
        top = cur.steps[-1]
        if top.kind == "CE":
            for k in _exponent_schedule(cap):
                r = level_retraction(cur, k, verify=False)
                new = [r.apply(x) for x in imgs]
                if _separates(r.target, new, nontriv):
                    break
            else:
                raise SearchFailure(
                    f"no exponent <= {cap} separates X at {top.letter}",
                    attempted={"letter": top.letter, "chosen": log,
                               "tried": _exponent_schedule(cap)},
                )
            log.append((top.letter, k))
        else:
            x = top.letters[-1]
            target = _drop_top_letter(cur)
            for w in candidates:
                r = make_hom(cur, target, {x: w})
                new = [r.apply(y) for y in imgs]
                if _separates(target, new, nontriv):
                    break
            else:
                raise SearchFailure(
                    f"no substitution for free letter {x} among {len(candidates)} words "
                    f"of length <= {fp_max_len} over {list(fp_alphabet.names)} separates X",
                    attempted={"letter": x, "chosen": [list(c) for c in log],
                               "candidates": len(candidates)},
                )
            log.append((x, str(w)))
        h = hom_compose(r, h)
        cur, imgs = r.target, new
    verify_hom(h)
    if not _separates(h.target, [h.apply(x) for x in reps], nontriv):
        raise SearchFailure("final verification failed", attempted={"chosen": log})
    return replace(h, meta=(("choices", tuple(log)),))


def discriminate_to_free(T: Tower, X: Sequence[Word], cap: int = DEFAULT_CAP,
                         fp_max_len: int = 4) -> Hom:
    """Hom from T onto its free part (base plus leading free letters), injective on X.

    Free letters above the first CE step are substituted by shortlex words
    over the free part.
    """
    n0 = free_prefix_length(T)
    return discriminate_down(T, X, n0, T.prefix(n0).alphabet, cap, fp_max_len)


# -- free products and normalization -------------------------------------------

def rename_tower(T: Tower, renaming: Mapping[str, str]) -> Tower:
    def rw(w: Word) -> Word:
        return Word(tuple((renaming.get(g, g), e) for g, e in w.syllables))

    steps = []
    for s in T.steps:
        if s.kind == "CE":
            steps.append(CEStep(rw(s.u), renaming.get(s.letter, s.letter), rw(s.core),
                                tuple(rw(c) for c in s.basis)))
        else:
            steps.append(FPStep(tuple(renaming.get(x, x) for x in s.letters)))
    return Tower(tuple(renaming.get(g, g) for g in T.base), tuple(steps))


def free_multiply(T1: Tower, T2: Tower) -> tuple[Tower, dict[str, str]]:
    """T1 * T2 as a tower: T1's steps, an FP step for T2's base, then T2's steps.

    Generators of T2 that clash with T1 are renamed; the renaming is returned.
    """
    taken = set(T1.generators)
    renaming: dict[str, str] = {}
    for g in T2.generators:
        if g in taken:
            stem = g.rstrip("0123456789") or g
            new = fresh_name(T1, stem, taken | set(T2.generators))
            renaming[g] = new
            taken.add(new)
        else:
            taken.add(g)
    T2r = rename_tower(T2, renaming)
    steps = T1.steps
    if T2r.base:
        steps = steps + (FPStep(T2r.base),)
    out = Tower(T1.base, steps)
    # CE steps of T2 are recomputed so their bases refer to the product
    for s in T2r.steps:
        if s.kind == "CE":
            out = extend_centralizer(out, s.u, s.letter)
        else:
            out = add_free_letters(out, s.letters)
    return out, renaming


def fpce_normalize(T: Tower) -> tuple[Tower, dict[str, str]]:
    """Move every free letter into the base, keeping CE steps in order.

    A(u,t) * B = (A * B)(u,t), applied repeatedly.  The bijection on
    generators is the identity on names.
    """
    free = [x for s in T.steps if s.kind == "FP" for x in s.letters]
    out = Tower(T.base + tuple(free))
    for s in T.ce_steps:
        out = extend_centralizer(out, s.u, s.letter)
    return out, {g: g for g in T.generators}


def defining_relators(T: Tower) -> list[Word]:
    """[c, t] for each CE step and each recorded centralizer generator c."""
    return [commutator(c, Word.gen(s.letter)) for s in T.ce_steps for c in s.basis]


# -- Z[t]-exponentiation ---------------------------------------------------------

def poly_trim(p: Sequence[int]) -> list[int]:
    p = [int(c) for c in p]
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_add(p: Sequence[int], q: Sequence[int]) -> list[int]:
    n = max(len(p), len(q))
    return poly_trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def poly_eval(p: Sequence[int], k: int) -> int:
    v = 0
    for c in reversed(p):
        v = v * k + c
    return v


class ExpSession:
    """Lazy approximation of the Z[t]-completion of a free group.

    For each primitive root r (up to conjugacy and inversion) the session
    keeps a ladder of CE letters s_1, s_2, ... where s_j extends the
    centralizer of s_{j-1} and s_0 = r.  Then g^p for g = c r^m c^-1 and
    p = p0 + p1 t + ... is c (r^(m p0) s_1^(m p1) ...) c^-1.
    """

    def __init__(self, base: Union[int, Tower] = 2, prefix: str = "s"):
        self.tower = base if isinstance(base, Tower) else make_tower(base)
        if self.tower.steps:
            raise DomainError("session must start from a free base")
        self.prefix = prefix
        self.ladders: dict[tuple, list[str]] = {}

    def normalize_root(self, g: Word) -> tuple[Word, int, Word]:
        """(r, m, c) with g = c r^m c^-1, r a canonical primitive cyclic word."""
        if g.is_identity:
            raise DomainError("cannot exponentiate the identity")
        if g.generators() - set(self.tower.base):
            raise InputError("exponent base must be a word over the free base")
        root, n = primitive_root(g)
        alph = self.tower.alphabet
        fwd = Word(canonical_cyclic(root))
        bwd = Word(canonical_cyclic(root.inverse()))
        if shortlex_key(bwd, alph) < shortlex_key(fwd, alph):
            r, m = bwd, -n
        else:
            r, m = fwd, n
        h = conjugator(r ** m, g)
        c = h.inverse()
        assert c * r ** m * c.inverse() == g
        return r, m, c

    def ladder(self, r: Word, height: int) -> list[str]:
        key = r.syllables
        lad = self.ladders.setdefault(key, [])
        while len(lad) < height:
            u = Word.gen(lad[-1]) if lad else r
            name = fresh_name(self.tower, self.prefix)
            self.tower = extend_centralizer(self.tower, u, name)
            lad.append(name)
        return lad[:height]

    def exp(self, g: Word, p: Sequence[int]) -> tuple[Tower, Word]:
        p = poly_trim(p)
        r, m, c = self.normalize_root(g)
        if not p:
            return self.tower.prefix(0), Word.identity()
        lad = self.ladder(r, len(p) - 1)
        body = r ** (m * p[0])
        for s, coeff in zip(lad, p[1:]):
            body = body * Word.gen(s, m * coeff)
        elem = c * body * c.inverse()
        return self.smallest_tower(lad), elem

    def smallest_tower(self, letters: Sequence[str]) -> Tower:
        T = self.tower
        if not letters:
            return T.prefix(0)
        return T.prefix(max(T.level_of[x] for x in letters))

    def evaluation_hom(self, k: int, T: Optional[Tower] = None) -> Hom:
        """Every ladder letter s_j goes to s_(j-1)^k, hence to r^(k^j)."""
        T = T or self.tower
        return retraction_composite(T, [k] * T.depth)


# -- sampling ------------------------------------------------------------------

def random_element(T: Tower, rng, max_len: int, letters: Optional[Sequence[str]] = None) -> Word:
    gens = list(letters or T.generators)
    n = rng.randint(0, max_len)
    return Word.identity() if not gens else _reduce_raw(
        [(rng.choice(gens), rng.choice((1, -1))) for _ in range(n)])


def _reduce_raw(raw) -> Word:
    from .words import reduce
    return reduce(raw)


def random_tower(rng, rank: int = 2, depth: int = 2, u_len: int = 4) -> Tower:
    """Random CE tower; u is sometimes the previous letter to grow ladders."""
    T = make_tower(rank)
    for _ in range(depth):
        while True:
            if T.steps and rng.random() < 0.3:
                u = Word.gen(T.steps[-1].letters[-1])
            else:
                u = random_element(T, rng, u_len)
            if not is_trivial(T, u):
                break
        T = extend_centralizer(T, u)
    return T


def random_relator_conjugate(T: Tower, rng, max_len: int = 4) -> Word:
    rels = defining_relators(T)
    if not rels:
        return Word.identity()
    g = random_element(T, rng, max_len)
    r = rng.choice(rels)
    return g * (r if rng.random() < 0.5 else r.inverse()) * g.inverse()
