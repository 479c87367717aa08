"""Freely reduced words in free groups, stored syllable by syllable.

A word is a tuple of ``(generator, exponent)`` pairs with nonzero exponents
and no two adjacent syllables on the same generator.  Storing syllables
instead of letters keeps big powers such as ``a^512`` compact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .errors import DomainError, InputError

GEN_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_TOKEN_RE = re.compile(r"([a-z][a-z0-9_]*)(?:\^([+-]?\d+))?\Z")

Syllable = tuple[str, int]


@dataclass(frozen=True)
class Alphabet:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(set(names)) != len(names):
            raise InputError(f"duplicate generator names in {names}")
        for n in names:
            if not GEN_RE.match(n):
                raise InputError(f"bad generator name {n!r}")

    @classmethod
    def standard(cls, rank: int) -> "Alphabet":
        if rank <= 26:
            return cls(tuple(chr(ord("a") + i) for i in range(rank)))
        return cls(tuple(f"x{i}" for i in range(rank)))

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name):
        return name in self.names

    def index(self, name: str) -> int:
        return self.names.index(name)

    def letter_key(self, name: str, sign: int) -> tuple[int, int]:
        return (self.names.index(name), 0 if sign > 0 else 1)


def _push(stack: list, gen: str, exp: int) -> None:
    if exp == 0:
        return
    if stack and stack[-1][0] == gen:
        total = stack[-1][1] + exp
        if total:
            stack[-1] = (gen, total)
        else:
            stack.pop()
    else:
        stack.append((gen, exp))


@dataclass(frozen=True, order=True)
class Word:
    syllables: tuple[Syllable, ...] = ()

    @classmethod
    def identity(cls) -> "Word":
        return _IDENTITY

    @classmethod
    def gen(cls, name: str, exp: int = 1) -> "Word":
        return cls(((name, exp),)) if exp else _IDENTITY

    @property
    def is_identity(self) -> bool:
        return not self.syllables

    def __len__(self) -> int:
        return sum(abs(e) for _, e in self.syllables)

    def __mul__(self, other: "Word") -> "Word":
        if not other.syllables:
            return self
        if not self.syllables:
            return other
        stack = list(self.syllables)
        for g, e in other.syllables:
            _push(stack, g, e)
        return Word(tuple(stack))

    def inverse(self) -> "Word":
        return Word(tuple((g, -e) for g, e in reversed(self.syllables)))

    def __invert__(self) -> "Word":
        return self.inverse()

    def __pow__(self, n: int) -> "Word":
        if n == 0 or not self.syllables:
            return _IDENTITY
        if n < 0:
            return self.inverse() ** (-n)
        if n == 1:
            return self
        core, conj = cyclic_reduce(self)
        if len(core.syllables) == 1:
            g, e = core.syllables[0]
            body = Word(((g, e * n),))
        else:
            body = Word(core.syllables * n)
        return conj * body * conj.inverse()

    def generators(self) -> set[str]:
        return {g for g, _ in self.syllables}

    def letters(self) -> Iterator[tuple[str, int]]:
        """Letter-by-letter expansion as (generator, +1/-1)."""
        for g, e in self.syllables:
            s = 1 if e > 0 else -1
            for _ in range(abs(e)):
                yield (g, s)

    def __str__(self) -> str:
        return format_word(self)

    def __repr__(self) -> str:
        return f"Word({format_word(self)!r})"


_IDENTITY = Word(())


def reduce(raw: Iterable[tuple[str, int]], alphabet: Optional[Alphabet] = None) -> Word:
    """Freely reduce a raw list of ``(generator, exponent)`` pairs."""
    stack: list = []
    for g, e in raw:
        if alphabet is not None and g not in alphabet:
            raise InputError(f"unknown generator {g!r}")
        _push(stack, g, int(e))
    return Word(tuple(stack))


def commutator(x: Word, y: Word) -> Word:
    return x * y * x.inverse() * y.inverse()


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Return ``(core, conjugator)`` with ``w = conjugator * core * conjugator^-1``."""
    syl = w.syllables
    lo, hi = 0, len(syl) - 1
    conj: list = []
    while hi > lo and syl[lo][0] == syl[hi][0]:
        g, e1 = syl[lo]
        e2 = syl[hi][1]
        conj.append((g, e1))
        if e1 + e2 == 0:
            lo += 1
            hi -= 1
        else:
            core = syl[lo + 1:hi] + ((g, e1 + e2),)
            return Word(core), Word(tuple(conj))
    return Word(syl[lo:hi + 1]), Word(tuple(conj))


def primitive_root(w: Word) -> tuple[Word, int]:
    """Return ``(root, n)`` with ``w = root^n`` and ``root`` not a proper power."""
    if w.is_identity:
        raise DomainError("the identity has no primitive root")
    core, conj = cyclic_reduce(w)
    syl = core.syllables
    if len(syl) == 1:
        g, e = syl[0]
        root_core, n = Word(((g, 1 if e > 0 else -1),)), abs(e)
    else:
        L = len(syl)
        for p in range(1, L + 1):
            if L % p == 0 and syl[:p] * (L // p) == syl:
                root_core, n = Word(syl[:p]), L // p
                break
    return conj * root_core * conj.inverse(), n


def least_rotation(seq: Sequence) -> int:
    """Booth's algorithm: start index of the lexicographically least rotation."""
    n = len(seq)
    if n == 0:
        return 0
    s = list(seq) * 2
    f = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        i = f[j - k - 1]
        while i != -1 and s[j] != s[k + i + 1]:
            if s[j] < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if i == -1 and s[j] != s[k + i + 1]:
            if s[j] < s[k + i + 1]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k % n


def canonical_cyclic(w: Word) -> tuple[Syllable, ...]:
    """Least rotation of the cyclically reduced core; a conjugacy invariant."""
    core, _ = cyclic_reduce(w)
    syl = core.syllables
    k = least_rotation(syl)
    return syl[k:] + syl[:k]


def conjugator(w1: Word, w2: Word) -> Optional[Word]:
    """Some ``g`` with ``g^-1 w1 g = w2``, or None if the words are not conjugate."""
    if w1.is_identity or w2.is_identity:
        return _IDENTITY if w1.is_identity and w2.is_identity else None
    k1, c1 = cyclic_reduce(w1)
    k2, c2 = cyclic_reduce(w2)
    s1, s2 = k1.syllables, k2.syllables
    if len(s1) != len(s2):
        return None
    i1, i2 = least_rotation(s1), least_rotation(s2)
    if s1[i1:] + s1[:i1] != s2[i2:] + s2[:i2]:
        return None
    shift = (i1 - i2) % len(s1)
    prefix = Word(s1[:shift])
    return c1 * prefix * c2.inverse()


def commutes(w1: Word, w2: Word) -> bool:
    return commutator(w1, w2).is_identity


def shortlex_key(w: Word, alphabet: Alphabet):
    return (len(w), tuple(alphabet.letter_key(g, s) for g, s in w.letters()))


def enumerate_words(alphabet: Alphabet, max_len: int) -> list[Word]:
    """All freely reduced words of letter length <= max_len, in shortlex order."""
    letters = [(g, s) for g in alphabet.names for s in (1, -1)]
    out = [_IDENTITY]
    layer: list[tuple[tuple[str, int], ...]] = [()]
    for _ in range(max_len):
        nxt = []
        for seq in layer:
            for g, s in letters:
                if seq and seq[-1] == (g, -s):
                    continue
                nxt.append(seq + ((g, s),))
        layer = nxt
        out.extend(reduce(seq) for seq in layer)
    return out


def three_squares_scan(max_len: int, alphabet: Optional[Alphabet] = None) -> dict:
    """Exhaustively solve ``x^2 y^2 z^2 = 1`` for words of length <= max_len.

    Square roots are unique in free groups, so ``z`` is looked up from a table
    of squares instead of enumerated; pairs whose ``x^2 y^2`` is longer than any
    square in the table are pruned.
    """
    if max_len < 0:
        raise DomainError("max_len must be nonnegative")
    alphabet = alphabet or Alphabet.standard(2)
    if len(alphabet) < 2:
        raise DomainError("three-squares scan needs rank >= 2")
    words = enumerate_words(alphabet, max_len)
    squares = {w ** 2: w for w in words}
    solutions = []
    for x in words:
        x2 = x ** 2
        for y in words:
            p = x2 * y ** 2
            if len(p) > 2 * max_len:
                continue
            z = squares.get(p.inverse())
            if z is not None:
                solutions.append((x, y, z))
    key = lambda t: tuple(shortlex_key(w, alphabet) for w in t)
    solutions.sort(key=key)
    violations = [
        t for t in solutions
        if not (commutes(t[0], t[1]) and commutes(t[1], t[2]) and commutes(t[0], t[2]))
    ]
    return {
        "max_len": max_len,
        "alphabet": list(alphabet.names),
        "words_scanned": len(words),
        "solutions": solutions,
        "violations": violations,
        "all_commuting": not violations,
    }


def parse_word(text: str, alphabet: Optional[Alphabet] = None) -> Word:
    """Parse ``"a b^2 a^-1"``; the identity is ``"1"``."""
    tokens = text.split()
    if not tokens:
        raise InputError("empty word text (use '1' for the identity)", position=0)
    if tokens == ["1"]:
        return _IDENTITY
    raw = []
    pos = 0
    for tok in tokens:
        pos = text.index(tok, pos)
        m = _TOKEN_RE.match(tok)
        if not m:
            raise InputError(f"bad token {tok!r} at position {pos}", position=pos)
        g, e = m.group(1), int(m.group(2)) if m.group(2) is not None else 1
        if e == 0:
            raise InputError(f"zero exponent in {tok!r} at position {pos}", position=pos)
        if alphabet is not None and g not in alphabet:
            raise InputError(f"unknown generator {g!r} at position {pos}", position=pos)
        raw.append((g, e))
        pos += len(tok)
    return reduce(raw)


def format_word(w: Word) -> str:
    if not w.syllables:
        return "1"
    return " ".join(g if e == 1 else f"{g}^{e}" for g, e in w.syllables)
