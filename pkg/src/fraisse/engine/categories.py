"""Built-in amalgamation categories for the chain engine.

Every category exposes the same small protocol, used by the schedule in
``chain.py``:

* ``object(i)``: the i-th enumerated object (total, deterministic).
* ``start(A)``: the first stage built from object 0.
* ``jep(stage, A, rng)``: ``(stage', connecting map, embedding A -> stage')``.
* ``template(a)``: the a-th extension template ``(A, B)`` with ``A`` sitting
  inside ``B`` by a fixed special embedding.
* ``embeddings(A, stage, rng)``: an iterator over special embeddings.
* ``satisfied`` / ``ap``: discharge a task ``(template, f: A -> stage)``.

Graphs and orders grow one shared "world" and a stage is a size-bounded
view of it, so connecting maps are inclusions on element ids.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

import networkx as nx
from networkx.generators.atlas import graph_atlas

from fraisse import lattice as L
from fraisse.errors import DomainError, InputError
from fraisse.tower import (
    Tower,
    extend_centralizer,
    fresh_name,
    is_trivial,
    make_hom,
    make_tower,
    rename_tower,
    verify_hom,
)
from fraisse.words import Alphabet, Word, enumerate_words

ATLAS_SIZE = 1253


def cantor_unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def decode_sequence(i: int) -> list[int]:
    """Bijection from naturals onto finite sequences of naturals."""
    out = []
    while i > 0:
        head, i = cantor_unpair(i - 1)
        out.append(head)
    return out


def seeded_rng(*parts) -> random.Random:
    return random.Random(":".join(str(p) for p in parts))


@dataclass(frozen=True)
class Template:
    """An extension problem: ``A`` sits inside ``B`` via ``info``-described map."""
    index: int
    A: Any
    B: Any
    info: dict = field(default_factory=dict)


class Category:
    name = "abstract"
    strong = False  # has a type oracle
    relational = False  # elements are stable ids, connecting maps are inclusions

    def params(self) -> dict:
        return {"category": self.name}

    # serialization hooks
    def object_json(self, A):
        raise NotImplementedError

    def stage_json(self, st):
        raise NotImplementedError

    def map_json(self, cmap):
        return None if cmap is None else cmap

    def emb_json(self, emb):
        return list(emb)

    def apply_map(self, cmap, x):
        """Push an element along a connecting map (None means inclusion)."""
        return x

    def compose_emb(self, emb, cmap):
        """Push an embedding into the next stage."""
        return emb

    def index_of(self, A) -> Optional[int]:
        return None

    def canonical(self, A):
        raise NotImplementedError

    def locate_embedding(self, A, st):
        """Some special embedding of A into stage st, or None."""
        return next(iter(self.embeddings(A, st, seeded_rng("locate"))), None)


# -- finite graphs -------------------------------------------------------------

class GraphWorld:
    def __init__(self):
        self.adj: list[set[int]] = []

    def add_vertex(self, nbrs) -> int:
        v = len(self.adj)
        self.adj.append(set(nbrs))
        for w in nbrs:
            self.adj[w].add(v)
        return v


@dataclass(frozen=True, eq=False)
class GraphStage:
    world: GraphWorld
    size: int

    def adjacent(self, u: int, v: int) -> bool:
        return v in self.world.adj[u]

    def neighbors(self, v: int) -> set[int]:
        return {w for w in self.world.adj[v] if w < self.size}

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, w) for u in range(self.size) for w in self.world.adj[u] if u < w < self.size)

    def to_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.size))
        g.add_edges_from(self.edges())
        return g


def graph_from_index(i: int) -> nx.Graph:
    if i < 0:
        raise InputError("object index must be nonnegative")
    if i < ATLAS_SIZE:
        return nx.convert_node_labels_to_integers(graph_atlas(i))
    # beyond the atlas: (n, edge mask) pairs for n >= 8, with repetition
    j, n = i - ATLAS_SIZE, 8
    while j >= 2 ** (n * (n - 1) // 2):
        j -= 2 ** (n * (n - 1) // 2)
        n += 1
    g = nx.empty_graph(n)
    pairs = list(itertools.combinations(range(n), 2))
    g.add_edges_from(p for k, p in enumerate(pairs) if j >> k & 1)
    return g


def graph_canonical(g: nx.Graph) -> tuple:
    """Least upper-triangle adjacency string over all vertex orders (n <= 8)."""
    nodes = list(g.nodes)
    n = len(nodes)
    if n > 8:
        raise DomainError(f"canonical form is brute force and limited to 8 vertices, got {n}")
    best = None
    for perm in itertools.permutations(nodes):
        key = tuple(int(g.has_edge(perm[i], perm[j])) for i in range(n) for j in range(i + 1, n))
        if best is None or key < best:
            best = key
    return (n, best or ())


def induced_embeddings(pattern: nx.Graph, st: GraphStage, order: list[int]) -> Iterator[tuple[int, ...]]:
    """Induced embeddings of a graph on 0..k-1 into a stage, backtracking over ``order``."""
    k = pattern.number_of_nodes()
    img: list[int] = []
    used: set[int] = set()

    def rec():
        if len(img) == k:
            yield tuple(img)
            return
        i = len(img)
        for v in order:
            if v in used:
                continue
            if all(st.adjacent(v, img[j]) == pattern.has_edge(i, j) for j in range(i)):
                img.append(v)
                used.add(v)
                yield from rec()
                img.pop()
                used.discard(v)

    yield from rec()


class FinGraph(Category):
    """Finite graphs with induced embeddings; the limit is the Rado graph."""
    name = "fin_graph"
    relational = True

    def object(self, i):
        return graph_from_index(i)

    def object_json(self, A):
        return {"n": A.number_of_nodes(), "edges": sorted(map(sorted, A.edges()))}

    def canonical(self, A):
        return graph_canonical(A)

    def index_of(self, A):
        n, m = A.number_of_nodes(), A.number_of_edges()
        for i in range(ATLAS_SIZE):
            g = graph_atlas(i)
            if g.number_of_nodes() > n:
                break
            if g.number_of_nodes() == n and g.number_of_edges() == m and nx.is_isomorphic(g, A):
                return i
        return None

    def start(self, A):
        world = GraphWorld()
        for v in range(A.number_of_nodes()):
            world.add_vertex([w for w in A.neighbors(v) if w < v])
        return GraphStage(world, len(world.adj))

    def stage_json(self, st):
        return {"size": st.size}

    def elements(self, st):
        return list(range(st.size))

    def jep(self, st, A, rng):
        world = st.world
        if len(world.adj) != st.size:
            raise DomainError("graph worlds only grow from their last stage")
        base = st.size
        for v in range(A.number_of_nodes()):
            world.add_vertex([base + w for w in A.neighbors(v) if w < v])
        return GraphStage(world, len(world.adj)), None, tuple(range(base, len(world.adj)))

    def template(self, a):
        # one-point extensions of atlas graph g by every adjacency pattern
        g, rest = 0, a
        while True:
            A = self.object(g)
            k = A.number_of_nodes()
            if rest < 2 ** k:
                B = A.copy()
                B.add_node(k)
                B.add_edges_from((j, k) for j in range(k) if rest >> j & 1)
                return Template(a, A, B, {"graph": g, "pattern": rest})
            rest -= 2 ** k
            g += 1

    def embeddings(self, A, st, rng):
        order = list(range(st.size))
        rng.shuffle(order)
        return induced_embeddings(A, st, order)

    def is_special(self, A, emb, st) -> bool:
        k = A.number_of_nodes()
        if len(emb) != k or len(set(emb)) != k or any(not 0 <= v < st.size for v in emb):
            return False
        return all(st.adjacent(emb[i], emb[j]) == A.has_edge(i, j)
                   for i in range(k) for j in range(i + 1, k))

    def satisfied(self, tpl, emb, st):
        k = tpl.A.number_of_nodes()
        want = [tpl.B.has_edge(j, k) for j in range(k)]
        used = set(emb)
        for w in range(st.size):
            if w not in used and all(st.adjacent(w, emb[j]) == want[j] for j in range(k)):
                return tuple(emb) + (w,)
        return None

    def ap(self, tpl, emb, st):
        k = tpl.A.number_of_nodes()
        world = st.world
        v = world.add_vertex([emb[j] for j in range(k) if tpl.B.has_edge(j, k)])
        return GraphStage(world, len(world.adj)), None, tuple(emb) + (v,)

    def check_ext(self, tpl, emb, ext, st) -> bool:
        return tuple(ext[:len(emb)]) == tuple(emb) and self.is_special(tpl.B, ext, st)

    def is_connecting_special(self, st1, cmap, st2) -> bool:
        return st1.world is st2.world and st1.size <= st2.size

    # type oracle: the adjacency pattern to the already paired elements
    def find_partner(self, stX, xs, x, stY, ys):
        want = [stX.adjacent(x, xi) for xi in xs]
        used = set(ys)
        for y in range(stY.size):
            if y not in used and all(stY.adjacent(y, yi) == w for yi, w in zip(ys, want)):
                return y
        return None

    def pairing_ok(self, stX, xs, stY, ys) -> bool:
        n = len(xs)
        if len(set(xs)) != n or len(set(ys)) != n:
            return False
        return all(stX.adjacent(xs[i], xs[j]) == stY.adjacent(ys[i], ys[j])
                   for i in range(n) for j in range(i + 1, n))


# -- finite linear orders ------------------------------------------------------

class OrderWorld:
    def __init__(self):
        self.order: list[int] = []
        self.pos: dict[int, int] = {}
        self.count = 0

    def insert(self, position: int) -> int:
        v = self.count
        self.count += 1
        self.order.insert(position, v)
        self.pos = {x: i for i, x in enumerate(self.order)}
        return v


@dataclass(frozen=True, eq=False)
class OrderStage:
    world: OrderWorld
    size: int

    def less(self, u: int, v: int) -> bool:
        return self.world.pos[u] < self.world.pos[v]

    def elements_in_order(self) -> list[int]:
        return [x for x in self.world.order if x < self.size]


class FinLinOrder(Category):
    """Finite linear orders with order embeddings; the limit is (Q, <)."""
    name = "fin_linorder"
    relational = True

    def object(self, i):
        if i < 0:
            raise InputError("object index must be nonnegative")
        return i  # the chain 0 < 1 < ... < i-1

    def object_json(self, A):
        return {"size": A}

    def canonical(self, A):
        return A

    def index_of(self, A):
        return A

    def start(self, A):
        world = OrderWorld()
        for j in range(A):
            world.insert(j)
        return OrderStage(world, world.count)

    def stage_json(self, st):
        return {"size": st.size}

    def elements(self, st):
        return list(range(st.size))

    def jep(self, st, A, rng):
        world = st.world
        elems = st.elements_in_order()
        if A <= len(elems):
            chosen = sorted(rng.sample(range(len(elems)), A))
            return st, None, tuple(elems[j] for j in chosen)
        # add the missing points at seeded positions, then pick a seeded A-subset
        for _ in range(A - len(elems)):
            world.insert(rng.randint(0, len(world.order)))
        st2 = OrderStage(world, world.count)
        elems = st2.elements_in_order()
        return st2, None, tuple(elems)

    def template(self, a):
        k = (math.isqrt(8 * a + 1) - 1) // 2
        gap = a - k * (k + 1) // 2
        return Template(a, k, k + 1, {"size": k, "gap": gap})

    def embeddings(self, A, st, rng):
        elems = st.elements_in_order()
        idx = list(range(len(elems)))
        rng.shuffle(idx)
        for combo in itertools.combinations(idx, A):
            yield tuple(elems[j] for j in sorted(combo))

    def is_special(self, A, emb, st) -> bool:
        if len(emb) != A or len(set(emb)) != A or any(not 0 <= v < st.size for v in emb):
            return False
        return all(st.less(emb[i], emb[i + 1]) for i in range(A - 1))

    def _gap_bounds(self, tpl, emb, st):
        gap = tpl.info["gap"]
        lo = st.world.pos[emb[gap - 1]] if gap > 0 else -1
        hi = st.world.pos[emb[gap]] if gap < len(emb) else len(st.world.order)
        return lo, hi

    def satisfied(self, tpl, emb, st):
        lo, hi = self._gap_bounds(tpl, emb, st)
        for p in range(lo + 1, hi):
            w = st.world.order[p]
            if w < st.size:
                gap = tpl.info["gap"]
                return tuple(emb[:gap]) + (w,) + tuple(emb[gap:])
        return None

    def ap(self, tpl, emb, st):
        if st.world.count != st.size:
            raise DomainError("order worlds only grow from their last stage")
        lo, _ = self._gap_bounds(tpl, emb, st)
        w = st.world.insert(lo + 1)
        gap = tpl.info["gap"]
        return OrderStage(st.world, st.world.count), None, tuple(emb[:gap]) + (w,) + tuple(emb[gap:])

    def check_ext(self, tpl, emb, ext, st) -> bool:
        gap = tpl.info["gap"]
        return (tuple(ext[:gap]) + tuple(ext[gap + 1:]) == tuple(emb)
                and self.is_special(tpl.B, ext, st))

    def is_connecting_special(self, st1, cmap, st2) -> bool:
        return st1.world is st2.world and st1.size <= st2.size

    def find_partner(self, stX, xs, x, stY, ys):
        want = [stX.less(x, xi) for xi in xs]
        used = set(ys)
        # earliest created element of the right cut, so partners stay in early stages
        for y in range(stY.size):
            if y not in used and all(stY.less(y, yi) == w for yi, w in zip(ys, want)):
                return y
        return None

    def pairing_ok(self, stX, xs, stY, ys) -> bool:
        n = len(xs)
        if len(set(xs)) != n or len(set(ys)) != n:
            return False
        return all(stX.less(xs[i], xs[j]) == stY.less(ys[i], ys[j]) for i in range(n) for j in range(n))


# -- free abelian groups ---------------------------------------------------------

def _unit_columns(N: int, coords) -> list[list[int]]:
    """N x m matrix whose j-th column is e_{coords[j]}."""
    return [[int(coords[j] == i) for j in range(len(coords))] for i in range(N)]


def _columns(G) -> list[list[int]]:
    return L.transpose(G) if G and G[0] else []


def _coordinate_support(cols) -> Optional[list[int]]:
    """Coordinates hit when every column is a distinct signed unit vector."""
    out = []
    for c in cols:
        nz = [i for i, x in enumerate(c) if x]
        if len(nz) != 1 or abs(c[nz[0]]) != 1 or nz[0] in out:
            return None
        out.append(nz[0])
    return out


def _pure_columns(G) -> bool:
    cols = _columns(G)
    return _coordinate_support(cols) is not None or L.is_pure_embedding(G)


class FreeAbelianForall(Category):
    """Free abelian groups of finite rank with pure embeddings (strong forall-AP).

    Objects are ranks; an embedding Z^m -> Z^N is an N x m integer matrix
    whose columns are the images of the basis.
    """
    name = "free_abelian_forall"
    strong = True

    def object(self, i):
        if i < 0:
            raise InputError("object index must be nonnegative")
        # 0, 0,1, 0,1,2, ...: every rank occurs infinitely often
        k = (math.isqrt(8 * i + 1) - 1) // 2
        return i - k * (k + 1) // 2

    def object_json(self, A):
        return {"rank": A}

    def canonical(self, A):
        return A

    def index_of(self, A):
        return A * (A + 1) // 2 + A

    def start(self, A):
        return A

    def stage_json(self, st):
        return {"rank": st}

    def map_json(self, cmap):
        return cmap

    def emb_json(self, emb):
        return emb

    def apply_map(self, cmap, x):
        return list(x) if cmap is None else L.matvec(cmap, x)

    def compose_emb(self, emb, cmap):
        if cmap is None:
            return emb
        return L.matmul(cmap, emb) if emb and emb[0] else [[] for _ in cmap]

    def elements(self, st):
        return [[int(i == j) for i in range(st)] for j in range(st)]

    def jep(self, st, A, rng):
        if A <= st:
            return st, None, _unit_columns(st, list(range(A)))
        return A, _unit_columns(A, list(range(st))), L.identity(A)

    def template(self, a):
        m, d = cantor_unpair(a)
        return Template(a, m, m + d + 1, {"kind": "inclusion"})

    def embeddings(self, A, st, rng):
        coords = list(range(st))
        rng.shuffle(coords)
        for perm in itertools.permutations(coords, A):
            yield _unit_columns(st, list(perm))

    def embedding_ok(self, A, emb, st) -> bool:
        return len(emb) == st and all(len(r) == A for r in emb)

    def is_special(self, A, emb, st) -> bool:
        return self.embedding_ok(A, emb, st) and _pure_columns(emb)

    def is_connecting_special(self, st1, cmap, st2) -> bool:
        if cmap is None:
            return st1 == st2
        return self.embedding_ok(st1, cmap, st2) and _pure_columns(cmap)

    def _extend_by_complement(self, tpl, emb, st):
        m, m2 = tpl.A, tpl.B
        if st < m2:
            return None
        cols = _columns(emb)
        support = _coordinate_support(cols)
        if support is not None:
            free = [i for i in range(st) if i not in support]
            extra = [[int(i == j) for i in range(st)] for j in free[: m2 - m]]
        else:
            K = L.direct_complement(L.pure_closure(L.TupleZ(st, tuple(map(tuple, cols)))))
            extra = K.rows()[: m2 - m]
        new = cols + extra
        return L.transpose(new, st) if new else [[] for _ in range(st)]

    def satisfied(self, tpl, emb, st):
        return self._extend_by_complement(tpl, emb, st)

    def ap(self, tpl, emb, st):
        b = L.TupleZ(st, tuple(map(tuple, _columns(emb))))
        c = L.TupleZ(tpl.B, tuple(tuple(int(i == j) for i in range(tpl.B)) for j in range(tpl.A)))
        co = L.amalgamate_tuples(b, c)
        return co.rank, co.g1, co.g2

    def check_ext(self, tpl, emb, ext, st) -> bool:
        if not self.is_special(tpl.B, ext, st):
            return False
        return [row[: tpl.A] for row in ext] == [list(r) for r in emb]

    # type oracle: universal type of tuples, read through pure closures
    def find_partner(self, stX, xs, x, stY, ys):
        bx, by = L.TupleZ(stX, tuple(map(tuple, xs))), L.TupleZ(stY, tuple(map(tuple, ys)))
        iso = L.same_universal_type(bx, by)
        if iso is None:
            raise DomainError("current pairing does not preserve universal types")
        S, r = iso.source, iso.source.rank
        if S.coordinates(x) is not None:
            return iso.apply(x)
        R = L.pure_closure(L.TupleZ(stX, tuple(map(tuple, xs)) + (tuple(x),)))
        SR = [R.coordinates(v) for v in S.rows()]
        kappa = L.direct_complement(L.IntLattice.from_rows(r + 1, SR)).rows()[0]
        w = L.vecmat(kappa, R.rows())
        coeffs = L.solve_left(S.rows() + [w], x)
        sigma, mult = [int(q) for q in coeffs[:r]], int(coeffs[r])
        T = iso.target
        if T.rank >= stY:
            return None
        w2 = L.direct_complement(T).rows()[0]
        p = L.vecmat(sigma, S.rows()) if r else [0] * stX
        y0 = iso.apply(p) if r else [0] * stY
        return [a + mult * b for a, b in zip(y0, w2)]

    def pairing_ok(self, stX, xs, stY, ys) -> bool:
        bx, by = L.TupleZ(stX, tuple(map(tuple, xs))), L.TupleZ(stY, tuple(map(tuple, ys)))
        return L.same_universal_type(bx, by) is not None


class FreeAbelianPlain(FreeAbelianForall):
    """Free abelian groups with all injective maps; the classical limit is Q^(omega)."""
    name = "free_abelian_plain"
    strong = False

    def template(self, a):
        if a % 2:
            return Template(a, 1, 1, {"kind": "half"})
        m, d = cantor_unpair(a // 2)
        return Template(a, m, m + d + 1, {"kind": "inclusion"})

    def _e(self, tpl):
        if tpl.info["kind"] == "half":
            return [[2]]
        return _unit_columns(tpl.B, list(range(tpl.A)))

    def is_special(self, A, emb, st) -> bool:
        if not self.embedding_ok(A, emb, st):
            return False
        return A == 0 or L.rank(_columns(emb)) == A

    def is_connecting_special(self, st1, cmap, st2) -> bool:
        if cmap is None:
            return st1 == st2
        return self.is_special(st1, cmap, st2)

    def satisfied(self, tpl, emb, st):
        if tpl.info["kind"] == "half":
            v = [r[0] for r in emb]
            return [[x // 2] for x in v] if all(x % 2 == 0 for x in v) else None
        return self._extend_by_complement(tpl, emb, st)

    def ap(self, tpl, emb, st):
        co = L.pushout_torsionfree(self._e(tpl), emb, tpl.A)
        return co.rank, co.g2, co.g1

    def check_ext(self, tpl, emb, ext, st) -> bool:
        if not self.is_special(tpl.B, ext, st):
            return False
        composite = L.matmul(ext, self._e(tpl)) if tpl.A else [[] for _ in range(st)]
        return composite == [list(r) for r in emb]

    def find_partner(self, *args):
        raise DomainError("the plain abelian category has no type oracle")

    def pairing_ok(self, *args):
        raise DomainError("the plain abelian category has no type oracle")


# -- tower categories (ICE over a fixed base, FPCE from the trivial group) -------

def rename_word(w: Word, f: dict) -> Word:
    return Word(tuple((f.get(g, g), e) for g, e in w.syllables))


def nth_nontrivial_word(T: Tower, n: int) -> Word:
    """The n-th nontrivial element word over T's generators, in shortlex order."""
    memo = T._memo.setdefault("nontrivial_words", [])
    length = T._memo.get("nontrivial_len", 0)
    while len(memo) <= n:
        length += 1
        if length > 12:
            raise DomainError("word enumeration exhausted its length bound")
        memo.clear()
        memo.extend(w for w in enumerate_words(T.alphabet, length)
                    if not w.is_identity and not is_trivial(T, w))
        T._memo["nontrivial_len"] = length
    return memo[n]


class TowerCategory(Category):
    """Towers with step-suffix embeddings.

    With ``base_rank`` set this is the ICE category over F(base_rank) and
    embeddings fix the base.  Without it this is the FPCE category: objects
    start from the trivial group, free letters live in the base, and
    embeddings send base letters injectively to base letters.  An embedding
    is a letter map sending each CE letter t to a letter x with
    u_x = f(u_t) written out letter by letter.
    """

    def __init__(self, base_rank: Optional[int] = 2):
        if base_rank is not None and base_rank < 1:
            raise DomainError("ICE base rank must be >= 1")
        self.base_rank = base_rank
        self.name = "ice" if base_rank is not None else "fpce"

    def params(self):
        d = {"category": self.name}
        if self.base_rank is not None:
            d["base_rank"] = self.base_rank
        return d

    @property
    def fixed_base(self) -> bool:
        return self.base_rank is not None

    def object(self, i):
        if i < 0:
            raise InputError("object index must be nonnegative")
        seq = decode_sequence(i)
        if self.fixed_base:
            T = make_tower(self.base_rank)
        else:
            if not seq or seq[0] == 0:
                return Tower(())
            T = Tower(Alphabet.standard(seq[0]).names)
            seq = seq[1:]
        for x in seq:
            T = extend_centralizer(T, nth_nontrivial_word(T, x), fresh_name(T))
        return T

    def object_json(self, A):
        return A.to_dict()

    def stage_json(self, st):
        return st.to_dict()

    def emb_json(self, emb):
        return dict(emb)

    def canonical(self, A):
        ren = {s.letter: f"t{i + 1}" for i, s in enumerate(A.ce_steps)}
        if not self.fixed_base:
            names = Alphabet.standard(len(A.base)).names if A.base else ()
            ren.update(zip(A.base, names))
        # two passes through placeholder names keep the renaming collision free
        B = rename_tower(A, {g: f"q{i}" for i, g in enumerate(A.generators)})
        back = {f"q{i}": ren.get(g, g) for i, g in enumerate(A.generators)}
        return str(rename_tower(B, back).to_dict())

    def start(self, A):
        return A

    def elements(self, st):
        return [s.letter for s in st.ce_steps]

    # -- embeddings ---------------------------------------------------------
    def embeddings(self, A, st, rng):
        if self.fixed_base and A.base != st.base:
            return iter(())
        steps = A.ce_steps
        by_u: dict[str, list[str]] = {}
        for s in st.ce_steps:
            by_u.setdefault(str(s.u), []).append(s.letter)
        for v in by_u.values():
            rng.shuffle(v)
        base_targets = list(st.base)
        rng.shuffle(base_targets)

        def ce_rec(i, f, used):
            if i == len(steps):
                yield tuple(sorted(f.items()))
                return
            want = str(rename_word(steps[i].u, f))
            for x in by_u.get(want, ()):
                if x not in used:
                    f[steps[i].letter] = x
                    used.add(x)
                    yield from ce_rec(i + 1, f, used)
                    used.discard(x)
                    del f[steps[i].letter]

        def base_rec(i, f, used):
            if i == len(A.base):
                yield from ce_rec(0, f, set())
                return
            for y in base_targets:
                if y not in used:
                    f[A.base[i]] = y
                    used.add(y)
                    yield from base_rec(i + 1, f, used)
                    used.discard(y)
                    del f[A.base[i]]

        if self.fixed_base:
            return ce_rec(0, {}, set())
        return base_rec(0, {}, set())

    def as_hom(self, A, emb, st):
        f = dict(emb)
        return make_hom(A, st, {g: Word.gen(x) for g, x in f.items()})

    def is_special(self, A, emb, st) -> bool:
        f = dict(emb)
        if len(set(f.values())) != len(f):
            return False
        if self.fixed_base:
            if A.base != st.base:
                return False
        elif set(f) != set(A.generators) or any(f[g] not in st.base for g in A.base):
            return False
        lv = {s.letter: s for s in st.ce_steps}
        for s in A.ce_steps:
            x = f.get(s.letter)
            if x not in lv or lv[x].u != rename_word(s.u, f):
                return False
        try:
            return verify_hom(self.as_hom(A, emb, st))
        except (DomainError, InputError):
            return False

    def is_connecting_special(self, st1, cmap, st2) -> bool:
        ident = tuple((g, g) for g in st1.generators)
        if not set(st1.base) <= set(st2.base) or (self.fixed_base and st1.base != st2.base):
            return False
        if self.fixed_base:
            ident = tuple((s.letter, s.letter) for s in st1.ce_steps)
        return self.is_special(st1, ident, st2)

    # -- JEP / AP -----------------------------------------------------------
    def _with_base(self, st, extra):
        out = Tower(st.base + tuple(extra))
        for s in st.ce_steps:
            out = extend_centralizer(out, s.u, s.letter)
        return out

    def jep(self, st, A, rng):
        emb = next(iter(self.embeddings(A, st, rng)), None)
        if emb is not None:
            return st, None, emb
        f: dict[str, str] = {}
        D = st
        if not self.fixed_base:
            extra = []
            for g in A.base:
                y = fresh_name(D, "x", extra)
                extra.append(y)
                f[g] = y
            if extra:
                D = self._with_base(D, extra)
        for s in A.ce_steps:
            x = fresh_name(D)
            D = extend_centralizer(D, rename_word(s.u, f), x)
            f[s.letter] = x
        return D, None, tuple(sorted(f.items()))

    def template(self, a):
        o, j = cantor_unpair(a)
        A = self.object(o)
        if self.fixed_base or (j > 0 and A.base):
            jj = j if self.fixed_base else j - 1
            u = nth_nontrivial_word(A, jj)
            B = extend_centralizer(A, u, fresh_name(A))
            return Template(a, A, B, {"object": o, "word": jj, "kind": "CE"})
        y = fresh_name(A, "x")
        return Template(a, A, self._with_base(A, [y]), {"object": o, "kind": "FP", "letter": y})

    def _new_letter(self, tpl):
        if tpl.info["kind"] == "CE":
            return tpl.B.steps[-1].letter
        return tpl.info["letter"]

    def satisfied(self, tpl, emb, st):
        f = dict(emb)
        used = set(f.values())
        new = self._new_letter(tpl)
        if tpl.info["kind"] == "CE":
            want = rename_word(tpl.B.steps[-1].u, f)
            for s in st.ce_steps:
                if s.letter not in used and s.u == want:
                    return tuple(sorted({**f, new: s.letter}.items()))
            return None
        for y in st.base:
            if y not in used:
                return tuple(sorted({**f, new: y}.items()))
        return None

    def ap(self, tpl, emb, st):
        f = dict(emb)
        new = self._new_letter(tpl)
        if tpl.info["kind"] == "CE":
            x = fresh_name(st)
            D = extend_centralizer(st, rename_word(tpl.B.steps[-1].u, f), x)
        else:
            x = fresh_name(st, "x")
            D = self._with_base(st, [x])
        return D, None, tuple(sorted({**f, new: x}.items()))

    def check_ext(self, tpl, emb, ext, st) -> bool:
        e = dict(ext)
        if any(e.get(g) != x for g, x in emb):
            return False
        return self.is_special(tpl.B, ext, st)


def make_category(spec) -> Category:
    """Category from its JSON selection, e.g. {"category": "ice", "base_rank": 2}."""
    if isinstance(spec, Category):
        return spec
    if isinstance(spec, str):
        spec = {"category": spec}
    name = spec.get("category")
    if name == "fin_graph":
        return FinGraph()
    if name == "fin_linorder":
        return FinLinOrder()
    if name == "free_abelian_forall":
        return FreeAbelianForall()
    if name == "free_abelian_plain":
        return FreeAbelianPlain()
    if name == "ice":
        return TowerCategory(int(spec.get("base_rank", 2)))
    if name == "fpce":
        return TowerCategory(None)
    raise InputError(f"unknown category {name!r}")
