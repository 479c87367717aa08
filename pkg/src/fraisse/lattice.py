"""Exact integer linear algebra for finitely generated free abelian groups.

Matrices are lists of rows of Python ints.  Maps between lattices act on
column vectors: a map Z^m -> Z^N is an N x m matrix.  Tuples of elements are
lists of vectors.  No floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import DomainError, InputError

Matrix = list[list[int]]


# -- small matrix helpers ---------------------------------------------------

def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def zeros(rows: int, cols: int) -> Matrix:
    return [[0] * cols for _ in range(rows)]


def transpose(M: Sequence[Sequence[int]], cols: Optional[int] = None) -> Matrix:
    if not M:
        return [[] for _ in range(cols or 0)]
    return [list(col) for col in zip(*M)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Matrix:
    if not A:
        return []
    inner = len(A[0])
    if inner != len(B):
        raise InputError(f"shape mismatch: {len(A)}x{inner} times {len(B)}x?")
    cols = len(B[0]) if B else 0
    Bt = transpose(B, cols)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def matvec(A: Sequence[Sequence[int]], v: Sequence[int]) -> list[int]:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def vecmat(v: Sequence[int], A: Sequence[Sequence[int]]) -> list[int]:
    cols = len(A[0]) if A else 0
    out = [0] * cols
    for x, row in zip(v, A):
        if x:
            for j, a in enumerate(row):
                out[j] += x * a
    return out


def determinant(M: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free elimination."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(r) for r in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def _rref(M: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    A = [[Fraction(x) for x in row] for row in M]
    pivots = []
    r = 0
    cols = len(A[0]) if A else 0
    for c in range(cols):
        p = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M: Sequence[Sequence[int]]) -> int:
    if not M or not M[0]:
        return 0
    return len(_rref(M)[1])


def solve_left(P: Sequence[Sequence[int]], v: Sequence[int]) -> Optional[list[Fraction]]:
    """Rational x with x * P = v, or None.  P must have independent rows."""
    r = len(P)
    if r == 0:
        return [] if not any(v) else None
    aug = [list(col) + [b] for col, b in zip(transpose(P), v)]
    R, piv = _rref(aug)
    if r in piv:
        return None
    x = [Fraction(0)] * r
    for row, c in zip(R, piv):
        x[c] = row[r]
    return x


def inverse_unimodular(W: Sequence[Sequence[int]]) -> Matrix:
    n = len(W)
    aug = [list(row) + e for row, e in zip(W, identity(n))]
    R, piv = _rref(aug)
    if piv[:n] != list(range(n)):
        raise DomainError("matrix is singular")
    inv = [row[n:] for row in R[:n]]
    if any(x.denominator != 1 for row in inv for x in row):
        raise DomainError("matrix is not unimodular")
    return [[int(x) for x in row] for row in inv]


def _as_int_vector(x: Sequence[Fraction]) -> Optional[list[int]]:
    if any(q.denominator != 1 for q in x):
        return None
    return [int(q) for q in x]


# -- normal forms -------------------------------------------------------------

def hermite_normal_form(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Row Hermite normal form: returns (H, U) with U unimodular and H = U M.

    Pivots are positive, move strictly right going down, entries above a pivot
    lie in [0, pivot), zero rows sit at the bottom.
    """
    A = [list(r) for r in M]
    m = len(A)
    n = len(A[0]) if m else 0
    U = identity(m)
    r = 0
    for col in range(n):
        if r == m:
            break
        while True:
            rows = [i for i in range(r, m) if A[i][col]]
            if not rows:
                break
            p = min(rows, key=lambda i: abs(A[i][col]))
            A[r], A[p] = A[p], A[r]
            U[r], U[p] = U[p], U[r]
            clean = True
            for i in range(r + 1, m):
                if A[i][col]:
                    q = A[i][col] // A[r][col]
                    A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[r])]
                    clean = clean and A[i][col] == 0
            if clean:
                break
        if A[r][col] == 0:
            continue
        if A[r][col] < 0:
            A[r] = [-x for x in A[r]]
            U[r] = [-x for x in U[r]]
        for i in range(r):
            q = A[i][col] // A[r][col]
            if q:
                A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                U[i] = [x - q * y for x, y in zip(U[i], U[r])]
        r += 1
    return A, U


def _smith(M: Sequence[Sequence[int]]):
    """Smith form with transforms: (S, U, V, V^-1), S = U M V."""
    A = [list(r) for r in M]
    m = len(A)
    n = len(A[0]) if m else 0
    U, V, Vi = identity(m), identity(n), identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def add_row(dst, src, q):  # row dst += q * row src
        A[dst] = [x + q * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x + q * y for x, y in zip(U[dst], U[src])]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def add_col(dst, src, q):  # col dst += q * col src
        for row in A:
            row[dst] += q * row[src]
        for row in V:
            row[dst] += q * row[src]
        Vi[src] = [x - q * y for x, y in zip(Vi[src], Vi[dst])]

    for t in range(min(m, n)):
        entries = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // A[t][t]))
                    if A[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // A[t][t]))
                    if A[t][j]:
                        swap_cols(t, j)
                        done = False
            if not done:
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % A[t][t]),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
    return A, U, V, Vi


def smith_normal_form(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Returns (S, U, V) with S = U M V diagonal, d1 | d2 | ..., all >= 0."""
    S, U, V, _ = _smith(M)
    return S, U, V


def invariant_factors(M: Sequence[Sequence[int]]) -> list[int]:
    if not M or not M[0]:
        return []
    S = _smith(M)[0]
    return [S[i][i] for i in range(min(len(S), len(S[0]))) if S[i][i]]


# -- lattices ---------------------------------------------------------------

@dataclass(frozen=True)
class IntLattice:
    """Subgroup of Z^n, stored by its row-HNF basis (so equality is syntactic)."""

    ambient_rank: int
    basis: tuple[tuple[int, ...], ...]

    @classmethod
    def from_rows(cls, n: int, rows: Sequence[Sequence[int]]) -> "IntLattice":
        rows = [list(r) for r in rows]
        for r in rows:
            if len(r) != n:
                raise InputError(f"vector {r} does not live in Z^{n}")
        if not rows:
            return cls(n, ())
        H, _ = hermite_normal_form(rows)
        return cls(n, tuple(tuple(r) for r in H if any(r)))

    @classmethod
    def full(cls, n: int) -> "IntLattice":
        return cls(n, tuple(tuple(r) for r in identity(n)))

    @property
    def rank(self) -> int:
        return len(self.basis)

    def rows(self) -> Matrix:
        return [list(r) for r in self.basis]

    def coordinates(self, v: Sequence[int]) -> Optional[list[int]]:
        """Integer coordinates of v in this basis, or None if v is not in the lattice."""
        x = solve_left(self.basis, v)
        return None if x is None else _as_int_vector(x)

    def __contains__(self, v) -> bool:
        return self.coordinates(v) is not None

    def is_pure(self) -> bool:
        return all(d == 1 for d in invariant_factors(self.rows()))


@dataclass(frozen=True)
class TupleZ:
    ambient_rank: int
    vectors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        vecs = tuple(tuple(int(x) for x in v) for v in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        for v in vecs:
            if len(v) != self.ambient_rank:
                raise InputError(f"vector {v} does not live in Z^{self.ambient_rank}")

    def __len__(self):
        return len(self.vectors)


@dataclass(frozen=True)
class LatticeIso:
    """Isomorphism between lattices: images of the source basis rows."""

    source: IntLattice
    target: IntLattice
    images: tuple[tuple[int, ...], ...]

    def apply(self, v: Sequence[int]) -> list[int]:
        x = self.source.coordinates(v)
        if x is None:
            raise DomainError(f"{list(v)} is not in the source lattice")
        return vecmat(x, self.images) if self.images else [0] * self.target.ambient_rank


def pure_closure(t: TupleZ) -> IntLattice:
    """Smallest pure subgroup of Z^n containing the tuple (its Q-saturation)."""
    n = t.ambient_rank
    rows = [list(v) for v in t.vectors if any(v)]
    if not rows:
        return IntLattice(n, ())
    S, _, _, Vi = _smith(rows)
    r = sum(1 for i in range(min(len(S), n)) if S[i][i])
    return IntLattice.from_rows(n, Vi[:r])


def _unimodular_stack(rows: Matrix) -> bool:
    return len(rows) == len(rows[0]) and abs(determinant(rows)) == 1


def direct_complement(L: IntLattice) -> IntLattice:
    """A lattice K with Z^n = L (+) K.

    Coordinate vectors are tried lexicographically least first (e_n, ...,
    e_1), keeping the partial stack pure; if that stalls, the complement
    comes from the Smith transform.
    """
    n = L.ambient_rank
    if L.rank == 0:
        return IntLattice.full(n)
    factors = invariant_factors(L.rows())
    for i, d in enumerate(factors):
        if d != 1:
            raise DomainError(f"lattice is not pure: invariant factor #{i + 1} is {d}")
    chosen: Matrix = []
    current = L.rows()
    for i in reversed(range(n)):
        if len(current) == n:
            break
        e = [int(j == i) for j in range(n)]
        trial = current + [e]
        if rank(trial) == len(trial) and all(d == 1 for d in invariant_factors(trial)):
            current = trial
            chosen.append(e)
    if len(current) < n:
        _, _, _, Vi = _smith(L.rows())
        chosen = Vi[L.rank:]
    K = IntLattice.from_rows(n, chosen)
    assert _unimodular_stack(L.rows() + K.rows())
    return K


def same_universal_type(b: TupleZ, c: TupleZ) -> Optional[LatticeIso]:
    """Isomorphism pure_closure(b) -> pure_closure(c) sending b to c, if any.

    Such an isomorphism exists exactly when b and c satisfy the same universal
    formulas in their ambient free abelian groups.
    """
    if len(b) != len(c):
        raise DomainError("tuples must have the same length")
    P, Q = pure_closure(b), pure_closure(c)
    if P.rank != Q.rank:
        return None
    r = P.rank
    if r == 0:
        return LatticeIso(P, Q, ())
    X = [P.coordinates(v) for v in b.vectors]
    Y = [Q.coordinates(v) for v in c.vectors]
    # choose r independent rows of X, solve X_I A = Y_I, then check all rows
    _, I = _rref(transpose(X))
    XI = [X[i] for i in I]
    A = []
    for col in range(r):
        rhs = [Y[i][col] for i in I]
        # XI * a = rhs  <=>  a^T XI^T = rhs^T
        sol = solve_left(transpose(XI), rhs)
        if sol is None:
            return None
        A.append(sol)
    A = transpose(A)  # r x r, Fractions
    for x, y in zip(X, Y):
        if [sum(xi * A[i][j] for i, xi in enumerate(x)) for j in range(r)] != y:
            return None
    if any(q.denominator != 1 for row in A for q in row):
        return None
    A = [[int(q) for q in row] for row in A]
    if abs(determinant(A)) != 1:
        return None
    images = matmul(A, Q.rows())
    return LatticeIso(P, Q, tuple(tuple(r_) for r_ in images))


def _iso_matrix(iso: LatticeIso) -> Matrix:
    # A with images = A * Q
    return [iso.target.coordinates(v) for v in iso.images]


def _require_iso(b: TupleZ, c: TupleZ) -> LatticeIso:
    iso = same_universal_type(b, c)
    if iso is None:
        raise DomainError("tuples have different universal types (same_universal_type failed)")
    return iso


@dataclass(frozen=True)
class LatticeCocone:
    rank: int
    g1: Matrix
    g2: Matrix


def amalgamate_tuples(b: TupleZ, c: TupleZ) -> LatticeCocone:
    """Strong universal amalgam of Z^m1 and Z^m2 identifying b with c.

    Z^m1 = B x Z1 and Z^m2 = C x Z2 with C ~ B; the amalgam is Z1 x B x Z2.
    """
    iso = _require_iso(b, c)
    m1, m2, r = b.ambient_rank, c.ambient_rank, iso.source.rank
    N = m1 + m2 - r
    K1, K2 = direct_complement(iso.source), direct_complement(iso.target)
    W1inv = inverse_unimodular(iso.source.rows() + K1.rows())
    W2inv = inverse_unimodular(iso.target.rows() + K2.rows())
    Ainv = inverse_unimodular(_iso_matrix(iso)) if r else []
    # row-vector maps: v -> v W^-1 E
    E1 = zeros(m1, N)
    for i in range(m1):
        E1[i][i] = 1
    F2 = zeros(m2, N)
    for i in range(r):
        for j in range(r):
            F2[i][j] = Ainv[i][j]
    for i in range(r, m2):
        F2[i][m1 + i - r] = 1
    G1 = transpose(matmul(W1inv, E1), N) if m1 else zeros(N, 0)
    G2 = transpose(matmul(W2inv, F2), N) if m2 else zeros(N, 0)
    return LatticeCocone(N, G1, G2)


def pushout_torsionfree(f1: Sequence[Sequence[int]], f2: Sequence[Sequence[int]],
                        c_rank: Optional[int] = None) -> LatticeCocone:
    """Torsion-free pushout of injective maps f1: Z^c -> Z^a, f2: Z^c -> Z^b.

    The target is the image of Z^a (+) Z^b in the rational pushout, i.e. the
    quotient by the saturation of {(f1 x, -f2 x)}.
    """
    a, b = len(f1), len(f2)
    c = c_rank if c_rank is not None else (len(f1[0]) if a else (len(f2[0]) if b else 0))
    for name, f in (("f1", f1), ("f2", f2)):
        if any(len(row) != c for row in f):
            raise InputError(f"{name} must have {c} columns")
        if c and rank(f) != c:
            raise DomainError(f"{name} is not injective")
    rel = [[f1[i][k] for i in range(a)] + [-f2[i][k] for i in range(b)] for k in range(c)]
    S = pure_closure(TupleZ(a + b, tuple(tuple(r_) for r_ in rel)))
    K = direct_complement(S)
    d = K.rank
    Winv = inverse_unimodular(S.rows() + K.rows()) if a + b else []
    s = S.rank
    G1 = [[Winv[j][s + i] for j in range(a)] for i in range(d)]
    G2 = [[Winv[a + j][s + i] for j in range(b)] for i in range(d)]
    return LatticeCocone(d, G1, G2)


def extend_to_automorphism(b: TupleZ, c: TupleZ) -> Matrix:
    """Unimodular n x n matrix M with b_i M = c_i.

    Unlike the embedding matrices above, this one acts on row vectors from
    the right, so b = (2,0), c = (2,2) gives [[1,1],[0,1]].
    """
    if b.ambient_rank != c.ambient_rank:
        raise DomainError("tuples must live in the same Z^n")
    iso = _require_iso(b, c)
    K1, K2 = direct_complement(iso.source), direct_complement(iso.target)
    W1inv = inverse_unimodular(iso.source.rows() + K1.rows())
    target_rows = [list(v) for v in iso.images] + K2.rows()
    return matmul(W1inv, target_rows)


def is_pure_embedding(G: Sequence[Sequence[int]]) -> bool:
    """Columns of G are independent and span a pure sublattice."""
    cols = transpose(G)
    if not cols:
        return True
    return rank(cols) == len(cols) and all(d == 1 for d in invariant_factors(cols))
