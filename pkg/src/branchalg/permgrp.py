"""Finite quotients of self-similar groups acting on a tree level.

Vertices of ``X^n`` are indexed lexicographically with letter 1 smallest and
the first letter most significant, so ``(x_1..x_n) -> sum (x_i - 1) q^(n-i)``.
A permutation is a numpy array ``p`` with ``p[i] = i^g``; under the right
action ``i^(gh) = h[g[i]]``, i.e. ``compose(g, h) = h[g]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, ResourceLimitError
from .exact import is_prime
from .selfsim import WreathRecursion, free_reduce

__all__ = [
    "DEFAULT_DEGREE_CAP",
    "LevelPermutation",
    "PermGroup",
    "vertex_index",
    "index_vertex",
    "generator_permutations",
    "level_permutation",
    "group_order_at_level",
    "element_order_at_level",
    "is_level_transitive",
    "group_hausdorff_sequence",
    "exhaustive_order",
]

DEFAULT_DEGREE_CAP = 6561
_MEMORY_CAP = 1 << 30  # bytes for explicit transversals


def vertex_index(v: Sequence[int], q: int) -> int:
    i = 0
    for x in v:
        i = i * q + (x - 1)
    return i


def index_vertex(i: int, q: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        i, r = divmod(i, q)
        out.append(r + 1)
    return tuple(reversed(out))


def _dtype(degree: int):
    return np.int16 if degree <= np.iinfo(np.int16).max else np.int32


@lru_cache(maxsize=256)
def _gen_perms(rec: WreathRecursion, n: int) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Level-``n`` permutations of every generator and of its inverse."""
    q = rec.q
    dt = _dtype(q**n)
    if n == 0:
        one = np.zeros(1, dtype=dt)
        return tuple(one for _ in rec.names), tuple(one for _ in rec.names)
    lower_f, lower_b = _gen_perms(rec, n - 1)
    block = q ** (n - 1)
    fwd = []
    for i in range(rec.ngens):
        p = np.empty(q**n, dtype=dt)
        for x in range(1, q + 1):
            y = rec.perms[i][x - 1]
            sub = _word_perm(lower_f, lower_b, rec.sections[i][x - 1], block)
            p[(x - 1) * block : x * block] = (y - 1) * block + sub
        p.setflags(write=False)
        fwd.append(p)
    bwd = []
    for p in fwd:
        inv = np.empty_like(p)
        inv[p] = np.arange(len(p), dtype=p.dtype)
        inv.setflags(write=False)
        bwd.append(inv)
    return tuple(fwd), tuple(bwd)


def _word_perm(fwd, bwd, w: Sequence[int], degree: int) -> np.ndarray:
    p = np.arange(degree, dtype=_dtype(degree))
    for s in w:
        p = (fwd[s - 1] if s > 0 else bwd[-s - 1])[p]
    return p


def generator_permutations(rec: WreathRecursion, n: int) -> list[np.ndarray]:
    """Read-only level-``n`` permutations of the generators."""
    if n < 0:
        raise InvalidArgument("level must be nonnegative")
    return list(_gen_perms(rec, n)[0])


@dataclass(frozen=True)
class LevelPermutation:
    level: int
    q: int
    mapping: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mapping)
        if m.shape != (self.q**self.level,):
            raise InvalidArgument("mapping length must be q^level")
        if not np.array_equal(np.sort(m), np.arange(len(m))):
            raise InvalidArgument("mapping is not a bijection")

    @property
    def degree(self) -> int:
        return len(self.mapping)

    def __mul__(self, other: "LevelPermutation") -> "LevelPermutation":
        """``self * other`` acts as ``self`` first, then ``other``."""
        if (self.level, self.q) != (other.level, other.q):
            raise InvalidArgument("permutations live on different levels")
        return LevelPermutation(self.level, self.q, other.mapping[self.mapping])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LevelPermutation)
            and (self.level, self.q) == (other.level, other.q)
            and np.array_equal(self.mapping, other.mapping)
        )

    def __hash__(self) -> int:
        return hash((self.level, self.q, self.mapping.tobytes()))

    def image(self, v: Sequence[int]) -> tuple[int, ...]:
        return index_vertex(int(self.mapping[vertex_index(v, self.q)]), self.q, self.level)

    def cycles(self) -> list[tuple[int, ...]]:
        seen = np.zeros(self.degree, dtype=bool)
        out = []
        for s in range(self.degree):
            if seen[s]:
                continue
            cyc, x = [], s
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = int(self.mapping[x])
            out.append(tuple(cyc))
        return out

    def order(self) -> int:
        return reduce(math.lcm, (len(c) for c in self.cycles()), 1)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.mapping, np.arange(self.degree)))


def level_permutation(rec: WreathRecursion, w: Sequence[int], n: int) -> LevelPermutation:
    if n < 0:
        raise InvalidArgument("level must be nonnegative")
    fwd, bwd = _gen_perms(rec, n)
    w = free_reduce(rec, w)
    return LevelPermutation(n, rec.q, _word_perm(fwd, bwd, w, rec.q**n))


def element_order_at_level(rec: WreathRecursion, w: Sequence[int], n: int) -> int:
    return level_permutation(rec, w, n).order()


def _orbit(perms: Sequence[np.ndarray], degree: int, start: int = 0) -> np.ndarray:
    seen = np.zeros(degree, dtype=bool)
    seen[start] = True
    frontier = np.array([start])
    while frontier.size:
        imgs = np.unique(np.concatenate([p[frontier] for p in perms])) if perms else frontier[:0]
        new = imgs[~seen[imgs]]
        seen[new] = True
        frontier = new
    return seen


def is_level_transitive(rec: WreathRecursion, n: int) -> bool:
    """True iff the orbit of ``1^n`` is all of ``X^n``."""
    if n < 0:
        raise InvalidArgument("level must be nonnegative")
    return bool(_orbit(generator_permutations(rec, n), rec.q**n).all())


# -- Schreier-Sims ------------------------------------------------------------------


class _Level:
    __slots__ = ("point", "strong", "orbit", "reps", "inv_reps", "checked")

    def __init__(self, point: int, degree: int) -> None:
        self.point = point
        self.strong: list[np.ndarray] = []
        ident = np.arange(degree, dtype=_dtype(degree))
        self.orbit: dict[int, int] = {point: 0}  # point -> row in reps
        self.reps: list[np.ndarray] = [ident]
        self.inv_reps: list[np.ndarray] = [ident]
        self.checked: set[tuple[int, int]] = set()

    def add_strong(self, g: np.ndarray) -> None:
        self.strong.append(g)
        # extend the orbit; existing representatives stay untouched
        todo = list(self.orbit)
        gens = self.strong
        k = 0
        while k < len(todo):
            beta = todo[k]
            k += 1
            u = self.reps[self.orbit[beta]]
            for s in gens:
                gamma = int(s[beta])
                if gamma not in self.orbit:
                    v = s[u]
                    inv = np.empty_like(v)
                    inv[v] = np.arange(len(v), dtype=v.dtype)
                    self.orbit[gamma] = len(self.reps)
                    self.reps.append(v)
                    self.inv_reps.append(inv)
                    todo.append(gamma)


class PermGroup:
    """Base and strong generating set, built deterministically.

    Base points are chosen greedily as the smallest point moved by the
    element that needs a new level. Already verified Schreier generators are
    remembered per level, so each (orbit point, strong generator) pair is
    sifted at most once.
    """

    def __init__(self, gens: Iterable[np.ndarray], degree: int, *, memory_cap: int = _MEMORY_CAP) -> None:
        self.degree = degree
        self.memory_cap = memory_cap
        self._ident = np.arange(degree, dtype=_dtype(degree))
        self.levels: list[_Level] = []
        self.gens = [np.asarray(g, dtype=_dtype(degree)) for g in gens]
        for g in self.gens:
            if g.shape != (degree,):
                raise InvalidArgument("generator has the wrong degree")
        self._build()

    @property
    def base(self) -> list[int]:
        return [lv.point for lv in self.levels]

    def _is_id(self, g: np.ndarray) -> bool:
        return bool(np.array_equal(g, self._ident))

    def _new_level(self, g: np.ndarray) -> None:
        moved = np.nonzero(g != self._ident)[0]
        self.levels.append(_Level(int(moved[0]), self.degree))

    def _guard(self) -> None:
        rows = sum(len(lv.reps) for lv in self.levels)
        need = 2 * rows * self.degree * self._ident.itemsize
        if need > self.memory_cap:
            raise ResourceLimitError(
                f"transversals need about {need >> 20} MiB, above the {self.memory_cap >> 20} MiB cap"
            )

    def sift(self, g: np.ndarray, start: int = 0) -> tuple[np.ndarray, int]:
        h = g
        for j in range(start, len(self.levels)):
            lv = self.levels[j]
            row = lv.orbit.get(int(h[lv.point]))
            if row is None:
                return h, j
            h = lv.inv_reps[row][h]
        return h, len(self.levels)

    def _add(self, y: np.ndarray, lo: int, hi: int) -> None:
        if hi == len(self.levels):
            self._new_level(y)
        for l in range(lo, hi + 1):
            self.levels[l].add_strong(y)
        self._guard()

    def _build(self) -> None:
        for g in self.gens:
            if self._is_id(g):
                continue
            if all(int(g[lv.point]) == lv.point for lv in self.levels):
                self._new_level(g)
            for lv in self.levels:
                lv.add_strong(g)
                if int(g[lv.point]) != lv.point:
                    break
        self._guard()
        i = len(self.levels) - 1
        while i >= 0:
            lv = self.levels[i]
            restart = False
            for beta, row in list(lv.orbit.items()):
                u = lv.reps[row]
                for si, s in enumerate(lv.strong):
                    if (beta, si) in lv.checked:
                        continue
                    gamma = int(s[beta])
                    h = lv.inv_reps[lv.orbit[gamma]][s[u]]
                    if not self._is_id(h):
                        y, j = self.sift(h, i + 1)
                        if j < len(self.levels) or not self._is_id(y):
                            self._add(y, i + 1, j)
                            i = j
                            restart = True
                            break
                    lv.checked.add((beta, si))
                if restart:
                    break
            if not restart:
                i -= 1

    def order(self) -> int:
        return math.prod(len(lv.orbit) for lv in self.levels)

    def contains(self, g: np.ndarray) -> bool:
        y, j = self.sift(np.asarray(g, dtype=self._ident.dtype))
        return j == len(self.levels) and self._is_id(y)


def exhaustive_order(gens: Sequence[np.ndarray], degree: int, limit: int = 200_000) -> int:
    """Size of the closure of ``gens`` under composition, by brute force."""
    ident = np.arange(degree, dtype=_dtype(degree))
    seen = {ident.tobytes()}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = np.asarray(g, dtype=ident.dtype)[x]
                key = y.tobytes()
                if key not in seen:
                    seen.add(key)
                    nxt.append(y)
                    if len(seen) > limit:
                        raise ResourceLimitError(f"closure exceeds {limit} elements")
        frontier = nxt
    return len(seen)


# -- p-groups inside the iterated wreath product ------------------------------------


def _layer_vector(g: np.ndarray, p: int, j: int, n: int) -> np.ndarray:
    """For ``g`` trivial on level ``j-1``: its rotation amounts on level ``j``."""
    block = p ** (n - j)
    heads = g[:: block] // block  # image on level j of each level-j vertex
    return (heads % p - np.arange(p**j) % p) % p


def _in_wreath(perms: Sequence[np.ndarray], p: int, n: int) -> bool:
    """Every local permutation is a power of the standard p-cycle."""
    for g in perms:
        for j in range(1, n + 1):
            block = p ** (n - j)
            img = g[::block] // block  # action on level j
            parent = img // p
            shift = (img % p - np.arange(p**j) % p) % p
            # shifts constant within each sibling group, and parents consistent
            if not np.all(shift.reshape(-1, p) == shift.reshape(-1, p)[:, :1]):
                return False
            if not np.all(parent.reshape(-1, p) == parent.reshape(-1, p)[:, :1]):
                return False
    return True


def _pgroup_order(gens: Sequence[np.ndarray], p: int, n: int) -> int:
    """Order of a subgroup of the level-``n`` iterated wreath product of C_p.

    Elements are sifted along the series ``N_j`` = kernel of the action on
    level ``j-1``; consecutive quotients are elementary abelian, recorded
    as vectors over GF(p). The basis is closed under p-th powers and
    commutators, which makes it an induced polycyclic generating sequence.
    """
    degree = p**n
    ident = np.arange(degree, dtype=_dtype(degree))
    # per layer: list of (pivot, normalized vector, element) in echelon form
    layers: list[list[tuple[int, np.ndarray, np.ndarray]]] = [[] for _ in range(n + 1)]

    def power(g: np.ndarray, e: int) -> np.ndarray:
        r = ident
        for _ in range(e):
            r = g[r]
        return r

    def sift(g: np.ndarray) -> tuple[np.ndarray, int] | None:
        for j in range(1, n + 1):
            vec = _layer_vector(g, p, j, n)
            if not vec.any():
                continue
            for piv, bvec, b in layers[j]:
                c = int(vec[piv])
                if c:
                    # b has 1 at piv; multiply by b^(-c) = b^(p-c)
                    g = power(b, p - c)[g]
                    vec = (vec - c * bvec) % p
            if vec.any():
                return g, j
        return None

    def inverse(g: np.ndarray) -> np.ndarray:
        inv = np.empty_like(g)
        inv[g] = ident
        return inv

    basis: list[np.ndarray] = []
    queue = list(gens)
    while True:
        if not queue:
            # final consistency pass against the completed basis
            queue = [power(b, p) for b in basis]
            for i, g in enumerate(basis):
                ginv = inverse(g)
                for b in basis[:i]:
                    queue.append(b[g][inverse(b)][ginv])
            queue = [g for g in queue if sift(g) is not None]
            if not queue:
                break
        g = queue.pop()
        res = sift(np.asarray(g, dtype=ident.dtype))
        if res is None:
            continue
        g, j = res
        vec = _layer_vector(g, p, j, n)
        piv = int(np.nonzero(vec)[0][0])
        c = int(vec[piv])
        g = power(g, pow(c, -1, p))
        vec = _layer_vector(g, p, j, n)
        layers[j].append((piv, vec, g))
        inv = inverse(g)
        queue.append(power(g, p))
        for b in basis:
            queue.append(b[g][inverse(b)][inv])  # [g, b] = g^-1 b^-1 g b, right action
        basis.append(g)
    return p ** len(basis)


def group_order_at_level(
    rec: WreathRecursion, n: int, *, degree_cap: int = DEFAULT_DEGREE_CAP, method: str = "bsgs"
) -> int:
    """Exact order of the group induced on level ``n``.

    ``method`` is ``"bsgs"`` (Schreier-Sims, the default and the faster of
    the two on the zoo), ``"pgroup"`` (layered sifting, needs ``q`` prime and
    all local permutations powers of one q-cycle) or ``"auto"``, which uses
    layered sifting when it applies. The two are independent algorithms and
    the test suite checks they agree.
    """
    if n < 0:
        raise InvalidArgument("level must be nonnegative")
    degree = rec.q**n
    if degree > degree_cap:
        raise ResourceLimitError(f"degree {degree} exceeds the cap {degree_cap}")
    if n == 0:
        return 1
    gens = generator_permutations(rec, n)
    if method not in ("auto", "bsgs", "pgroup"):
        raise InvalidArgument(f"unknown method {method!r}")
    if method != "bsgs":
        ok = is_prime(rec.q) and _in_wreath(gens, rec.q, n)
        if ok:
            return _pgroup_order(gens, rec.q, n)
        if method == "pgroup":
            raise InvalidArgument("the level group is not inside the iterated wreath product of C_q")
    return PermGroup(gens, degree).order()


def group_hausdorff_sequence(rec: WreathRecursion, p: int, n_max: int, **kw) -> list[Fraction]:
    """``log_p #G_n * (p-1) / (p^n - 1)`` for ``n = 1..n_max``."""
    if not is_prime(p):
        raise InvalidArgument(f"p must be prime, got {p}")
    if rec.q != p:
        raise InvalidArgument(f"alphabet size {rec.q} differs from p={p}")
    out = []
    for n in range(1, n_max + 1):
        order = group_order_at_level(rec, n, **kw)
        e = _p_log(order, p)
        if e is None:
            raise InvalidArgument(f"order {order} at level {n} is not a power of {p}")
        out.append(Fraction(e * (p - 1), p**n - 1))
    return out


def _p_log(x: int, p: int) -> int | None:
    e = 0
    while x % p == 0:
        x //= p
        e += 1
    return e if x == 1 else None
