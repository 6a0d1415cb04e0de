"""Exact finite-group arithmetic on explicit multiplication tables.

Groups are immutable once constructed; elements are integers 0..order-1 and
subgroups are membership bitsets (python ints).  The canonical order of any
subgroup collection is (order, bitset value), which is the determinism
contract for everything downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .config import FULL_ASSOCIATIVITY_LIMIT, RANDOM_TRIPLE_COUNT, order_cap
from .errors import CapExceeded, NotNormal, OutOfRange, SpecError, WrongShape


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _table_dtype(order: int):
    return np.uint16 if order <= 0xFFFF else np.uint32


class FiniteGroup:
    """A finite group as an explicit Cayley table.

    Invariants verified at construction: associativity (exhaustive below the
    configured limit, randomized above), identity and inverse laws, and that
    the stored generators generate the whole group.
    """

    def __init__(
        self,
        table: np.ndarray | Sequence[Sequence[int]],
        generators: Sequence[int] | None = None,
        labels: Sequence[str] | None = None,
        name: str = "",
        _skip_checks: bool = False,
    ):
        table = np.asarray(table)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise WrongShape("multiplication table must be square")
        n = table.shape[0]
        self.order = n
        self.table = table.astype(_table_dtype(n), copy=True)
        self.table.setflags(write=False)
        self.name = name or f"group{n}"
        self.labels = list(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != n:
            raise WrongShape("labels length must equal group order")

        self.identity = self._find_identity()
        self.inv = self._build_inverses()
        self.primes = frozenset(_prime_factors(n)) if n > 1 else frozenset()

        if generators is None:
            generators = list(range(n))
        self.generators = [int(g) for g in generators]

        self._abelian: Optional[bool] = None
        self._subgroups: Optional[list[Subgroup]] = None
        self._power_maps: dict[int, np.ndarray] = {}
        self._product_of: Optional[tuple[FiniteGroup, FiniteGroup]] = None

        if not _skip_checks:
            self._check_associativity()
            self._check_generators()

    # -- construction-time checks ------------------------------------------

    def _find_identity(self) -> int:
        n = self.order
        idx = np.arange(n)
        for e in range(n):
            if np.array_equal(self.table[e], idx) and np.array_equal(self.table[:, e], idx):
                return e
        raise WrongShape("table has no two-sided identity")

    def _build_inverses(self) -> np.ndarray:
        n = self.order
        inv = np.full(n, -1, dtype=np.int64)
        rows, cols = np.nonzero(self.table == self.identity)
        for a, b in zip(rows, cols):
            if inv[a] == -1:
                inv[a] = b
        if np.any(inv < 0):
            raise WrongShape("table has an element without inverse")
        # two-sided check
        left = self.table[inv, np.arange(n)]
        right = self.table[np.arange(n), inv]
        if not (np.all(left == self.identity) and np.all(right == self.identity)):
            raise WrongShape("inverses are not two-sided")
        inv.setflags(write=False)
        return inv

    def _check_associativity(self) -> None:
        n = self.order
        t = self.table
        if n <= FULL_ASSOCIATIVITY_LIMIT:
            for c in range(n):
                lhs = t[t, c]          # (a*b)*c
                rhs = t[:, t[:, c]]    # a*(b*c)
                if not np.array_equal(lhs, rhs):
                    raise WrongShape(f"table is not associative (c={c})")
        else:
            rng = np.random.RandomState(0xA71A5)
            a = rng.randint(0, n, RANDOM_TRIPLE_COUNT)
            b = rng.randint(0, n, RANDOM_TRIPLE_COUNT)
            c = rng.randint(0, n, RANDOM_TRIPLE_COUNT)
            if not np.array_equal(t[t[a, b], c], t[a, t[b, c]]):
                raise WrongShape("table failed randomized associativity check")

    def _check_generators(self) -> None:
        closed = closure(self, self.generators)
        if closed.order != self.order:
            raise WrongShape("stored generators do not generate the group")

    # -- basic queries ------------------------------------------------------

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inverse(self, a: int) -> int:
        return int(self.inv[a])

    def is_abelian(self) -> bool:
        if self._abelian is None:
            self._abelian = bool(np.array_equal(self.table, self.table.T))
        return self._abelian

    def power_map(self, e: int) -> np.ndarray:
        """Vector of g^e for every element g."""
        if e not in self._power_maps:
            n = self.order
            out = np.full(n, self.identity, dtype=np.int64)
            base = np.arange(n)
            for _ in range(e):
                out = self.table[out, base].astype(np.int64)
            out.setflags(write=False)
            self._power_maps[e] = out
        return self._power_maps[e]

    def element_label(self, a: int) -> str:
        if self.labels is not None:
            return self.labels[a]
        return str(a)

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name}, order={self.order})"


@dataclass(frozen=True)
class Subgroup:
    """A subgroup of a FiniteGroup, identified by its membership bitset."""

    parent: FiniteGroup
    bits: int
    order: int

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subgroup)
            and self.parent is other.parent
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((id(self.parent), self.bits))

    def contains(self, a: int) -> bool:
        return bool((self.bits >> a) & 1)

    def indices(self) -> np.ndarray:
        mask = _bits_to_mask(self.bits, self.parent.order)
        return np.nonzero(mask)[0]

    def mask(self) -> np.ndarray:
        return _bits_to_mask(self.bits, self.parent.order)

    def is_full(self) -> bool:
        return self.order == self.parent.order

    def is_trivial(self) -> bool:
        return self.order == 1

    def __repr__(self) -> str:
        return f"Subgroup(order={self.order} of {self.parent.name})"


def _mask_to_bits(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")

def _bits_to_mask(bits: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def _subgroup_from_mask(G: FiniteGroup, mask: np.ndarray) -> Subgroup:
    return Subgroup(G, _mask_to_bits(mask), int(mask.sum()))


def subgroup_from_indices(G: FiniteGroup, indices: Iterable[int]) -> Subgroup:
    """Wrap an explicit member list as a Subgroup (verifies closure)."""
    mask = np.zeros(G.order, dtype=bool)
    for i in indices:
        mask[i] = True
    sub = _subgroup_from_mask(G, mask)
    verify_subgroup(sub)
    return sub


def verify_subgroup(H: Subgroup) -> None:
    """Raise WrongShape unless H contains the identity and is closed."""
    G = H.parent
    if not H.contains(G.identity):
        raise WrongShape("subgroup misses the identity")
    idx = H.indices()
    prods = G.table[np.ix_(idx, idx)]
    mask = H.mask()
    if not np.all(mask[prods]):
        raise WrongShape("subgroup is not closed under multiplication")
    if not np.all(mask[G.inv[idx]]):
        raise WrongShape("subgroup is not closed under inverses")


# -- elementary operations ---------------------------------------------------

def closure(G: FiniteGroup, seed: Iterable[int]) -> Subgroup:
    """Smallest subgroup of G containing the seed elements.

    An empty seed yields the trivial subgroup.  Deterministic BFS.
    """
    n = G.order
    mask = np.zeros(n, dtype=bool)
    mask[G.identity] = True
    frontier = []
    for s in seed:
        s = int(s)
        if s < 0 or s >= n:
            raise OutOfRange(f"seed element {s} outside group of order {n}")
        if not mask[s]:
            mask[s] = True
            frontier.append(s)
    while frontier:
        members = np.nonzero(mask)[0]
        new_mask = np.zeros(n, dtype=bool)
        f = np.asarray(frontier)
        new_mask[G.table[np.ix_(f, members)].ravel()] = True
        new_mask[G.table[np.ix_(members, f)].ravel()] = True
        new_mask[G.inv[f]] = True
        new_mask &= ~mask
        frontier = list(np.nonzero(new_mask)[0])
        mask |= new_mask
    return _subgroup_from_mask(G, mask)


def _derived_series_reaches_trivial(G: FiniteGroup, max_steps: int = 64) -> bool:
    current = full_subgroup(G)
    for _ in range(max_steps):
        if current.order == 1:
            return True
        nxt = _commutator_of(G, current)
        if nxt.order == current.order:
            return False
        current = nxt
    return False


def _commutator_of(G: FiniteGroup, H: Subgroup) -> Subgroup:
    idx = H.indices()
    a = np.repeat(idx, len(idx))
    b = np.tile(idx, len(idx))
    comms = G.table[G.table[a, b], G.inv[G.table[b, a]]]
    return closure(G, np.unique(comms))


def full_subgroup(G: FiniteGroup) -> Subgroup:
    mask = np.ones(G.order, dtype=bool)
    return _subgroup_from_mask(G, mask)


def trivial_subgroup(G: FiniteGroup) -> Subgroup:
    mask = np.zeros(G.order, dtype=bool)
    mask[G.identity] = True
    return _subgroup_from_mask(G, mask)


def _normalizes(G: FiniteGroup, in_H: np.ndarray, idx: np.ndarray, g: int) -> bool:
    conj = G.table[G.table[G.inv[g], idx], g]
    return bool(np.all(in_H[conj]))


def all_subgroups(G: FiniteGroup, cap: int | None = None) -> list[Subgroup]:
    """Every subgroup of G, sorted by (order, bitset).

    Bottom-up cyclic-extension BFS: each known subgroup H is extended by the
    normalizing elements g with g^q in H for a prime q dividing |G|.  That
    finds every subgroup of a soluble group (composition series argument);
    insoluble groups fall back to extension by arbitrary outside elements.
    """
    cap = order_cap() if cap is None else cap
    if G.order > cap:
        raise CapExceeded(f"group order {G.order} above cap {cap}")
    if G._subgroups is not None:
        return list(G._subgroups)

    if _derived_series_reaches_trivial(G):
        found = _subgroups_cyclic_extension(G)
    else:
        found = _subgroups_generic(G)

    result = sorted(found.values(), key=lambda s: (s.order, s.bits))
    G._subgroups = result
    return list(result)


def _subgroups_cyclic_extension(G: FiniteGroup) -> dict[int, Subgroup]:
    n = G.order
    primes = sorted(G.primes)
    pow_maps = {q: G.power_map(q) for q in primes}
    abelian = G.is_abelian()

    triv = trivial_subgroup(G)
    found: dict[int, Subgroup] = {triv.bits: triv}
    frontier = [triv]
    while frontier:
        nxt = []
        for H in frontier:
            in_H = H.mask()
            idx = H.indices()
            cand_q: dict[int, int] = {}
            for q in primes:
                hits = np.nonzero(in_H[pow_maps[q]] & ~in_H)[0]
                for g in hits:
                    cand_q.setdefault(int(g), q)
            covered = in_H.copy()
            for g in sorted(cand_q):
                if covered[g]:
                    continue
                if not abelian and not _normalizes(G, in_H, idx, g):
                    continue
                q = cand_q[g]
                K_mask = in_H.copy()
                x = g
                for _ in range(q - 1):
                    K_mask[G.table[x, idx]] = True
                    x = G.mul(x, g)
                covered |= K_mask
                K = _subgroup_from_mask(G, K_mask)
                if K.bits not in found:
                    found[K.bits] = K
                    nxt.append(K)
        frontier = nxt
    return found


def _subgroups_generic(G: FiniteGroup) -> dict[int, Subgroup]:
    triv = trivial_subgroup(G)
    found: dict[int, Subgroup] = {triv.bits: triv}
    queue = [triv]
    while queue:
        H = queue.pop()
        in_H = H.mask()
        for g in np.nonzero(~in_H)[0]:
            K = closure(G, list(H.indices()) + [int(g)])
            if K.bits not in found:
                found[K.bits] = K
                queue.append(K)
    return found


def maximal_subgroups(G: FiniteGroup) -> list[Subgroup]:
    subs = all_subgroups(G)
    proper = [s for s in subs if s.order < G.order]
    maximal = []
    for H in proper:
        if not any(
            K.order > H.order and K.order < G.order and (H.bits & K.bits) == H.bits
            for K in proper
        ):
            maximal.append(H)
    return maximal


def frattini(G: FiniteGroup) -> Subgroup:
    """Intersection of all maximal proper subgroups (trivial group maps to itself)."""
    if G.order == 1:
        return trivial_subgroup(G)
    maxes = maximal_subgroups(G)
    if not maxes:
        return trivial_subgroup(G)
    bits = maxes[0].bits
    for H in maxes[1:]:
        bits &= H.bits
    return Subgroup(G, bits, bin(bits).count("1"))


def commutator_subgroup(G: FiniteGroup) -> Subgroup:
    if G.is_abelian():
        return trivial_subgroup(G)
    return _commutator_of(G, full_subgroup(G))


def center(G: FiniteGroup) -> Subgroup:
    mask = np.all(G.table == G.table.T, axis=1)
    return _subgroup_from_mask(G, mask)


def centralizer(G: FiniteGroup, H: Subgroup) -> Subgroup:
    mask = np.ones(G.order, dtype=bool)
    for h in H.indices():
        mask &= G.table[:, h] == G.table[h, :]
    return _subgroup_from_mask(G, mask)


def normalizer(G: FiniteGroup, H: Subgroup) -> Subgroup:
    in_H = H.mask()
    idx = H.indices()
    mask = np.ones(G.order, dtype=bool)
    for h in idx:
        conj = G.table[G.table[G.inv, h], np.arange(G.order)]
        mask &= in_H[conj]
    return _subgroup_from_mask(G, mask)


def conjugate(G: FiniteGroup, H: Subgroup, g: int) -> Subgroup:
    """The conjugate subgroup H^g = g^-1 H g."""
    idx = H.indices()
    conj = G.table[G.table[G.inv[g], idx], g]
    mask = np.zeros(G.order, dtype=bool)
    mask[conj] = True
    return _subgroup_from_mask(G, mask)


def core(G: FiniteGroup, H: Subgroup) -> Subgroup:
    """Largest normal subgroup of G contained in H (intersection of conjugates)."""
    bits = H.bits
    for g in range(G.order):
        bits &= conjugate(G, H, g).bits
        if bits == 0:
            break
    return Subgroup(G, bits, bin(bits).count("1"))


def is_normal(G: FiniteGroup, H: Subgroup) -> bool:
    in_H = H.mask()
    idx = H.indices()
    return all(_normalizes(G, in_H, idx, g) for g in range(G.order))


def product_set(G: FiniteGroup, H: Subgroup, N: Subgroup) -> Subgroup:
    """The subgroup HN for N normal in G."""
    if not is_normal(G, N):
        raise NotNormal("product_set requires a normal second factor")
    hi = H.indices()
    ni = N.indices()
    mask = np.zeros(G.order, dtype=bool)
    mask[G.table[np.ix_(hi, ni)].ravel()] = True
    return _subgroup_from_mask(G, mask)


class Homomorphism:
    """A verified group homomorphism given by a per-element image array."""

    def __init__(self, source: FiniteGroup, target: FiniteGroup, mapping: Sequence[int]):
        self.source = source
        self.target = target
        arr = np.asarray(mapping, dtype=np.int64)
        if arr.shape != (source.order,):
            raise WrongShape("homomorphism map has wrong length")
        self.map = arr
        self.map.setflags(write=False)
        self._verify()
        image_count = len(np.unique(arr))
        self.surjective = image_count == target.order

    def _verify(self) -> None:
        s, t, m = self.source.table, self.target.table, self.map
        if not np.array_equal(m[s], t[m[:, None], m[None, :]]):
            raise WrongShape("map is not a homomorphism")

    def apply(self, a: int) -> int:
        return int(self.map[a])

    def image_subgroup(self, H: Subgroup) -> Subgroup:
        mask = np.zeros(self.target.order, dtype=bool)
        mask[self.map[H.indices()]] = True
        return _subgroup_from_mask(self.target, mask)

    def preimage_subgroup(self, H: Subgroup) -> Subgroup:
        in_H = H.mask()
        mask = in_H[self.map]
        return _subgroup_from_mask(self.source, mask)

    def kernel(self) -> Subgroup:
        mask = self.map == self.target.identity
        return _subgroup_from_mask(self.source, mask)

    def compose(self, inner: "Homomorphism") -> "Homomorphism":
        """self o inner (apply inner first)."""
        if inner.target is not self.source:
            raise WrongShape("composition endpoints do not match")
        return Homomorphism(inner.source, self.target, self.map[inner.map])


def quotient(G: FiniteGroup, N: Subgroup) -> tuple[FiniteGroup, Homomorphism]:
    """Quotient group G/N with canonical coset labeling, plus the projection.

    Cosets are labeled by their minimal element, sorted ascending.
    """
    if not is_normal(G, N):
        raise NotNormal("quotient requires a normal subgroup")
    n = G.order
    ni = N.indices()
    rep = np.full(n, -1, dtype=np.int64)
    for g in range(n):
        if rep[g] == -1:
            coset = G.table[g, ni]
            rep[coset] = int(coset.min())
    reps = np.unique(rep)
    index_of = {int(r): i for i, r in enumerate(reps)}
    q = len(reps)
    qtable = np.zeros((q, q), dtype=np.int64)
    for i, a in enumerate(reps):
        qtable[i] = [index_of[int(rep[G.table[a, b]])] for b in reps]
    labels = [f"{G.element_label(int(r))}N" for r in reps]
    proj_map = [index_of[int(rep[g])] for g in range(n)]
    gens = sorted({proj_map[g] for g in G.generators})
    Q = FiniteGroup(qtable, generators=gens, labels=labels, name=f"{G.name}/N{N.order}")
    proj = Homomorphism(G, Q, proj_map)
    return Q, proj


def direct_product(G1: FiniteGroup, G2: FiniteGroup, cap: int | None = None) -> FiniteGroup:
    """Direct product with element index i1*|G2| + i2 (row-major by left factor)."""
    cap = order_cap() if cap is None else cap
    n1, n2 = G1.order, G2.order
    if n1 * n2 > cap:
        raise CapExceeded(f"product order {n1 * n2} above cap {cap}")
    a = np.arange(n1 * n2)
    a1, a2 = a // n2, a % n2
    t = (
        G1.table[np.ix_(a1, a1)].astype(np.int64) * n2
        + G2.table[np.ix_(a2, a2)].astype(np.int64)
    )
    labels = None
    if n1 * n2 <= 4096:
        labels = [
            f"({G1.element_label(int(i1))},{G2.element_label(int(i2))})"
            for i1, i2 in zip(a1, a2)
        ]
    gens = [g * n2 + G2.identity for g in G1.generators]
    gens += [G1.identity * n2 + g for g in G2.generators]
    P = FiniteGroup(t, generators=gens, labels=labels, name=f"{G1.name}x{G2.name}")
    P._product_of = (G1, G2)
    return P


# -- Goursat ------------------------------------------------------------------

@dataclass
class GoursatQuintuple:
    """Subgroup of a direct product encoded by projections, kernels and the
    induced isomorphism of section quotients."""

    proj_left: Subgroup
    ker_left: Subgroup
    proj_right: Subgroup
    ker_right: Subgroup
    iso_witness: dict[int, int]  # coset rep in G1 -> coset rep in G2


def _coset_rep(G: FiniteGroup, K: Subgroup, a: int) -> int:
    return int(G.table[a, K.indices()].min())


def goursat(G1: FiniteGroup, G2: FiniteGroup, H: Subgroup) -> GoursatQuintuple:
    """Decompose a subgroup of G1 x G2 into its Goursat quintuple.

    The witness is verified: it is a well-defined bijective homomorphism of
    the two section quotients, and reconstructing H from the quintuple gives
    back exactly H.
    """
    P = H.parent
    if P._product_of is None or P._product_of[0] is not G1 or P._product_of[1] is not G2:
        raise WrongShape("goursat needs a subgroup of direct_product(G1, G2)")
    n2 = G2.order
    members = H.indices()
    left = members // n2
    right = members % n2

    pl_mask = np.zeros(G1.order, dtype=bool)
    pl_mask[left] = True
    proj_left = _subgroup_from_mask(G1, pl_mask)
    pr_mask = np.zeros(G2.order, dtype=bool)
    pr_mask[right] = True
    proj_right = _subgroup_from_mask(G2, pr_mask)

    kl_mask = np.zeros(G1.order, dtype=bool)
    kl_mask[left[right == G2.identity]] = True
    ker_left = _subgroup_from_mask(G1, kl_mask)
    kr_mask = np.zeros(G2.order, dtype=bool)
    kr_mask[right[left == G1.identity]] = True
    ker_right = _subgroup_from_mask(G2, kr_mask)

    iso: dict[int, int] = {}
    for a, b in zip(left, right):
        ra = _coset_rep(G1, ker_left, int(a))
        rb = _coset_rep(G2, ker_right, int(b))
        if ra in iso and iso[ra] != rb:
            raise WrongShape("goursat witness is not well defined")
        iso[ra] = rb

    quint = GoursatQuintuple(proj_left, ker_left, proj_right, ker_right, iso)
    _verify_goursat(G1, G2, H, quint)
    return quint


def _verify_goursat(
    G1: FiniteGroup, G2: FiniteGroup, H: Subgroup, q: GoursatQuintuple
) -> None:
    # kernels normal in projections, equal quotient orders
    for proj, ker, G in ((q.proj_left, q.ker_left, G1), (q.proj_right, q.ker_right, G2)):
        in_k = ker.mask()
        ki = ker.indices()
        for g in proj.indices():
            if not _normalizes(G, in_k, ki, int(g)):
                raise WrongShape("goursat kernel not normal in projection")
    if q.proj_left.order * q.ker_right.order != q.proj_right.order * q.ker_left.order:
        raise WrongShape("goursat quotients have different orders")
    if len(q.iso_witness) != q.proj_left.order // q.ker_left.order:
        raise WrongShape("goursat witness has wrong domain size")
    # witness is a bijection
    if len(set(q.iso_witness.values())) != len(q.iso_witness):
        raise WrongShape("goursat witness not injective")
    # witness is a homomorphism on coset reps
    reps = sorted(q.iso_witness)
    for a in reps:
        for b in reps:
            ab = _coset_rep(G1, q.ker_left, G1.mul(a, b))
            im = _coset_rep(G2, q.ker_right, G2.mul(q.iso_witness[a], q.iso_witness[b]))
            if q.iso_witness[ab] != im:
                raise WrongShape("goursat witness not a homomorphism")
    # round trip
    if goursat_reconstruct(G1, G2, H.parent, q).bits != H.bits:
        raise WrongShape("goursat round-trip failed")


def goursat_reconstruct(
    G1: FiniteGroup, G2: FiniteGroup, P: FiniteGroup, q: GoursatQuintuple
) -> Subgroup:
    """Rebuild the subgroup of G1 x G2 described by a quintuple."""
    n2 = G2.order
    mask = np.zeros(P.order, dtype=bool)
    for a in q.proj_left.indices():
        ra = _coset_rep(G1, q.ker_left, int(a))
        rb = q.iso_witness[ra]
        for b in G2.table[rb, q.ker_right.indices()]:
            mask[int(a) * n2 + int(b)] = True
    return _subgroup_from_mask(P, mask)


# -- standard groups ----------------------------------------------------------

def cyclic(n: int) -> FiniteGroup:
    a = np.arange(n)
    table = (a[:, None] + a[None, :]) % n
    return FiniteGroup(table, generators=[1 % n], labels=[str(i) for i in range(n)],
                       name=f"Z{n}")


def dihedral(n: int) -> FiniteGroup:
    """Dihedral group of order 2n: rotations r^j at 0..n-1, reflections s r^j at n..2n-1."""
    size = 2 * n
    table = np.zeros((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(size):
            ra, fa = a % n, a // n
            rb, fb = b % n, b // n
            # (s^fa r^ra)(s^fb r^rb) = s^(fa+fb) r^(((-1)^fb) ra + rb)
            f = (fa + fb) % 2
            r = (rb + (ra if fb == 0 else -ra)) % n
            table[a, b] = f * n + r
    labels = [f"r{j}" for j in range(n)] + [f"sr{j}" for j in range(n)]
    return FiniteGroup(table, generators=[1 % n, n], labels=labels, name=f"D{n}")


def quaternion8() -> FiniteGroup:
    """The quaternion group of order 8 on {1,-1,i,-i,j,-j,k,-k}."""
    names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]

    def mul(x: str, y: str) -> str:
        sx, bx = (x[0] == "-", x.lstrip("-"))
        sy, by = (y[0] == "-", y.lstrip("-"))
        rules = {
            ("1", "1"): "1", ("1", "i"): "i", ("1", "j"): "j", ("1", "k"): "k",
            ("i", "1"): "i", ("j", "1"): "j", ("k", "1"): "k",
            ("i", "i"): "-1", ("j", "j"): "-1", ("k", "k"): "-1",
            ("i", "j"): "k", ("j", "k"): "i", ("k", "i"): "j",
            ("j", "i"): "-k", ("k", "j"): "-i", ("i", "k"): "-j",
        }
        r = rules[(bx, by)]
        neg = (r[0] == "-") ^ sx ^ sy
        base = r.lstrip("-")
        if base == "1":
            return "-1" if neg else "1"
        return f"-{base}" if neg else base

    index = {nm: i for i, nm in enumerate(names)}
    table = [[index[mul(x, y)] for y in names] for x in names]
    return FiniteGroup(table, generators=[2, 4], labels=names, name="Q8")


def from_elements(
    elements: list, mul: Callable, generators_idx: Sequence[int] | None = None,
    labels: Sequence[str] | None = None, name: str = "",
) -> FiniteGroup:
    """Build a FiniteGroup from hashable element values and a multiplication callable."""
    index = {e: i for i, e in enumerate(elements)}
    n = len(elements)
    table = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            table[i, j] = index[mul(a, b)]
    return FiniteGroup(table, generators=generators_idx, labels=labels, name=name)


def generate_from(
    seed_elements: list, mul: Callable, identity, cap: int | None = None,
    label: Callable | None = None, name: str = "",
) -> FiniteGroup:
    """Generate the group spanned by seed elements under mul, deterministically.

    Elements are discovered by BFS from the identity with generators applied
    in the given order, which fixes the element indexing.
    """
    cap = order_cap() if cap is None else cap
    elements = [identity]
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in seed_elements:
                for y in (mul(x, g), mul(g, x)):
                    if y not in seen:
                        seen.add(y)
                        elements.append(y)
                        nxt.append(y)
                        if len(elements) > cap:
                            raise CapExceeded(
                                f"generated group exceeds cap {cap}"
                            )
        frontier = nxt
    labels = [label(e) for e in elements] if label else None
    gens_idx = [elements.index(g) for g in seed_elements]
    return from_elements(elements, mul, generators_idx=gens_idx, labels=labels, name=name)


# -- JSON group literals -------------------------------------------------------

GROUP_SCHEMA_VERSION = 1


def load_group_json(doc: dict | str) -> FiniteGroup:
    """Load a group literal: {"version":1, "kind":"cyclic"|"table"|"permutation"|"matrix", ...}.

    permutation generators use one-line image notation; matrix generators are
    integer matrices taken modulo the given modulus.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    errors = []
    if not isinstance(doc, dict):
        raise SpecError("group literal must be a JSON object", ["/"])
    if doc.get("version") != GROUP_SCHEMA_VERSION:
        errors.append("/version")
    kind = doc.get("kind")
    if kind not in ("cyclic", "table", "permutation", "matrix"):
        errors.append("/kind")
    if errors:
        raise SpecError("invalid group literal", errors)

    if kind == "cyclic":
        n = doc.get("n")
        if not isinstance(n, int) or n < 1:
            raise SpecError("cyclic group needs a positive integer n", ["/n"])
        if n > order_cap():
            raise CapExceeded(f"cyclic order {n} above cap {order_cap()}")
        return cyclic(n)

    if kind == "table":
        table = doc.get("mult")
        if not isinstance(table, list):
            raise SpecError("table group needs a mult table", ["/mult"])
        if len(table) > order_cap():
            raise CapExceeded("table order above cap")
        return FiniteGroup(table, labels=doc.get("labels"), name=doc.get("name", "table"))

    if kind == "permutation":
        gens = doc.get("generators")
        degree = doc.get("degree")
        if not isinstance(gens, list) or not gens:
            raise SpecError("permutation group needs generators", ["/generators"])
        if not isinstance(degree, int) or degree < 1:
            raise SpecError("permutation group needs a degree", ["/degree"])
        for i, g in enumerate(gens):
            if sorted(g) != list(range(degree)):
                raise SpecError("generator is not a permutation", [f"/generators/{i}"])
        id_perm = tuple(range(degree))
        seeds = [tuple(g) for g in gens]

        def pmul(a, b):  # apply a then b
            return tuple(b[a[i]] for i in range(degree))

        return generate_from(seeds, pmul, id_perm, label=lambda p: str(list(p)),
                             name=doc.get("name", f"perm{degree}"))

    # matrix kind
    gens = doc.get("generators")
    modulus = doc.get("modulus")
    if not isinstance(gens, list) or not gens:
        raise SpecError("matrix group needs generators", ["/generators"])
    if not isinstance(modulus, int) or modulus < 2:
        raise SpecError("matrix group needs a modulus >= 2", ["/modulus"])
    dim = len(gens[0])
    mats = []
    for i, g in enumerate(gens):
        m = np.asarray(g, dtype=np.int64) % modulus
        if m.shape != (dim, dim):
            raise SpecError("matrix generators must share a square shape",
                            [f"/generators/{i}"])
        mats.append(tuple(map(tuple, m)))
    ident = tuple(map(tuple, np.eye(dim, dtype=np.int64)))

    def mmul(a, b):
        prod = (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % modulus
        return tuple(map(tuple, prod))

    return generate_from(mats, mmul, ident, label=lambda m: str([list(r) for r in m]),
                         name=doc.get("name", f"mat{dim}mod{modulus}"))
