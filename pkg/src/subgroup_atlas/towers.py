"""Validated inverse systems (towers) of finite groups.

A tower is a list of levels G_1, ..., G_D with verified surjective
connecting homomorphisms G_{k+1} -> G_k.  Constructors for the built-in
families record the metadata the classifier consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import order_cap
from .errors import (
    CapExceeded,
    DepthMismatch,
    PrimeOverlap,
    RelationCheckFailed,
    SpecError,
    WrongShape,
)
from .groups import (
    FiniteGroup,
    Homomorphism,
    Subgroup,
    cyclic,
    direct_product,
    generate_from,
    load_group_json,
    subgroup_from_indices,
)

TOWER_SCHEMA_VERSION = 1

DEFAULT_DEPTHS = {
    "zp": 4,
    "zpn": 4,
    "dihedral2": 4,
    "heisenberg": 2,
    "wilson": 3,
    "pirim": 2,
}


@dataclass
class TowerFlags:
    abelian: bool = False
    nilpotent: bool = False
    virtually_zp: bool = False
    finitely_generated: bool = False
    center_trivial_expected: bool = False

    def as_dict(self) -> dict:
        return {
            "abelian": self.abelian,
            "nilpotent": self.nilpotent,
            "virtuallyZp": self.virtually_zp,
            "finitelyGenerated": self.finitely_generated,
            "centerTrivialExpected": self.center_trivial_expected,
        }


@dataclass
class TowerMeta:
    family_name: str
    primes: frozenset[int]
    flags: TowerFlags
    depth: int
    dim_estimate: Optional[int] = None
    extra: dict = field(default_factory=dict)


@dataclass
class Tower:
    """Levels plus connecting maps; maps[k] sends levels[k+1] onto levels[k]."""

    levels: list[FiniteGroup]
    maps: list[Homomorphism]
    meta: TowerMeta
    factors: Optional[list["Tower"]] = None  # set for coprime product towers

    @property
    def depth(self) -> int:
        return self.meta.depth

    def level(self, k: int) -> FiniteGroup:
        """1-based level access (explicit towers only)."""
        if not self.levels:
            raise CapExceeded(
                "tower is structural; explicit level groups were not materialized"
            )
        return self.levels[k - 1]

    def map_down(self, k: int) -> Homomorphism:
        """The connecting map level k+1 -> level k (1-based)."""
        return self.maps[k - 1]

    def composite_map(self, upper: int, lower: int) -> Homomorphism:
        """Composite connecting map from level `upper` down to level `lower`."""
        if not (1 <= lower <= upper <= self.depth):
            raise WrongShape("bad composite endpoints")
        if lower == upper:
            ident = Homomorphism(
                self.level(upper), self.level(upper), np.arange(self.level(upper).order)
            )
            return ident
        hom = self.map_down(lower)
        for k in range(lower + 1, upper):
            hom = hom.compose(self.map_down(k))
        return hom


@dataclass
class Violation:
    kind: str
    level: int
    detail: str = ""


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_map_is_hom(hom: Homomorphism) -> bool:
    s, t, m = hom.source.table, hom.target.table, hom.map
    return bool(np.array_equal(m[s], t[m[:, None], m[None, :]]))


def validate(t: Tower) -> ValidationReport:
    """Re-check all tower invariants; the report lists any violation."""
    out: list[Violation] = []
    if t.factors is not None:
        for f in t.factors:
            sub = validate(f)
            out.extend(sub.violations)
        primes_union = frozenset().union(*(f.meta.primes for f in t.factors))
        if t.meta.primes != primes_union:
            out.append(Violation("PrimeMetaMismatch", 0))
        return ValidationReport(out)

    for k in range(1, t.depth):
        hom = t.map_down(k)
        if hom.source is not t.level(k + 1) or hom.target is not t.level(k):
            out.append(Violation("MapEndpointMismatch", k))
            continue
        if not _check_map_is_hom(hom):
            out.append(Violation("HomomorphismLawViolation", k))
        if len(np.unique(hom.map)) != hom.target.order:
            out.append(Violation("SurjectivityViolation", k))
        if t.level(k + 1).order % t.level(k).order != 0:
            out.append(Violation("OrderDivisibilityViolation", k))
    # composite maps stay surjective homomorphisms when levels are skipped
    for upper in range(3, t.depth + 1):
        m = t.map_down(upper - 2).map[t.map_down(upper - 1).map]
        if len(np.unique(m)) != t.level(upper - 2).order:
            out.append(Violation("CompositeSurjectivityViolation", upper))
        src, tgt = t.level(upper).table, t.level(upper - 2).table
        if not np.array_equal(m[src], tgt[m[:, None], m[None, :]]):
            out.append(Violation("CompositeHomomorphismViolation", upper))
    union = frozenset().union(*(g.primes for g in t.levels))
    if t.meta.primes != union:
        out.append(Violation("PrimeMetaMismatch", 0))
    if t.meta.dim_estimate is not None and len(t.meta.primes) == 1:
        p = next(iter(t.meta.primes))
        exps = [round(np.emath.logn(p, g.order)) for g in t.levels]
        stab = t.meta.extra.get("dim_stabilization_level", 1)
        for k in range(max(2, stab + 1), t.depth + 1):
            if exps[k - 1] - exps[k - 2] != t.meta.dim_estimate:
                out.append(Violation("DimEstimateViolation", k))
    return ValidationReport(out)


def truncate(t: Tower, depth: int) -> Tower:
    """Tower restricted to its first `depth` levels (shares level objects)."""
    if not (1 <= depth <= t.depth):
        raise WrongShape(f"cannot truncate depth-{t.depth} tower to {depth}")
    factors = None
    if t.factors is not None:
        factors = [truncate(f, depth) for f in t.factors]
    if t.levels:
        primes = frozenset().union(*(g.primes for g in t.levels[:depth]))
    else:
        primes = frozenset().union(*(f.meta.primes for f in factors))
    meta = TowerMeta(
        family_name=t.meta.family_name,
        primes=primes,
        flags=t.meta.flags,
        depth=depth,
        dim_estimate=t.meta.dim_estimate,
        extra=dict(t.meta.extra),
    )
    for key in ("z_witness", "x_gens", "t_orders"):
        if key in meta.extra:
            meta.extra[key] = meta.extra[key][:depth]
    return Tower(t.levels[:depth], t.maps[: depth - 1], meta, factors=factors)


# -- families ------------------------------------------------------------------

def make_zp(p: int, depth: int, cap: int | None = None) -> Tower:
    """Levels Z/p^k with reduction maps; the p-adic procyclic family."""
    cap = order_cap() if cap is None else cap
    if p**depth > cap:
        raise CapExceeded(f"p^depth = {p**depth} above cap {cap}")
    levels = [cyclic(p**k) for k in range(1, depth + 1)]
    maps = [
        Homomorphism(levels[k], levels[k - 1], np.arange(p ** (k + 1)) % p**k)
        for k in range(1, depth)
    ]
    meta = TowerMeta(
        family_name="zp",
        primes=frozenset([p]),
        flags=TowerFlags(
            abelian=True, nilpotent=True, virtually_zp=True, finitely_generated=True
        ),
        depth=depth,
        dim_estimate=1,
        extra={"p": p, "z_witness": [list(range(p**k)) for k in range(1, depth + 1)]},
    )
    return Tower(levels, maps, meta)


def _abelian_power_group(p: int, k: int, n: int) -> FiniteGroup:
    """(Z/p^k)^n via iterated direct products (row-major index layout)."""
    G = cyclic(p**k)
    for _ in range(n - 1):
        G = direct_product(G, cyclic(p**k))
    G.name = f"(Z{p**k})^{n}"
    return G


def _tuple_of_index(idx: int, base: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        out.append(idx % base)
        idx //= base
    return tuple(reversed(out))


def _index_of_tuple(tup: Sequence[int], base: int) -> int:
    idx = 0
    for c in tup:
        idx = idx * base + int(c)
    return idx


def make_zpn(p: int, n: int, depth: int, cap: int | None = None) -> Tower:
    """Levels (Z/p^k)^n with componentwise reduction maps."""
    cap = order_cap() if cap is None else cap
    if p ** (n * depth) > cap:
        raise CapExceeded(f"p^(n*depth) = {p**(n*depth)} above cap {cap}")
    levels = [_abelian_power_group(p, k, n) for k in range(1, depth + 1)]
    maps = []
    for k in range(1, depth):
        hi, lo = p ** (k + 1), p**k
        mapping = [
            _index_of_tuple([c % lo for c in _tuple_of_index(i, hi, n)], lo)
            for i in range(hi**n)
        ]
        maps.append(Homomorphism(levels[k], levels[k - 1], mapping))
    meta = TowerMeta(
        family_name="zpn",
        primes=frozenset([p]),
        flags=TowerFlags(
            abelian=True,
            nilpotent=True,
            virtually_zp=(n == 1),
            finitely_generated=True,
        ),
        depth=depth,
        dim_estimate=n,
        extra={"p": p, "n": n},
    )
    if n == 1:
        meta.extra["z_witness"] = [list(range(p**k)) for k in range(1, depth + 1)]
    return Tower(levels, maps, meta)


def _heisenberg_group(p: int, k: int) -> FiniteGroup:
    """Upper unitriangular 3x3 matrices over Z/p^k; entries (a, b, c) with
    c the corner, multiplied by (a,b,c)(a',b',c') = (a+a', b+b', c+c'+a*b')."""
    m = p**k
    n = m**3

    def decode(i: int) -> tuple[int, int, int]:
        return (i // (m * m), (i // m) % m, i % m)

    def encode(a: int, b: int, c: int) -> int:
        return a * m * m + b * m + c

    table = np.zeros((n, n), dtype=np.int64)
    idx = np.arange(n)
    A, B, C = idx // (m * m), (idx // m) % m, idx % m
    for i in range(n):
        a, b, c = decode(i)
        table[i] = ((a + A) % m) * m * m + ((b + B) % m) * m + ((c + C + a * B) % m)
    gens = [encode(1, 0, 0), encode(0, 1, 0)]
    labels = [f"({a},{b},{c})" for a, b, c in (decode(i) for i in range(n))] if n <= 4096 else None
    return FiniteGroup(table, generators=gens, labels=labels, name=f"Heis(Z{m})")


def make_heisenberg(p: int, depth: int, cap: int | None = None) -> Tower:
    """Levels of upper unitriangular 3x3 matrices over Z/p^k."""
    cap = order_cap() if cap is None else cap
    if p ** (3 * depth) > cap:
        raise CapExceeded(f"p^(3*depth) = {p**(3*depth)} above cap {cap}")
    levels = [_heisenberg_group(p, k) for k in range(1, depth + 1)]
    maps = []
    for k in range(1, depth):
        hi, lo = p ** (k + 1), p**k
        idx = np.arange(hi**3)
        a, b, c = idx // (hi * hi), (idx // hi) % hi, idx % hi
        mapping = (a % lo) * lo * lo + (b % lo) * lo + (c % lo)
        maps.append(Homomorphism(levels[k], levels[k - 1], mapping))
    meta = TowerMeta(
        family_name="heisenberg",
        primes=frozenset([p]),
        flags=TowerFlags(nilpotent=True, finitely_generated=True),
        depth=depth,
        dim_estimate=3,
        extra={"p": p},
    )
    return Tower(levels, maps, meta)


def _dihedral2_group(k: int) -> FiniteGroup:
    """Dihedral group of order 2^(k+1): rotations 0..2^k-1, reflections after."""
    n = 2**k
    size = 2 * n
    table = np.zeros((size, size), dtype=np.int64)
    for x in range(size):
        rx, fx = x % n, x // n
        for y in range(size):
            ry, fy = y % n, y // n
            f = (fx + fy) % 2
            r = (ry + (rx if fy == 0 else -rx)) % n
            table[x, y] = f * n + r
    labels = [f"r{j}" for j in range(n)] + [f"sr{j}" for j in range(n)]
    return FiniteGroup(table, generators=[1 % n, n], labels=labels, name=f"D2^{k+1}")


def make_dihedral2(depth: int, cap: int | None = None) -> Tower:
    """Pro-2 dihedral levels Z/2^k x| inversion; maps kill the top rotation."""
    cap = order_cap() if cap is None else cap
    if 2 ** (depth + 1) > cap:
        raise CapExceeded(f"2^(depth+1) = {2**(depth+1)} above cap {cap}")
    levels = [_dihedral2_group(k) for k in range(1, depth + 1)]
    maps = []
    for k in range(1, depth):
        hi, lo = 2 ** (k + 1), 2**k
        idx = np.arange(2 * hi)
        r, f = idx % hi, idx // hi
        mapping = f * lo + (r % lo)
        maps.append(Homomorphism(levels[k], levels[k - 1], mapping))
    meta = TowerMeta(
        family_name="dihedral2",
        primes=frozenset([2]),
        flags=TowerFlags(
            virtually_zp=True, finitely_generated=True, center_trivial_expected=True
        ),
        depth=depth,
        dim_estimate=1,
        extra={"p": 2, "z_witness": [list(range(2**k)) for k in range(1, depth + 1)]},
    )
    return Tower(levels, maps, meta)


# -- the poly-procyclic family driven by the matrix A = [[0,1],[4,2]] ---------

PIRIM_A = ((0, 1), (4, 2))


def _mat_mul(x, y, mod: int | None = None):
    out = [[0, 0], [0, 0]]
    for i in range(2):
        for j in range(2):
            v = x[i][0] * y[0][j] + x[i][1] * y[1][j]
            out[i][j] = v % mod if mod else v
    return tuple(tuple(r) for r in out)


def _mat_pow(x, e: int, mod: int | None = None):
    result = ((1, 0), (0, 1))
    base = tuple(tuple(r) for r in x)
    while e:
        if e & 1:
            result = _mat_mul(result, base, mod)
        base = _mat_mul(base, base, mod)
        e >>= 1
    return result


def pirim_base_power() -> tuple[int, tuple[tuple[int, int], tuple[int, int]]]:
    """Least m >= 1 with A^m = I mod 3, and the exact integer matrix A^m."""
    m = 1
    acc = PIRIM_A
    while _mat_pow(PIRIM_A, m, 3) != ((1, 0), (0, 1)):
        m += 1
        if m > 1000:
            raise RelationCheckFailed("no power of A lands in the congruence subgroup")
    return m, _mat_pow(PIRIM_A, m)


def _mat_order(mat, mod: int) -> int:
    ident = ((1, 0), (0, 1))
    cur = tuple(tuple(v % mod for v in r) for r in mat)
    o = 1
    while cur != ident:
        cur = _mat_mul(cur, mat, mod)
        o += 1
        if o > 4 * mod * mod:
            raise RelationCheckFailed("matrix order runaway")
    return o


def _pirim_group(k: int, A1) -> FiniteGroup:
    """(Z/3^k)^2 x| <t> with t acting by A1 mod 3^k."""
    m = 3**k
    t_order = 1 if _mat_pow(A1, 1, m) == ((1, 0), (0, 1)) else _mat_order(A1, m)
    powers = [_mat_pow(A1, j, m) for j in range(t_order)]
    n = m * m * t_order

    def decode(i: int) -> tuple[int, int, int]:
        vj, j = divmod(i, t_order)
        v0, v1 = divmod(vj, m)
        return v0, v1, j

    def encode(v0: int, v1: int, j: int) -> int:
        return (v0 * m + v1) * t_order + j

    table = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        v0, v1, j = decode(i)
        B = powers[j]
        for i2 in range(n):
            w0, w1, l = decode(i2)
            u0 = (v0 + B[0][0] * w0 + B[0][1] * w1) % m
            u1 = (v1 + B[1][0] * w0 + B[1][1] * w1) % m
            table[i, i2] = encode(u0, u1, (j + l) % t_order)

    gens = [encode(1, 0, 0), encode(0, 1, 0)]
    if t_order > 1:
        gens.append(encode(0, 0, 1))
    labels = None
    if n <= 4096:
        labels = [f"({v0},{v1};t{j})" for v0, v1, j in (decode(i) for i in range(n))]
    G = FiniteGroup(table, generators=gens, labels=labels, name=f"Pirim(3^{k})")
    return G


def make_pirim(depth: int, cap: int | None = None) -> Tower:
    """Poly-procyclic pro-3 tower (Z/3^k)^2 x| <t>, t acting by a fixed power
    of the matrix A = [[0,1],[4,2]] chosen inside the first congruence subgroup."""
    cap = order_cap() if cap is None else cap
    if 3 ** (3 * depth - 1) > cap:
        raise CapExceeded(f"3^(3*depth-1) = {3**(3*depth-1)} above cap {cap}")
    m, A1 = pirim_base_power()
    if _mat_pow(A1, 1, 3) != ((1, 0), (0, 1)):
        raise RelationCheckFailed("A1 is not in the first congruence subgroup")
    det = PIRIM_A[0][0] * PIRIM_A[1][1] - PIRIM_A[0][1] * PIRIM_A[1][0]
    if det != -4:
        raise RelationCheckFailed(f"det(A) = {det}, expected -4")
    levels = [_pirim_group(k, A1) for k in range(1, depth + 1)]
    t_orders = [lvl.order // 9 ** (k + 1) for k, lvl in enumerate(levels)]
    maps = []
    for k in range(1, depth):
        hi, lo = 3 ** (k + 1), 3**k
        to_hi, to_lo = t_orders[k], t_orders[k - 1]
        mapping = []
        for i in range(levels[k].order):
            vj, j = divmod(i, to_hi)
            v0, v1 = divmod(vj, hi)
            mapping.append(((v0 % lo) * lo + (v1 % lo)) * to_lo + (j % to_lo))
        maps.append(Homomorphism(levels[k], levels[k - 1], mapping))
    meta = TowerMeta(
        family_name="pirim",
        primes=frozenset([3]),
        flags=TowerFlags(finitely_generated=True),
        depth=depth,
        dim_estimate=3,
        extra={
            "p": 3,
            "power_exponent": m,
            "A1": [list(r) for r in A1],
            "t_orders": t_orders,
            "h_node_levels": True,
            "dim_stabilization_level": 1,
        },
    )
    return Tower(levels, maps, meta)


# -- the Wilson pro-2 example ---------------------------------------------------

_WILSON_SIGMAS = {
    "1": (1, 1, 1),
    "s1": (1, -1, -1),
    "s2": (-1, 1, -1),
    "s3": (-1, -1, 1),
}
_WILSON_MUL = {
    ("1", "1"): "1", ("1", "s1"): "s1", ("1", "s2"): "s2", ("1", "s3"): "s3",
    ("s1", "1"): "s1", ("s2", "1"): "s2", ("s3", "1"): "s3",
    ("s1", "s1"): "1", ("s2", "s2"): "1", ("s3", "s3"): "1",
    ("s1", "s2"): "s3", ("s2", "s1"): "s3",
    ("s1", "s3"): "s2", ("s3", "s1"): "s2",
    ("s2", "s3"): "s1", ("s3", "s2"): "s1",
}


def _wilson_level(k: int, cap: int) -> tuple[FiniteGroup, dict]:
    """Level k of the Wilson tower, generated inside (Z/2^k)^3 x| V."""
    mod = 2**k

    def mul(x, y):
        (v, s), (w, t) = x, y
        sv = _WILSON_SIGMAS[s]
        moved = tuple((v[i] + sv[i] * w[i]) % mod for i in range(3))
        return (moved, _WILSON_MUL[(s, t)])

    x1 = ((1, 0, 1), "s1")
    x2 = ((0, 1, 0), "s2")
    elements = _wilson_elements(k)
    if len(elements) > cap:
        raise CapExceeded(f"wilson level {k} order {len(elements)} above cap {cap}")
    if len(elements) != 2 ** (3 * k - 1):
        raise RelationCheckFailed(
            f"wilson level {k} has order {len(elements)}, expected {2**(3*k-1)}"
        )
    index = {e: i for i, e in enumerate(elements)}
    G = from_elements(
        elements, mul,
        generators_idx=[index[x1], index[x2]],
        labels=[f"({e[0][0]},{e[0][1]},{e[0][2]};{e[1]})" for e in elements],
        name=f"W(2^{k})",
    )

    def inv(e):
        v, s = e
        sv = _WILSON_SIGMAS[s]
        return (tuple((-sv[i] * v[i]) % mod for i in range(3)), s)

    def conj(a, b):  # a^b = b^-1 a b
        return mul(mul(inv(b), a), b)

    x1e, x2e = x1, x2
    a1 = mul(x1e, x1e)
    a2 = mul(x2e, x2e)
    x1x2 = mul(x1e, x2e)
    a3 = mul(x1x2, x1x2)
    # presentation relations, checked at every level
    for name, (sq, other) in {
        "(x1^2)^x2 = x1^-2": (a1, x2e),
        "(x2^2)^x1 = x2^-2": (a2, x1e),
        "((x1 x2)^2)^x1 = (x1 x2)^-2": (a3, x1e),
    }.items():
        if conj(sq, other) != inv(sq):
            raise RelationCheckFailed(f"wilson relation failed at level {k}: {name}")
    for i, a in enumerate((a1, a2, a3)):
        expected = tuple(2 % mod if j == i else 0 for j in range(3))
        if a != (expected, "1"):
            raise RelationCheckFailed(f"a{i+1} != 2e{i+1} at level {k}")

    gen_info = {
        "x1": index[x1e],
        "x2": index[x2e],
        "a1": index[a1],
        "a2": index[a2],
        "a3": index[a3],
        "x1x2": index[x1x2],
    }
    return G, gen_info


def _wilson_elements(k: int) -> list:
    """Deterministic element list matching generate_from's BFS order."""
    mod = 2**k

    def mul(x, y):
        (v, s), (w, t) = x, y
        sv = _WILSON_SIGMAS[s]
        return (tuple((v[i] + sv[i] * w[i]) % mod for i in range(3)), _WILSON_MUL[(s, t)])

    ident = ((0, 0, 0), "1")
    x1 = ((1, 0, 1), "s1")
    x2 = ((0, 1, 0), "s2")
    elements = [ident]
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in (x1, x2):
                for y in (mul(x, g), mul(g, x)):
                    if y not in seen:
                        seen.add(y)
                        elements.append(y)
                        nxt.append(y)
        frontier = nxt
    return elements


def make_wilson(depth: int, cap: int | None = None) -> Tower:
    """Pro-2 tower of the two-generator group with abelianized squares;
    levels are built by explicit embedding into (Z/2^k)^3 x| V and the
    defining relations are re-verified at every level."""
    cap = order_cap() if cap is None else cap
    if 2 ** (3 * depth - 1) > cap:
        raise CapExceeded(f"2^(3*depth-1) = {2**(3*depth-1)} above cap {cap}")
    levels = []
    gen_infos = []
    elements_per_level = []
    for k in range(1, depth + 1):
        G, info = _wilson_level(k, cap)
        levels.append(G)
        gen_infos.append(info)
        elements_per_level.append(_wilson_elements(k))
    maps = []
    for k in range(1, depth):
        lo = 2**k
        lo_index = {e: i for i, e in enumerate(elements_per_level[k - 1])}
        mapping = [
            lo_index[(tuple(c % lo for c in v), s)] for (v, s) in elements_per_level[k]
        ]
        maps.append(Homomorphism(levels[k], levels[k - 1], mapping))
    meta = TowerMeta(
        family_name="wilson",
        primes=frozenset([2]),
        flags=TowerFlags(finitely_generated=True),
        depth=depth,
        dim_estimate=3,
        extra={"p": 2, "x_gens": gen_infos, "dim_stabilization_level": 1},
    )
    return Tower(levels, maps, meta)


# -- products -------------------------------------------------------------------

def make_product(towers: Sequence[Tower], cap: int | None = None) -> Tower:
    """Levelwise direct product of towers over pairwise disjoint prime sets.

    Levels are materialized as explicit product groups only while each product
    order stays under the cap; larger products stay structural (factors kept,
    lattice work routed through the factor lattices).
    """
    cap = order_cap() if cap is None else cap
    towers = list(towers)
    if len(towers) < 2:
        raise WrongShape("product needs at least two factors")
    depth = towers[0].depth
    for t in towers[1:]:
        if t.depth != depth:
            raise DepthMismatch(
                f"factor depths differ: {[t.depth for t in towers]}"
            )
    seen: set[int] = set()
    for t in towers:
        if seen & t.meta.primes:
            raise PrimeOverlap(f"shared primes {sorted(seen & t.meta.primes)}")
        seen |= t.meta.primes

    explicit = all(
        int(np.prod([float(t.level(k).order) for t in towers])) <= cap
        for k in range(1, depth + 1)
    )
    levels: list[FiniteGroup] = []
    maps: list[Homomorphism] = []
    if explicit:
        for k in range(1, depth + 1):
            G = towers[0].level(k)
            for t in towers[1:]:
                G = direct_product(G, t.level(k), cap=cap)
            levels.append(G)
        for k in range(1, depth):
            mapping = _product_map(towers, k)
            maps.append(Homomorphism(levels[k], levels[k - 1], mapping))

    flags = TowerFlags(
        abelian=all(t.meta.flags.abelian for t in towers),
        nilpotent=all(t.meta.flags.nilpotent for t in towers),
        virtually_zp=False,
        finitely_generated=all(t.meta.flags.finitely_generated for t in towers),
    )
    meta = TowerMeta(
        family_name="product",
        primes=frozenset(seen),
        flags=flags,
        depth=depth,
        dim_estimate=None,
        extra={"factor_families": [t.meta.family_name for t in towers]},
    )
    return Tower(levels, maps, meta, factors=towers)


def _product_map(towers: Sequence[Tower], k: int) -> np.ndarray:
    """Connecting map of the product tower at level k (levels k+1 -> k)."""
    his = [t.level(k + 1).order for t in towers]
    los = [t.level(k).order for t in towers]
    fmaps = [t.map_down(k).map for t in towers]
    total_hi = int(np.prod(his))
    out = np.zeros(total_hi, dtype=np.int64)
    idx = np.arange(total_hi)
    rem = idx.copy()
    coords = []
    for nh in reversed(his):
        coords.append(rem % nh)
        rem //= nh
    coords.reverse()
    acc = np.zeros(total_hi, dtype=np.int64)
    for c, fmap, lo in zip(coords, fmaps, los):
        acc = acc * lo + fmap[c]
    out[:] = acc
    return out


def direct_product_tower(t1: Tower, t2: Tower, cap: int | None = None) -> Tower:
    """Levelwise direct product without the disjoint-prime requirement.

    Same-prime products do not satisfy the coprime lattice factorization, so
    the result carries no `factors` shortcut and is analyzed explicitly.
    """
    cap = order_cap() if cap is None else cap
    if t1.depth != t2.depth:
        raise DepthMismatch("factor depths differ")
    levels = [direct_product(t1.level(k), t2.level(k), cap=cap) for k in range(1, t1.depth + 1)]
    maps = []
    for k in range(1, t1.depth):
        n2_hi = t2.level(k + 1).order
        n2_lo = t2.level(k).order
        idx = np.arange(levels[k].order)
        a, b = idx // n2_hi, idx % n2_hi
        mapping = t1.map_down(k).map[a] * n2_lo + t2.map_down(k).map[b]
        maps.append(Homomorphism(levels[k], levels[k - 1], mapping))
    meta = TowerMeta(
        family_name="directprod",
        primes=t1.meta.primes | t2.meta.primes,
        flags=TowerFlags(
            abelian=t1.meta.flags.abelian and t2.meta.flags.abelian,
            nilpotent=t1.meta.flags.nilpotent and t2.meta.flags.nilpotent,
            finitely_generated=t1.meta.flags.finitely_generated
            and t2.meta.flags.finitely_generated,
        ),
        depth=t1.depth,
        dim_estimate=None,
        extra={"left_family": t1.meta.family_name, "right_family": t2.meta.family_name},
    )
    return Tower(levels, maps, meta)


def custom_tower(levels: list[FiniteGroup], mappings: list[Sequence[int]]) -> Tower:
    """Build a tower from explicit groups and connecting maps (verified)."""
    if len(mappings) != len(levels) - 1:
        raise WrongShape("need exactly depth-1 connecting maps")
    homs = []
    for k, m in enumerate(mappings):
        hom = Homomorphism(levels[k + 1], levels[k], m)
        if not hom.surjective:
            raise WrongShape(f"connecting map {k + 1} is not surjective")
        homs.append(hom)
    primes = frozenset().union(*(g.primes for g in levels)) if levels else frozenset()
    meta = TowerMeta(
        family_name="custom",
        primes=primes,
        flags=TowerFlags(),
        depth=len(levels),
        dim_estimate=None,
    )
    return Tower(levels, homs, meta)


# -- tower spec JSON -------------------------------------------------------------

def parse_tower_spec(doc: dict | str) -> dict:
    """Validate a tower spec document; returns the normalized spec dict.

    Raises SpecError listing JSON-pointer paths of offending fields, or
    CapExceeded when the parse-time order estimate is already above cap.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise SpecError("tower spec must be a JSON object", ["/"])
    family = doc.get("family")
    known = ("zp", "zpn", "heisenberg", "dihedral2", "pirim", "wilson", "product", "custom")
    if family not in known:
        raise SpecError(f"unknown family {family!r}", ["/family"])

    if family == "product":
        factors = doc.get("factors")
        if not isinstance(factors, list) or len(factors) < 2:
            raise SpecError("product needs a list of >= 2 factors", ["/factors"])
        parsed = [parse_tower_spec(f) for f in factors]
        depths = {f["depth"] for f in parsed}
        if len(depths) > 1:
            raise SpecError("product factors must share a depth", ["/factors"])
        primes: set[int] = set()
        for i, f in enumerate(parsed):
            fam_primes = _spec_primes(f)
            if primes & fam_primes:
                raise PrimeOverlap(
                    f"factors share primes {sorted(primes & fam_primes)} "
                    f"(at /factors/{i})"
                )
            primes |= fam_primes
        return {"family": "product", "factors": parsed, "depth": parsed[0]["depth"]}

    if family == "custom":
        if not isinstance(doc.get("levels"), list) or not doc["levels"]:
            raise SpecError("custom tower needs levels", ["/levels"])
        if not isinstance(doc.get("maps"), list):
            raise SpecError("custom tower needs maps", ["/maps"])
        return {"family": "custom", "levels": doc["levels"], "maps": doc["maps"],
                "depth": len(doc["levels"])}

    depth = doc.get("depth", DEFAULT_DEPTHS[family])
    if not isinstance(depth, int) or depth < 1:
        raise SpecError("depth must be a positive integer", ["/depth"])
    spec = {"family": family, "depth": depth}
    if family in ("zp", "zpn", "heisenberg"):
        p = doc.get("p")
        if not isinstance(p, int) or p < 2 or _not_prime(p):
            raise SpecError("p must be a prime", ["/p"])
        spec["p"] = p
    if family == "zpn":
        n = doc.get("n")
        if not isinstance(n, int) or n < 1:
            raise SpecError("n must be a positive integer", ["/n"])
        spec["n"] = n

    cap = order_cap()
    est = _order_estimate(spec)
    if est > cap:
        raise CapExceeded(
            f"{family} at depth {depth} needs order {est}, above cap {cap}"
        )
    return spec


def _not_prime(p: int) -> bool:
    return any(p % d == 0 for d in range(2, int(p**0.5) + 1))


def _spec_primes(spec: dict) -> set[int]:
    fam = spec["family"]
    if fam in ("zp", "zpn", "heisenberg"):
        return {spec["p"]}
    if fam in ("dihedral2", "wilson"):
        return {2}
    if fam == "pirim":
        return {3}
    if fam == "product":
        out: set[int] = set()
        for f in spec["factors"]:
            out |= _spec_primes(f)
        return out
    return set()


def _order_estimate(spec: dict) -> int:
    fam, d = spec["family"], spec["depth"]
    if fam == "zp":
        return spec["p"] ** d
    if fam == "zpn":
        return spec["p"] ** (spec["n"] * d)
    if fam == "heisenberg":
        return spec["p"] ** (3 * d)
    if fam == "dihedral2":
        return 2 ** (d + 1)
    if fam == "pirim":
        return 3 ** (3 * d - 1)
    if fam == "wilson":
        return 2 ** (3 * d - 1)
    return 0


def build_tower(spec: dict, cap: int | None = None) -> Tower:
    """Construct the tower described by a parsed spec."""
    fam = spec["family"]
    if fam == "product":
        return make_product([build_tower(f, cap=cap) for f in spec["factors"]], cap=cap)
    if fam == "custom":
        levels = [load_group_json(g) for g in spec["levels"]]
        return custom_tower(levels, spec["maps"])
    d = spec["depth"]
    if fam == "zp":
        return make_zp(spec["p"], d, cap=cap)
    if fam == "zpn":
        return make_zpn(spec["p"], spec["n"], d, cap=cap)
    if fam == "heisenberg":
        return make_heisenberg(spec["p"], d, cap=cap)
    if fam == "dihedral2":
        return make_dihedral2(d, cap=cap)
    if fam == "pirim":
        return make_pirim(d, cap=cap)
    if fam == "wilson":
        return make_wilson(d, cap=cap)
    raise SpecError(f"unknown family {fam!r}", ["/family"])


def z_witness_subgroup(t: Tower, k: int) -> Subgroup | None:
    """The distinguished procyclic open-subgroup witness at level k, if any."""
    wit = t.meta.extra.get("z_witness")
    if wit is None:
        return None
    return subgroup_from_indices(t.level(k), wit[k - 1])
