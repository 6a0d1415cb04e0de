"""Shared fixtures and independent oracles.

The oracles here are deliberately naive reimplementations (pure-python
fixed-point closure, subset enumeration) kept independent of the library's
algorithms so they can serve as ground truth.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import pytest

from subgroup_atlas.towers import (
    Tower,
    make_dihedral2,
    make_heisenberg,
    make_pirim,
    make_product,
    make_wilson,
    make_zp,
    make_zpn,
    truncate,
)


# -- independent oracles ---------------------------------------------------------

def oracle_closure(table, identity, inv, seed) -> frozenset[int]:
    """Naive fixed-point closure: repeatedly add products and inverses."""
    members = {identity} | set(seed)
    changed = True
    while changed:
        changed = False
        current = list(members)
        for a in current:
            for b in current:
                p = table[a][b]
                if p not in members:
                    members.add(p)
                    changed = True
        for a in list(members):
            if inv[a] not in members:
                members.add(inv[a])
                changed = True
    return frozenset(members)


def _omega(n: int) -> int:
    count, d = 0, 2
    while d * d <= n:
        while n % d == 0:
            n //= d
            count += 1
        d += 1
    return count + (1 if n > 1 else 0)


def oracle_subgroups(G, gen_bound: int | None = None) -> list[frozenset[int]]:
    """All subgroups by brute-force closure of every small generating set.

    Any subgroup of a group of order n is generated by at most Omega(n)
    elements, since each extra generator at least doubles the order.
    """
    n = G.order
    bound = gen_bound if gen_bound is not None else _omega(n)
    table = [[int(x) for x in row] for row in G.table]
    inv = [int(x) for x in G.inv]
    found: set[frozenset[int]] = set()
    for size in range(bound + 1):
        for seed in combinations(range(n), size):
            found.add(oracle_closure(table, G.identity, inv, seed))
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def subgroup_bits_set(subs) -> set[int]:
    return {s.bits for s in subs}


def oracle_bits_set(G, oracle_sets) -> set[int]:
    out = set()
    for s in oracle_sets:
        bits = 0
        for i in s:
            bits |= 1 << i
        out.add(bits)
    return out


# -- cached towers (groups memoize their own subgroup lists) ----------------------

@lru_cache(maxsize=None)
def cached_tower(name: str) -> Tower:
    factories = {
        "zp(2,4)": lambda: make_zp(2, 4),
        "zp(2,5)": lambda: make_zp(2, 5),
        "zp(3,4)": lambda: make_zp(3, 4),
        "zp(3,5)": lambda: make_zp(3, 5),
        "zp(5,4)": lambda: make_zp(5, 4),
        "zp(5,5)": lambda: make_zp(5, 5),
        "zp(2,3)": lambda: make_zp(2, 3),
        "zpn(2,2,4)": lambda: make_zpn(2, 2, 4),
        "zpn(2,2,6)": lambda: make_zpn(2, 2, 6),
        "zpn(3,2,2)": lambda: make_zpn(3, 2, 2),
        "zpn(3,2,3)": lambda: make_zpn(3, 2, 3),
        "heisenberg(3,2)": lambda: make_heisenberg(3, 2),
        "dihedral2(4)": lambda: make_dihedral2(4),
        "wilson(3)": lambda: make_wilson(3),
        "pirim(2)": lambda: make_pirim(2),
    }
    return factories[name]()


BUILTIN_NAMES = [
    "zp(2,4)",
    "zp(3,4)",
    "zp(5,4)",
    "zpn(2,2,4)",
    "zpn(3,2,3)",
    "heisenberg(3,2)",
    "dihedral2(4)",
    "wilson(3)",
    "pirim(2)",
]


def builtin_towers() -> list[tuple[str, Tower]]:
    return [(name, cached_tower(name)) for name in BUILTIN_NAMES]


def valid_products(max_factors: int = 3) -> list[tuple[str, Tower]]:
    """Every product of <= max_factors distinct-prime built-ins, truncated to
    the common depth."""
    out = []
    names = BUILTIN_NAMES
    for r in (2, 3):
        if r > max_factors:
            break
        for combo in combinations(names, r):
            towers = [cached_tower(n) for n in combo]
            primes: set[int] = set()
            ok = True
            for t in towers:
                if primes & t.meta.primes:
                    ok = False
                    break
                primes |= t.meta.primes
            if not ok:
                continue
            depth = min(t.depth for t in towers)
            if depth < 2:
                continue
            truncated = [truncate(t, depth) if t.depth > depth else t for t in towers]
            out.append(("x".join(combo), make_product(truncated)))
    return out


@pytest.fixture(scope="session")
def tower_cache():
    return cached_tower
