"""Group-core tests against the independent subset-closure oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_bits_set, oracle_closure, oracle_subgroups, subgroup_bits_set
from subgroup_atlas.errors import CapExceeded, NotNormal, SpecError, WrongShape
from subgroup_atlas.groups import (
    FiniteGroup,
    all_subgroups,
    center,
    centralizer,
    closure,
    commutator_subgroup,
    conjugate,
    core,
    cyclic,
    dihedral,
    direct_product,
    frattini,
    goursat,
    goursat_reconstruct,
    load_group_json,
    normalizer,
    product_set,
    quaternion8,
    quotient,
    subgroup_from_indices,
    trivial_subgroup,
)
from subgroup_atlas.towers import make_heisenberg


def heis3():
    return make_heisenberg(3, 1).level(1)


COUNT_CASES = [
    ("Z8", lambda: cyclic(8), 4),
    ("Z3xZ3", lambda: direct_product(cyclic(3), cyclic(3)), 6),
    ("Q8", quaternion8, 6),
    ("D4", lambda: dihedral(4), 10),
    ("Z4xZ2", lambda: direct_product(cyclic(4), cyclic(2)), 8),
    ("Heis3", heis3, 19),
    ("D16", lambda: dihedral(8), 19),
]


@pytest.mark.parametrize("name,factory,expected", COUNT_CASES)
def test_all_subgroups_counts(name, factory, expected):
    G = factory()
    subs = all_subgroups(G)
    assert len(subs) == expected
    oracle = oracle_subgroups(G)
    assert len(oracle) == expected
    assert subgroup_bits_set(subs) == oracle_bits_set(G, oracle)


def test_all_subgroups_sorted_and_stable():
    G = dihedral(8)
    subs = all_subgroups(G)
    keys = [(s.order, s.bits) for s in subs]
    assert keys == sorted(keys)
    again = all_subgroups(dihedral(8))
    assert [s.bits for s in again] == [s.bits for s in subs]


def test_lagrange():
    for _, factory, _ in COUNT_CASES:
        G = factory()
        for H in all_subgroups(G):
            assert G.order % H.order == 0


def test_closure_empty_and_cyclic():
    Z8 = cyclic(8)
    assert closure(Z8, []).order == 1
    H = closure(Z8, [2])
    assert sorted(H.indices()) == [0, 2, 4, 6]


def test_closure_d4_klein():
    D4 = dihedral(4)
    H = closure(D4, [2, 4])  # half rotation and a reflection
    assert H.order == 4
    table = [[int(x) for x in row] for row in D4.table]
    inv = [int(x) for x in D4.inv]
    assert frozenset(int(i) for i in H.indices()) == oracle_closure(
        table, D4.identity, inv, [2, 4]
    )


def test_frattini_values():
    Z8 = cyclic(8)
    assert sorted(frattini(Z8).indices()) == [0, 2, 4, 6]
    K = direct_product(cyclic(3), cyclic(3))
    assert frattini(K).order == 1
    assert frattini(cyclic(1)).order == 1


@pytest.mark.parametrize(
    "factory,p",
    [
        (lambda: dihedral(4), 2),
        (quaternion8, 2),
        (heis3, 3),
        (lambda: dihedral(8), 2),
        (lambda: cyclic(9), 3),
    ],
)
def test_frattini_p_group_identity(factory, p):
    # For p-groups the Frattini subgroup is generated by commutators and p-th powers
    G = factory()
    comm = commutator_subgroup(G)
    powers = [int(G.power_map(p)[g]) for g in range(G.order)]
    generated = closure(G, list(comm.indices()) + powers)
    assert generated.bits == frattini(G).bits


def test_center_q8():
    Q8 = quaternion8()
    Z = center(Q8)
    assert Z.order == 2
    assert Z.contains(Q8.identity)
    assert Z.contains(1)  # the element labeled -1


def test_centralizer_normalizer():
    Q8 = quaternion8()
    assert centralizer(Q8, center(Q8)).order == 8
    i_sub = closure(Q8, [2])
    assert normalizer(Q8, i_sub).order == 8  # index-2 subgroups are normal
    D4 = dihedral(4)
    s_sub = closure(D4, [4])
    assert normalizer(D4, s_sub).order == 4


def test_core_of_reflection_is_trivial():
    D4 = dihedral(4)
    s_sub = closure(D4, [4])
    assert core(D4, s_sub).order == 1
    # core of a normal subgroup is itself
    rot = closure(D4, [1])
    assert core(D4, rot).bits == rot.bits


def test_conjugate():
    D4 = dihedral(4)
    s_sub = closure(D4, [4])
    conj = conjugate(D4, s_sub, 1)
    assert conj.order == 2
    assert conj.bits != s_sub.bits


def test_product_set():
    Z8 = cyclic(8)
    H = subgroup_from_indices(Z8, [0, 4])
    N = subgroup_from_indices(Z8, [0, 2, 4, 6])
    assert product_set(Z8, H, N).bits == N.bits
    D4 = dihedral(4)
    s_sub = closure(D4, [4])
    with pytest.raises(NotNormal):
        product_set(D4, s_sub, s_sub)


def test_quotient_z8():
    Z8 = cyclic(8)
    N = subgroup_from_indices(Z8, [0, 4])
    Q, proj = quotient(Z8, N)
    assert Q.order == 4
    assert proj.surjective
    orders = {len(closure(Q, [g]).indices()) for g in range(Q.order)}
    assert 4 in orders  # cyclic of order 4


def test_quotient_d4_center_is_klein():
    D4 = dihedral(4)
    Q, _ = quotient(D4, center(D4))
    assert Q.order == 4
    assert all(Q.mul(g, g) == Q.identity for g in range(4))


def test_quotient_by_whole_group():
    D4 = dihedral(4)
    from subgroup_atlas.groups import full_subgroup

    Q, proj = quotient(D4, full_subgroup(D4))
    assert Q.order == 1
    assert proj.surjective


def test_quotient_requires_normal():
    D4 = dihedral(4)
    with pytest.raises(NotNormal):
        quotient(D4, closure(D4, [4]))


def test_direct_product_layout_and_counts():
    P = direct_product(cyclic(2), cyclic(3))
    # index = i1 * |G2| + i2
    assert P.mul(1 * 3 + 0, 0 * 3 + 1) == 1 * 3 + 1
    orders = {len(closure(P, [g]).indices()) for g in range(6)}
    assert 6 in orders  # coprime cyclic product is cyclic

    klein = direct_product(cyclic(2), cyclic(2))
    assert len(all_subgroups(klein)) == 5
    assert len(all_subgroups(direct_product(cyclic(4), cyclic(3)))) == 6


@pytest.mark.parametrize(
    "f1,f2",
    [
        (lambda: cyclic(4), lambda: cyclic(3)),
        (lambda: dihedral(4), lambda: cyclic(3)),
        (quaternion8, lambda: cyclic(3)),
    ],
)
def test_coprime_splitting(f1, f2):
    G1, G2 = f1(), f2()
    P = direct_product(G1, G2)
    subs = all_subgroups(P)
    assert len(subs) == len(all_subgroups(G1)) * len(all_subgroups(G2))
    n2 = G2.order
    for H in subs:
        members = set(int(m) for m in H.indices())
        h1 = sorted({m // n2 for m in members if m % n2 == 0})
        h2 = sorted({m % n2 for m in members if m // n2 == 0})
        rebuilt = {a * n2 + b for a in h1 for b in h2}
        assert rebuilt == members


def test_goursat_diagonal():
    G1, G2 = cyclic(2), cyclic(2)
    P = direct_product(G1, G2)
    diag = subgroup_from_indices(P, [0, 3])
    q = goursat(G1, G2, diag)
    assert q.proj_left.order == 2 and q.proj_right.order == 2
    assert q.ker_left.order == 1 and q.ker_right.order == 1
    assert q.iso_witness == {0: 0, 1: 1}


def test_goursat_factor_subgroup():
    G1, G2 = cyclic(2), cyclic(2)
    P = direct_product(G1, G2)
    H = subgroup_from_indices(P, [0, 2])  # G1 x 1
    q = goursat(G1, G2, H)
    assert q.proj_left.order == 2 and q.ker_left.order == 2
    assert q.proj_right.order == 1 and q.ker_right.order == 1


def test_goursat_roundtrip_z4xz2():
    G1, G2 = cyclic(4), cyclic(2)
    P = direct_product(G1, G2)
    subs = all_subgroups(P)
    assert len(subs) == 8
    for H in subs:
        q = goursat(G1, G2, H)  # verifier raises on any failure
        assert goursat_reconstruct(G1, G2, P, q).bits == H.bits


def test_goursat_roundtrip_order_64():
    G1, G2 = cyclic(8), cyclic(8)
    P = direct_product(G1, G2)
    for H in all_subgroups(P):
        q = goursat(G1, G2, H)
        assert q.proj_left.order * q.ker_right.order == q.proj_right.order * q.ker_left.order


def test_cap_exceeded():
    with pytest.raises(CapExceeded):
        all_subgroups(cyclic(8), cap=4)
    with pytest.raises(CapExceeded):
        direct_product(cyclic(8), cyclic(8), cap=32)


def test_insoluble_fallback_a5():
    # A5 = <(0 1 2 3 4), (0 1 2)>; every subgroup of the alternating group
    # on 5 points is 2-generated, so pair closures are a complete oracle
    doc = {
        "version": 1,
        "kind": "permutation",
        "degree": 5,
        "generators": [[1, 2, 3, 4, 0], [1, 2, 0, 3, 4]],
    }
    G = load_group_json(doc)
    assert G.order == 60
    subs = all_subgroups(G)
    oracle = oracle_subgroups(G, gen_bound=2)
    assert len(subs) == len(oracle) == 59
    assert subgroup_bits_set(subs) == oracle_bits_set(G, oracle)


def test_generic_matches_fast_path():
    from subgroup_atlas.groups import _subgroups_generic

    for factory in (lambda: dihedral(4), heis3, quaternion8):
        G = factory()
        fast = {s.bits for s in all_subgroups(G)}
        slow = set(_subgroups_generic(G))
        assert fast == slow


def test_load_group_json_kinds():
    assert load_group_json({"version": 1, "kind": "cyclic", "n": 6}).order == 6
    Z3 = cyclic(3)
    doc = {"version": 1, "kind": "table", "mult": [[int(x) for x in row] for row in Z3.table]}
    assert load_group_json(doc).order == 3
    s3 = load_group_json(
        {"version": 1, "kind": "permutation", "degree": 3,
         "generators": [[1, 0, 2], [1, 2, 0]]}
    )
    assert s3.order == 6
    assert len(all_subgroups(s3)) == 6
    m = load_group_json(
        {"version": 1, "kind": "matrix", "modulus": 3,
         "generators": [[[0, 1], [1, 2]]]}
    )
    assert m.order == 8  # that matrix has order 8 in GL2(F3)


def test_load_group_json_requires_version():
    with pytest.raises(SpecError):
        load_group_json({"kind": "cyclic", "n": 4})
    with pytest.raises(SpecError):
        load_group_json({"version": 1, "kind": "nonsense"})


def test_bad_table_rejected():
    with pytest.raises(WrongShape):
        FiniteGroup([[0, 1], [1, 1]])  # not a group


@given(st.lists(st.integers(min_value=0, max_value=7), max_size=4))
@settings(max_examples=50, deadline=None)
def test_closure_idempotent_monotone(seed):
    G = dihedral(4)
    H = closure(G, seed)
    assert closure(G, list(H.indices())).bits == H.bits
    bigger = closure(G, list(seed) + [1])
    assert (H.bits & bigger.bits) == H.bits or not set(seed) <= set(
        int(i) for i in bigger.indices()
    )
    assert G.order % H.order == 0
