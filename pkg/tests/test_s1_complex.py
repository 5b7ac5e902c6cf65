from __future__ import annotations

import random
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from cyclic_s1.exact_linear import AbelianGroup, ExactMatrix, kernel_basis, solve_preimage
from cyclic_s1.s1_complex import (
    EmptyWindow,
    Generator,
    GradedModule,
    GradingMismatch,
    LaurentWindow,
    RelationFailure,
    S1Complex,
    S1Homotopy,
    S1Map,
    assemble_equivariant_differential,
    assemble_map,
    basis_vector,
    compose,
    cyclic_homology,
    delta0_homology,
    direct_sum,
    equivariant_basis,
    induced_class_image,
    mapping_cone,
    negative_by_stabilization,
    truncated_complex,
    verify_homotopy,
    verify_s1_map,
    verify_s1_structure,
)
from oracles import dense_equivariant, oracle_homology
from randgen import random_s1_complex

WINDOWS = [LaurentWindow.negative(), LaurentWindow.periodic(), LaurentWindow.quotient(),
           LaurentWindow.truncation(2, 0), LaurentWindow.truncation(3, -1), LaurentWindow.truncation(1, 0)]


def disk(k: int, ring: str = "Z") -> S1Complex:
    """Hand-written disk stage: d(x_{-2j+1}) = x_{-2j+2}, BV(x_{-2j+1}) = j x_{-2j}."""
    gens = [Generator("x0", 0)] + [Generator(f"x{-d}", -d) for d in range(1, 2 * k + 1)]
    d0 = [(f"x{-2 * j + 1}", f"x{-2 * j + 2}", 1) for j in range(1, k + 1)]
    d1 = [(f"x{-2 * j + 1}", f"x{-2 * j}", j) for j in range(1, k + 1)]
    return S1Complex.from_entries(gens, {0: d0, 1: d1}, ring)


def pair(ring="Z"):
    return S1Complex.from_entries([Generator("a", 0), Generator("b", 1)], {0: [("a", "b", 1)]}, ring)


# -- data model ---------------------------------------------------------------

def test_module_invariants():
    with pytest.raises(ValueError):
        GradedModule((Generator("a", 0), Generator("a", 1)))
    with pytest.raises(ValueError):
        GradedModule((Generator("a", 5),), "Z", 0, 3)
    m = GradedModule((Generator("a", -1), Generator("b", 2)))
    assert (m.degree_min, m.degree_max) == (-1, 2)
    assert m.position("b") == 1


def test_unknown_ring_rejected():
    with pytest.raises(ValueError):
        GradedModule((), "R")


def test_zero_complex_passes():
    assert verify_s1_structure(S1Complex.zero())
    c = S1Complex.from_entries([Generator("a", 0), Generator("b", 1)])
    assert verify_s1_structure(c)


def test_disk_relations_hold():
    for k in range(1, 6):
        assert verify_s1_structure(disk(k))


def test_grading_mismatch_on_bv_slot():
    gens = [Generator("x0", 0), Generator("x-1", -1), Generator("x-2", -2)]
    with pytest.raises(GradingMismatch):
        verify_s1_structure(S1Complex.from_entries(gens, {1: [("x-1", "x0", 1)]}))


def test_relation_failure_has_witness():
    gens = [Generator("a", 0), Generator("b", 1), Generator("c", 2)]
    c = S1Complex.from_entries(gens, {0: [("a", "b", 1), ("b", "c", 1)]})
    rep = verify_s1_structure(c)
    assert not rep
    assert rep.witness.k == 0 and rep.witness.generator == "a"
    assert rep.witness.residual == {"c": 1}
    assert rep.to_json()["witness"]["generator"] == "a"


# -- equivariant assembly -----------------------------------------------------

def test_disk_periodic_matrix_at_minus_one():
    c = disk(1)
    w = LaurentWindow.periodic()
    dom = equivariant_basis(c, w, -1)
    cod = equivariant_basis(c, w, 0)
    pos = c.module.position
    assert dom == ((0, pos("x-1")),)
    assert set(cod) == {(0, pos("x0")), (1, pos("x-2"))}
    m = assemble_equivariant_differential(c, w, -1)
    assert m.shape == (2, 1)
    assert sorted(m.column(0).values()) == [1, 1]


def test_annulus_like_odd_block():
    # hat_k in degree 1, check_k in degree 0, BV(hat_k) = k check_k
    gens = []
    d1 = []
    for k in (-2, -1, 1, 2):
        gens += [Generator(f"h{k}", 1), Generator(f"c{k}", 0)]
        d1.append((f"h{k}", f"c{k}", k))
    gens += [Generator("c0", 0), Generator("h0", 1)]
    c = S1Complex.from_entries(gens, {1: d1})
    m = assemble_equivariant_differential(c, LaurentWindow.periodic(), 3)
    dom = equivariant_basis(c, LaurentWindow.periodic(), 3)
    cod = equivariant_basis(c, LaurentWindow.periodic(), 4)
    for col, (i, p) in enumerate(dom):
        gid = c.generators[p].id
        image = {(cod[r][0], c.generators[cod[r][1]].id): v for r, v in m.column(col).items()}
        if gid == "h0":
            assert image == {}
        else:
            k = int(gid[1:])
            assert i == 1 and image == {(2, f"c{k}"): k}


def test_zero_complex_empty_matrix():
    m = assemble_equivariant_differential(S1Complex.zero(), LaurentWindow.periodic(), 0)
    assert m.shape == (0, 0)


def test_assembly_matches_dense_oracle():
    rng = random.Random(2)
    for _ in range(40):
        c, degrees, ops = random_s1_complex(rng, D=3)
        for w in WINDOWS:
            for n in range(-6, 7):
                got = assemble_equivariant_differential(c, w, n)
                want, _, _ = dense_equivariant(degrees, ops, w.admits, w.keeps, n)
                assert got.shape == (len(want), len(want[0]) if want else got.cols)
                assert got.to_rows() == want


def test_assembled_differential_squares_to_zero():
    rng = random.Random(4)
    for _ in range(40):
        c, _, _ = random_s1_complex(rng, D=3)
        for w in WINDOWS:
            for n in range(-6, 6):
                a = assemble_equivariant_differential(c, w, n)
                b = assemble_equivariant_differential(c, w, n + 1)
                assert (b @ a).is_zero()


# -- cyclic theories ----------------------------------------------------------

def test_acyclic_pair_vanishes_everywhere():
    for w in WINDOWS:
        for g in cyclic_homology(pair(), w, (-5, 5)).values():
            assert g.is_zero


def test_disk_stage_one_periodic():
    h = cyclic_homology(disk(1), LaurentWindow.periodic(), (-4, 4))
    for n, g in h.items():
        assert g == (AbelianGroup(1) if n % 2 == 0 else AbelianGroup())


def test_periodic_matches_dense_oracle_homology():
    rng = random.Random(9)
    for _ in range(25):
        c, degrees, ops = random_s1_complex(rng, D=2)
        w = LaurentWindow.periodic()
        h = cyclic_homology(c, w, (-3, 3))
        for n in range(-3, 4):
            d_in, _, mid = dense_equivariant(degrees, ops, w.admits, w.keeps, n - 1)
            d_out, _, _ = dense_equivariant(degrees, ops, w.admits, w.keeps, n)
            free, tors = oracle_homology(d_in, d_out, len(mid))
            assert (h[n].free_rank, list(h[n].torsion)) == (free, tors)


def test_u_periodicity():
    rng = random.Random(13)
    for _ in range(20):
        c, _, _ = random_s1_complex(rng, D=3)
        h = cyclic_homology(c, LaurentWindow.periodic(), (-8, 8))
        for n in range(-8, 7):
            assert h[n] == h[n + 2]


def test_truncation_one_zero_is_delta0_homology():
    rng = random.Random(17)
    for _ in range(20):
        c, degrees, ops = random_s1_complex(rng, D=3)
        h = cyclic_homology(c, LaurentWindow.truncation(1, 0), (-5, 5))
        for n in range(-5, 6):
            gens = [g for g, d in enumerate(degrees) if d == n]
            below = [g for g, d in enumerate(degrees) if d == n - 1]
            above = [g for g, d in enumerate(degrees) if d == n + 1]
            d_in = [[ops[0].get((t, s), 0) for s in below] for t in gens]
            d_out = [[ops[0].get((t, s), 0) for s in gens] for t in above]
            assert (h[n].free_rank, list(h[n].torsion)) == oracle_homology(d_in or [[]], d_out, len(gens))
        assert delta0_homology(c, (-5, 5)) == h


def test_truncated_complex_two_slices():
    t = truncated_complex(disk(1), 2, 0)
    pos = disk(1).module.position
    assert set(t.basis(0)) == {(0, pos("x0")), (1, pos("x-2"))}
    assert t.homology((0, 0))[0] == AbelianGroup(1)


def test_empty_window_warns_and_vanishes():
    with pytest.warns(EmptyWindow):
        t = truncated_complex(disk(2), 5, 5)
    assert t.is_zero
    assert all(g.is_zero for g in t.homology((-6, 6)).values())


def test_truncation_requires_m_ge_n():
    with pytest.raises(ValueError):
        truncated_complex(disk(1), 0, 1)


def test_negative_by_stabilization_matches_negative_window():
    rng = random.Random(19)
    for _ in range(10):
        c, _, _ = random_s1_complex(rng, D=2)
        neg = cyclic_homology(c, LaurentWindow.negative(), (-4, 4))
        for n in range(-4, 5):
            g, m = negative_by_stabilization(c, 0, n)
            assert g == neg[n]
            assert m >= 0


def test_quotient_vs_explicit_construction():
    # C+ of the disk stage: H is Z at each even degree <= 0 and 0 above
    h = cyclic_homology(disk(2), LaurentWindow.quotient(), (-6, 4))
    assert all(h[n].is_zero for n in (1, 2, 3, 4))


# -- maps and homotopies ------------------------------------------------------

def test_identity_map_passes():
    assert verify_s1_map(S1Map.identity(disk(3)))


def test_disk_inclusion_passes_and_sends_class_to_u_multiple():
    a, b = disk(1), disk(2)
    f = S1Map.inclusion(a, b)
    assert verify_s1_map(f)
    w = LaurentWindow.periodic()
    # [x-2] maps to -2 u [x-4] in degree -2
    cyc = basis_vector(a, w, -2, {(0, "x-2"): 1})
    assert induced_class_image(f, w, -2, cyc, basis_vector(b, w, -2, {(1, "x-4"): -2}))
    assert not induced_class_image(f, w, -2, cyc, basis_vector(b, w, -2, {(1, "x-4"): 2}))


def test_corrupted_inclusion_fails():
    a, b = disk(1), disk(2)
    f = S1Map.from_entries(a, b, {0: [("x0", "x0", 1), ("x-1", "x-1", 1), ("x-2", "x-2", 2)]})
    rep = verify_s1_map(f)
    assert not rep and rep.witness is not None


def test_map_grading_checked():
    a = disk(1)
    with pytest.raises(GradingMismatch):
        verify_s1_map(S1Map.from_entries(a, a, {0: [("x0", "x-1", 1)]}))


def test_zero_homotopy_between_equal_maps():
    f = S1Map.identity(disk(2))
    assert verify_homotopy(S1Homotopy(f, f))


def _random_homotopy(rng, c: S1Complex, top: int = 2):
    comps = []
    deg = [g.degree for g in c.generators]
    for i in range(top + 1):
        op = {}
        for s in range(len(c)):
            for t in range(len(c)):
                if deg[t] == deg[s] - 2 * i - 1 and rng.random() < 0.5:
                    op.setdefault(s, {})[t] = rng.randint(-3, 3)
        comps.append(op)
    return comps


def _shifted_map(f: S1Map, h_ops) -> S1Map:
    """``kappa'_k = kappa_k - sum_{i+j=k} (h_i delta_j + partial_j h_i)``."""
    src, tgt = f.source, f.target
    n_s, n_t = len(src), len(tgt)
    top = len(f.components) + len(h_ops) + max(src.top_order, tgt.top_order)
    comps = []
    for k in range(top):
        mat = [[0] * n_s for _ in range(n_t)]
        fk = f.component(k)
        for s, col in fk.items():
            for t, v in col.items():
                mat[t][s] += v
        for i in range(k + 1):
            j = k - i
            if i >= len(h_ops):
                continue
            H = ExactMatrix(n_t, n_s, {(t, s): v for s, col in h_ops[i].items() for t, v in col.items()})
            prod = H @ src.matrix(j) + tgt.matrix(j) @ H
            for (t, s), v in prod.entries.items():
                mat[t][s] -= v
        comps.append({s: {t: mat[t][s] for t in range(n_t) if mat[t][s]} for s in range(n_s)})
    return S1Map(src, tgt, tuple(comps))


def test_random_homotopy_round_trip():
    rng = random.Random(23)
    for _ in range(25):
        c, _, _ = random_s1_complex(rng, D=2)
        f = S1Map.identity(c)
        h_ops = _random_homotopy(rng, c)
        g = _shifted_map(f, h_ops)
        assert verify_s1_map(g)
        assert verify_homotopy(S1Homotopy(f, g, tuple(h_ops)))


def test_corrupted_homotopy_fails():
    # a corrupted h is rejected exactly when it no longer relates the two maps
    rng = random.Random(29)
    rejected = 0
    for _ in range(30):
        c, _, _ = random_s1_complex(rng, D=1)
        h_ops = _random_homotopy(rng, c, 0)
        if not any(h_ops[0].values()):
            continue
        f = S1Map.identity(c)
        g = _shifted_map(f, h_ops)
        s = next(s for s, col in h_ops[0].items() if col)
        t = next(iter(h_ops[0][s]))
        bad = [{k: dict(v) for k, v in h_ops[0].items()}]
        bad[0][s][t] += 1
        rep = verify_homotopy(S1Homotopy(f, g, tuple(bad)))
        still = _shifted_map(f, bad).components == g.components
        assert bool(rep) == still
        if not rep:
            assert rep.witness is not None
            rejected += 1
    assert rejected >= 5


def test_homotopy_wrong_shift():
    c = disk(1)
    f = S1Map.identity(c)
    with pytest.raises(GradingMismatch):
        verify_homotopy(S1Homotopy.from_entries(f, f, {0: [("x-1", "x0", 1)]}))


def test_homotopic_maps_agree_on_homology():
    rng = random.Random(31)
    w = LaurentWindow.periodic()
    for _ in range(10):
        c, _, _ = random_s1_complex(rng, D=2)
        f = S1Map.identity(c)
        g = _shifted_map(f, _random_homotopy(rng, c))
        for n in range(-3, 4):
            diff = assemble_map(f, w, n) - assemble_map(g, w, n)
            d_prev = assemble_equivariant_differential(c, w, n - 1)
            d_next = assemble_equivariant_differential(c, w, n)
            z = kernel_basis(d_next)
            img = diff @ z
            for col in range(img.cols):
                vec = [img.entries.get((r, col), 0) for r in range(img.rows)]
                if any(vec):
                    assert solve_preimage(d_prev, vec) is not None


def test_compose_with_identity():
    a, b = disk(1), disk(2)
    f = S1Map.inclusion(a, b)
    g = compose(S1Map.identity(b), f)
    assert g.components == f.components


# -- constructions ------------------------------------------------------------

def test_cone_of_identity_is_acyclic():
    cone = mapping_cone(S1Map.identity(disk(2)))
    for g in delta0_homology(cone, (-6, 2)).values():
        assert g.is_zero


def test_cone_of_zero_map_is_shifted_source():
    c = disk(1)
    cone = mapping_cone(S1Map(c, S1Complex.zero()))
    assert [g.degree for g in cone.generators] == [g.degree - 1 for g in c.generators]
    h = delta0_homology(cone, (-4, 2))
    h0 = delta0_homology(c, (-4, 2))
    assert all(h[n] == h0[n + 1] for n in range(-4, 2))


def test_cone_of_disk_inclusion():
    a, b = disk(1), disk(2)
    cone = mapping_cone(S1Map.inclusion(a, b))
    assert len(cone) == 8
    h = delta0_homology(cone, (-6, 2))
    nonzero = {n: g for n, g in h.items() if not g.is_zero}
    # dense oracle: delta_0 of the cone by hand
    gens = cone.generators
    deg = [g.degree for g in gens]
    d0 = cone.op(0)
    for n in range(-6, 3):
        mid = [p for p in range(len(gens)) if deg[p] == n]
        below = [p for p in range(len(gens)) if deg[p] == n - 1]
        above = [p for p in range(len(gens)) if deg[p] == n + 1]
        d_in = [[d0.get(s, {}).get(t, 0) for s in below] for t in mid]
        d_out = [[d0.get(s, {}).get(t, 0) for s in mid] for t in above]
        assert (h[n].free_rank, list(h[n].torsion)) == oracle_homology(d_in or [[]], d_out, len(mid))
    # stage 2 adds x-3, x-4; the cone sees one class per added orbit pair degree shift
    assert set(nonzero) <= {-4, -3, -2}


def test_cone_of_non_map_rejected():
    a, b = disk(1), disk(2)
    f = S1Map.from_entries(a, b, {0: [("x-1", "x-1", 1)]})
    with pytest.raises(RelationFailure):
        mapping_cone(f)


def test_cor_acyclic_complexes_vanish():
    rng = random.Random(37)
    for _ in range(15):
        c, _, _ = random_s1_complex(rng, D=2)
        cone = mapping_cone(S1Map.identity(c))
        for w in (LaurentWindow.negative(), LaurentWindow.periodic(), LaurentWindow.quotient()):
            assert all(g.is_zero for g in cyclic_homology(cone, w, (-6, 6)).values())


def test_quasi_iso_truncations_agree():
    rng = random.Random(41)
    for _ in range(10):
        c, _, _ = random_s1_complex(rng, D=2, prefix="c")
        a, _, _ = random_s1_complex(rng, D=2, prefix="e")
        s = direct_sum(c, mapping_cone(S1Map.identity(a)))
        f = S1Map.inclusion(c, s, {g.id: "a:" + g.id for g in c.generators})
        assert verify_s1_map(f)
        for m in (1, 2, 3):
            for n in (-2, -1, 0):
                w = LaurentWindow.truncation(m, n)
                assert cyclic_homology(c, w, (-4, 4)) == cyclic_homology(s, w, (-4, 4))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(WINDOWS))
def test_property_assembly_composes_to_zero(seed, w):
    c, _, _ = random_s1_complex(random.Random(seed), D=3)
    for n in range(-5, 5):
        a = assemble_equivariant_differential(c, w, n)
        b = assemble_equivariant_differential(c, w, n + 1)
        assert (b @ a).is_zero()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_property_rational_rank_matches_integral_free_rank(seed):
    c, _, _ = random_s1_complex(random.Random(seed), D=2)
    hz = cyclic_homology(c, LaurentWindow.periodic(), (-3, 3))
    hq = cyclic_homology(c.with_ring("Q"), LaurentWindow.periodic(), (-3, 3))
    assert all(hz[n].free_rank == hq[n].free_rank and not hq[n].torsion for n in hz)


def test_with_ring_keeps_structure():
    c = disk(2)
    q = c.with_ring("Q")
    assert q.ring == "Q" and q.entries(1) == c.entries(1)


def test_ring_mixing_on_maps():
    f = S1Map.inclusion(disk(1, "Q"), disk(2, "Q"))
    assert verify_s1_map(f)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cyclic_homology(disk(1, "Q"), LaurentWindow.periodic(), (0, 0))
