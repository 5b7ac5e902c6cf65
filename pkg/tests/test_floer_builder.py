from __future__ import annotations

import math

import pytest
import sympy

from cyclic_s1.exact_linear import AbelianGroup
from cyclic_s1.filtration_ss import FiltrationViolation
from cyclic_s1.floer_builder import (
    CatalogError,
    HamiltonianStage,
    HomotopyClassViolation,
    InclusionSpec,
    MapRelationFailure,
    OrbitDescriptor,
    OrbitKind,
    Parity,
    StageSequence,
    annulus_stage,
    attach_action_filtration,
    autonomous_action,
    build_continuation,
    build_stage_complex,
    compare,
    disk_stage,
    filtration_levels,
    midpoint_thresholds,
    model_sequence,
)
from cyclic_s1.s1_complex import (
    GradingMismatch,
    LaurentWindow,
    RelationFailure,
    S1Complex,
    basis_vector,
    cyclic_homology,
    delta0_homology,
    induced_class_image,
    verify_s1_structure,
)

PI = sympy.pi


def good(oid, k, hat, cls="0", sign=1, action=None):
    return OrbitDescriptor(oid, OrbitKind.NONCONSTANT, action if action is not None else autonomous_action(k * PI),
                           grading_hat=hat, grading_check=hat - 1, homotopy_class=cls,
                           multiplicity=k, sign_bv=sign)


def bad(oid, k, hat, sign=1):
    return OrbitDescriptor(oid, OrbitKind.NONCONSTANT, autonomous_action(k * PI), grading_hat=hat,
                           grading_check=hat - 1, multiplicity=k, parity=Parity.BAD, sign_d=sign)


def stage(*orbits, slope=None, **kw):
    return HamiltonianStage(slope if slope is not None else 20 * PI + 1, tuple(orbits), **kw)


# -- actions ------------------------------------------------------------------

def test_action_formula_numeric():
    for l in (PI, 2 * PI, sympy.Rational(3, 2)):
        assert math.isclose(float(autonomous_action(l)), -float(l) ** 2 / 2 - float(l))


def test_midpoint_thresholds_decrease():
    ts = midpoint_thresholds([0, PI, 2 * PI, 3 * PI])
    assert all(compare(a, b) > 0 for a, b in zip(ts, ts[1:]))
    assert math.isclose(float(ts[0]), -(math.pi / 2) ** 2 / 2 - math.pi / 2)


def test_compare_exact_ties():
    assert compare(PI ** 2 / 2 + PI, PI * (PI + 2) / 2) == 0
    assert compare(PI, sympy.Rational(355, 113)) == -1


def test_floats_rejected():
    with pytest.raises(CatalogError):
        OrbitDescriptor("a", OrbitKind.NONCONSTANT, 1.5, grading_hat=1, grading_check=0)


# -- orbit and stage invariants ----------------------------------------------

def test_grading_pair_enforced():
    with pytest.raises(GradingMismatch):
        OrbitDescriptor("a", OrbitKind.NONCONSTANT, -1, grading_hat=3, grading_check=1)


def test_bad_needs_even_multiplicity():
    with pytest.raises(CatalogError):
        bad("b", 3, 1)


def test_constant_needs_index():
    with pytest.raises(CatalogError):
        OrbitDescriptor("c", OrbitKind.CONSTANT)


def test_duplicate_action_in_class_rejected():
    with pytest.raises(CatalogError):
        stage(good("a", 1, 1), good("b", 1, 3))


def test_equal_actions_in_different_classes_allowed():
    st = stage(good("a", 1, 1, cls="1"), good("b", 1, 1, cls="-1"))
    assert len(build_stage_complex(st)) == 4


def test_slope_bound():
    with pytest.raises(CatalogError):
        stage(good("a", 3, 1), slope=PI + 1)


# -- the local rules ----------------------------------------------------------

def test_empty_stage_is_zero_complex():
    c = build_stage_complex(stage())
    assert len(c) == 0 and c.top_order == -1
    assert c == S1Complex.zero()


def test_good_and_bad_rules_readback():
    st = stage(good("a", 3, 5, sign=-1), bad("b", 4, 9, sign=-1))
    c = build_stage_complex(st)
    assert c.entries(0) == [("b.check", "b.hat", -2)]
    assert c.entries(1) == [("a.hat", "a.check", -3)]


@pytest.mark.parametrize("k", range(1, 7))
@pytest.mark.parametrize("sign", (1, -1))
def test_isolated_good_pair(k, sign):
    st = stage(good("a", k, 1, sign=sign))
    hq = cyclic_homology(build_stage_complex(st, "Q"), LaurentWindow.periodic(), (-3, 3))
    hz = cyclic_homology(build_stage_complex(st, "Z"), LaurentWindow.periodic(), (-3, 3))
    assert all(g.free_rank == 0 for g in hq.values())
    for n in range(-3, 4):
        want = AbelianGroup(0, (k,)) if (n % 2 == 0 and k > 1) else AbelianGroup()
        assert hz[n] == want


@pytest.mark.parametrize("k", (2, 4, 6))
@pytest.mark.parametrize("sign", (1, -1))
def test_isolated_bad_pair(k, sign):
    st = stage(bad("b", k, 1, sign=sign))
    hq = cyclic_homology(build_stage_complex(st, "Q"), LaurentWindow.periodic(), (-3, 3))
    hz = cyclic_homology(build_stage_complex(st, "Z"), LaurentWindow.periodic(), (-3, 3))
    assert all(g.is_zero for g in hq.values())
    for n in range(-3, 4):
        assert hz[n] == (AbelianGroup(0, (2,)) if n % 2 else AbelianGroup())
    d0 = delta0_homology(build_stage_complex(st, "Z"), (-1, 2))
    assert d0[1] == AbelianGroup(0, (2,))
    assert all(g.is_zero for g in delta0_homology(build_stage_complex(st, "Q"), (-1, 2)).values())


def test_extra_entry_crossing_classes():
    st = stage(good("a", 1, 1, cls="1"), good("b", 2, 2, cls="2"), extra_d=[("a.hat", "b.check", 1)])
    with pytest.raises(HomotopyClassViolation):
        build_stage_complex(st)


def test_inconsistent_extras_rejected():
    c0 = OrbitDescriptor("p", OrbitKind.CONSTANT, morse_index=0)
    c1 = OrbitDescriptor("q", OrbitKind.CONSTANT, morse_index=1)
    c2 = OrbitDescriptor("r", OrbitKind.CONSTANT, morse_index=2)
    st = stage(c0, c1, c2, extra_d=[("p", "q", 1), ("q", "r", 1)])
    with pytest.raises(RelationFailure):
        build_stage_complex(st)


def test_extra_with_wrong_degree():
    c0 = OrbitDescriptor("p", OrbitKind.CONSTANT, morse_index=0)
    c1 = OrbitDescriptor("q", OrbitKind.CONSTANT, morse_index=2)
    with pytest.raises(GradingMismatch):
        build_stage_complex(stage(c0, c1, extra_d=[("p", "q", 1)]))


def test_unknown_generator_in_extra():
    with pytest.raises(CatalogError):
        build_stage_complex(stage(good("a", 1, 1), extra_d=[("a.hat", "nope", 1)]))


# -- bundled models against hand-written complexes ---------------------------

def _disk_entries(k):
    name = {"x0": "x0"}
    for j in range(1, k + 1):
        name[f"g{j}.hat"] = f"x{-2 * j + 1}"
        name[f"g{j}.check"] = f"x{-2 * j}"
    return name


@pytest.mark.parametrize("k", range(1, 6))
def test_disk_stage_matches_formula(k):
    c = build_stage_complex(disk_stage(k))
    name = _disk_entries(k)
    d0 = {(name[a], name[b], v) for a, b, v in c.entries(0)}
    d1 = {(name[a], name[b], v) for a, b, v in c.entries(1)}
    assert d0 == {(f"x{-2 * j + 1}", f"x{-2 * j + 2}", 1) for j in range(1, k + 1)}
    assert d1 == {(f"x{-2 * j + 1}", f"x{-2 * j}", j) for j in range(1, k + 1)}
    degrees = {name[g.id]: g.degree for g in c.generators}
    assert all(int(gid[1:]) == d for gid, d in degrees.items())


@pytest.mark.parametrize("i", range(1, 5))
def test_annulus_stage_matches_formula(i):
    c = build_stage_complex(annulus_stage(i))
    assert c.entries(0) == []
    assert set(c.entries(1)) == {(f"g{k}.hat", f"g{k}.check", k) for k in range(-i, i + 1) if k}
    deg = {g.id: g.degree for g in c.generators}
    assert deg["g0.check"] == 0 and deg["g0.hat"] == 1
    labels = {g.id: g.label for g in c.generators}
    assert all(labels[f"g{k}.hat"] == str(k) for k in range(-i, i + 1) if k)


def test_block_structure_by_class():
    c = build_stage_complex(annulus_stage(3))
    labels = {g.id: g.label for g in c.generators}
    for order in range(c.top_order + 1):
        for a, b, _ in c.entries(order):
            assert labels[a] == labels[b]


# -- filtration ---------------------------------------------------------------

def test_disk_stage_two_levels():
    st = disk_stage(2)
    fc = attach_action_filtration(build_stage_complex(st), st)
    assert fc.level == {"x0": 0, "g1.hat": 1, "g1.check": 1, "g2.hat": 2, "g2.check": 2}


def test_levels_against_float_oracle():
    for k in range(1, 6):
        st = disk_stage(k)
        lv = filtration_levels(st, st.thresholds)
        ts = [-(x * math.pi) ** 2 / 2 - x * math.pi for x in (j + 0.5 for j in range(k))]
        for o in st.orbits:
            a = 0.0 if o.kind is OrbitKind.CONSTANT else float(o.action)
            want = next((j for j, t in enumerate(ts) if a >= t), len(ts))
            assert all(lv[g] == want for g in o.generator_ids)


def test_filtration_violation_names_entry():
    st = disk_stage(2)
    c = build_stage_complex(st)
    bad_c = S1Complex.from_entries(c.generators, {0: c.entries(0) + [("g1.check", "g2.hat", 1)]})
    with pytest.raises((FiltrationViolation, GradingMismatch)):
        attach_action_filtration(bad_c, st)
    # a degree-consistent raise: x0-level target reached from level 0 is fine, level 2 is not
    p = OrbitDescriptor("p", OrbitKind.CONSTANT, morse_index=0)
    q = OrbitDescriptor("q", OrbitKind.CONSTANT, morse_index=1, morse_value=-100)
    st2 = stage(p, q, extra_d=[("p", "q", 1)], thresholds=(-1,))
    with pytest.raises(FiltrationViolation) as err:
        attach_action_filtration(build_stage_complex(st2), st2)
    assert err.value.entry == ("delta", 0, "p", "q")


def test_constants_only_single_level():
    p = OrbitDescriptor("p", OrbitKind.CONSTANT, morse_index=0)
    q = OrbitDescriptor("q", OrbitKind.CONSTANT, morse_index=1)
    st = stage(p, q, thresholds=(-1, -2))
    assert set(attach_action_filtration(build_stage_complex(st), st).level.values()) == {0}


def test_thresholds_must_decrease():
    with pytest.raises(CatalogError):
        filtration_levels(disk_stage(1), [-2, -1])


# -- continuation maps --------------------------------------------------------

def test_identity_continuation():
    seq = StageSequence([disk_stage(2), disk_stage(2)])
    f = build_continuation(seq, 0)
    assert set(f.entries(0)) == {(g.id, g.id, 1) for g in f.source.generators}
    assert len(f.components) == 1


@pytest.mark.parametrize("k", range(1, 5))
def test_disk_continuation_sends_class_to_u_multiple(k):
    seq = model_sequence("disk", k + 1)
    f = build_continuation(seq, k - 1)
    w = LaurentWindow.periodic()
    n = -2 * k
    src, tgt = f.source, f.target
    cyc = basis_vector(src, w, n, {(0, f"g{k}.check"): 1})
    claim = basis_vector(tgt, w, n, {(1, f"g{k + 1}.check"): -(k + 1)})
    assert induced_class_image(f, w, n, cyc, claim)


def test_annulus_continuation_is_inclusion_of_summands():
    seq = model_sequence("annulus", 3)
    f = build_continuation(seq, 1)
    w = LaurentWindow.periodic()
    src, tgt = f.source, f.target
    for k in (-2, -1, 1, 2):
        cyc = basis_vector(src, w, 0, {(0, f"g{k}.check"): 1})
        assert induced_class_image(f, w, 0, cyc, basis_vector(tgt, w, 0, {(0, f"g{k}.check"): 1}))


def test_continuation_class_crossing():
    a, b = annulus_stage(1), annulus_stage(2)
    seq = StageSequence([a, b], [InclusionSpec({o.id: o.id for o in a.orbits},
                                               {0: (("g1.hat", "g2.hat", 1),)})])
    with pytest.raises(HomotopyClassViolation):
        build_continuation(seq, 0)


def test_continuation_relation_failure():
    a, b = annulus_stage(1), annulus_stage(1)
    seq = StageSequence([a, b], [InclusionSpec({o.id: o.id for o in a.orbits},
                                               {0: (("g1.hat", "g1.hat", 1),)})])
    with pytest.raises(MapRelationFailure) as err:
        build_continuation(seq, 0)
    assert err.value.report.witness is not None


def test_continuation_filtration_violation():
    p = OrbitDescriptor("p", OrbitKind.CONSTANT, morse_index=2)
    r = OrbitDescriptor("r", OrbitKind.CONSTANT, morse_index=0, morse_value=-10)
    a = stage(p, thresholds=(-5,))
    b = stage(p, r, thresholds=(-5,), slope=21 * PI + 1)
    seq = StageSequence([a, b], [InclusionSpec({"p": "p"}, {1: (("p", "r", 1),)})])
    with pytest.raises(FiltrationViolation):
        build_continuation(seq, 0)
    assert build_continuation(seq, 0, check_filtration=False)


def test_sequence_invariants():
    with pytest.raises(CatalogError):
        StageSequence([disk_stage(2), disk_stage(1)])
    with pytest.raises(CatalogError):
        StageSequence([disk_stage(1), disk_stage(2)], [InclusionSpec({"x0": "x0"})])


def test_stage_complexes_are_cached_per_ring():
    seq = model_sequence("disk", 2)
    assert seq.complex(0) is seq.complex(0)
    assert seq.complex(0, "Q").ring == "Q"
    assert verify_s1_structure(seq.complex(1))
