"""Build S^1-complexes from orbit catalogs using the local differential rules.

Each nonconstant orbit of multiplicity ``k`` contributes two generators
``<id>.hat`` (degree ``|hat|``) and ``<id>.check`` (degree ``|hat| - 1``).

* good orbit: ``delta_1(hat) = sign_bv * k * check`` and no local ``delta_0``
* bad orbit (``k`` even): ``delta_0(check) = sign_d * 2 * hat`` and no local ``delta_1``

Constant orbits contribute one generator at their Morse index.  Everything
else (Morse differential, cross-orbit Floer terms) comes in as explicit
``extra_d`` / ``extra_bv`` entries.  Actions are exact symbolic numbers so
catalogs may use ``pi``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import sympy

from .exact_linear import Scalar
from .filtration_ss import FilteredS1Complex, FiltrationViolation
from .s1_complex import (
    Generator,
    GradedModule,
    GradingMismatch,
    RelationFailure,
    S1Complex,
    S1Map,
    check_grading,
    verify_s1_map,
    verify_s1_structure,
)

Entry = Tuple[str, str, Scalar]

__all__ = [
    "FiltrationViolation",
    "HamiltonianStage",
    "HomotopyClassViolation",
    "InclusionSpec",
    "MapRelationFailure",
    "OrbitDescriptor",
    "OrbitKind",
    "Parity",
    "StageSequence",
    "attach_action_filtration",
    "autonomous_action",
    "build_continuation",
    "build_stage_complex",
    "midpoint_thresholds",
]


class HomotopyClassViolation(ValueError):
    """An entry connects generators in different free homotopy classes."""


class MapRelationFailure(RelationFailure):
    """A continuation map fails the equivariant chain-map relation."""


class CatalogError(ValueError):
    """A catalog entry violates the orbit or stage invariants."""


class OrbitKind(str, Enum):
    CONSTANT = "constant"
    NONCONSTANT = "nonconstant"


class Parity(str, Enum):
    GOOD = "good"
    BAD = "bad"


def exact_number(value) -> sympy.Expr:
    """Parse an exact real number; floats are rejected."""
    if isinstance(value, float):
        raise CatalogError(f"inexact number {value!r}; use a string such as '1/2' or 'pi'")
    if isinstance(value, str):
        expr = sympy.sympify(value, rational=True)
    else:
        expr = sympy.sympify(value)
    if expr.free_symbols or not expr.is_real:
        raise CatalogError(f"{value!r} is not an exact real number")
    return sympy.nsimplify(expr) if expr.is_Float else expr


def compare(a, b) -> int:
    """Sign of ``a - b`` for exact numbers.

    Differences are expanded first; for polynomials in ``pi`` with rational
    coefficients an expansion is zero exactly when the value is, so the sign of
    a nonzero difference is then safely read off a high-precision evaluation.
    """
    diff = sympy.expand(a - b)
    if diff == 0:
        return 0
    positive = diff.is_positive
    if positive is None:
        value = diff.evalf(60)
        if value == 0:
            raise CatalogError(f"cannot decide the sign of {diff}")
        positive = bool(value > 0)
    return 1 if positive else -1


def autonomous_action(period) -> sympy.Expr:
    """Action ``-l^2/2 - l`` of the orbit of period ``l``."""
    l = exact_number(period)
    return sympy.expand(-l ** 2 / 2 - l)


def midpoint_thresholds(periods: Sequence) -> List[sympy.Expr]:
    """``a_tau`` at midpoints between consecutive periods (``periods[0]`` is usually 0)."""
    ps = [exact_number(p) for p in periods]
    return [autonomous_action((a + b) / 2) for a, b in zip(ps, ps[1:])]


@dataclass(frozen=True)
class OrbitDescriptor:
    id: str
    kind: OrbitKind
    action: sympy.Expr = sympy.Integer(0)
    grading_hat: Optional[int] = None
    grading_check: Optional[int] = None
    homotopy_class: str = "0"
    multiplicity: int = 1
    parity: Parity = Parity.GOOD
    sign_d: int = 1
    sign_bv: int = 1
    morse_index: Optional[int] = None
    morse_value: sympy.Expr = sympy.Integer(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", OrbitKind(self.kind))
        object.__setattr__(self, "parity", Parity(self.parity))
        object.__setattr__(self, "action", exact_number(self.action))
        object.__setattr__(self, "morse_value", exact_number(self.morse_value))
        object.__setattr__(self, "homotopy_class", str(self.homotopy_class))
        if self.sign_d not in (1, -1) or self.sign_bv not in (1, -1):
            raise CatalogError(f"orbit {self.id}: signs must be +1 or -1")
        if self.kind is OrbitKind.CONSTANT:
            if self.morse_index is None:
                raise CatalogError(f"constant orbit {self.id} needs a Morse index")
            return
        if self.grading_hat is None or self.grading_check is None:
            raise CatalogError(f"orbit {self.id} needs both gradings")
        if self.grading_hat != self.grading_check + 1:
            raise GradingMismatch(f"orbit {self.id}: |hat| = {self.grading_hat} but "
                                  f"|check| + 1 = {self.grading_check + 1}")
        if not isinstance(self.multiplicity, int) or self.multiplicity < 1:
            raise CatalogError(f"orbit {self.id}: multiplicity must be a positive integer")
        if self.parity is Parity.BAD and self.multiplicity % 2:
            raise CatalogError(f"orbit {self.id}: bad orbits have even multiplicity")

    @property
    def generator_ids(self) -> Tuple[str, ...]:
        if self.kind is OrbitKind.CONSTANT:
            return (self.id,)
        return (f"{self.id}.hat", f"{self.id}.check")

    def generators(self) -> List[Generator]:
        if self.kind is OrbitKind.CONSTANT:
            return [Generator(self.id, self.morse_index, self.homotopy_class)]
        return [Generator(f"{self.id}.hat", self.grading_hat, self.homotopy_class),
                Generator(f"{self.id}.check", self.grading_check, self.homotopy_class)]

    def effective_action(self) -> sympy.Expr:
        return self.morse_value if self.kind is OrbitKind.CONSTANT else self.action


@dataclass(frozen=True)
class HamiltonianStage:
    slope: sympy.Expr
    orbits: Tuple[OrbitDescriptor, ...] = ()
    extra_d: Tuple[Entry, ...] = ()
    extra_bv: Tuple[Entry, ...] = ()
    thresholds: Optional[Tuple[sympy.Expr, ...]] = None
    check_slope: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", exact_number(self.slope))
        object.__setattr__(self, "orbits", tuple(self.orbits))
        object.__setattr__(self, "extra_d", tuple(tuple(e) for e in self.extra_d))
        object.__setattr__(self, "extra_bv", tuple(tuple(e) for e in self.extra_bv))
        if self.thresholds is not None:
            object.__setattr__(self, "thresholds", tuple(exact_number(t) for t in self.thresholds))
        self.validate()

    def validate(self) -> None:
        ids = set()
        for o in self.orbits:
            if o.id in ids:
                raise CatalogError(f"duplicate orbit id {o.id!r}")
            ids.add(o.id)
        # within one class two orbits sharing an action would not be separated by the filtration
        seen: Dict[Tuple[str, sympy.Expr], str] = {}
        bound = autonomous_action(self.slope)
        for o in self.orbits:
            if o.kind is not OrbitKind.NONCONSTANT:
                continue
            key = (o.homotopy_class, o.action)
            if key in seen:
                raise CatalogError(f"orbits {seen[key]} and {o.id} share action {o.action} "
                                   f"in class {o.homotopy_class}")
            seen[key] = o.id
            if self.check_slope and compare(o.action, bound) <= 0:
                raise CatalogError(f"orbit {o.id} has action {o.action} not above the slope "
                                   f"bound {bound}")

    def generator_ids(self) -> List[str]:
        return [gid for o in self.orbits for gid in o.generator_ids]

    def generator_action(self) -> Dict[str, sympy.Expr]:
        return {gid: o.effective_action() for o in self.orbits for gid in o.generator_ids}

    def orbit(self, oid: str) -> OrbitDescriptor:
        for o in self.orbits:
            if o.id == oid:
                return o
        raise KeyError(f"unknown orbit {oid!r}")


def _class_check(label: Mapping[str, str], entries: Iterable[Entry], what: str) -> None:
    for src, tgt, _ in entries:
        for gid in (src, tgt):
            if gid not in label:
                raise CatalogError(f"{what} entry refers to unknown generator {gid!r}")
        if label[src] != label[tgt]:
            raise HomotopyClassViolation(
                f"{what} entry {src} -> {tgt} crosses classes {label[src]!r} -> {label[tgt]!r}")


def build_stage_complex(stage: HamiltonianStage, ring: str = "Z") -> S1Complex:
    gens: List[Generator] = [g for o in stage.orbits for g in o.generators()]
    label = {g.id: g.label for g in gens}
    _class_check(label, stage.extra_d, "extra_d")
    _class_check(label, stage.extra_bv, "extra_bv")
    d0: List[Entry] = []
    d1: List[Entry] = []
    for o in stage.orbits:
        if o.kind is OrbitKind.CONSTANT:
            continue
        hat, check = o.generator_ids
        if o.parity is Parity.GOOD:
            d1.append((hat, check, o.sign_bv * o.multiplicity))
        else:
            d0.append((check, hat, o.sign_d * 2))
    d0 += list(stage.extra_d)
    d1 += list(stage.extra_bv)
    c = S1Complex.from_entries(gens, {0: d0, 1: d1}, ring)
    check_grading(c)
    report = verify_s1_structure(c)
    if not report:
        raise RelationFailure(f"stage complex fails: {report.witness}", report)
    return c


def filtration_levels(stage: HamiltonianStage, thresholds: Sequence) -> Dict[str, int]:
    """Level of each generator: the first ``j`` with ``action >= thresholds[j]``."""
    ts = [exact_number(t) for t in thresholds]
    for a, b in zip(ts, ts[1:]):
        if compare(a, b) <= 0:
            raise CatalogError("thresholds must be strictly decreasing")
    out = {}
    for gid, act in stage.generator_action().items():
        level = len(ts)
        for j, t in enumerate(ts):
            if compare(act, t) >= 0:
                level = j
                break
        out[gid] = level
    return out


def attach_action_filtration(c: S1Complex, stage: HamiltonianStage,
                             thresholds: Optional[Sequence] = None) -> FilteredS1Complex:
    ts = thresholds if thresholds is not None else stage.thresholds
    if ts is None:
        raise CatalogError("no thresholds given and the stage declares none")
    return FilteredS1Complex(c, filtration_levels(stage, ts))


@dataclass(frozen=True)
class InclusionSpec:
    """Orbit correspondence from one stage to the next plus optional map corrections."""

    orbits: Mapping[str, str]
    kappa: Mapping[int, Tuple[Entry, ...]] = field(default_factory=dict)


@dataclass
class StageSequence:
    stages: List[HamiltonianStage]
    inclusions: List[InclusionSpec] = field(default_factory=list)
    ring: str = "Z"
    _cache: Dict[Tuple[int, str], S1Complex] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.inclusions:
            self.inclusions = [InclusionSpec({o.id: o.id for o in a.orbits})
                               for a in self.stages[:-1]]
        if len(self.inclusions) != max(len(self.stages) - 1, 0):
            raise CatalogError("need one inclusion per consecutive pair of stages")
        for i, (a, b) in enumerate(zip(self.stages, self.stages[1:])):
            if compare(b.slope, a.slope) < 0:
                raise CatalogError(f"slopes must increase: stage {i} -> {i + 1}")
            ids_b = {o.id for o in b.orbits}
            corr = self.inclusions[i].orbits
            for o in a.orbits:
                if corr.get(o.id) not in ids_b:
                    raise CatalogError(f"orbit {o.id} of stage {i} has no image in stage {i + 1}")

    def __len__(self) -> int:
        return len(self.stages)

    def complex(self, i: int, ring: Optional[str] = None) -> S1Complex:
        ring = ring or self.ring
        key = (i, ring)
        if key not in self._cache:
            self._cache[key] = build_stage_complex(self.stages[i], ring)
        return self._cache[key]

    def filtered(self, i: int, ring: Optional[str] = None) -> FilteredS1Complex:
        return attach_action_filtration(self.complex(i, ring), self.stages[i])


def build_continuation(seq: StageSequence, i: int, ring: Optional[str] = None,
                       check_filtration: bool = True) -> S1Map:
    """Map from stage ``i`` to stage ``i + 1``: inclusion on orbits plus declared corrections."""
    if not 0 <= i < len(seq) - 1:
        raise IndexError(f"no continuation out of stage {i}")
    src_stage, tgt_stage = seq.stages[i], seq.stages[i + 1]
    src, tgt = seq.complex(i, ring), seq.complex(i + 1, ring)
    inc = seq.inclusions[i]
    k0: List[Entry] = []
    for o in src_stage.orbits:
        image = tgt_stage.orbit(inc.orbits[o.id])
        if image.kind is not o.kind:
            raise CatalogError(f"orbit {o.id} changes kind under inclusion")
        for a, b in zip(o.generator_ids, image.generator_ids):
            k0.append((a, b, 1))
    entries: Dict[int, List[Entry]] = {0: k0}
    for order, extra in inc.kappa.items():
        entries.setdefault(int(order), []).extend(extra)
    label_s = {g.id: g.label for g in src.generators}
    label_t = {g.id: g.label for g in tgt.generators}
    for order, items in entries.items():
        for a, b, _ in items:
            if a not in label_s or b not in label_t:
                raise CatalogError(f"kappa_{order} entry {a} -> {b} names an unknown generator")
            if label_s[a] != label_t[b]:
                raise HomotopyClassViolation(f"kappa_{order} entry {a} -> {b} crosses classes")
    f = S1Map.from_entries(src, tgt, entries)
    report = verify_s1_map(f)
    if not report:
        raise MapRelationFailure(f"continuation {i} -> {i + 1} fails: {report.witness}", report)
    if check_filtration and src_stage.thresholds is not None and tgt_stage.thresholds is not None:
        ls = filtration_levels(src_stage, src_stage.thresholds)
        lt = filtration_levels(tgt_stage, tgt_stage.thresholds)
        for order in range(len(f.components)):
            for a, b, _ in f.entries(order):
                if lt[b] > ls[a]:
                    raise FiltrationViolation(
                        f"kappa_{order} entry {a} -> {b} raises level {ls[a]} to {lt[b]}",
                        ("kappa", order, a, b))
    return f


# ---------------------------------------------------------------------------
# Bundled model catalogs
# ---------------------------------------------------------------------------

def disk_stage(k: int) -> HamiltonianStage:
    """Stage of slope ``k pi + 1``: a minimum ``x0`` and orbits ``g1 .. gk``."""
    pi = sympy.pi
    orbits = [OrbitDescriptor("x0", OrbitKind.CONSTANT, morse_index=0)]
    extra_d: List[Entry] = []
    for j in range(1, k + 1):
        orbits.append(OrbitDescriptor(f"g{j}", OrbitKind.NONCONSTANT, autonomous_action(j * pi),
                                      grading_hat=-2 * j + 1, grading_check=-2 * j,
                                      multiplicity=j))
        below = "x0" if j == 1 else f"g{j - 1}.check"
        extra_d.append((f"g{j}.hat", below, 1))
    return HamiltonianStage(k * pi + 1, tuple(orbits), tuple(extra_d),
                            thresholds=tuple(midpoint_thresholds([j * pi for j in range(k + 1)])))


def annulus_stage(i: int) -> HamiltonianStage:
    """Stage of slope ``i pi + 1``: Morse constants at degrees 0, 1 and orbits ``g+-1 .. g+-i``."""
    pi = sympy.pi
    orbits = [OrbitDescriptor("g0.check", OrbitKind.CONSTANT, morse_index=0),
              OrbitDescriptor("g0.hat", OrbitKind.CONSTANT, morse_index=1)]
    for k in range(-i, i + 1):
        if k == 0:
            continue
        orbits.append(OrbitDescriptor(f"g{k}", OrbitKind.NONCONSTANT, autonomous_action(abs(k) * pi),
                                      grading_hat=1, grading_check=0, homotopy_class=str(k),
                                      multiplicity=abs(k), sign_bv=1 if k > 0 else -1))
    return HamiltonianStage(i * pi + 1, tuple(orbits),
                            thresholds=tuple(midpoint_thresholds([j * pi for j in range(i + 1)])))


def model_sequence(name: str, stages: int, ring: str = "Z") -> StageSequence:
    build = {"disk": disk_stage, "annulus": annulus_stage}[name]
    return StageSequence([build(k) for k in range(1, stages + 1)], ring=ring)
