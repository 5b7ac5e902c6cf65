"""S^1-complexes, S^1-equivariant maps and homotopies, and their cyclic theories.

An S^1-complex is a graded free module with operations ``delta_0, delta_1, ...``
where ``delta_i`` raises degree by ``1 - 2i`` and ``sum_{i+j=k} delta_i delta_j = 0``
for every ``k``.  Grading is cohomological throughout and the formal variable
``u`` has degree 2, so a total-degree-``n`` component of a Laurent-type complex
has basis ``u^i g`` with ``deg(g) + 2i = n``.

Operations are stored column-sparse on generator positions:
``ops[i][src] == {tgt: coeff}`` means ``delta_i(g_src)`` has ``coeff`` on ``g_tgt``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .exact_linear import (
    AbelianGroup,
    ExactMatrix,
    Scalar,
    _check_ring,
    _normalize,
    homology_segment,
    solve_preimage,
)

SparseOp = Dict[int, Dict[int, Scalar]]


class GradingMismatch(ValueError):
    """An operation entry does not have the degree shift its order requires."""


class RelationFailure(ValueError):
    """An assembled structure violates its defining relation."""

    def __init__(self, message: str, report: "VerificationReport | None" = None):
        super().__init__(message)
        self.report = report


class UnboundedComplex(ValueError):
    """The degree range of a module is not finite."""


class EmptyWindow(UserWarning):
    """A truncation ``C<m, n>`` with ``m == n`` is the zero complex."""


@dataclass(frozen=True)
class Generator:
    id: str
    degree: int
    label: str = ""


@dataclass(frozen=True)
class GradedModule:
    """Finitely generated free graded module with a bounded degree range."""

    generators: Tuple[Generator, ...]
    ring: str = "Z"
    degree_min: Optional[int] = None
    degree_max: Optional[int] = None
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        _check_ring(self.ring)
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        index: Dict[str, int] = {}
        for pos, g in enumerate(gens):
            if g.id in index:
                raise ValueError(f"duplicate generator id {g.id!r}")
            if not isinstance(g.degree, int) or isinstance(g.degree, bool):
                raise UnboundedComplex(f"generator {g.id!r} has non-integer degree {g.degree!r}")
            index[g.id] = pos
        object.__setattr__(self, "index", index)
        for name in ("degree_min", "degree_max"):
            bound = getattr(self, name)
            if bound is not None and not isinstance(bound, int):
                raise UnboundedComplex(f"{name} must be a finite integer, got {bound!r}")
        degrees = [g.degree for g in gens]
        lo = self.degree_min if self.degree_min is not None else (min(degrees) if degrees else 0)
        hi = self.degree_max if self.degree_max is not None else (max(degrees) if degrees else 0)
        object.__setattr__(self, "degree_min", lo)
        object.__setattr__(self, "degree_max", hi)
        for g in gens:
            if not lo <= g.degree <= hi:
                raise ValueError(f"generator {g.id!r} of degree {g.degree} outside [{lo}, {hi}]")

    def __len__(self) -> int:
        return len(self.generators)

    def position(self, gid: str) -> int:
        try:
            return self.index[gid]
        except KeyError:
            raise KeyError(f"unknown generator {gid!r}") from None

    def degree(self, pos: int) -> int:
        return self.generators[pos].degree


def _clean_op(op: Mapping[int, Mapping[int, Scalar]], ring: str) -> SparseOp:
    out: SparseOp = {}
    for src, col in op.items():
        clean = {}
        for tgt, v in col.items():
            v = _normalize(v, ring)
            if v != 0:
                clean[tgt] = v
        if clean:
            out[src] = clean
    return out


def _apply(op: SparseOp, vec: Mapping[int, Scalar], scale: Scalar = 1,
           into: Optional[Dict[int, Scalar]] = None) -> Dict[int, Scalar]:
    out = {} if into is None else into
    for src, a in vec.items():
        for tgt, b in op.get(src, {}).items():
            out[tgt] = out.get(tgt, 0) + scale * a * b
    return out


def _nonzero(vec: Mapping[int, Scalar]) -> Dict[int, Scalar]:
    return {k: v for k, v in vec.items() if v != 0}


def _ops_from_entries(module_from: GradedModule, module_to: GradedModule,
                      entries: Mapping[int, Iterable[Tuple[str, str, Scalar]]],
                      ring: str) -> Tuple[SparseOp, ...]:
    if not entries:
        return ()
    top = max(entries)
    if min(entries) < 0:
        raise ValueError("operation orders must be non-negative")
    ops: List[SparseOp] = [dict() for _ in range(top + 1)]
    for order, items in entries.items():
        for src_id, tgt_id, coeff in items:
            s = module_from.position(src_id)
            t = module_to.position(tgt_id)
            col = ops[order].setdefault(s, {})
            col[t] = col.get(t, 0) + coeff
    return tuple(_clean_op(op, ring) for op in ops)


def _trim(ops: Sequence[SparseOp]) -> Tuple[SparseOp, ...]:
    ops = list(ops)
    while ops and not ops[-1]:
        ops.pop()
    return tuple(ops)


@dataclass(frozen=True)
class S1Complex:
    """Graded module with operations ``delta_0 .. delta_D``; ``delta_i = 0`` for ``i > D``."""

    module: GradedModule
    operations: Tuple[SparseOp, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.module)
        ops = []
        for op in self.operations:
            op = _clean_op(op, self.module.ring)
            for src, col in op.items():
                if not 0 <= src < n or any(not 0 <= t < n for t in col):
                    raise IndexError("operation refers to a generator position out of range")
            ops.append(op)
        object.__setattr__(self, "operations", _trim(ops))

    @classmethod
    def from_entries(cls, generators: Iterable[Generator],
                     entries: Mapping[int, Iterable[Tuple[str, str, Scalar]]] | None = None,
                     ring: str = "Z") -> "S1Complex":
        """Build from ``{order: [(from_id, to_id, coeff), ...]}``."""
        module = GradedModule(tuple(generators), ring)
        return cls(module, _ops_from_entries(module, module, entries or {}, ring))

    @classmethod
    def zero(cls, ring: str = "Z") -> "S1Complex":
        return cls(GradedModule((), ring))

    @property
    def ring(self) -> str:
        return self.module.ring

    @property
    def generators(self) -> Tuple[Generator, ...]:
        return self.module.generators

    @property
    def top_order(self) -> int:
        """Highest index ``D`` of a nonzero operation (-1 for the zero structure)."""
        return len(self.operations) - 1

    def op(self, i: int) -> SparseOp:
        return self.operations[i] if 0 <= i < len(self.operations) else {}

    def with_ring(self, ring: str) -> "S1Complex":
        return S1Complex(GradedModule(self.module.generators, ring, self.module.degree_min,
                                      self.module.degree_max), self.operations)

    def entries(self, i: int) -> List[Tuple[str, str, Scalar]]:
        gens = self.module.generators
        return [(gens[s].id, gens[t].id, v)
                for s, col in sorted(self.op(i).items()) for t, v in sorted(col.items())]

    def matrix(self, i: int) -> ExactMatrix:
        """``delta_i`` as a full ``len x len`` matrix on generator positions."""
        n = len(self.module)
        return ExactMatrix(n, n, {(t, s): v for s, col in self.op(i).items() for t, v in col.items()},
                           self.ring)

    def __len__(self) -> int:
        return len(self.module)


@dataclass(frozen=True)
class S1Map:
    """S^1-equivariant chain map ``kappa = (kappa_0, kappa_1, ...)``, ``kappa_i`` of degree ``-2i``."""

    source: S1Complex
    target: S1Complex
    components: Tuple[SparseOp, ...] = ()

    def __post_init__(self) -> None:
        ring = "Q" if "Q" in (self.source.ring, self.target.ring) else "Z"
        object.__setattr__(self, "components",
                           _trim([_clean_op(op, ring) for op in self.components]))

    @classmethod
    def from_entries(cls, source: S1Complex, target: S1Complex,
                     entries: Mapping[int, Iterable[Tuple[str, str, Scalar]]] | None = None
                     ) -> "S1Map":
        ring = "Q" if "Q" in (source.ring, target.ring) else "Z"
        return cls(source, target, _ops_from_entries(source.module, target.module, entries or {}, ring))

    @classmethod
    def identity(cls, c: S1Complex) -> "S1Map":
        return cls(c, c, ({p: {p: 1} for p in range(len(c))},))

    @classmethod
    def inclusion(cls, source: S1Complex, target: S1Complex,
                  correspondence: Optional[Mapping[str, str]] = None) -> "S1Map":
        """``kappa_0`` sends each source generator to its namesake (or mapped id) in target."""
        corr = correspondence or {g.id: g.id for g in source.generators}
        op = {source.module.position(s): {target.module.position(t): 1} for s, t in corr.items()}
        return cls(source, target, (op,))

    def component(self, i: int) -> SparseOp:
        return self.components[i] if 0 <= i < len(self.components) else {}

    def entries(self, i: int) -> List[Tuple[str, str, Scalar]]:
        sg, tg = self.source.generators, self.target.generators
        return [(sg[s].id, tg[t].id, v)
                for s, col in sorted(self.component(i).items()) for t, v in sorted(col.items())]


@dataclass(frozen=True)
class S1Homotopy:
    """S^1-equivariant homotopy ``h`` from ``first`` to ``second``; ``h_i`` of degree ``-2i-1``."""

    first: S1Map
    second: S1Map
    components: Tuple[SparseOp, ...] = ()

    def __post_init__(self) -> None:
        ring = "Q" if "Q" in (self.source.ring, self.target.ring) else "Z"
        object.__setattr__(self, "components",
                           _trim([_clean_op(op, ring) for op in self.components]))

    @property
    def source(self) -> S1Complex:
        return self.first.source

    @property
    def target(self) -> S1Complex:
        return self.first.target

    @classmethod
    def from_entries(cls, first: S1Map, second: S1Map,
                     entries: Mapping[int, Iterable[Tuple[str, str, Scalar]]] | None = None
                     ) -> "S1Homotopy":
        ring = "Q" if "Q" in (first.source.ring, first.target.ring) else "Z"
        return cls(first, second, _ops_from_entries(first.source.module, first.target.module,
                                                     entries or {}, ring))

    def component(self, i: int) -> SparseOp:
        return self.components[i] if 0 <= i < len(self.components) else {}


def compose(g: S1Map, f: S1Map) -> S1Map:
    """``(g o f)_k = sum_{a+b=k} g_a f_b``."""
    if f.target is not g.source and f.target != g.source:
        raise ValueError("maps are not composable")
    comps: List[SparseOp] = []
    for k in range(len(f.components) + len(g.components) - 1):
        op: SparseOp = {}
        for b in range(k + 1):
            fb = f.component(b)
            ga = g.component(k - b)
            if not fb or not ga:
                continue
            for src, col in fb.items():
                img = _apply(ga, col)
                acc = op.setdefault(src, {})
                for t, v in img.items():
                    acc[t] = acc.get(t, 0) + v
        comps.append(op)
    return S1Map(f.source, g.target, tuple(comps))


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """First failing instance of a relation: order ``k`` evaluated on ``generator``."""

    k: int
    generator: str
    residual: Dict[str, Scalar]

    def __str__(self) -> str:
        terms = ", ".join(f"{v}*{g}" for g, v in sorted(self.residual.items()))
        return f"relation k={self.k} fails on {self.generator}: residual {terms}"


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    relation: str
    witness: Optional[Witness] = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        out: dict = {"ok": self.ok, "relation": self.relation}
        if self.witness is not None:
            out["witness"] = {"k": self.witness.k, "generator": self.witness.generator,
                              "residual": {g: str(v) for g, v in sorted(self.witness.residual.items())}}
        return out


def _check_shift(name: str, ops: Sequence[SparseOp], src: GradedModule, tgt: GradedModule,
                 shift) -> None:
    for i, op in enumerate(ops):
        want = shift(i)
        for s, col in op.items():
            for t in col:
                if tgt.degree(t) != src.degree(s) + want:
                    raise GradingMismatch(
                        f"{name}_{i} entry {src.generators[s].id} -> {tgt.generators[t].id} shifts "
                        f"degree by {tgt.degree(t) - src.degree(s)}, expected {want}")


def check_grading(c: S1Complex) -> None:
    _check_shift("delta", c.operations, c.module, c.module, lambda i: 1 - 2 * i)


def verify_s1_structure(c: S1Complex) -> VerificationReport:
    """Check ``sum_{i+j=k} delta_i delta_j = 0`` for ``k = 0 .. 2D``."""
    check_grading(c)
    top = c.top_order
    gens = c.module.generators
    for k in range(2 * top + 1):
        for pos in range(len(gens)):
            acc: Dict[int, Scalar] = {}
            for j in range(k + 1):
                dj = c.op(j).get(pos)
                if dj:
                    _apply(c.op(k - j), dj, into=acc)
            acc = _nonzero(acc)
            if acc:
                return VerificationReport(False, "s1-structure", Witness(
                    k, gens[pos].id, {gens[t].id: v for t, v in acc.items()}))
    return VerificationReport(True, "s1-structure")


def _check_map_grading(f: S1Map) -> None:
    _check_shift("kappa", f.components, f.source.module, f.target.module, lambda i: -2 * i)


def verify_s1_map(f: S1Map) -> VerificationReport:
    """Check ``sum_{i+j=k} kappa_i delta_j - partial_j kappa_i = 0`` for every ``k``."""
    check_grading(f.source)
    check_grading(f.target)
    _check_map_grading(f)
    src, tgt = f.source, f.target
    top = len(f.components) - 1 + max(src.top_order, tgt.top_order)
    gens = src.module.generators
    for k in range(max(top, 0) + 1):
        for pos in range(len(gens)):
            acc: Dict[int, Scalar] = {}
            for i in range(k + 1):
                j = k - i
                dj = src.op(j).get(pos)
                if dj:
                    _apply(f.component(i), dj, into=acc)
                ki = f.component(i).get(pos)
                if ki:
                    _apply(tgt.op(j), ki, scale=-1, into=acc)
            acc = _nonzero(acc)
            if acc:
                tg = tgt.module.generators
                return VerificationReport(False, "s1-map", Witness(
                    k, gens[pos].id, {tg[t].id: v for t, v in acc.items()}))
    return VerificationReport(True, "s1-map")


def verify_homotopy(h: S1Homotopy) -> VerificationReport:
    """Check ``kappa_k - kappa'_k = sum_{i+j=k} h_i delta_j + partial_j h_i``."""
    f, g = h.first, h.second
    if (f.source != g.source) or (f.target != g.target):
        raise ValueError("homotopic maps must share source and target")
    _check_map_grading(f)
    _check_map_grading(g)
    _check_shift("h", h.components, h.source.module, h.target.module, lambda i: -2 * i - 1)
    src, tgt = h.source, h.target
    top = max(len(f.components), len(g.components),
              len(h.components) + max(src.top_order, tgt.top_order)) - 1
    gens = src.module.generators
    for k in range(max(top, 0) + 1):
        for pos in range(len(gens)):
            acc: Dict[int, Scalar] = {}
            for t, v in f.component(k).get(pos, {}).items():
                acc[t] = acc.get(t, 0) + v
            for t, v in g.component(k).get(pos, {}).items():
                acc[t] = acc.get(t, 0) - v
            for i in range(k + 1):
                j = k - i
                dj = src.op(j).get(pos)
                if dj:
                    _apply(h.component(i), dj, scale=-1, into=acc)
                hi = h.component(i).get(pos)
                if hi:
                    _apply(tgt.op(j), hi, scale=-1, into=acc)
            acc = _nonzero(acc)
            if acc:
                tg = tgt.module.generators
                return VerificationReport(False, "s1-homotopy", Witness(
                    k, gens[pos].id, {tg[t].id: v for t, v in acc.items()}))
    return VerificationReport(True, "s1-homotopy")


# ---------------------------------------------------------------------------
# Laurent windows and the equivariant differential
# ---------------------------------------------------------------------------

class Variant(str, Enum):
    NEGATIVE = "negative"
    PERIODIC = "periodic"
    QUOTIENT = "quotient"
    TRUNCATION = "truncation"


@dataclass(frozen=True)
class LaurentWindow:
    """Which powers ``u^i`` a Laurent-type complex admits.

    ``NEGATIVE`` is ``C[[u]]`` (``i >= 0``), ``PERIODIC`` is ``C((u))`` (all ``i``),
    ``QUOTIENT`` is ``C((u)) / uC[[u]]`` (``i <= 0``) and ``TRUNCATION(m, n)`` is
    ``u^n C[[u]] / u^m C[[u]]`` (``n <= i < m``).
    """

    variant: Variant
    m: Optional[int] = None
    n: Optional[int] = None
    u_degree: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.u_degree != 2:
            raise ValueError("u has degree 2")
        if self.variant is Variant.TRUNCATION:
            if self.m is None or self.n is None:
                raise ValueError("truncation needs both m and n")
            if self.m < self.n:
                raise ValueError(f"truncation C<{self.m},{self.n}> needs m >= n")

    @classmethod
    def negative(cls) -> "LaurentWindow":
        return cls(Variant.NEGATIVE)

    @classmethod
    def periodic(cls) -> "LaurentWindow":
        return cls(Variant.PERIODIC)

    @classmethod
    def quotient(cls) -> "LaurentWindow":
        return cls(Variant.QUOTIENT)

    @classmethod
    def truncation(cls, m: int, n: int) -> "LaurentWindow":
        return cls(Variant.TRUNCATION, m, n)

    @classmethod
    def parse(cls, text: str, m: Optional[int] = None, n: Optional[int] = None) -> "LaurentWindow":
        v = Variant(text.lower())
        return cls(v, m, n) if v is Variant.TRUNCATION else cls(v)

    def admits(self, i: int) -> bool:
        v = self.variant
        if v is Variant.PERIODIC:
            return True
        if v is Variant.NEGATIVE:
            return i >= 0
        if v is Variant.QUOTIENT:
            return i <= 0
        return self.n <= i < self.m

    def keeps(self, i: int) -> bool:
        """Whether a term landing at ``u^i`` survives (quotients drop high powers)."""
        v = self.variant
        if v is Variant.QUOTIENT:
            return i <= 0
        if v is Variant.TRUNCATION:
            return i < self.m
        return True

    def __str__(self) -> str:
        if self.variant is Variant.TRUNCATION:
            return f"truncation<{self.m},{self.n}>"
        return self.variant.value


Basis = Tuple[Tuple[int, int], ...]


def equivariant_basis(c: S1Complex, window: LaurentWindow, n: int) -> Basis:
    """Basis ``(i, pos)`` of the total-degree-``n`` component: ``u^i g_pos`` with ``deg + 2i = n``."""
    out = []
    for pos, g in enumerate(c.module.generators):
        diff = n - g.degree
        if diff % 2 == 0 and window.admits(diff // 2):
            out.append((diff // 2, pos))
    return tuple(out)


def _assemble(ops: Sequence[SparseOp], source: S1Complex, target: S1Complex,
              window: LaurentWindow, n: int, shift: int, ring: str,
              sign: Scalar = 1) -> ExactMatrix:
    dom = equivariant_basis(source, window, n)
    cod = equivariant_basis(target, window, n + shift)
    row = {b: r for r, b in enumerate(cod)}
    entries: Dict[Tuple[int, int], Scalar] = {}
    for col, (i, pos) in enumerate(dom):
        for j, op in enumerate(ops):
            if not window.keeps(i + j):
                continue
            for t, v in op.get(pos, {}).items():
                r = row.get((i + j, t))
                if r is None:
                    # bounded-degree bookkeeping guarantees presence for admitted powers
                    if window.admits(i + j):
                        raise AssertionError("assembled entry outside codomain basis")
                    continue
                entries[(r, col)] = entries.get((r, col), 0) + sign * v
    return ExactMatrix(len(cod), len(dom), entries, ring)


def assemble_equivariant_differential(c: S1Complex, window: LaurentWindow, n: int) -> ExactMatrix:
    """Matrix of ``delta^{S^1} = sum u^i delta_i`` from total degree ``n`` to ``n + 1``."""
    lo, hi = c.module.degree_min, c.module.degree_max
    if lo is None or hi is None:
        raise UnboundedComplex("degree range must be finite")
    check_grading(c)
    return _assemble(c.operations, c, c, window, n, 1, c.ring)


def assemble_map(f: S1Map, window: LaurentWindow, n: int) -> ExactMatrix:
    """Matrix of ``kappa^{S^1} = sum u^i kappa_i`` in total degree ``n``."""
    ring = "Q" if "Q" in (f.source.ring, f.target.ring) else "Z"
    return _assemble(f.components, f.source, f.target, window, n, 0, ring)


def assemble_homotopy(h: S1Homotopy, window: LaurentWindow, n: int) -> ExactMatrix:
    ring = "Q" if "Q" in (h.source.ring, h.target.ring) else "Z"
    return _assemble(h.components, h.source, h.target, window, n, -1, ring)


def cyclic_homology(c: S1Complex, variant: LaurentWindow,
                    degree_window: Tuple[int, int]) -> Dict[int, AbelianGroup]:
    """``H^n(window(C), delta^{S^1})`` for each ``n`` in ``degree_window`` (inclusive)."""
    lo, hi = degree_window
    if lo > hi:
        raise ValueError("empty degree window")
    mats = {n: assemble_equivariant_differential(c, variant, n) for n in range(lo - 1, hi + 1)}
    return {n: homology_segment(mats[n - 1], mats[n], c.ring) for n in range(lo, hi + 1)}


def delta0_homology(c: S1Complex, degree_window: Tuple[int, int]) -> Dict[int, AbelianGroup]:
    """Homology of the underlying cochain complex ``(C, delta_0)``."""
    return cyclic_homology(c, LaurentWindow.truncation(1, 0), degree_window)


@dataclass(frozen=True)
class TruncatedComplex:
    """Handle on ``C<m, n> = u^n C[[u]] / u^m C[[u]]``."""

    complex: S1Complex
    window: LaurentWindow

    @property
    def is_zero(self) -> bool:
        return self.window.m == self.window.n

    def basis(self, degree: int) -> Basis:
        return equivariant_basis(self.complex, self.window, degree)

    def differential(self, degree: int) -> ExactMatrix:
        return assemble_equivariant_differential(self.complex, self.window, degree)

    def homology(self, degree_window: Tuple[int, int]) -> Dict[int, AbelianGroup]:
        return cyclic_homology(self.complex, self.window, degree_window)


def truncated_complex(c: S1Complex, m: int, n: int) -> TruncatedComplex:
    if m < n:
        raise ValueError(f"truncation C<{m},{n}> needs m >= n")
    if m == n:
        warnings.warn(f"C<{m},{n}> is the zero complex", EmptyWindow, stacklevel=2)
    return TruncatedComplex(c, LaurentWindow.truncation(m, n))


def negative_by_stabilization(c: S1Complex, n: int, degree: int) -> Tuple[AbelianGroup, int]:
    """``H^degree(u^n C[[u]])`` via truncations, returning the group and the smallest stable ``m``.

    For a bounded complex every total-degree component of ``C<m, n>`` agrees with
    ``u^n C[[u]]`` in degrees ``degree - 1 .. degree + 1`` once ``m`` passes a
    bound read off the degree range, so the returned ``m`` is the point after
    which the truncated groups no longer change.
    """
    bound = max(n + 1, (degree + 1 - c.module.degree_min) // 2 + 1)
    groups = {m: cyclic_homology(c, LaurentWindow.truncation(m, n), (degree, degree))[degree]
              for m in range(n, bound + 2)}
    final = groups[bound + 1]
    m_stable = bound + 1
    for m in range(bound + 1, n - 1, -1):
        if groups[m] != final:
            break
        m_stable = m
    return final, m_stable


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------

def mapping_cone(f: S1Map) -> S1Complex:
    """Cone ``D + C[1]``: ``Delta_j(y, x) = (partial_j y + kappa_j x, -delta_j x)``.

    Target generators are prefixed ``t:``, shifted source generators ``s:``
    (their degree drops by one).
    """
    report = verify_s1_map(f)
    if not report:
        raise RelationFailure(f"cone of a non-equivariant map: {report.witness}", report)
    src, tgt = f.source, f.target
    ring = "Q" if "Q" in (src.ring, tgt.ring) else "Z"
    nt = len(tgt)
    gens = [Generator("t:" + g.id, g.degree, g.label) for g in tgt.generators]
    gens += [Generator("s:" + g.id, g.degree - 1, g.label) for g in src.generators]
    top = max(tgt.top_order, src.top_order, len(f.components) - 1)
    ops: List[SparseOp] = []
    for j in range(top + 1):
        op: SparseOp = {}
        for s, col in tgt.op(j).items():
            op[s] = dict(col)
        for s in range(len(src)):
            col: Dict[int, Scalar] = {}
            for t, v in f.component(j).get(s, {}).items():
                col[t] = col.get(t, 0) + v
            for t, v in src.op(j).get(s, {}).items():
                col[nt + t] = col.get(nt + t, 0) - v
            if col:
                op[nt + s] = col
        ops.append(op)
    cone = S1Complex(GradedModule(tuple(gens), ring), tuple(ops))
    report = verify_s1_structure(cone)
    if not report:
        raise RelationFailure(f"assembled cone fails: {report.witness}", report)
    return cone


def direct_sum(a: S1Complex, b: S1Complex, prefixes: Tuple[str, str] = ("a:", "b:")) -> S1Complex:
    ring = "Q" if "Q" in (a.ring, b.ring) else "Z"
    pa, pb = prefixes
    gens = [Generator(pa + g.id, g.degree, g.label) for g in a.generators]
    gens += [Generator(pb + g.id, g.degree, g.label) for g in b.generators]
    na = len(a)
    ops = []
    for j in range(max(a.top_order, b.top_order) + 1):
        op: SparseOp = {s: dict(col) for s, col in a.op(j).items()}
        for s, col in b.op(j).items():
            op[na + s] = {na + t: v for t, v in col.items()}
        ops.append(op)
    return S1Complex(GradedModule(tuple(gens), ring), tuple(ops))


def relabel(c: S1Complex, prefix: str) -> S1Complex:
    gens = tuple(Generator(prefix + g.id, g.degree, g.label) for g in c.generators)
    return S1Complex(GradedModule(gens, c.ring), c.operations)


def induced_class_image(f: S1Map, window: LaurentWindow, n: int, cycle: Sequence[Scalar],
                        claimed: Sequence[Scalar]) -> bool:
    """Whether ``f`` sends the class of ``cycle`` to the class of ``claimed`` in degree ``n``.

    Both vectors are in the equivariant bases of source and target; the check
    solves ``f(cycle) - claimed = delta^{S^1}(x)`` over the target ring.
    """
    image = assemble_map(f, window, n).apply(list(cycle))
    diff = [a - b for a, b in zip(image, claimed)]
    if all(v == 0 for v in diff):
        return True
    d = assemble_equivariant_differential(f.target, window, n - 1)
    return solve_preimage(d, diff, f.target.ring) is not None


def basis_vector(c: S1Complex, window: LaurentWindow, n: int,
                 terms: Mapping[Tuple[int, str], Scalar]) -> List[Scalar]:
    """Coordinates of ``sum coeff * u^i g`` given as ``{(i, generator_id): coeff}``."""
    basis = equivariant_basis(c, window, n)
    pos = {b: k for k, b in enumerate(basis)}
    vec: List[Scalar] = [0] * len(basis)
    for (i, gid), v in terms.items():
        key = (i, c.module.position(gid))
        if key not in pos:
            raise KeyError(f"u^{i} {gid} is not in the degree-{n} basis")
        vec[pos[key]] += v
    return vec
