"""Direct systems of S^1-complexes, their colimits, and the mapping telescope.

The telescope of ``C_1 -> C_2 -> ...`` has generators ``a`` and ``q a`` for
every stage generator ``a`` (``q`` of degree -1, ``q^2 = 0``) and operations

    d^_j(a)  = e(a) delta_j(a)
    d^_j(qb) = e(b) (q delta_j(b) + kappa_j(b) - [j = 0] b)

with ``e(x) = (-1)^deg(x)``.  Telescope generator ids are ``s<i>:<id>`` and
``q.s<i>:<id>`` with stages numbered from 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exact_linear import (
    AbelianGroup,
    ExactMatrix,
    kernel_basis,
    rank,
    solve_preimage,
)
from .s1_complex import (
    Generator,
    GradedModule,
    LaurentWindow,
    RelationFailure,
    S1Complex,
    S1Homotopy,
    S1Map,
    SparseOp,
    VerificationReport,
    assemble_equivariant_differential,
    assemble_map,
    compose,
    cyclic_homology,
    verify_homotopy,
    verify_s1_map,
    verify_s1_structure,
)


class NonStabilized(RuntimeError):
    def __init__(self, degrees: Sequence[int]):
        super().__init__(f"colimit ranks still changing in degrees {list(degrees)}; raise max_stage")
        self.degrees = list(degrees)


@dataclass(frozen=True)
class DirectSystem:
    stages: Tuple[S1Complex, ...]
    maps: Tuple[S1Map, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "maps", tuple(self.maps))
        if len(self.maps) != max(len(self.stages) - 1, 0):
            raise ValueError("a direct system needs one map per consecutive pair of stages")
        for i, f in enumerate(self.maps):
            if f.source != self.stages[i] or f.target != self.stages[i + 1]:
                raise ValueError(f"map {i} does not go from stage {i + 1} to stage {i + 2}")
            report = verify_s1_map(f)
            if not report:
                raise RelationFailure(f"link {i + 1} -> {i + 2}: {report.witness}", report)

    def __len__(self) -> int:
        return len(self.stages)

    @property
    def ring(self) -> str:
        return "Q" if any(c.ring == "Q" for c in self.stages) else "Z"

    def composite(self, s: int, t: int) -> S1Map:
        """Map from stage ``s`` to stage ``t`` (0-based, ``s <= t``)."""
        if s > t:
            raise ValueError("composites only go forward")
        f = S1Map.identity(self.stages[s])
        for k in range(s, t):
            f = compose(self.maps[k], f)
        return f

    def truncate(self, n: int) -> "DirectSystem":
        return DirectSystem(self.stages[:n], self.maps[:max(n - 1, 0)])

    def with_ring(self, ring: str) -> "DirectSystem":
        stages = [c.with_ring(ring) for c in self.stages]
        maps = [S1Map(stages[i], stages[i + 1], f.components) for i, f in enumerate(self.maps)]
        return DirectSystem(tuple(stages), tuple(maps))

    @classmethod
    def constant(cls, c: S1Complex, n: int) -> "DirectSystem":
        return cls(tuple([c] * n), tuple(S1Map.identity(c) for _ in range(n - 1)))


@dataclass(frozen=True)
class ColimitResult:
    """Rational colimit per degree plus per-stage groups over the system's ring.

    Stage numbers are 1-based.  ``stable_from[n]`` is the first stage from which
    every image rank between later stages equals ``dimension[n]``.
    """

    degrees: Tuple[int, int]
    variant: str
    max_stage: int
    dimension: Dict[int, Optional[int]]
    stable_from: Dict[int, Optional[int]]
    stage_groups: Dict[int, List[AbelianGroup]]
    image_ranks: Dict[int, Dict[Tuple[int, int], int]] = field(default_factory=dict)

    @property
    def stabilized(self) -> Dict[int, bool]:
        return {n: d is not None for n, d in self.dimension.items()}

    def raise_for_unstable(self) -> None:
        bad = [n for n, ok in self.stabilized.items() if not ok]
        if bad:
            raise NonStabilized(bad)

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "degrees": list(self.degrees),
            "max_stage": self.max_stage,
            "colimit": [
                {"degree": n, "stabilized": self.dimension[n] is not None,
                 "dimension": self.dimension[n], "stable_from": self.stable_from[n],
                 "stage_groups": [g.to_json() for g in self.stage_groups[n]]}
                for n in sorted(self.dimension)
            ],
        }


def _cycles_and_boundaries(c: S1Complex, window: LaurentWindow, n: int,
                           ring: str) -> Tuple[ExactMatrix, ExactMatrix]:
    d_out = assemble_equivariant_differential(c, window, n).over(ring)
    d_in = assemble_equivariant_differential(c, window, n - 1).over(ring)
    return kernel_basis(d_out), d_in


def induced_image_rank(f: S1Map, window: LaurentWindow, n: int) -> int:
    """Rank over Q of ``f_*`` on ``H^n`` of the given window."""
    z, _ = _cycles_and_boundaries(f.source, window, n, "Q")
    _, b = _cycles_and_boundaries(f.target, window, n, "Q")
    fz = assemble_map(f, window, n).over("Q") @ z
    return rank(b.hstack(fz)) - rank(b)


def induced_map_vanishes(f: S1Map, window: LaurentWindow, n: int, ring: Optional[str] = None) -> bool:
    """Whether every degree-``n`` class maps to zero, checked over the given ring."""
    ring = ring or ("Q" if "Q" in (f.source.ring, f.target.ring) else "Z")
    z, _ = _cycles_and_boundaries(f.source, window, n, ring)
    _, b = _cycles_and_boundaries(f.target, window, n, ring)
    fz = assemble_map(f, window, n).over(ring) @ z
    for col in range(fz.cols):
        vec = [fz.entries.get((r, col), 0) for r in range(fz.rows)]
        if any(vec) and solve_preimage(b, vec, ring) is None:
            return False
    return True


def colimit_homology(sys: DirectSystem, variant: LaurentWindow, degrees: Tuple[int, int],
                     max_stage: Optional[int] = None) -> ColimitResult:
    """Colimit over Q with a stabilization certificate, plus per-stage groups.

    A degree is declared stable from stage ``s0`` when every image rank
    ``rank(H(C_t) -> H(C_t'))`` with ``s0 <= t < t' <= max_stage`` takes one and
    the same value; at least two consecutive links must witness it.
    """
    lo, hi = degrees
    S = len(sys) if max_stage is None else min(max_stage, len(sys))
    if S < 1:
        raise ValueError("max_stage must be at least 1")
    stage_groups = {n: [] for n in range(lo, hi + 1)}
    for s in range(S):
        hs = cyclic_homology(sys.stages[s], variant, degrees)
        for n in range(lo, hi + 1):
            stage_groups[n].append(hs[n])
    composites = {(s, t): sys.composite(s, t) for s in range(S) for t in range(s + 1, S)}
    dimension: Dict[int, Optional[int]] = {}
    stable_from: Dict[int, Optional[int]] = {}
    image_ranks: Dict[int, Dict[Tuple[int, int], int]] = {}
    for n in range(lo, hi + 1):
        zb = [_cycles_and_boundaries(sys.stages[s], variant, n, "Q") for s in range(S)]
        ranks: Dict[Tuple[int, int], int] = {}
        for (s, t), f in composites.items():
            fz = assemble_map(f, variant, n).over("Q") @ zb[s][0]
            b = zb[t][1]
            ranks[(s, t)] = rank(b.hstack(fz)) - rank(b)
        image_ranks[n] = {(s + 1, t + 1): v for (s, t), v in ranks.items()}
        dim, start = None, None
        # s0 <= S - 3 (0-based) leaves at least two consecutive links behind the claim
        for s0 in range(S - 3, -1, -1):
            vals = {v for (s, t), v in ranks.items() if s >= s0}
            if len(vals) != 1:
                break
            dim, start = vals.pop(), s0 + 1
        dimension[n] = dim
        stable_from[n] = start
    return ColimitResult(degrees, str(variant), S, dimension, stable_from, stage_groups, image_ranks)


# ---------------------------------------------------------------------------
# Telescope
# ---------------------------------------------------------------------------

def _sign(deg: int) -> int:
    return -1 if deg % 2 else 1


@dataclass(frozen=True)
class TelescopeComplex:
    underlying: S1Complex
    stage_count: int
    keep_last_q: bool = False

    def stage_ids(self, stage: int) -> List[str]:
        """Telescope ids of the non-``q`` generators of a 1-based stage."""
        pre = f"s{stage}:"
        return [g.id for g in self.underlying.generators if g.id.startswith(pre)]


def build_telescope(sys: DirectSystem, N: int, keep_last_q: bool = False,
                    kappa_sign: int = 1, identity_sign: int = -1) -> TelescopeComplex:
    """The ``N``-stage telescope.

    By default the ``q``-part of stage ``N`` is left out, which makes the
    truncation a subcomplex of the next one and retracts onto stage ``N``.
    With ``keep_last_q`` the extra ``q``-part is retained and its ``kappa``
    terms (whose targets are absent) dropped; that truncation is acyclic.
    """
    if not 1 <= N <= len(sys):
        raise ValueError(f"telescope length {N} outside 1..{len(sys)}")
    gens: List[Generator] = []
    offset: List[int] = []
    q_offset: Dict[int, int] = {}
    for i in range(N):
        offset.append(len(gens))
        gens += [Generator(f"s{i + 1}:{g.id}", g.degree, g.label) for g in sys.stages[i].generators]
    for i in range(N):
        if i == N - 1 and not keep_last_q:
            break
        q_offset[i] = len(gens)
        gens += [Generator(f"q.s{i + 1}:{g.id}", g.degree - 1, g.label)
                 for g in sys.stages[i].generators]
    top = max([c.top_order for c in sys.stages[:N]] +
              [len(f.components) - 1 for f in sys.maps[:N - 1]] + [0])
    ops: List[SparseOp] = []
    for j in range(top + 1):
        op: SparseOp = {}
        for i in range(N):
            c = sys.stages[i]
            base = offset[i]
            for s, col in c.op(j).items():
                e = _sign(c.module.degree(s))
                op[base + s] = {base + t: e * v for t, v in col.items()}
            if i not in q_offset:
                continue
            qb = q_offset[i]
            kappa = sys.maps[i].component(j) if i + 1 < N else {}
            for s in range(len(c)):
                e = _sign(c.module.degree(s))
                col: Dict[int, int] = {}
                for t, v in c.op(j).get(s, {}).items():
                    col[qb + t] = col.get(qb + t, 0) + e * v
                for t, v in kappa.get(s, {}).items():
                    key = offset[i + 1] + t
                    col[key] = col.get(key, 0) + e * kappa_sign * v
                if j == 0:
                    col[base + s] = col.get(base + s, 0) + e * identity_sign
                if col:
                    op[qb + s] = col
        ops.append(op)
    ring = sys.ring
    t = S1Complex(GradedModule(tuple(gens), ring), tuple(ops))
    report = verify_s1_structure(t)
    if not report:
        raise RelationFailure(f"telescope relation fails (check sign hooks): {report.witness}", report)
    return TelescopeComplex(t, N, keep_last_q)


def telescope_cyclic(t: TelescopeComplex, variant: LaurentWindow,
                     degrees: Tuple[int, int]) -> Dict[int, AbelianGroup]:
    return cyclic_homology(t.underlying, variant, degrees)


def telescope_system(sys: DirectSystem, N_max: Optional[int] = None) -> DirectSystem:
    """Telescopes ``T_1 .. T_N`` linked by their subcomplex inclusions."""
    N_max = N_max or len(sys)
    tels = [build_telescope(sys, n).underlying for n in range(1, N_max + 1)]
    maps = [S1Map.inclusion(tels[i], tels[i + 1]) for i in range(len(tels) - 1)]
    return DirectSystem(tuple(tels), tuple(maps))


# ---------------------------------------------------------------------------
# Independence data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndependenceReport:
    ok: bool
    links: Tuple[Tuple[str, VerificationReport], ...]
    telescope_map: Optional[VerificationReport] = None

    def __bool__(self) -> bool:
        return self.ok

    def first_failure(self) -> Optional[Tuple[str, VerificationReport]]:
        for name, rep in self.links:
            if not rep:
                return name, rep
        if self.telescope_map is not None and not self.telescope_map:
            return "telescope map", self.telescope_map
        return None


def _components(x) -> Tuple[SparseOp, ...]:
    if isinstance(x, (S1Map, S1Homotopy)):
        return x.components
    return tuple(x)


def verify_independence_data(sysA: DirectSystem, sysB: DirectSystem, sigma: Sequence[int],
                             f: Sequence, h: Sequence, N: Optional[int] = None
                             ) -> IndependenceReport:
    """Check comparison data between two systems and the telescope map it assembles.

    ``sigma[i]`` is the (0-based) stage of ``sysB`` receiving stage ``i`` of
    ``sysA`` through ``f[i]``; ``h[i]`` must be a homotopy from
    ``f[i+1] o kappa^A_i`` to ``K o f[i]`` where ``K`` is the composite of
    ``sysB`` from ``sigma[i]`` to ``sigma[i+1]``.  The telescope map on
    ``T_A(N) -> T_B(sigma[N-1] + 1)`` is

        F(a)  = f_i(a)
        F(qb) = sum_{0 <= s < m} q (K_{sigma_i -> sigma_i + s} o f_i)(b) - h_i(b)
    """
    N = N or len(sysA)
    if len(sigma) < N or any(b < a for a, b in zip(sigma, sigma[1:N])):
        raise ValueError("sigma must be non-decreasing and cover the telescope")
    links: List[Tuple[str, VerificationReport]] = []
    fmaps: List[S1Map] = []
    for i in range(N):
        fi = S1Map(sysA.stages[i], sysB.stages[sigma[i]], _components(f[i]))
        fmaps.append(fi)
        links.append((f"f[{i}]", verify_s1_map(fi)))
    for i in range(N - 1):
        first = compose(fmaps[i + 1], sysA.maps[i])
        second = compose(sysB.composite(sigma[i], sigma[i + 1]), fmaps[i])
        links.append((f"h[{i}]", verify_homotopy(S1Homotopy(first, second, _components(h[i])))))
    if not all(rep for _, rep in links):
        return IndependenceReport(False, tuple(links))

    NB = sigma[N - 1] + 1
    TA = build_telescope(sysA, N).underlying
    TB = build_telescope(sysB, NB).underlying
    pa, pb = TA.module, TB.module
    comps: Dict[int, SparseOp] = {}

    def add(order: int, src: int, tgt: int, v) -> None:
        col = comps.setdefault(order, {}).setdefault(src, {})
        col[tgt] = col.get(tgt, 0) + v

    for i in range(N):
        A = sysA.stages[i]
        si = sigma[i]
        for order, op in enumerate(fmaps[i].components):
            for s, col in op.items():
                src = pa.position(f"s{i + 1}:{A.generators[s].id}")
                for t, v in col.items():
                    add(order, src, pb.position(f"s{si + 1}:{sysB.stages[si].generators[t].id}"), v)
        if i == N - 1:
            continue
        m = sigma[i + 1] - si
        for step in range(m):
            g = compose(sysB.composite(si, si + step), fmaps[i])
            B = sysB.stages[si + step]
            for order, op in enumerate(g.components):
                for s, col in op.items():
                    src = pa.position(f"q.s{i + 1}:{A.generators[s].id}")
                    for t, v in col.items():
                        add(order, src, pb.position(f"q.s{si + step + 1}:{B.generators[t].id}"), v)
        Bn = sysB.stages[sigma[i + 1]]
        for order, op in enumerate(_components(h[i])):
            for s, col in op.items():
                src = pa.position(f"q.s{i + 1}:{A.generators[s].id}")
                for t, v in col.items():
                    add(order, src, pb.position(f"s{sigma[i + 1] + 1}:{Bn.generators[t].id}"), -v)
    top = max(comps) if comps else -1
    F = S1Map(TA, TB, tuple(comps.get(k, {}) for k in range(top + 1)))
    rep = verify_s1_map(F)
    return IndependenceReport(bool(rep), tuple(links), rep)


def repeat_stages(sys: DirectSystem) -> Tuple[DirectSystem, List[int]]:
    """``C_1 -> C_1 -> C_2 -> C_2 -> ...`` with identity links, and the matching ``sigma``."""
    stages: List[S1Complex] = []
    maps: List[S1Map] = []
    for i, c in enumerate(sys.stages):
        stages += [c, c]
        maps.append(S1Map.identity(c))
        if i < len(sys.maps):
            maps.append(sys.maps[i])
    return DirectSystem(tuple(stages), tuple(maps)), [2 * i for i in range(len(sys))]
