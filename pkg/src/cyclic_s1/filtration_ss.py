"""Spectral sequence of an increasingly filtered S^1-complex.

Generators carry integer levels ``p >= 0``; ``F^p`` is spanned by generators of
level at most ``p`` (times any admitted power of ``u``, which does not change
the level).  Every operation must send ``F^p`` into ``F^p``.

Pages are computed per total degree ``n`` from the assembled equivariant
differential ``d``:

    Z_r^p   = F^p  intersected with  d^{-1}(F^{p-r})
    B_r^p   = Z_{r-1}^{p-1} + d(Z_{r-1}^{p+r-1})
    E_r^p   = Z_r^p / B_r^p

with ``Z_{-1}^p = F^p``, so ``E_0^p`` is the associated graded piece.  The
differential ``d_r`` goes from ``(p, n)`` to ``(p - r, n + 1)``; entries are
reported at ``(p, q)`` with ``q = n - p`` so ``d_r: (p, q) -> (p - r, q + r + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exact_linear import (
    AbelianGroup,
    ExactMatrix,
    kernel_basis,
    quotient_group,
    rank,
    solve_preimage,
)
from .s1_complex import (
    GradedModule,
    LaurentWindow,
    S1Complex,
    assemble_equivariant_differential,
    cyclic_homology,
    equivariant_basis,
)


class FiltrationViolation(ValueError):
    """An operation entry raises the filtration level."""

    def __init__(self, message: str, entry: Optional[Tuple[str, int, str, str]] = None):
        super().__init__(message)
        self.entry = entry


@dataclass(frozen=True)
class FilteredS1Complex:
    complex: S1Complex
    level: Mapping[str, int]

    def __post_init__(self) -> None:
        gens = self.complex.generators
        missing = [g.id for g in gens if g.id not in self.level]
        if missing:
            raise ValueError(f"no filtration level for {missing[0]!r}")
        for g in gens:
            if self.level[g.id] < 0:
                raise ValueError(f"negative filtration level on {g.id!r}")
        object.__setattr__(self, "level", {g.id: int(self.level[g.id]) for g in gens})
        for i, op in enumerate(self.complex.operations):
            for s, col in op.items():
                for t in col:
                    ls, lt = self.level[gens[s].id], self.level[gens[t].id]
                    if lt > ls:
                        raise FiltrationViolation(
                            f"delta_{i} entry {gens[s].id} -> {gens[t].id} raises level {ls} to {lt}",
                            ("delta", i, gens[s].id, gens[t].id))

    @property
    def levels(self) -> List[int]:
        return sorted(set(self.level.values()))

    def level_of(self, pos: int) -> int:
        return self.level[self.complex.generators[pos].id]

    def with_ring(self, ring: str) -> "FilteredS1Complex":
        return FilteredS1Complex(self.complex.with_ring(ring), self.level)


def associated_graded(fc: FilteredS1Complex, p: int) -> S1Complex:
    """``G^p = F^p / F^{p-1}`` with level-preserving parts of the operations."""
    c = fc.complex
    keep = [pos for pos in range(len(c)) if fc.level_of(pos) == p]
    new = {old: k for k, old in enumerate(keep)}
    gens = tuple(c.generators[pos] for pos in keep)
    ops = []
    for op in c.operations:
        out = {}
        for s, col in op.items():
            if s not in new:
                continue
            sub = {new[t]: v for t, v in col.items() if t in new}
            if sub:
                out[new[s]] = sub
        ops.append(out)
    return S1Complex(GradedModule(gens, c.ring), tuple(ops))


class _DegreeData:
    """Assembled differentials around one total degree, with level bookkeeping."""

    def __init__(self, fc: FilteredS1Complex, window: LaurentWindow, n: int):
        c = fc.complex
        self.ring = c.ring
        self.basis = {k: equivariant_basis(c, window, k) for k in (n, n + 1)}
        self.levels = {k: [fc.level_of(pos) for _, pos in self.basis[k]] for k in (n, n + 1)}
        self.d = assemble_equivariant_differential(c, window, n)

    def filtered(self, k: int, p: int) -> List[int]:
        return [idx for idx, lv in enumerate(self.levels[k]) if lv <= p]


def _embed(dim: int, rows: Sequence[int], m: ExactMatrix) -> ExactMatrix:
    return ExactMatrix(dim, m.cols, {(rows[r], c): v for (r, c), v in m.entries.items()}, m.ring)


def _z(data: Mapping[int, _DegreeData], n: int, p: int, r: int) -> ExactMatrix:
    """Basis of ``Z_r^p`` in degree ``n`` as columns of the ambient degree-``n`` space."""
    dd = data[n]
    dim = len(dd.basis[n])
    src = dd.filtered(n, p)
    if not src:
        return ExactMatrix.zeros(dim, 0, dd.ring)
    high = [idx for idx, lv in enumerate(dd.levels[n + 1]) if lv > p - r]
    block = dd.d.submatrix(high, src)
    ker = kernel_basis(block)
    return _embed(dim, src, ker)


def _den(data: Mapping[int, _DegreeData], prev: Optional[_DegreeData], n: int, p: int,
         r: int) -> ExactMatrix:
    """Generators of ``B_r^p`` in degree ``n`` (``prev`` holds the degree ``n-1`` data)."""
    dd = data[n]
    dim = len(dd.basis[n])
    cols = [_z(data, n, p - 1, r - 1)]
    if prev is not None:
        zr = _z({n - 1: prev}, n - 1, p + r - 1, r - 1)
        cols.append(prev.d @ zr)
    out = cols[0]
    for extra in cols[1:]:
        out = out.hstack(extra)
    return out


def _contained(sub: ExactMatrix, span: ExactMatrix, ring: str) -> bool:
    if sub.cols == 0 or sub.is_zero():
        return True
    if span.cols == 0:
        return False
    if ring == "Q":
        return rank(span.hstack(sub)) == rank(span)
    return all(solve_preimage(span, _dense(sub.column(c), sub.rows), ring) is not None for c in range(sub.cols))


def _dense(col: Mapping[int, object], n: int) -> list:
    return [col.get(i, 0) for i in range(n)]


@dataclass(frozen=True)
class SpectralPage:
    r: int
    entries: Dict[Tuple[int, int], AbelianGroup]
    d_nonzero: Tuple[Tuple[int, int], ...] = ()
    d_ranks: Dict[Tuple[int, int], int] = field(default_factory=dict)
    convention: str = "increasing filtration; E_r^{p,q} with q = n - p; d_r: (p,q) -> (p-r, q+r+1)"

    def column_rank(self, p: int, parity: Optional[int] = None) -> Dict[int, int]:
        """Free ranks of column ``p`` keyed by total degree, optionally filtered by parity."""
        out = {}
        for (pp, q), g in self.entries.items():
            n = pp + q
            if pp == p and (parity is None or n % 2 == parity):
                out[n] = g.free_rank
        return out

    def total_rank(self, n: int) -> int:
        return sum(g.free_rank for (p, q), g in self.entries.items() if p + q == n)

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "convention": self.convention,
            "entries": [{"p": p, "q": q, **g.to_json()} for (p, q), g in sorted(self.entries.items())],
            "d_nonzero": [{"p": p, "q": q} for p, q in self.d_nonzero],
        }


def compute_page(fc: FilteredS1Complex, window: LaurentWindow, degrees: Tuple[int, int],
                 r: int) -> SpectralPage:
    """``E_r`` for total degrees in ``degrees`` together with the support of ``d_r``."""
    if r < 0:
        raise ValueError("page index must be non-negative")
    lo, hi = degrees
    ring = fc.complex.ring
    data = {n: _DegreeData(fc, window, n) for n in range(lo - 1, hi + 2)}
    levels = fc.levels or [0]
    entries: Dict[Tuple[int, int], AbelianGroup] = {}
    nonzero: List[Tuple[int, int]] = []
    d_ranks: Dict[Tuple[int, int], int] = {}
    for n in range(lo, hi + 1):
        for p in levels:
            z = _z(data, n, p, r)
            den = _den(data, data[n - 1], n, p, r)
            entries[(p, n - p)] = quotient_group(z, den, ring) if z.cols else AbelianGroup(0)
            if r == 0:
                continue
            # d_r lands in E_r^{p-r} of degree n + 1
            dz = data[n].d @ z
            target_den = _den(data, data[n], n + 1, p - r, r)
            if not _contained(dz, target_den, ring):
                nonzero.append((p, n - p))
            if dz.cols:
                base = rank(target_den) if target_den.cols else 0
                d_ranks[(p, n)] = rank(target_den.hstack(dz)) - base
            else:
                d_ranks[(p, n)] = 0
    return SpectralPage(r, entries, tuple(nonzero), d_ranks)


@dataclass(frozen=True)
class DegenerationCertificate:
    status: str
    r_max: int
    nonzero_pages: Tuple[int, ...]
    e1_totals: Dict[int, int]
    homology_ranks: Dict[int, int]
    einf_totals: Dict[int, int]
    converges: bool
    pages: Tuple[SpectralPage, ...] = ()

    @property
    def passed(self) -> bool:
        return self.status == "degenerate_at_E1"

    def to_json(self) -> dict:
        return {
            "pages": [pg.to_json() for pg in self.pages],
            "certificate": self.status,
            "r_max": self.r_max,
            "nonzero_pages": list(self.nonzero_pages),
            "e1_totals": {str(n): v for n, v in sorted(self.e1_totals.items())},
            "homology_ranks": {str(n): v for n, v in sorted(self.homology_ranks.items())},
            "einf_totals": {str(n): v for n, v in sorted(self.einf_totals.items())},
            "converges": self.converges,
        }


def degeneration_certificate(fc: FilteredS1Complex, window: LaurentWindow,
                             degrees: Tuple[int, int], r_max: Optional[int] = None
                             ) -> DegenerationCertificate:
    """Check ``d_r = 0`` for ``1 <= r <= r_max`` over Q and compare E_1 with total homology."""
    fq = fc.with_ring("Q")
    levels = fq.levels or [0]
    span = levels[-1] - levels[0]
    if r_max is None:
        r_max = span + 1
    pages = [compute_page(fq, window, degrees, r) for r in range(0, r_max + 2)]
    nonzero = tuple(r for r in range(1, r_max + 1) if pages[r].d_nonzero)
    lo, hi = degrees
    h = cyclic_homology(fq.complex, window, degrees)
    e1 = {n: pages[1].total_rank(n) for n in range(lo, hi + 1)}
    # pages stabilize once r exceeds the level span
    tail = compute_page(fq, window, degrees, max(r_max + 1, span + 1))
    einf = {n: tail.total_rank(n) for n in range(lo, hi + 1)}
    hr = {n: g.free_rank for n, g in h.items()}
    converges = einf == hr
    ok = not nonzero and e1 == hr and converges
    return DegenerationCertificate("degenerate_at_E1" if ok else "nondegenerate", r_max, nonzero,
                                   e1, hr, einf, converges, tuple(pages[:2]))
