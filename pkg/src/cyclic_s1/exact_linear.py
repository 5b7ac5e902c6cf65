"""Exact linear algebra over Z and Q.

Everything here works on :class:`ExactMatrix`, a sparse matrix of Python
``int`` or :class:`fractions.Fraction` entries.  The workhorse is a sparse
Smith normal form with minimal-absolute-value pivoting; kernels, preimages,
subquotients and homology of two-matrix segments are all derived from it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

Scalar = Union[int, Fraction]

RINGS = ("Z", "Q")


class CompositionNonzero(ValueError):
    """Raised when ``d_out @ d_in`` is not the zero matrix."""


def _check_ring(ring: str) -> str:
    if ring not in RINGS:
        raise ValueError(f"unknown coefficient ring {ring!r}; expected 'Z' or 'Q'")
    return ring


def _normalize(value: Scalar, ring: str) -> Scalar:
    if isinstance(value, float):
        raise TypeError("floating point entries are not allowed")
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return int(value.numerator)
        if ring == "Z":
            raise ValueError(f"non-integral entry {value} in a matrix over Z")
        return value
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"unsupported scalar {value!r}")
    return value


@dataclass(frozen=True)
class ExactMatrix:
    """Sparse exact matrix; ``entries`` maps ``(row, col)`` to a nonzero scalar."""

    rows: int
    cols: int
    entries: Dict[Tuple[int, int], Scalar] = field(default_factory=dict)
    ring: str = "Z"

    def __post_init__(self) -> None:
        _check_ring(self.ring)
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        clean: Dict[Tuple[int, int], Scalar] = {}
        for (r, c), v in self.entries.items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise IndexError(f"entry ({r}, {c}) outside a {self.rows}x{self.cols} matrix")
            v = _normalize(v, self.ring)
            if v != 0:
                clean[(r, c)] = v
        object.__setattr__(self, "entries", clean)

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int, ring: str = "Z") -> "ExactMatrix":
        return cls(rows, cols, {}, ring)

    @classmethod
    def identity(cls, n: int, ring: str = "Z") -> "ExactMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)}, ring)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]], ring: str = "Z",
                  cols: Optional[int] = None) -> "ExactMatrix":
        nrows = len(rows)
        ncols = len(rows[0]) if rows else (cols or 0)
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged row list")
            for j, v in enumerate(row):
                if v != 0:
                    entries[(i, j)] = v
        return cls(nrows, ncols, entries, ring)

    @classmethod
    def from_columns(cls, columns: Sequence[Dict[int, Scalar]], rows: int,
                     ring: str = "Z") -> "ExactMatrix":
        entries = {}
        for j, col in enumerate(columns):
            for i, v in col.items():
                if v != 0:
                    entries[(i, j)] = v
        return cls(rows, len(columns), entries, ring)

    # views ------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    def to_rows(self) -> List[List[Scalar]]:
        out: List[List[Scalar]] = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def column(self, j: int) -> Dict[int, Scalar]:
        return {r: v for (r, c), v in self.entries.items() if c == j}

    def columns(self) -> List[Dict[int, Scalar]]:
        cols: List[Dict[int, Scalar]] = [{} for _ in range(self.cols)]
        for (r, c), v in self.entries.items():
            cols[c][r] = v
        return cols

    def is_zero(self) -> bool:
        return not self.entries

    def is_integral(self) -> bool:
        return all(isinstance(v, int) for v in self.entries.values())

    def over(self, ring: str) -> "ExactMatrix":
        return ExactMatrix(self.rows, self.cols, dict(self.entries), ring)

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix(self.cols, self.rows, {(c, r): v for (r, c), v in self.entries.items()},
                           self.ring)

    # arithmetic -------------------------------------------------------
    def _result_ring(self, other: "ExactMatrix") -> str:
        return "Q" if "Q" in (self.ring, other.ring) else "Z"

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        by_row: Dict[int, List[Tuple[int, Scalar]]] = {}
        for (r, c), v in other.entries.items():
            by_row.setdefault(r, []).append((c, v))
        acc: Dict[Tuple[int, int], Scalar] = {}
        for (i, k), a in self.entries.items():
            for j, b in by_row.get(k, ()):
                acc[(i, j)] = acc.get((i, j), 0) + a * b
        return ExactMatrix(self.rows, other.cols, acc, self._result_ring(other))

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.shape != other.shape:
            raise ValueError(f"cannot add {self.shape} and {other.shape}")
        acc = dict(self.entries)
        for k, v in other.entries.items():
            acc[k] = acc.get(k, 0) + v
        return ExactMatrix(self.rows, self.cols, acc, self._result_ring(other))

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix(self.rows, self.cols, {k: -v for k, v in self.entries.items()}, self.ring)

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + (-other)

    def scale(self, c: Scalar) -> "ExactMatrix":
        ring = "Q" if isinstance(c, Fraction) and c.denominator != 1 else self.ring
        return ExactMatrix(self.rows, self.cols, {k: v * c for k, v in self.entries.items()}, ring)

    def apply(self, vector: Sequence[Scalar]) -> List[Scalar]:
        if len(vector) != self.cols:
            raise ValueError("vector length does not match column count")
        out: List[Scalar] = [0] * self.rows
        for (r, c), v in self.entries.items():
            out[r] += v * vector[c]
        return [_normalize(x, "Q") for x in out]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "ExactMatrix":
        rpos = {r: i for i, r in enumerate(rows)}
        cpos = {c: j for j, c in enumerate(cols)}
        entries = {(rpos[r], cpos[c]): v for (r, c), v in self.entries.items()
                   if r in rpos and c in cpos}
        return ExactMatrix(len(rows), len(cols), entries, self.ring)

    def hstack(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.rows != other.rows:
            raise ValueError("hstack needs equal row counts")
        entries = dict(self.entries)
        entries.update({(r, c + self.cols): v for (r, c), v in other.entries.items()})
        return ExactMatrix(self.rows, self.cols + other.cols, entries, self._result_ring(other))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, frozenset(self.entries.items())))

    def __repr__(self) -> str:
        return f"ExactMatrix({self.rows}x{self.cols}, nnz={len(self.entries)}, ring={self.ring})"


@dataclass(frozen=True, order=True)
class AbelianGroup:
    """``Z^free_rank + Z/f1 + ... + Z/ft`` with ``f1 | f2 | ... | ft`` and every ``fi >= 2``."""

    free_rank: int = 0
    torsion: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.free_rank < 0:
            raise ValueError("free rank must be non-negative")
        tors = tuple(int(t) for t in self.torsion)
        if any(t < 2 for t in tors):
            raise ValueError(f"invariant factors must be >= 2, got {tors}")
        if any(b % a for a, b in zip(tors, tors[1:])):
            raise ValueError(f"invariant factors {tors} do not form a divisibility chain")
        object.__setattr__(self, "torsion", tors)

    @classmethod
    def from_diagonal(cls, free_rank: int, diagonal: Iterable[int]) -> "AbelianGroup":
        """Canonicalize ``Z^free_rank + (+) Z/|d|``; ``Z/0`` counts as free, units vanish."""
        extra_free = 0
        factors = []
        for d in diagonal:
            d = abs(int(d))
            if d == 0:
                extra_free += 1
            elif d > 1:
                factors.append(d)
        return cls(free_rank + extra_free, _invariant_factors_of_cyclics(factors))

    @property
    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def order_of_torsion(self) -> int:
        out = 1
        for t in self.torsion:
            out *= t
        return out

    def rationalize(self) -> "AbelianGroup":
        return AbelianGroup(self.free_rank)

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}


def _invariant_factors_of_cyclics(orders: Sequence[int]) -> Tuple[int, ...]:
    # Diagonal fold: repeatedly replace (a, b) by (gcd, lcm).
    vals = sorted(o for o in orders if o > 1)
    changed = True
    while changed:
        changed = False
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                a, b = vals[i], vals[j]
                if b % a:
                    g = gcd(a, b)
                    vals[i], vals[j] = g, a // g * b
                    changed = True
        vals.sort()
    return tuple(v for v in vals if v > 1)


# ---------------------------------------------------------------------------
# Sparse elimination engine
# ---------------------------------------------------------------------------

class _SparseRows:
    """Row-major sparse integer matrix with a column index, mutated in place."""

    __slots__ = ("nrows", "ncols", "rows", "colidx")

    def __init__(self, nrows: int, ncols: int, entries: Dict[Tuple[int, int], int]):
        self.nrows = nrows
        self.ncols = ncols
        self.rows: List[Dict[int, int]] = [dict() for _ in range(nrows)]
        self.colidx: List[set] = [set() for _ in range(ncols)]
        for (r, c), v in entries.items():
            self.rows[r][c] = v
            self.colidx[c].add(r)

    @classmethod
    def identity(cls, n: int) -> "_SparseRows":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    def _set(self, r: int, c: int, v: int) -> None:
        row = self.rows[r]
        if v:
            row[c] = v
            self.colidx[c].add(r)
        elif c in row:
            del row[c]
            self.colidx[c].discard(r)

    def add_row(self, target: int, source: int, factor: int) -> None:
        if not factor:
            return
        trow = self.rows[target]
        for c, v in list(self.rows[source].items()):
            self._set(target, c, trow.get(c, 0) + factor * v)

    def add_col(self, target: int, source: int, factor: int) -> None:
        if not factor:
            return
        for r in list(self.colidx[source]):
            row = self.rows[r]
            self._set(r, target, row.get(target, 0) + factor * row[source])

    def mix_rows(self, r1: int, r2: int, a: int, b: int, c: int, d: int) -> None:
        """(row r1, row r2) <- (a*r1 + b*r2, c*r1 + d*r2)."""
        row1, row2 = dict(self.rows[r1]), dict(self.rows[r2])
        for k in set(row1) | set(row2):
            x, y = row1.get(k, 0), row2.get(k, 0)
            self._set(r1, k, a * x + b * y)
            self._set(r2, k, c * x + d * y)

    def mix_cols(self, c1: int, c2: int, a: int, b: int, c: int, d: int) -> None:
        """(col c1, col c2) <- (a*c1 + b*c2, c*c1 + d*c2)."""
        for r in list(self.colidx[c1] | self.colidx[c2]):
            row = self.rows[r]
            x, y = row.get(c1, 0), row.get(c2, 0)
            self._set(r, c1, a * x + b * y)
            self._set(r, c2, c * x + d * y)

    def negate_row(self, r: int) -> None:
        for c in list(self.rows[r]):
            self.rows[r][c] = -self.rows[r][c]

    def entries(self) -> Dict[Tuple[int, int], int]:
        return {(r, c): v for r, row in enumerate(self.rows) for c, v in row.items()}


def _xgcd(a: int, b: int) -> Tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _nearest_quotient(a: int, b: int) -> int:
    q, r = divmod(a, b)
    if 2 * abs(r) > abs(b):
        q += 1 if (r > 0) == (b > 0) else -1
    return q


@dataclass(frozen=True)
class SmithForm:
    """Certified Smith normal form ``U @ m @ V == D``.

    ``U`` and ``V`` are unimodular; ``D`` carries ``diagonal[k]`` at ``(k, k)``
    for ``k < rank`` and zeros elsewhere.  ``U_inv`` is kept so images can be
    moved back without another inversion.
    """

    U: ExactMatrix
    D: ExactMatrix
    V: ExactMatrix
    U_inv: ExactMatrix
    diagonal: Tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.diagonal)


def _integral_rows(m: ExactMatrix) -> Dict[Tuple[int, int], int]:
    # Row scaling by a nonzero rational preserves kernels and rank over Q.
    if m.is_integral():
        return dict(m.entries)
    denoms: Dict[int, int] = {}
    for (r, _), v in m.entries.items():
        d = v.denominator if isinstance(v, Fraction) else 1
        denoms[r] = denoms.get(r, 1) * d // gcd(denoms.get(r, 1), d)
    return {(r, c): int(v * denoms[r]) for (r, c), v in m.entries.items()}


def _row_scalings(m: ExactMatrix) -> Dict[int, int]:
    denoms: Dict[int, int] = {}
    for (r, _), v in m.entries.items():
        d = v.denominator if isinstance(v, Fraction) else 1
        denoms[r] = denoms.get(r, 1) * d // gcd(denoms.get(r, 1), d)
    return denoms


def _eliminate(entries: Dict[Tuple[int, int], int], nrows: int, ncols: int, track: bool):
    """Diagonalize in place; returns (work, pivots, U, U_inv, Vt).

    Pivoting always takes an active entry of minimal absolute value.
    ``U`` accumulates row operations, ``U_inv`` their inverses (as column
    operations), and ``Vt`` stores ``V`` transposed so column operations on
    the matrix become row operations on ``Vt``.
    """
    work = _SparseRows(nrows, ncols, entries)
    U = _SparseRows.identity(nrows) if track else None
    Uinv = _SparseRows.identity(nrows) if track else None
    Vt = _SparseRows.identity(ncols) if track else None
    done_rows: set = set()
    done_cols: set = set()
    pivots: List[Tuple[int, int]] = []

    def row_op(t: int, s: int, f: int) -> None:
        work.add_row(t, s, f)
        if track:
            U.add_row(t, s, f)
            Uinv.add_col(s, t, -f)

    def col_op(t: int, s: int, f: int) -> None:
        work.add_col(t, s, f)
        if track:
            Vt.add_row(t, s, f)

    while True:
        best = None
        for r in range(nrows):
            if r in done_rows:
                continue
            for c, v in work.rows[r].items():
                if c in done_cols:
                    continue
                a = abs(v)
                if best is None or a < best[0] or (a == best[0] and (r, c) < best[1:]):
                    best = (a, r, c)
                    if a == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, pr, pc = best
        while True:
            p = work.rows[pr][pc]
            clean = True
            for r in list(work.colidx[pc]):
                if r == pr:
                    continue
                q = _nearest_quotient(work.rows[r][pc], p)
                row_op(r, pr, -q)
                if pc in work.rows[r]:
                    clean = False
            for c in list(work.rows[pr]):
                if c == pc:
                    continue
                q = _nearest_quotient(work.rows[pr][c], p)
                col_op(c, pc, -q)
                if c in work.rows[pr]:
                    clean = False
            if clean:
                break
            # A remainder smaller than |p| survived: move the pivot onto it.
            cand = [(abs(work.rows[r][pc]), r, pc) for r in work.colidx[pc] if r != pr]
            cand += [(abs(v), pr, c) for c, v in work.rows[pr].items() if c != pc]
            _, pr, pc = min(cand)
        done_rows.add(pr)
        done_cols.add(pc)
        pivots.append((pr, pc))
    return work, pivots, U, Uinv, Vt


def _rank_and_diagonal(m: ExactMatrix) -> Tuple[int, List[int]]:
    work, pivots, *_ = _eliminate(_integral_rows(m), m.rows, m.cols, track=False)
    return len(pivots), [work.rows[r][c] for r, c in pivots]


def smith_normal_form(m: ExactMatrix) -> SmithForm:
    """Smith normal form of an integer matrix with unimodular transforms."""
    if not m.is_integral():
        raise ValueError("smith_normal_form needs integer entries")
    nrows, ncols = m.rows, m.cols
    work, pivots, U, Uinv, Vt = _eliminate(dict(m.entries), nrows, ncols, track=True)

    # Divisibility fix-up: replace each pivot pair (a, b) by (gcd, lcm).
    t = len(pivots)
    for i in range(t):
        ri, ci = pivots[i]
        for j in range(i + 1, t):
            rj, cj = pivots[j]
            a, b = work.rows[ri][ci], work.rows[rj][cj]
            if b % a == 0:
                continue
            g, s, tt = _xgcd(a, b)
            a1, b1 = a // g, b // g
            # L = [[s, tt], [-b1, a1]] on rows, R = [[1, -tt*b1], [1, s*a1]] on cols.
            work.mix_rows(ri, rj, s, tt, -b1, a1)
            U.mix_rows(ri, rj, s, tt, -b1, a1)
            # inverse of L is [[a1, -tt], [b1, s]]; U_inv <- U_inv @ L^-1
            Uinv.mix_cols(ri, rj, a1, b1, -tt, s)
            work.mix_cols(ci, cj, 1, 1, -tt * b1, s * a1)
            Vt.mix_rows(ci, cj, 1, 1, -tt * b1, s * a1)
    for r, c in pivots:
        if work.rows[r][c] < 0:
            work.negate_row(r)
            U.negate_row(r)
            _negate_col(Uinv, r)

    # Permute pivots onto the leading diagonal.
    row_order = [r for r, _ in pivots] + [r for r in range(nrows) if r not in {p[0] for p in pivots}]
    col_order = [c for _, c in pivots] + [c for c in range(ncols) if c not in {p[1] for p in pivots}]
    diagonal = tuple(work.rows[r][c] for r, c in pivots)

    u_entries = {}
    for new, old in enumerate(row_order):
        for c, v in U.rows[old].items():
            u_entries[(new, c)] = v
    uinv_entries = {}
    rpos = {old: new for new, old in enumerate(row_order)}
    for r, row in enumerate(Uinv.rows):
        for c, v in row.items():
            uinv_entries[(r, rpos[c])] = v
    v_entries = {}
    for new, old in enumerate(col_order):
        for r, v in Vt.rows[old].items():
            v_entries[(r, new)] = v
    d_entries = {(k, k): d for k, d in enumerate(diagonal)}
    return SmithForm(
        U=ExactMatrix(nrows, nrows, u_entries),
        D=ExactMatrix(nrows, ncols, d_entries),
        V=ExactMatrix(ncols, ncols, v_entries),
        U_inv=ExactMatrix(nrows, nrows, uinv_entries),
        diagonal=diagonal,
    )


def _negate_col(sp: _SparseRows, c: int) -> None:
    for r in list(sp.colidx[c]):
        sp.rows[r][c] = -sp.rows[r][c]


def invariant_factors(m: ExactMatrix) -> Tuple[int, ...]:
    """Nonzero Smith invariants of ``m`` (units included), without transforms."""
    _, diag = _rank_and_diagonal(m)
    rest = _invariant_factors_of_cyclics([abs(d) for d in diag])
    return (1,) * (len(diag) - len(rest)) + rest


def rank(m: ExactMatrix) -> int:
    """Rank over Q (equivalently over Z)."""
    r, _ = _rank_and_diagonal(m)
    return r


def rank_rational(m: ExactMatrix) -> int:
    """Rank by fraction-exact Gaussian elimination; independent of the SNF path."""
    rows: List[Dict[int, Fraction]] = [dict() for _ in range(m.rows)]
    for (r, c), v in m.entries.items():
        rows[r][c] = Fraction(v)
    rows = [r for r in rows if r]
    rk = 0
    while rows:
        pivot_row = rows.pop()
        col = min(pivot_row)
        pv = pivot_row[col]
        nxt = []
        for row in rows:
            if col in row:
                f = row[col] / pv
                for c, v in pivot_row.items():
                    nv = row.get(c, 0) - f * v
                    if nv:
                        row[c] = nv
                    else:
                        row.pop(c, None)
            if row:
                nxt.append(row)
        rows = nxt
        rk += 1
    return rk


def kernel_basis(m: ExactMatrix) -> ExactMatrix:
    """Columns form a Z-basis of ``ker m`` (a Q-basis for matrices over Q)."""
    if m.is_integral():
        snf = smith_normal_form(m)
    else:
        snf = smith_normal_form(ExactMatrix(m.rows, m.cols, _integral_rows(m)))
    r = snf.rank
    cols = list(range(r, m.cols))
    basis = snf.V.submatrix(list(range(m.cols)), cols)
    return basis.over(m.ring)


def solve_preimage(m: ExactMatrix, target: Sequence[Scalar], ring: Optional[str] = None
                   ) -> Optional[List[Scalar]]:
    """Return ``x`` with ``m x = target`` over ``ring`` (default ``m.ring``), or ``None``."""
    ring = _check_ring(ring or m.ring)
    if len(target) != m.rows:
        raise ValueError("target length does not match row count")
    if ring == "Z" and not m.is_integral():
        raise ValueError("cannot solve over Z with a non-integral matrix")
    scal = _row_scalings(m)
    tgt = [Fraction(t) * scal.get(i, 1) for i, t in enumerate(target)]
    if ring == "Z" and any(t.denominator != 1 for t in tgt):
        return None
    snf = smith_normal_form(ExactMatrix(m.rows, m.cols, _integral_rows(m)))
    y = snf.U.apply(tgt)
    z: List[Scalar] = [0] * m.cols
    for k, v in enumerate(y):
        if k < snf.rank:
            q = Fraction(v) / snf.diagonal[k]
            if ring == "Z" and q.denominator != 1:
                return None
            z[k] = q
        elif v != 0:
            return None
    return snf.V.apply(z)


def quotient_group(sub: ExactMatrix, gens: ExactMatrix, ring: str) -> AbelianGroup:
    """``span(sub) / span(gens)``.

    ``sub`` has linearly independent columns spanning a saturated lattice
    (as returned by :func:`kernel_basis`); every column of ``gens`` must lie
    in it.  Over Q only dimensions are reported.
    """
    _check_ring(ring)
    if sub.rows != gens.rows:
        raise ValueError("subgroup and generators live in different ambient spaces")
    z = sub.cols
    if ring == "Q":
        return AbelianGroup(z - rank(gens))
    if gens.cols == 0 or gens.is_zero():
        return AbelianGroup(z)
    if z == 0:
        raise ValueError("generators are not contained in the zero subgroup")
    snf = smith_normal_form(sub)
    # coordinates of gens in the basis of sub: sub = U_inv D V^-1, saturated so D = I_z
    if any(d != 1 for d in snf.diagonal) or snf.rank != z:
        raise ValueError("subgroup basis is not saturated and independent")
    y = snf.U @ gens
    coords = {}
    for (r, c), v in y.entries.items():
        if r >= z:
            raise ValueError("generator outside the given subgroup")
        coords[(r, c)] = v
    # x = V[:, :z] @ y[:z]
    V_top = snf.V.submatrix(list(range(z)), list(range(z)))
    X = V_top @ ExactMatrix(z, gens.cols, coords)
    rk, diag = _rank_and_diagonal(X)
    return AbelianGroup.from_diagonal(z - rk, diag)


def homology_segment(d_in: ExactMatrix, d_out: ExactMatrix, ring: Optional[str] = None
                     ) -> AbelianGroup:
    """``ker(d_out) / im(d_in)`` as free rank plus invariant factors.

    ``d_in: A -> B`` and ``d_out: B -> C``; over Q the torsion part is empty.
    """
    ring = _check_ring(ring or ("Q" if "Q" in (d_in.ring, d_out.ring) else "Z"))
    if d_out.cols != d_in.rows:
        raise ValueError(f"segment shapes {d_in.shape} -> {d_out.shape} do not chain")
    if not (d_out @ d_in).is_zero():
        raise CompositionNonzero("d_out @ d_in != 0")
    n = d_in.rows
    rk_out = rank(d_out)
    rk_in, diag = _rank_and_diagonal(d_in)
    free = n - rk_out - rk_in
    if ring == "Q":
        return AbelianGroup(free)
    # torsion of ker/im equals torsion of coker(d_in) because ker(d_out) is saturated.
    return AbelianGroup.from_diagonal(free, [d for d in diag])
