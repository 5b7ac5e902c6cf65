"""JSON documents for complexes, maps, orbit catalogs, and direct systems."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import sympy

from .exact_linear import Scalar
from .floer_builder import (
    CatalogError,
    HamiltonianStage,
    InclusionSpec,
    OrbitDescriptor,
    OrbitKind,
    StageSequence,
    build_continuation,
)
from .limits_telescope import DirectSystem
from .s1_complex import Generator, S1Complex, S1Homotopy, S1Map

SCHEMA = "psh/1"
DATA_DIR = Path(__file__).resolve().parent / "data"

PathLike = Union[str, Path]


class MalformedInput(ValueError):
    """A document does not match its schema."""


def parse_coeff(text: Any, ring: str) -> Scalar:
    if isinstance(text, bool) or isinstance(text, float):
        raise MalformedInput(f"coefficient {text!r} must be an exact integer string")
    if isinstance(text, int):
        return text
    if not isinstance(text, str):
        raise MalformedInput(f"coefficient {text!r} is not a string")
    s = text.strip()
    try:
        if "/" in s:
            if ring != "Q":
                raise MalformedInput(f"rational coefficient {text!r} needs ring Q")
            num, den = s.split("/")
            return Fraction(int(num), int(den))
        return int(s)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, MalformedInput):
            raise
        raise MalformedInput(f"cannot parse coefficient {text!r}") from None


def format_coeff(v: Scalar) -> str:
    if isinstance(v, Fraction) and v.denominator != 1:
        return f"{v.numerator}/{v.denominator}"
    return str(int(v))


def _require(doc: Mapping, key: str, where: str):
    if not isinstance(doc, Mapping) or key not in doc:
        raise MalformedInput(f"{where}: missing field {key!r}")
    return doc[key]


def _check_schema(doc: Mapping, where: str) -> None:
    schema = doc.get("schema", SCHEMA) if isinstance(doc, Mapping) else None
    if schema != SCHEMA:
        raise MalformedInput(f"{where}: unsupported schema {schema!r}")


def _entries_from_json(ops: Any, ring: str, where: str) -> Dict[int, List[Tuple[str, str, Scalar]]]:
    if not isinstance(ops, list):
        raise MalformedInput(f"{where}: operations must be a list")
    out: Dict[int, List[Tuple[str, str, Scalar]]] = {}
    for k, op in enumerate(ops):
        order = _require(op, "order", f"{where} operation {k}")
        if not isinstance(order, int) or order < 0:
            raise MalformedInput(f"{where} operation {k}: bad order {order!r}")
        for e in _require(op, "entries", f"{where} operation {k}"):
            out.setdefault(order, []).append((
                str(_require(e, "from", where)), str(_require(e, "to", where)),
                parse_coeff(_require(e, "coeff", where), ring)))
    return out


def _entries_to_json(n: int, entries_of) -> List[dict]:
    return [{"order": i, "entries": [{"from": a, "to": b, "coeff": format_coeff(v)}
                                     for a, b, v in entries_of(i)]}
            for i in range(n)]


def complex_from_json(doc: Mapping, ring: Optional[str] = None) -> S1Complex:
    _check_schema(doc, "complex")
    ring = ring or doc.get("ring", "Z")
    if ring not in ("Z", "Q"):
        raise MalformedInput(f"complex: unknown ring {ring!r}")
    gens = []
    for k, g in enumerate(_require(doc, "generators", "complex")):
        deg = _require(g, "degree", f"generator {k}")
        if not isinstance(deg, int) or isinstance(deg, bool):
            raise MalformedInput(f"generator {g.get('id', k)!r}: degree must be an integer")
        gens.append(Generator(str(_require(g, "id", f"generator {k}")), deg, str(g.get("label", ""))))
    entries = _entries_from_json(doc.get("operations", []), ring, "complex")
    try:
        return S1Complex.from_entries(gens, entries, ring)
    except KeyError as exc:
        raise MalformedInput(f"complex: {exc.args[0]}") from None
    except ValueError as exc:
        raise MalformedInput(f"complex: {exc}") from None


def complex_to_json(c: S1Complex) -> dict:
    return {
        "schema": SCHEMA,
        "ring": c.ring,
        "generators": [{"id": g.id, "degree": g.degree, "label": g.label} for g in c.generators],
        "operations": _entries_to_json(len(c.operations), c.entries),
    }


def map_from_json(doc: Mapping, source: S1Complex, target: S1Complex) -> S1Map:
    _check_schema(doc, "map")
    ring = "Q" if "Q" in (source.ring, target.ring) else "Z"
    entries = _entries_from_json(doc.get("operations", []), ring, "map")
    try:
        return S1Map.from_entries(source, target, entries)
    except KeyError as exc:
        raise MalformedInput(f"map: {exc.args[0]}") from None


def map_to_json(f: S1Map) -> dict:
    return {"schema": SCHEMA, "kind": "map",
            "operations": _entries_to_json(len(f.components), f.entries)}


def homotopy_from_json(doc: Mapping, first: S1Map, second: S1Map) -> S1Homotopy:
    _check_schema(doc, "homotopy")
    ring = "Q" if "Q" in (first.source.ring, first.target.ring) else "Z"
    entries = _entries_from_json(doc.get("operations", []), ring, "homotopy")
    try:
        return S1Homotopy.from_entries(first, second, entries)
    except KeyError as exc:
        raise MalformedInput(f"homotopy: {exc.args[0]}") from None


# ---------------------------------------------------------------------------
# Catalogs
# ---------------------------------------------------------------------------

def _exact_str(x: sympy.Expr) -> str:
    return str(x)


def _orbit_from_json(o: Mapping) -> OrbitDescriptor:
    oid = str(_require(o, "id", "orbit"))
    kind = str(o.get("kind", "nonconstant")).lower()
    if kind not in ("constant", "nonconstant"):
        raise MalformedInput(f"orbit {oid}: unknown kind {kind!r}")
    try:
        if kind == "constant":
            return OrbitDescriptor(oid, OrbitKind.CONSTANT, morse_index=_require(o, "morse_index", oid),
                                   morse_value=o.get("morse_value", "0"),
                                   homotopy_class=str(o.get("class", "0")))
        return OrbitDescriptor(
            oid, OrbitKind.NONCONSTANT, action=_require(o, "action", oid),
            grading_hat=_require(o, "grading_hat", oid), grading_check=_require(o, "grading_check", oid),
            homotopy_class=str(o.get("class", "0")), multiplicity=_require(o, "k", oid),
            parity=str(o.get("parity", "good")).lower(), sign_d=o.get("sign_d", 1),
            sign_bv=o.get("sign_bv", 1))
    except (sympy.SympifyError, TypeError) as exc:
        raise MalformedInput(f"orbit {oid}: {exc}") from None


def _orbit_to_json(o: OrbitDescriptor) -> dict:
    if o.kind is OrbitKind.CONSTANT:
        return {"id": o.id, "kind": "constant", "morse_index": o.morse_index,
                "morse_value": _exact_str(o.morse_value), "class": o.homotopy_class}
    return {"id": o.id, "kind": "nonconstant", "k": o.multiplicity, "parity": o.parity.value,
            "action": _exact_str(o.action), "grading_hat": o.grading_hat,
            "grading_check": o.grading_check, "class": o.homotopy_class,
            "sign_d": o.sign_d, "sign_bv": o.sign_bv}


def _triples(items: Any, ring: str, where: str) -> List[Tuple[str, str, Scalar]]:
    out = []
    for e in items or []:
        if isinstance(e, Mapping):
            out.append((str(_require(e, "from", where)), str(_require(e, "to", where)),
                        parse_coeff(_require(e, "coeff", where), ring)))
        elif isinstance(e, (list, tuple)) and len(e) == 3:
            out.append((str(e[0]), str(e[1]), parse_coeff(e[2], ring)))
        else:
            raise MalformedInput(f"{where}: bad entry {e!r}")
    return out


def catalog_from_json(doc: Mapping, ring: Optional[str] = None) -> StageSequence:
    _check_schema(doc, "catalog")
    ring = ring or doc.get("ring", "Z")
    stages = []
    for k, st in enumerate(_require(doc, "stages", "catalog")):
        where = f"stage {k + 1}"
        try:
            stages.append(HamiltonianStage(
                _require(st, "slope", where),
                tuple(_orbit_from_json(o) for o in st.get("orbits", [])),
                tuple(_triples(st.get("extra_d"), ring, where)),
                tuple(_triples(st.get("extra_bv"), ring, where)),
                thresholds=st.get("thresholds")))
        except sympy.SympifyError as exc:
            raise MalformedInput(f"{where}: {exc}") from None
    inclusions = []
    for k, inc in enumerate(doc.get("inclusions", [])):
        kappa = {}
        for op in inc.get("kappa", []):
            kappa[int(_require(op, "order", "kappa"))] = tuple(_triples(op.get("entries"), ring, "kappa"))
        inclusions.append(InclusionSpec(dict(_require(inc, "orbits", f"inclusion {k}")), kappa))
    return StageSequence(stages, inclusions, ring)


def catalog_to_json(seq: StageSequence) -> dict:
    def triples(es):
        return [{"from": a, "to": b, "coeff": format_coeff(v)} for a, b, v in es]

    stages = []
    for st in seq.stages:
        entry = {"slope": _exact_str(st.slope), "orbits": [_orbit_to_json(o) for o in st.orbits],
                 "extra_d": triples(st.extra_d), "extra_bv": triples(st.extra_bv)}
        if st.thresholds is not None:
            entry["thresholds"] = [_exact_str(t) for t in st.thresholds]
        stages.append(entry)
    incs = []
    for inc in seq.inclusions:
        item: dict = {"orbits": dict(inc.orbits)}
        if inc.kappa:
            item["kappa"] = [{"order": k, "entries": triples(v)} for k, v in sorted(inc.kappa.items())]
        incs.append(item)
    return {"schema": SCHEMA, "ring": seq.ring, "stages": stages, "inclusions": incs}


def sequence_system(seq: StageSequence, ring: Optional[str] = None,
                    max_stage: Optional[int] = None) -> DirectSystem:
    n = min(max_stage or len(seq), len(seq))
    stages = tuple(seq.complex(i, ring) for i in range(n))
    maps = tuple(build_continuation(seq, i, ring) for i in range(n - 1))
    return DirectSystem(stages, maps)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def resolve_path(path: PathLike, base: Optional[Path] = None) -> Path:
    """Find ``path`` as given, relative to ``base``, or among the bundled data files."""
    p = Path(path)
    for cand in (p, (base / p) if base is not None else None, DATA_DIR / p, DATA_DIR / "golden" / p):
        if cand is not None and cand.exists():
            return cand
    raise FileNotFoundError(f"no such input {str(path)!r}")


def load_json(path: PathLike, base: Optional[Path] = None) -> Tuple[Any, Path]:
    p = resolve_path(path, base)
    try:
        with open(p, encoding="utf-8") as fh:
            return json.load(fh), p
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{p.name}: invalid JSON ({exc})") from None


def document_kind(doc: Any) -> str:
    if not isinstance(doc, Mapping):
        raise MalformedInput("top-level JSON must be an object")
    if "generators" in doc:
        return "complex"
    if "catalog" in doc or ("stages" in doc and "maps" in doc):
        return "system"
    if "stages" in doc:
        return "catalog"
    raise MalformedInput("cannot tell whether the document is a complex, catalog, or system")


def system_from_json(doc: Mapping, base: Optional[Path] = None, ring: Optional[str] = None,
                     max_stage: Optional[int] = None) -> DirectSystem:
    """``{"catalog": path}`` or ``{"stages": [paths], "maps": [paths]}``."""
    _check_schema(doc, "system")
    if "catalog" in doc:
        cat, _ = load_json(doc["catalog"], base)
        return sequence_system(catalog_from_json(cat, ring), ring, max_stage)
    paths = _require(doc, "stages", "system")
    map_paths = _require(doc, "maps", "system")
    n = min(max_stage or len(paths), len(paths))
    stages = [complex_from_json(load_json(p, base)[0], ring) for p in paths[:n]]
    maps = [map_from_json(load_json(p, base)[0], stages[i], stages[i + 1])
            for i, p in enumerate(map_paths[:max(n - 1, 0)])]
    return DirectSystem(tuple(stages), tuple(maps))


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
