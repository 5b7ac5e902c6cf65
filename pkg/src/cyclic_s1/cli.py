"""Command-line front end: ``cyclic-s1 <command> [options] INPUT``.

Exit codes: 0 success, 1 verification or golden-file failure, 2 malformed input.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .exact_linear import AbelianGroup
from .filtration_ss import FiltrationViolation, degeneration_certificate
from .floer_builder import CatalogError, HomotopyClassViolation, build_continuation
from .limits_telescope import (
    build_telescope,
    colimit_homology,
    induced_map_vanishes,
    telescope_cyclic,
    telescope_system,
)
from .s1_complex import (
    EmptyWindow,
    GradingMismatch,
    LaurentWindow,
    RelationFailure,
    S1Complex,
    cyclic_homology,
    delta0_homology,
    verify_s1_map,
    verify_s1_structure,
)
from .serialization import (
    SCHEMA,
    MalformedInput,
    catalog_from_json,
    complex_from_json,
    document_kind,
    dump_json,
    load_json,
    sequence_system,
    system_from_json,
)

COMMANDS = ("verify", "homology", "cyclic", "spectral", "telescope", "colimit")
IGNORED_KEYS = frozenset({"timestamp"})


class VerificationFailed(Exception):
    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


@dataclass
class RunConfig:
    command: str
    inputs: List[str]
    ring: Optional[str] = None
    variant: str = "periodic"
    degrees: Optional[Tuple[int, int]] = None
    truncation: Optional[Tuple[int, int]] = None
    max_stage: Optional[int] = None
    stage: Optional[int] = None
    format: str = "text"
    golden: Optional[str] = None
    output: Optional[str] = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise MalformedInput(f"unknown command {self.command!r}")
        if self.degrees is not None and self.degrees[0] > self.degrees[1]:
            raise MalformedInput("degree window must be non-empty")
        if self.max_stage is not None and self.max_stage < 1:
            raise MalformedInput("--max-stage must be at least 1")
        if self.ring not in (None, "Z", "Q"):
            raise MalformedInput(f"unknown ring {self.ring!r}")

    def window(self) -> LaurentWindow:
        if self.truncation is not None:
            m, n = self.truncation
            if m < n:
                raise MalformedInput(f"truncation ({m},{n}) needs m >= n")
            return LaurentWindow.truncation(m, n)
        if self.variant == "truncation":
            raise MalformedInput("--variant truncation needs --truncation m,n")
        try:
            return LaurentWindow.parse(self.variant)
        except ValueError:
            raise MalformedInput(f"unknown variant {self.variant!r}") from None


# ---------------------------------------------------------------------------
# Golden comparison
# ---------------------------------------------------------------------------

@dataclass
class GoldenDiff:
    ok: bool
    differences: List[str] = field(default_factory=list)

    def __str__(self) -> str:
        if self.ok:
            return "golden: match"
        return "golden: MISMATCH\n" + "\n".join("  " + d for d in self.differences)


GROUP_KEYS = frozenset({"free_rank", "torsion"})


def _as_group(x: Any) -> Optional[str]:
    if isinstance(x, dict) and GROUP_KEYS <= set(x):
        try:
            return str(AbelianGroup(x["free_rank"], tuple(x["torsion"])))
        except (TypeError, ValueError):
            return None
    return None


def _diff(expected: Any, actual: Any, path: str, out: List[str]) -> None:
    ge, ga = _as_group(expected), _as_group(actual)
    if ge is not None or ga is not None:
        # compare the group as a whole, then any sibling keys such as the degree
        if ge != ga:
            out.append(f"{path}: expected {ge or repr(expected)}, got {ga or repr(actual)}")
        if ge is None or ga is None:
            return
    if isinstance(expected, dict) and isinstance(actual, dict):
        skip = IGNORED_KEYS | (GROUP_KEYS if ge is not None else frozenset())
        for key in sorted(set(expected) | set(actual)):
            if key in skip:
                continue
            sub = f"{path}.{key}" if path else key
            if key not in actual:
                out.append(f"{sub}: missing from report")
            elif key not in expected:
                out.append(f"{sub}: not in golden")
            else:
                _diff(expected[key], actual[key], sub, out)
        return
    if isinstance(expected, list) and isinstance(actual, list):
        for k in range(max(len(expected), len(actual))):
            sub = f"{path}[{_label(expected, actual, k)}]"
            if k >= len(actual):
                out.append(f"{sub}: missing from report (expected {_short(expected[k])})")
            elif k >= len(expected):
                out.append(f"{sub}: not in golden (got {_short(actual[k])})")
            else:
                _diff(expected[k], actual[k], sub, out)
        return
    if expected != actual:
        out.append(f"{path}: expected {expected!r}, got {actual!r}")


def _label(a: list, b: list, k: int) -> str:
    for seq in (a, b):
        if k < len(seq) and isinstance(seq[k], dict):
            for key in ("degree", "stage", "r"):
                if key in seq[k]:
                    return f"{key}={seq[k][key]}"
    return str(k)


def _short(x: Any) -> str:
    g = _as_group(x)
    return g if g is not None else repr(x)


def compare_golden(report: dict, golden_path: str) -> GoldenDiff:
    golden, _ = load_json(golden_path)
    out: List[str] = []
    _diff(golden, report, "", out)
    return GoldenDiff(not out, out)


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------

def format_group(g: AbelianGroup, ring: Optional[str]) -> str:
    text = str(g)
    return text.replace("Z", "Q") if ring == "Q" and not g.torsion else text


def _groups_json(groups: Dict[int, AbelianGroup]) -> List[dict]:
    return [{"degree": n, **g.to_json()} for n, g in sorted(groups.items())]


def _load(cfg: RunConfig):
    if not cfg.inputs:
        raise MalformedInput("no input file given")
    doc, path = load_json(cfg.inputs[0])
    return document_kind(doc), doc, path


def _stage_complex(cfg: RunConfig) -> Tuple[S1Complex, str]:
    kind, doc, path = _load(cfg)
    if kind == "complex":
        return complex_from_json(doc, cfg.ring), path.name
    if kind == "catalog":
        seq = catalog_from_json(doc, cfg.ring)
        stage = 1 if cfg.stage is None else cfg.stage
        if not 1 <= stage <= len(seq):
            raise MalformedInput(f"--stage {stage} outside 1..{len(seq)}")
        return seq.complex(stage - 1), path.name
    raise MalformedInput("this command needs a complex or a catalog")


def _system(cfg: RunConfig):
    kind, doc, path = _load(cfg)
    if kind == "system":
        return system_from_json(doc, path.parent, cfg.ring, cfg.max_stage), path.name
    if kind == "catalog":
        return sequence_system(catalog_from_json(doc, cfg.ring), cfg.ring, cfg.max_stage), path.name
    raise MalformedInput("this command needs a system or a catalog")


def _need_degrees(cfg: RunConfig) -> Tuple[int, int]:
    if cfg.degrees is None:
        raise MalformedInput("--degrees lo..hi is required")
    return cfg.degrees


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_verify(cfg: RunConfig) -> Tuple[dict, List[str]]:
    kind, doc, path = _load(cfg)
    lines: List[str] = []
    checks: List[dict] = []

    def record(name: str, rep) -> None:
        checks.append({"name": name, **rep.to_json()})
        lines.append(f"{name}: {'ok' if rep else 'FAIL'}" + ("" if rep else f" ({rep.witness})"))

    if kind == "complex":
        record(path.name, verify_s1_structure(complex_from_json(doc, cfg.ring)))
    elif kind == "catalog":
        seq = catalog_from_json(doc, cfg.ring)
        for i in range(len(seq)):
            c = seq.complex(i)
            record(f"stage {i + 1}", verify_s1_structure(c))
            if seq.stages[i].thresholds is not None:
                seq.filtered(i)
                lines.append(f"stage {i + 1} filtration: ok")
        for i in range(len(seq) - 1):
            record(f"continuation {i + 1}->{i + 2}", verify_s1_map(build_continuation(seq, i)))
    else:
        sys_ = system_from_json(doc, path.parent, cfg.ring)
        for i, c in enumerate(sys_.stages):
            record(f"stage {i + 1}", verify_s1_structure(c))
        for i, f in enumerate(sys_.maps):
            record(f"map {i + 1}->{i + 2}", verify_s1_map(f))
    result = {"checks": checks, "ok": all(c["ok"] for c in checks)}
    if not result["ok"]:
        raise VerificationFailed("\n".join(lines), result)
    return result, lines


def _cmd_homology(cfg: RunConfig) -> Tuple[dict, List[str]]:
    degrees = _need_degrees(cfg)
    c, _ = _stage_complex(cfg)
    _ensure_verified(c)
    groups = delta0_homology(c, degrees)
    return {"ring": c.ring, "groups": _groups_json(groups)}, [f"H^{n} = {format_group(g, c.ring)}" for n, g in sorted(groups.items())]


def _ensure_verified(c: S1Complex) -> None:
    rep = verify_s1_structure(c)
    if not rep:
        raise VerificationFailed(str(rep.witness), {"checks": [rep.to_json()]})


def _cmd_cyclic(cfg: RunConfig) -> Tuple[dict, List[str]]:
    degrees = _need_degrees(cfg)
    c, _ = _stage_complex(cfg)
    _ensure_verified(c)
    w = cfg.window()
    groups = cyclic_homology(c, w, degrees)
    return ({"ring": c.ring, "window": str(w), "groups": _groups_json(groups)},
            [f"{w} H^{n} = {format_group(g, c.ring)}" for n, g in sorted(groups.items())])


def _cmd_spectral(cfg: RunConfig) -> Tuple[dict, List[str]]:
    degrees = _need_degrees(cfg)
    kind, doc, _ = _load(cfg)
    if kind != "catalog":
        raise MalformedInput("spectral needs a catalog (filtration levels come from actions)")
    seq = catalog_from_json(doc, cfg.ring)
    stage = 1 if cfg.stage is None else cfg.stage
    if not 1 <= stage <= len(seq):
        raise MalformedInput(f"--stage {stage} outside 1..{len(seq)}")
    fc = seq.filtered(stage - 1)
    cert = degeneration_certificate(fc, cfg.window(), degrees)
    lines = [f"certificate: {cert.status}"]
    for pg in cert.pages:
        for (p, q), g in sorted(pg.entries.items()):
            if not g.is_zero:
                lines.append(f"E_{pg.r}^({p},{q}) = {format_group(g, 'Q')}")
    lines.append("E_1 totals vs H: " + ", ".join(
        f"{n}:{cert.e1_totals[n]}/{cert.homology_ranks[n]}" for n in sorted(cert.e1_totals)))
    out = cert.to_json()
    out["stage"] = stage
    out["ring"] = "Q"
    return out, lines


def _cmd_telescope(cfg: RunConfig) -> Tuple[dict, List[str]]:
    degrees = _need_degrees(cfg)
    sys_, _ = _system(cfg)
    N = min(cfg.max_stage or len(sys_), len(sys_))
    w = cfg.window()
    d0 = LaurentWindow.truncation(1, 0)
    tels = telescope_system(sys_, N)
    stages, lines = [], []
    for n_stage in range(1, N + 1):
        t = build_telescope(sys_, n_stage)
        groups = telescope_cyclic(t, w, degrees)
        entry: Dict[str, Any] = {"stage": n_stage, "groups": _groups_json(groups)}
        if n_stage < N:
            dies = {n: induced_map_vanishes(tels.maps[n_stage - 1], d0, n)
                    for n in range(degrees[0], degrees[1] + 1)}
            entry["delta0_classes_die_next"] = all(dies.values())
        stages.append(entry)
        lines.append(f"N={n_stage}: " + ", ".join(f"{n}:{format_group(g, sys_.ring)}" for n, g in sorted(groups.items())))
        if "delta0_classes_die_next" in entry:
            lines.append(f"  delta0 classes die in N={n_stage + 1}: {entry['delta0_classes_die_next']}")
    return {"ring": sys_.ring, "window": str(w), "stages": stages}, lines


def _cmd_colimit(cfg: RunConfig) -> Tuple[dict, List[str]]:
    degrees = _need_degrees(cfg)
    sys_, _ = _system(cfg)
    res = colimit_homology(sys_, cfg.window(), degrees, cfg.max_stage)
    lines = []
    for n in sorted(res.dimension):
        groups = " | ".join(format_group(g, sys_.ring) for g in res.stage_groups[n])
        dim = res.dimension[n]
        state = f"dim {dim} (stable from stage {res.stable_from[n]})" if dim is not None else "NOT STABILIZED"
        lines.append(f"degree {n}: {state}; stages: {groups}")
    out = res.to_json()
    out["ring"] = sys_.ring
    return out, lines


HANDLERS = {
    "verify": _cmd_verify,
    "homology": _cmd_homology,
    "cyclic": _cmd_cyclic,
    "spectral": _cmd_spectral,
    "telescope": _cmd_telescope,
    "colimit": _cmd_colimit,
}


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        result, lines = HANDLERS[cfg.command](cfg)
        code = 0
    except VerificationFailed as exc:
        print(f"verification failed:\n{exc}", file=stderr)
        result, lines, code = exc.report or {}, [], 1
    except (RelationFailure, HomotopyClassViolation, FiltrationViolation, GradingMismatch) as exc:
        print(f"verification failed: {exc}", file=stderr)
        return 1
    except (MalformedInput, CatalogError, FileNotFoundError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"malformed input: {msg}", file=stderr)
        return 2
    report = {
        "schema": SCHEMA,
        "command": cfg.command,
        "input": [Path(p).name for p in cfg.inputs],
        "ring": result.get("ring", cfg.ring),
        "degrees": list(cfg.degrees) if cfg.degrees else None,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "result": result,
    }
    if cfg.command in ("cyclic", "spectral", "telescope", "colimit"):
        report["variant"] = str(cfg.window())
    if cfg.command in ("telescope", "colimit"):
        report["max_stage"] = cfg.max_stage
    if cfg.command in ("homology", "cyclic", "spectral"):
        report["stage"] = cfg.stage
    text = dump_json(report) if cfg.format == "json" else "\n".join(lines) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    if cfg.golden and code == 0:
        try:
            diff = compare_golden(report, cfg.golden)
        except (MalformedInput, FileNotFoundError) as exc:
            print(f"malformed input: {exc}", file=stderr)
            return 2
        print(str(diff), file=stderr)
        if not diff.ok:
            return 1
    return code


def _degrees(text: str) -> Tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo..hi, got {text!r}") from None


def _pair(text: str) -> Tuple[int, int]:
    try:
        m, n = text.split(",")
        return int(m), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected m,n, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cyclic-s1", description="Exact cyclic homology of S^1-complexes.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("inputs", nargs="+", help="complex, catalog, or system JSON (bundled names work too)")
    p.add_argument("--ring", choices=("Z", "Q"))
    p.add_argument("--variant", default="periodic",
                   choices=("negative", "periodic", "quotient", "truncation"))
    p.add_argument("--degrees", type=_degrees, help="inclusive total-degree window lo..hi")
    p.add_argument("--truncation", type=_pair, metavar="M,N", help="use C<m,n>")
    p.add_argument("--max-stage", type=int, default=None)
    p.add_argument("--stage", type=int, default=None, help="1-based catalog stage")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--golden", metavar="PATH")
    p.add_argument("--output", "-o", metavar="PATH")
    return p


def _glue_negative_values(argv: Sequence[str]) -> List[str]:
    # argparse treats "-4..4" as an option; glue it onto its flag
    out: List[str] = []
    it = iter(argv)
    for a in it:
        if a in ("--degrees", "--truncation"):
            nxt = next(it, None)
            if nxt is None:
                out.append(a)
            else:
                out.append(f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_glue_negative_values(argv))
    if args.command not in ("verify",) and args.degrees is None:
        print("malformed input: --degrees lo..hi is required", file=sys.stderr)
        return 2
    try:
        cfg = RunConfig(args.command, args.inputs, args.ring, args.variant, args.degrees,
                        args.truncation, args.max_stage, args.stage, args.format, args.golden,
                        args.output)
    except MalformedInput as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyWindow)
        return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
