"""Regenerate the bundled catalogs and golden reports.

Run from the repository root after an intentional change to the models:
    python3 scripts/generate_data.py
"""
from __future__ import annotations

import json
from pathlib import Path

from cyclic_s1.cli import RunConfig, run
from cyclic_s1.floer_builder import model_sequence
from cyclic_s1.serialization import DATA_DIR, catalog_to_json, dump_json

STAGES = 6

GOLDENS = {
    "disk_cyclic.json": RunConfig("cyclic", ["disk.json"], "Q", "periodic", (-4, 4), stage=1),
    "disk_colimit.json": RunConfig("colimit", ["disk_system.json"], "Q", "periodic", (-4, 4),
                                   max_stage=5),
    "disk_telescope.json": RunConfig("telescope", ["disk_system.json"], "Z", "periodic", (-4, 2),
                                     max_stage=4),
    "annulus_cyclic.json": RunConfig("cyclic", ["annulus.json"], "Z", "periodic", (-2, 2), stage=4),
    "annulus_colimit.json": RunConfig("colimit", ["annulus_system.json"], "Z", "periodic", (-2, 2),
                                      max_stage=4),
    "annulus_spectral.json": RunConfig("spectral", ["annulus.json"], "Q", "periodic", (-2, 2),
                                       stage=3),
}


def main() -> None:
    for name in ("disk", "annulus"):
        doc = catalog_to_json(model_sequence(name, STAGES))
        (DATA_DIR / f"{name}.json").write_text(dump_json(doc), encoding="utf-8")
        system = {"schema": "psh/1", "catalog": f"{name}.json"}
        (DATA_DIR / f"{name}_system.json").write_text(dump_json(system), encoding="utf-8")
    for fname, cfg in GOLDENS.items():
        out = DATA_DIR / "golden" / fname
        cfg.format = "json"
        cfg.output = str(out)
        assert run(cfg) == 0, fname
        doc = json.loads(out.read_text(encoding="utf-8"))
        doc.pop("timestamp", None)
        out.write_text(dump_json(doc), encoding="utf-8")
        print("wrote", out)


if __name__ == "__main__":
    main()
