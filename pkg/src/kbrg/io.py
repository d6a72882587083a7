"""File formats: delimited tables, flat config files and run manifests.

All floating-point values are emitted with 17 significant digits so that
round-tripping through text preserves the double exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path

from .errors import ParameterError


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def parse_config_file(path) -> dict:
    """Flat key-value config: one `key = value` per line, '#' comments."""
    out: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"malformed config line {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_config_file(path, config: dict) -> Path:
    path = Path(path)
    lines = [f"{key} = {fmt(value)}" for key, value in config.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_manifest(out_dir, config: dict, seeds, outputs, version: str) -> Path:
    """Manifest JSON covering every output file with its digest."""
    out_dir = Path(out_dir)
    manifest = {
        "config": {k: (fmt(v) if isinstance(v, float) else v) for k, v in config.items()},
        "version": version,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "seeds": seeds,
        "outputs": [
            {"path": str(Path(p).relative_to(out_dir)), "sha256": sha256_of(p)}
            for p in outputs
        ],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def verify_manifest(out_dir) -> bool:
    """Re-hash every listed output and compare against the manifest."""
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    for entry in manifest["outputs"]:
        if sha256_of(out_dir / entry["path"]) != entry["sha256"]:
            return False
    return True
