"""Reading and writing the plot-ready data files emitted by the CLI.

Two formats: CSV with `# key = value` metadata lines followed by a
`delta,value,count` table, or a single JSON document per command.  Both
embed the full experiment configuration so a file can be regenerated from
its own header, and both are written deterministically byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

__all__ = [
    "write_grid_csv",
    "read_grid_csv",
    "write_json_doc",
    "read_json_doc",
    "find_grid",
]

_MAGIC = "rggdist-grid v1"


def _format_value(v: float) -> str:
    return repr(float(v))


def write_grid_csv(
    path: Path,
    meta: Mapping[str, Any],
    delta: np.ndarray,
    values: np.ndarray,
    counts: np.ndarray | None = None,
) -> Path:
    if counts is None:
        counts = np.zeros(len(delta), dtype=np.int64)
    lines = [f"# {_MAGIC}"]
    for key, value in meta.items():
        lines.append(f"# {key} = {json.dumps(value)}")
    lines.append("delta,value,count")
    for m, v, c in zip(delta, values, counts):
        lines.append(f"{m:.6f},{_format_value(v)},{int(c)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_grid_csv(path: Path) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    meta: dict[str, Any] = {}
    delta: list[float] = []
    values: list[float] = []
    counts: list[int] = []
    header_seen = False
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body == _MAGIC:
                continue
            key, _, raw = body.partition("=")
            if raw:
                try:
                    meta[key.strip()] = json.loads(raw.strip())
                except json.JSONDecodeError:
                    meta[key.strip()] = raw.strip()
            continue
        if not header_seen:
            if line.strip() != "delta,value,count":
                raise ValueError(f"{path}: unexpected column header {line!r}")
            header_seen = True
            continue
        d, v, c = line.split(",")
        delta.append(float(d))
        values.append(float(v))
        counts.append(int(c))
    if not header_seen:
        raise ValueError(f"{path}: not a grid file")
    return meta, np.array(delta), np.array(values), np.array(counts, dtype=np.int64)


def write_json_doc(path: Path, doc: Mapping[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def read_json_doc(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def grid_record(
    kind: str, d: int, delta: np.ndarray, values: np.ndarray, counts: np.ndarray | None
) -> dict:
    """Grid as a JSON-ready record mirroring the CSV columns."""
    return {
        "kind": kind,
        "d": int(d),
        "delta": [round(float(m), 6) for m in delta],
        "value": [float(v) for v in values],
        "count": [int(c) for c in (counts if counts is not None else np.zeros(len(delta)))],
    }


def find_grid(
    source: Path, kind: str, d: int
) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    """Locate one grid by kind ('P' or 'p') and hop count.

    source may be a JSON document, a CSV grid file, or a directory holding
    either (CSV names follow the CLI conventions).
    """
    source = Path(source)
    if source.is_dir():
        stems = [f"{kind}_d{d}.csv", f"{kind}_hat_d{d}.csv"]
        for stem in stems:
            candidate = source / stem
            if candidate.exists():
                return read_grid_csv(candidate)
        for name in ("analytic.json", "simulate.json"):
            candidate = source / name
            if candidate.exists():
                try:
                    return _grid_from_doc(read_json_doc(candidate), kind, d)
                except KeyError:
                    continue
        raise FileNotFoundError(
            f"no {kind} grid for d = {d} under {source} (looked for "
            f"{', '.join(stems)} and JSON documents)"
        )
    if source.suffix == ".json":
        return _grid_from_doc(read_json_doc(source), kind, d)
    meta, delta, values, counts = read_grid_csv(source)
    if meta.get("kind") not in (None, kind) or meta.get("d") not in (None, d):
        raise ValueError(
            f"{source}: holds kind={meta.get('kind')} d={meta.get('d')}, "
            f"wanted kind={kind} d={d}"
        )
    return meta, delta, values, counts


def _grid_from_doc(
    doc: Mapping[str, Any], kind: str, d: int
) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    for record in doc.get("grids", ()):
        if record.get("kind") == kind and record.get("d") == d:
            meta = dict(doc.get("config", {}))
            meta["kind"] = kind
            meta["d"] = d
            return (
                meta,
                np.array(record["delta"], dtype=float),
                np.array(record["value"], dtype=float),
                np.array(record["count"], dtype=np.int64),
            )
    raise KeyError(f"no {kind} grid for d = {d} in document")
