"""On-disk formats: profile text, checkpoint container, diagnostics CSV, JSON reports."""

from __future__ import annotations

import csv
import json
import math
import shlex
import stat
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exact import BarrierFn
from .profile import RadialProfile
from .solver import DiagnosticRegions, Diagnostics, FlowSeries

CHECKPOINT_MAGIC = "# burstlab checkpoint v1"
DIAGNOSTIC_COLUMNS = (
    "t",
    "supK",
    "infK",
    "vol_total",
    "vol_bulb",
    "width",
    "noose_rho",
    "noose_len",
    "noose_area",
)
SWEEP_COLUMNS = ("r_c", "t1", "burst_start", "burst_end", "peakK", "recovery_time", "error")


class FormatError(ValueError):
    """Raised when a file does not follow the expected layout."""


def _number(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _cap_json(cap: BarrierFn | None) -> str:
    return json.dumps(cap.to_dict() if cap else None, sort_keys=True)


def _cap_from(text: str) -> BarrierFn | None:
    payload = json.loads(text)
    return BarrierFn.from_dict(payload) if payload else None


def _node_lines(profile: RadialProfile) -> list[str]:
    return [f"{s!r} {u!r}" for s, u in zip(profile.s.tolist(), profile.u.tolist())]


def write_profile(path: Path, profile: RadialProfile) -> Path:
    """Two columns s, u; the tip cap goes into a comment header."""

    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# cap: {_cap_json(profile.cap)}", "# s u", *_node_lines(profile)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_profile(path: Path) -> RadialProfile:
    cap: BarrierFn | None = None
    rows: list[tuple[float, float]] = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("# cap:"):
            cap = _cap_from(line[len("# cap:"):])
            continue
        if line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"{path}:{number}: expected two columns, got {len(parts)}")
        rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise FormatError(f"{path}: no profile rows")
    data = np.array(rows)
    return RadialProfile(data[:, 0], data[:, 1], cap)


def write_checkpoint(path: Path, series: FlowSeries, *, stride: int = 1) -> Path:
    """All frames (every stride-th, the last always kept) in one text container."""

    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    indices = list(range(0, len(series), stride))
    if len(series) and indices[-1] != len(series) - 1:
        indices.append(len(series) - 1)
    meta = {
        "cadence": series.cadence * stride,
        "complete": series.complete,
        "failure": series.failure,
        "regions": {"bulb_from": series.regions.bulb_from, "width_from": series.regions.width_from},
        "frames": len(indices),
    }
    lines = [CHECKPOINT_MAGIC, json.dumps(meta, sort_keys=True)]
    for index in indices:
        profile = series.profiles[index]
        header = {
            "t": series.times[index],
            "nodes": len(profile),
            "cap": profile.cap.to_dict() if profile.cap else None,
            "diagnostics": {k: v for k, v in series.diagnostics[index].row().items()},
        }
        lines.append("@frame " + json.dumps(header, sort_keys=True))
        lines.extend(_node_lines(profile))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _diagnostics_from(row: Mapping[str, float | None]) -> Diagnostics:
    return Diagnostics(
        t=float(row["t"]),  # type: ignore[arg-type]
        sup_k=float(row["supK"]),  # type: ignore[arg-type]
        inf_k=float(row["infK"]),  # type: ignore[arg-type]
        vol_total=float(row["vol_total"]),  # type: ignore[arg-type]
        vol_bulb=float(row["vol_bulb"]),  # type: ignore[arg-type]
        width=float(row["width"]),  # type: ignore[arg-type]
        noose_rho=row.get("noose_rho"),
        noose_len=row.get("noose_len"),
        noose_area=row.get("noose_area"),
    )


def read_checkpoint(path: Path) -> FlowSeries:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a burstlab checkpoint")
    try:
        meta = json.loads(lines[1])
    except (IndexError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable checkpoint header") from exc
    regions = DiagnosticRegions(**meta["regions"])
    series = FlowSeries(regions=regions, cadence=float(meta["cadence"]))
    series.complete = bool(meta["complete"])
    series.failure = meta["failure"]
    position = 2
    while position < len(lines):
        line = lines[position]
        if not line.startswith("@frame "):
            raise FormatError(f"{path}:{position + 1}: expected a frame header")
        header = json.loads(line[len("@frame "):])
        count = int(header["nodes"])
        block = lines[position + 1 : position + 1 + count]
        if len(block) != count:
            raise FormatError(f"{path}: frame at t={header['t']} is truncated")
        data = np.array([[float(x) for x in row.split()] for row in block])
        cap = BarrierFn.from_dict(header["cap"]) if header["cap"] else None
        profile = RadialProfile(data[:, 0], data[:, 1], cap)
        series.append(float(header["t"]), profile, _diagnostics_from(header["diagnostics"]))
        position += 1 + count
    if len(series) != int(meta["frames"]):
        raise FormatError(f"{path}: expected {meta['frames']} frames, found {len(series)}")
    return series


def write_diagnostics_csv(path: Path, series: FlowSeries) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(DIAGNOSTIC_COLUMNS), lineterminator="\n")
        writer.writeheader()
        for diagnostics in series.diagnostics:
            writer.writerow({key: _number(value) for key, value in diagnostics.row().items()})
    return path


def read_diagnostics_csv(path: Path) -> list[dict[str, float | None]]:
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(DIAGNOSTIC_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise FormatError(f"{path}: missing columns {sorted(missing)}")
        return [
            {key: float(value) if value != "" else None for key, value in row.items()}
            for row in reader
        ]


def write_rows_csv(path: Path, rows: Iterable[Mapping[str, object]], columns: Sequence[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    key: _number(value) if isinstance(value, float) or value is None else value
                    for key, value in row.items()
                    if key in columns
                }
            )
    return path


def _clean(value: object) -> object:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.floating):
        return _clean(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Mapping):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def write_json(path: Path, payload: Mapping[str, object]) -> Path:
    """Sorted keys, non-finite numbers as null, trailing newline."""

    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def run_directory(root: Path, label: str, *, forced: Path | None = None) -> Path:
    """A fresh timestamped directory under root, or `forced` as given."""

    if forced is not None:
        forced.mkdir(parents=True, exist_ok=True)
        return forced
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    candidate = root / f"{label}-{stamp}"
    suffix = 1
    while candidate.exists():
        suffix += 1
        candidate = root / f"{label}-{stamp}-{suffix}"
    candidate.mkdir(parents=True)
    return candidate


def _without_out(words: Sequence[str]) -> list[str]:
    kept: list[str] = []
    skip = False
    for word in words:
        if skip:
            skip = False
        elif word == "--out":
            skip = True
        elif not word.startswith("--out="):
            kept.append(word)
    return kept


def _cd_line(cwd: Path) -> str:
    try:
        relative = cwd.relative_to(Path.home())
    except (ValueError, RuntimeError):
        return f"cd {shlex.quote(str(cwd))}"
    if relative == Path("."):
        return "cd ~"
    return f"cd ~/{shlex.quote(relative.as_posix())}"


def write_doit_file(
    run_dir: Path, command: str | None, argv: Sequence[str] = (), *, cwd: Path | None = None
) -> Path:
    """Write `doit`, a bash script that repeats the invocation from the directory it started in.

    --out is dropped so the rerun lands in a fresh run directory next to this one.
    """

    run_dir.mkdir(parents=True, exist_ok=True)
    words = shlex.split(command) if command else ["burstlab", *argv]
    lines = [
        "#! /usr/bin/env bash",
        f"# rerun of {run_dir.name}",
        "set -e",
        _cd_line(cwd or Path.cwd()),
        shlex.join(_without_out(words)),
    ]
    destination = run_dir / "doit"
    destination.write_text("\n".join(lines) + "\n", encoding="utf-8")
    destination.chmod(destination.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return destination


def append_failure(run_dir: Path, phase: str, message: str) -> Path:
    """Append `{timestamp} ERROR <phase> -> <message>` to failures.log."""

    run_dir.mkdir(parents=True, exist_ok=True)
    destination = run_dir / "failures.log"
    stamp = datetime.now().isoformat(timespec="seconds")
    with destination.open("a", encoding="utf-8") as handle:
        handle.write(f"{stamp} ERROR {phase} -> {message}\n")
    return destination
