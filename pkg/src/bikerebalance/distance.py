"""Distance-matrix assembly from routing-API blocks, plus file I/O for matrices and stations."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .model import DistanceMatrix, Station, Tag

log = logging.getLogger(__name__)

MAX_BLOCK_POINTS = 50

STATION_FIELDS = ["id", "name", "longitude", "latitude", "capacity", "tag"]


class CoverageGap(ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"no block covers cell ({i}, {j})")
        self.cell = (i, j)


class DimensionMismatch(ValueError):
    pass


class MatrixFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MatrixBlock:
    row_ids: Tuple[int, ...]
    col_ids: Tuple[int, ...]
    values: np.ndarray
    profile: str = ""

    def __post_init__(self):
        object.__setattr__(self, "row_ids", tuple(int(i) for i in self.row_ids))
        object.__setattr__(self, "col_ids", tuple(int(i) for i in self.col_ids))
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValueError(
                f"block values have shape {vals.shape}, "
                f"expected ({len(self.row_ids)}, {len(self.col_ids)})"
            )
        if len(self.row_ids) > MAX_BLOCK_POINTS or len(self.col_ids) > MAX_BLOCK_POINTS:
            raise ValueError(f"blocks are limited to {MAX_BLOCK_POINTS}x{MAX_BLOCK_POINTS}")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("block values must be finite and non-negative")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass
class StitchReport:
    blocks: int = 0
    overwrites: int = 0
    # cells rewritten with a value different from the earlier block's
    conflicts: int = 0
    notes: List[str] = field(default_factory=list)


def stitch(blocks: Sequence[MatrixBlock], n: int, report: StitchReport | None = None) -> DistanceMatrix:
    """Assemble an n x n matrix from blocks; later blocks win on overlap.

    Raises CoverageGap naming the first (row-major) cell no block wrote, and
    DimensionMismatch if a block references an id >= n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    report = report if report is not None else StitchReport()
    out = np.zeros((n, n), dtype=np.float64)
    written = np.zeros((n, n), dtype=bool)
    for b in blocks:
        ids = b.row_ids + b.col_ids
        bad = [i for i in ids if i >= n]
        if bad:
            raise DimensionMismatch(f"block references station {bad[0]} but n={n}")
        rows = np.array(b.row_ids, dtype=np.intp)
        cols = np.array(b.col_ids, dtype=np.intp)
        sub_written = written[np.ix_(rows, cols)]
        if sub_written.any():
            report.overwrites += int(sub_written.sum())
            report.conflicts += int((sub_written & (out[np.ix_(rows, cols)] != b.values)).sum())
        out[np.ix_(rows, cols)] = b.values
        written[np.ix_(rows, cols)] = True
        report.blocks += 1
    np.fill_diagonal(written, True)
    if not written.all():
        i, j = np.argwhere(~written)[0]
        raise CoverageGap(int(i), int(j))
    np.fill_diagonal(out, 0.0)
    if report.conflicts:
        log.warning("stitch: %d overlapping cells disagreed; last block won", report.conflicts)
    return DistanceMatrix(out)


def _fmt(v: float) -> str:
    s = f"{v:.1f}"
    return s if float(s) == v else repr(float(v))


def dumps_matrix(matrix: DistanceMatrix) -> str:
    lines = [f"n={matrix.n}"]
    for row in matrix.rows():
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def save_matrix(matrix: DistanceMatrix, path) -> None:
    Path(path).write_text(dumps_matrix(matrix), encoding="utf-8")


def loads_matrix(text: str) -> DistanceMatrix:
    lines = [ln.strip() for ln in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise MatrixFormatError("empty matrix file")
    head = lines[0]
    if not head.startswith("n="):
        raise MatrixFormatError(f"expected header 'n=<int>', got {head[:40]!r}")
    try:
        n = int(head[2:])
    except ValueError:
        raise MatrixFormatError(f"bad dimension header {head!r}") from None
    if n < 1:
        raise MatrixFormatError(f"dimension must be >= 1, got {n}")
    body = lines[1:]
    if len(body) != n:
        raise MatrixFormatError(f"header says n={n} but file has {len(body)} rows")
    rows = []
    for k, ln in enumerate(body):
        cells = ln.split(",")
        if len(cells) != n:
            raise MatrixFormatError(f"row {k} has {len(cells)} values, expected {n}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise MatrixFormatError(f"row {k} contains a non-numeric value") from None
    try:
        return DistanceMatrix(rows)
    except ValueError as exc:
        raise MatrixFormatError(str(exc)) from None


def load_matrix(path) -> DistanceMatrix:
    return loads_matrix(Path(path).read_text(encoding="utf-8"))


# --- block fixture files ---------------------------------------------------

def save_block(block: MatrixBlock, path) -> None:
    doc = {
        "profile": block.profile,
        "row_ids": list(block.row_ids),
        "col_ids": list(block.col_ids),
        "distances": block.values.tolist(),
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_block(path) -> MatrixBlock:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return MatrixBlock(doc["row_ids"], doc["col_ids"], doc["distances"], doc.get("profile", ""))
    except KeyError as exc:
        raise MatrixFormatError(f"{path}: missing key {exc}") from None


def load_blocks(directory) -> List[MatrixBlock]:
    """All ``*.json`` blocks in a directory, in filename order (which fixes overwrite order)."""
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no block files in {directory}")
    return [load_block(p) for p in paths]


def plan_batches(ids: Sequence[int], batch_size: int = MAX_BLOCK_POINTS) -> List[List[int]]:
    """Point batches whose square blocks jointly cover every ordered pair of ``ids``.

    Ids are split into groups of half a batch; every pair of groups forms one
    batch, so 150 ids at batch size 50 need 15 requests.
    """
    if batch_size < 2 or batch_size > MAX_BLOCK_POINTS:
        raise ValueError(f"batch size must be in [2, {MAX_BLOCK_POINTS}]")
    ids = list(ids)
    if len(ids) <= batch_size:
        return [ids]
    half = batch_size // 2
    groups = [ids[k:k + half] for k in range(0, len(ids), half)]
    return [groups[a] + groups[b] for a in range(len(groups)) for b in range(a + 1, len(groups))]


# --- stations ----------------------------------------------------------------

def read_stations(path) -> List[Station]:
    stations = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = set(STATION_FIELDS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: station CSV missing columns {sorted(missing)}")
        for row in reader:
            try:
                stations.append(
                    Station(
                        id=int(row["id"]),
                        name=row["name"],
                        longitude=float(row["longitude"]),
                        latitude=float(row["latitude"]),
                        capacity=int(row["capacity"]),
                        tag=Tag(row["tag"].strip().lower()),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}, line {reader.line_num}: {exc}") from None
    for k, s in enumerate(stations):
        if s.id != k:
            raise ValueError(f"{path}: station ids must be 0..n-1 in order; row {k} has id {s.id}")
    if not stations:
        raise ValueError(f"{path}: no stations")
    return stations


def write_stations(stations: Iterable[Station], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(STATION_FIELDS)
        for s in stations:
            w.writerow([s.id, s.name, repr(s.longitude), repr(s.latitude), s.capacity, s.tag.value])


def haversine_m(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    lon1, lat1, lon2, lat2 = map(math.radians, (lon1, lat1, lon2, lat2))
    a = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6371008.8 * math.asin(math.sqrt(a))
