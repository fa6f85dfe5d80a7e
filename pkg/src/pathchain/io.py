"""CSV and JSON artifacts: point clouds, chains, targets, embeddings, samples."""

from __future__ import annotations

import json
import logging
import math
import re
from pathlib import Path

import numpy as np
import pandas as pd

from pathchain.chains import MarkovChain
from pathchain.embedding import Embedding
from pathchain.errors import InputError
from pathchain.geometry import PointCloud
from pathchain.ising import IsingSample
from pathchain.targets import StationaryTarget, custom_target

logger = logging.getLogger(__name__)

SAMPLE_META_COLUMNS = ("energy", "magnetization")
LABEL_COLUMN = "label"

_PANDAS_LINE = re.compile(r"line (\d+)")


def _read_cells(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise InputError(f"{path} is empty", line=1)
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise InputError(f"malformed CSV {path}: {e}", line=int(match.group(1)) if match else None)
    return frame


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_table(path: Path) -> tuple[pd.DataFrame, int]:
    """Rows of a CSV whose first column is an id, with an optional header.

    Returns the frame (string cells, named columns) and the file line number of
    its first data row, so callers can report errors by line.
    """
    frame = _read_cells(Path(path))
    first = frame.iloc[0].tolist()
    has_header = str(first[0]).strip().lower() == "id" or (
        len(first) > 1 and not any(_is_number(cell) for cell in first[1:])
    )
    if has_header:
        frame.columns = [str(c).strip() for c in first]
        return frame.iloc[1:].reset_index(drop=True), 2
    frame.columns = ["id"] + [f"x{i}" for i in range(1, frame.shape[1])]
    return frame, 1


def _to_float(cell: str) -> float:
    try:
        return float(cell)
    except (TypeError, ValueError):
        return math.nan


def _numeric(frame: pd.DataFrame, columns: list[str], first_line: int, path: Path) -> np.ndarray:
    # float() rounds correctly, so %.17g cells come back bit-for-bit
    rows = frame[columns].itertuples(index=False, name=None)
    values = np.array([[_to_float(cell) for cell in row] for row in rows], dtype=float)
    values = values.reshape(len(frame), len(columns))
    bad = np.isnan(values).any(axis=1)
    if bad.any():
        row = int(np.argmax(bad))
        raise InputError(f"non-numeric value in {path} at line {first_line + row}", line=first_line + row)
    return values


def read_point_cloud(
    path, meta_columns=SAMPLE_META_COLUMNS,
) -> tuple[PointCloud, pd.DataFrame]:
    """Point cloud plus the excluded metadata columns (e.g. Ising energies)."""
    path = Path(path)
    frame, first_line = read_table(path)
    id_column = frame.columns[0]
    meta = [c for c in frame.columns[1:] if c in meta_columns]
    label = LABEL_COLUMN if LABEL_COLUMN in frame.columns[1:] else None
    coords = [c for c in frame.columns[1:] if c not in meta and c != label]
    if not coords:
        raise InputError(f"{path} has no coordinate columns", line=1)

    points = _numeric(frame, coords, first_line, path)
    metadata = pd.DataFrame(_numeric(frame, meta, first_line, path), columns=meta) if meta else pd.DataFrame()
    ids = tuple(frame[id_column].str.strip())
    labels = tuple(frame[label]) if label else None
    try:
        cloud = PointCloud(points, ids, labels)
    except InputError as e:
        raise InputError(f"{path}: {e}", line=e.line)
    logger.info("io: read %d points x %d coordinates from %s", cloud.size, cloud.dimension, path)
    return cloud, metadata


def write_matrix(path, matrix: np.ndarray, ids) -> None:
    frame = pd.DataFrame(matrix, index=list(ids), columns=list(ids))
    frame.to_csv(path, index_label="id", float_format="%.17g")


def read_matrix(path) -> tuple[np.ndarray, tuple[str, ...]]:
    path = Path(path)
    frame, first_line = read_table(path)
    ids = tuple(frame[frame.columns[0]].str.strip())
    matrix = _numeric(frame, list(frame.columns[1:]), first_line, path)
    if matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"{path} is {matrix.shape[0]} x {matrix.shape[1]}, expected a square matrix")
    return matrix, ids


def write_vector(path, values: np.ndarray, ids, name: str = "probability") -> None:
    pd.DataFrame({"id": list(ids), name: values}).to_csv(path, index=False, float_format="%.17g")


def read_vector(path, column: str | None = None) -> tuple[np.ndarray, tuple[str, ...]]:
    path = Path(path)
    frame, first_line = read_table(path)
    name = column or frame.columns[1]
    if name not in frame.columns:
        raise InputError(f"{path} has no column {name!r}")
    values = _numeric(frame, [name], first_line, path)[:, 0]
    return values, tuple(frame[frame.columns[0]].str.strip())


def write_chain(out_dir, chain: MarkovChain, ids) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    q_path, p_path = out_dir / "q.csv", out_dir / "p.csv"
    write_matrix(q_path, chain.q, ids)
    write_vector(p_path, chain.p, ids)
    return q_path, p_path


def read_chain(q_path, p_path, reversible: bool = True) -> MarkovChain:
    q, ids = read_matrix(q_path)
    p, p_ids = read_vector(p_path)
    if p.size != q.shape[0]:
        raise InputError(f"stationary vector has {p.size} entries for a {q.shape[0]}-state chain")
    if p_ids != ids:
        raise InputError("chain and stationary files list different ids")
    return MarkovChain(q, p, reversible=reversible, provenance="loaded", ids=ids)


def write_target(path, target: StationaryTarget, ids) -> None:
    write_vector(path, target.p, ids)


def read_target(path, ids=None) -> StationaryTarget:
    p, file_ids = read_vector(path)
    if ids is not None and tuple(ids) != file_ids:
        raise InputError(f"target ids in {path} do not match the point cloud")
    return custom_target(p, file_ids)


def write_embedding(path, embedding: Embedding, ids) -> None:
    frame = pd.DataFrame(embedding.coords, columns=[f"D{i + 1}" for i in range(embedding.dimension)])
    frame.insert(0, "id", list(ids))
    frame.to_csv(path, index=False, float_format="%.17g")


def write_ising_sample(path, sample: IsingSample) -> None:
    spins = pd.DataFrame(sample.configurations, columns=[f"s{i}" for i in range(sample.L ** 2)])
    spins.insert(0, "magnetization", sample.magnetizations)
    spins.insert(0, "energy", sample.energies)
    spins.insert(0, "id", [f"s{i:05d}" for i in range(sample.size)])
    spins.to_csv(path, index=False, float_format="%.17g")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")
