"""
Feature Store - feature CSVs with JSON sidecars, evaluation reports, sweep tables
"""

import hashlib
import json
import logging
import os
import re
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from app import __version__
from app.errors import ParseError, SidecarMismatchError
from app.evaluation import EvalResult, FeatureTable
from app.network import MEASURES

logger = logging.getLogger(__name__)

META_COLUMNS = ["path", "class"]


def _format_float(value) -> str:
    """Shortest decimal that parses back to the same double."""
    return repr(float(value))


def sidecar_path(csv_path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _ensure_parent(path: Path):
    if str(path.parent) and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)


def write_features(csv_path, paths: Sequence[str], class_names_per_row: Sequence[str],
                   rows: np.ndarray, columns: List[str], extraction: Dict,
                   class_names: List[str], dataset_root: str = "") -> Dict:
    """
    Write the feature CSV and its sidecar.

    Floats are written as their shortest round-trip representation so a
    rerun on the same inputs produces identical bytes.

    Returns:
        The sidecar dictionary
    """
    csv_path = Path(csv_path)
    _ensure_parent(csv_path)
    rows = np.asarray(rows, dtype=np.float64)

    frame = pd.DataFrame(rows, columns=columns)
    frame.insert(0, "class", list(class_names_per_row))
    frame.insert(0, "path", list(paths))
    frame.to_csv(csv_path, index=False, float_format=_format_float, lineterminator="\n")

    meta = {
        "extraction": dict(extraction),
        "measures": list(MEASURES),
        "n_features": int(rows.shape[1]),
        "n_samples": int(rows.shape[0]),
        "class_names": list(class_names),
        "dataset_root": str(dataset_root),
        "version": __version__,
        "csv_sha256": _sha256(csv_path),
    }
    with open(sidecar_path(csv_path), 'w') as f:
        json.dump(meta, f, indent=2)

    logger.info(f"✓ Wrote {rows.shape[0]} x {rows.shape[1]} features to {csv_path}")
    return meta


def read_sidecar(csv_path) -> Dict:
    path = sidecar_path(csv_path)
    if not path.exists():
        raise SidecarMismatchError(f"{csv_path}: sidecar {path.name} not found")
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SidecarMismatchError(f"{path}: invalid JSON ({e})") from e


def _parse_cells(cells: pd.DataFrame) -> np.ndarray:
    """Correctly rounded string -> double per cell; unparseable cells become NaN."""
    return cells.apply(lambda column: column.map(_to_float)).to_numpy(dtype=np.float64)


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def read_features(csv_path, verify: bool = True) -> Tuple[FeatureTable, List[str], Dict]:
    """
    Load a feature CSV written by write_features.

    Raises:
        SidecarMismatchError: missing sidecar, hash or shape disagreement
        ParseError: malformed CSV, with the offending file line
    """
    csv_path = Path(csv_path)
    meta = read_sidecar(csv_path)

    try:
        frame = pd.read_csv(csv_path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(f"{csv_path}: {e}", line=int(match.group(1)) if match else None) from e
    except pd.errors.EmptyDataError as e:
        raise ParseError(f"{csv_path}: empty file", line=1) from e

    if list(frame.columns[:2]) != META_COLUMNS:
        raise ParseError(f"{csv_path}: header must start with {META_COLUMNS}", line=1)
    feature_columns = list(frame.columns[2:])
    if len(feature_columns) != meta.get("n_features"):
        raise SidecarMismatchError(
            f"{csv_path}: {len(feature_columns)} feature columns, sidecar says {meta.get('n_features')}"
        )

    values = _parse_cells(frame[feature_columns])
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        raise ParseError(
            f"{csv_path}: column '{feature_columns[col]}' has non-numeric value "
            f"'{frame.iloc[row, col + 2]}'",
            line=row + 2,
        )

    class_names = list(meta.get("class_names", []))
    lookup = {name: i for i, name in enumerate(class_names)}
    labels = []
    for row, name in enumerate(frame["class"]):
        if name not in lookup:
            raise ParseError(f"{csv_path}: unknown class '{name}'", line=row + 2)
        labels.append(lookup[name])

    if verify and meta.get("csv_sha256") != _sha256(csv_path):
        raise SidecarMismatchError(f"{csv_path}: content hash does not match {sidecar_path(csv_path).name}")

    table = FeatureTable(values, np.array(labels, dtype=np.int64), class_names)
    return table, list(frame["path"]), meta


def format_report(result: EvalResult, title: str = "Leave-one-out LDA") -> str:
    """Human-readable table: overall accuracy then one row per class."""
    width = max([len("class")] + [len(n) for n in result.class_names])
    support = result.confusion.sum(axis=1)
    lines = [
        title,
        "=" * 70,
        f"Samples: {int(support.sum())}   Classes: {len(result.class_names)}",
        f"Accuracy: {100 * result.accuracy:.2f}%",
        "",
        f"{'class':{width}s}  {'correct':>8s}  {'total':>6s}  {'accuracy':>9s}",
        "-" * (width + 31),
    ]
    for i, name in enumerate(result.class_names):
        lines.append(
            f"{name:{width}s}  {int(result.confusion[i, i]):8d}  {int(support[i]):6d}  "
            f"{100 * result.per_class[i]:8.2f}%"
        )
    return "\n".join(lines) + "\n"


def write_eval_result(result: EvalResult, json_path, source: str = "", n_features: int = 0) -> Tuple[Path, Path]:
    """Write EvalResult JSON and the text report next to it."""
    json_path = Path(json_path)
    _ensure_parent(json_path)

    payload = result.to_dict()
    payload["n_features"] = int(n_features)
    payload["source"] = str(source)
    payload["timestamp"] = datetime.now().isoformat()
    with open(json_path, 'w') as f:
        json.dump(payload, f, indent=2)

    text_path = json_path.with_suffix(".txt")
    with open(text_path, 'w') as f:
        f.write(format_report(result, title=f"Leave-one-out LDA: {source}" if source else "Leave-one-out LDA"))

    logger.info(f"Saved evaluation to {json_path} and {text_path}")
    return json_path, text_path


def write_sweep(results: pd.DataFrame, csv_path) -> Path:
    csv_path = Path(csv_path)
    _ensure_parent(csv_path)
    results.to_csv(csv_path, index=False, float_format=_format_float, lineterminator="\n")
    logger.info(f"Saved {len(results)} sweep rows to {csv_path}")
    return csv_path


def read_sweep(csv_path) -> pd.DataFrame:
    return pd.read_csv(csv_path, dtype={"radii": str, "qs": str})
