"""CSV and JSON artifacts. Floats carry 17 significant digits so reruns compare byte-for-byte."""

import json
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from src.core.constants import Constants
from src.core.exceptions import DataError
from src.metrics.moo import nondominated_mask
from src.models.records import FrontRecord, TrainHistory


def atomic_write_bytes(path: Union[str, Path], data: bytes):
    """Write to a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Union[str, Path], text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_frame(path: Union[str, Path], frame: pd.DataFrame):
    atomic_write_text(path, frame.to_csv(index=False, float_format=Constants.FLOAT_FORMAT, lineterminator="\n"))


def write_json(path: Union[str, Path], data: Dict[str, Any]):
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def front_frame(records: Sequence[FrontRecord], include_nondominated: bool = True) -> pd.DataFrame:
    if not records:
        raise DataError("cannot export an empty front")
    T = len(records[0].losses)
    columns: Dict[str, List[Any]] = {}
    for t in range(T):
        columns[f"lambda_{t + 1}"] = [r.preference[t] for r in records]
    for t in range(T):
        columns[f"loss_{t + 1}"] = [r.losses[t] for r in records]
    for t in range(T):
        columns[f"metric_{t + 1}"] = [r.task_metrics[t] for r in records]
    if include_nondominated:
        flags = nondominated_mask([r.losses for r in records])
        columns["nondominated"] = [int(flag) for flag in flags]
    return pd.DataFrame(columns)


def write_front_csv(path: Union[str, Path], records: Sequence[FrontRecord], include_nondominated: bool = True):
    write_frame(path, front_frame(records, include_nondominated))


def write_history_csv(path: Union[str, Path], history: TrainHistory, num_tasks: int):
    rows = []
    for row in history.rows:
        entry: Dict[str, Any] = {"epoch": row.epoch, "scalarized_loss": row.scalarized_loss}
        for t in range(num_tasks):
            entry[f"uniform_loss_{t + 1}"] = row.uniform_losses[t]
        entry["hv"] = row.hv
        for t in range(num_tasks):
            entry[f"rho_{t + 1}"] = row.alignment[t]
        entry["nondominated_count"] = row.nondominated_count
        entry["learning_rate"] = row.learning_rate
        rows.append(entry)
    columns = (
        ["epoch", "scalarized_loss"]
        + [f"uniform_loss_{t + 1}" for t in range(num_tasks)]
        + ["hv"]
        + [f"rho_{t + 1}" for t in range(num_tasks)]
        + ["nondominated_count", "learning_rate"]
    )
    write_frame(path, pd.DataFrame(rows, columns=columns))


def write_fronts_by_epoch_csv(path: Union[str, Path], history: TrainHistory):
    frames = []
    for epoch, front in enumerate(history.epoch_fronts, start=1):
        frame = front_frame(front)
        frame.insert(0, "epoch", epoch)
        frames.append(frame)
    if frames:
        write_frame(path, pd.concat(frames, ignore_index=True))


def read_loss_columns(path: Union[str, Path]) -> np.ndarray:
    """Loss matrix (rows x tasks) from any CSV with loss_1..loss_T columns."""
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise DataError(f"CSV file '{path}' not found")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"Malformed CSV '{path}': {e}")
    loss_columns = [c for c in frame.columns if re.fullmatch(r"loss_\d+", str(c))]
    if not loss_columns:
        raise DataError(f"CSV '{path}' has no loss_<t> columns")
    loss_columns.sort(key=lambda c: int(str(c).split("_", 1)[1]))
    try:
        losses = frame[loss_columns].to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise DataError(f"CSV '{path}' has non-numeric losses: {e}")
    if losses.shape[0] == 0 or not np.all(np.isfinite(losses)):
        raise DataError(f"CSV '{path}' has no rows or non-finite losses")
    return losses
