"""Reading and writing sequence data, curves and fit results."""

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from mixed_renewal.constant import CSV_HEADER
from mixed_renewal.errors import DataFormatError
from mixed_renewal.exchangeable import Sequence
from mixed_renewal.inference import FitResult, SequenceSet

logger = logging.getLogger(__name__)


def read_sequences(path: str | Path) -> SequenceSet:
    """Load a long-format "seq_id,time" CSV of inter-arrival times.

    Rows of one sequence keep their file order; sequences keep the order of
    their first row.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, skip_blank_lines=False)
    except pd.errors.EmptyDataError as e:
        raise DataFormatError("file is empty", line=1) from e
    except pd.errors.ParserError as e:
        raise DataFormatError(f"malformed CSV: {e}") from e
    if tuple(frame.columns) != CSV_HEADER:
        raise DataFormatError(f"header must be {','.join(CSV_HEADER)}, got {','.join(frame.columns)}", line=1)
    if frame.empty:
        raise DataFormatError("no data rows", line=2)
    # blank lines and short rows come back as missing fields
    frame = frame.fillna("")
    rows = []
    # line 1 is the header
    for line, (seq_id, raw) in enumerate(zip(frame["seq_id"], frame["time"], strict=True), start=2):
        if not seq_id and not raw:
            raise DataFormatError("empty row", line=line)
        if not seq_id:
            raise DataFormatError("empty seq_id", line=line)
        try:
            time = float(raw)
        except ValueError as e:
            raise DataFormatError(f"time '{raw}' is not a number", line=line) from e
        if not math.isfinite(time) or time <= 0:
            raise DataFormatError(f"time must be positive and finite, got {raw}", line=line)
        rows.append((seq_id, time))
    data = SequenceSet.from_rows(rows)
    logger.info(f"Read {data.k} sequences with {int(data.lengths.sum())} times from {path}")
    return data


def write_sequences(path: str | Path, sequences: SequenceSet | list[Sequence]) -> None:
    """Write sequences in the long "seq_id,time" format."""
    if not isinstance(sequences, SequenceSet):
        sequences = SequenceSet(tuple(sequences))
    frame = pd.DataFrame(
        {
            CSV_HEADER[0]: np.repeat(sequences.ids, sequences.lengths),
            CSV_HEADER[1]: np.concatenate([seq.times for seq in sequences.sequences]),
        }
    )
    frame.to_csv(path, index=False, lineterminator="\n")


def write_curves(path: str | Path, columns: dict[str, np.ndarray]) -> None:
    """Write equally long columns as a headered CSV, in the given order."""
    frame = pd.DataFrame({name: np.asarray(values) for name, values in columns.items()})
    frame.to_csv(path, index=False, lineterminator="\n")


def write_fit(path: str | Path, fit: FitResult) -> None:
    """Write a fit result as JSON."""
    with open(path, "w") as fit_file:
        json.dump(fit.to_dict(), fit_file, indent=2)
