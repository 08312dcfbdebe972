# coding:utf-8
import csv
import logging
import os
from typing import Dict, List, Sequence

import pandas as pd

from core.common.exception_handler import HoloError


logger = logging.getLogger(__name__)

FLUSH_ROWS = 100


class LossLogger:
    """ CSV loss log, a header line then one row per training step

    Parameters
    ----------
    path: str
        csv file path, its folder is created on demand

    columns: list of str
        value columns written after `step`

    resume_step: int
        when given, keep the rows of an existing log up to this step and
        append after them; otherwise the file is started afresh
    """

    def __init__(self, path: str, columns: Sequence[str], resume_step: int = None):
        self.path = path
        self.columns = list(columns)
        self.row_count = 0
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)

        kept = []
        if resume_step is not None and os.path.exists(path):
            kept = self._rowsUpTo(resume_step)

        self.file = open(path, "w", newline="")
        self.writer = csv.writer(self.file)
        self.writer.writerow(["step"] + self.columns)
        self.writer.writerows(kept)
        self.file.flush()

    def _rowsUpTo(self, step: int) -> List[List[str]]:
        with open(self.path, newline="") as f:
            rows = list(csv.reader(f))

        if not rows or rows[0] != ["step"] + self.columns:
            logger.warning("%s has a different header, starting a new log", self.path)
            return []

        return [r for r in rows[1:] if r and int(r[0]) <= step]

    def write(self, step: int, values: Dict[str, float]):
        """ append the row of `step`; `values` must hold every column """
        missing = [c for c in self.columns if c not in values]
        if missing:
            raise HoloError(f"loss row for step {step} misses columns {missing}")

        self.writer.writerow([step] + [repr(float(values[c])) for c in self.columns])
        self.row_count += 1
        if self.row_count % FLUSH_ROWS == 0:
            self.file.flush()

    def flush(self):
        if self.file:
            self.file.flush()

    def close(self):
        if self.file:
            self.file.flush()
            self.file.close()
            self.file = None
            self.writer = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def loadLossLog(path: str) -> pd.DataFrame:
    """ read a loss log indexed by step """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise HoloError(f"cannot read loss log {path}: {e}") from e

    if "step" not in frame.columns:
        raise HoloError(f"{path} has no `step` column")

    return frame.set_index("step")


def summarizeLossLog(frame: pd.DataFrame, window: int = 50) -> pd.DataFrame:
    """ mean of every loss over the first and last `window` steps """
    window = max(1, min(window, len(frame)))
    return pd.DataFrame({
        "first": frame.head(window).mean(),
        "last": frame.tail(window).mean(),
    })
