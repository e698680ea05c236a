"""
CSV persistence for test sets and benchmark records.

Record CSV columns: method,function,n,rmspe_scaled,mape_scaled,time_minutes,seed
(extra columns, e.g. log10 transforms added by the report command, are
carried through untouched).
"""

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from config import CSV_FLOAT_FORMAT, RECORD_COLUMNS
from src.errors import RecordParseError
from src.metrics import BenchRecord, TestSet

logger = logging.getLogger("Records")

_NUMERIC = ('n', 'rmspe_scaled', 'mape_scaled', 'time_minutes', 'seed')


def write_test_set(test_set: TestSet, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(test_set.points, columns=[f'x{j + 1}' for j in range(test_set.d)])
    frame['y'] = test_set.truth
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"wrote {test_set.n}-point test set: {path}")
    return path


def read_test_set(path, seed: int = 0) -> TestSet:
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RecordParseError(f"cannot parse test set {path}: {e}") from e
    if list(frame.columns)[-1:] != ['y']:
        raise RecordParseError("test-set header must be x1,...,xd,y", line=1)
    data = frame.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.all(np.isfinite(data), axis=1))
    if bad.size:
        raise RecordParseError(f"non-numeric entry in {path}", line=int(bad[0]) + 2)
    return TestSet(data[:, :-1], data[:, -1], seed)


def records_frame(records) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in records], columns=list(RECORD_COLUMNS))


def append_records(records, path) -> Path:
    """Append records to a CSV, writing the header only when the file is new."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not path.exists() or path.stat().st_size == 0
    records_frame(records).to_csv(
        path, mode='a', header=new_file, index=False,
        float_format=CSV_FLOAT_FORMAT, lineterminator='\n',
    )
    return path


def read_records(path) -> pd.DataFrame:
    """
    Load and validate a record CSV.

    Raises RecordParseError naming the 1-based file line of the first bad row.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={'method': str, 'function': str},
                            keep_default_na=False, float_precision='round_trip')
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        raise RecordParseError(f"cannot parse {path}: {e}", line=int(found.group(1)) if found else None) from e
    except pd.errors.EmptyDataError as e:
        raise RecordParseError(f"{path} is empty", line=1) from e
    missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
    if missing:
        raise RecordParseError(f"{path} is missing columns {missing}", line=1)

    out = frame.copy()
    for col in frame.columns:
        if col in ('method', 'function'):
            continue
        out[col] = pd.to_numeric(frame[col], errors='coerce')
    for i in range(len(out)):
        row = out.iloc[i]
        if not row['method'] or not row['function']:
            raise RecordParseError(f"{path}: empty method/function", line=i + 2)
        if any(pd.isna(row[c]) for c in _NUMERIC):
            raise RecordParseError(f"{path}: non-numeric record field", line=i + 2)
        try:
            BenchRecord(row['method'], row['function'], int(row['n']), float(row['rmspe_scaled']),
                        float(row['mape_scaled']), float(row['time_minutes']), int(row['seed']))
        except ValueError as e:
            raise RecordParseError(f"{path}: {e}", line=i + 2) from e
    out['n'] = out['n'].astype(np.int64)
    out['seed'] = out['seed'].astype(np.int64)
    return out


__all__ = ['write_test_set', 'read_test_set', 'records_frame', 'append_records', 'read_records']
