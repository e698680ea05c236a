"""
Design files: CSV with header x1..xd (17 significant digits) plus a JSON
sidecar sharing the stem, e.g. ``lhd_n129_d4.csv`` + ``lhd_n129_d4.json``.

The sidecar makes every design self-describing: provenance and seed travel
with the points.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from config import CSV_FLOAT_FORMAT
from src.design import Design, DesignKind, Provenance
from src.errors import RecordParseError

logger = logging.getLogger("Design")


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix('.json')


def write_design(design: Design, path) -> Path:
    """Write the design CSV and its JSON sidecar; returns the CSV path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(design.points, columns=[f'x{j + 1}' for j in range(design.d)])
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    sidecar = {
        'n': design.n,
        'd': design.d,
        'provenance': design.provenance.to_dict(),
        'seed': design.seed,
    }
    with open(sidecar_path(path), 'w') as f:
        json.dump(sidecar, f, indent=2)
        f.write('\n')
    logger.info(f"wrote {design.n}-point design: {path}")
    return path


def read_design(path) -> Design:
    """Read a design CSV; provenance comes from the sidecar when present."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RecordParseError(f"cannot parse design file {path}: {e}") from e
    expected = [f'x{j + 1}' for j in range(frame.shape[1])]
    if list(frame.columns) != expected:
        raise RecordParseError(f"design header must be {','.join(expected)}", line=1)
    values = frame.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.all(np.isfinite(values), axis=1))
    if bad.size:
        raise RecordParseError(f"non-numeric coordinate in {path}", line=int(bad[0]) + 2)

    provenance, seed = Provenance(DesignKind.EXTERNAL), 0
    side = sidecar_path(path)
    if side.exists():
        with open(side) as f:
            meta = json.load(f)
        provenance = Provenance.from_dict(meta['provenance'])
        seed = int(meta.get('seed', 0))
    return Design(values, provenance, seed)


__all__ = ['write_design', 'read_design', 'sidecar_path']
