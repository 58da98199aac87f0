"""Readers for the sweep CSV files.

A sweep file starts with '# key: value' metadata lines, then a header
row, then data rows. Cells are plain reprs, so everything round-trips
through float() except the label columns.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path


class SchemaError(ValueError):
    """A table is missing something the figure needs."""


# columns kept as strings; everything else is numeric
LABEL_COLUMNS = frozenset({"experiment", "modulation", "phi_policy",
                           "detector", "quantizer", "scheme"})

BITS_PER_SYMBOL = {"qpsk": 2, "qam16": 4}


@dataclass(frozen=True)
class Table:
    path: str
    metadata: dict
    columns: tuple
    rows: list  # list of dicts keyed by column name


def _convert(column, cell):
    if column in LABEL_COLUMNS:
        return cell
    try:
        return float(cell)
    except ValueError as e:
        raise SchemaError(f"column '{column}': non-numeric cell "
                          f"{cell!r}") from e


def read_table(path) -> Table:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e}") from e
    metadata = {}
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("# "):
            body_start = i
            break
        key, _, value = line[2:].partition(":")
        metadata[key.strip()] = value.strip()
    else:
        raise SchemaError(f"{path}: no header row after metadata")
    reader = csv.reader(lines[body_start:])
    header = next(reader, None)
    if not header:
        raise SchemaError(f"{path}: empty table")
    columns = tuple(header)
    rows = []
    for cells in reader:
        if not cells:
            continue
        if len(cells) != len(columns):
            raise SchemaError(f"{path}: row has {len(cells)} cells, "
                              f"header has {len(columns)}")
        rows.append({c: _convert(c, v) for c, v in zip(columns, cells)})
    return Table(str(path), metadata, columns, rows)


def require_columns(table: Table, needed, kind) -> None:
    missing = [c for c in needed if c not in table.columns]
    if missing:
        raise SchemaError(f"{table.path}: figure kind '{kind}' needs "
                          f"missing column '{missing[0]}'")


def require_metadata(table: Table, needed, kind) -> dict:
    out = {}
    for key in needed:
        if key not in table.metadata:
            raise SchemaError(f"{table.path}: figure kind '{kind}' needs "
                              f"missing metadata key '{key}'")
        out[key] = float(table.metadata[key])
    return out


def total_bits(row) -> float:
    """Bits behind one BER row; sets the censoring level for zero errors."""
    mod = row["modulation"]
    if mod not in BITS_PER_SYMBOL:
        raise SchemaError(f"unknown modulation '{mod}'")
    return row["frames"] * row["n"] * BITS_PER_SYMBOL[mod]


def range_ratio(table: Table, row, kind) -> float:
    """Recover R/R_nominal from a range-sweep row.

    The sweep stores theta per row; the fixed geometry lives in the
    metadata header. theta = angle of e^{-j 2 pi (sqrt(R^2+d^2)-R)/lambda}
    inverts in closed form: u = theta lambda / (2 pi), R = (d^2-u^2)/(2u).
    """
    geo = require_metadata(table, ("geometry_range_nominal_m",
                                   "geometry_spacing_m",
                                   "geometry_wavelength_m"), kind)
    u = row["theta_rad"] * geo["geometry_wavelength_m"] / (2.0 * math.pi)
    if u <= 0:
        raise SchemaError(f"{table.path}: non-invertible theta_rad "
                          f"{row['theta_rad']}")
    d2 = geo["geometry_spacing_m"] ** 2
    r = (d2 - u * u) / (2.0 * u)
    return r / geo["geometry_range_nominal_m"]
