"""Time-series containers, CSV ingestion and empirical quantiles."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MappingError(ValueError):
    """Base class for domain errors raised by this package."""


class SeriesTooShortError(MappingError):
    pass


class CsvParseError(MappingError):
    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class CsvStructureError(MappingError):
    pass


class QuantileRangeError(MappingError):
    pass


def _as_series(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise MappingError(f"expected a 1-D series, got shape {arr.shape}")
    if arr.size == 0:
        raise SeriesTooShortError("series is empty")
    if not np.all(np.isfinite(arr)):
        raise MappingError("series contains NaN or infinite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class UnivariateSeries:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_series(self.values))

    def __len__(self) -> int:
        return self.values.size

    @property
    def T(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class MultivariateSeries:
    """m aligned components of common length T.

    ``data`` is stored as an (m, T) read-only array.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise MappingError(f"expected an (m, T) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise MappingError("series contains NaN or infinite values")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_components(cls, components) -> "MultivariateSeries":
        comps = [np.asarray(getattr(c, "values", c), dtype=float) for c in components]
        lengths = {c.size for c in comps}
        if len(lengths) != 1:
            raise MappingError(f"components have different lengths: {sorted(lengths)}")
        return cls(np.vstack(comps))

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]

    @property
    def components(self) -> list[UnivariateSeries]:
        return [UnivariateSeries(row) for row in self.data]

    def __getitem__(self, idx: int) -> np.ndarray:
        return self.data[idx]


@dataclass(frozen=True)
class QuantileBinning:
    """Upper bin boundaries ``q_1 <= ... <= q_eta`` at probabilities ``i/eta``."""

    boundaries: np.ndarray
    probs: np.ndarray = field(repr=False)

    @property
    def eta(self) -> int:
        return self.boundaries.size


def load_csv(path) -> MultivariateSeries:
    """Read a wide CSV file (one column per component, one row per timestamp).

    A single leading header line is skipped when none of its cells parse as
    numbers. Row and column positions in errors are 1-based and count data
    rows only.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise SeriesTooShortError(f"{path}: no data rows")

    def _is_number(cell: str) -> bool:
        try:
            float(cell)
        except ValueError:
            return False
        return True

    if not any(_is_number(c.strip()) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise SeriesTooShortError(f"{path}: no data rows")

    width = len(rows[0])
    values = np.empty((len(rows), width))
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise CsvStructureError(
                f"{path}: row {r} has {len(row)} columns, expected {width}"
            )
        for c, cell in enumerate(row, start=1):
            try:
                values[r - 1, c - 1] = float(cell.strip())
            except ValueError:
                raise CsvParseError(
                    f"{path}: non-numeric cell {cell!r} at row {r}, column {c}", r, c
                ) from None
    if len(rows) < 2:
        raise SeriesTooShortError(f"{path}: need at least 2 rows, got {len(rows)}")
    return MultivariateSeries(values.T)


def save_csv(mts: MultivariateSeries, path, header: list[str] | None = None) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in mts.data.T:
            writer.writerow([repr(float(v)) for v in row])


def compute_quantiles(ts, eta: int) -> QuantileBinning:
    """Empirical quantiles of ``ts`` at probabilities ``1/eta, 2/eta, ..., 1``.

    Linear interpolation between order statistics (numpy's default
    estimator). The last boundary is always the series maximum.
    """
    if int(eta) != eta or eta < 1:
        raise MappingError(f"eta must be a positive integer, got {eta!r}")
    eta = int(eta)
    values = _as_series(getattr(ts, "values", ts))
    probs = np.arange(1, eta + 1) / eta
    q = np.quantile(values, probs)
    # guard against interpolation round-off breaking monotonicity / the max
    q = np.maximum.accumulate(q)
    q[-1] = values.max()
    q.setflags(write=False)
    probs.setflags(write=False)
    return QuantileBinning(q, probs)


def which_quantile(value: float, binning: QuantileBinning) -> int:
    """Smallest 1-based index ``i`` with ``value <= q_i``."""
    b = binning.boundaries
    if value > b[-1]:
        raise QuantileRangeError(f"value {value} exceeds the last boundary {b[-1]}")
    return int(np.searchsorted(b, value, side="left")) + 1


def quantile_sequence(ts, binning: QuantileBinning) -> np.ndarray:
    """Vectorised :func:`which_quantile` over a whole series (1-based bins)."""
    values = np.asarray(getattr(ts, "values", ts), dtype=float)
    b = binning.boundaries
    if values.size and values.max() > b[-1]:
        raise QuantileRangeError("series contains values above the last boundary")
    return np.searchsorted(b, values, side="left") + 1
