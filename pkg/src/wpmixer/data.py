"""CSV ingestion, chronological splits, z-scoring, windowing, metrics and naive baselines."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, DataError, DimensionError

PARTS = ("train", "val", "test")
SPLIT_MODES = ("auto", "etth", "ettm", "ratio")

# fixed row budgets of the ETT benchmark convention: 12 / 4 / 4 months
_ETT_HOURLY = (12 * 30 * 24, 4 * 30 * 24, 4 * 30 * 24)
_ETT_15MIN = tuple(4 * n for n in _ETT_HOURLY)


@dataclass(frozen=True)
class SeriesTable:
    timestamps: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray  # (n, C)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


def load_csv(path: str | os.PathLike) -> SeriesTable:
    """Read a header + timestamp-first CSV.  Every value cell must be a finite number."""
    path = os.fspath(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        if len(header) < 2:
            raise DataError(f"{path}: header needs a timestamp column and at least one value column")
        columns = tuple(h.strip() for h in header[1:])
        stamps, rows = [], []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {row_no} has {len(row)} cells, header has {len(header)}")
            vals = []
            for col, cell in zip(columns, row[1:]):
                cell = cell.strip()
                if cell == "":
                    raise DataError(f"{path}: missing value at row {row_no}, column {col!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: non-numeric value {cell!r} at row {row_no}, "
                                    f"column {col!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: non-finite value {cell!r} at row {row_no}, column {col!r}")
                vals.append(v)
            ts = row[0].strip()
            if stamps and ts < stamps[-1]:
                raise DataError(f"{path}: timestamp {ts!r} at row {row_no} precedes {stamps[-1]!r}")
            stamps.append(ts)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return SeriesTable(tuple(stamps), columns, np.array(rows, dtype=np.float64))


def write_csv(path: str | os.PathLike, table: SeriesTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("date",) + table.columns)
        for ts, row in zip(table.timestamps, table.values):
            w.writerow([ts] + [repr(float(v)) for v in row])


# -- splits ----------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """Row ranges ``[start, stop)`` of each part plus window geometry."""

    train: tuple[int, int]
    val: tuple[int, int]
    test: tuple[int, int]
    seq_len: int
    pred_len: int
    back_reach: bool = True

    def bounds(self, part: str) -> tuple[int, int]:
        if part not in PARTS:
            raise ConfigError(f"unknown split part {part!r}; expected one of {PARTS}")
        return getattr(self, part)


def split_mode_for(path: str, mode: str = "auto") -> str:
    if mode not in SPLIT_MODES:
        raise ConfigError(f"unknown split mode {mode!r}; expected one of {SPLIT_MODES}")
    if mode != "auto":
        return mode
    stem = os.path.basename(os.fspath(path)).lower()
    if stem.startswith("etth"):
        return "etth"
    if stem.startswith("ettm"):
        return "ettm"
    return "ratio"


def split_rows(n_rows: int, mode: str, ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
               ) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
    """Contiguous chronological row ranges for train, val and test."""
    if mode in ("etth", "ettm"):
        ntr, nva, nte = _ETT_HOURLY if mode == "etth" else _ETT_15MIN
        if n_rows < ntr + nva + nte:
            raise DataError(f"{mode} split needs {ntr + nva + nte} rows, table has {n_rows}")
    elif mode == "ratio":
        if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must be three positive numbers summing to 1, got {ratios}")
        ntr = int(n_rows * ratios[0])
        nte = int(n_rows * ratios[2])
        nva = n_rows - ntr - nte
    else:
        raise ConfigError(f"unknown split mode {mode!r}; expected one of {SPLIT_MODES[1:]}")
    return (0, ntr), (ntr, ntr + nva), (ntr + nva, ntr + nva + nte)


def window_count(part_len: int, seq_len: int, pred_len: int, back_reach: bool) -> int:
    """Stride-1 windows whose targets lie in a part of ``part_len`` rows.

    With back-reach the input may start up to ``seq_len`` rows before the part.
    """
    return part_len - pred_len + 1 if back_reach else part_len - seq_len - pred_len + 1


def window_starts(spec: SplitSpec, part: str) -> np.ndarray:
    """Row index of the first input step of every window in ``part``."""
    a, b = spec.bounds(part)
    L, T = spec.seq_len, spec.pred_len
    reach = spec.back_reach and part != "train"
    first = a - L if reach else a
    if first < 0:
        raise DataError(f"{part}: back-reach needs {L} rows before row {a}")
    count = window_count(b - a, L, T, reach)
    if count < 1:
        need = T if reach else L + T
        raise DataError(f"{part} part has {b - a} rows; at least {need} are required "
                        f"for look-back {L} and horizon {T}")
    return first + np.arange(count)


# -- standardisation ---------------------------------------------------------

@dataclass(frozen=True)
class ZScore:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


def fit_zscore(values: np.ndarray, train: tuple[int, int], columns=None) -> ZScore:
    """Population mean and standard deviation of the train rows, per column."""
    a, b = train
    if b <= a:
        raise DataError("standardize: empty train split")
    part = values[a:b]
    mean = part.mean(axis=0)
    std = part.std(axis=0)
    for j, s in enumerate(std):
        if not s > 0:
            name = columns[j] if columns is not None else str(j)
            raise DataError(f"standardize: column {name!r} has zero variance on the train split")
    return ZScore(mean, std)


def standardize(table: SeriesTable, train: tuple[int, int]) -> tuple[np.ndarray, ZScore]:
    stats = fit_zscore(table.values, train, table.columns)
    return stats.apply(table.values), stats


# -- windows -----------------------------------------------------------------

class WindowSet:
    """Lazily gathered ``(input, target)`` pairs over a standardised ``(n, C)`` array."""

    def __init__(self, values: np.ndarray, starts: np.ndarray, seq_len: int, pred_len: int):
        self.values = values
        self.starts = np.asarray(starts, dtype=np.int64)
        self.seq_len = seq_len
        self.pred_len = pred_len
        self._in = np.arange(seq_len)
        self._out = np.arange(seq_len, seq_len + pred_len)

    def __len__(self) -> int:
        return len(self.starts)

    def batch(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """``x`` of shape ``(B, C, L)`` and ``y`` of shape ``(B, C, T)``."""
        s = self.starts[np.asarray(indices)][:, None]
        x = self.values[s + self._in].transpose(0, 2, 1)
        y = self.values[s + self._out].transpose(0, 2, 1)
        return np.ascontiguousarray(x), np.ascontiguousarray(y)

    def origin(self, k: int) -> int:
        """Row index of the last input step of window ``k``."""
        return int(self.starts[k]) + self.seq_len - 1


class ArrayWindows:
    """Windows held as dense arrays (synthetic sets, tests)."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        if x.shape[0] != y.shape[0]:
            raise DimensionError(f"ArrayWindows: {x.shape[0]} inputs vs {y.shape[0]} targets")
        self.x, self.y = x, y

    def __len__(self) -> int:
        return self.x.shape[0]

    def batch(self, indices) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(indices)
        return self.x[idx], self.y[idx]


@dataclass
class Prepared:
    table: SeriesTable
    zscore: ZScore
    spec: SplitSpec
    values: np.ndarray  # standardised
    train: WindowSet
    val: WindowSet
    test: WindowSet

    def part(self, name: str) -> WindowSet:
        return getattr(self, name)


def prepare(table: SeriesTable, seq_len: int, pred_len: int, mode: str,
            back_reach: bool = True, ratios=(0.7, 0.1, 0.2)) -> Prepared:
    train, val, test = split_rows(table.n_rows, mode, ratios)
    spec = SplitSpec(train, val, test, seq_len, pred_len, back_reach)
    z, stats = standardize(table, train)
    sets = {p: WindowSet(z, window_starts(spec, p), seq_len, pred_len) for p in PARTS}
    return Prepared(table, stats, spec, z, **sets)


def synthetic_table(n_rows: int, n_channels: int, rng: np.random.Generator,
                    noise: float = 0.1) -> SeriesTable:
    """Daily and weekly seasonality at hourly sampling, a slow drift and Gaussian noise."""
    t = np.arange(n_rows, dtype=np.float64)[:, None]
    phase = rng.uniform(0, 2 * np.pi, (2, n_channels))
    amp = rng.uniform(0.5, 2.0, (2, n_channels))
    vals = (amp[0] * np.sin(2 * np.pi * t / 24 + phase[0])
            + amp[1] * np.sin(2 * np.pi * t / 168 + phase[1])
            + rng.uniform(-1, 1, n_channels) * t / n_rows
            + noise * rng.standard_normal((n_rows, n_channels)))
    stamps = tuple(f"t{i:08d}" for i in range(n_rows))
    return SeriesTable(stamps, tuple(f"c{j}" for j in range(n_channels)), vals)


# -- metrics and baselines -------------------------------------------------------

def metrics(pred, target) -> tuple[float, float]:
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ContractError(f"metrics: prediction {pred.shape} and target {target.shape} differ")
    e = pred - target
    return float(np.mean(e * e)), float(np.mean(np.abs(e)))


def persistence_forecast(x: np.ndarray, pred_len: int) -> np.ndarray:
    """Repeat the last observed value of each ``(instance, channel)`` across the horizon."""
    return np.repeat(x[..., -1:], pred_len, axis=-1)


class LinearBaseline:
    """Least-squares map from the look-back to the horizon, shared by all channels.

    No regularisation: the minimum-norm solution of the normal equations.
    """

    def __init__(self, seq_len: int, pred_len: int):
        self.seq_len, self.pred_len = seq_len, pred_len
        self.weight: np.ndarray | None = None  # (L + 1, T), last row is the bias

    def fit(self, source, batch_size: int = 1024) -> LinearBaseline:
        k = self.seq_len + 1
        gram = np.zeros((k, k))
        cross = np.zeros((k, self.pred_len))
        n = len(source)
        for start in range(0, n, batch_size):
            x, y = source.batch(np.arange(start, min(n, start + batch_size)))
            a = np.concatenate([x.reshape(-1, self.seq_len), np.ones((x.shape[0] * x.shape[1], 1))], 1)
            gram += a.T @ a
            cross += a.T @ y.reshape(-1, self.pred_len)
        self.weight = np.linalg.pinv(gram, rcond=1e-12, hermitian=True) @ cross
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.weight is None:
            raise ContractError("LinearBaseline: predict before fit")
        return x @ self.weight[:-1] + self.weight[-1]


def evaluate_forecaster(fn, source, batch_size: int = 1024) -> tuple[float, float]:
    n = len(source)
    sq = ab = 0.0
    count = 0
    for start in range(0, n, batch_size):
        x, y = source.batch(np.arange(start, min(n, start + batch_size)))
        e = fn(x) - y
        sq += float(np.sum(e * e))
        ab += float(np.sum(np.abs(e)))
        count += e.size
    return sq / count, ab / count
