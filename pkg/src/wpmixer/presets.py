"""Published per-dataset hyperparameters and the unified low-cost setting."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .config import DataSection, ModelSection, RunConfig, RunSection, TrainSection
from .errors import ConfigError
from .model import ModelConfig

CHANNELS = {"ETTh1": 7, "ETTh2": 7, "ETTm1": 7, "ETTm2": 7, "Weather": 21,
            "Electricity": 321, "Traffic": 862}


@dataclass(frozen=True)
class Row:
    dataset: str
    pred_len: int
    seq_len: int
    lr: float
    batch: int
    wavelet: str
    level: int
    tfactor: int
    dfactor: int
    mixer_dropout: float
    embed_dropout: float
    patch_len: int
    stride: int
    d_model: int
    epochs: int


_ROWS = """
ETTh1 96 512 0.00024 256 db2 2 5 8 0.4 0.1 16 8 256 30
ETTh1 192 512 0.0002 256 db3 2 5 5 0.05 0.2 16 8 256 30
ETTh1 336 512 0.00013 256 db2 1 3 3 0 0.4 16 8 256 30
ETTh1 720 512 0.00024 256 db2 1 5 3 0.2 0.4 16 8 128 30
ETTh2 96 512 0.00047 256 db2 2 5 5 0 0.1 16 8 256 30
ETTh2 192 512 0.00029 256 db2 3 3 8 0 0 16 8 256 30
ETTh2 336 512 0.00062 256 db2 5 5 3 0.1 0.1 16 8 128 30
ETTh2 720 512 0.00081 256 db2 5 5 5 0.4 0 16 8 128 30
ETTm1 96 512 0.00128 256 db2 1 5 3 0.4 0.2 48 24 256 80
ETTm1 192 512 0.00242 256 db3 1 3 7 0.4 0.05 48 24 128 80
ETTm1 336 512 0.00159 256 db5 1 7 7 0.4 0 48 24 256 80
ETTm1 720 512 0.00201 256 db5 4 3 8 0.4 0.05 48 24 128 80
ETTm2 96 512 0.00077 256 bior3.1 1 3 8 0.4 0 48 24 256 80
ETTm2 192 512 0.00028 256 db2 1 3 7 0.2 0.1 48 24 256 80
ETTm2 336 512 0.00023 256 db2 1 3 5 0.4 0 48 24 256 80
ETTm2 720 512 0.00104 256 db2 1 3 8 0.4 0 48 24 256 80
Weather 96 512 0.00091 32 db3 2 3 7 0.4 0.1 16 8 256 60
Weather 192 512 0.00138 64 db3 1 3 7 0.4 0 16 8 128 60
Weather 336 512 0.00061 32 db3 2 7 7 0.4 0.4 16 8 128 60
Weather 720 512 0.00223 128 db2 3 7 5 0.1 0.4 16 8 256 60
Electricity 96 512 0.00328 32 sym3 2 3 5 0.1 0 16 8 32 100
Electricity 192 512 0.00049 32 coif5 3 7 5 0.1 0.05 16 8 32 100
Electricity 336 512 0.00251 32 sym4 1 5 7 0.2 0.05 16 8 32 100
Electricity 720 512 0.00198 32 db2 2 7 8 0.1 0 16 8 32 100
Traffic 96 1200 0.00104 16 db3 1 3 5 0.05 0.05 16 8 16 60
Traffic 192 1200 0.00057 16 db3 1 3 5 0.05 0 16 8 32 60
Traffic 336 1200 0.00103 16 bior3.1 1 7 7 0 0.1 16 8 32 50
Traffic 720 1200 0.0015 16 db3 1 7 3 0.05 0.2 16 8 32 60
"""


def _parse_rows() -> list[Row]:
    out = []
    for line in _ROWS.strip().splitlines():
        p = line.split()
        out.append(Row(p[0], int(p[1]), int(p[2]), float(p[3]), int(p[4]), p[5], int(p[6]),
                       int(p[7]), int(p[8]), float(p[9]), float(p[10]), int(p[11]), int(p[12]),
                       int(p[13]), int(p[14])))
    return out


TABLE5: list[Row] = _parse_rows()

# unified low-cost setting used for cost comparisons: short look-back, d = 16
UNIFIED_SEQ_LEN = 96
UNIFIED_D_MODEL = 16
UNIFIED_BATCH = 128


def row(dataset: str, pred_len: int) -> Row:
    for r in TABLE5:
        if r.dataset.lower() == dataset.lower() and r.pred_len == pred_len:
            return r
    raise ConfigError(f"no preset for {dataset}/{pred_len}; datasets: {', '.join(CHANNELS)}, "
                      f"horizons: 96, 192, 336, 720")


def model_config(r: Row) -> ModelConfig:
    return ModelConfig(n_channels=CHANNELS[r.dataset], seq_len=r.seq_len, pred_len=r.pred_len,
                       wavelet=r.wavelet, level=r.level, patch_len=r.patch_len, stride=r.stride,
                       d_model=r.d_model, tfactor=r.tfactor, dfactor=r.dfactor,
                       mixer_dropout=r.mixer_dropout, embed_dropout=r.embed_dropout)


def unified_model_config(dataset: str, pred_len: int) -> ModelConfig:
    """The published row with the look-back cut to 96 and ``d = 16``."""
    return replace(model_config(row(dataset, pred_len)), seq_len=UNIFIED_SEQ_LEN,
                   d_model=UNIFIED_D_MODEL)


def run_config(dataset: str, pred_len: int, path: str = "", seed: int = 42) -> RunConfig:
    r = row(dataset, pred_len)
    return RunConfig(
        data=DataSection(path=path, name=r.dataset),
        model=ModelSection(channels=CHANNELS[r.dataset], seq_len=r.seq_len, pred_len=r.pred_len,
                           wavelet=r.wavelet, level=r.level, patch_len=r.patch_len,
                           stride=r.stride, d_model=r.d_model, tfactor=r.tfactor,
                           dfactor=r.dfactor, mixer_dropout=r.mixer_dropout,
                           embed_dropout=r.embed_dropout),
        train=TrainSection(epochs=r.epochs, batch_size=r.batch, lr=r.lr),
        run=RunSection(seed=seed),
    )
