"""Losses, Adam, the learning-rate schedule and the epoch loop."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .autodiff import Parameter, Tensor, as_tensor, make_op, no_grad
from .errors import ConfigError, ContractError, NumericalError
from .model import WPMixer

LOSSES = ("smooth_l1", "mse")
SCHEDULES = ("decay", "constant")


def _check_shapes(pred: Tensor, target: Tensor, op: str) -> None:
    if pred.shape != target.shape:
        raise ContractError(f"{op}: prediction {pred.shape} and target {target.shape} differ")


def smooth_l1(pred, target, beta: float = 1.0) -> Tensor:
    """Mean of ``0.5 e^2 / beta`` for ``|e| < beta`` and ``|e| - 0.5 beta`` otherwise."""
    pred, target = as_tensor(pred), as_tensor(target)
    _check_shapes(pred, target, "smooth_l1")
    if beta <= 0:
        raise ConfigError(f"smooth_l1: beta must be positive, got {beta}")
    e = pred.data - target.data
    a = np.abs(e)
    quad = a < beta
    value = np.where(quad, 0.5 * e * e / beta, a - 0.5 * beta).mean()
    n = e.size

    def backward(g):
        de = g * np.where(quad, e / beta, np.sign(e)) / n
        return de, -de

    return make_op("smooth_l1", np.asarray(value), (pred, target), backward)


def mse_loss(pred, target) -> Tensor:
    pred, target = as_tensor(pred), as_tensor(target)
    _check_shapes(pred, target, "mse_loss")
    d = pred - target
    return (d * d).mean()


def loss_fn(name: str) -> Callable[[Tensor, Tensor], Tensor]:
    if name == "smooth_l1":
        return smooth_l1
    if name == "mse":
        return mse_loss
    raise ConfigError(f"unknown loss {name!r}; expected one of {LOSSES}")


def lr_at(epoch: int, base_lr: float, schedule: str = "decay") -> float:
    """Learning rate for a 1-based epoch: flat for three epochs, then ``x 0.9`` per epoch."""
    if epoch < 1:
        raise ContractError(f"lr_at: epoch is 1-based, got {epoch}")
    if schedule == "constant" or epoch <= 3:
        return base_lr
    if schedule != "decay":
        raise ConfigError(f"unknown lr schedule {schedule!r}; expected one of {SCHEDULES}")
    return base_lr * 0.9 ** (epoch - 3)


class Adam:
    def __init__(self, params: list[Parameter], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise NumericalError(f"non-finite gradient in parameter {p.name}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {"adam.t": np.array([float(self.t)])}
        for p, m, v in zip(self.params, self.m, self.v):
            out[f"adam.m.{p.name}"] = m.copy()
            out[f"adam.v.{p.name}"] = v.copy()
        return out


def clip_grad_norm(params: list[Parameter], max_norm: float) -> float:
    total = math.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params))
    if total > max_norm > 0:
        scale = max_norm / (total + 1e-12)
        for p in params:
            p.grad *= scale
    return total


class WindowSource(Protocol):
    def __len__(self) -> int: ...

    def batch(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    loss: str = "smooth_l1"
    lr_schedule: str = "decay"
    grad_clip: float = 0.0  # 0 disables clipping
    eval_batch_size: int = 256

    def validate(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.eval_batch_size < 1:
            raise ConfigError("epochs and batch sizes must be >= 1")
        if not self.lr > 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.lr_schedule not in SCHEDULES:
            raise ConfigError(f"unknown lr schedule {self.lr_schedule!r}; expected one of {SCHEDULES}")
        if self.grad_clip < 0:
            raise ConfigError("grad_clip must be >= 0")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_mse: float
    val_mae: float
    lr: float
    seconds: float
    seed: int
    steps: int


REPORT_COLUMNS = ("epoch", "train_loss", "val_mse", "val_mae", "lr", "seconds", "seed", "steps")


@dataclass
class TrainReport:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def best(self) -> EpochRecord | None:
        for r in self.records:
            if r.epoch == self.best_epoch:
                return r
        return None

    def to_csv(self, timing: bool = True) -> str:
        """One row per epoch; ``timing=False`` blanks the wall-clock column."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.records:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.val_mse), repr(r.val_mae), repr(r.lr),
                        f"{r.seconds:.3f}" if timing else "", r.seed, r.steps])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> TrainReport:
        rows = list(csv.DictReader(io.StringIO(text)))
        recs = [EpochRecord(int(r["epoch"]), float(r["train_loss"]), float(r["val_mse"]),
                            float(r["val_mae"]), float(r["lr"]),
                            float(r["seconds"]) if r["seconds"] else 0.0,
                            int(r["seed"]), int(r["steps"])) for r in rows]
        rep = cls(recs)
        if recs:
            rep.best_epoch = min(recs, key=lambda r: (r.val_mse, r.epoch)).epoch
        return rep


def evaluate(model: WPMixer, source: WindowSource, batch_size: int = 256) -> tuple[float, float]:
    """Eval-mode MSE and MAE over every window of ``source``."""
    n = len(source)
    if n == 0:
        raise ContractError("evaluate: no windows")
    sq = ab = 0.0
    count = 0
    with no_grad():
        for start in range(0, n, batch_size):
            x, y = source.batch(np.arange(start, min(n, start + batch_size)))
            e = model.forward(x, training=False).data - y
            sq += float(np.sum(e * e))
            ab += float(np.sum(np.abs(e)))
            count += e.size
    return sq / count, ab / count


def train(model: WPMixer, train_set: WindowSource, val_set: WindowSource | None,
          settings: TrainSettings, shuffle_rng: np.random.Generator,
          dropout_rng: np.random.Generator, seed: int = 0,
          on_best: Callable[[WPMixer, EpochRecord], None] | None = None,
          log: Callable[[str], None] | None = None) -> TrainReport:
    """Run the epoch loop and keep the parameters with the best validation MSE.

    After return, ``model`` holds the best-epoch state (the last epoch when no
    validation set is given).  ``on_best`` fires whenever a new best is found.
    """
    settings.validate()
    n = len(train_set)
    if n == 0:
        raise ContractError("train: empty training set")
    params = model.parameters()
    opt = Adam(params, settings.lr)
    lossf = loss_fn(settings.loss)
    report = TrainReport()
    best_state, best_mse = None, math.inf
    for epoch in range(1, settings.epochs + 1):
        t0 = time.perf_counter()
        lr = lr_at(epoch, settings.lr, settings.lr_schedule)
        order = shuffle_rng.permutation(n)
        total, steps = 0.0, 0
        for b, start in enumerate(range(0, n, settings.batch_size)):
            x, y = train_set.batch(order[start:start + settings.batch_size])
            model.zero_grad()
            loss = lossf(model.forward(x, training=True, rng=dropout_rng), y)
            value = loss.item()
            if not math.isfinite(value):
                raise NumericalError(f"training diverged: loss {value} at epoch {epoch}, batch {b}")
            loss.backward()
            if settings.grad_clip > 0:
                clip_grad_norm(params, settings.grad_clip)
            try:
                opt.step(lr)
            except NumericalError as exc:
                raise NumericalError(f"{exc} at epoch {epoch}, batch {b}") from None
            total += value * len(x)
            steps += 1
        if val_set is not None and len(val_set):
            vmse, vmae = evaluate(model, val_set, settings.eval_batch_size)
        else:
            vmse = vmae = math.nan
        rec = EpochRecord(epoch, total / n, vmse, vmae, lr, time.perf_counter() - t0, seed, steps)
        report.records.append(rec)
        score = vmse if val_set is not None and len(val_set) else -epoch
        if score < best_mse:
            best_mse = score
            best_state = model.state_dict()
            report.best_epoch = epoch
            if on_best is not None:
                on_best(model, rec)
        if log is not None:
            log(f"epoch {epoch:3d}  lr {lr:.3e}  train {rec.train_loss:.6f}  "
                f"val_mse {vmse:.6f}  val_mae {vmae:.6f}  {rec.seconds:.1f}s")
    if best_state is not None:
        model.load_state_dict(best_state)
    return report
