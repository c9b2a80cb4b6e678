"""Run configuration: INI file form, environment overrides and named RNG streams.

Precedence, highest first: command-line flags, ``WPMIXER_<SECTION>_<KEY>``
environment variables, the config file, built-in defaults.
"""

from __future__ import annotations

import configparser
import io
import os
import zlib
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .model import ModelConfig
from .training import TrainSettings

ENV_PREFIX = "WPMIXER_"


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.replace(",", " ").split())


@dataclass(frozen=True)
class DataSection:
    path: str = ""
    name: str = ""  # defaults to the file stem
    split: str = "auto"
    ratios: tuple[float, ...] = (0.7, 0.1, 0.2)
    strict_splits: bool = False


@dataclass(frozen=True)
class ModelSection:
    channels: int = 0  # 0: take from the data file
    seq_len: int = 96
    pred_len: int = 96
    wavelet: str = "db2"
    level: int = 1
    patch_len: int = 16
    stride: int = 8
    d_model: int = 256
    tfactor: int = 5
    dfactor: int = 8
    mixer_dropout: float = 0.0
    embed_dropout: float = 0.0
    decomposition: bool = True
    patching: bool = True
    embedding: bool = True
    patch_mixer: bool = True
    embedding_mixer: bool = True
    second_mixer: bool = True
    outer_revin: bool = True
    inner_revin: bool = True
    inner_revin_affine: bool = True
    bn_axis: str = "embedding"
    ablation: str = ""  # I..XIV, applied on top of the flags above


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    loss: str = "smooth_l1"
    lr_schedule: str = "decay"
    grad_clip: float = 0.0
    eval_batch_size: int = 256


@dataclass(frozen=True)
class RunSection:
    seed: int = 42
    out_dir: str = "runs"


_SECTIONS = {"data": DataSection, "model": ModelSection, "train": TrainSection, "run": RunSection}


@dataclass(frozen=True)
class RunConfig:
    data: DataSection = field(default_factory=DataSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    run: RunSection = field(default_factory=RunSection)

    # -- derived views --------------------------------------------------
    def dataset_name(self) -> str:
        if self.data.name:
            return self.data.name
        return os.path.splitext(os.path.basename(self.data.path))[0] if self.data.path else "synthetic"

    def model_config(self, n_channels: int | None = None) -> ModelConfig:
        m = self.model
        c = n_channels if n_channels is not None else m.channels
        if c < 1:
            raise ConfigError("model.channels is 0 and no data file was read to infer it")
        if m.channels and n_channels is not None and m.channels != n_channels:
            raise ConfigError(f"model.channels = {m.channels} but the data has {n_channels} value columns")
        kw = {f.name: getattr(m, f.name) for f in fields(m) if f.name not in ("channels", "ablation")}
        cfg = ModelConfig(n_channels=c, **kw)
        return cfg.with_ablation(m.ablation) if m.ablation else cfg

    def train_settings(self) -> TrainSettings:
        return TrainSettings(**{f.name: getattr(self.train, f.name) for f in fields(self.train)})

    # -- overrides ------------------------------------------------------
    def with_values(self, values: Mapping[tuple[str, str], str], origin: str) -> RunConfig:
        """Apply textual ``(section, key) -> value`` overrides, type-checked."""
        parts = {name: getattr(self, name) for name in _SECTIONS}
        for (section, key), text in values.items():
            cls = _SECTIONS.get(section)
            if cls is None:
                raise ConfigError(f"{origin}: unknown section [{section}]; "
                                  f"expected one of {', '.join(_SECTIONS)}")
            ftypes = {f.name: f.type for f in fields(cls)}
            if key not in ftypes:
                raise ConfigError(f"{origin}: unknown key {key!r} in [{section}]; "
                                  f"expected one of {', '.join(ftypes)}")
            parts[section] = replace(parts[section], **{key: _parse(ftypes[key], text, f"{origin}: {section}.{key}")})
        return RunConfig(**parts)

    def with_env(self, env: Mapping[str, str] | None = None) -> RunConfig:
        env = os.environ if env is None else env
        values = {}
        for name, text in env.items():
            if not name.startswith(ENV_PREFIX):
                continue
            rest = name[len(ENV_PREFIX):].lower()
            section, _, key = rest.partition("_")
            if section in _SECTIONS and key:
                values[(section, key)] = text
        return self.with_values(values, "environment")

    # -- text form ------------------------------------------------------
    def to_ini(self) -> str:
        out = io.StringIO()
        for section in _SECTIONS:
            out.write(f"[{section}]\n")
            part = getattr(self, section)
            for f in fields(part):
                out.write(f"{f.name} = {_format(getattr(part, f.name))}\n")
            out.write("\n")
        return out.getvalue()

    @classmethod
    def from_ini(cls, text: str, origin: str = "config") -> RunConfig:
        parser = configparser.ConfigParser(interpolation=None, default_section="\0none")
        parser.optionxform = str
        try:
            parser.read_string(text, source=origin)
        except configparser.Error as exc:
            raise ConfigError(f"{origin}: {' '.join(str(exc).split())}") from None
        values = {(s, k): v for s in parser.sections() for k, v in parser.items(s)}
        for s in parser.sections():
            if s not in _SECTIONS:
                raise ConfigError(f"{origin}: unknown section [{s}]; expected one of {', '.join(_SECTIONS)}")
        return cls().with_values(values, origin)


def _parse(ftype, text: str, where: str):
    ftype = ftype if isinstance(ftype, str) else getattr(ftype, "__name__", str(ftype))
    try:
        if ftype == "bool":
            return _bool(text)
        if ftype == "int":
            return int(text)
        if ftype == "float":
            return float(text)
        if ftype.startswith("tuple"):
            return _floats(text)
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def load_config(path: str | None, env: Mapping[str, str] | None = None,
                overrides: Mapping[tuple[str, str], str] | None = None) -> RunConfig:
    """Defaults, then file, then environment, then explicit overrides."""
    cfg = RunConfig()
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = RunConfig.from_ini(text, path)
    cfg = cfg.with_env(env)
    if overrides:
        cfg = cfg.with_values(overrides, "command line")
    return cfg


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator per named purpose (``init``, ``dropout``, ``shuffle``, ...)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, zlib.crc32(name.encode())])))
