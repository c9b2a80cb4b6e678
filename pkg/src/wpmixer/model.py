"""The WPMixer forward graph.

One resolution branch per wavelet coefficient series (``A_m, D_m, ..., D_1``).
Each branch runs instance normalisation, patching, a shared linear patch
embedding, two mixer modules and a flatten-linear head, then denormalises;
the predicted coefficient series are inverted back to the time domain.

Tensor layout inside a branch is ``(B, C, N, d)``: batch, variate, patch,
embedding.  The patch mixer acts on the ``N`` axis, the embedding mixer on
``d``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .autodiff import (
    BatchNormState,
    Parameter,
    Tensor,
    as_tensor,
    batch_norm,
    dropout,
    flatten,
    gelu,
    linear,
    make_op,
    swapaxes,
)
from .errors import ConfigError, ContractError, DimensionError
from .normalization import RevIN
from .wavelet import SUPPORTED, CoefficientSet, decompose, filter_bank, level_lengths, reconstruct

BN_AXES = ("embedding", "variate")
ACTIVATIONS = ("gelu", "identity")

# ablation table rows: (decomposition, patching, embedding, patch mixer, embedding mixer)
ABLATION_CASES = {
    "I": (True, True, True, True, True),
    "II": (False, True, True, True, True),
    "III": (True, False, False, True, True),
    "IV": (False, False, False, True, True),
    "V": (True, True, False, True, True),
    "VI": (False, True, False, True, True),
    "VII": (True, True, True, False, False),
    "VIII": (False, True, True, False, False),
    "IX": (True, False, False, False, False),
    "X": (False, False, False, False, False),
    "XI": (True, True, False, False, False),
    "XII": (False, True, False, False, False),
    "XIII": (True, True, True, False, True),
    "XIV": (False, True, True, False, True),
}


@dataclass(frozen=True)
class ModelConfig:
    n_channels: int
    seq_len: int
    pred_len: int
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
    activation: str = "gelu"

    def with_ablation(self, case: str) -> ModelConfig:
        try:
            d, p, e, px, ex = ABLATION_CASES[case]
        except KeyError:
            raise ConfigError(f"unknown ablation case {case!r}; "
                              f"expected one of {', '.join(ABLATION_CASES)}") from None
        return replace(self, decomposition=d, patching=p, embedding=e,
                       patch_mixer=px, embedding_mixer=ex)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class BranchGeometry:
    name: str
    in_len: int
    out_len: int
    n_patches: int
    patch_len: int
    stride: int
    d_model: int


def patch_count(length: int, patch_len: int, stride: int) -> int:
    """Windows of ``patch_len`` at ``stride`` over the series padded with ``stride`` copies of its last value.

    Equals ``(length - patch_len) / stride + 2`` whenever ``stride`` divides
    ``length - patch_len``.
    """
    if patch_len < 1 or not 1 <= stride <= patch_len:
        raise ConfigError(f"patching needs P >= 1 and 1 <= S <= P, got P={patch_len}, S={stride}")
    if length < patch_len - stride:
        raise ConfigError(f"series of length {length} is shorter than P - S = {patch_len - stride}")
    return (length + stride - patch_len) // stride + 1


def validate(cfg: ModelConfig) -> None:
    if cfg.n_channels < 1 or cfg.seq_len < 1 or cfg.pred_len < 1:
        raise ConfigError(f"channels, look-back and horizon must be positive: {cfg}")
    if cfg.wavelet not in SUPPORTED:
        raise ConfigError(f"unknown wavelet {cfg.wavelet!r}; supported: {', '.join(SUPPORTED)}")
    if cfg.tfactor < 1 or cfg.dfactor < 1 or cfg.d_model < 1:
        raise ConfigError("expansion factors and d_model must be >= 1")
    for label, p in (("mixer_dropout", cfg.mixer_dropout), ("embed_dropout", cfg.embed_dropout)):
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"{label} must be in [0, 1), got {p}")
    if cfg.bn_axis not in BN_AXES:
        raise ConfigError(f"bn_axis must be one of {BN_AXES}, got {cfg.bn_axis!r}")
    if cfg.activation not in ACTIVATIONS:
        raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {cfg.activation!r}")


def branch_geometry(cfg: ModelConfig) -> list[BranchGeometry]:
    validate(cfg)
    if cfg.decomposition:
        flen = filter_bank(cfg.wavelet).length
        lin = level_lengths(cfg.seq_len, flen, cfg.level)
        lout = level_lengths(cfg.pred_len, flen, cfg.level)
        m = cfg.level
        specs = [(f"A{m}", lin[m], lout[m])]
        specs += [(f"D{i}", lin[i], lout[i]) for i in range(m, 0, -1)]
    else:
        specs = [("X", cfg.seq_len, cfg.pred_len)]
    out = []
    for j, (name, lin_i, lout_i) in enumerate(specs):
        if cfg.patching:
            p, s = cfg.patch_len, cfg.stride
            try:
                n = patch_count(lin_i, p, s)
            except ConfigError as exc:
                raise ConfigError(f"branch {j} ({name}): {exc}") from None
        else:
            p, s, n = lin_i, lin_i, 1
        d = cfg.d_model if cfg.embedding else p
        out.append(BranchGeometry(name, lin_i, lout_i, n, p, s, d))
    return out


# -- building blocks -------------------------------------------------------

def patch(x, patch_len: int, stride: int) -> Tensor:
    """``(..., L) -> (..., N, P)``: pad with ``stride`` copies of the last value, then slide."""
    x = as_tensor(x)
    length = x.shape[-1]
    n = patch_count(length, patch_len, stride)
    idx = np.minimum(np.arange(n)[:, None] * stride + np.arange(patch_len)[None, :], length - 1)
    lead = x.shape[:-1]
    gather = np.zeros((length, n * patch_len))
    gather[idx.reshape(-1), np.arange(n * patch_len)] = 1.0

    def backward(g):
        return ((g.reshape(-1, n * patch_len) @ gather.T).reshape(lead + (length,)),)

    return make_op("patch", x.data[..., idx], (x,), backward)


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear:
    def __init__(self, n_in: int, n_out: int, name: str, rng: np.random.Generator):
        self.weight = Parameter(_uniform(rng, n_in, (n_in, n_out)), f"{name}.weight")
        self.bias = Parameter(_uniform(rng, n_in, (n_out,)), f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


class BatchNorm:
    def __init__(self, num_features: int, name: str, axis: int):
        self.name = name
        self.axis = axis
        self.gamma = Parameter(np.ones(num_features), f"{name}.gamma")
        self.beta = Parameter(np.zeros(num_features), f"{name}.beta")
        self.state = BatchNormState(num_features)

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return batch_norm(x, self.gamma, self.beta, self.state, training, axis=self.axis)

    def parameters(self) -> list[Parameter]:
        return [self.gamma, self.beta]


class MixerModule:
    """Patch mixer (MLP over patches, no residual) then embedding mixer (residual MLP over d)."""

    def __init__(self, cfg: ModelConfig, geo: BranchGeometry, name: str, rng: np.random.Generator):
        n, d = geo.n_patches, geo.d_model
        axis, width = (3, d) if cfg.bn_axis == "embedding" else (1, cfg.n_channels)
        self.cfg = cfg
        self.patch_on = cfg.patch_mixer
        self.embed_on = cfg.embedding_mixer
        if self.patch_on:
            self.patch_bn = BatchNorm(width, f"{name}.patch_bn", axis)
            self.patch_fc1 = Linear(n, n * cfg.tfactor, f"{name}.patch_fc1", rng)
            self.patch_fc2 = Linear(n * cfg.tfactor, n, f"{name}.patch_fc2", rng)
        if self.embed_on:
            self.embed_bn = BatchNorm(width, f"{name}.embed_bn", axis)
            self.embed_fc1 = Linear(d, d * cfg.dfactor, f"{name}.embed_fc1", rng)
            self.embed_fc2 = Linear(d * cfg.dfactor, d, f"{name}.embed_fc2", rng)

    def _act(self, x: Tensor) -> Tensor:
        return gelu(x) if self.cfg.activation == "gelu" else x

    def patch_mixer(self, x: Tensor, training: bool, rng) -> Tensor:
        h = swapaxes(self.patch_bn(x, training), 2, 3)  # (B, C, d, N)
        h = self.patch_fc2(self._act(self.patch_fc1(h)))
        h = dropout(h, self.cfg.mixer_dropout, rng, training)
        return swapaxes(h, 2, 3)

    def embedding_mixer(self, x: Tensor, training: bool, rng) -> Tensor:
        h = self.embed_bn(x, training)
        u = self.embed_fc2(self._act(self.embed_fc1(h)))
        return h + dropout(u, self.cfg.mixer_dropout, rng, training)

    def __call__(self, x: Tensor, training: bool, rng) -> Tensor:
        if self.patch_on:
            x = self.patch_mixer(x, training, rng)
        if self.embed_on:
            x = self.embedding_mixer(x, training, rng)
        return x

    def parameters(self) -> list[Parameter]:
        out = []
        if self.patch_on:
            out += self.patch_bn.parameters() + self.patch_fc1.parameters() + self.patch_fc2.parameters()
        if self.embed_on:
            out += self.embed_bn.parameters() + self.embed_fc1.parameters() + self.embed_fc2.parameters()
        return out

    def batch_norms(self) -> list[BatchNorm]:
        return ([self.patch_bn] if self.patch_on else []) + ([self.embed_bn] if self.embed_on else [])


class Branch:
    def __init__(self, cfg: ModelConfig, geo: BranchGeometry, index: int, rng: np.random.Generator):
        self.cfg = cfg
        self.geo = geo
        self.index = index
        name = f"branch{index}"
        self.revin = (RevIN(cfg.n_channels, f"{name}.revin", affine=cfg.inner_revin_affine)
                      if cfg.inner_revin else None)
        self.embed = Linear(geo.patch_len, geo.d_model, f"{name}.embed", rng) if cfg.embedding else None
        self.mixing = cfg.patch_mixer or cfg.embedding_mixer
        self.mixer1 = self.mixer2 = self.out_bn = None
        if self.mixing:
            self.mixer1 = MixerModule(cfg, geo, f"{name}.mixer1", rng)
            if cfg.second_mixer:
                self.mixer2 = MixerModule(cfg, geo, f"{name}.mixer2", rng)
                axis, width = (3, geo.d_model) if cfg.bn_axis == "embedding" else (1, cfg.n_channels)
                self.out_bn = BatchNorm(width, f"{name}.out_bn", axis)
        self.head = Linear(geo.n_patches * geo.d_model, geo.out_len, f"{name}.head", rng)

    def mixer_stack(self, x: Tensor, training: bool, rng) -> Tensor:
        if not self.mixing:
            return x
        y1 = self.mixer1(x, training, rng)
        if self.mixer2 is None:
            return y1
        return self.out_bn(y1 + self.mixer2(y1, training, rng), training)

    def __call__(self, x: Tensor, training: bool, rng) -> Tensor:
        """``(B, C, L_i) -> (B, C, T_i)``."""
        geo = self.geo
        if x.shape[-1] != geo.in_len:
            raise DimensionError(f"branch {self.index} ({geo.name}): expected length "
                                 f"{geo.in_len}, got {x.shape[-1]}")
        stats = None
        if self.revin is not None:
            x, stats = self.revin.normalize(x)
        if self.cfg.patching:
            h = patch(x, geo.patch_len, geo.stride)  # (B, C, N, P)
        else:
            h = x.reshape(x.shape[:-1] + (1, geo.in_len))
        if self.embed is not None:
            h = dropout(self.embed(h), self.cfg.embed_dropout, rng, training)
        h = self.mixer_stack(h, training, rng)
        y = self.head(flatten(h, 2))
        if self.revin is not None:
            y = self.revin.denormalize(y, stats)
        return y

    def parameters(self) -> list[Parameter]:
        out = self.revin.parameters() if self.revin is not None else []
        if self.embed is not None:
            out += self.embed.parameters()
        if self.mixer1 is not None:
            out += self.mixer1.parameters()
        if self.mixer2 is not None:
            out += self.mixer2.parameters() + self.out_bn.parameters()
        return out + self.head.parameters()

    def batch_norms(self) -> list[BatchNorm]:
        out = self.mixer1.batch_norms() if self.mixer1 is not None else []
        if self.mixer2 is not None:
            out += self.mixer2.batch_norms() + [self.out_bn]
        return out


class WPMixer:
    """Full model: outer RevIN, decomposition, ``m + 1`` branches, reconstruction."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.cfg = cfg
        self.geometry = branch_geometry(cfg)
        self.revin = RevIN(cfg.n_channels, "revin") if cfg.outer_revin else None
        self.branches = [Branch(cfg, geo, j, rng) for j, geo in enumerate(self.geometry)]
        if cfg.decomposition:
            flen = filter_bank(cfg.wavelet).length
            self._out_lengths = level_lengths(cfg.pred_len, flen, cfg.level)[:-1]

    # -- parameters and buffers ---------------------------------------
    def parameters(self) -> list[Parameter]:
        out = self.revin.parameters() if self.revin is not None else []
        for b in self.branches:
            out += b.parameters()
        return out

    def named_parameters(self) -> dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}

    def batch_norms(self) -> list[BatchNorm]:
        return [bn for b in self.branches for bn in b.batch_norms()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def state_dict(self) -> dict[str, np.ndarray]:
        """Parameters plus batch-norm buffers, keyed by stable names."""
        out = {name: p.data.copy() for name, p in self.named_parameters().items()}
        for bn in self.batch_norms():
            out[f"{bn.name}.running_mean"] = bn.state.running_mean.copy()
            out[f"{bn.name}.running_var"] = bn.state.running_var.copy()
            out[f"{bn.name}.num_batches"] = np.array([float(bn.state.num_batches)])
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        expected = set(self.state_dict())
        missing, extra = expected - set(state), set(state) - expected
        if missing or extra:
            raise ContractError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for name, p in self.named_parameters().items():
            if state[name].shape != p.shape:
                raise ContractError(f"{name}: shape {state[name].shape} != {p.shape}")
            p.data = np.array(state[name], dtype=np.float64)
            p.zero_grad()
        for bn in self.batch_norms():
            bn.state.running_mean = np.array(state[f"{bn.name}.running_mean"], dtype=np.float64)
            bn.state.running_var = np.array(state[f"{bn.name}.running_var"], dtype=np.float64)
            bn.state.num_batches = int(state[f"{bn.name}.num_batches"][0])

    # -- forward ------------------------------------------------------
    def forward(self, x, training: bool = False, rng: np.random.Generator | None = None,
                capture: dict | None = None) -> Tensor:
        """``(B, C, L) -> (B, C, T)``.

        ``capture``, when given, receives the per-branch denormalised outputs
        under ``"branches"`` (instrumentation for tests).
        """
        x = as_tensor(x)
        cfg = self.cfg
        if x.ndim != 3 or x.shape[1] != cfg.n_channels or x.shape[2] != cfg.seq_len:
            raise DimensionError(f"expected input (B, {cfg.n_channels}, {cfg.seq_len}), got {x.shape}")
        stats = None
        if self.revin is not None:
            x, stats = self.revin.normalize(x)
        if cfg.decomposition:
            series = decompose(x, cfg.wavelet, cfg.level).series()
        else:
            series = [x]
        outputs = []
        for j, (branch, s) in enumerate(zip(self.branches, series)):
            try:
                outputs.append(branch(s, training, rng))
            except (DimensionError, ContractError) as exc:
                raise type(exc)(f"branch {j}: {exc}") from None
        if capture is not None:
            capture["branches"] = outputs
        if cfg.decomposition:
            coeffs = CoefficientSet.from_series(outputs, cfg.wavelet, self._out_lengths)
            y = reconstruct(coeffs, cfg.pred_len)
        else:
            y = outputs[0]
        if self.revin is not None:
            y = self.revin.denormalize(y, stats)
        return y

    __call__ = forward


def mixer_module_parameter_count(cfg: ModelConfig, geo: BranchGeometry) -> int:
    n, d = geo.n_patches, geo.d_model
    bn = 2 * (d if cfg.bn_axis == "embedding" else cfg.n_channels)
    total = 0
    if cfg.patch_mixer:
        nt = n * cfg.tfactor
        total += bn + (n * nt + nt) + (nt * n + n)
    if cfg.embedding_mixer:
        dd = d * cfg.dfactor
        total += bn + (d * dd + dd) + (dd * d + d)
    return total


def parameter_count(cfg: ModelConfig) -> int:
    """Closed-form parameter count.

    ``2C`` (outer RevIN) + per branch: ``2C`` inner RevIN + ``P d + d`` embedding
    + first mixer module + second mixer module and its trailing batch norm
    + ``N d T_i + T_i`` head.  A mixer module is ``[BN + (N N t_f + N t_f) +
    (N t_f N + N)]`` for the patch mixer plus ``[BN + (d d d_f + d d_f) +
    (d d_f d + d)]`` for the embedding mixer, each BN holding two vectors.
    """
    total = 2 * cfg.n_channels if cfg.outer_revin else 0
    for geo in branch_geometry(cfg):
        if cfg.inner_revin and cfg.inner_revin_affine:
            total += 2 * cfg.n_channels
        if cfg.embedding:
            total += geo.patch_len * geo.d_model + geo.d_model
        if cfg.patch_mixer or cfg.embedding_mixer:
            mix = mixer_module_parameter_count(cfg, geo)
            total += mix
            if cfg.second_mixer:
                total += mix + 2 * (geo.d_model if cfg.bn_axis == "embedding" else cfg.n_channels)
        total += geo.n_patches * geo.d_model * geo.out_len + geo.out_len
    return total
