from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from wpmixer import model as model_mod
from wpmixer.flops import count_flops, flop_breakdown, gflops
from wpmixer.model import ModelConfig, WPMixer
from wpmixer.presets import TABLE5, unified_model_config


def cfg(**kw):
    base = dict(n_channels=3, seq_len=96, pred_len=24, wavelet="db3", level=2, patch_len=8,
                stride=4, d_model=8, tfactor=3, dfactor=2)
    base.update(kw)
    return ModelConfig(**base)


def traced_matmul_flops(c: ModelConfig, batch: int) -> Counter:
    """Run a forward pass and tally 2 * MACs of every linear layer by role."""
    tally = Counter()
    original = model_mod.Linear.__call__

    def traced(self, x):
        rows = int(np.prod(x.shape[:-1]))
        n_in, n_out = self.weight.shape
        name = self.weight.name
        role = ("head" if ".head." in name else "embedding" if ".embed." in name
                else "patch_mixer" if ".patch_fc" in name else "embedding_mixer")
        tally[role] += 2 * rows * n_in * n_out
        return original(self, x)

    model_mod.Linear.__call__ = traced
    try:
        m = WPMixer(c)
        m.forward(np.random.default_rng(0).standard_normal((batch, c.n_channels, c.seq_len)),
                  training=True, rng=np.random.default_rng(0))
    finally:
        model_mod.Linear.__call__ = original
    return tally


@pytest.mark.parametrize("kw", [{}, dict(level=1, wavelet="db2"), dict(second_mixer=False),
                                dict(decomposition=False), dict(patching=False, embedding=False)])
def test_matmul_terms_match_traced_forward(kw):
    c = cfg(**kw)
    parts = flop_breakdown(c, batch=2)
    traced = traced_matmul_flops(c, 2)
    for role in ("embedding", "patch_mixer", "embedding_mixer", "head"):
        assert parts[role] == traced[role], role


def test_doubling_d_quadruples_embedding_mixer():
    a = flop_breakdown(cfg(d_model=8))["embedding_mixer"]
    b = flop_breakdown(cfg(d_model=16))["embedding_mixer"]
    assert b == 4 * a


def test_linear_in_batch():
    assert count_flops(cfg(), batch=7) == 7 * count_flops(cfg(), batch=1)


def test_decomposition_off_has_no_transform_terms():
    parts = flop_breakdown(cfg(decomposition=False))
    assert parts["dwt"] == parts["idwt"] == 0
    assert parts["head"] == 2 * 3 * 24 * 8 * 24  # one branch: N=24 patches of width 8, T=24


def test_dwt_term_hand_count():
    # L=16, db2 (4 taps), m=1: 9 outputs per filter, 2 filters, 2 FLOPs per tap
    c = cfg(n_channels=1, seq_len=16, pred_len=4, wavelet="db2", level=1, patch_len=4, stride=2)
    assert flop_breakdown(c)["dwt"] == 2 * 2 * 9 * 4


def test_unified_presets_are_positive():
    values = [gflops(unified_model_config("ETTh1", T), 128) for T in (96, 192, 336, 720)]
    assert all(v > 0 for v in values)
    assert len(TABLE5) == 28


def test_ablation_flags_zero_their_terms():
    parts = flop_breakdown(replace(cfg(), patch_mixer=False))
    assert parts["patch_mixer"] == 0 and parts["embedding_mixer"] > 0
