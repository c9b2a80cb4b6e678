import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wpmixer import checkpoint as ck
from wpmixer.config import RunConfig, load_config, rng_stream
from wpmixer.errors import CheckpointError, ConfigError
from wpmixer.model import WPMixer

SAMPLE = """\
[data]
path = data/ETTh1.csv

[model]
seq_len = 64
pred_len = 16
level = 2
d_model = 8
ablation = III

[train]
lr = 0.002
loss = mse

[run]
seed = 7
"""


# -- config ------------------------------------------------------------------------

def test_parse_sample():
    cfg = RunConfig.from_ini(SAMPLE)
    assert cfg.model.seq_len == 64 and cfg.train.lr == 0.002 and cfg.run.seed == 7
    assert cfg.dataset_name() == "ETTh1"
    mc = cfg.model_config(n_channels=7)
    assert mc.n_channels == 7 and not mc.patching and not mc.embedding and mc.patch_mixer


def test_round_trip_is_fixpoint():
    cfg = RunConfig.from_ini(SAMPLE)
    text = cfg.to_ini()
    assert RunConfig.from_ini(text) == cfg
    assert RunConfig.from_ini(text).to_ini() == text


path_text = st.text(st.sampled_from("abcXYZ019_-./"), min_size=1, max_size=20)


@given(path_text, st.integers(8, 2000), st.integers(1, 1000), st.floats(1e-6, 1.0),
       st.floats(0.0, 0.9), st.booleans(), st.sampled_from(["db2", "sym4", "coif5"]),
       st.sampled_from(["mse", "smooth_l1"]), st.integers(0, 2**31),
       st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3).map(tuple))
def test_round_trip_property(path, L, T, lr, drop, flag, wav, loss, seed, ratios):
    base = RunConfig()
    cfg = base.with_values({("data", "path"): path, ("model", "seq_len"): str(L),
                            ("model", "pred_len"): str(T), ("train", "lr"): repr(lr),
                            ("model", "mixer_dropout"): repr(drop),
                            ("model", "second_mixer"): str(flag), ("model", "wavelet"): wav,
                            ("train", "loss"): loss, ("run", "seed"): str(seed),
                            ("data", "ratios"): ", ".join(map(repr, ratios))}, "test")
    assert RunConfig.from_ini(cfg.to_ini()) == cfg


@pytest.mark.parametrize("text,pattern", [
    ("[model]\nd_modle = 8\n", "unknown key 'd_modle'"),
    ("[optim]\nlr = 1\n", r"unknown section \[optim\]"),
    ("[model]\nseq_len = many\n", "model.seq_len"),
    ("[model]\nembedding = maybe\n", "not a boolean"),
    ("[model]\nseq_len = 1\nseq_len = 2\n", "seq_len"),
])
def test_bad_files_rejected(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        RunConfig.from_ini(text)


def test_precedence_cli_over_env_over_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[train]\nbatch_size = 16\nepochs = 3\nlr = 0.5\n")
    env = {"WPMIXER_TRAIN_BATCH_SIZE": "64", "WPMIXER_TRAIN_EPOCHS": "9", "HOME": "/x"}
    cfg = load_config(str(p), env, {("train", "epochs"): "11"})
    assert cfg.train.batch_size == 64  # env beats file
    assert cfg.train.epochs == 11      # command line beats env
    assert cfg.train.lr == 0.5         # file beats defaults
    assert cfg.train.loss == "smooth_l1"


def test_env_unknown_key_rejected():
    with pytest.raises(ConfigError, match="environment"):
        load_config(None, {"WPMIXER_MODEL_DEPTH": "3"})


def test_missing_config_file():
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config("/nonexistent/x.ini", {})


def test_channel_mismatch_and_inference():
    cfg = RunConfig().with_values({("model", "channels"): "3"}, "t")
    with pytest.raises(ConfigError, match="3"):
        cfg.model_config(n_channels=7)
    with pytest.raises(ConfigError):
        RunConfig().model_config()
    assert RunConfig().model_config(n_channels=5).n_channels == 5


def test_rng_streams_are_reproducible_and_independent():
    a1, a2 = rng_stream(42, "init").random(5), rng_stream(42, "init").random(5)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, rng_stream(42, "shuffle").random(5))
    assert not np.array_equal(a1, rng_stream(43, "init").random(5))


# -- checkpoint ----------------------------------------------------------------------

def make_ckpt(seed=0):
    cfg = RunConfig.from_ini(SAMPLE)
    model = WPMixer(cfg.model_config(n_channels=3), np.random.default_rng(seed))
    return ck.Checkpoint(cfg, model.state_dict(), {"n_channels": 3, "columns": ["a", "b", "c"]})


def test_encode_decode_round_trip():
    c = make_ckpt()
    back = ck.decode(ck.encode(c))
    assert back.config == c.config and back.meta == c.meta
    assert back.tensors.keys() == c.tensors.keys()
    assert all(np.array_equal(back.tensors[k], v) for k, v in c.tensors.items())


def test_encoding_is_deterministic_and_header_fixed():
    blob = ck.encode(make_ckpt())
    assert blob == ck.encode(make_ckpt())
    assert blob[:4] == b"WPMX" and int.from_bytes(blob[4:8], "little") == 1


def test_save_load_and_manifest(tmp_path):
    path = str(tmp_path / "m.wpmx")
    c = make_ckpt()
    ck.save(path, c)
    lines = open(path + ".manifest").read().splitlines()
    assert lines[0].startswith("# ") and len(lines) == len(c.tensors) + 1
    name, shape, digest = lines[1].split("\t")
    assert name == sorted(c.tensors)[0] and len(digest) == 64
    assert shape == "x".join(map(str, c.tensors[name].shape))
    loaded = ck.load(path)
    model = WPMixer(loaded.config.model_config(3))
    model.load_state_dict(loaded.tensors)


def test_manifest_mismatch_detected(tmp_path):
    path = str(tmp_path / "m.wpmx")
    ck.save(path, make_ckpt(0))
    other = ck.encode(make_ckpt(1))
    with open(path, "wb") as fh:
        fh.write(other)
    with pytest.raises(CheckpointError, match="do not match"):
        ck.load(path)
    ck.load(path, verify_manifest=False)


@pytest.mark.parametrize("mutate,pattern", [
    (lambda b: b"XXXX" + b[4:], "bad magic"),
    (lambda b: b[:4] + (9).to_bytes(4, "little") + b[8:], "version 9"),
    (lambda b: b[:-5], "truncated"),
    (lambda b: b + b"\0", "trailing"),
])
def test_corrupt_blobs(mutate, pattern):
    with pytest.raises(CheckpointError, match=pattern):
        ck.decode(mutate(ck.encode(make_ckpt())))


def test_load_missing_file(tmp_path):
    with pytest.raises(CheckpointError, match="cannot read"):
        ck.load(str(tmp_path / "none.wpmx"))


def test_load_state_dict_is_strict():
    c = make_ckpt()
    model = WPMixer(c.config.model_config(3))
    bad = dict(c.tensors)
    bad.pop(sorted(bad)[0])
    with pytest.raises(Exception, match=sorted(c.tensors)[0].replace(".", r"\.")):
        model.load_state_dict(bad)


def test_config_diff_lists_fields():
    a = RunConfig.from_ini(SAMPLE)
    b = a.with_values({("model", "d_model"): "16", ("train", "lr"): "0.1"}, "t")
    assert ck.config_diff(a, b) == ["model.d_model: 8 != 16"]
    assert len(ck.config_diff(a, b, ("model", "train"))) == 2
    assert os.path.basename(ck.manifest_path("/x/y.wpmx")) == "y.wpmx.manifest"
