import json
import math
from pathlib import Path

import numpy as np
import pytest

import wi2vi

ROOT = Path(__file__).resolve().parents[2]


def test_sanitize_constant_is_zero():
    out = wi2vi.sanitize_phase([0.7] * 30)
    assert len(out) == 30
    assert max(abs(v) for v in out) < 1e-12


def test_unwrap_removes_jumps():
    wrapped = [math.remainder(0.4 * i, 2 * math.pi) for i in range(40)]
    un = wi2vi.unwrap_phase(wrapped)
    assert all(abs(b - a - 0.4) < 1e-9 for a, b in zip(un, un[1:]))


def test_lr_schedule():
    assert wi2vi.lr_at(0) == pytest.approx(0.002)
    assert wi2vi.lr_at(10) == pytest.approx(0.002 * 0.955**2, rel=1e-12)
    with pytest.raises(wi2vi.ConfigError):
        wi2vi.lr_at(0, decay_every=0)


def test_dropin_and_split():
    sel = wi2vi.dropin_select_indices(5, 3, 7)
    assert sorted(sel) == sel and len(set(sel)) == 3
    assert sel == wi2vi.dropin_select_indices(5, 3, 7)
    m = wi2vi.dropin_matrix(sel, 5)
    assert m.shape == (5, 3)
    assert (m.sum(axis=0) == 1).all()
    assert wi2vi.split_point(8300, 0.95) == 7885


def test_parameter_count_default():
    assert wi2vi.parameter_count() == 1970630


def test_bad_config_raises(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    with pytest.raises(wi2vi.ConfigError):
        wi2vi.simulate(str(cfg), str(tmp_path / "out"))


TINY = {
    "duration_s": 4,
    "scene": {
        "room": {"width_m": 6.0, "depth_m": 4.0},
        "tx_pos": [0.5, 2.0], "rx_pos": [5.5, 2.0], "cam_pos": [3.0, 0.0],
        "static_paths": [{"alpha": 0.02, "tau_ns": 18.0, "aod_deg": 20.0, "aoa_deg": -35.0}],
        "background": {"base": 0.3, "rects": [{"x": 0.0, "y": 0.7, "w": 1.0, "h": 0.3, "value": 0.15}]},
        "mover": {
            "extent_m": 0.8, "gray": 0.9,
            "trajectory": [
                {"time_us": 0, "pos": [1.5, 1.5], "present": False},
                {"time_us": 1000000, "pos": [1.5, 1.5]},
                {"time_us": 4000000, "pos": [4.5, 2.5]},
            ],
        },
    },
    "sim": {"F": 8, "T": 1, "R": 1, "noise_sigma": 0.002, "inject_linear_phase": True, "rng_seed": 3},
    "camera": {"fps": 10, "width": 16, "height": 16, "background_frames": 3},
    "preprocess": {"downsample": 1, "width": 8, "height": 8, "threshold": 0.05},
    "sync": {"n": 5, "k": 2, "train_fraction": 0.75},
    "model": {
        "encoder_channels": [3, 3, 3, 3, 4],
        "encoder_strides": [[1, 1], [1, 2], [1, 1], [1, 1], [1, 2]],
        "bottleneck_dim": 5, "translator_channels": 3, "decoder_channels": 3, "upsample_channels": [3, 2],
    },
    "train": {"epochs": 2, "batch_size": 8, "lr0": 0.01, "precision": "float64", "verbose": False},
    "mode": "dynamics",
}


def test_pipeline_round_trip(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(TINY))
    sim = wi2vi.simulate(str(cfg), str(tmp_path / "sim"))
    assert sim["frames"] == 40
    pre = wi2vi.preprocess(str(cfg), str(tmp_path / "sim"), str(tmp_path / "pre"))
    assert pre["frames"] == 40
    img = wi2vi.read_pgm(str(sorted((tmp_path / "pre").rglob("*.pgm"))[0]))
    assert isinstance(img, np.ndarray) and img.shape == (8, 8)
    assert 0.0 <= img.min() and img.max() <= 1.0
    syn = wi2vi.sync(str(cfg), str(tmp_path / "pre"), str(tmp_path / "ds"))
    assert syn["n"] == 5 and syn["train"] + syn["test"] == syn["samples"]
    run = wi2vi.train(str(cfg), str(tmp_path / "ds"), str(tmp_path / "run"))
    assert [h["epoch"] for h in run["history"]] == [0, 1]
    assert all(math.isfinite(h["eval_l1"]) for h in run["history"])
    report = wi2vi.evaluate(str(run["checkpoint"]), str(tmp_path / "ds"))
    assert report["samples"] == syn["test"]
    assert report == wi2vi.evaluate(str(run["checkpoint"]), str(tmp_path / "ds"))
    assert wi2vi.generate(str(run["checkpoint"]), str(tmp_path / "ds"), str(tmp_path / "gen")) == syn["test"]


def test_empty_dataset_raises(tmp_path):
    with pytest.raises(wi2vi.DataError):
        wi2vi.evaluate(str(tmp_path / "missing.w2vp"), str(tmp_path))
