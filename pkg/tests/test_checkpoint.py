import json

import numpy as np
import pytest

from deductree.checkpoint import (BlobError, ShapeMismatchError, VersionError,
                                  load_checkpoint, save_checkpoint)
from deductree.model import HyperParams, init_params
from deductree.rng import Rng


@pytest.fixture
def saved(tmp_path, small_hyper):
    params = init_params(small_hyper, Rng(9))
    save_checkpoint(params, tmp_path / "ckpt", seed=9,
                    meta={"task": 2, "lam": 1.0})
    return params, tmp_path / "ckpt"


def test_round_trip_within_float32_rounding(saved):
    params, path = saved
    loaded, extras, manifest = load_checkpoint(path)
    assert manifest["seed"] == 9
    assert manifest["meta"]["task"] == 2
    assert extras == {}
    for name in params._names:
        orig = params[name].data
        got = loaded[name].data
        denom = np.maximum(np.abs(orig), 1e-30)
        assert np.max(np.abs(got - orig) / denom) <= 6e-8


def test_save_is_deterministic(tmp_path, small_hyper):
    params = init_params(small_hyper, Rng(3))
    save_checkpoint(params, tmp_path / "a", seed=3)
    save_checkpoint(params, tmp_path / "b", seed=3)
    assert (tmp_path / "a" / "params.bin").read_bytes() == \
        (tmp_path / "b" / "params.bin").read_bytes()


def test_short_blob_error(saved):
    _, path = saved
    blob = (path / "params.bin").read_bytes()
    (path / "params.bin").write_bytes(blob[:-8])
    with pytest.raises(BlobError, match="short blob"):
        load_checkpoint(path)


def test_oversized_blob_error(saved):
    _, path = saved
    blob = (path / "params.bin").read_bytes()
    (path / "params.bin").write_bytes(blob + b"\x00" * 4)
    with pytest.raises(BlobError, match="oversized"):
        load_checkpoint(path)


def test_manifest_shape_edit_rejected(saved):
    _, path = saved
    manifest = json.loads((path / "manifest.json").read_text())
    manifest["tensors"][0]["shape"] = [784, 99]
    (path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ShapeMismatchError):
        load_checkpoint(path)


def test_version_mismatch_rejected(saved):
    _, path = saved
    manifest = json.loads((path / "manifest.json").read_text())
    manifest["format_version"] = 99
    (path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(VersionError):
        load_checkpoint(path)


def test_missing_checkpoint_is_file_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "nope")


def test_extra_tensors_round_trip(tmp_path, small_hyper):
    params = init_params(small_hyper, Rng(4))
    centroids = Rng(5).uniform_array((10, small_hyper.feature_dim))
    save_checkpoint(params, tmp_path / "c", seed=4,
                    extra_tensors={"centroids": centroids})
    _, extras, _ = load_checkpoint(tmp_path / "c")
    assert set(extras) == {"centroids"}
    assert np.max(np.abs(extras["centroids"] - centroids)) <= 6e-8


def test_attention_schema_round_trips(tmp_path):
    hyper = HyperParams(feature_dim=6, hidden_dim=8, heads=3, attention=True)
    params = init_params(hyper, Rng(6))
    save_checkpoint(params, tmp_path / "att", seed=6)
    loaded, _, manifest = load_checkpoint(tmp_path / "att")
    assert manifest["hyper"]["attention"] is True
    assert loaded.hyper.heads == 3
    assert any(name.startswith("att2") for name in loaded._names)
