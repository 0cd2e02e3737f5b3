import json
import math

import numpy as np
import pytest

import risloc

SMALL = {"num_tiles": 4, "pilots": 4, "noise_power": 0.0}


def test_scene_properties():
    s = risloc.Scene(SMALL)
    assert s.num_tiles == 4
    assert s.pilots == 4
    assert s.wavelength == pytest.approx(299792458.0 / 3.5e9)
    assert s.tile_centroids().shape == (4, 3)
    assert s.schedule.shape == (4, 4)
    assert json.loads(s.config_json)["num_tiles"] == 4


def test_invalid_scene_raises_config_error():
    with pytest.raises(risloc.ConfigError):
        risloc.Scene({"num_tiles": 3})
    assert issubclass(risloc.ConfigError, risloc.Error)


def test_simulate_and_cost_zero_at_truth():
    s = risloc.Scene({"num_tiles": 20, "pilots": 16, "noise_power": 0.0})
    y, beta = s.simulate(1.0, 5.0, 0.7, seed=3)
    assert y.shape == (16,)
    assert beta.shape == (16, 20)
    assert np.iscomplexobj(y)
    assert s.direct_cost(y, beta, 1.0, 5.0, 0.7) < 1e-18 * float(np.sum(np.abs(y) ** 2))
    assert s.direct_cost(y, beta, -2.0, 8.0, 0.7) > 0.0


def test_estimate_direct_recovers_noiseless_position():
    s = risloc.Scene({"num_tiles": 20, "pilots": 16, "noise_power": 0.0})
    y, beta = s.simulate(-1.5, 6.5, 2.0, seed=1)
    r = s.estimate_direct(y, beta, seed=1)
    x, y_pos = r["position"]
    assert math.hypot(x + 1.5, y_pos - 6.5) < 0.01


def test_dataset_train_predict_roundtrip(tmp_path):
    s = risloc.Scene(SMALL)
    path = str(tmp_path / "d.bin")
    assert s.generate_dataset(60, 5, path) == 60
    d = risloc.load_dataset(path)
    assert d["features"].shape == (60, 2 * 4 * 5)
    assert len(d["train"]) + len(d["val"]) + len(d["test"]) == 60

    model, history = risloc.train(path, {"hidden": 4, "dense_dims": [8]}, {"epochs": 2, "seed": 1})
    assert len(history) == 2
    assert model.parameter_count == risloc.parameter_count(
        {"input_dim": 40, "hidden": 4, "dense_dims": [8]}
    )
    y, beta = s.simulate(0.0, 5.0, 0.0)
    pos, latency = model.predict(y, beta)
    assert pos.shape == (2,)
    assert latency >= 0.0

    ckpt = str(tmp_path / "m.ckpt")
    model.save(ckpt)
    again = risloc.Model.load(ckpt)
    np.testing.assert_array_equal(again.predict(y, beta)[0], pos)

    wider = risloc.Scene({"num_tiles": 6, "pilots": 4})
    y6, beta6 = wider.simulate(0.0, 5.0, 0.0)
    with pytest.raises(risloc.ArtifactMismatch):
        model.predict(y6, beta6)


def test_corrupt_dataset_raises_format_error(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not a dataset at all")
    with pytest.raises(risloc.FormatError):
        risloc.load_dataset(str(path))


def test_reference_parameter_count_and_presets():
    assert risloc.parameter_count() == 30_992_098
    desk = risloc.preset("desk_z1")
    assert desk["scene"]["num_tiles"] == 20
    assert desk["model"]["hidden"] == 64


def test_percentiles_and_heatmap_count():
    rows = dict(risloc.percentile_curve([1.0, 2.0, 3.0, 4.0], [50.0]))
    assert rows[50.0] == pytest.approx(2.5)
    assert risloc.heatmap_point_count(0.1) == 7371
