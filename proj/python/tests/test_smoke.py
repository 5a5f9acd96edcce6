import json
import math

import numpy as np
import pytest

import nsreg


@pytest.fixture(scope="module")
def pair():
    return nsreg.generate_phantom_pair([24, 24, 24], seed=3, noise=10.0, gain=1.1)


def test_scene_array_round_trip(tmp_path, pair):
    t2, pd = pair
    assert t2.protocol == "T2" and pd.protocol == "PD"
    a = t2.to_array()
    assert a.shape == (24, 24, 24) and a.dtype == np.uint16
    s = nsreg.Scene(a, protocol="T2")
    assert np.array_equal(s.to_array(), a)
    nsreg.save_scene(t2, tmp_path / "t2")
    assert np.array_equal(nsreg.load_scene(tmp_path / "t2").to_array(), a)


def test_errors_map_to_exception(tmp_path):
    with pytest.raises(nsreg.NsregError):
        nsreg.load_scene(tmp_path / "missing")
    with pytest.raises(ValueError):
        nsreg.Scene(np.zeros((2, 2), dtype=np.uint16))


def test_standardize_pins_the_median(pair):
    scenes = [nsreg.generate_phantom_pair([24, 24, 24], seed=k, noise=10.0, gain=g)[0] for k, g in enumerate([0.8, 1.0, 1.3])]
    model = nsreg.train_model(scenes)
    medians = {int(np.median(nsreg.standardize_scene(s, model).to_array()[s.to_array() > 0])) for s in scenes}
    assert len(medians) == 1
    assert json.loads(model.to_json())["protocol"] == "T2"
    assert nsreg.levels()[0] == "clean" and len(nsreg.levels()) == 8
    m1, m2 = nsreg.sample_slopes("psibar7", 5)
    assert 3.0 <= m1 <= 3.3 and 3.0 <= m2 <= 3.3


def test_register_recovers_translation(pair):
    t2, _ = pair
    truth = nsreg.AffineParams()
    truth.translation = [2.0, -1.0, 1.5]
    target = nsreg.resample(t2, truth)
    r = nsreg.register_affine(t2, target)
    assert nsreg.rmse_corners(truth, r.params, t2) < 0.5
    assert r.matrix.shape == (4, 4)


def test_statistics():
    assert nsreg.goodness(3, 3, 4) == pytest.approx(1.0)
    assert math.isinf(nsreg.goodness(5, 0, 0))
    res = nsreg.paired_t_test([1.0, 1.1, 0.9, 1.2], [2.0, 2.3, 1.8, 2.4])
    assert res["outcome"] == "ns_loses" and res["df"] == 3
    name, group, _ = nsreg.grid_cell(0)
    assert (name, group) == ("r0t0s0h0", "small")
    assert len(nsreg.desk_grid_ids()) == 27
