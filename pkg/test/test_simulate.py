import cpdetect as cp
import numpy as np
import pytest
from scipy.stats import norm


def test1():
    names = [s.name for s in cp.preset_settings()]
    assert names == ["1cp", "2cp", "3cp", "J10", "J20", "J50"]
    for setting in cp.preset_settings():
        assert setting.horizon == 1096
        assert all(r.sigma == 0.32 for r in setting.regimes)
        assert len(setting.change_points) == len(setting.regimes) - 1


def test2():
    assert cp.get_setting("1cp").change_points == [825]
    assert cp.get_setting("2cp").change_points == [365, 730]
    assert cp.get_setting("3cp").change_points == [548, 823, 973]
    assert [r.mu for r in cp.get_setting("3cp").regimes] == [
        3.5, 4.0, 4.5, 5.0]
    j50 = cp.get_setting("J50").change_points
    assert len(j50) == 50
    assert j50[:3] == [22, 43, 64]
    assert len(cp.get_setting("j10").change_points) == 10
    assert len(cp.get_setting("J20").change_points) == 20
    with pytest.raises(cp.InvalidInputError):
        cp.get_setting("4cp")


def test3():
    # random regime means are part of the setting, not of the sample
    a = cp.get_setting("J20")
    b = cp.get_setting("J20", seed=99)
    assert [r.mu for r in a.regimes] == [r.mu for r in b.regimes]
    assert b.seed == 99
    assert all(0.5 <= r.mu <= 6.0 for r in a.regimes)


def test4():
    setting = cp.get_setting("2cp")
    s1 = cp.gen_lognormal_series(setting, rng=7)
    s2 = cp.gen_lognormal_series(setting, rng=np.random.default_rng(7))
    s3 = cp.gen_lognormal_series(setting, rng=8)
    assert np.array_equal(s1.values, s2.values)
    assert not np.array_equal(s1.values, s3.values)
    assert s1.horizon == 1096
    assert (s1.values > 0).all()
    default = cp.gen_lognormal_series(setting)
    assert np.array_equal(
        default.values, cp.gen_lognormal_series(setting, rng=0).values)


def test5():
    setting = cp.setting_from_change_points(
        "big", [20000], [1.0, 3.0], 40000, sigma=0.5)
    x = np.log(cp.gen_lognormal_series(setting, rng=1).values)
    for seg, mu in ((x[:20000], 1.0), (x[20000:], 3.0)):
        assert seg.mean() == pytest.approx(mu, abs=4 * 0.5 / np.sqrt(20000))
        assert seg.std() == pytest.approx(0.5, rel=0.03)


def test6():
    setting = cp.setting_from_change_points("s", [3, 7], [0, 1, 2], 10)
    assert [r.length for r in setting.regimes] == [3, 4, 3]
    assert setting.change_points == [3, 7]
    assert setting.horizon == 10
    with pytest.raises(cp.InvalidInputError):
        cp.setting_from_change_points("s", [3, 7], [0, 1], 10)
    with pytest.raises(cp.InvalidInputError):
        cp.setting_from_change_points("s", [7, 3], [0, 1, 2], 10)
    with pytest.raises(cp.InvalidInputError):
        cp.setting_from_change_points("s", [3, 10], [0, 1, 2], 10)
    with pytest.raises(cp.InvalidInputError):
        cp.RegimeSpec(1.0, 0.0, 5)


def test7():
    # a jump of the log-mean raises the exceedance rate of a fixed threshold
    series = cp.gen_lognormal_series(cp.get_setting("1cp"), rng=2)
    data = cp.extract_exceedances(series, cp.mean_threshold(series))
    before = data.cumulative(825) / 825
    after = (data.n - data.cumulative(825)) / (1096 - 825)
    assert after > before + 0.3


def test8():
    # first PCG64 uniform of seed 12345 is 0.22733602246716966
    setting = cp.setting_from_change_points(
        "v", [2], [0.0, 3.0], 5, sigma=1.0)
    x = np.log(cp.gen_lognormal_series(setting, rng=12345).values)
    assert x[0] == pytest.approx(norm.ppf(0.22733602246716966), rel=1e-12)
    assert x[0] == pytest.approx(-0.7476, abs=1e-3)
    u = np.random.default_rng(12345).random(5)
    expected = np.array([0.0, 0.0, 3.0, 3.0, 3.0]) + norm.ppf(u)
    assert x == pytest.approx(expected, rel=1e-12, abs=1e-12)
