import cpdetect as cp
import json
import numpy as np
import pandas as pd
import pytest
from cpdetect.report import _finite

W = cp.IntensityFamily.W


@pytest.fixture(scope="module")
def result():
    setting = cp.setting_from_change_points(
        "toy", [30], [3.5, 4.5], 60, seed=5)
    series = cp.gen_lognormal_series(setting)
    cfg = cp.GAConfig(population_size=10, generations=5, seed=2)
    return cp.detect(series, cp.mean_threshold(series), W, cfg=cfg,
                     source="toy.csv")


def test1():
    lower, upper = cp.confidence_bands([0.0, 100.0])
    assert lower[0] == 0 and upper[0] == 0
    assert 78 <= lower[1] <= 82
    assert 118 <= upper[1] <= 122
    m = np.linspace(0, 50, 200)
    lower, upper = cp.confidence_bands(m)
    assert (lower <= m).all() and (m <= upper).all()
    assert (np.diff(lower) >= 0).all() and (np.diff(upper) >= 0).all()
    with pytest.raises(cp.InvalidInputError):
        cp.confidence_bands([-1.0])
    with pytest.raises(cp.InvalidInputError):
        cp.confidence_bands([np.nan])


def test2():
    # alpha = 1 is a homogeneous process, the rate is flat
    model = cp.SegmentedModel(
        W, cp.ChangePointConfig((), 10), (cp.SegmentParams(1.0, 4.0),))
    (lo, mean, hi), = cp.regime_rate_summary(model)
    assert lo == pytest.approx(0.25)
    assert mean == pytest.approx(0.25)
    assert hi == pytest.approx(0.25)


def test3():
    # regime 2 starts at t = 4, its rate keeps growing from the change
    model = cp.SegmentedModel(
        W, cp.ChangePointConfig((3,), 6),
        (cp.SegmentParams(2.0, 1.0), cp.SegmentParams(2.0, 1.0)))
    first, second = cp.regime_rate_summary(model)
    assert first == pytest.approx((2.0, 4.0, 6.0))
    assert second == pytest.approx((8.0, 10.0, 12.0))


def test4():
    series = cp.MeasurementSeries([1.0, 3.0, 10.0, 20.0, 30.0])
    means = cp.regime_means(series, cp.ChangePointConfig((2,), 5))
    assert means == pytest.approx([2.0, 20.0])
    with pytest.raises(cp.InvalidInputError):
        cp.regime_means(series, cp.ChangePointConfig((2,), 6))


def test5(result):
    assert result.config.horizon == 60
    assert len(result.segments) == result.config.J + 1
    assert result.t.tolist() == list(range(61))
    assert result.observed[0] == 0 and result.observed[-1] == result.n_events
    assert result.m_fit[0] == 0
    assert (np.diff(result.m_fit) >= 0).all()
    assert (result.lower <= result.m_fit).all()
    assert (result.m_fit <= result.upper).all()
    assert len(result.bmdl_trace) == 5
    assert result.bmdl == min(result.bmdl_trace)
    assert sum(result.cp_frequency.values()) == sum(result.j_trace)


def test6(result):
    doc = cp.detection_to_dict(result)
    assert set(doc) == {"spec_version", "input", "config", "best", "trace",
                        "frequency", "fit", "regimes"}
    assert doc["input"]["source"] == "toy.csv"
    assert doc["input"]["horizon"] == 60
    assert doc["config"]["family"] == "weibull"
    assert doc["config"]["ga"]["population_size"] == 10
    assert doc["best"]["tau"] == list(result.config.tau)
    assert len(doc["regimes"]) == result.config.J + 1
    assert doc["regimes"][0]["start"] == 1
    assert doc["regimes"][-1]["end"] == 60
    text = cp.dumps_json(doc)
    assert text.endswith("\n")
    assert cp.dumps_json(json.loads(text)) == text


def test7(result, tmp_path):
    path = tmp_path / "r.json"
    cp.write_json(cp.detection_to_dict(result), str(path))
    doc = json.loads(path.read_text())
    assert doc["best"]["J"] == result.config.J
    assert list(tmp_path.iterdir()) == [path]


def test8(result, tmp_path):
    frame = cp.plot_frame(result)
    assert list(frame.columns) == ["panel", "t", "series", "value"]
    assert set(frame["panel"]) <= {"fit", "trace", "frequency", "regimes"}
    assert not frame["value"].isna().any()
    fit = frame[frame["panel"] == "fit"]
    assert len(fit) == 4 * 61
    regimes = frame[(frame["panel"] == "regimes")
                    & (frame["series"] == "regime_mean")]
    assert len(regimes) == 60
    path = tmp_path / "p.csv"
    cp.write_plot_csv(result, str(path))
    back = pd.read_csv(path)
    assert len(back) == len(frame)
    assert not back["value"].isna().any()


def test9():
    assert _finite(np.inf) is None
    assert _finite(np.nan) is None
    assert _finite(2.5) == 2.5
    with pytest.raises(ValueError):
        cp.dumps_json({"x": float("nan")})


def test10():
    setting = cp.setting_from_change_points(
        "toy", [40], [3.5, 4.5], 80, seed=3)
    series = cp.gen_lognormal_series(setting)
    cfg = cp.GAConfig(population_size=6, generations=3, seed=1)
    out = cp.compare_methods(series, cfg=cfg)
    assert set(out) == set(cp.METHODS)
    for res in out.values():
        assert all(isinstance(t, int) for t in res["change_points"])
    assert out["pelt"]["cost"] == "log"
    assert out["ga"]["family"] == "weibull"
    json.loads(cp.dumps_json(out))
    with pytest.raises(cp.InvalidInputError):
        cp.compare_methods(series, ["ga", "bocpd"])


@pytest.fixture(scope="module")
def one_change_runs():
    runs = []
    for seed in range(5):
        series = cp.gen_lognormal_series(cp.get_setting("1cp"), rng=seed)
        runs.append(cp.detect(series, cp.mean_threshold(series), W,
                              cfg=cp.GAConfig(seed=seed)))
    return runs


@pytest.mark.slow
def test11(one_change_runs):
    hits = 0
    for res in one_change_runs:
        freq = res.cp_frequency
        modal = max(freq, key=freq.get) if freq else None
        if modal is not None and abs(modal - 825) <= 10:
            hits += 1
    assert hits >= 4


@pytest.mark.slow
def test12(one_change_runs):
    # pointwise bands of a cumulative path, required in 4 of the 5 runs
    shares = [np.mean((res.lower <= res.observed)
                      & (res.observed <= res.upper))
              for res in one_change_runs]
    assert sum(s >= 0.9 for s in shares) >= 4


@pytest.mark.slow
def test13():
    setting = cp.get_setting("J10")
    series = cp.gen_lognormal_series(setting)
    res = cp.detect(series, cp.mean_threshold(series), W,
                    cfg=cp.GAConfig(seed=0))
    assert 8 <= res.config.J <= 14
    close = sum(min(abs(t - true) for t in res.config.tau) <= 10
                for true in setting.change_points)
    assert close >= 4
