from cpdetect.cli import main, parse_threshold, workers_from_env
import cpdetect as cp
import json
import pandas as pd
import pytest

GA_FLAGS = ["--generations", "3", "--pop", "6", "--seed", "1",
            "--init-prob", "0.005"]


@pytest.fixture
def series_csv(tmp_path):
    path = tmp_path / "s.csv"
    assert main(["simulate", "--setting", "1cp", "--seed", "7",
                 "--out", str(path)]) == 0
    return path


def test1(series_csv):
    df = pd.read_csv(series_csv)
    assert list(df.columns) == ["date", "value"]
    assert len(df) == 1096
    assert (df["value"] > 0).all()
    series = cp.read_series_csv(str(series_csv))
    expected = cp.gen_lognormal_series(cp.get_setting("1cp", seed=7))
    assert series.values.tolist() == expected.values.tolist()


def test2(series_csv, tmp_path, monkeypatch):
    monkeypatch.delenv("CPDETECT_WORKERS", raising=False)
    out = tmp_path / "r.json"
    plot = tmp_path / "p.csv"
    assert main(["detect", "--in", str(series_csv), "--out", str(out),
                 "--plot-out", str(plot)] + GA_FLAGS) == 0
    doc = json.loads(out.read_text())
    for key in ("spec_version", "input", "config", "best", "trace",
                "frequency", "fit", "regimes"):
        assert key in doc
    assert doc["input"]["horizon"] == 1096
    assert len(doc["trace"]["bmdl"]) == 3
    assert doc["config"]["ga"]["seed"] == 1
    assert not pd.read_csv(plot)["value"].isna().any()


def test3(series_csv, tmp_path, monkeypatch):
    texts = []
    for workers in ("1", "3"):
        monkeypatch.setenv("CPDETECT_WORKERS", workers)
        out = tmp_path / f"r{workers}.json"
        assert main(["detect", "--in", str(series_csv), "--out", str(out),
                     "--family", "musa-okumoto"] + GA_FLAGS) == 0
        texts.append(out.read_text())
    assert texts[0] == texts[1]


def test4(series_csv, tmp_path):
    out = tmp_path / "c.json"
    assert main(["compare", "--in", str(series_csv), "--out", str(out),
                 "--methods", "pelt,cusum", "--cusum-shift", "2"]) == 0
    doc = json.loads(out.read_text())
    assert set(doc["methods"]) == {"pelt", "cusum"}
    assert doc["input"]["horizon"] == 1096
    pelt = doc["methods"]["pelt"]["change_points"]
    assert any(abs(t - 825) <= 10 for t in pelt)


def test5(tmp_path, capsys):
    assert main(["presets"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["name"] for r in rows] == [
        "1cp", "2cp", "3cp", "J10", "J20", "J50"]
    assert rows[0]["change_points"] == [825]
    out = tmp_path / "presets.json"
    assert main(["presets", "--out", str(out)]) == 0
    assert json.loads(out.read_text()) == rows


def test6(series_csv, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["detect", "--in", str(series_csv), "--out", str(out),
                 "--family", "lognormal"]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "usage"
    assert main(["detect", "--in", str(series_csv), "--out", str(out),
                 "--mutation", "0.5,0.5"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["detect", "--in", str(series_csv), "--out", str(out),
                 "--threshold", "high"]) == 2
    assert not out.exists()


def test7(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,value\n1,3.0\n2,abc\n3,4.0\n")
    out = tmp_path / "r.json"
    assert main(["detect", "--in", str(bad), "--out", str(out)]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "invalid-input"
    assert "line 3" in err["message"]
    assert main(["detect", "--in", str(tmp_path / "missing.csv"),
                 "--out", str(out)]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "io"


def test8(series_csv, tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["compare", "--in", str(series_csv), "--out", str(out),
                 "--methods", "pelt,bocpd"]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "invalid-input"


def test9(monkeypatch):
    series = cp.MeasurementSeries([1.0, 2.0, 3.0, 6.0])
    assert parse_threshold("mean", series) == 3.0
    assert parse_threshold("norm37", series) == 37.0
    assert parse_threshold("2.5", series) == 2.5
    with pytest.raises(cp.UsageError):
        parse_threshold("high", series)
    monkeypatch.delenv("CPDETECT_WORKERS", raising=False)
    assert workers_from_env() == 1
    monkeypatch.setenv("CPDETECT_WORKERS", "4")
    assert workers_from_env() == 4
    for text in ("0", "two"):
        monkeypatch.setenv("CPDETECT_WORKERS", text)
        with pytest.raises(cp.UsageError):
            workers_from_env()
