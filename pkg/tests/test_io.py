import json

import numpy as np
import pytest

from tailsitter_indi.errors import ConfigError
from tailsitter_indi.io import read_csv, write_csv
from tailsitter_indi.scenario import run_scenario, summarize
from tailsitter_indi.svgplot import nice_ticks, scatter_fit, time_panels


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    log = rng.normal(size=(50, 3)) * 10.0 ** rng.integers(-300, 300, size=(50, 3))
    log[0, 0] = np.nan
    p = write_csv(tmp_path / "a.csv", log, ["a", "b", "c"])
    cols = read_csv(p)
    assert list(cols) == ["a", "b", "c"]
    back = np.column_stack(list(cols.values()))
    assert np.array_equal(back, log, equal_nan=True)


def test_csv_errors(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", np.zeros((2, 2)), ["a"])
    with pytest.raises(ConfigError, match="not found"):
        read_csv(tmp_path / "nope.csv")
    (tmp_path / "dup.csv").write_text("a,a\n1,2\n")
    with pytest.raises(ConfigError, match="duplicated"):
        read_csv(tmp_path / "dup.csv")


def test_run_writes_artifacts_and_summary_recomputes(tmp_path):
    out = run_scenario("hover", tmp_path, duration=2.0)
    names = {p.name for p in out.files}
    assert {"log.csv", "summary.json", "pitch.svg", "roll.svg", "inputs.svg", "accel.svg", "track.svg"} <= names
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["rows"] == 1000 and s["duration"] == pytest.approx(2.0)
    again = summarize(read_csv(tmp_path / "log.csv")).as_dict()
    assert again == s
    assert (tmp_path / "pitch.svg").read_text().startswith("<svg")


def test_svg_helpers(tmp_path):
    assert nice_ticks(0.0, 10.0) == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
    assert nice_ticks(float("nan"), 1.0) == []
    t = np.linspace(0, 1, 20000)
    p = time_panels(tmp_path / "p.svg", t, [("x", "y", [("a", np.sin(t), False), ("b", np.cos(t), True)])])
    text = p.read_text()
    assert text.count("<polyline") == 2 and "stroke-dasharray" in text
    scatter_fit(tmp_path / "s.svg", np.arange(5.0), np.arange(5.0), "fit")
    assert (tmp_path / "s.svg").exists()
