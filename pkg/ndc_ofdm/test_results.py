"""
Tests for result containers and file emission.
"""

import json

import pytest

from ndc_ofdm.results import (
    CSV_COLUMNS,
    BerCurve,
    BerPoint,
    RunManifest,
    config_digest,
    curves_to_frame,
    render_csv,
    write_curves,
)


def _curve(**overrides):
    settings = dict(source="montecarlo", scheme="DCO-OSM", channel="HPrac1", M=8, bias_db=5.0,
                    seed=3, points=[BerPoint(120.0, 4000, 12, 0.003),
                                    BerPoint(110.0, 4000, 400, 0.1, low_confidence=True)])
    settings.update(overrides)
    return BerCurve(**settings)


class TestBerCurve:
    def test_points_are_sorted(self):
        assert [p.ebn0_db for p in _curve().points] == [110.0, 120.0]

    def test_label_and_flags(self):
        curve = _curve()
        assert curve.label == "montecarlo/DCO-OSM/HPrac1/M8/5dB"
        assert curve.low_confidence
        assert not _curve(points=[BerPoint(0.0, 10, 1, 0.1)]).low_confidence

    def test_index_error_rate(self):
        assert BerPoint(0.0, 10, 1, 0.1, index_bits=200, index_errors=5).index_error_rate == 0.025
        assert BerPoint(0.0, 10, 1, 0.1).index_error_rate == 0.0

    def test_frame(self):
        frame = curves_to_frame([_curve(), _curve(channel="HPrac2")])
        assert list(frame.columns) == CSV_COLUMNS
        assert len(frame) == 4
        assert curves_to_frame([]).empty


class TestEmission:
    def test_csv_layout(self):
        ndc = BerCurve(source="analytic", scheme="NDC", channel="H1", M=16, reconstruction="sign-select",
                       points=[BerPoint(2.0, 0, 0, 1.234567891e-3)])
        lines = render_csv([_curve(), ndc]).splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "montecarlo,DCO-OSM,HPrac1,8,5,,110,4000,400,1.000000e-01"
        assert lines[3] == "analytic,NDC,H1,16,,sign-select,2,0,0,1.234568e-03"

    def test_csv_without_curves(self):
        assert render_csv([]) == ",".join(CSV_COLUMNS) + "\n"

    def test_csv_noiseless_sentinel(self):
        curve = _curve(points=[BerPoint(float("inf"), 5000, 0, 0.0)])
        assert render_csv([curve]).splitlines()[1] == "montecarlo,DCO-OSM,HPrac1,8,5,,inf,5000,0,0.000000e+00"

    def test_write_csv_and_json(self, tmp_path):
        csv_path = write_curves(tmp_path / "out" / "run.csv", [_curve()], "csv")
        assert csv_path.read_text() == render_csv([_curve()])

        json_path = write_curves(tmp_path / "run.json", [_curve()], "json")
        data = json.loads(json_path.read_text())
        assert data[0]["channel"] == "HPrac1"
        assert data[0]["low_confidence"] is True
        assert len(data[0]["points"]) == 2
        assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".")] == []

    def test_digest_ignores_key_order(self):
        assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})
        assert config_digest({"a": 1}) != config_digest({"a": 2})

    def test_manifest(self, tmp_path):
        manifest = RunManifest(command="simulate", config_digest="abc", seed=1, version="1.0.0",
                               started_at="2024-01-01T00:00:00+00:00")
        path = manifest.finish([tmp_path / "x.csv"]).write(tmp_path / "x.manifest.json")
        data = json.loads(path.read_text())
        assert data["command"] == "simulate"
        assert data["outputs"] == [str(tmp_path / "x.csv")]
        assert data["finished_at"] is not None
