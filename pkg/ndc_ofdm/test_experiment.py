"""
Tests for experiment-file validation, expansion and the bundled recipes.
"""

import re
import textwrap

import numpy as np
import pytest

from ndc_ofdm.errors import ChannelLookupError, ConfigError
from ndc_ofdm.experiment import (
    available_recipes,
    build_experiment,
    expand_grid,
    load_experiment,
    load_geometry,
    load_recipe,
    parse_yaml,
    validate_parameters,
)
from ndc_ofdm.modem import Scheme


def _write(path, text):
    path.write_text(textwrap.dedent(text))
    return path


class TestValidation:
    def test_valid_stopping_section(self):
        is_valid, errors = validate_parameters("stopping", {"min_bits": 1000, "max_frames": 50})
        assert is_valid
        assert errors == []

    def test_out_of_bounds(self):
        is_valid, errors = validate_parameters("stopping", {"min_errors": 0}, "stopping")
        assert not is_valid
        assert errors == ["stopping.min_errors: Value 0 out of bounds [1, 1000000000]"]

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match=r"sweeps\[0\]\.colour: Unknown parameter"):
            build_experiment({"channels": ["H1"], "ebn0_db": [0],
                              "sweeps": [{"scheme": "NDC", "M": 16, "colour": "red"}]})

    def test_every_error_is_reported(self):
        with pytest.raises(ConfigError) as excinfo:
            build_experiment({"frame_size": "big", "stopping": {"max_frames": -1},
                              "sweeps": [{"M": 16}]})
        message = str(excinfo.value)
        assert "frame_size: Expected int" in message
        assert "stopping.max_frames: Value -1 out of bounds" in message
        assert "sweeps[0].scheme: Missing" in message
        assert "sweeps[0].channels" in message

    def test_empty_grid(self):
        with pytest.raises(ConfigError, match="empty"):
            build_experiment({"channels": ["H1"], "ebn0_db": [],
                              "sweeps": [{"scheme": "NDC", "M": 16}]})

    def test_bad_scheme(self):
        with pytest.raises(ConfigError, match=r"sweeps\[0\]\.scheme"):
            build_experiment({"channels": ["H1"], "ebn0_db": [0],
                              "sweeps": [{"scheme": "OOK", "M": 16}]})

    def test_unknown_channel(self):
        with pytest.raises(ChannelLookupError):
            build_experiment({"channels": ["H42"], "ebn0_db": [0],
                              "sweeps": [{"scheme": "NDC", "M": 16}]})

    def test_dco_without_bias(self):
        with pytest.raises(ConfigError, match="bias"):
            build_experiment({"channels": ["H1"], "ebn0_db": [0],
                              "sweeps": [{"scheme": "DCO-OSM", "M": 8}]})

    def test_yaml_error_position(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_yaml("name: x\nsweeps: [1, 2\n", "bad.yaml")
        assert re.match(r"bad\.yaml:\d+:\d+: ", str(excinfo.value))


class TestExpansion:
    def test_inclusive_range(self):
        assert expand_grid({"start": 0, "stop": 4, "step": 2}) == [0.0, 2.0, 4.0]
        assert expand_grid({"start": 110, "stop": 111, "step": 0.5}) == [110.0, 110.5, 111.0]
        assert expand_grid([3, 1]) == [3.0, 1.0]

    def test_sweep_product(self):
        experiment = build_experiment({
            "name": "grid",
            "seed": 7,
            "frame_size": 256,
            "channels": ["H1", "H2"],
            "ebn0_db": {"start": 0, "stop": 10, "step": 5},
            "sweeps": [
                {"scheme": "NDC", "M": [4, 16], "reconstruction": ["sign-select", "subtract"]},
                {"scheme": "DCO", "M": 8, "bias_db": [5, 7], "channels": ["H3"], "ebn0_db": [1, 2]},
            ],
        })
        assert experiment.name == "grid"
        assert len(experiment.sweeps) == 2 * 2 * 2 + 2
        ndc = [s for s in experiment.sweeps if s.scheme is Scheme.NDC]
        dco = [s for s in experiment.sweeps if s.scheme is Scheme.DCO_OSM]
        assert {(s.channel.name, s.M, s.reconstruction) for s in ndc} == {
            (c, m, r) for c in ("H1", "H2") for m in (4, 16) for r in ("sign-select", "subtract")}
        assert [s.bias_db for s in dco] == [5.0, 7.0]
        assert all(s.channel.name == "H3" and s.ebn0_points == [1.0, 2.0] for s in dco)
        assert all(s.seed == 7 and s.N == 256 for s in experiment.sweeps)
        assert ndc[0].ebn0_points == [0.0, 5.0, 10.0]

    def test_seed_override(self):
        data = {"seed": 7, "channels": ["H1"], "ebn0_db": [0], "sweeps": [{"scheme": "NDC", "M": 4}]}
        experiment = build_experiment(data, seed=11)
        assert experiment.seed == 11
        assert experiment.sweeps[0].seed == 11

    def test_inline_gains_and_matrix_file(self, tmp_path):
        (tmp_path / "lab.txt").write_text("1.0 0.2\n0.1 0.9\n")
        path = _write(tmp_path / "exp.yaml", """
            name: files
            channels:
              - {name: inline, gains: [[1.0, 0.4], [0.2, 1.0]]}
              - {matrix_file: lab.txt}
            ebn0_db: [0, 3]
            sweeps:
              - scheme: NDC
                M: 4
            """)
        experiment = load_experiment(path)
        names = [s.channel.name for s in experiment.sweeps]
        assert names == ["inline", "lab"]
        np.testing.assert_array_equal(experiment.sweeps[1].channel.gains, [[1.0, 0.2], [0.1, 0.9]])

    def test_missing_matrix_file(self, tmp_path):
        path = _write(tmp_path / "exp.yaml", """
            channels: [{matrix_file: nowhere.txt}]
            ebn0_db: [0]
            sweeps: [{scheme: NDC, M: 4}]
            """)
        with pytest.raises(ConfigError, match="nowhere.txt"):
            load_experiment(path)

    def test_analysis_section(self):
        experiment = build_experiment({
            "channels": ["H5"],
            "ebn0_db": [0, 10],
            "analysis": {"M": [4, 16], "sigma_n": 0.2},
        })
        plan = experiment.analysis
        assert [c.name for c in plan.channels] == ["H5"]
        assert plan.orders == [4, 16]
        assert plan.sigma_n == 0.2
        assert plan.ebn0_points == [0.0, 10.0]
        assert experiment.sweeps == []
        assert plan.combination == "factorized"

    def test_analysis_combination(self):
        experiment = build_experiment({
            "channels": ["H4"],
            "ebn0_db": [10],
            "analysis": {"M": 16, "combination": "joint"},
        })
        assert experiment.analysis.combination == "joint"
        with pytest.raises(ConfigError, match="analysis.combination"):
            build_experiment({"channels": ["H4"], "ebn0_db": [10], "analysis": {"combination": "mean"}})


class TestRecipes:
    def test_available(self):
        assert available_recipes() == ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "table1"]

    def test_every_recipe_loads(self):
        for name in available_recipes():
            assert load_recipe(name).name == name

    def test_practical_channel_grid(self):
        experiment = load_recipe("fig5")
        assert all(s.channel.name == "HPrac1" for s in experiment.sweeps)
        grid = {(s.scheme, s.M, s.bias_db) for s in experiment.sweeps}
        assert grid == {
            (Scheme.NDC, 8, None), (Scheme.NDC, 16, None),
            (Scheme.DCO_OSM, 4, 5.0), (Scheme.DCO_OSM, 4, 7.0),
            (Scheme.DCO_OSM, 8, 5.0), (Scheme.DCO_OSM, 8, 7.0),
            (Scheme.ACO_OSM, 32, None), (Scheme.ACO_OSM, 128, None),
        }

    def test_ideal_channel_recipe(self):
        experiment = load_recipe("fig3")
        assert [s.channel.name for s in experiment.sweeps] == ["H1", "H2", "H3", "H4"]
        assert [c.name for c in experiment.analysis.channels] == ["H1", "H2", "H3", "H4"]
        assert experiment.analysis.ebn0_points == [float(x) for x in range(0, 25, 2)]

    def test_table_recipe(self):
        experiment = load_recipe("table1")
        assert experiment.se_points == [3.5, 4.0, 4.5, 5.0, 5.5]
        assert experiment.sweeps == []

    def test_low_rate_table_recipe(self):
        experiment = load_recipe("fig2")
        assert experiment.se_points == [0.5, 1.0, 1.5, 2.0]
        assert experiment.transmitters == 2

    def test_unknown_recipe(self):
        with pytest.raises(ConfigError, match="Unknown recipe"):
            load_recipe("fig99")


class TestGeometry:
    def test_load(self, tmp_path):
        path = _write(tmp_path / "room.yaml", """
            name: room
            defaults: {semiangle: 60, detector_area: 1.0e-4, distance: 2.0}
            links:
              - {rx: 1, tx: 1}
              - {rx: 1, tx: 2, distance: 2.5}
              - {rx: 2, tx: 1, distance: 2.5}
              - {rx: 2, tx: 2}
            """)
        name, links = load_geometry(path)
        assert name == "room"
        assert set(links) == {(1, 1), (1, 2), (2, 1), (2, 2)}
        assert links[(1, 2)].distance == 2.5

    def test_missing_fields(self, tmp_path):
        path = _write(tmp_path / "bad.yaml", """
            links:
              - {rx: 1, tx: 1, semiangle: 60, height: 3}
            """)
        with pytest.raises(ConfigError) as excinfo:
            load_geometry(path)
        message = str(excinfo.value)
        assert "links[0].height: Unknown parameter" in message
        assert "links[0].detector_area: Missing" in message
