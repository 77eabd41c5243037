import json

import pytest

from qaep.cli import main
from qaep.config import load_config, parse_config
from qaep.errors import CapacityError, ConfigError

BASE_CONFIG = {
    "model": {"site_dim": 2, "window": 1, "cap": 4096},
    "observables": [
        {"name": "field", "volume": 1, "matrix": {"diag": [1.0, -1.0]}},
        {"name": "ising", "volume": 2, "matrix": {"diag": [-1.0, 1.0, 1.0, -1.0]}},
    ],
    "states": [
        {"name": "prod09", "type": "product", "phi": {"diag": [0.9, 0.1]}},
        {"name": "markov", "type": "markov", "transition": [[0.9, 0.1], [0.1, 0.9]]},
    ],
    "run": {
        "n_range": [3, 7],
        "delta": 0.3,
        "delta_prime": 0.1,
        "block_sizes": [2, 3],
        "grid_points": 6,
    },
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(BASE_CONFIG))
    return str(path)


class TestConfigParsing:
    def test_round_trip(self, config_path):
        cfg = load_config(config_path)
        assert cfg.model.site_dim == 2
        assert [n for n, _ in cfg.states] == ["prod09", "markov"]
        assert [n for n, _ in cfg.observables] == ["field", "ising"]
        assert cfg.run.volumes() == range(3, 8)
        assert len(cfg.sha256) == 64

    def test_hash_stable_under_key_order(self):
        a = parse_config(BASE_CONFIG)
        flipped = dict(reversed(list(BASE_CONFIG.items())))
        b = parse_config(flipped)
        assert a.sha256 == b.sha256

    def test_lower_triangle_matrix(self):
        cfg = parse_config(
            {
                "model": {"site_dim": 2},
                "observables": [
                    {
                        "name": "x",
                        "volume": 1,
                        "matrix": {"lower": [[[0.5, 0.0]], [[0.0, 0.25], [-0.5, 0.0]]]},
                    }
                ],
                "run": {"n_range": [2, 4]},
            }
        )
        mat = cfg.observables[0][1].blocks[0]
        assert mat[0, 1] == pytest.approx(0.0 - 0.25j)
        assert mat[1, 0] == pytest.approx(0.0 + 0.25j)

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"model": {,}}')
        with pytest.raises(ConfigError) as err:
            load_config(str(path))
        assert ":1:" in str(err.value)

    def test_unknown_state_type_anchored(self):
        spec = dict(BASE_CONFIG, states=[{"name": "x", "type": "mystery"}])
        with pytest.raises(ConfigError) as err:
            parse_config(spec)
        assert "states[0].type" in str(err.value)

    def test_capacity_error_names_volume(self):
        spec = dict(BASE_CONFIG, run={"n_range": [3, 14]})
        with pytest.raises(CapacityError) as err:
            parse_config(spec)
        assert "14" in str(err.value)

    def test_bad_delta(self):
        spec = dict(BASE_CONFIG, run={"n_range": [3, 5], "delta": -1})
        with pytest.raises(ConfigError) as err:
            parse_config(spec)
        assert "run.delta" in str(err.value)

    def test_gibbs_state_references_observable(self):
        spec = dict(
            BASE_CONFIG,
            states=[
                {"name": "g", "type": "gibbs_block", "block_size": 2, "observable": "ising"}
            ],
        )
        cfg = parse_config(spec)
        assert cfg.states[0][0] == "g"


@pytest.mark.parametrize(
    "command", ["validate", "entropy", "typicality", "deviation", "pressure", "variational"]
)
class TestCommands:
    def test_command_runs_and_writes(self, command, config_path, tmp_path, capsys):
        out = tmp_path / "out"
        code = main([command, "--config", config_path, "--out", str(out)])
        assert code == 0
        assert (out / f"{command}.json").exists()
        assert (out / f"{command}.csv").exists()
        assert (out / f"{command}.png").exists()
        text = (out / f"{command}.csv").read_text()
        cfg = load_config(config_path)
        assert cfg.sha256 in text.splitlines()[1]  # every row carries the hash
        assert capsys.readouterr().out.strip()


class TestCliBehaviour:
    def test_deterministic_json(self, config_path, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["typicality", "--config", config_path, "--out", str(out1)]) == 0
        assert main(["typicality", "--config", config_path, "--out", str(out2)]) == 0
        assert (out1 / "typicality.json").read_bytes() == (
            out2 / "typicality.json"
        ).read_bytes()
        assert (out1 / "typicality.csv").read_bytes() == (
            out2 / "typicality.csv"
        ).read_bytes()

    def test_format_selection(self, config_path, tmp_path):
        out = tmp_path / "csv_only"
        main(["entropy", "--config", config_path, "--out", str(out), "--format", "csv"])
        assert (out / "entropy.csv").exists()
        assert not (out / "entropy.json").exists()

    def test_jobs_flag_matches_serial(self, config_path, tmp_path):
        out1, out2 = tmp_path / "serial", tmp_path / "par"
        main(["entropy", "--config", config_path, "--out", str(out1)])
        main(["entropy", "--config", config_path, "--out", str(out2), "--jobs", "2"])
        assert (out1 / "entropy.json").read_bytes() == (out2 / "entropy.json").read_bytes()

    def test_bad_config_exit_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        assert main(["validate", "--config", str(path), "--out", str(tmp_path)]) == 2

    def test_missing_config_exit_2(self, tmp_path):
        assert main(["validate", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 2

    def test_capacity_exit_3(self, tmp_path):
        spec = dict(BASE_CONFIG, run={"n_range": [3, 20]})
        path = tmp_path / "big.json"
        path.write_text(json.dumps(spec))
        assert main(["validate", "--config", str(path), "--out", str(tmp_path)]) == 3

    def test_validate_passes_three_models(self, tmp_path):
        for d, w in ((2, 1), (2, 2), (3, 1)):
            spec = {
                "model": {"site_dim": d, "window": w, "cap": 4096},
                "run": {"n_range": [2, 4], "block_sizes": [2]},
            }
            path = tmp_path / f"m{d}{w}.json"
            path.write_text(json.dumps(spec))
            out = tmp_path / f"out{d}{w}"
            assert main(["validate", "--config", str(path), "--out", str(out)]) == 0
            payload = json.loads((out / "validate.json").read_text())
            assert payload["all_passed"] is True
