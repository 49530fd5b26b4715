import json
from pathlib import Path

import pytest

from hdmean import ConfigError
from hdmean.campaign import (
    format_table,
    load_campaign,
    null_statistics_csv,
    parse_campaign,
    result_json,
    run_campaign,
    write_outputs,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = {"scenario": "one_sample_size", "p": 20, "n": [4, 5], "reps": 10, "methods": ["new", "cq"]}


class TestParse:
    def test_grid_and_cells(self):
        camp = parse_campaign({**MINIMAL, "p": [20, 30]})
        assert [(c.p, c.n, c.cell) for c in camp.configs] == [(20, 4, 0), (20, 5, 1), (30, 4, 2), (30, 5, 3)]
        assert camp.configs[0].methods == ("New", "CQ")

    def test_defaults(self):
        camp = parse_campaign({"scenario": "one_sample_size", "p": 10, "n": 5})
        cfg = camp.configs[0]
        assert (cfg.reps, cfg.alpha, cfg.master_seed, cfg.cov.kind, cfg.innov.kind) == (1000, 0.05, 0, "ar1", "gaussian")

    def test_overrides(self):
        camp = parse_campaign(MINIMAL, overrides={"reps": 3, "seed": 11, "alpha": None})
        assert camp.configs[0].reps == 3 and camp.configs[0].master_seed == 11

    @pytest.mark.parametrize(
        "change,needle",
        [
            ({"reps": 0}, "reps"),
            ({"reps": "many"}, "reps"),
            ({"alpha": 1.5}, "alpha"),
            ({"colour": "red"}, "unknown field 'colour'"),
            ({"scenario": "bootstrap"}, "scenario"),
            ({"covariance": "banded"}, "covariance"),
            ({"n": 3}, "CQ"),
            ({"n": []}, "'n'"),
            ({"n": [4, "x"]}, "'n'"),
            ({"redraw_sigma": "yes"}, "redraw_sigma"),
            ({"p": True}, "'p'"),
        ],
    )
    def test_field_errors(self, change, needle):
        with pytest.raises(ConfigError, match=needle):
            parse_campaign({**MINIMAL, **change})

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="'p'"):
            parse_campaign({"scenario": "one_sample_size", "n": 4})

    def test_power_needs_beta_and_r(self):
        with pytest.raises(ConfigError, match="beta"):
            parse_campaign({"scenario": "one_sample_power", "p": 20, "n": 5})

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("scenario = \n")
        with pytest.raises(ConfigError):
            load_campaign(path)

    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.name)
    def test_shipped_configs_parse(self, path):
        camp = load_campaign(path)
        assert camp.configs


class TestReports:
    def test_json_and_table(self, tmp_path):
        camp = parse_campaign(MINIMAL, name="demo")
        result = run_campaign(camp)
        doc = json.loads(result_json(result))
        assert doc["name"] == "demo" and len(doc["cells"]) == 2
        assert "workers" not in doc["settings"]
        assert set(doc["cells"][0]["methods"]) == {"New", "CQ"}
        table = format_table(result)
        assert "p=20 n=4" in table and table.splitlines()[3].startswith("New")
        paths = write_outputs(result, tmp_path / "out")
        assert set(paths) == {"json", "table"}
        assert paths["json"].read_text() == result_json(result)

    def test_power_campaign(self):
        camp = parse_campaign(
            {"scenario": "one_sample_power", "p": 30, "n": 6, "beta": 0.3, "r": [0.0, 0.5], "reps": 10}
        )
        result = run_campaign(camp)
        assert [c.config.mean.r for c in result.cells] == [0.0, 0.5]
        assert "theory" in format_table(result)

    def test_null_histogram_csv(self, tmp_path):
        camp = parse_campaign({"scenario": "null_histogram", "p": 15, "n": 4, "reps": 5})
        result = run_campaign(camp)
        text = null_statistics_csv(result)
        lines = text.strip().splitlines()
        assert lines[0] == "cell,p,n,n2,index,t_stat,chi2_stat"
        assert len(lines) == 6
        assert "csv" in write_outputs(result, tmp_path)

    def test_json_is_byte_stable(self):
        camp = parse_campaign(MINIMAL)
        assert result_json(run_campaign(camp)) == result_json(run_campaign(camp, workers=2))
