import json
import subprocess
import sys

import numpy as np
import pytest

from hdmean import one_sample_test, two_sample_test
from hdmean.cli import InputError, bonferroni, main, read_csv_matrix, screen_units


def write_csv(path, X, header=None, delimiter=","):
    lines = [delimiter.join(header)] if header else []
    lines += [delimiter.join(repr(float(v)) for v in row) for row in np.asarray(X)]
    path.write_text("\n".join(lines) + "\n")
    return path


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestReadCsv:
    def test_basic(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,0\n0,1\n\n1,1\n")
        assert np.array_equal(read_csv_matrix(p).matrix, [[1, 0], [0, 1], [1, 1]])

    def test_header_and_delimiter(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("a\tb\n1\t2\n3\t4\n")
        data = read_csv_matrix(p, "\t", header=True)
        assert data.columns == ["a", "b"] and data.matrix.shape == (2, 2)

    def test_ragged(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(InputError, match="row 2 has 1 fields"):
            read_csv_matrix(p)

    def test_bad_cell_names_location(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,abc\n")
        with pytest.raises(InputError, match="row 2, column 2"):
            read_csv_matrix(p)

    def test_header_hint(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(InputError, match="--header"):
            read_csv_matrix(p)

    @pytest.mark.parametrize("value", ["nan", "inf", "-inf"])
    def test_non_finite(self, tmp_path, value):
        p = tmp_path / "x.csv"
        p.write_text(f"1,2\n3,{value}\n")
        with pytest.raises(InputError, match="not finite"):
            read_csv_matrix(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot read"):
            read_csv_matrix(tmp_path / "nope.csv")


class TestTestOne:
    def test_hand_example(self, tmp_path, capsys):
        p = tmp_path / "x.csv"
        p.write_text("1,0\n0,1\n1,1\n")
        code, out, _ = run(["test-one", str(p), "--alpha", "0.05"], capsys)
        report = json.loads(out)
        assert code == 0
        assert report["t_stat"] == pytest.approx(2.0, abs=1e-12)
        assert report["df"] == 2 and report["reject"] is False

    def test_rejection_is_not_an_exit_code(self, tmp_path, capsys, rng):
        p = write_csv(tmp_path / "x.csv", rng.normal(2.0, 1.0, size=(5, 50)))
        code, out, _ = run(["test-one", str(p)], capsys)
        assert code == 0 and json.loads(out)["reject"] is True

    def test_empty_file(self, tmp_path, capsys):
        p = tmp_path / "empty.csv"
        p.write_text("")
        code, out, err = run(["test-one", str(p)], capsys)
        assert code == 1 and out == ""
        assert json.loads(err)["error"]["type"] == "InputError"

    def test_two_rows(self, tmp_path, capsys):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,4\n")
        code, _, err = run(["test-one", str(p)], capsys)
        assert code == 1
        msg = json.loads(err)["error"]
        assert msg["type"] == "InsufficientSampleError" and "n >= 3" in msg["message"]

    def test_matches_library(self, tmp_path, capsys, rng):
        X = rng.normal(0.1, 1.0, size=(7, 20))
        p = write_csv(tmp_path / "x.csv", X, header=[f"v{i}" for i in range(20)])
        code, out, _ = run(["test-one", str(p), "--header", "--alpha", "0.1"], capsys)
        assert json.loads(out) == json.loads(json.dumps(one_sample_test(X, 0.1).to_dict()))

    def test_output_file(self, tmp_path, capsys):
        p = tmp_path / "x.csv"
        p.write_text("1,0\n0,1\n1,1\n")
        target = tmp_path / "report.json"
        code, out, _ = run(["test-one", str(p), "--output", str(target)], capsys)
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["df"] == 2

    def test_bad_alpha_is_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["test-one", "x.csv", "--alpha", "1.5"])
        assert exc.value.code == 2


class TestTestTwo:
    def test_identical_files_degenerate(self, tmp_path, capsys, rng):
        X = rng.normal(size=(5, 4))
        a = write_csv(tmp_path / "a.csv", X)
        b = write_csv(tmp_path / "b.csv", X)
        code, _, err = run(["test-two", str(a), str(b)], capsys)
        assert code == 1 and json.loads(err)["error"]["type"] == "DegenerateDataError"

    def test_equal_n_equals_difference(self, tmp_path, capsys, rng):
        X1, X2 = rng.normal(size=(6, 12)), rng.normal(size=(6, 12))
        a, b = write_csv(tmp_path / "a.csv", X1), write_csv(tmp_path / "b.csv", X2)
        d = write_csv(tmp_path / "d.csv", X1 - X2)
        _, out_two, _ = run(["test-two", str(a), str(b)], capsys)
        _, out_one, _ = run(["test-one", str(d)], capsys)
        two, one = json.loads(out_two), json.loads(out_one)
        assert two["t_stat"] == pytest.approx(one["t_stat"], rel=1e-12)
        assert two["p_value"] == pytest.approx(one["p_value"], rel=1e-12)
        assert two["reject"] == one["reject"]

    def test_swap(self, tmp_path, capsys, rng):
        X1, X2 = rng.normal(size=(30, 15)), rng.normal(size=(4, 15))
        a, b = write_csv(tmp_path / "a.csv", X1), write_csv(tmp_path / "b.csv", X2)
        _, out_ab, _ = run(["test-two", str(a), str(b)], capsys)
        _, out_ba, _ = run(["test-two", str(b), str(a)], capsys)
        ab, ba = json.loads(out_ab), json.loads(out_ba)
        assert ab.pop("swapped") is True and ba.pop("swapped") is False
        assert ab == ba
        assert ab["t_stat"] == two_sample_test(X2, X1).t_stat

    def test_width_mismatch(self, tmp_path, capsys, rng):
        a = write_csv(tmp_path / "a.csv", rng.normal(size=(5, 3)))
        b = write_csv(tmp_path / "b.csv", rng.normal(size=(5, 4)))
        code, _, err = run(["test-two", str(a), str(b)], capsys)
        assert code == 1 and "3 columns" in err and "has 4" in err


class TestScreen:
    def make_units(self, tmp_path, rng, count, signal_unit=None, p=20):
        lines = ["unit,group1,group2"]
        for u in range(count):
            shift = 3.0 if u == signal_unit else 0.0
            write_csv(tmp_path / f"u{u}_a.csv", rng.normal(shift, 1.0, size=(6, p)))
            write_csv(tmp_path / f"u{u}_b.csv", rng.normal(0.0, 1.0, size=(8, p)))
            lines.append(f"roi{u},u{u}_a.csv,u{u}_b.csv")
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("\n".join(lines) + "\n")
        return manifest

    def test_fifteen_units(self, tmp_path, capsys, rng):
        manifest = self.make_units(tmp_path, rng, 15, signal_unit=9)
        code, out, _ = run(["screen", str(manifest)], capsys)
        report = json.loads(out)
        assert code == 0 and report["m"] == 15
        assert report["threshold"] == pytest.approx(0.05 / 15)
        assert report["units"][0]["unit"] == "roi9"
        p_values = [u["p_value"] for u in report["units"]]
        assert p_values == sorted(p_values)
        for u in report["units"]:
            assert u["reject"] == (u["p_value"] < 0.05 / 15)

    def test_single_unit(self, tmp_path, capsys, rng):
        manifest = self.make_units(tmp_path, rng, 1)
        report = json.loads(run(["screen", str(manifest)], capsys)[1])
        assert report["threshold"] == 0.05 and report["m"] == 1

    def test_failing_unit_does_not_abort(self, tmp_path, rng):
        manifest = self.make_units(tmp_path, rng, 3)
        write_csv(tmp_path / "u1_a.csv", rng.normal(size=(2, 20)))
        units = [tuple(line.split(",")) for line in manifest.read_text().split()[1:]]
        units = [(name, tmp_path / a, tmp_path / b) for name, a, b in units]
        report = screen_units(units)
        assert report["m"] == 3
        bad = report["units"][-1]
        assert bad["unit"] == "roi1" and bad["p_value"] is None and bad["reject"] is False
        assert "InsufficientSampleError" in bad["error"]

    def test_bonferroni_is_pure(self):
        decisions, threshold = bonferroni([0.001, 0.02, None, 0.2], 0.05)
        assert threshold == 0.0125 and decisions == [True, False, False, False]


class TestSimulate:
    def test_runs_and_is_byte_identical(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text('scenario = "one_sample_size"\nmethods = ["new", "bs"]\np = 25\nn = [4, 6]\nreps = 12\nseed = 5\n')
        assert run(["simulate", str(cfg), "--output", str(tmp_path / "a"), "--quiet"], capsys)[0] == 0
        assert run(["simulate", str(cfg), "--output", str(tmp_path / "b"), "--workers", "2"], capsys)[0] == 0
        a = (tmp_path / "a" / "results.json").read_bytes()
        assert a == (tmp_path / "b" / "results.json").read_bytes()
        assert (tmp_path / "b" / "results.txt").exists()

    def test_reps_zero(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text('scenario = "one_sample_size"\np = 25\nn = 4\n')
        code, _, err = run(["simulate", str(cfg), "--reps", "0", "--output", str(tmp_path)], capsys)
        assert code == 2 and "reps" in json.loads(err)["error"]["message"]

    def test_json_round_trip(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text('scenario = "null_histogram"\np = 20\nn = 4\nreps = 8\n')
        run(["simulate", str(cfg), "--output", str(tmp_path / "o"), "--quiet"], capsys)
        text = (tmp_path / "o" / "results.json").read_text()
        assert json.dumps(json.loads(text), indent=2, sort_keys=True) + "\n" == text
        assert (tmp_path / "o" / "null_statistics.csv").exists()


def test_module_entry_point(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,0\n0,1\n1,1\n")
    proc = subprocess.run([sys.executable, "-m", "hdmean", "test-one", str(p)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["df"] == 2
