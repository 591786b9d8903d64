import filecmp
import json

import numpy as np
import pytest

from poissonvisits.cli import main
from poissonvisits.errors import ValidationError
from poissonvisits.harness import ExperimentConfig, run_scan
from poissonvisits.markov import MarkovBinaryModel
from poissonvisits.pmf import PMF, binomial_pmf, poisson_pmf, tv_distance


def _iid_config(tmp_path, out_name="out", **kw):
    d = {
        "schema_version": 1,
        "system": "iid:0.01",
        "radii": [0.05],
        "t": 1.0,
        "n_samples": 50_000,
        "seed": 31415,
        "measure_iterations": 10**5,
        "centers": {"sampled": 1},
        "bound": {"p": [2, 3], "M": [1, 2], "series": 16},
        "output": str(tmp_path / out_name),
    }
    d.update(kw)
    return ExperimentConfig.from_dict(d)


class TestConfig:
    def test_empty_radii_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            _iid_config(tmp_path, radii=[])

    def test_nonmonotone_radii_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            _iid_config(tmp_path, radii=[0.05, 0.1])

    def test_missing_seed_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict({
                "schema_version": 1, "system": "iid:0.01", "radii": [0.05],
                "t": 1.0, "n_samples": 100, "centers": {"sampled": 1},
            })

    def test_wrong_schema_version_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            _iid_config(tmp_path, schema_version=2)

    def test_yaml_roundtrip_and_hash(self, tmp_path):
        cfg = _iid_config(tmp_path)
        text = (
            "schema_version: 1\nsystem: 'iid:0.01'\nradii: [0.05]\n"
            "t: 1.0\nn_samples: 50000\nseed: 31415\n"
            "measure_iterations: 100000\ncenters: {sampled: 1}\n"
            "bound: {p: [2, 3], M: [1, 2], series: 16}\n"
        )
        cfg2 = ExperimentConfig.from_yaml(text)
        assert cfg.config_hash() == cfg2.config_hash()

    def test_bad_yaml_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_yaml("radii: [0.05")


class TestScan:
    def test_iid_scan_matches_exact_law(self, tmp_path):
        cfg = _iid_config(tmp_path)
        rows = run_scan(cfg)
        assert len(rows) == 1
        row = rows[0]
        exact_tv = tv_distance(binomial_pmf(101, 0.01), poisson_pmf(1.0))
        assert abs(row["tv_to_poisson"] - exact_tv) < 0.01
        assert row["N_used"] == 100
        assert row["eps_hat"] == pytest.approx(0.01, abs=1e-12)
        assert row["bound_total"] > 0
        pmf_path = tmp_path / "out" / row["pmf_file"]
        emp = PMF.from_json(pmf_path.read_text())
        assert abs(emp.mean() - 101 * 0.01) < 0.02

    def test_outputs_deterministic_across_runs_and_workers(self, tmp_path):
        outs = []
        for name, workers in (("a", 1), ("b", 1), ("c", 4)):
            cfg = _iid_config(tmp_path, out_name=name)
            run_scan(cfg, workers=workers)
            outs.append(tmp_path / name)
        for other in outs[1:]:
            match, mismatch, errors = filecmp.cmpfiles(
                outs[0], other,
                [p.name for p in outs[0].iterdir()], shallow=False,
            )
            assert not mismatch and not errors

    def test_row_reproducible_from_recorded_seed(self, tmp_path):
        cfg = _iid_config(tmp_path, out_name="r1")
        row = run_scan(cfg)[0]
        cfg2 = _iid_config(tmp_path, out_name="r2", seed=row["seed"])
        row2 = run_scan(cfg2)[0]
        assert row2["tv_to_poisson"] == row["tv_to_poisson"]
        assert row2["bound_total"] == row["bound_total"]


class TestCLI:
    def test_tv_identical_files(self, tmp_path, capsys):
        p = tmp_path / "p.json"
        p.write_text(poisson_pmf(1.0).to_json())
        assert main(["tv", str(p), str(p)]) == 0
        assert capsys.readouterr().out.strip() == "0.0"

    def test_tv_known_value(self, tmp_path, capsys):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        a.write_text(binomial_pmf(2, 0.5).to_json())
        b.write_text(poisson_pmf(1.0).to_json())
        assert main(["tv", str(a), str(b)]) == 0
        val = float(capsys.readouterr().out)
        # 1/2 * (|1/4-e^-1| + |1/2-e^-1| + |1/4-e^-1/2| + P(Pois(1)>2))
        assert val == pytest.approx(0.19818083824283653, abs=1e-12)

    def test_bound_iid_json(self, capsys):
        rc = main(["bound", "--eps", "0.01", "--N", "100", "--p", "3",
                   "--M", "2", "--iid"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["r1"] == 0.0
        assert out["r2"] == pytest.approx(2e-4, rel=1e-12)
        assert out["total"] > 0
        assert out["certifies"] is True

    def test_usage_error_exit_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["nonsense"])
        assert exc.value.code == 1

    def test_validation_error_exit_2(self, capsys):
        # p >= N is invalid
        rc = main(["bound", "--eps", "0.01", "--N", "10", "--p", "10",
                   "--M", "1", "--iid"])
        assert rc == 2

    def test_missing_file_exit_2(self):
        assert main(["tv", "/nonexistent/a.json", "/nonexistent/b.json"]) == 2

    def test_oracle_resource_limit_exit_3(self, tmp_path, capsys):
        m = MarkovBinaryModel(P=np.array([[0.9, 0.1], [0.8, 0.2]]), hit={1})
        path = tmp_path / "model.json"
        path.write_text(m.to_json())
        assert main(["oracle", str(path), "--N", "100000"]) == 3

    def test_oracle_check_passes(self, tmp_path, capsys):
        m = MarkovBinaryModel(P=np.array([[0.9, 0.1], [0.8, 0.2]]), hit={1})
        path = tmp_path / "model.json"
        path.write_text(m.to_json())
        assert main(["oracle", str(path), "--N", "20", "--check"]) == 0
        pmf = PMF.from_json(capsys.readouterr().out)
        assert abs(sum(pmf.probs) - 1.0) < 1e-10

    def test_badcenters_flags_origin(self, capsys):
        rc = main(["badcenters", "--system", "cat", "--r", "1e-5", "0,0",
                   "0.2137,0.618"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        reports = [json.loads(line) for line in lines]
        assert reports[0]["flag"] is True
        assert reports[1]["flag"] is False

    def test_scan_bad_config_exit_2(self, tmp_path):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("schema_version: 99\nsystem: cat\n")
        assert main(["scan", str(cfg)]) == 2

    def test_simulate_raw_series(self, capsys):
        rc = main(["simulate", "--system", "iid:0.2", "--length", "50",
                   "--seed", "7"])
        assert rc == 0
        line = capsys.readouterr().out.strip()
        assert len(line) == 50
        assert set(line) <= {"0", "1"}
