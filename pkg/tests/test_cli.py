"""End-to-end checks of the command-line interface."""

import json
import os

import numpy as np
import pytest

from secperc import cli


def run(capsys, argv):
    """Invoke the CLI in-process, returning (exit code, parsed summary)."""
    code = cli.main(argv)
    out = capsys.readouterr().out.strip().splitlines()
    summary = json.loads(out[-1]) if out else None
    return code, summary


HELP_TARGETS = [
    [],
    ["sample"],
    ["graph"],
    ["components"],
    ["degrees"],
    ["branching"],
    ["bound"],
    ["bound", "analytic"],
    ["bound", "lattice"],
    ["mc"],
    ["reproduce"],
]


class TestParser:
    @pytest.mark.parametrize("target", HELP_TARGETS, ids=lambda t: "-".join(t) or "root")
    def test_help_everywhere(self, target, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(target + ["--help"])
        assert exc.value.code == 0
        assert "usage" in capsys.readouterr().out

    def test_unknown_flag_is_hard_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["sample", "--lambda", "1", "--bogus", "3"])
        assert exc.value.code == cli.EXIT_CONFIG

    def test_missing_subcommand_is_hard_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main([])
        assert exc.value.code == cli.EXIT_CONFIG

    def test_bad_choice_is_hard_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["mc", "--variant", "X", "--bound", "lower", "--r", "5",
                      "--trials", "1"])
        assert exc.value.code == cli.EXIT_CONFIG


class TestConfigResolution:
    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfgfile = tmp_path / "c.json"
        cfgfile.write_text('{"lam": 1.0, "nonsense": 5}')
        code, _ = run(capsys, ["sample", "--config", str(cfgfile),
                               "--out", str(tmp_path / "o.csv")])
        assert code == cli.EXIT_CONFIG

    def test_flags_override_config_file(self, tmp_path, capsys):
        cfgfile = tmp_path / "c.json"
        cfgfile.write_text('{"lam": 2.0, "window": "6x6", "seed": 5}')
        out = tmp_path / "o.csv"
        code, summary = run(capsys, ["sample", "--config", str(cfgfile),
                                     "--lambda", "0.5", "--out", str(out)])
        assert code == cli.EXIT_OK
        text = out.read_text()
        # flag wins for lambda, file survives for seed and window
        assert "# lam=0.5" in text
        assert "# seed=5" in text
        assert "# window=6.0x6.0" in text
        assert summary["seed"] == 5

    def test_config_key_aliases_match_flags(self, tmp_path, capsys):
        # dashed keys and the bare "lambda" spelling are both accepted
        cfgfile = tmp_path / "c.json"
        cfgfile.write_text('{"lambda": 1.5, "keep-trials": false}')
        code, _ = run(capsys, ["mc", "--config", str(cfgfile), "--variant", "O",
                               "--bound", "lower", "--r", "4", "--s", "0",
                               "--trials", "1", "--seed", "3",
                               "--out", str(tmp_path / "m.csv")])
        assert code == cli.EXIT_OK
        assert "# lam=1.5" in (tmp_path / "m.csv").read_text()

    def test_env_seed_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SECPERC_SEED", "123")
        out = tmp_path / "o.csv"
        code, summary = run(capsys, ["sample", "--lambda", "1",
                                     "--window", "6x6", "--out", str(out)])
        assert code == cli.EXIT_OK
        assert summary["seed"] == 123
        assert "# seed=123" in out.read_text()

    def test_auto_seed_recorded(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("SECPERC_SEED", raising=False)
        out = tmp_path / "o.csv"
        code, summary = run(capsys, ["sample", "--lambda", "1",
                                     "--window", "5x5", "--out", str(out)])
        assert code == cli.EXIT_OK
        assert isinstance(summary["seed"], int)
        assert f"# seed={summary['seed']}" in out.read_text()

    def test_window_dim_mismatch_rejected(self, tmp_path, capsys):
        code, _ = run(capsys, ["sample", "--lambda", "1", "--window", "5x5",
                               "--dim", "3", "--out", str(tmp_path / "o.csv")])
        assert code == cli.EXIT_CONFIG

    def test_bad_values_rejected(self, tmp_path, capsys):
        bad = [
            ["sample", "--lambda", "-2"],
            ["sample", "--lambda", "1", "--window", "5xx5"],
            ["degrees", "--lambda", "1", "--side", "sideways"],
            ["branching", "--lambda", "0.5", "--trials", "0"],
            ["mc", "--variant", "U", "--bound", "lower", "--r", "-1",
             "--trials", "1"],
            ["reproduce", "--table", "2", "--scale", "0"],
        ]
        for argv in bad:
            try:
                code, _ = run(capsys, argv + ["--seed", "1",
                                              "--out", str(tmp_path / "bad.csv")])
            except SystemExit as exc:
                code = exc.code
            assert code == cli.EXIT_CONFIG, argv


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path, capsys):
        base = ["graph", "--lambda", "0.5", "--window", "8x8", "--seed", "42"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(capsys, base + ["--out", str(a)])[0] == cli.EXIT_OK
        assert run(capsys, base + ["--out", str(b)])[0] == cli.EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_json_and_csv_share_config(self, tmp_path, capsys):
        base = ["sample", "--lambda", "1", "--window", "6x6", "--seed", "9"]
        jout = tmp_path / "a.json"
        run(capsys, base + ["--format", "json", "--out", str(jout)])
        blob = json.loads(jout.read_text())
        assert blob["config"]["seed"] == 9
        assert blob["config"]["lam"] == 1.0


class TestSubcommands:
    def test_sample_artifact(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, summary = run(capsys, ["sample", "--lambda", "1", "--window",
                                     "8x8", "--seed", "42", "--kind", "red",
                                     "--out", str(out)])
        assert code == cli.EXIT_OK
        lines = out.read_text().splitlines()
        body = [l for l in lines if not l.startswith("#")]
        assert body[0] == "x1,x2"
        assert len(body) - 1 == summary["n"]

    def test_graph_summary_counts(self, tmp_path, capsys):
        code, summary = run(capsys, ["graph", "--lambda", "0.5", "--window",
                                     "8x8", "--seed", "42",
                                     "--out", str(tmp_path / "g.csv")])
        assert code == cli.EXIT_OK
        assert summary["n"] > 0
        assert summary["edges"] >= 0
        assert summary["mean_outdegree"] == pytest.approx(
            summary["edges"] / summary["n"])

    def test_components_modes(self, tmp_path, capsys):
        for mode in ("U", "B", "S", "O", "I"):
            code, summary = run(capsys, ["components", "--lambda", "0.5",
                                         "--window", "9x9", "--seed", "7",
                                         "--mode", mode,
                                         "--out", str(tmp_path / f"c{mode}.csv")])
            assert code == cli.EXIT_OK, mode
            assert 0.0 <= summary["escape_fraction"] <= 1.0

    def test_degrees_dry_histogram_is_complete_graph(self, tmp_path, capsys):
        out = tmp_path / "d.json"
        code, summary = run(capsys, ["degrees", "--lambda", "1", "--side",
                                     "out", "--dry", "--window", "9x9",
                                     "--seed", "11", "--format", "json",
                                     "--out", str(out)])
        assert code == cli.EXIT_OK
        blob = json.loads(out.read_text())
        counts = np.array(blob["result"]["counts"])
        # with no reds every guard is infinite: one spike at n_total - 1
        assert counts.sum() == blob["result"]["n"]
        assert np.count_nonzero(counts) == 1
        assert summary["mean"] == len(counts) - 1

    def test_branching_summary(self, tmp_path, capsys):
        code, summary = run(capsys, ["branching", "--lambda", "0.5",
                                     "--trials", "500", "--seed", "3",
                                     "--out", str(tmp_path / "b.json")])
        assert code == cli.EXIT_OK
        assert summary["extinction_theory"] == 0.5
        assert abs(summary["extinct_frac"] - 0.5) < 0.1

    def test_bound_lattice_value(self, tmp_path, capsys):
        code, summary = run(capsys, ["bound", "lattice",
                                     "--out", str(tmp_path / "l.json")])
        assert code == cli.EXIT_OK
        assert abs(summary["lambda_u_upper"] - 40.9) <= 0.05
        assert summary["residual"] <= 1e-3

    def test_bound_analytic_fixed_point(self, tmp_path, capsys):
        code, summary = run(capsys, ["bound", "analytic", "--variant", "B",
                                     "--lambda", "0.0005", "--r", "1.657",
                                     "--s", "3.15",
                                     "--out", str(tmp_path / "a.json")])
        assert code == cli.EXIT_OK
        assert summary["p"] <= 0.0680 + 0.002
        assert summary["p"] > 0

    def test_bound_analytic_rejects_half_specified_geometry(self, tmp_path,
                                                            capsys):
        code, _ = run(capsys, ["bound", "analytic", "--variant", "U",
                               "--lambda", "0.002", "--r", "1.5",
                               "--out", str(tmp_path / "a.json")])
        assert code == cli.EXIT_CONFIG

    def test_bound_analytic_quadrature_failure_exit(self, tmp_path, capsys):
        code, _ = run(capsys, ["bound", "analytic", "--variant", "U",
                               "--lambda", "0.002", "--r", "1", "--s", "0.1",
                               "--tol", "1e-30",
                               "--out", str(tmp_path / "a.json")])
        assert code == cli.EXIT_NUMERIC

    def test_mc_tiny_batch(self, tmp_path, capsys):
        out = tmp_path / "m.csv"
        code, summary = run(capsys, ["mc", "--variant", "O", "--bound",
                                     "lower", "--lambda", "0.11", "--r", "6",
                                     "--s", "0", "--trials", "3", "--seed",
                                     "77", "--threads", "1", "--out", str(out)])
        assert code == cli.EXIT_OK
        assert summary["trials"] == 3
        assert 0 <= summary["successes"] <= 3
        assert summary["log10_confidence"] <= 0
        body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert body[0] == "variant,bound,lambda,r,s,successes,trials,log10_confidence"
        assert body[1].startswith("O,lower,0.11,")

    def test_mc_keep_trials_records_outcomes(self, tmp_path, capsys):
        out = tmp_path / "m.json"
        code, summary = run(capsys, ["mc", "--variant", "O", "--bound",
                                     "lower", "--lambda", "0.11", "--r", "6",
                                     "--s", "0", "--trials", "4", "--seed",
                                     "77", "--threads", "1", "--keep-trials",
                                     "--format", "json", "--out", str(out)])
        assert code == cli.EXIT_OK
        blob = json.loads(out.read_text())
        outcomes = blob["result"]["outcomes"]
        assert len(outcomes) == 4
        assert sum(outcomes) == summary["successes"]

    def test_default_out_path(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, _ = run(capsys, ["sample", "--lambda", "1", "--window", "5x5",
                               "--seed", "2"])
        assert code == cli.EXIT_OK
        assert [p.name for p in tmp_path.iterdir()] == ["sample.csv"]
