"""Command line front end: configs, outputs, exit codes, determinism."""

import csv
import json

import pytest

from relbelief.cli import main


def run(tmp_path, config, command, extra=()):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


LOCNORMAL_20 = {
    "kind": "location_normal",
    "n": 20,
    "sigma0_sq": 1.0,
    "mu_star": 1.0,
    "tau_star_sq": 1.0,
}

PROSECUTOR = {
    "kind": "finite",
    "theta_labels": ["guilty", "not_guilty"],
    "prior": [0.001, 0.999],
    "likelihood": [[1.0, 0.0], [9 / 999, 990 / 999]],
    "x_labels": ["trait", "no_trait"],
}


def test_analyze_writes_profile_and_estimate(tmp_path):
    config = {
        "bundle": LOCNORMAL_20,
        "data": {"xbar": 0.3},
        "discretization": {"delta": 0.05, "anchor": 0.0},
        "gamma": 0.8,
    }
    code, out = run(tmp_path, config, "analyze")
    assert code == 0
    rows = read_csv(out / "profile.csv")
    assert set(rows[0]) == {"cell_lo", "cell_hi", "prior", "posterior", "rb"}
    report = json.loads((out / "estimate.json").read_text())
    assert report["plausible_values"]
    assert report["pl_posterior_content"] > 0.5
    assert report["credible"]["gamma"] == 0.8
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["command"] == "analyze"
    assert "relbelief" in manifest["versions"]


def test_analyze_finite_prosecutor(tmp_path):
    config = {"bundle": PROSECUTOR, "data": {"outcome": "trait"}}
    code, out = run(tmp_path, config, "analyze")
    assert code == 0
    report = json.loads((out / "estimate.json").read_text())
    assert report["psi_hat"] == "guilty"
    assert report["pl_posterior_content"] == pytest.approx(0.1, abs=1e-12)
    rows = read_csv(out / "profile.csv")
    assert rows[0]["label"] == "guilty"
    assert float(rows[0]["rb"]) == pytest.approx(100.0, abs=1e-9)


def test_analyze_missing_delta_is_config_error(tmp_path):
    config = {"bundle": LOCNORMAL_20, "data": {"xbar": 0.3}, "discretization": {}}
    code, _ = run(tmp_path, config, "analyze")
    assert code == 2


def test_analyze_unknown_key_is_config_error(tmp_path):
    config = {
        "bundle": LOCNORMAL_20,
        "data": {"xbar": 0.3},
        "discretization": {"delta": 0.1},
        "extra": 1,
    }
    code, _ = run(tmp_path, config, "analyze")
    assert code == 2


def test_analyze_excessive_gamma_is_domain_error(tmp_path):
    config = {
        "bundle": LOCNORMAL_20,
        "data": {"xbar": 0.3},
        "discretization": {"delta": 0.05},
        "gamma": 0.9999,
    }
    code, _ = run(tmp_path, config, "analyze")
    assert code == 3


def test_assess_surfaces_rb_and_strength_divergence(tmp_path):
    # diffuse prior: large ratio in favor alongside a small strength
    config = {
        "bundle": {
            "kind": "location_normal",
            "n": 100,
            "sigma0_sq": 1.0,
            "mu_star": 0.0,
            "tau_star_sq": 1e4,
        },
        "data": {"xbar": 0.25},
        "discretization": {"delta": 0.01},
        "psi0": 0.0,
    }
    code, out = run(tmp_path, config, "assess")
    assert code == 0
    report = json.loads((out / "assess.json").read_text())
    assert report["rb0"] > 1.0
    assert report["strength"] < 0.05
    assert report["verdict"] == "favor"


def test_assess_psi0_outside_grid_is_domain_error(tmp_path):
    config = {
        "bundle": LOCNORMAL_20,
        "data": {"xbar": 0.3},
        "discretization": {"delta": 0.05, "range": [-2.0, 2.0]},
        "psi0": 10.0,
    }
    code, _ = run(tmp_path, config, "assess")
    assert code == 3


def test_assess_finite_matches_enumeration(tmp_path):
    config = {"bundle": PROSECUTOR, "data": {"outcome": "trait"}, "psi0": "guilty"}
    code, out = run(tmp_path, config, "assess")
    assert code == 0
    report = json.loads((out / "assess.json").read_text())
    assert report["rb0"] == pytest.approx(100.0, abs=1e-9)
    assert report["markov_lower"] == pytest.approx(0.1, abs=1e-12)


def test_bias_command_reproduces_reference_row(tmp_path):
    config = {
        "bundle": {
            "kind": "location_normal",
            "n": 5,
            "sigma0_sq": 1.0,
            "mu_star": 1.0,
            "tau_star_sq": 1.0,
        },
        "psi0": 0.0,
        "delta": 0.5,
    }
    code, out = run(tmp_path, config, "bias")
    assert code == 0
    row = read_csv(out / "bias.csv")[0]
    assert float(row["bias_against"]) == pytest.approx(0.095, abs=0.002)
    assert float(row["bias_in_favor"]) == pytest.approx(0.871, abs=0.002)
    assert row["method"] == "Exact"


def test_bias_estimation_mode(tmp_path):
    config = {
        "bundle": {
            "kind": "location_normal",
            "n": 20,
            "sigma0_sq": 1.0,
            "mu_star": 0.0,
            "tau_star_sq": 1.0,
        },
        "delta": 0.5,
        "mode": "estimation",
    }
    code, out = run(tmp_path, config, "bias")
    assert code == 0
    row = read_csv(out / "bias_estimation.csv")[0]
    assert float(row["avg_bias_against"]) == pytest.approx(0.051, abs=0.003)
    assert float(row["implied_coverage"]) == pytest.approx(0.949, abs=0.003)
    assert float(row["avg_bias_in_favor"]) == pytest.approx(0.486, abs=0.003)


def test_design_command(tmp_path):
    config = {
        "bundle": {
            "kind": "location_normal",
            "sigma0_sq": 1.0,
            "mu_star": 0.0,
            "tau_star_sq": 1.0,
        },
        "psi0": 0.0,
        "delta": 0.5,
        "targets": {"max_bias_in_favor": 0.07},
        "n_grid": [5, 10, 20, 50, 100],
    }
    code, out = run(tmp_path, config, "design")
    assert code == 0
    chosen = json.loads((out / "design.json").read_text())
    assert chosen["n"] == 50
    rows = read_csv(out / "design.csv")
    assert [int(r["n"]) for r in rows] == [5, 10, 20, 50]
    assert [r["admissible"] for r in rows] == ["0", "0", "0", "1"]


def test_design_without_admissible_size_exits_3_with_table(tmp_path):
    config = {
        "bundle": {
            "kind": "location_normal",
            "sigma0_sq": 1.0,
            "mu_star": 0.0,
            "tau_star_sq": 1.0,
        },
        "psi0": 0.0,
        "delta": 0.5,
        "targets": {"max_bias_in_favor": 0.001},
        "n_grid": [5, 10],
    }
    code, out = run(tmp_path, config, "design")
    assert code == 3
    assert len(read_csv(out / "design.csv")) == 2


def test_check_command(tmp_path):
    config = {
        "bundle": {
            "kind": "location_normal",
            "n": 20,
            "sigma0_sq": 1.0,
            "mu_star": 0.0,
            "tau_star_sq": 1.0,
        },
        "data": {"xbar": 0.0},
    }
    code, out = run(tmp_path, config, "check")
    assert code == 0
    row = read_csv(out / "check.csv")[0]
    assert float(row["tail_prob"]) == 1.0
    assert row["verdict"] == "no_conflict"


def test_reproduce_all_targets(tmp_path):
    for target in ("table1", "table2", "table3", "table5", "fig1", "fig3"):
        out = tmp_path / target
        code = main(["reproduce", target, "--out", str(out)])
        assert code == 0
        rows = read_csv(out / f"{target}.csv")
        assert len(rows) == (201 if target.startswith("fig") else 5)


def test_reproduce_tables_match_reference_values(tmp_path):
    reference = {
        "table1": {
            "bias_against_prior_mu1_tausq1": [0.095, 0.065, 0.044, 0.026, 0.018],
            "bias_against_prior_mu0_tausq1": [0.143, 0.104, 0.074, 0.045, 0.031],
        },
        "table2": {
            "bias_in_favor_prior_mu1_tausq1": [0.871, 0.747, 0.519, 0.125, 0.006],
            "bias_in_favor_prior_mu0_tausq1": [0.631, 0.516, 0.327, 0.062, 0.002],
        },
        "table3": {
            "avg_bias_against_tausq1": [0.107, 0.075, 0.051, 0.031, 0.021],
            "avg_bias_against_tausq0_25": [0.193, 0.146, 0.107, 0.067, 0.046],
        },
        "table5": {
            "avg_bias_in_favor_delta1_0": [0.451, 0.185, 0.025, 0.000, 0.000],
            "avg_bias_in_favor_delta0_5": [0.798, 0.690, 0.486, 0.131, 0.009],
        },
    }
    for target, columns in reference.items():
        out = tmp_path / target
        assert main(["reproduce", target, "--out", str(out)]) == 0
        rows = read_csv(out / f"{target}.csv")
        assert [int(r["n"]) for r in rows] == [5, 10, 20, 50, 100]
        tol = 0.002 if target in ("table1", "table2") else 0.003
        for column, expected in columns.items():
            got = [float(r[column]) for r in rows]
            for g, e in zip(got, expected):
                assert abs(g - e) <= tol, (target, column, g, e)


def test_bias_estimation_fallback_exit_code(tmp_path, monkeypatch):
    # force the quadrature fallback path and confirm it surfaces as exit 4
    import relbelief.cli as cli_mod
    from relbelief.bias import BiasComponent

    def fake_against(bundle, disc=None, mc=None, method="auto", quad_nodes=64):
        comp = BiasComponent(value=0.1, se=0.001, method="MonteCarlo", fallback=True)
        return comp, BiasComponent(value=0.2, se=0.0, method="Exact")

    monkeypatch.setattr(cli_mod, "bias_against_e", fake_against)
    config = {
        "bundle": {
            "kind": "location_normal",
            "n": 5,
            "sigma0_sq": 1.0,
            "mu_star": 0.0,
            "tau_star_sq": 1.0,
        },
        "delta": 0.5,
        "mode": "estimation",
    }
    code, out = run(tmp_path, config, "bias")
    assert code == 4
    assert (out / "bias_estimation.csv").exists()


def test_reproduce_fig1_peaks_near_the_hypothesis(tmp_path):
    out = tmp_path / "fig"
    assert main(["reproduce", "fig1", "--out", str(out)]) == 0
    rows = read_csv(out / "fig1.csv")
    assert len(rows) == 201
    mus = [float(r["mu"]) for r in rows]
    assert mus[0] == -3.0 and mus[-1] == 5.0
    probs = [float(r["prob_evidence_in_favor_of_0"]) for r in rows]
    peak_mu = mus[probs.index(max(probs))]
    assert abs(peak_mu) <= 0.1
    # unimodal shape: rises to the peak, falls after it
    k = probs.index(max(probs))
    assert all(b >= a for a, b in zip(probs[:k], probs[1 : k + 1]))
    assert all(b <= a for a, b in zip(probs[k:], probs[k + 1 :]))


def test_reproduce_unknown_target_is_config_error(tmp_path):
    assert main(["reproduce", "table9", "--out", str(tmp_path)]) == 2


def test_reproduce_is_byte_identical_across_thread_counts(tmp_path):
    out1, out8 = tmp_path / "t1", tmp_path / "t8"
    assert main(["reproduce", "table1", "--seed", "7", "--threads", "1", "--out", str(out1)]) == 0
    assert main(["reproduce", "table1", "--seed", "7", "--threads", "8", "--out", str(out8)]) == 0
    assert (out1 / "table1.csv").read_bytes() == (out8 / "table1.csv").read_bytes()
    assert (out1 / "run_manifest.json").read_bytes() == (out8 / "run_manifest.json").read_bytes()


def test_missing_config_file_is_config_error(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2


def test_malformed_json_is_config_error(tmp_path):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_wrong_value_types_are_config_errors(tmp_path):
    bad_bundle = dict(LOCNORMAL_20, n="twenty")
    config = {"bundle": bad_bundle, "data": {"xbar": 0.3}, "discretization": {"delta": 0.05}}
    code, _ = run(tmp_path, config, "analyze")
    assert code == 2

    config = {
        "bundle": LOCNORMAL_20,
        "data": {"xbar": 0.3},
        "discretization": {"delta": 0.05},
        "psi0": "zero",
    }
    code, _ = run(tmp_path, config, "assess")
    assert code == 2
