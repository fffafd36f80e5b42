"""Command-line surface: exit codes, JSON envelope, config merging, artifacts."""

import json
import math

import pytest

from treebp.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert err == ""
    return code, json.loads(out)


def test_constants_envelope(capsys):
    code, doc = run_json(capsys, "thresholds", "constants")
    assert code == 0
    assert set(doc) == {"schema_version", "tool", "version", "command",
                        "config", "seed", "results"}
    assert doc["tool"] == "treebp" and doc["command"] == "thresholds constants"
    assert doc["schema_version"] == 1 and doc["seed"] == 0
    res = doc["results"]
    assert res["alpha_star"] == pytest.approx(3.51286, abs=1e-5)
    assert res["z_bound"] == pytest.approx(0.824361, abs=1e-6)
    assert res["pe_bound"] == pytest.approx(0.216967, abs=1e-6)
    assert res["peak_gain"] == pytest.approx(2.0 / math.sqrt(math.e), abs=1e-12)


def test_de_run_trivial_subcritical(capsys):
    code, doc = run_json(capsys, "de", "run", "--model", "regular:3",
                         "--theta", "0.5", "--survey", "trivial")
    assert code == 0
    assert doc["results"]["verdict"] == "trivial_fixed_point"
    assert doc["results"]["limit"]["prob_error"] == 0.5


def test_de_run_supercritical_pair(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, doc = run_json(capsys, "de", "run", "--model", "regular:3",
                         "--theta", "0.5", "--survey", "bec:0.5",
                         "--trace-csv", str(trace))
    assert code == 0
    assert doc["results"]["verdict"] == "bi_holds"
    header = trace.read_text().splitlines()[0]
    assert header == ("k,Pe_leaves,Pe_noleaves,C_leaves,C_noleaves,"
                      "Z_leaves,Z_noleaves,gap,gap_ratio")


def test_de_probe_conjectured_gap_is_undecided(capsys):
    code, doc = run_json(capsys, "de", "probe", "--model", "regular:4",
                         "--theta", "0.75", "--survey", "bec:0.95")
    assert code == 2
    assert doc["results"]["region_criterion"] == "none"
    assert doc["results"]["verdict"].startswith("uncertified")


def test_unknown_flag_names_it(capsys):
    code, out, err = run_cli(capsys, "de", "run", "--model", "regular:3",
                             "--theta", "0.5", "--survey", "trivial",
                             "--bogus", "1")
    assert code == 1
    assert "--bogus" in err or "bogus" in err


def test_bad_parameter_names_flag(capsys):
    code, _, err = run_cli(capsys, "de", "run", "--model", "regular:3",
                           "--theta", "1.2", "--survey", "trivial")
    assert code == 1 and "theta" in err
    code, _, err = run_cli(capsys, "de", "run", "--model", "weird:3",
                           "--theta", "0.5", "--survey", "trivial")
    assert code == 1 and "--model" in err
    code, _, err = run_cli(capsys, "mc", "entropy", "--model", "regular:3",
                           "--theta", "0.5", "--survey", "bec:0.5",
                           "--depth", "2", "--boundary", "sideways")
    assert code == 1 and "--boundary" in err
    code, _, err = run_cli(capsys, "spin-sync", "mi", "--graph", "path:9",
                           "--theta", "0.8", "--eps", "0.9", "--exact", "maybe")
    assert code == 1 and "--exact" in err
    code, _, err = run_cli(capsys)
    assert code == 1


def test_reruns_are_byte_identical(capsys):
    argv = ("mc", "entropy", "--model", "regular:3", "--theta", "0.7",
            "--survey", "bec:0.6", "--depth", "3", "--samples", "2000",
            "--seed", "3")
    _, out1, _ = run_cli(capsys, *argv)
    _, out2, _ = run_cli(capsys, *argv)
    assert out1 == out2


def test_worker_count_does_not_change_output(capsys):
    argv = ("mc", "entropy", "--model", "regular:3", "--theta", "0.7",
            "--survey", "bec:0.6", "--depth", "3", "--samples", "2000",
            "--seed", "3")
    _, base, _ = run_cli(capsys, *argv)
    _, multi, _ = run_cli(capsys, *argv, "--workers", "2")
    assert base == multi


def test_config_file_merging(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\ntheta=0.3\nsamples=500\n")
    code, doc = run_json(capsys, "mc", "majority", "--model", "regular:3",
                         "--theta", "0.6", "--eta", "0.1", "--depth", "2",
                         "--config", str(cfg))
    assert code == 0
    assert doc["config"]["theta"] == 0.6       # explicit flag wins
    assert doc["config"]["samples"] == 500     # file fills the rest

    bad = tmp_path / "bad.cfg"
    bad.write_text("just a line without equals\n")
    code, _, err = run_cli(capsys, "mc", "majority", "--model", "regular:3",
                           "--theta", "0.6", "--eta", "0.1", "--depth", "2",
                           "--config", str(bad))
    assert code == 1 and "--config" in err
    code, _, err = run_cli(capsys, "mc", "majority", "--model", "regular:3",
                           "--theta", "0.6", "--eta", "0.1", "--depth", "2",
                           "--config", str(tmp_path / "missing.cfg"))
    assert code == 1 and "--config" in err


def test_json_out_file(capsys, tmp_path):
    out = tmp_path / "constants.json"
    code, stdout, _ = run_cli(capsys, "thresholds", "constants",
                              "--out", str(out))
    assert code == 0 and stdout == ""
    doc = json.loads(out.read_text())
    assert doc["command"] == "thresholds constants"


def test_region_csv(capsys, tmp_path):
    out = tmp_path / "region.csv"
    code, _, _ = run_cli(capsys, "thresholds", "region", "--x-steps", "4",
                         "--y-steps", "3", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,bound_value,in_region,criterion"
    assert len(lines) == 1 + 12


def test_spin_sync_mi_value(capsys):
    code, doc = run_json(capsys, "spin-sync", "mi", "--graph", "path:9",
                         "--theta", "0.8", "--eps", "0.9", "--radius", "2")
    assert code == 0
    assert doc["results"]["method"] == "exact"
    assert doc["results"]["value"] == pytest.approx(0.24091005, abs=1e-6)


def test_sbm_exact_and_validation(capsys):
    code, doc = run_json(capsys, "sbm", "exact", "--n", "6", "--a", "3",
                         "--b", "1", "--eps", "none", "--graphs", "20")
    assert code == 0
    assert doc["config"]["eps"] is None
    assert doc["results"]["entropy_per_vertex"]["n_samples"] == 20
    code, _, err = run_cli(capsys, "sbm", "exact", "--n", "15", "--a", "3",
                           "--b", "1", "--graphs", "5")
    assert code == 1 and "--n" in err


def test_sbm_integral_flags_propagate_to_exit_code(capsys):
    code, doc = run_json(capsys, "sbm", "integral", "--a", "3", "--b", "1",
                         "--eps-points", "5")
    assert code == 2
    assert doc["results"]["status"] == "undecided"


def test_mc_entropy_single_boundary(capsys):
    code, doc = run_json(capsys, "mc", "entropy", "--model", "regular:2",
                         "--theta", "0.6", "--survey", "bec:0.5",
                         "--depth", "2", "--samples", "500",
                         "--boundary", "plus:2.0")
    assert code == 0
    assert "entropy" in doc["results"]
