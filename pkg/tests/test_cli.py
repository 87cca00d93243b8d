import json
import subprocess
import sys

import numpy as np
import pytest

from wdlsm import io
from wdlsm.cli import main

SIM = {"n": 25, "T": 3, "kind": "count", "seed": 21}
FIT = {"n_iter": 3000, "burn_in": 1500, "thin": 10, "seed": 2, "sigma2_0": 1e-4}


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    sim_cfg = dump(root / "sim.json", SIM)
    fit_cfg = dump(root / "fit.json", FIT)
    assert main(["simulate", "--config", sim_cfg, "--out", str(root / "sim")]) == 0
    edges = str(root / "sim" / "edges.csv")
    assert main(["fit", "--data", edges, "--config", fit_cfg, "--out", str(root / "fit")]) == 0
    assert main(["diagnose", "--data", edges, "--samples", str(root / "fit"),
                 "--truth", str(root / "sim" / "truth.json"), "--out", str(root / "diag")]) == 0
    return root


def test_pipeline_fit_quality(pipeline):
    report = json.loads((pipeline / "diag" / "fit_report.json").read_text())
    assert report["fit"]["pseudo_r2"] >= 0.8
    assert 0.8 <= report["distance_ratios"]["median"] <= 1.2
    assert (pipeline / "diag" / "distance_ratios.csv").exists()
    assert "Mantel" in report["skipped"][0]


def test_fit_outputs_embed_seed_and_hash(pipeline):
    fit = pipeline / "fit"
    manifest = json.loads((fit / "manifest.json").read_text())
    for name in ("beta_in.csv", "beta_out.csv", "tau2.csv", "sigma2.csv", "radii.csv"):
        meta = io.read_draws(fit / name)[2]
        assert meta["seed"] == str(manifest["seed"]) and meta["config_hash"] == manifest["config_hash"]
    _, header = io.read_positions(fit / "positions.bin")
    assert header["config_hash"] == manifest["config_hash"] and header["shape"][0] == 150
    timing = json.loads((fit / "timing.json").read_text())
    assert timing["wall_time_seconds"] > 0
    assert io.read_metadata(pipeline / "sim" / "edges.csv")["seed"] == "21"


def test_fit_is_reproducible(pipeline, tmp_path):
    edges = str(pipeline / "sim" / "edges.csv")
    assert main(["fit", "--data", edges, "--config", str(pipeline / "fit.json"),
                 "--out", str(tmp_path / "again")]) == 0
    for f in sorted((pipeline / "fit").iterdir()):
        if f.name != "timing.json":
            assert f.read_bytes() == (tmp_path / "again" / f.name).read_bytes(), f.name


def test_diagnose_without_truth_says_so(pipeline, tmp_path):
    out = tmp_path / "d"
    assert main(["diagnose", "--data", str(pipeline / "sim" / "edges.csv"),
                 "--samples", str(pipeline / "fit"), "--out", str(out)]) == 0
    report = json.loads((out / "fit_report.json").read_text())
    assert "distance_ratios" not in report
    assert any("no --truth" in s for s in report["skipped"])
    diag = json.loads((out / "chain_diagnostics.json").read_text())
    assert set(diag["parameters"]) == {"beta_in", "beta_out", "tau2", "sigma2"}
    assert (out / "traces.csv").exists()


def test_diagnose_mantel(pipeline, tmp_path):
    labels = io.read_edge_list(pipeline / "sim" / "edges.csv", "count").labels
    attrs = tmp_path / "attrs.csv"
    attrs.write_text("label,group\n" + "".join(f"{lab},{k % 2}\n" for k, lab in enumerate(labels)))
    out = tmp_path / "d"
    assert main(["diagnose", "--data", str(pipeline / "sim" / "edges.csv"),
                 "--samples", str(pipeline / "fit"), "--out", str(out),
                 "--exogenous", str(attrs), "--n-boot", "49"]) == 0
    mantel = json.loads((out / "mantel.json").read_text())["tests"]["group"]
    assert -1 <= mantel["statistic"] <= 1 and 0 <= mantel["p_value"] <= 1
    assert mantel["n_boot"] == 49


def test_summarize(pipeline, tmp_path):
    out = tmp_path / "s"
    assert main(["summarize", "--samples", str(pipeline / "fit"), "--out", str(out)]) == 0
    summary = json.loads((out / "posterior_summary.json").read_text())
    beta = io.read_draws(pipeline / "fit" / "beta_in.csv")[0]
    assert summary["scalars"]["beta_in"]["mean"] == pytest.approx(beta.mean())
    lines = [l for l in (out / "positions_t002.csv").read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "label,x1,x2" and len(lines) == SIM["n"] + 1


def test_exit_codes(pipeline, tmp_path):
    edges = str(pipeline / "sim" / "edges.csv")
    fit_cfg = str(pipeline / "fit.json")
    out = str(tmp_path / "x")
    # kind mismatch between data and configuration
    assert main(["fit", "--data", edges, "--config", fit_cfg, "--set", "kind=nonneg", "--out", out]) == 2
    assert main(["fit", "--data", edges, "--config", fit_cfg, "--set", "colour=blue", "--out", out]) == 2
    assert main(["fit", "--data", edges, "--config", fit_cfg, "--chains", "0", "--out", out]) == 2
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--out", out]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("t,i,j,w\n1,a,b,-2\n")
    assert main(["fit", "--data", str(bad), "--out", out]) == 3
    assert main(["diagnose", "--data", edges, "--samples", str(tmp_path), "--out", out]) == 3
    assert main(["bogus"]) == 2
    # impossible generative parameters overflow the Poisson rate
    assert main(["simulate", "--set", "beta_in=400", "--set", "beta_out=400", "--set", "n=5",
                 "--set", "T=1", "--out", out]) == 4


def test_preprocess_command(tmp_path):
    src = tmp_path / "e.csv"
    src.write_text("# kind=nonneg\nt,i,j,w\n1,a,b,10\n2,a,b,30\n2,b,a,e\n".replace(",e", ",2.718281828459045"))
    out = tmp_path / "p.csv"
    assert main(["preprocess", "--data", str(src), "--op", "rescale", "--op", "log1p",
                 "--out", str(out)]) == 0
    meta = io.read_metadata(out)
    assert meta["preprocess"] == "rescale_total+log1p" and meta["kind"] == "nonneg"
    Y = io.read_edge_list(out, "nonneg")
    assert Y.weights[0, 0, 1] == pytest.approx(np.log1p(21.359140914229522))


def test_parallel_chains(pipeline, tmp_path, monkeypatch):
    monkeypatch.setenv("WDLSM_NUM_THREADS", "2")
    cfg = dump(tmp_path / "c.json", dict(FIT, n_iter=200, burn_in=100))
    out = tmp_path / "chains"
    assert main(["fit", "--data", str(pipeline / "sim" / "edges.csv"), "--config", cfg,
                 "--chains", "2", "--out", str(out)]) == 0
    a = io.read_draws(out / "chain_0" / "beta_in.csv")
    b = io.read_draws(out / "chain_1" / "beta_in.csv")
    assert a[2]["seed"] != b[2]["seed"] and not np.array_equal(a[0], b[0])
    monkeypatch.setenv("WDLSM_NUM_THREADS", "many")
    assert main(["fit", "--data", str(pipeline / "sim" / "edges.csv"), "--config", cfg,
                 "--chains", "2", "--out", str(out)]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "wdlsm.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
