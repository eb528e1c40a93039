import numpy as np
import pytest

from panelclust.cli import main
from panelclust.panel import dump_panel
from panelclust.simulation import DgpConfig, generate


@pytest.fixture
def panel_file(tmp_path):
    panel, _ = generate(DgpConfig(2, 10, 100, seed=1))
    path = tmp_path / "panel.csv"
    dump_panel(panel, path)
    return path


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def usage_error(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code, capsys.readouterr().err


def test_discover_cv(panel_file, tmp_path, capsys):
    out = tmp_path / "clusters.csv"
    dump = tmp_path / "corr.txt"
    code, stdout, err = run(
        ["discover", "--input", str(panel_file), "--schema", "unit,time,y,const", "--tuning", "cv",
         "--out", str(out), "--dump-matrix", str(dump)], capsys)
    assert code == 0
    assert stdout.startswith("q_hat=2\nsizes=5,5")
    assert out.read_text().splitlines()[0] == "unit_id,cluster"
    assert np.loadtxt(dump, delimiter=",").shape == (10, 10)
    assert "resolved bandwidth" in err and "config" in err


def test_discover_unbalanced(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("unit,time,y,x1\na,1,1,1\na,2,2,1\na,3,3,1\nb,1,1,1\nb,2,1,1\n")
    code, _, err = run(["discover", "--input", str(path)], capsys)
    assert code == 1 and "'b'" in err


def test_eta_out_of_range(panel_file, capsys):
    code, err = usage_error(["discover", "--input", str(panel_file), "--eta", "1.2"], capsys)
    assert code == 2 and "eta must lie in [0, 1]" in err


def test_infer_art_discovered(panel_file, capsys):
    code, out, _ = run(["infer", "--input", str(panel_file), "--schema", "unit,time,y,const",
                        "--method", "art", "--r", "1", "--lambda", "1"], capsys)
    assert code == 0
    fields = dict(line.split("=", 1) for line in out.splitlines())
    assert fields["method"] == "art" and fields["q_hat"] == "2"
    assert 0 <= float(fields["p_value"]) <= 1 and 0 <= float(fields["phi"]) <= 1


def test_infer_art_sampled_orbit(panel_file, capsys):
    code, out, _ = run(["infer", "--input", str(panel_file), "--schema", "unit,time,y,const",
                        "--lambda", "1", "--orbit", "99", "--seed", "3", "--deterministic"], capsys)
    assert code == 0 and "orbit_size=99" in out


def test_infer_cce_single_cluster(panel_file, capsys):
    code, _, err = run(["infer", "--input", str(panel_file), "--schema", "unit,time,y,const",
                        "--method", "cce", "--eta", "0", "--bandwidth", "1"], capsys)
    assert code == 1 and "single cluster: test undefined" in err


def test_infer_cce_with_cluster_file(panel_file, tmp_path, capsys):
    clusters = tmp_path / "c.csv"
    clusters.write_text("unit_id,cluster\n" + "".join(f"{i},{1 + i // 5}\n" for i in range(10)))
    out = tmp_path / "res.txt"
    code, _, _ = run(["infer", "--input", str(panel_file), "--schema", "unit,time,y,const", "--method", "cce",
                      "--variant", "paper", "--clusters", str(clusters), "--out", str(out)], capsys)
    assert code == 0 and "method=cce_paper_meat" in out.read_text()


def test_infer_bcl_default(panel_file, capsys):
    code, out, _ = run(["infer", "--input", str(panel_file), "--schema", "unit,time,y,const", "--method", "bcl",
                        "--lambda", "1"], capsys)
    assert code == 0 and "method=bcl" in out


def test_infer_rank_deficient_cluster_message(tmp_path, capsys):
    path = tmp_path / "p.csv"
    rows = ["unit,time,y,x1"] + [f"{u},{t},{u + t},{t * (u == 0)}" for u in range(3) for t in range(3)]
    path.write_text("\n".join(rows) + "\n")
    clusters = tmp_path / "c.csv"
    clusters.write_text("unit_id,cluster\n0,1\n1,2\n2,2\n")
    code, _, err = run(["infer", "--input", str(path), "--intercept", "--r", "0,1", "--clusters", str(clusters)],
                       capsys)
    assert code == 1 and "cluster by cluster" in err


def test_infer_bad_restriction_length(panel_file, capsys):
    code, _, err = run(["infer", "--input", str(panel_file), "--schema", "unit,time,y,const", "--r", "1,0"],
                       capsys)
    assert code == 1 and "coefficients" in err


def test_tune_prints_pair_and_surface(tmp_path, capsys):
    panel, _ = generate(DgpConfig(2, 10, 100, seed=2))
    path = tmp_path / "p.csv"
    dump_panel(panel, path)
    surface = tmp_path / "surface.csv"
    code, out, _ = run(["tune", "--input", str(path), "--schema", "unit,time,y,const", "--out", str(surface)],
                       capsys)
    assert code == 0 and out.startswith("bandwidth=") and "\neta=" in out
    lines = surface.read_text().splitlines()
    assert lines[0] == "bandwidth,eta,objective" and len(lines) == 1 + 10 * 21


def test_simulate_smoke(tmp_path, capsys):
    out = tmp_path / "table.csv"
    code, _, err = run(["simulate", "--q", "2", "--n", "10", "--t", "60", "--reps", "10", "--methods", "art,cce,bcl",
                        "--seed", "42", "--out", str(out), "--log-level", "WARNING"], capsys)
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "q,n,t,reps,alpha,beta0,method,estimate,mc_se"
    assert [r.split(",")[6] for r in rows[1:]] == [
        "art_oracle", "art_discovered", "cce_oracle", "cce_discovered", "bcl",
        "min_purity", "avg_purity", "q_hat", "perfect_recovery"]


def test_simulate_invalid_method(capsys):
    code, err = usage_error(["simulate", "--methods", "art,wild"], capsys)
    assert code == 2 and "unknown method" in err


@pytest.mark.parametrize("argv", [
    ["simulate", "--reps", "0"],
    ["simulate", "--alpha", "1"],
    ["simulate", "--tuning", "fixed"],
    ["infer", "--input", "x.csv", "--method", "ols"],
    ["discover", "--input", "x.csv", "--bandwidth", "-3"],
    ["discover", "--input", "x.csv", "--schema", "unit,time"],
])
def test_usage_errors(argv, capsys):
    assert usage_error(argv, capsys)[0] == 2


def test_missing_file(capsys):
    code, _, err = run(["discover", "--input", "/nonexistent/p.csv"], capsys)
    assert code == 1 and "error:" in err
