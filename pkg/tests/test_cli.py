import json
import math
import subprocess
import sys

import pytest

from conekernel.cli import main, parse_grid, parse_number, UsageError

EUCLID_3 = (4 * math.pi) ** -1.5


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def status_line(out):
    return out.rstrip("\n").splitlines()[-1]


# parsing -----------------------------------------------------------------------------
@pytest.mark.parametrize("text,value", [
    ("1.5", 1.5), ("pi", math.pi), ("2pi", 2 * math.pi), ("pi/2", math.pi / 2),
    ("0.5*pi", 0.5 * math.pi), ("-pi", -math.pi), ("1e-3", 1e-3),
])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


def test_parse_grid_lists_and_ranges():
    assert parse_grid("1,2, 3") == [1.0, 2.0, 3.0]
    assert parse_grid("0:1:0.25") == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert parse_grid("0:pi:pi/2") == pytest.approx([0.0, math.pi / 2, math.pi])
    assert parse_grid("1:0:1") == []
    assert parse_grid("5, 0:0.2:0.1") == pytest.approx([5.0, 0.0, 0.1, 0.2])
    with pytest.raises(UsageError):
        parse_grid("0:1:0")
    with pytest.raises(UsageError):
        parse_grid("0:1")
    with pytest.raises(UsageError):
        parse_grid("abc")


# eval ---------------------------------------------------------------------------------
def test_eval_euclidean_example(capsys):
    code, out, _ = run(capsys, "eval", "--section", "sphere", "--n", "3", "--a", "0",
                       "--t", "1", "--r", "1", "--s", "1", "--dh", "0")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "t,r,s,d_h,kernel"
    assert len(lines) == 3 and lines[-1] == "status=ok"
    t, r, s, dh, k = (float(v) for v in lines[1].split(","))
    assert (t, r, s, dh) == (1.0, 1.0, 1.0, 0.0)
    assert k == pytest.approx(EUCLID_3, rel=1e-6)


def test_eval_full_precision_and_grid_size(capsys, tmp_path):
    path = tmp_path / "k.csv"
    code, out, _ = run(capsys, "eval", "--section", "circle", "--L", "3pi", "--a", "1",
                       "--t", "0.5,1", "--r", "0.5:1.5:0.5", "--s", "1", "--dh", "0,pi", "--out", str(path))
    assert code == 0 and status_line(out) == "status=ok"
    rows = path.read_text().splitlines()
    assert len(rows) == 1 + 2 * 3 * 1 * 2
    # 17 significant digits round-trip every value
    kernel = rows[1].split(",")[4]
    assert len(kernel.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) >= 15


def test_missing_section_is_usage_error(capsys):
    code, out, err = run(capsys, "eval", "--t", "1", "--r", "1", "--s", "1", "--dh", "0")
    assert code == 2
    assert "usage:" in err and "--section" in err
    assert status_line(out) == "status=usage"


def test_cone_tip_rejected(capsys):
    code, out, err = run(capsys, "eval", "--section", "sphere", "--n", "3", "--a", "0",
                         "--t", "1", "--r", "0,1", "--s", "1", "--dh", "0")
    assert code == 2
    assert "cone tip excluded" in err
    assert status_line(out) == "status=usage"
    assert "t,r,s" not in out


@pytest.mark.parametrize("argv", [
    ["eval", "--section", "sphere", "--t", "1", "--r", "1", "--s", "1"],
    ["eval", "--section", "sphere", "--t", "0", "--r", "1", "--s", "1", "--dh", "0"],
    ["eval", "--section", "sphere", "--t", "1", "--r", "1", "--s", "1", "--dh", "4"],
    ["eval", "--section", "sphere", "--a", "-1", "--t", "1", "--r", "1", "--s", "1", "--dh", "0"],
    ["eval", "--section", "circle", "--a", "0", "--t", "1", "--r", "1", "--s", "1", "--dh", "0"],
    ["eval", "--section", "matrix", "--t", "1", "--r", "1", "--s", "1", "--dh", "0"],
    ["eval", "--section", "torus"],
    ["eval", "--section", "sphere", "--tol", "2", "--t", "1", "--r", "1", "--s", "1", "--dh", "0"],
    ["verify", "--suite", "nope"],
    ["bogus"],
    [],
])
def test_usage_errors(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 2
    assert status_line(out) == "status=usage"


def test_truncation_failure_exit_code(capsys):
    code, out, err = run(capsys, "eval", "--section", "sphere", "--n", "3", "--a", "0", "--k-max", "3",
                         "--t", "1", "--r", "10", "--s", "10", "--dh", "0")
    assert code == 3
    assert "truncation failure at point t=1 r=10 s=10" in err
    assert status_line(out) == "status=fail"


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# Euclidean cone\nsection = sphere\nn = 3\na = 0\nt = 1\nr = 1\ns = 2\ndh = 0\n")
    code, out, _ = run(capsys, "eval", "--config", str(cfg))
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert float(row[2]) == 2.0
    assert float(row[4]) == pytest.approx(EUCLID_3 * math.exp(-0.25), rel=1e-6)
    code, out, _ = run(capsys, "eval", "--config", str(cfg), "--s", "1")
    row = out.splitlines()[1].split(",")
    assert float(row[2]) == 1.0
    assert float(row[4]) == pytest.approx(EUCLID_3, rel=1e-6)


def test_bad_config_file(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("section sphere\n")
    code, out, err = run(capsys, "eval", "--config", str(cfg))
    assert code == 2 and ":1:" in err
    code, out, _ = run(capsys, "eval", "--config", str(tmp_path / "missing.cfg"))
    assert code == 2 and status_line(out) == "status=usage"


def test_eval_is_deterministic(capsys):
    argv = ["eval", "--section", "sphere", "--n", "3", "--a", "-0.125", "--t", "0.5,2", "--r", "0.3,1.7",
            "--s", "0.9", "--dh", "0:pi:pi/3"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


# verify --------------------------------------------------------------------------------
def test_verify_subset(capsys, tmp_path):
    path = tmp_path / "v.json"
    code, out, _ = run(capsys, "verify", "--suite", "weber,euclidean,scaling", "--n", "3", "--out", str(path))
    lines = out.splitlines()
    assert code == 0
    assert [ln.split()[0] for ln in lines[:3]] == ["weber", "euclidean-n3", "scaling"]
    assert all("PASS" in ln for ln in lines[:3])
    assert lines[3] == "3/3 suites passed" and lines[4] == "status=ok"
    data = json.loads(path.read_text())
    assert [d["suite"] for d in data] == ["weber", "euclidean-n3", "scaling"]
    assert data[0]["worst"] < 1e-5 and data[1]["worst"] < 1e-6 and data[2]["worst"] < 1e-10


def test_verify_is_deterministic(capsys):
    assert run(capsys, "verify", "--suite", "scaling") == run(capsys, "verify", "--suite", "scaling")


# fitbound -------------------------------------------------------------------------------
def test_fitbound_euclidean(capsys, tmp_path):
    scan = tmp_path / "scan.csv"
    code, out, _ = run(capsys, "fitbound", "--section", "sphere", "--n", "3", "--a", "0", "--c-list", "4",
                       "--t", "0.5,1", "--r", "0.5,1,2", "--s", "1,3", "--dh", "0,1,pi", "--csv", str(scan))
    assert code == 0 and status_line(out) == "status=ok"
    report = json.loads(out[: out.rindex("status=")])
    assert set(report) == {"sigma", "c", "C", "worst_point", "max_ratio", "grid_size"}
    assert set(report["worst_point"]) == {"t", "r", "s", "dh"}
    assert report["sigma"] == 0.0 and report["c"] == 4.0 and report["grid_size"] == 36
    assert report["C"] == pytest.approx(EUCLID_3, rel=1e-8)
    assert scan.read_text().splitlines()[0] == "t,r,s,d_h,kernel,bound,ratio"


def test_fitbound_empty_grid(capsys):
    code, out, err = run(capsys, "fitbound", "--section", "sphere", "--n", "3", "--a", "0",
                         "--t", "1:0:1", "--r", "1", "--s", "1", "--dh", "0")
    assert code == 2 and "empty grid" in err
    assert status_line(out) == "status=usage"


def test_fitbound_rejects_bad_c_list(capsys):
    code, out, _ = run(capsys, "fitbound", "--section", "sphere", "--c-list", "0,4",
                       "--t", "1", "--r", "1", "--s", "1", "--dh", "0")
    assert code == 2


# lemma-check ----------------------------------------------------------------------------
def test_lemma_check_json(capsys):
    code, out, _ = run(capsys, "lemma-check", "--section", "sphere", "--n", "3", "--a", "-0.125",
                       "--z", "1e-4,1e-2,1,10", "--dh", "0,pi/2,pi")
    assert code == 0 and status_line(out) == "status=ok"
    report = json.loads(out[: out.rindex("status=")])
    assert all(math.isfinite(v) for v in report["constants"].values())


def test_lemma_check_rejects_bad_grid(capsys):
    code, out, _ = run(capsys, "lemma-check", "--section", "sphere", "--z", "0", "--dh", "0")
    assert code == 2 and status_line(out) == "status=usage"


# fd-compare -----------------------------------------------------------------------------
def test_fd_compare_rejects_sphere_and_coarse_grids(capsys):
    code, out, _ = run(capsys, "fd-compare", "--section", "sphere")
    assert code == 2
    code, out, err = run(capsys, "fd-compare", "--nr", "20", "--ntheta", "64")
    assert code == 2 and "too coarse" in err and status_line(out) == "status=usage"


# console entry point -----------------------------------------------------------------------
def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "conekernel.cli", "eval", "--section", "sphere",
                           "--t", "1", "--r", "1", "--s", "1", "--dh", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[-1] == "status=ok"
    assert float(proc.stdout.splitlines()[1].split(",")[4]) == pytest.approx(EUCLID_3, rel=1e-6)


def test_help_exits_cleanly(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and status_line(out) == "status=ok"
