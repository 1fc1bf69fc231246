import pytest

from podfront.cli import main
from podfront.core import fronts_equal, nadir, read_front
from podfront.metrics import hypervolume


@pytest.fixture
def data(tmp_path):
    inst, sc = tmp_path / "inst.json", tmp_path / "sc.json"
    rc = main(["gen", "--nodes", "8", "--scenarios", "3", "--seed", "1",
               "--out-instance", str(inst), "--out-scenarios", str(sc)])
    assert rc == 0
    return tmp_path, ["--instance", str(inst), "--scenarios", str(sc)]


def test_pipeline(data, capsys):
    tmp, io = data
    out = tmp / "f.csv"
    assert main(["frontier", *io, "--model", "m3", "--alpha", "0", "--method", "eps", "--out", str(out)]) == 0
    assert out.exists()
    assert main(["verify", *io, "--model", "m3", "--alpha", "0", "--front", str(out)]) == 0
    capsys.readouterr()
    assert main(["hv", "--front", str(out), "--ref", "nadir"]) == 0
    front = read_front(out)
    assert float(capsys.readouterr().out) == pytest.approx(hypervolume(front, nadir(front)))
    plot = tmp / "p.csv"
    assert main(["plotdata", "--front", str(out), "--out", str(plot)]) == 0
    lines = plot.read_text().splitlines()
    assert lines[0] == "kind,f1,f2" and lines[-1].startswith("bottom,") and lines[-2].startswith("top,0,")
    rep = tmp / "r.csv"
    assert main(["indicators", *io, "--model", "m3", "--alpha", "0", "--front", str(out), "--out", str(rep)]) == 0
    assert rep.read_text().splitlines()[0] == "f1,rrp,rws,rev,rvpi,rvss,rvpi_rel,rvss_rel"


def test_expectation_equals_cvar_at_zero(data):
    tmp, io = data
    assert main(["frontier", *io, "--model", "m1", "--out", str(tmp / "a.csv")]) == 0
    assert main(["frontier", *io, "--model", "m3", "--alpha", "0", "--out", str(tmp / "b.csv")]) == 0
    assert fronts_equal(read_front(tmp / "a.csv"), read_front(tmp / "b.csv"))


@pytest.mark.parametrize("method", ["eps", "bb", "mat"])
def test_methods_and_reproducibility(data, method):
    tmp, io = data
    args = ["frontier", *io, "--model", "m3", "--alpha", "0.5", "--method", method]
    assert main(args + ["--out", str(tmp / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp / "b.csv")]) == 0
    assert (tmp / "a.csv").read_bytes() == (tmp / "b.csv").read_bytes()
    assert main(["verify", *io, "--model", "m3", "--alpha", "0.5", "--front", str(tmp / "a.csv")]) == 0


def test_gen_is_deterministic(tmp_path):
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        main(["gen", "--nodes", "10", "--scenarios", "4", "--seed", "3",
              "--out-instance", str(tmp_path / d / "i.json"), "--out-scenarios", str(tmp_path / d / "s.json")])
    for f in ("i.json", "s.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_verify_rejects_a_tampered_front(data, capsys):
    tmp, io = data
    out = tmp / "f.csv"
    main(["frontier", *io, "--model", "m2", "--out", str(out)])
    lines = out.read_text().splitlines()
    f1, f2, bits = lines[1].split(",")
    lines[1] = f"{f1},{float(f2) - 1},{bits}"
    out.write_text("\n".join(lines) + "\n")
    assert main(["verify", *io, "--model", "m2", "--front", str(out)]) == 1


def test_usage_errors(data, capsys):
    tmp, io = data
    assert main(["frontier", *io, "--model", "m1", "--alpha", "0.5"]) == 2
    assert main(["frontier", *io, "--model", "m3"]) == 2
    assert main(["frontier", *io, "--model", "m3", "--alpha", "1.0"]) == 2
    assert main(["nosuch"]) == 2
    assert main(["hv", "--front", str(tmp / "missing.csv")]) == 2
    assert main(["frontier", "--model", "m1"]) == 2


def test_config_file_and_flag_precedence(data):
    tmp, io = data
    cfg = tmp / "run.cfg"
    cfg.write_text("# defaults\nmodel = m3\nalpha = 0.5\nmethod = bb\n")
    assert main(["frontier", "--config", str(cfg), *io, "--out", str(tmp / "a.csv")]) == 0
    assert main(["frontier", *io, "--model", "m3", "--alpha", "0.5", "--out", str(tmp / "b.csv")]) == 0
    assert fronts_equal(read_front(tmp / "a.csv"), read_front(tmp / "b.csv"))
    assert main(["frontier", "--config", str(cfg), *io, "--model", "m2", "--out", str(tmp / "c.csv")]) == 2
    cfg.write_text("model = m2\n")
    assert main(["frontier", "--config", str(cfg), *io, "--out", str(tmp / "c.csv")]) == 0
    assert main(["frontier", "--config", str(tmp / "nope.cfg"), *io]) == 2


def test_solver_failure_exit_code(data, monkeypatch):
    tmp, io = data
    monkeypatch.setenv("PR_BACKEND", "/nonexistent/solver {mps} {sol}")
    assert main(["frontier", *io, "--model", "m1", "--out", str(tmp / "x.csv")]) == 1


def test_backend_command_from_config(data, shim_command):
    tmp, io = data
    cfg = tmp / "ext.cfg"
    cfg.write_text(f"backend.command = {shim_command}\n")
    assert main(["frontier", "--config", str(cfg), *io, "--model", "m2", "--out", str(tmp / "ext.csv")]) == 0
    assert main(["frontier", *io, "--model", "m2", "--backend", "builtin", "--out", str(tmp / "own.csv")]) == 0
    assert fronts_equal(read_front(tmp / "ext.csv"), read_front(tmp / "own.csv"))
