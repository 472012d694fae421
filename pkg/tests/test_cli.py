import io
import json

import pytest

from numetric import cli
from numetric import plants as pl


@pytest.fixture
def files(tmp_path):
    made = {
        "zero": pl.constant([[0.0]]),
        "one": pl.constant([[1.0]]),
        "two": pl.constant([[2.0]]),
        "invz": pl.siso((1.0,), (0.0, 1.0)),
        "p1": pl.siso((1.1,), (0.0, 1.0)),
    }
    out = {}
    for name, P in made.items():
        path = tmp_path / f"{name}.json"
        pl.save_plant(P, path)
        out[name] = str(path)
    return out


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(["--grid", "512", *argv], out, err)
    return code, out.getvalue(), err.getvalue()


def test_dist(files):
    code, out, _ = run("dist", files["zero"], files["one"])
    assert code == 0 and "0.707107" in out
    code, out, _ = run("dist", files["invz"], files["invz"])
    assert code == 0 and "0.000000" in out
    code, out, _ = run("dist", files["zero"], files["invz"], "--format", "json")
    doc = json.loads(out)
    assert doc["branch"] == "DegenerateOne" and doc["value"] == 1.0


def test_dist_malformed(files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"algebra": "disk",')
    code, _, err = run("dist", str(bad), files["one"])
    assert code == 2 and "offset" in err


def test_certify(files):
    code, out, _ = run("certify", files["invz"], files["two"], files["p1"])
    assert code == 0 and "0.270746" in out
    code, _, _ = run("certify", files["zero"], files["zero"], files["invz"])
    assert code == 1
    code, _, err = run("certify", files["zero"], files["zero"], "missing.json")
    assert code == 2 and "missing.json" in err


def test_margin_and_stabilizes(files):
    code, out, _ = run("margin", files["invz"], files["two"], "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "mu,stabilizes,h_norm"
    assert run("stabilizes", files["invz"], files["two"])[0] == 0
    assert run("stabilizes", files["invz"], files["zero"])[0] == 1


def test_sweep(files):
    code, out, _ = run("sweep", files["zero"], files["one"], "--values", "0,0.5,1", "--format", "csv")
    assert code == 0
    rows = out.split("\n")
    assert rows[0] == "param,d_nu,mu,branch"
    assert [r.split(",")[1] for r in rows[1:4]] == ["0", "0.4472135955", "0.707106781187"]
    assert "\r" not in out and out.endswith("\n")
    assert run("sweep", files["zero"], files["one"], "--values", "")[0] == 2
    assert run("sweep", files["zero"], files["one"], "--range", "0", "1", "0")[0] == 2


def test_axioms_directory_and_random(files, tmp_path):
    code, out, _ = run("axioms", str(tmp_path), "--format", "csv")
    assert code == 0 and out.startswith("check,worst,limit\n")
    code, out, _ = run("axioms", "--random", "6", "--seed", "7")
    assert code == 0 and "result      pass" in out
    assert run("axioms")[0] == 2


def test_global_flags_after_command(files):
    a = run("dist", files["zero"], files["one"], "--format", "json")[1]
    b = run("--format", "json", "dist", files["zero"], files["one"])[1]
    assert a == b


def test_env_grid(files, monkeypatch):
    monkeypatch.setenv("NUMETRIC_GRID", "256")
    out = io.StringIO()
    cli.run(["dist", files["zero"], files["one"], "--format", "json"], out, io.StringIO())
    assert json.loads(out.getvalue())["grid_size_used"] == 256
    monkeypatch.setenv("NUMETRIC_GRID", "300")
    assert cli.run(["dist", files["zero"], files["one"]], io.StringIO(), io.StringIO()) == 2


def test_bad_grid_flag(files):
    with pytest.raises(SystemExit):
        cli.run(["--grid", "100", "dist", files["zero"], files["one"]], io.StringIO(), io.StringIO())


def test_parallel_is_byte_identical(files):
    args = ("sweep", files["zero"], files["invz"], "--range", "0", "2", "5", "--format", "csv")
    assert run(*args)[1] == run(*args, "--parallel")[1]
