import json

import pytest

from fractal_tops.cli import main


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACTAL_TOPS_OUT", str(tmp_path))
    return tmp_path


def test_top_command_writes_field_and_listing(out, capsys):
    assert main(["top", "--ifs", "ex4", "--depth", "3"]) == 0
    assert (out / "ex4_tops_depth3.png").stat().st_size > 0
    assert "5 top words" in capsys.readouterr().out


def test_attractor_and_blowup(out):
    assert main(["--resolution", "128", "attractor", "--ifs", "sierpinski"]) == 0
    assert (out / "sierpinski_attractor.png").exists()
    assert main(["--resolution", "128", "blowup", "--ifs", "sierpinski", "--depth", "2", "--push"]) == 0


def test_tiling_command(out):
    assert main(["tiling", "--ifs", "ex3", "--address", "(1)", "--level", "3", "--labels"]) == 0
    assert (out / "ex3_tiling_1_k3.svg").read_text().startswith("<?xml")
    assert len((out / "ex3_tiling_1_k3.tsv").read_text().splitlines()) > 1


def test_classify_exit_codes(out, capsys):
    assert main(["classify", "--ifs", "ex4", "--address", "(1)", "--level", "2"]) == 0
    assert main(["classify", "--ifs", "ex4", "--address", "(12)", "--level", "1"]) == 1
    assert "violation" in capsys.readouterr().out


def test_verify_exit_codes(out, capsys):
    assert main(["verify", "--suite", "osc", "--ifs", "dyadic"]) == 0
    assert main(["verify", "--suite", "theorem5", "--ifs", "ex4", "--address", "(12)", "--depth", "2"]) == 1
    text = capsys.readouterr().out
    assert "[FAIL]" in text and "[PASS]" in text


def test_rifs_command(out, capsys):
    assert main(["rifs", "--example", "dyadic", "--window", "16"]) == 0
    assert main(["rifs", "--example", "fib", "--window", "30", "--project"]) == 0
    assert "recurring gaps: 2" in capsys.readouterr().out
    assert (out / "fibonacci-strip_orbit.csv").exists()


def test_fastbasin_command(out):
    assert main(["--resolution", "128", "fastbasin", "--ifs", "sierpinski", "--depth", "2", "--render-resolution", "128"]) == 0
    assert (out / "sierpinski_fast_basin.png").exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["top", "--ifs", "ex4"],  # missing --depth
        ["top", "--ifs", "no_such_system", "--depth", "2"],
        ["top", "--ifs", "ex4", "--depth", "2", "--order", "3>1"],
        ["tiling", "--ifs", "ex4", "--level", "2", "--color-mode", "photo-sample"],
        ["verify", "--suite", "tops"],  # needs --ifs
        ["rifs", "--example", "dyadic", "--project"],
        ["nonsense"],
    ],
)
def test_usage_errors_exit_2(out, argv):
    assert main(argv) == 2


def test_config_file_and_unknown_keys(out, tmp_path):
    good = tmp_path / "c.json"
    good.write_text(json.dumps({"resolution_1d": 1024}))
    assert main(["--config", str(good), "top", "--ifs", "ex3", "--depth", "2"]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": 1}))
    assert main(["--config", str(bad), "top", "--ifs", "ex3", "--depth", "2"]) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "fractal-tops" in capsys.readouterr().out
