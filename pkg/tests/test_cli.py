import json

import pytest

from shredkit.cli import main


def test_compile_writes_three_files(fixtures, tmp_path):
    assert main(["compile", str(fixtures / "fnl.kb"), "-o", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["constraints.gc2", "instance.kb", "report.json"]
    json.loads((tmp_path / "report.json").read_text())


def test_compile_non_hnl_reports_cycle(fixtures, capsys):
    assert main(["compile", str(fixtures / "non_hnl.kb"), "--json"]) == 1
    captured = capsys.readouterr()
    err = json.loads(captured.err or captured.out)
    assert err["error"] == "not-hnl"
    assert "R(x,y)" in err["detail"]["berge_cycle"]


def test_oracle_json(fixtures, capsys):
    assert main(["oracle", str(fixtures / "oracle.kb"), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "entailed"


def test_classify_text(fixtures, capsys):
    assert main(["classify", str(fixtures / "classify.kb")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("rule1: frontier-one,hnl,fnl")


def test_missing_file_is_an_error(tmp_path, capsys):
    assert main(["shred", str(tmp_path / "nope.kb")]) == 1


@pytest.mark.parametrize("argv", [["bogus"], ["oracle"], ["oracle", "x.kb", "--max-size", "0"], ["gadget", "nope", "x"]])
def test_usage_errors_exit_two(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 2
