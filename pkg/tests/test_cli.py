import io
import json
from pathlib import Path

import pytest

from dgbench import cli
from dgbench.errors import ParseError

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

MINIMAL = """dgbench-instance 1
[ring]
ring IntMod 4
[modules]
module R free 1
[complexes]
complex A 0:R 1:R
  d 0 [2]
[tasks]
task h cohomology complex=A hi=1 lo=0
"""


def write(tmp_path, text, name="x.dgb"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.mark.parametrize("text,line", [
    ("nonsense\n", 1),
    ("dgbench-instance 1\n[ring]\nring Foo\n", 3),
    ("dgbench-instance 1\n[ring]\nring IntMod 4\n[modules]\nmodule R free x\n", 5),
    ("dgbench-instance 1\n[ring]\nring IntMod 4\n[complexes]\ncomplex A 0:Missing\n", 5),
    ("dgbench-instance 1\n[ring]\nring IntMod 4\n[modules]\nmodule R free 1\n[complexes]\n"
     "complex A 0:R 1:R\n  d 0 [1 1]\n", 8),
    ("dgbench-instance 1\n[ring]\nring IntMod 4\n[tasks]\ntask t cohomology complex=A\n", 5),
    ("dgbench-instance 1\n[tasks]\n[ring]\nring IntMod 4\n", 3),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as err:
        cli.parse(text)
    assert err.value.line == line


def test_parse_error_exit_code(tmp_path, capsys):
    assert cli.main(["check", write(tmp_path, "dgbench-instance 1\n[ring]\nring Foo\n")]) == 2
    assert "line 3" in capsys.readouterr().err


def test_usage_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as err:
        cli.main(["frobnicate"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        cli.main(["examples", "not-an-example"])
    assert err.value.code == 2


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.dgb")), ids=lambda p: p.name)
def test_serialize_round_trip(path):
    inst = cli.parse(path.read_text())
    canon = cli.serialize(inst)
    assert cli.serialize(cli.parse(canon)) == canon


def test_serialize_normalizes_spacing_and_entries():
    messy = MINIMAL.replace("  d 0 [2]", "  d   0   [ 6 ]").replace("hi=1 lo=0", "lo=0   hi=1")
    assert cli.serialize(cli.parse(messy)) == cli.serialize(cli.parse(MINIMAL))


def test_check_reports_bad_differential(tmp_path, capsys):
    text = MINIMAL.replace("complex A 0:R 1:R\n  d 0 [2]", "complex A 0:R 1:R 2:R\n  d 0 [1]\n  d 1 [1]")
    assert cli.main(["check", write(tmp_path, text)]) == 1
    assert "FAIL complex A" in capsys.readouterr().out


def test_run_report_shape_and_exit_code(tmp_path):
    out, err = io.StringIO(), io.StringIO()
    code = cli.cmd_run(write(tmp_path, MINIMAL), out=out, err=err)
    rep = json.loads(out.getvalue())
    assert code == 0 and rep["exit_code"] == 0
    assert rep["format"] == cli.REPORT_FORMAT
    t = rep["tasks"][0]
    assert t["status"] == "pass"
    assert t["result"]["cohomology"]["0"] == {"iso_type": [2], "text": "Z/2"}


def test_run_selects_task(tmp_path):
    text = MINIMAL + "task g genwit complex=A\n"
    rep, code = cli.build_report(write(tmp_path, text), task="g")
    assert [t["name"] for t in rep["tasks"]] == ["g"]
    with pytest.raises(ParseError):
        cli.build_report(write(tmp_path, text), task="missing")


@pytest.mark.parametrize("name,code", [
    ("orthogonality-violation.dgb", 1),
    ("inconclusive.dgb", 3),
    ("basics-integers.dgb", 0),
])
def test_exit_codes_on_corpus(name, code):
    _, got = cli.build_report(str(CORPUS / name))
    assert got == code


@pytest.mark.parametrize("name", ["zigzag.dgb", "quotient-fields.dgb", "recoll-fpe-p2.dgb"])
def test_reports_are_byte_identical(name):
    a, _ = cli.build_report(str(CORPUS / name))
    b, _ = cli.build_report(str(CORPUS / name))
    assert cli.dump_report(a) == cli.dump_report(b)


@pytest.mark.parametrize("name", cli.EXAMPLES)
def test_examples_are_valid_and_canonical(name, tmp_path):
    path = str(tmp_path / f"{name}.dgb")
    assert cli.main(["examples", name, "--p", "3", "--out", path]) == 0
    text = Path(path).read_text()
    assert cli.serialize(cli.parse(text)) == text


def test_examples_reject_bad_parameters(tmp_path):
    assert cli.main(["examples", "recoll-zp2", "--p", "4", "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["examples", "recoll-zp2", "--window", "4", "--out", str(tmp_path / "x")]) == 2


def test_recoll_report_states_scope():
    rep, code = cli.build_report(str(CORPUS / "recoll-zp2-p3.dgb"))
    assert code == 0
    end = next(t for t in rep["tasks"] if t["kind"] == "interior-end")
    assert end["result"]["stable"]
    assert end["result"]["interior_cohomology"]["0"]["iso_type"] == [3]
    assert "not decided" in end["result"]["scope"].lower()
