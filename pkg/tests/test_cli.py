import json
import subprocess
import sys

import pytest

from catecon.cli import dispatch, main
from catecon.report import Report

from conftest import DATA


def run(*argv):
    rep, _ = dispatch([str(a) for a in argv])
    return rep


def test_sheaf_check_example(capsys):
    assert main(["sheaf-check", str(DATA / "example1.json")]) == 0
    out = capsys.readouterr().out
    assert "sheaf-check: PASS" in out
    table = run("sheaf-check", DATA / "example1.json").sections["section_table"]["detail"]
    header, *rows = [line.split() for line in table.splitlines()]
    cells = {(r[0], name): mark for r in rows for name, mark in zip(header[1:], r[1:])}
    assert len(cells) == 12
    expected = {"s0": {"a1", "a2"}, "s1": {"a1", "a2"}, "s2": {"b1", "b2"}}
    assert all((mark == "X") == (name in expected[pid]) for (pid, name), mark in cells.items())


def test_game_eq_example():
    rep = run("game-eq", DATA / "bos.json")
    assert rep.passed
    assert rep.sections["equilibria"]["detail"] == ["1=Bx, 2=Bx", "1=Bll, 2=Bll"]


def test_law_check_example():
    rep = run("law-check", "--prop", "3", "--seed", 42, "--trials", 200)
    assert rep.passed and rep.exit_code == 0


@pytest.mark.parametrize("argv", [
    ["solve-problem", DATA / "s1.json"],
    ["game-compose", DATA / "bos.json", DATA / "pd.json"],
    ["game-compose", DATA / "bos.json", DATA / "pd.json", "--combinator", "sum"],
    ["law-check", "--prop", "lax", "--seed", 1, "--trials", 20],
    ["law-check", "--prop", "poly", "--seed", 1, "--trials", 2],
    ["poly-hom", DATA / "poly_p.json", DATA / "poly_q.json"],
    ["coalg-run", DATA / "flipflop.json", "--steps", 4],
    ["pa-solve", DATA / "pa_quasilinear.json"],
    ["mech-design", DATA / "mechanisms.json"],
])
def test_every_verb_passes_on_bundled_data(argv):
    rep = run(*argv)
    assert rep.exit_code == 0, rep.to_text()


def test_product_compose_reports_positivity_gap():
    rep = run("game-compose", DATA / "bos.json", DATA / "pd.json")
    assert rep.sections["equilibria/positivity_precondition"]["passed"] is None
    assert rep.sections["equilibria/equal"]["passed"] is True


def test_missing_file_is_an_input_error(tmp_path):
    rep = run("game-eq", tmp_path / "absent.json")
    assert rep.status == "error" and rep.exit_code == 2
    assert rep.witnesses


def test_schema_violation_is_an_input_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"id": "g", "players": ["1"]}))
    assert run("game-eq", bad).exit_code == 2
    bad.write_text("{not json")
    assert run("pa-solve", bad).exit_code == 2


def test_verification_failure_exits_one(tmp_path):
    pa = json.loads((DATA / "pa_quasilinear.json").read_text())
    pa["agent_utility"] = "v"
    f = tmp_path / "pa.json"
    f.write_text(json.dumps(pa))
    rep = run("pa-solve", f)
    assert rep.status == "fail" and rep.exit_code == 1
    assert rep.witnesses


def test_structured_output_round_trips(capsys):
    code = main(["mech-design", str(DATA / "mechanisms.json"), "--format", "structured"])
    data = json.loads(capsys.readouterr().out)
    rep = Report.from_dict(data)
    assert rep.exit_code == code == 0
    assert rep.to_dict() == data


def test_structured_output_is_deterministic(capsys):
    argv = ["law-check", "--prop", "lax", "--seed", "9", "--trials", "15", "--format", "structured"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "catecon.cli", "game-eq", str(DATA / "pd.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "2=D, 3=D" in proc.stdout


def test_seed_is_required():
    with pytest.raises(SystemExit) as exc:
        dispatch(["law-check", "--prop", "3"])
    assert exc.value.code == 2
