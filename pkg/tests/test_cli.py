import json
import subprocess
import sys


from tautrank.cli import main


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_rank_pn2(capsys):
    code, out, _ = run(capsys, "rank", "--model", "pn:2", "--section", "fermat")
    rep = json.loads(out)
    assert code == 0 and rep["rank"] == 2 and rep["stabilized"] and rep["schema"] == 1


def test_rank_g24_weight_zero(capsys):
    code, out, _ = run(capsys, "rank", "--model", "g2n:4", "--section", "cyclic", "--weight-zero")
    assert code == 0 and json.loads(out)["rank"] == 1


def test_rank_unstabilized_exit_code(capsys):
    code, out, _ = run(capsys, "rank", "--model", "pn:2", "--section", "fermat", "--dmax", "1")
    assert code == 2 and json.loads(out)["rank"] == "not stabilized"


def test_malformed_section(capsys):
    code, _, err = run(capsys, "rank", "--model", "pn:2", "--section", "x0^3 + q^3")
    assert code == 1 and "q^3" in err


def test_section_from_file(capsys, tmp_path):
    p = tmp_path / "f.txt"
    p.write_text("x0^2 + x1^2\n")
    code, out, _ = run(capsys, "rank", "--model", "pn:1", "--section", f"@{p}")
    assert code == 0 and json.loads(out)["rank"] == 1


def test_capability_exit_code(capsys):
    code, _, _ = run(capsys, "derham", "--model", "g2n:4", "--section", "cyclic")
    assert code == 3
    code, _, _ = run(capsys, "rank", "--model", "g2n:4", "--section", "fermat")
    assert code == 3


def test_straighten_text(capsys):
    code, out, _ = run(capsys, "straighten", "--n", "4", "--graph", "1-3,2-4", "--text")
    assert code == 0 and out.strip() == "1-2,3-4 + 1-4,2-3"


def test_nu_and_hilbert(capsys):
    assert json.loads(run(capsys, "nu", "--n", "4")[1])["nu"] == 204
    assert run(capsys, "hilbert", "--n", "4", "--d", "2", "--text")[1].strip() == "20"


def test_rank1(capsys):
    code, out, _ = run(capsys, "rank1", "--n", "4", "--graph", "1-2,2-3,3-4,1-4")
    rep = json.loads(out)
    assert code == 0 and rep["constant"] == "-1" and rep["verification"]["ok"]


def test_compare_pn2(capsys):
    code, out, _ = run(capsys, "compare", "--model", "pn:2", "--section", "fermat")
    rep = json.loads(out)
    assert code == 0 and rep["agree"]
    values = {k: v["value"] for k, v in rep["routes"].items()}
    assert values == {"coinvariants": 2, "derham": 2, "jacobian_oracle": 2, "nu_formula": 2}


def test_output_file(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = run(capsys, "nu", "--n", "3", "--output", str(out_file))
    assert code == 0 and out == ""
    assert json.loads(out_file.read_text())["nu"] == 21


def test_bad_bounds(capsys):
    code, _, _ = run(capsys, "rank", "--model", "pn:2", "--section", "fermat", "--dmax", "0")
    assert code == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tautrank", "nu", "--n", "2", "--text"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "2"
