import json

import pytest

from selfsim import __version__
from selfsim.cli import EXIT_BUDGET, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, main
from selfsim.core import parse_presentation
from selfsim.presets import Z2M1, Z2M2


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_act_and_restrict(capsys):
    assert run(capsys, "act", "--preset", "adding-machine", "--word", "tau", "--input", "110")[:2] == (0, "001\n")
    assert run(capsys, "restrict", "--preset", "z2m2", "--word", "b", "--input", "1")[:2] == (0, "a\n")


def test_eq(capsys):
    assert run(capsys, "eq", "--preset", "z2m2", "--word", "a a")[1] == "identity\n"
    assert run(capsys, "eq", "--preset", "z2m1", "--word", "a b")[1] == "not identity\n"
    assert run(capsys, "eq", "--preset", "z2m1", "--word", "a b", "--other", "b a")[1] == "not equal\n"
    assert run(capsys, "eq", "--preset", "z2m2", "--word", "a", "--other", "a^-1")[1] == "equal\n"


def test_level_perm(capsys):
    args = ("level-perm", "--preset", "adding-machine", "--word", "tau", "--depth", "2")
    assert run(capsys, *args)[1] == "2 3 1 0\n"
    assert run(capsys, *args, "--cycles")[1] == "(0 2 1 3)\n"


def test_recursion_file(capsys, tmp_path):
    path = tmp_path / "z2m1.grp"
    path.write_text(Z2M1)
    assert run(capsys, "act", "--recursion", str(path), "--word", "a", "--input", "00")[1] == "10\n"


def test_nucleus_and_moore(capsys):
    code, out, _ = run(capsys, "nucleus", "--preset", "adding-machine")
    assert code == 0 and out.startswith("nucleus: 3 elements")
    code, out, _ = run(capsys, "moore", "--preset", "z2m2")
    assert code == 0 and out.startswith("digraph") and out.count("->") == 6


def test_budget_exit_code(capsys):
    code, _, err = run(capsys, "nucleus", "--preset", "z2m1", "--max-size", "3")
    assert code == EXIT_BUDGET and "budget" in err


def test_virtual_endomorphism_commands(capsys):
    assert run(capsys, "vend-act", "--preset", "dragon", "--element", "1,0", "--input", "0110")[1] == "1110\n"
    code, out, _ = run(capsys, "vend-closure", "--preset", "adding-machine")
    assert code == 0 and parse_presentation(out).ngens == 1
    assert run(capsys, "vend-faithful", "--preset", "dragon")[1].startswith("faithful")
    out = run(capsys, "vend-faithful", "--preset", "lattice", "--matrix", "2,0;0,1")[1]
    assert out.startswith("unfaithful witness (0,1)")
    assert run(capsys, "vend-faithful", "--preset", "adding-machine", "--probe", "8")[1].startswith("4\n")


def test_img_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "img-lambda", "--c", "0,0", "--depth", "1")
    assert out.splitlines() == ["word,re,im", ",1.0,0.0", "0,1.0,0.0", "1,-1.0,0.0"]
    out = run(capsys, "img-perms", "--c", "-1,0", "--depth", "2")[1]
    assert "a level 2: 2 3 0 1" in out
    geo = tmp_path / "geo.json"
    rec = tmp_path / "z2m1.grp"
    rec.write_text(Z2M1)
    code, out, _ = run(capsys, "img-verify", "--c", "-1,0", "--recursion", str(rec), "--depth", "6",
                       "--dump-geometry", str(geo))
    assert code == 0 and out.startswith("MATCH")
    assert [g["name"] for g in json.loads(geo.read_text())["generators"]] == ["a", "b"]
    code, out, _ = run(capsys, "img-verify", "--c", "-1,0", "--recursion", str(rec), "--depth", "6",
                       "--geometry", str(geo))
    assert code == 0 and out.startswith("MATCH")


def test_img_verify_mismatch(capsys, tmp_path):
    rec = tmp_path / "z2m2.grp"
    rec.write_text(Z2M2)
    code, out, _ = run(capsys, "img-verify", "--c", "-1,0", "--recursion", str(rec), "--depth", "6")
    assert code == 1 and out.startswith("MISMATCH")


def test_img_infer_output_parses(capsys):
    code, out, _ = run(capsys, "img-infer", "--c", "-1,0", "--depth", "6")
    assert code == 0
    assert parse_presentation(out) == parse_presentation(Z2M1)


def test_img_domain_error(capsys):
    code, _, err = run(capsys, "img-lambda", "--c", "1,0", "--depth", "2")
    assert code == EXIT_DOMAIN and err.startswith("error:")


def test_schreier_and_equiv(capsys):
    out = run(capsys, "schreier", "--preset", "z2m2", "--depth", "2", "--format", "csv")[1]
    assert out.splitlines()[0] == "src,dst,gen" and len(out.splitlines()) == 9
    assert run(capsys, "schreier", "--preset", "z2m2", "--depth", "2")[1].startswith("digraph")
    assert run(capsys, "equiv", "--preset", "adding-machine", "--seq", "10:1", "--seq", "01:0")[1] == "equivalent\n"
    assert run(capsys, "equiv", "--preset", "adding-machine", "--seq", "0:0", "--seq", "1:0")[1] == "not equivalent\n"


def test_equiv_needs_two_sequences(capsys):
    with pytest.raises(SystemExit) as info:
        main(["equiv", "--preset", "adding-machine", "--seq", "1:0"])
    assert info.value.code == EXIT_USAGE


def test_tile_commands(capsys, tmp_path):
    out = run(capsys, "tile", "--preset", "dragon", "--depth", "1")[1]
    assert out.splitlines() == ["x1,x2,word", "0.0,0.0,0", "-0.5,0.5,1"]
    code, out, _ = run(capsys, "tile-check", "--preset", "dragon", "--depth", "8")
    assert code == 0 and "OK" in out
    code, _, _ = run(capsys, "tile-check", "--preset", "dragon", "--depth", "8", "--eps", "1e-6")
    assert code == 1
    target = tmp_path / "tile.csv"
    assert run(capsys, "tile", "--preset", "dragon", "--depth", "3", "--out", str(target))[0] == 0
    assert len(target.read_text().splitlines()) == 9


def test_usage_errors(capsys):
    for argv in (["bogus"], ["act", "--preset", "z2m1"], ["level-perm", "--preset", "z2m1", "--word", "a", "--depth", "x"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_unknown_preset_is_domain_error(capsys):
    assert run(capsys, "act", "--preset", "nope", "--word", "a", "--input", "0")[0] == EXIT_DOMAIN


def test_info_flags(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0 and __version__ in capsys.readouterr().out
    code, out, _ = run(capsys, "--formats")
    assert code == EXIT_OK and "alphabet" in out
    assert "adding-machine" in run(capsys, "presets", "list")[1]


def test_output_is_deterministic(capsys):
    args = ("rho", "--preset", "z2m1", "--seed", "3")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]
