import json
import os

import pytest

from treelogic.cli import infer_signature, main

HERE = os.path.dirname(__file__)
DATA = os.path.join(HERE, "data")
GOLDEN = os.path.join(HERE, "golden")
DESC3 = os.path.join(DATA, "desc3.f")
RULE = "(and (forall x (implies (A x) (exists y (and (child x y) (not (A y)))))) (exists x (A x)))"

# name -> argv; every case runs with --json and is compared to tests/golden/<name>.json
GOLDEN_CASES = {
    "parse": ["parse", "--formula", DESC3],
    "nf": ["nf", "--formula", "(forall x (count= 1 y (child x y)))"],
    "check_true": ["check", "--formula", DESC3, "--tree", os.path.join(DATA, "star3.tree")],
    "check_false": ["check", "--formula", DESC3, "--tree", os.path.join(DATA, "star2.tree")],
    "bounds_c2": ["bounds", "--formula", "(forall x (count>= 1 y true))"],
    "bounds_fo2": ["bounds", "--formula", "(forall x (implies (A x) (exists y (child x y))))"],
    "oracle": ["oracle", "--formula", DESC3, "--max-nodes", "4"],
    "translate": ["translate", "--in", "(count>= 1 y (child x y))"],
    "sat_c2": ["sat-c2", "--formula", RULE, "--max-depth", "6", "--max-degree", "4"],
    "sat_fo2": ["sat-fo2", "--formula", "(exists x (A x))"],
    "diff": ["diff", "--suite", "types,cut", "--cases", "3", "--seed", "7"],
}


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _stable(payload):
    # wall-clock time is the only field allowed to vary between runs
    if isinstance(payload, dict):
        return {k: _stable(v) for k, v in payload.items() if k != "seconds"}
    return payload


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_json_matches_golden(name, capsys):
    code, out, _ = run(GOLDEN_CASES[name] + ["--json"], capsys)
    got = _stable(json.loads(out))
    path = os.path.join(GOLDEN, f"{name}.json")
    if os.environ.get("TREELOGIC_REGEN_GOLDEN"):
        with open(path, "w") as fh:
            json.dump({"exit": code, "output": got}, fh, indent=1, sort_keys=True)
    with open(path) as fh:
        want = json.load(fh)
    assert {"exit": code, "output": got} == want


def test_exit_codes(capsys):
    assert run(["oracle", "--formula", DESC3, "--max-nodes", "3"], capsys)[0] == 1
    assert run(["sat-c2", "--formula", "(forall x (count>= 1 y (child x y)))", "--max-depth", "2",
                "--max-degree", "2"], capsys)[0] == 1
    assert run(["parse", "--formula", "(and (A x)"], capsys)[0] == 2
    assert run(["nosuchcommand"], capsys)[0] == 2
    assert run(["sat-c2", "--formula", "(exists y (R x y))"], capsys)[0] == 2
    cycle = ("(and (forall x (forall y (implies (= x y) (or (A x) (B x))))) "
             "(and (forall x (implies (A x) (exists y (and (child x y) (B y))))) "
             "(forall x (implies (B x) (exists y (and (child x y) (A y)))))))")
    code, _, _ = run(["sat-fo2", "--formula", cycle, "--max-depth", "6", "--max-degree", "6",
                      "--max-fset", "6", "--timeout-secs", "0.3"], capsys)
    assert code in (1, 3)


def test_sat_writes_witness_tree(capsys):
    code, out, _ = run(GOLDEN_CASES["sat_c2"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "SAT" and lines[1].startswith("n=")


def test_check_prints_truth(capsys):
    assert run(GOLDEN_CASES["check_true"], capsys)[1].strip() == "true"
    assert run(GOLDEN_CASES["check_false"], capsys)[1].strip() == "false"


def test_signature_file_and_inference(capsys):
    code, out, _ = run(["parse", "--formula", "(exists x (A x))", "--sig", os.path.join(DATA, "a.sig"),
                        "--json"], capsys)
    assert code == 0 and json.loads(out)["signature"] == "unary: A\nbinary:\n"
    sig = infer_signature("(and (B x) (R x y) (child x y) (= x y) (A y))")
    assert sig.unary == ("B", "A") and sig.binary == ("R",)


def test_sound_mode_warns(capsys):
    code, _, err = run(["sat-c2", "--formula", "(forall x (forall y true))", "--mode", "sound"], capsys)
    assert code == 0 and "warning" in err


def test_shrink(capsys, tmp_path):
    tree = tmp_path / "path.tree"
    tree.write_text("n=5\n-1 :\n0 :\n1 :\n2 :\n3 :\n")
    code, out, _ = run(["shrink", "--formula", "(forall x (forall y true))", "--tree", str(tree),
                        "--json"], capsys)
    payload = json.loads(out)
    assert code == 0 and payload["nodes_after"] < payload["nodes_before"]
    assert run(["shrink", "--formula", DESC3, "--tree", str(tree)], capsys)[0] == 2


def test_translate_check(capsys):
    code, out, _ = run(["translate", "--in", DESC3, "--check-upto", "5"], capsys)
    assert code == 0 and "0 disagreements" in out


def test_diff_output_independent_of_jobs(capsys):
    argv = ["diff", "--suite", "types,translate", "--cases", "4", "--json"]
    one = run(argv + ["--jobs", "1"], capsys)[1]
    three = run(argv + ["--jobs", "3"], capsys)[1]
    assert one == three
