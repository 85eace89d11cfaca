import io
import json
import re

import pytest

from decnet import extract_policy, mev, query_ve
from decnet.cli import load_problem, load_text, run_cli

NUMBER = re.compile(r"-?\d+\.\d+")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_infer_example():
    code, out, _ = run("infer", "fig3", "--target", "A=T", "--evidence", "C=T")
    assert code == 0
    assert out == "P(A=T | C=T) = 0.615385\n"


@pytest.mark.parametrize("engine", ["ve", "enum"])
def test_infer_full_distribution(engine, fig1):
    code, out, _ = run("infer", "fig1", "--target", "A", "-e", "C=F", "--engine", engine)
    assert code == 0
    assert f"{query_ve(fig1, 'A', {'C': 'F'})['T']:.6f}" in out


def test_solve_example():
    code, out, _ = run("solve", "fig2", "--evidence", "C=T")
    assert code == 0
    assert out.splitlines()[0] == "decision D1 = Action1, MEV = 2.076923"
    assert "Action2: 0.846154" in out


def test_solve_hypothetical():
    code, out, _ = run("solve", "fig2", "--hypothetical", "C=F")
    assert code == 0 and out.startswith("decision D1 = Action2, MEV = 4.377049")


def test_transform_example():
    code, out, _ = run("transform", "fig2")
    assert code == 0
    assert out.rstrip().splitlines()[-1] == "# k1 = 10, k2 = 3, L = ((D1 (C) (C)))"
    fixture = [line for line in load_text("fig3").splitlines()
               if not line.startswith("#") and not line.startswith("network")]
    ours = [line for line in out.splitlines()
            if not line.startswith("#") and not line.startswith("network")]
    assert "\n".join(ours).strip() == "\n".join(fixture).strip()


def test_transform_output_parses():
    from decnet import parse_document, validate_bn
    _, out, _ = run("transform", "fig2")
    assert validate_bn(parse_document(out)).ok


def test_policy_default_is_contingent():
    code, out, _ = run("policy", "fig2")
    assert code == 0
    assert "C=T -> Action1 (EV 2.076923)" in out
    assert "C=F -> Action2 (EV 4.377049)" in out
    _, current, _ = run("policy", "fig2", "--current")
    assert "(always) -> Action2 (EV 3.000000)" in current


def test_validate():
    assert run("validate", "fig1")[0] == 0
    assert run("validate", "fig2")[1] == "diagram fig2: ok\n"


def test_sample_defaults_are_reproducible():
    a = run("sample", "fig3", "--target", "V=T", "-e", "D1=Action1", "-e", "C=T")
    b = run("sample", "fig3", "--target", "V=T", "-e", "D1=Action1", "-e", "C=T", "--seed", "0")
    assert a == b and a[0] == 0
    assert "accepted" in a[1]


def test_sample_solve():
    code, out, _ = run("sample-solve", "fig2", "-e", "C=T")
    assert code == 0
    assert out.startswith("decision D1 = Action1")
    assert "separated" in out


def test_sample_solve_not_separated(tmp_path):
    # both alternatives have the same value function
    path = tmp_path / "flat.net"
    path.write_text(load_text("fig2").replace("Action2, T -> -3", "Action2, T -> 4")
                    .replace("Action2, F -> 7", "Action2, F -> -1"))
    code, out, _ = run("sample-solve", str(path), "-e", "C=T", "--max-samples", "4096")
    assert code == 4
    assert "NOT separated" in out


@pytest.mark.parametrize("argv, code", [
    (["bogus"], 1),
    (["infer", "fig1"], 1),                                           # --target missing
    (["infer", "fig1", "--target", "A", "-e", "C=T", "-e", "C=F"], 1),  # bound twice
    (["infer", "fig1", "--target", "A", "-e", "C"], 1),               # not NAME=STATE
    (["solve", "fig2", "--hypothetical", "A=T"], 1),                  # not a predecessor
    (["infer", "fig1", "--target", "A", "-e", "C=X"], 2),             # unknown state
    (["infer", "fig1", "--target", "Q"], 2),                          # unknown node
    (["infer", "missing-file.net", "--target", "A"], 1),
    (["transform", "fig1"], 1),                                       # not a diagram
    (["sample", "fig1", "--target", "A=T", "-n", "0"], 1),
])
def test_exit_codes(argv, code):
    assert run(*argv)[0] == code


def impossible_fixture(tmp_path):
    path = tmp_path / "det.net"
    path.write_text("network det\n"
                    "chance A { states: T, F ; cpt { -> 0.5, 0.5 ; } }\n"
                    "chance B { states: T, F ; parents: A ; cpt { T -> 1, 0 ; F -> 0, 1 ; } }\n"
                    "chance C { states: T, F ; parents: B ; cpt { T -> 1, 0 ; F -> 0, 1 ; } }\n")
    return str(path)


def test_impossible_evidence_exit_codes(tmp_path):
    path = impossible_fixture(tmp_path)
    code, _, err = run("infer", path, "--target", "C", "-e", "A=T", "-e", "B=F")
    assert code == 3 and "impossible" in err
    code, _, err = run("sample", path, "--target", "C=T", "-e", "A=T", "-e", "B=F", "-n", "100")
    assert code == 4
    assert run("infer", path, "--target", "C", "-e", "A=T")[0] == 0


def test_parse_error_exit_code(tmp_path):
    path = tmp_path / "bad.net"
    path.write_text("network x\nchance A { states: T, F ; cpt { -> 0.5 ; } }\n")
    code, _, err = run("validate", str(path))
    assert code == 2 and "line 2" in err


def test_validation_failure_reported(tmp_path):
    path = tmp_path / "sum.net"
    path.write_text("network x\nchance A { states: T, F ; cpt { -> 0.5, 0.6 ; } }\n")
    code, out, _ = run("validate", str(path))
    assert code == 2
    assert "row sum" in out
    assert run("validate", str(path), "--tolerance", "0.2")[0] == 0


def test_evidence_file(tmp_path):
    ev = tmp_path / "ev.txt"
    ev.write_text("# observed\nC = T\n")
    code, out, _ = run("solve", "fig2", "--evidence-file", str(ev))
    assert code == 0 and "MEV = 2.076923" in out
    assert run("solve", "fig2", "--evidence-file", str(ev), "-e", "C=F")[0] == 1


def numbers(text):
    return sorted(float(x) for x in NUMBER.findall(text))


def json_numbers(obj):
    if isinstance(obj, dict):
        return [x for v in obj.values() for x in json_numbers(v)]
    if isinstance(obj, list):
        return [x for v in obj for x in json_numbers(v)]
    if isinstance(obj, float):
        return [obj]
    return []


@pytest.mark.parametrize("argv", [
    ["infer", "fig1", "--target", "A", "-e", "C=T"],
    ["solve", "fig2", "-e", "C=T"],
    ["solve", "chain3"],
    ["policy", "fig2"],
    ["sample", "fig3", "--target", "V=T", "-e", "D1=Action1", "-e", "C=T", "-n", "5000"],
    ["sample-solve", "fig2", "-e", "C=T"],
])
def test_json_carries_the_printed_values(argv):
    _, text, _ = run(*argv)
    _, raw, _ = run(*argv, "--json")
    doc = json.loads(raw)
    printed = set(numbers(text))
    assert printed and printed <= set(json_numbers(doc)) | {0.95}


def test_printed_values_match_library():
    problem = load_problem("fig2")
    out = mev(problem, {"C": "T"})
    _, raw, _ = run("solve", "fig2", "-e", "C=T", "--json")
    doc = json.loads(raw)
    assert doc["mev"] == float(f"{out.mev:.6f}")
    assert doc["choice"] == out.first_decision
    policy = extract_policy(problem, {}, contingent=True)
    _, raw, _ = run("policy", "fig2", "--json")
    rules = json.loads(raw)["D1"]["rules"]
    assert [(r["assignment"]["C"], r["alternative"]) for r in rules] == \
        [(k[0], v[0]) for k, v in policy.rules["D1"].items()]
