import io
import json
import subprocess
import sys

import pytest

from boxworld import Measurement, pr_box
from boxworld.cli import run
from boxworld.states import deterministic_single, maximally_mixed
from boxworld.tensor import tensor_product, tensor_to_data
from boxworld.wiring import adaptive_pair_measurement, normalisation_functional


def call(argv, stdin_text=""):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdin=io.StringIO(stdin_text), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def fixture(name):
    code, text, _ = call(["fixtures", name])
    assert code == 0
    return text


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)
    return _write


def test_pr_box_chsh_pipeline():
    code, out, _ = call(["chsh", "-"], fixture("pr-box"))
    assert code == 0 and out.strip() == "4"


def test_counterexample_lp_is_negative():
    code, out, _ = call(["decompose", "-", "--method", "lp"], fixture("counterexample"))
    assert code == 1
    data = json.loads(out)
    assert data["infeasible"] is True and len(data["certificate"]) == 64


def test_adaptive_pair_greedy(write):
    path = write("adaptive_pair.json", adaptive_pair_measurement().to_data())
    code, out, _ = call(["decompose", path, "--method", "greedy"])
    assert code == 0
    assert json.loads(out)["weights"] == ["1"]


def test_greedy_on_three_parties_is_a_usage_error():
    code, out, err = call(["decompose", "-"], fixture("counterexample"))
    assert code == 2 and out == "" and "lp_decompose" in err


def test_greedy_blocked_is_negative(write):
    bad = {"signature": [[2, 2]], "entries": ["1", "0", "0", "1"]}
    code, out, _ = call(["decompose", write("bad.json", bad)])
    assert code == 1
    assert json.loads(out)["error"] == "GreedyBlocked"


def test_validate_state_and_measurement(write):
    code, out, _ = call(["validate-state", "-"], fixture("pr-box"))
    assert code == 0 and json.loads(out)["valid"] is True
    bad = tensor_to_data(maximally_mixed([[2, 2]]).scale(2))
    code, out, _ = call(["validate-state", write("s.json", bad)])
    assert code == 1 and json.loads(out)["valid"] is False
    code, out, _ = call(["validate-measurement", "-"], fixture("counterexample"))
    assert code == 0
    lone = Measurement((normalisation_functional([[2, 2]]).scale(2),))
    code, out, _ = call(["validate-measurement", write("m.json", lone.to_data())])
    assert code == 1 and json.loads(out)["diagnostics"]


def test_vertices(tmp_path):
    code, out, _ = call(["vertices", "--signature", "[[2,2],[2,2]]"])
    data = json.loads(out)
    assert code == 0 and len(data["vertices"]) == 24 and data["tags"].count("nonlocal") == 8
    code, out, _ = call(["vertices", "--signature", "[[2,2],[2,2]]", "--local"])
    assert len(json.loads(out)["vertices"]) == 16
    code, _, err = call(["vertices", "--signature", "nonsense"])
    assert code == 2 and err


def test_collapse():
    code, out, _ = call(["collapse", "-", "--subsystems", "1", "--settings", "1", "--outcomes", "0"],
                        fixture("pr-box"))
    assert code == 0 and json.loads(out)["entries"] == ["1", "0", "0", "1"]


def test_collapse_zero_probability(write):
    d = tensor_product(deterministic_single((2, 2), (0, 0)), deterministic_single((2, 2), (0, 0)))
    code, out, _ = call(["collapse", write("d.json", tensor_to_data(d)), "--subsystems", "0",
                         "--settings", "0", "--outcomes", "1"])
    assert code == 1 and json.loads(out)["error"] == "ConditioningError"


def test_is_local(write):
    code, out, _ = call(["is-local", "-"], fixture("pr-box"))
    assert code == 1 and json.loads(out)["local"] is False
    mixed = tensor_to_data(maximally_mixed([[2, 2], [2, 2]]))
    code, out, _ = call(["is-local", write("m.json", mixed)])
    assert code == 0 and json.loads(out)["local"] is True


def test_simulate_is_deterministic(write):
    state = write("p.json", tensor_to_data(pr_box()))
    meas = write("m.json", adaptive_pair_measurement().to_data())
    argv = ["simulate", "--state", state, "--measurement", meas, "--samples", "2000", "--seed", "5"]
    first, second = call(argv), call(argv)
    assert first == second and first[0] == 0
    data = json.loads(first[1])
    assert sum(data["counts"]) + data["failures"] == 2000
    assert data["expected_success_probability"] == "1/4"
    code, _, err = call(argv[:-1] + [str(1 << 64)])
    assert code == 2 and "64-bit" in err
    code, _, _ = call(argv[:-3] + ["-3", "--seed", "5"])
    assert code == 2


def test_swap(write):
    bob = adaptive_pair_measurement().to_data()
    pr = write("pr.json", tensor_to_data(pr_box()))
    code, out, _ = call(["swap", "--ab", pr, "--bc", pr, "--bob", write("bob.json", bob)])
    data = json.loads(out)
    assert code == 0 and data["no_swapping"] is True
    assert all(o["separable"] for o in data["outcomes"])


def test_validate_transformation(write):
    identity = {"signature": [[2, 2]], "matrix": [[str(int(i == j)) for j in range(4)] for i in range(4)]}
    code, out, _ = call(["validate-transformation", write("t.json", identity), "--signature", "[[2,2]]"])
    assert code == 0 and json.loads(out) == {"valid": True}
    negative = {"signature": [[2, 2]], "matrix": [[str(-int(i == j)) for j in range(4)] for i in range(4)]}
    code, out, _ = call(["validate-transformation", write("n.json", negative), "--signature", "[[2,2]]"])
    assert code == 1 and json.loads(out) == {"valid": False}


def test_output_flag(tmp_path):
    target = tmp_path / "pr.json"
    code, out, _ = call(["-o", str(target), "fixtures", "pr-box"])
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["entries"][0] == "1/2"


def test_usage_and_io_errors():
    assert call([])[0] == 2
    assert call(["no-such-verb"])[0] == 2
    assert call(["chsh", "/does/not/exist.json"])[0] == 2
    assert call(["chsh", "-"], "{not json")[0] == 2
    code, _, err = call(["chsh", "-"], json.dumps({"signature": [[2, 2]], "entries": ["1"]}))
    assert code == 2 and err


def test_outputs_are_canonical_json():
    text = fixture("adaptive-pair")
    assert text == json.dumps(json.loads(text), sort_keys=True, separators=(",", ": ")) + "\n"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "boxworld.cli", "fixtures", "pr-box"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    chsh = subprocess.run([sys.executable, "-m", "boxworld.cli", "chsh", "-"], input=proc.stdout,
                          capture_output=True, text=True, check=False)
    assert chsh.returncode == 0 and chsh.stdout.strip() == "4"
