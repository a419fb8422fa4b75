import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncert import io as uio
from uncert.cli import main
from uncert.fuzz import splitmix64, trial_seed
from uncert.mus import random_family_spec
from uncert.states import (QState, computational_basis, random_basis,
                           random_povm, random_state)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def write(path, obj):
    path.write_text(uio.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- serialization ---------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_state_roundtrip_exact(seed):
    st_ = random_state((2, 3), seed=seed)
    back = uio.from_json_obj(json.loads(uio.dumps(uio.state_to_json(st_))))
    assert np.array_equal(back.matrix, st_.matrix)
    assert back.dims == st_.dims and back.labels == st_.labels


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_basis_and_povm_roundtrip_exact(seed):
    b = random_basis(3, seed)
    p = random_povm(3, 4, seed)
    b2 = uio.from_json_obj(json.loads(uio.dumps(uio.basis_to_json(b))))
    p2 = uio.from_json_obj(json.loads(uio.dumps(uio.povm_to_json(p))))
    assert np.array_equal(b2.kets, b.kets)
    assert all(np.array_equal(x, y) for x, y in zip(p2.elements, p.elements))


def test_sanitize_non_finite():
    text = uio.dumps({"a": math.inf, "b": -math.inf, "c": np.float64("nan"), "d": np.int64(3)})
    assert json.loads(text) == {"a": "inf", "b": "-inf", "c": "nan", "d": 3}


def test_unknown_type_rejected():
    with pytest.raises(uio.InputError):
        uio.from_json_obj({"type": "tensor"})


def test_bad_matrix_shape_rejected():
    with pytest.raises(uio.InputError):
        uio.matrix_from_json([[1, 2], [3, 4]])


def test_write_atomic(tmp_path):
    target = tmp_path / "sub" / "out.json"
    uio.write_atomic(target, "x\n")
    assert target.read_text() == "x\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]


def test_splitmix_reference_values():
    # first outputs of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert trial_seed(5, 0) == 5 ^ 0xE220A8397B1DCDAF


# -- CLI -------------------------------------------------------------------------


def test_verify_fuzz_no_violations(capsys):
    code, out, _ = run(capsys, "verify", "--relation", "EQ10", "--dims", "2,2,2",
                       "--trials", "50", "--seed", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["summary"]["violations"] == 0
    assert len(doc["results"]) == 50
    assert doc["config"]["seed"] == 1


def test_verify_is_byte_identical(capsys):
    args = ("verify", "--relation", "EQ22", "--trials", "5", "--seed", "42")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


def test_verify_csv_columns(capsys):
    code, out, _ = run(capsys, "verify", "--relation", "EQ3", "--trials", "3", "--seed", "2",
                       "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["trial", "relation", "H(v|c)", "H(w|b)", "rhs", "gap", "holds"]
    assert len(rows) == 4


def test_verify_state_file_flags_equality(tmp_path, capsys):
    rho = np.diag([0.6, 0.3, 0.1]).astype(complex)
    path = write(tmp_path / "s.json", uio.state_to_json(QState(rho, (3,))))
    code, out, _ = run(capsys, "verify", "--relation", "EQ21", "--state", path)
    assert code == 0
    assert json.loads(out)["results"][0]["holds"] == "equality"


def test_verify_non_mub_bases_is_input_error(tmp_path, capsys):
    # an EQ3 bound with non-MUB input is an input error, not a violation
    st_ = random_state((2, 2, 2), 1, 0)
    state = write(tmp_path / "s.json", uio.state_to_json(st_))
    bases = write(tmp_path / "b.json", [uio.basis_to_json(computational_basis(2)),
                                        uio.basis_to_json(computational_basis(2))])
    code, _, err = run(capsys, "verify", "--relation", "EQ3", "--state", state, "--basis", bases)
    assert code == 2
    assert "mutually unbiased" in err


def test_malformed_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "verify", "--relation", "EQ21", "--state", str(bad))
    assert code == 2
    assert "cannot read" in err


def test_missing_seed_exit_2(capsys):
    code, _, _ = run(capsys, "verify", "--relation", "EQ10")
    assert code == 2


def test_bad_relation_exit_2(capsys):
    code, _, _ = run(capsys, "verify", "--relation", "EQ99", "--seed", "1")
    assert code == 2


def test_out_file_written(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, printed, _ = run(capsys, "verify", "--relation", "EQ20", "--seed", "3", "--out", str(out))
    assert code == 0 and printed == ""
    assert json.loads(out.read_text())["summary"]["trials"] == 1


def test_mus_construct_thm4(tmp_path, capsys):
    state_out = tmp_path / "m.json"
    code, out, _ = run(capsys, "mus", "construct", "--family", "thm4", "--dims", "4", "--s", "2",
                       "--seed", "3", "--state-out", str(state_out))
    doc = json.loads(out)
    assert code == 0
    assert doc["results"][0]["report"]["holds"] == "equality"
    assert doc["results"][0]["recovery_residual"] < 1e-8
    assert isinstance(uio.load(str(state_out)), QState)


def test_mus_construct_from_spec_file(tmp_path, capsys):
    spec = random_family_spec((2, 3), (2, 1), 2, seed=4).to_dict()
    spec.update({"type": "family", "family": "thm5"})
    path = write(tmp_path / "spec.json", spec)
    code, out, _ = run(capsys, "mus", "construct", "--spec", path)
    assert code == 0
    assert json.loads(out)["results"][0]["report"]["relation"] == "EQ26"


def test_mus_construct_omega_spec(tmp_path, capsys):
    spec = {"type": "omega", "d": 2, "terms": [
        {"s": 2, "beta": 0, "gamma": 0, "g": 0.3, "side": uio.matrix_to_json(np.diag([1, 0]))},
        {"s": 1, "beta": 0, "gamma": 0, "g": 0.7, "side": uio.matrix_to_json(np.diag([0, 1]))},
    ]}
    code, out, _ = run(capsys, "mus", "construct", "--spec", write(tmp_path / "o.json", spec))
    assert code == 0
    assert json.loads(out)["results"][0]["report"]["holds"] == "equality"


def test_mus_construct_lambda_spec(tmp_path, capsys):
    code, out, _ = run(capsys, "mus", "construct", "--spec",
                       write(tmp_path / "l.json", {"type": "lambda", "kind": "qutrit"}))
    assert code == 0


def test_mus_bad_spec_exit_2(tmp_path, capsys):
    spec = {"type": "family", "dims": [4], "s": [3], "p": [1.0], "side_blocks": []}
    code, _, _ = run(capsys, "mus", "construct", "--spec", write(tmp_path / "b.json", spec))
    assert code == 2


def test_mus_classify_bell_zero(tmp_path, capsys):
    psi = np.zeros(8)
    psi[[0, 6]] = 1 / math.sqrt(2)
    path = write(tmp_path / "s.json", uio.state_to_json(QState.from_ket(psi, (2, 2, 2))))
    code, out, _ = run(capsys, "mus", "classify", "--state", path)
    assert code == 0
    assert json.loads(out)["results"][0]["label"] == "Upsilon"


def test_mus_check_random_state_not_mus(tmp_path, capsys):
    path = write(tmp_path / "s.json", uio.state_to_json(random_state((2, 2, 2), 1, 5)))
    code, out, _ = run(capsys, "mus", "check", "--state", path)
    assert code == 1
    assert json.loads(out)["results"][0]["label"] == "NotMus"


def test_bound_fourier(capsys):
    code, out, _ = run(capsys, "bound", "--fourier", "5")
    r = json.loads(out)["results"][0]["r"]
    assert code == 0
    assert abs(r["value"] - 0.2) < 1e-12


def test_bound_hidden_complementarity(tmp_path, capsys):
    s = 1 / math.sqrt(2)
    w = np.array([[1, 0, 0], [0, s, s], [0, s, -s]])
    bases = write(tmp_path / "b.json", [uio.basis_to_json(computational_basis(3)),
                                        {"type": "basis", "kets": uio.matrix_to_json(w)}])
    proj = write(tmp_path / "p.json", {"type": "projector",
                                       "matrix": uio.matrix_to_json(np.diag([0, 1, 1]))})
    code, out, _ = run(capsys, "bound", "--basis", bases, "--projector", proj)
    res = json.loads(out)["results"][0]
    assert code == 0
    assert abs(res["r"]["value"] - 1) < 1e-12
    assert abs(res["r_projected"]["value"] - 0.5) < 1e-12


def test_bound_identical_bases(tmp_path, capsys):
    path = write(tmp_path / "b.json", uio.basis_to_json(random_basis(3, 1)))
    code, out, _ = run(capsys, "bound", "--basis", path)
    assert abs(json.loads(out)["results"][0]["r"]["value"] - 1) < 1e-12


def test_search_eq20_d3(capsys):
    code, out, _ = run(capsys, "search", "--relation", "EQ20", "--dims", "3", "--seed", "1",
                       "--target", "1e-6")
    res = json.loads(out)["results"][0]
    assert code == 0
    assert res["best_gap"] <= 1e-6


def test_trace_bell_zero(tmp_path, capsys):
    psi = np.zeros(8)
    psi[[0, 6]] = 1 / math.sqrt(2)
    path = write(tmp_path / "s.json", uio.state_to_json(QState.from_ket(psi, (2, 2, 2))))
    code, out, _ = run(capsys, "trace", "--state", path)
    res = json.loads(out)["results"][0]
    assert code == 0
    assert res["all_equal"]


def test_trace_random_monotone(capsys):
    code, out, _ = run(capsys, "trace", "--seed", "9", "--trials", "5")
    doc = json.loads(out)
    assert code == 0
    assert all(r["step5"] >= r["step6"] - 1e-9 for r in doc["results"])


def test_scan_csv(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "scan", "--step", "0.1", "--out", str(out))
    rows = list(csv.reader(out.open()))
    assert code == 0
    assert rows[0] == ["r_x", "r_y", "r_z", "zeta"]
    assert len(rows) > 100
