import json

import pytest

from conftest import FIXTURE_DIR
from dtl.cli import main
from dtl.potentials import load_potential, potential_from_dict


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_classify_fixture(capsys):
    code, out = run(capsys, "classify", "b3_resonance_1.json")
    assert code == 0
    payload = json.loads(out)
    assert payload["type"] == "exceptional-1"
    assert payload["dims"]["d0"] == 0


def test_classify_text_format(capsys):
    code, out = run(capsys, "classify", "b5_third_kind.json", "--format", "text")
    assert code == 0
    assert "exceptional-3" in out


def test_expand_rank_one_zero_leading(capsys):
    code, out = run(capsys, "expand", "b2_local_rank_one.json", "--order", "0")
    assert code == 0
    payload = json.loads(out)
    assert payload["coefficients"]["G_-1"] == {"order": -1, "zero": True}


def test_verify_third_kind(capsys):
    code, out = run(capsys, "verify", "b5_third_kind.json", "--order", "0")
    assert code == 0
    payload = json.loads(out)
    assert payload["passed"] and payload["slopes"]["passed"]
    assert payload["dual_path_agreement"]


def test_threshold4(capsys):
    code, out = run(capsys, "threshold4", "b3_resonance_1.json")
    assert code == 0
    payload = json.loads(out)
    assert payload["threshold"] == 4 and payload["alternating_frame"]


def test_kernel_table(capsys):
    code, out = run(capsys, "kernel", "--order", "3", "--sites", "0..4")
    assert code == 0
    payload = json.loads(out)
    assert payload["order_-1"]["3"] == "1/2"
    assert payload["order_3"]["0"] == "3/256"


def test_eigenbasis(capsys):
    code, out = run(capsys, "eigenbasis", "b5_third_kind.json")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["bases"]["eigenfunctions"]) == 2


def test_missing_file_exit_code(capsys):
    assert main(["classify", "definitely_missing.json"]) == 1


def test_exact_mode_rejects_float_input(capsys):
    assert main(["classify", "b4_eigenvalues_N1.json", "--mode", "exact"]) == 1


def test_determinism(capsys):
    _, first = run(capsys, "classify", "b5_third_kind.json")
    _, second = run(capsys, "classify", "b5_third_kind.json")
    assert first == second


def test_fixture_env_override(capsys, monkeypatch, tmp_path):
    src = (FIXTURE_DIR / "v_zero.json").read_text()
    (tmp_path / "mine.json").write_text(src)
    monkeypatch.setenv("DTL_FIXTURES", str(tmp_path))
    code, out = run(capsys, "classify", "mine.json")
    assert code == 0


@pytest.mark.parametrize("name", [
    "v_zero", "b2_local_rank_one", "b3_resonance_1", "b3_resonance_2",
    "b4_eigenvalues_N1", "b4_eigenvalues_N3", "b5_third_kind",
])
def test_round_trip_canonical(name):
    pot = load_potential(FIXTURE_DIR / f"{name}.json")
    canonical = json.dumps(pot.to_json(), sort_keys=True)
    again = potential_from_dict(json.loads(canonical))
    assert json.dumps(again.to_json(), sort_keys=True) == canonical


def test_ambiguous_band_exit_code(tmp_path):
    # a slightly perturbed two-site profile lands the order-zero matrix in
    # the undecidable float band
    payload = {"rank_one_terms": [{"sign": 1, "vector": {"0": 1.0, "1": 1.00000001}}]}
    path = tmp_path / "ambiguous.json"
    path.write_text(json.dumps(payload))
    assert main(["classify", str(path)]) == 2


def test_verify_float_fixture_default_sites(capsys):
    code, out = run(capsys, "verify", "b4_eigenvalues_N1.json", "--order", "0")
    assert code == 0
    assert json.loads(out)["passed"]


def test_sites_syntax(capsys):
    code, _ = run(capsys, "verify", "b2_local_rank_one.json", "--order", "0",
                  "--sites=-1..1")
    assert code == 0
    code, _ = run(capsys, "verify", "b2_local_rank_one.json", "--order", "0",
                  "--sites=-2,2")
    assert code == 0
