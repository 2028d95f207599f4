import json

import numpy as np
import pytest

from ncstable import io
from ncstable.cli import main
from ncstable.core import LinearPencil, MatrixTuple, NcPolynomial
from ncstable.engine import check_stable, is_purely_stable
from ncstable.errors import InputError
from ncstable.generators import random_purely_stable
from ncstable.transforms import RoesserSpec

from conftest import scalar_pencil

HAND_CERT = {
    "verdict": "stable", "transposed": False, "stages": [],
    "triangular": {"D": [[1, 1], [1, 0]], "E": [[1, 1], [0, 1]],
                   "blocks": [{"H": [[1]], "P": [[[0]], [[1]]]}, {"H": [[1]], "P": [[[0]], [[1]]]}]},
    "meta": {},
}


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def _pencil_file(tmp_path, L, name="L.json"):
    return _write(tmp_path, name, io.pencil_to_json(L))


# ---------------------------------------------------------------------------
# Round trips
# ---------------------------------------------------------------------------


def test_pencil_round_trip_is_exact():
    L = random_purely_stable(3, 2, seed=1)
    back = io.pencil_from_json(json.loads(io.dumps(io.pencil_to_json(L))))
    assert np.array_equal(back.coeffs, L.coeffs)


def test_poly_round_trip_and_ordering(xs):
    x1, x2 = xs
    f = 0.1 + x2 * x1 - 1j / 3 * x1 + x1 * x2 * x2
    obj = io.poly_to_json(f)
    assert [t["word"] for t in obj["terms"]] == [[], [1], [2, 1], [1, 2, 2]]
    assert io.poly_from_json(json.loads(io.dumps(obj))) == f


def test_tuple_and_roesser_round_trip():
    X = MatrixTuple([np.array([[1 + 2j, 0.1], [np.pi, -1e-300]])])
    Y = io.tuple_from_json(json.loads(io.dumps(io.tuple_to_json(X))))
    assert np.array_equal(Y[0], X[0])
    spec = RoesserSpec(np.arange(4.0).reshape(2, 2), (1, 1))
    back = io.roesser_from_json(io.roesser_to_json(spec))
    assert np.array_equal(back.A, spec.A) and back.dims == spec.dims


def test_certificate_round_trip(small_example):
    cert = check_stable(small_example)
    obj = io.certificate_to_json(cert)
    back = io.certificate_from_json(json.loads(io.dumps(obj)))
    assert io.certificate_to_json(back) == obj


@pytest.mark.parametrize("bad", [
    {"vars": 1, "rows": 1, "cols": 1, "A": [[[[1, 0]]]]},
    {"vars": 1, "rows": 1, "cols": 2, "A": [[[[1, 0]]], [[[1, 0]]]]},
    {"vars": 1, "rows": 1, "cols": 1, "A": [[[[1, 0, 0]]], [[[1, 0]]]]},
    {"rows": 1},
])
def test_malformed_pencils(bad):
    with pytest.raises(InputError):
        io.pencil_from_json(bad)


def test_malformed_polys():
    with pytest.raises(InputError):
        io.poly_from_json({"vars": 1, "terms": [{"word": [1], "coeff": [1, 0]}, {"word": [1], "coeff": [2, 0]}]})
    with pytest.raises(InputError):
        io.poly_from_json({"vars": 1, "terms": [{"word": [2], "coeff": [1, 0]}]})


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def test_check_exit_codes(tmp_path, small_example, capsys):
    out = str(tmp_path / "cert.json")
    assert main(["check", _pencil_file(tmp_path, small_example), "--out", out]) == 0
    assert main(["certify", _pencil_file(tmp_path, small_example), out]) == 0
    assert main(["check", _pencil_file(tmp_path, scalar_pencil(-1j, 1), "u.json")]) == 1
    assert main(["check", _write(tmp_path, "bad.json", '{"vars": 1, "rows"')]) == 3
    assert main(["check", str(tmp_path / "missing.json")]) == 3
    assert main(["frobnicate"]) == 3
    assert "error" in capsys.readouterr().err


def test_json_report_feeds_certify(tmp_path, small_example, capsys):
    path = _pencil_file(tmp_path, small_example)
    assert main(["check", path, "--json"]) == 0
    cert = _write(tmp_path, "c.json", capsys.readouterr().out)
    assert main(["certify", path, cert]) == 0


def test_certify_hand_certificate(tmp_path, small_example):
    path = _pencil_file(tmp_path, small_example)
    assert main(["certify", path, _write(tmp_path, "hand.json", HAND_CERT)]) == 0
    tampered = json.loads(json.dumps(HAND_CERT))
    tampered["triangular"]["blocks"][0]["P"][1] = [[-1]]
    assert main(["certify", path, _write(tmp_path, "bad.json", tampered)]) != 0
    other = _pencil_file(tmp_path, LinearPencil([np.eye(2), np.eye(2)]), "other.json")
    assert main(["certify", other, _write(tmp_path, "hand2.json", HAND_CERT)]) != 0


def test_reductions(tmp_path, capsys):
    assert main(["schur", _pencil_file(tmp_path, scalar_pencil(1, -2))]) == 1
    assert "0.5" in capsys.readouterr().out
    assert main(["hurwitz", _pencil_file(tmp_path, scalar_pencil(1, 1))]) == 0
    assert main(["roesser", _write(tmp_path, "r.json", {"A": [[0]], "dims": [1]})]) == 0
    assert main(["roesser", _write(tmp_path, "r2.json", {"A": [[0]], "dims": [2]})]) == 3


def test_schur_certificate_reverifies(tmp_path):
    L = LinearPencil([np.eye(2), [[0.2, 0.1], [0.0, 0.3]]])
    out = str(tmp_path / "cert.json")
    path = _pencil_file(tmp_path, L)
    assert main(["schur", path, "--out", out]) == 0
    assert main(["certify", path, out]) == 0


def test_detrep_command(tmp_path, xs, capsys):
    x1, x2 = xs
    out = str(tmp_path / "rep.json")
    assert main(["detrep", _write(tmp_path, "f.json", io.poly_to_json(1 - x1 * x2)), "--out", out]) == 0
    rep = json.loads(open(out).read())
    assert rep["verification"]["passed"] and rep["verification"]["max_residual"] < 1e-6
    assert is_purely_stable(io.pencil_from_json(rep["L"])) is not None
    one = NcPolynomial(1, {(): 1.0, (1,): 1.0})
    assert main(["detrep", _write(tmp_path, "g.json", io.poly_to_json(one)), "--out", out]) == 0
    assert json.loads(open(out).read())["L"]["rows"] == 1
    bad = NcPolynomial(1, {(1,): 1.0, (): -1j})
    assert main(["detrep", _write(tmp_path, "h.json", io.poly_to_json(bad))]) == 1


def test_witness_command(tmp_path, capsys):
    u = _pencil_file(tmp_path, scalar_pencil(-1j, 1))
    assert main(["witness", u, "--budget", "2000"]) == 1
    assert main(["witness", u, "--budget", "0"]) == 0
    assert "not a stability proof" in capsys.readouterr().out
    assert main(["witness", _pencil_file(tmp_path, scalar_pencil(1j, 1), "s.json"), "--budget", "500"]) == 0


def test_eval_command(tmp_path, capsys):
    obj = _pencil_file(tmp_path, scalar_pencil(1, 2))
    tup = _write(tmp_path, "X.json", io.tuple_to_json(MatrixTuple.scalars([3.0])))
    assert main(["eval", obj, tup, "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == [[[7.0, 0.0]]]


def test_gen_command(tmp_path, xs):
    x1, x2 = xs
    out = str(tmp_path / "f.json")
    assert main(["gen", "--alphas", "-1", "--betas", "0", "--out", out]) == 0
    assert io.poly_from_json(json.loads(open(out).read())) == -1 + x1 * x2
    assert main(["gen", "--purely-stable", "3", "2", "--seed", "4", "--out", out]) == 0
    assert is_purely_stable(io.pencil_from_json(json.loads(open(out).read()))) is not None
    assert main(["gen", "--alphas", "1", "--betas", "0"]) == 3


def test_tolerance_flags_reach_certificate(tmp_path, small_example, capsys):
    assert main(["check", _pencil_file(tmp_path, small_example), "--json", "--tol-rank", "1e-8"]) == 0
    meta = json.loads(capsys.readouterr().out)["meta"]
    assert meta["tolerances"]["rank_tol"] == 1e-8
    assert meta["seed"] == 0
