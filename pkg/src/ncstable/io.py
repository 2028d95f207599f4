"""
JSON forms of pencils, polynomials, tuples, Roesser models and certificates.

Complex scalars are ``[re, im]``, matrices are row-major nested lists, and
variable indices are 1-based.  Floats use Python's shortest round-trip
representation, so ``parse(emit(x))`` reproduces every entry bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import LinearPencil, MatrixTuple, NcPolynomial, word_key
from .engine import PurelyStableData, StabilityCertificate, StageRecord, TriangularForm, Verdict
from .errors import InputError
from .transforms import RoesserSpec


def _num(x) -> float:
    return float(x)


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def complex_from_json(v) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if not isinstance(v, list) or len(v) != 2 or not all(isinstance(t, (int, float)) for t in v):
        raise InputError(f"complex scalars are [re, im] pairs, got {v!r}")
    return complex(v[0], v[1])


def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[complex_to_json(z) for z in row] for row in M]


def matrix_from_json(v, name: str = "matrix", cols: int | None = None) -> np.ndarray:
    if not isinstance(v, list) or any(not isinstance(r, list) for r in v):
        raise InputError(f"{name} must be a list of rows")
    widths = {len(r) for r in v}
    if len(widths) > 1:
        raise InputError(f"{name} has ragged rows")
    width = widths.pop() if widths else (cols or 0)
    out = np.zeros((len(v), width), dtype=complex)
    for i, row in enumerate(v):
        for j, z in enumerate(row):
            out[i, j] = complex_from_json(z)
    return out


# ---------------------------------------------------------------------------
# Objects
# ---------------------------------------------------------------------------


def pencil_to_json(L: LinearPencil) -> dict:
    return {"vars": L.d, "rows": L.rows, "cols": L.cols, "A": [matrix_to_json(A) for A in L.coeffs]}


def pencil_from_json(obj) -> LinearPencil:
    try:
        d, rows, cols, A = int(obj["vars"]), int(obj["rows"]), int(obj["cols"]), obj["A"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"pencil file needs vars, rows, cols and A ({exc})") from exc
    if not isinstance(A, list) or len(A) != d + 1:
        raise InputError(f"pencil with {d} variables needs {d + 1} coefficient matrices")
    mats = [matrix_from_json(M, f"A_{k}", cols) for k, M in enumerate(A)]
    for k, M in enumerate(mats):
        if M.shape != (rows, cols):
            raise InputError(f"A_{k} has shape {M.shape}, expected {(rows, cols)}")
    return LinearPencil(mats)


def poly_to_json(f: NcPolynomial) -> dict:
    terms = sorted(f.terms.items(), key=lambda t: word_key(t[0]))
    return {"vars": f.d, "terms": [{"word": list(w), "coeff": complex_to_json(c)} for w, c in terms]}


def poly_from_json(obj) -> NcPolynomial:
    try:
        d, terms = int(obj["vars"]), obj["terms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"polynomial file needs vars and terms ({exc})") from exc
    if not isinstance(terms, list):
        raise InputError("terms must be a list")
    out: dict[tuple[int, ...], complex] = {}
    for t in terms:
        try:
            w = tuple(int(k) for k in t["word"])
            c = complex_from_json(t["coeff"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad term {t!r}") from exc
        if w in out:
            raise InputError(f"duplicate word {list(w)}")
        out[w] = c
    return NcPolynomial(d, out)


def tuple_to_json(X: MatrixTuple) -> dict:
    return {"n": X.n, "X": [matrix_to_json(M) for M in X]}


def tuple_from_json(obj) -> MatrixTuple:
    try:
        n, mats = int(obj["n"]), obj["X"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"tuple file needs n and X ({exc})") from exc
    if not isinstance(mats, list):
        raise InputError("X must be a list of matrices")
    out = [matrix_from_json(M, f"X_{k + 1}", n) for k, M in enumerate(mats)]
    if any(M.shape != (n, n) for M in out):
        raise InputError(f"every X_j must be {n} x {n}")
    return MatrixTuple(out)


def roesser_from_json(obj) -> RoesserSpec:
    try:
        return RoesserSpec(matrix_from_json(obj["A"], "A"), tuple(int(k) for k in obj["dims"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"Roesser file needs A and dims ({exc})") from exc


def roesser_to_json(spec: RoesserSpec) -> dict:
    return {"A": matrix_to_json(spec.A), "dims": list(spec.dims)}


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


def _plain(v):
    """Meta values as JSON-ready builtins."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return complex_to_json(v)
    return v


def certificate_to_json(cert: StabilityCertificate) -> dict:
    out = {"verdict": cert.verdict.value, "transposed": bool(cert.transposed),
           "stages": [{"D": matrix_to_json(st.D), "V": matrix_to_json(st.V)} for st in cert.stages]}
    if cert.triangular is not None:
        tri = cert.triangular
        out["triangular"] = {
            "D": matrix_to_json(tri.D), "E": matrix_to_json(tri.E),
            "blocks": [{"H": matrix_to_json(b.H), "P": [matrix_to_json(P) for P in b.P]} for b in tri.blocks],
        }
    if cert.witness is not None:
        out["witness"] = {**tuple_to_json(cert.witness), "domain": cert.witness_domain}
    out["meta"] = {**_plain(cert.meta), "reason": cert.reason}
    return out


def certificate_from_json(obj) -> StabilityCertificate:
    try:
        verdict = Verdict(obj["verdict"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("certificate needs a verdict of stable, unstable or indeterminate") from exc
    stages = []
    for k, st in enumerate(obj.get("stages", [])):
        try:
            D = matrix_from_json(st["D"], f"stage {k} D")
            V = matrix_from_json(st["V"], f"stage {k} V")
        except (KeyError, TypeError) as exc:
            raise InputError(f"stage {k} needs D and V") from exc
        stages.append(StageRecord(D, V, (D.shape[1], D.shape[0])))
    tri = None
    if obj.get("triangular") is not None:
        t = obj["triangular"]
        try:
            blocks = [PurelyStableData(matrix_from_json(b["H"], "H"),
                                       tuple(matrix_from_json(P, "P") for P in b["P"])) for b in t["blocks"]]
            tri = TriangularForm(matrix_from_json(t["D"], "D"), matrix_from_json(t["E"], "E"), blocks)
        except (KeyError, TypeError) as exc:
            raise InputError("triangular form needs D, E and blocks of H and P") from exc
    witness, domain = None, "upper"
    if obj.get("witness") is not None:
        witness = tuple_from_json(obj["witness"])
        domain = obj["witness"].get("domain", "upper")
        if domain not in ("upper", "polydisk", "right"):
            raise InputError(f"unknown witness domain {domain!r}")
    meta = dict(obj.get("meta", {}))
    reason = str(meta.pop("reason", ""))
    return StabilityCertificate(verdict, stages=stages, triangular=tri, witness=witness, witness_domain=domain,
                                transposed=bool(obj.get("transposed", False)), reason=reason, meta=meta)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def dumps(obj) -> str:
    return json.dumps(obj, indent=1)


def load_json(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")
