"""
JSON formats for matrices, operator tuples, series and automorphisms.

Matrices are ``{"rows", "cols", "re", "im"}`` with row-major flat lists. Output
floats are written with 17 significant digits so identical inputs give
byte-identical files.
"""

import json
import math

import numpy as np

from .errors import DomainViolation, InputInvalid, NCBallError
from .mobius import BallAutomorphism
from .opmodel import RowContraction
from .series import FreeSeries


# -- encoding ---------------------------------------------------------------------


def _fmt_float(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if not any(c in s for c in ".eEn"):
        s += ".0"
    return s


def _plain(obj):
    """Convert numpy scalars and arrays into plain Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = "," if indent is None else ","
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, None, 0) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    return _encode(_plain(obj), indent, 0)


# -- matrices and tuples ---------------------------------------------------------------


def matrix_to_json(M):
    M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
    return {"rows": M.shape[0], "cols": M.shape[1], "re": M.real.ravel().tolist(), "im": M.imag.ravel().tolist()}


def _require(obj, key, field):
    if not isinstance(obj, dict):
        raise InputInvalid(field, "expected an object")
    if key not in obj:
        raise InputInvalid(f"{field}.{key}" if field else key, "missing")
    return obj[key]


def _count(v, field, minimum=0):
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise InputInvalid(field, f"expected an integer >= {minimum}")
    return v


def _numbers(v, size, field):
    if not isinstance(v, list) or len(v) != size:
        raise InputInvalid(field, f"expected a list of {size} numbers")
    try:
        out = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise InputInvalid(field, "entries must be numbers") from None
    if not np.all(np.isfinite(out)):
        raise InputInvalid(field, "entries must be finite")
    return out


def matrix_from_json(obj, field="matrix"):
    rows = _count(_require(obj, "rows", field), f"{field}.rows", 1)
    cols = _count(_require(obj, "cols", field), f"{field}.cols", 1)
    re = _numbers(_require(obj, "re", field), rows * cols, f"{field}.re")
    im = obj.get("im")
    im = np.zeros(rows * cols) if im is None else _numbers(im, rows * cols, f"{field}.im")
    return (re + 1j * im).reshape(rows, cols)


def tuple_to_json(X):
    return [matrix_to_json(x) for x in X]


def tuple_from_json(obj, field="tuple"):
    if isinstance(obj, dict) and "entries" in obj:
        obj = obj["entries"]
        field = f"{field}.entries"
    if not isinstance(obj, list) or not obj:
        raise InputInvalid(field, "expected a non-empty list of matrices")
    X = tuple(matrix_from_json(m, f"{field}[{k}]") for k, m in enumerate(obj))
    d = X[0].shape[0]
    for k, x in enumerate(X):
        if x.shape != (d, d):
            raise InputInvalid(f"{field}[{k}]", f"expected a {d}x{d} matrix, got {x.shape[0]}x{x.shape[1]}")
    return X


# -- row contractions ---------------------------------------------------------------


def row_contraction_to_json(T):
    T = T if isinstance(T, RowContraction) else RowContraction(T, check=False)
    return {"n": T.n, "d": T.d, "entries": tuple_to_json(T.entries)}


def row_contraction_from_json(obj, field="T", check=True):
    entries = tuple_from_json(_require(obj, "entries", field), f"{field}.entries")
    n = obj.get("n", len(entries))
    if n != len(entries):
        raise InputInvalid(f"{field}.n", f"declares {n} entries but {len(entries)} are given")
    d = obj.get("d", entries[0].shape[0])
    if d != entries[0].shape[0]:
        raise InputInvalid(f"{field}.d", f"declares d={d} but entries are {entries[0].shape[0]}x{entries[0].shape[0]}")
    try:
        return RowContraction(entries, check=check)
    except ValueError as exc:
        raise InputInvalid(f"{field}.entries", str(exc)) from None


# -- series --------------------------------------------------------------------------


def series_to_json(F, tol=0.0):
    return {
        "n": F.n,
        "maxDeg": F.max_deg,
        "blockShape": list(F.block_shape),
        "terms": [{"word": list(w), "coeff": matrix_to_json(c)} for w, c in F.terms(tol)],
    }


def series_from_json(obj, field="series"):
    n = _count(_require(obj, "n", field), f"{field}.n", 1)
    max_deg = _count(_require(obj, "maxDeg", field), f"{field}.maxDeg", 0)
    shape = obj.get("blockShape", [1, 1])
    if not isinstance(shape, list) or len(shape) != 2:
        raise InputInvalid(f"{field}.blockShape", "expected [p, q]")
    p = _count(shape[0], f"{field}.blockShape[0]", 1)
    q = _count(shape[1], f"{field}.blockShape[1]", 1)
    terms = _require(obj, "terms", field)
    if not isinstance(terms, list):
        raise InputInvalid(f"{field}.terms", "expected a list")
    coeffs = {}
    for k, t in enumerate(terms):
        f = f"{field}.terms[{k}]"
        word = _require(t, "word", f)
        if not isinstance(word, list) or any(isinstance(a, bool) or not isinstance(a, int) or not 1 <= a <= n
                                             for a in word):
            raise InputInvalid(f"{f}.word", f"expected letters in 1..{n}")
        if len(word) > max_deg:
            raise InputInvalid(f"{f}.word", f"length {len(word)} exceeds maxDeg {max_deg}")
        c = _require(t, "coeff", f)
        C = np.array([[complex(c)]]) if isinstance(c, (int, float)) else matrix_from_json(c, f"{f}.coeff")
        if C.shape != (p, q):
            raise InputInvalid(f"{f}.coeff", f"expected a {p}x{q} block")
        coeffs[tuple(word)] = coeffs.get(tuple(word), 0) + C
    return FreeSeries.from_terms(n, max_deg, coeffs, (p, q))


# -- automorphisms --------------------------------------------------------------------


def automorphism_to_json(psi):
    return {
        "n": psi.n,
        "lambda": [[float(z.real), float(z.imag)] for z in psi.lam],
        "U": matrix_to_json(psi.U),
    }


def automorphism_from_json(obj, field="automorphism"):
    n = _count(_require(obj, "n", field), f"{field}.n", 1)
    lam = _require(obj, "lambda", field)
    if not isinstance(lam, list) or len(lam) != n:
        raise InputInvalid(f"{field}.lambda", f"expected {n} [re, im] pairs")
    vals = []
    for k, z in enumerate(lam):
        if isinstance(z, (int, float)) and not isinstance(z, bool):
            vals.append(complex(z))
        else:
            re, im = _numbers(z, 2, f"{field}.lambda[{k}]")
            vals.append(complex(re, im))
    U = obj.get("U")
    U = None if U is None else matrix_from_json(U, f"{field}.U")
    if U is not None and U.shape != (n, n):
        raise InputInvalid(f"{field}.U", f"expected an {n}x{n} matrix")
    try:
        return BallAutomorphism(np.array(vals), U)
    except DomainViolation as exc:
        raise InputInvalid(f"{field}.lambda", str(exc)) from None
    except (ValueError, NCBallError) as exc:
        raise InputInvalid(f"{field}.U", str(exc)) from None


def load_json(path, field):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputInvalid(field, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputInvalid(field, f"invalid JSON in {path}: {exc.msg} at line {exc.lineno}") from None
