import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncball import linalg as la
from ncball import serialize as sz
from ncball.errors import InputInvalid
from ncball.fock import enumerate_words
from ncball.mobius import BallAutomorphism
from ncball.series import FreeSeries

seeds = st.integers(0, 2 ** 31 - 1)


def test_float_format_is_fixed():
    assert sz.dumps(0.1) == "0.10000000000000001"
    assert sz.dumps(1.0) == "1.0"
    assert sz.dumps([1e300, -2.5e-17]) == "[1.0000000000000001e+300, -2.4999999999999999e-17]"
    assert sz.dumps({"a": np.float64(0.5), "b": np.int64(3), "c": np.bool_(True)}, indent=None) == \
        '{"a": 0.5,"b": 3,"c": true}'
    assert json.loads(sz.dumps({"x": [0.1, 2.0], "y": {"z": None}})) == {"x": [0.1, 2.0], "y": {"z": None}}


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_matrix_round_trip(seed, p, q):
    M = la.complex_gaussian((p, q), seed)
    back = sz.matrix_from_json(json.loads(sz.dumps(sz.matrix_to_json(M))))
    assert np.array_equal(back, M)


@given(seeds, st.integers(1, 3))
def test_row_contraction_round_trip(seed, n):
    T = la.random_row_contraction(n, 3, 0.8, seed)
    back = sz.row_contraction_from_json(json.loads(sz.dumps(sz.row_contraction_to_json(T))))
    assert all(np.array_equal(a, b) for a, b in zip(back.entries, T))


@given(seeds, st.integers(1, 3))
def test_series_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    F = FreeSeries.from_terms(n, 3, {w: complex(*rng.normal(size=2)) for w in enumerate_words(n, 3)})
    back = sz.series_from_json(json.loads(sz.dumps(sz.series_to_json(F))))
    assert back.max_deg == 3 and all(np.array_equal(a, b) for a, b in zip(back.levels, F.levels))


@given(seeds, st.integers(1, 3))
def test_automorphism_round_trip(seed, n):
    psi = BallAutomorphism.random(n, seed)
    back = sz.automorphism_from_json(json.loads(sz.dumps(sz.automorphism_to_json(psi))))
    assert np.array_equal(back.lam, psi.lam) and np.array_equal(back.U, psi.U)


def test_series_accepts_scalar_coefficients():
    F = sz.series_from_json({"n": 2, "maxDeg": 2, "terms": [{"word": [1, 2], "coeff": 2.0},
                                                            {"word": [1, 2], "coeff": 1.0}]})
    assert F.coeff((1, 2))[0, 0] == 3.0


@pytest.mark.parametrize("obj, field", [
    ({"rows": 2, "cols": 2, "re": [1, 2, 3]}, "matrix.re"),
    ({"rows": 0, "cols": 2, "re": []}, "matrix.rows"),
    ({"cols": 1, "re": [1]}, "matrix.rows"),
    ({"rows": 1, "cols": 1, "re": ["a"]}, "matrix.re"),
    ({"rows": 1, "cols": 1, "re": [1], "im": [float("nan")]}, "matrix.im"),
])
def test_matrix_errors(obj, field):
    with pytest.raises(InputInvalid) as exc:
        sz.matrix_from_json(obj)
    assert exc.value.field == field


def test_tuple_and_contraction_errors():
    m2 = sz.matrix_to_json(np.eye(2))
    m3 = sz.matrix_to_json(np.eye(3))
    with pytest.raises(InputInvalid) as exc:
        sz.tuple_from_json([m2, m3])
    assert exc.value.field == "tuple[1]"
    with pytest.raises(InputInvalid) as exc:
        sz.tuple_from_json([])
    assert exc.value.field == "tuple"
    with pytest.raises(InputInvalid) as exc:
        sz.row_contraction_from_json({"n": 3, "entries": [m2, m2]})
    assert exc.value.field == "T.n"
    with pytest.raises(InputInvalid) as exc:
        sz.row_contraction_from_json({"entries": [m2, m2]})
    assert exc.value.field == "T.entries"


def test_series_errors():
    base = {"n": 2, "maxDeg": 2, "terms": []}
    with pytest.raises(InputInvalid) as exc:
        sz.series_from_json({**base, "terms": [{"word": [3], "coeff": 1.0}]})
    assert exc.value.field == "series.terms[0].word"
    with pytest.raises(InputInvalid) as exc:
        sz.series_from_json({**base, "terms": [{"word": [1, 1, 1], "coeff": 1.0}]})
    assert exc.value.field == "series.terms[0].word"
    with pytest.raises(InputInvalid) as exc:
        sz.series_from_json({"n": 2, "terms": []})
    assert exc.value.field == "series.maxDeg"
    with pytest.raises(InputInvalid) as exc:
        sz.series_from_json({**base, "terms": [{"word": [1], "coeff": sz.matrix_to_json(np.eye(2))}]})
    assert exc.value.field == "series.terms[0].coeff"


def test_automorphism_errors():
    with pytest.raises(InputInvalid) as exc:
        sz.automorphism_from_json({"n": 2, "lambda": [[0.8, 0], [0.7, 0]]})
    assert exc.value.field == "automorphism.lambda"
    with pytest.raises(InputInvalid) as exc:
        sz.automorphism_from_json({"n": 2, "lambda": [0.1, 0.2], "U": sz.matrix_to_json(np.ones((2, 2)))})
    assert exc.value.field == "automorphism.U"
    with pytest.raises(InputInvalid) as exc:
        sz.automorphism_from_json({"n": 2, "lambda": [0.1]})
    assert exc.value.field == "automorphism.lambda"


def test_load_json_errors(tmp_path):
    with pytest.raises(InputInvalid) as exc:
        sz.load_json(tmp_path / "missing.json", "input")
    assert exc.value.field == "input"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputInvalid, match="invalid JSON"):
        sz.load_json(bad, "input")
