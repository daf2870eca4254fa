import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carnot_calc import group_core as gc
from carnot_calc.config import ConfigError, load_schema, read_config, resolve, validate
from carnot_calc.expressions import Expression, ExpressionError, expression_function, polynomial_function
from carnot_calc.splitting import Splitting

SP_H1 = Splitting(gc.heisenberg(1), 1)
SP_F3 = Splitting(gc.free_group(3), 1)


def test_expression_arithmetic():
    f = expression_function(SP_H1, "c*x2 + x_3**2 - abs(-1) + sgn(x3) + chi(x2) + where(x3 > 0, 1, 2)", {"c": 3})
    w = np.array([[1.0, 2.0], [0.0, -1.0]])
    assert f(w)[:, 0].tolist() == [3 + 4 - 1 + 1 + 1 + 1, 0 + 1 - 1 - 1 + 1 + 2]


def test_expression_chained_comparison():
    f = expression_function(SP_H1, "0 < x2 <= 1")
    assert f(np.array([[0.5, 0], [1.5, 0], [0, 0]]))[:, 0].tolist() == [1.0, 0.0, 0.0]


def test_expression_free_names():
    f = expression_function(SP_F3, "y21 + y_32 + x3")
    assert f(np.array([1.0, 2.0, 3.0, 4.0, 5.0]))[0] == 2.0 + 3.0 + 5.0


@pytest.mark.parametrize(
    "text", ["__import__('os')", "x2.real", "lambda: 1", "foo(x2)", "q + 1", "[x2]", "x2 if x3 else 1", "'a'", "x2 @ x3", "1 +"]
)
def test_expression_rejects(text):
    with pytest.raises(ExpressionError):
        expression_function(SP_H1, text)


def test_expression_names_collected():
    assert Expression("a*x2 + sin(b)").names == {"a", "x2", "b"}


def test_expression_count_must_match_k():
    with pytest.raises(ExpressionError):
        expression_function(Splitting(gc.heisenberg(2), 2), "x3")


def test_polynomial_table_forms_agree(rng):
    a = polynomial_function(SP_F3, [{"coef": 2.0, "powers": {"x2": 2, "y31": 1}}, {"coef": -1.0, "powers": {}}])
    b = polynomial_function(SP_F3, [[2.0, [2, 0, 0, 1, 0]], [-1.0, [0, 0, 0, 0, 0]]])
    w = rng.normal(size=(10, 5))
    assert np.allclose(a(w), b(w))
    assert np.allclose(a(w)[:, 0], 2 * w[:, 0] ** 2 * w[:, 3] - 1)


def test_polynomial_rejects_bad_terms():
    with pytest.raises(ExpressionError):
        polynomial_function(SP_H1, [{"coef": 1.0, "powers": {"zz": 1}}])
    with pytest.raises(ExpressionError):
        polynomial_function(SP_H1, [[1.0, [-1, 0]]])


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(-3, 3, allow_subnormal=False), st.lists(st.integers(0, 3), min_size=5, max_size=5)),
        min_size=1,
        max_size=5,
    ),
    st.lists(st.floats(-1, 1, allow_subnormal=False), min_size=5, max_size=5),
)
def test_polynomial_gradient_matches_finite_differences(terms, point):
    f = polynomial_function(SP_F3, [[c, e] for c, e in terms])
    w = np.array(point)
    h = 1e-5
    fd = np.array([(f(w + h * np.eye(5)[i]) - f(w - h * np.eye(5)[i]))[0] / (2 * h) for i in range(5)])
    assert np.allclose(f.jacobian(w)[0], fd, atol=1e-6 * (1 + np.abs(fd).max()))


# config ---------------------------------------------------------------------------------


def test_schemas_load():
    for name in ("run_config", "group_spec", "report"):
        assert load_schema(name)["type"] == "object"


def test_validation_reports_field_paths():
    with pytest.raises(ConfigError) as err:
        validate({"seed": -1, "checks": {"nope": {}}, "flow": {"h": 0}})
    msg = str(err.value)
    assert "$.seed" in msg and "$.flow.h" in msg and "$.checks" in msg


def test_read_config_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "seed": 1,\n  "group": h1\n}\n')
    with pytest.raises(ConfigError) as err:
        read_config(p)
    assert "line 3" in str(err.value)


def test_resolve_catalog_and_function():
    R = resolve({"catalog": "engel_phi_alpha", "params": {"alpha": 0.5}})
    assert R.group.name == "engel" and R.region.dim == 3
    R = resolve({"group": "h1", "function": {"expr": "c*x2", "omega": ["c"]}, "params": {"c": 2}})
    assert R.entry.omega(np.zeros((1, 2))).tolist() == [[[2.0]]]
    R = resolve({"group": {"step2_skew": [[[0, 1], [-1, 0]]]}, "function": {"polynomial": [[1.0, [1, 0]]]}})
    assert R.group.n == 3


def test_resolve_errors():
    with pytest.raises(ConfigError):
        resolve({"group": "h1"})
    with pytest.raises(ConfigError):
        resolve({"catalog": "nope"})
    with pytest.raises(ConfigError):
        resolve({"catalog": "engel_phi_alpha", "region": {"lo": [-2, -2, -2], "hi": [2, 2, 2]}})
    with pytest.raises(ConfigError):
        resolve({"group": "h1", "function": {"expr": "zz"}})
    with pytest.raises(ConfigError):
        resolve({"group": "h9x", "function": {"expr": "x2"}})


def test_group_spec_schema_accepts_builtin_dump():
    validate(gc.engel().to_dict(), "group_spec")
    with pytest.raises(ConfigError):
        validate({"layer_dims": [2, 1], "structure_constants": [[1, 2, 3]]}, "group_spec")
    json.dumps(gc.engel().to_dict())
