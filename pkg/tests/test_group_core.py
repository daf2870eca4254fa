import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from carnot_calc import group_core as gc

from helpers import ZOO, unipotent_log


def engel_matrices():
    """A faithful 4x4 representation: X1 = E12+E23+E34, X2 = E34, X3 = E24, X4 = E14."""
    E = lambda i, j: np.eye(4)[:, [i - 1]] @ np.eye(4)[[j - 1], :]  # noqa: E731
    return np.stack([E(1, 2) + E(2, 3) + E(3, 4), E(3, 4), E(2, 4), E(1, 4)])


def heisenberg_matrices():
    E = lambda i, j: np.eye(3)[:, [i - 1]] @ np.eye(3)[[j - 1], :]  # noqa: E731
    return np.stack([E(1, 2), E(2, 3), E(1, 3)])


def matrix_oracle(basis, p, q):
    """Group product through exp/log of a faithful matrix representation."""
    A = np.tensordot(p, basis, axes=1)
    B = np.tensordot(q, basis, axes=1)
    L = unipotent_log(expm(A) @ expm(B))
    coords, *_ = np.linalg.lstsq(basis.reshape(len(basis), -1).T, L.ravel(), rcond=None)
    return coords


def test_engel_representation_matches_brackets():
    M = engel_matrices()
    G = gc.engel()
    for i in range(4):
        for j in range(4):
            comm = M[i] @ M[j] - M[j] @ M[i]
            assert np.allclose(comm, np.tensordot(G.structure_constants[i, j], M, axes=1))


@pytest.mark.parametrize("name,basis", [("engel", engel_matrices()), ("H1", heisenberg_matrices())])
def test_bch_against_matrix_oracle(name, basis, rng):
    G = ZOO[name]
    for _ in range(50):
        p, q = rng.normal(size=(2, G.n))
        assert np.allclose(G.multiply(p, q), matrix_oracle(basis, p, q), atol=1e-11)


def test_heisenberg_sign_of_x2_field():
    # [X1, X2] = X3 forces X2 = ∂2 + ½ x1 ∂3
    G = gc.heisenberg(1)
    assert np.allclose(G.left_invariant_field(2, np.array([1.0, 2.0, 3.0])), [0.0, 1.0, 0.5])
    assert np.allclose(G.left_invariant_field(1, np.array([1.0, 2.0, 3.0])), [1.0, 0.0, -1.0])


def test_free_group_product_of_generators():
    F = gc.free_group(2)
    assert np.allclose(F.multiply([1.0, 0, 0], [0, 1.0, 0]), [1.0, 1.0, -0.5])


@pytest.mark.parametrize("m,expected", [(2, 3), (3, 6), (4, 10)])
def test_free_dimension(m, expected):
    assert gc.free_group(m).n == m + m * (m - 1) // 2 == expected


def test_left_invariant_frame_is_derivative_of_right_translation(group, rng):
    p = rng.normal(size=group.n)
    h = 1e-6
    for j in range(group.n):
        e = np.zeros(group.n)
        e[j] = h
        fd = (group.multiply(p, e) - group.multiply(p, -e)) / (2 * h)
        assert np.allclose(fd, group.left_invariant_field(j + 1, p), atol=1e-8)


def test_closed_forms_match_bch(group, rng):
    p = rng.normal(size=(200, group.n))
    q = rng.normal(size=(200, group.n))
    assert np.max(np.abs(gc.closed_form_multiply(group, p, q) - group.multiply(p, q))) < 1e-12


@pytest.mark.parametrize(
    "entries,axiom",
    [
        ([[1, 2, 3, 1.0], [2, 1, 3, 1.0]], "antisymmetry"),
        ([[1, 2, 2, 1.0], [2, 1, 2, -1.0]], "grading"),
    ],
)
def test_axiom_violations_are_named(entries, axiom):
    with pytest.raises(gc.GroupSpecError) as err:
        gc.from_sparse((2, 1), entries)
    assert err.value.axiom == axiom


def test_generation_violation():
    with pytest.raises(gc.GroupSpecError) as err:
        gc.from_sparse((2, 2), [[1, 2, 3, 1.0]], symmetrize=True)
    assert err.value.axiom == "generation"


def test_jacobi_violation():
    # [X1,X2]=X4, [X2,X3]=X4 ... on a 3+1 algebra plus a made-up step-3 term
    C = [[1, 2, 4, 1.0], [1, 4, 5, 1.0], [2, 4, 5, 1.0], [1, 3, 4, 1.0], [3, 4, 5, 5.0]]
    with pytest.raises(gc.GroupSpecError) as err:
        gc.from_sparse((3, 1, 1), C, symmetrize=True)
    assert err.value.axiom == "jacobi"


def test_load_group_json_roundtrip(tmp_path):
    G = gc.engel()
    path = tmp_path / "engel.json"
    path.write_text(json.dumps(G.to_dict()))
    H = gc.load_group_json(path)
    assert H.same_as(G)


def test_builtin_names():
    assert gc.builtin("h1").n == 3
    assert gc.builtin("H2").n == 5
    assert gc.builtin("free3").n == 6
    assert gc.builtin("engel").step == 3
    with pytest.raises(KeyError):
        gc.builtin("so3")


def test_mismatched_point_shape():
    with pytest.raises(gc.GroupMismatchError):
        gc.heisenberg(1).multiply(np.zeros(3), np.zeros(4))


def test_nonpositive_dilation():
    with pytest.raises(ValueError):
        gc.heisenberg(1).dilate(0.0, np.ones(3))


def test_conjugation_keeps_first_layer_exactly(group, rng):
    p, q = rng.normal(size=(2, group.n))
    layers = group.conjugation_residual(p, q)
    assert np.all(layers[0] == 0.0)


# properties --------------------------------------------------------------------------

coords = st.floats(-3, 3, allow_nan=False, allow_infinity=False, allow_subnormal=False)
names = st.sampled_from(sorted(ZOO))


@st.composite
def group_and_points(draw, count=3):
    G = ZOO[draw(names)]
    pts = [draw(arrays(np.float64, G.n, elements=coords)) for _ in range(count)]
    return G, pts


@settings(max_examples=60, deadline=None)
@given(group_and_points())
def test_associativity(data):
    G, (p, q, r) = data
    lhs = G.multiply(G.multiply(p, q), r)
    rhs = G.multiply(p, G.multiply(q, r))
    assert np.allclose(lhs, rhs, atol=1e-9, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(group_and_points(2), st.floats(0.01, 10))
def test_dilation_is_an_automorphism(data, lam):
    G, (p, q) = data
    lhs = G.dilate(lam, G.multiply(p, q))
    rhs = G.multiply(G.dilate(lam, p), G.dilate(lam, q))
    assert np.allclose(lhs, rhs, atol=1e-9 * max(1, lam) ** 4, rtol=1e-10)


@settings(max_examples=60, deadline=None)
@given(group_and_points(1), st.floats(0.01, 10))
def test_norm_is_homogeneous_and_symmetric(data, lam):
    G, (p,) = data
    assert np.isclose(G.hom_norm(G.dilate(lam, p)), lam * G.hom_norm(p), rtol=1e-10, atol=1e-300)
    assert np.isclose(G.hom_norm(G.inverse(p)), G.hom_norm(p))


@settings(max_examples=60, deadline=None)
@given(group_and_points(1))
def test_inverse(data):
    G, (p,) = data
    assert np.allclose(G.multiply(p, G.inverse(p)), 0.0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(group_and_points(2))
def test_conjugate_equals_product_form(data):
    G, (p, q) = data
    assert np.allclose(G.conjugate(p, q), G.multiply(G.multiply(G.inverse(p), q), p), atol=1e-9)
