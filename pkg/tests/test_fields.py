import numpy as np
import pytest
from scipy import integrate

from carnot_calc import catalog as cat
from carnot_calc import group_core as gc
from carnot_calc.fields import (
    NumericalBreakdown,
    ProjectedField,
    curve_field_residual,
    eval_field,
    field_invariance_check,
    flow,
    flow_batch,
    rk4_batch,
    translate_curve,
)
from carnot_calc.splitting import Box, DomainError, GraphFunction, Splitting, graph_map

from helpers import ZOO


def trig_phi(sp):
    def f(w):
        v = np.sin(w[..., 0]) + 0.3 * w[..., -1] ** 2
        return np.stack([v * (i + 1) for i in range(sp.k)], axis=-1)

    return GraphFunction(sp, f, smoothness="C1", name="trig")


def pushforward_oracle(phi, w, j, h=1e-6):
    """d/dt π_W(Φ(w)·exp(tX_j)) at t = 0 by central differences."""
    sp = phi.splitting
    G = sp.group
    e = np.zeros(G.n)
    e[j - 1] = h
    P = graph_map(phi, w)
    plus = sp.w_coords(sp.project_W(G.multiply(P, e)))
    minus = sp.w_coords(sp.project_W(G.multiply(P, -e)))
    return (plus - minus) / (2 * h)


CASES = [
    ("H1", 1, "heisenberg"),
    ("H2", 1, "heisenberg"),
    ("H2", 2, "heisenberg"),
    ("step2_random", 1, "step2"),
    ("H2", 1, "step2"),
    ("engel", 1, "engel"),
    ("F3", 1, "free2"),
    ("F4", 1, "free2"),
]


@pytest.mark.parametrize("name,k,backend", CASES)
def test_generic_field_is_the_pushforward(name, k, backend, rng):
    sp = Splitting(ZOO[name], k)
    phi = trig_phi(sp)
    w = rng.uniform(-1, 1, size=(20, sp.dim_w))
    for j in range(k + 1, sp.n + 1):
        assert np.allclose(eval_field(ProjectedField(phi, j), w), pushforward_oracle(phi, w, j), atol=1e-8)


@pytest.mark.parametrize("name,k,backend", CASES)
def test_closed_form_frames_match_generic(name, k, backend, rng):
    sp = Splitting(ZOO[name], k)
    phi = trig_phi(sp)
    w = rng.uniform(-1, 1, size=(300, sp.dim_w))
    for j in range(k + 1, sp.n + 1):
        gen = eval_field(ProjectedField(phi, j, "generic"), w)
        closed = eval_field(ProjectedField(phi, j, backend), w)
        assert np.max(np.abs(gen - closed)) < 1e-10


def test_engel_closed_form_by_hand(rng):
    sp = Splitting(gc.engel(), 1)
    phi = trig_phi(sp)
    w = rng.uniform(-1, 1, size=(50, 3))
    p = phi(w)[:, 0]
    D2 = eval_field(ProjectedField(phi, 2), w)
    D3 = eval_field(ProjectedField(phi, 3), w)
    assert np.allclose(D2, np.stack([np.ones_like(p), p, p * p / 2], axis=-1), atol=1e-13)
    assert np.allclose(D3, np.stack([0 * p, np.ones_like(p), p], axis=-1), atol=1e-13)


def test_backend_must_fit_the_group():
    sp = Splitting(gc.engel(), 1)
    with pytest.raises(ValueError):
        ProjectedField(trig_phi(sp), 2, "heisenberg")


def test_rk4_is_fourth_order():
    # y' = y on [0, 1]
    errs = []
    for n in (8, 16, 32):
        y, _, _, _ = rk4_batch(lambda y: y, np.ones((1, 1)), 1.0, n)
        errs.append(abs(y[0, 0] - np.e))
    assert 14 < errs[0] / errs[1] < 18 and 14 < errs[1] / errs[2] < 18


def test_rk4_aux_integral_matches_quadrature():
    y, I, _, _ = rk4_batch(lambda y: np.ones_like(y), np.zeros((1, 1)), 2.0, 20, aux=lambda y: y ** 2)
    assert np.isclose(I[0, 0], 8.0 / 3.0, atol=1e-12)


def test_flow_basics(rng):
    sp = Splitting(gc.free_group(3), 1)
    phi = trig_phi(sp)
    gamma = flow(ProjectedField(phi, 2), np.full(sp.dim_w, 0.1), (-0.2, 0.3), h=1e-3)
    assert gamma.times[0] == pytest.approx(-0.2) and gamma.times[-1] == pytest.approx(0.3)
    assert np.allclose(gamma.states[gamma.origin_index], 0.1)
    assert gamma.triangular_residual() < 1e-12
    assert curve_field_residual(gamma) < 1e-5
    assert gamma.solver_meta["error_estimate"] < 1e-10
    # the running integral of φ agrees with Simpson quadrature of the samples
    simpson = integrate.simpson(gamma.phi_values[:, 0], x=gamma.times)
    span = gamma.phi_integral[-1, 0] - gamma.phi_integral[0, 0]
    assert abs(span - simpson) < 1e-9


def test_flow_csv(tmp_path):
    sp = Splitting(gc.heisenberg(1), 1)
    gamma = flow(ProjectedField(trig_phi(sp), 2), np.zeros(2), (0, 0.1), h=0.01)
    path = tmp_path / "c.csv"
    gamma.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x2,x3,phi1"
    assert len(lines) == 1 + len(gamma.times)


def test_flow_errors():
    sp = Splitting(gc.heisenberg(1), 1)
    boxed = GraphFunction(sp, lambda w: w[..., 0], domain=Box.unit(2))
    with pytest.raises(DomainError):
        flow(ProjectedField(boxed, 2), np.array([2.0, 0.0]), (0, 1))
    with pytest.raises(ValueError):
        flow(ProjectedField(boxed, 2), np.array([0.5, 0.5]), (0.1, 1))
    nan_phi = GraphFunction(sp, lambda w: np.full(w.shape[:-1], np.nan))
    with pytest.raises(NumericalBreakdown):
        flow(ProjectedField(nan_phi, 2), np.zeros(2), (0, 0.1))


def test_flow_stops_at_domain_exit():
    sp = Splitting(gc.heisenberg(1), 1)
    boxed = GraphFunction(sp, lambda w: w[..., 0], domain=Box.unit(2))
    gamma = flow(ProjectedField(boxed, 2), np.array([0.5, 0.5]), (0, 2.0), h=0.01)
    assert gamma.exited
    assert np.all(boxed.in_domain(gamma.states))


def test_engel_x3_flow_matches_closed_form_off_the_axis():
    e = cat.engel_phi_alpha(0.5)
    a = np.array([0.0, 0.0, 1e-2])
    gamma = flow(ProjectedField(e.phi, 3), a, (0, 0.5), h=1e-3)
    closed = e.curves["x3"](a[None, :], gamma.times)[0]
    assert np.max(np.abs(gamma.states - closed)) < 1e-9


def test_engel_x3_closed_form_from_origin_is_an_integral_curve():
    # x4 = (t/2)^2 solves x4' = sqrt(x4) with x4(0) = 0 (RK4 picks the other branch x4 = 0)
    e = cat.engel_phi_alpha(0.5)
    t = np.linspace(0.01, 0.5, 50)
    curve = e.curves["x3"](np.zeros((1, 3)), t)[0]
    assert np.allclose(curve[:, 2], (t / 2) ** 2, atol=1e-15)
    h = 1e-6
    d = (e.curves["x3"](np.zeros((1, 3)), t + h)[0] - e.curves["x3"](np.zeros((1, 3)), t - h)[0]) / (2 * h)
    assert np.allclose(d, eval_field(ProjectedField(e.phi, 3), curve), atol=1e-8)


def test_translate_curve_is_integral_curve(rng):
    for name in ("H2", "engel", "F3"):
        sp = Splitting(ZOO[name], 1)
        phi = trig_phi(sp)
        gamma = flow(ProjectedField(phi, 2), np.full(sp.dim_w, 0.1), (0, 0.3), h=1e-3)
        for _ in range(3):
            q = rng.uniform(-1, 1, sp.n)
            assert curve_field_residual(translate_curve(gamma, q)) < 1e-5


def test_field_invariance(rng):
    for name in ("H1", "engel", "F3", "step2_random"):
        sp = Splitting(ZOO[name], 1)
        phi = trig_phi(sp)
        f = lambda a: np.sin(a[..., 0]) + a[..., -1] ** 2  # noqa: E731
        for _ in range(5):
            q = rng.uniform(-1, 1, sp.n)
            w = rng.uniform(-0.5, 0.5, (10, sp.dim_w))
            assert field_invariance_check(phi, q, f, w) < 1e-6


def test_flow_batch_per_row_times():
    sp = Splitting(gc.heisenberg(1), 1)
    phi = trig_phi(sp)
    T = np.array([0.1, -0.2, 0.0])
    y, _, _, _ = flow_batch(ProjectedField(phi, 2), np.zeros((3, 2)), T, 16)
    assert np.allclose(y[:, 0], T)
    assert np.allclose(y[2], 0.0)
