import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nctorus.bimodule import (AlgebraElement, ModuleElement, TruncationError, act_A, act_B,
                              build_embeddings, embeddings_for, imprimitivity_check, inner_A, inner_B,
                              l2_inner, left_action, left_action_formula, module_trace_literal, module_trace_numeric,
                              module_trace_report, quadrature_inner, right_action,
                              right_action_formula)
from nctorus.cocycle import dual_parameter
from nctorus.skewmat import SkewMatrix

THETA = 1 / np.sqrt(2)
G3 = np.array([[0, 0.618, 0.37], [-0.618, 0, -0.21], [-0.37, 0.21, 0]])


def rotation(theta):
    return np.array([[0, theta], [-theta, 0]])


@pytest.fixture(scope="module")
def E2():
    return embeddings_for(rotation(THETA), 1)


@pytest.fixture(scope="module")
def E3():
    return embeddings_for(G3, 1)


def same_element(u, v, x, k=None):
    return np.abs(u.evaluate(x, k) - v.evaluate(x, k)).max()


def test_embedding_example():
    th = 0.3
    E = build_embeddings(rotation(th), np.diag([1.0, th]), 1)
    np.testing.assert_allclose(E.t_points([2, 5])[0], [2, 5 * th])
    np.testing.assert_allclose(E.S, [[0, 1 / th], [-1, 0]])
    np.testing.assert_allclose(E.J, [[0, 1], [-1, 0]])
    np.testing.assert_allclose(E.Jp, [[0, 1], [0, 0]])


def test_embedding_shapes_and_blocks(E3):
    assert E3.T.shape == E3.S.shape == (4, 3) and E3.J.shape == (4, 4)
    np.testing.assert_array_equal(E3.J, [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])
    np.testing.assert_array_equal(E3.Jp, np.where(E3.J < 0, 0, E3.J))
    np.testing.assert_allclose(E3.T[3], [G3[2, 0], G3[2, 1], 0.0])      # (g21, T32) row
    assert E3.T[2].tolist() == [0, 0, 1]


def test_triangle_reading_reproduces_gamma22():
    g = np.zeros((5, 5))
    g[2:, 2:] = [[0, 0.3, -0.2], [-0.3, 0, 0.7], [0.2, -0.7, 0]]
    g[:2, :2] = rotation(0.5)
    E = embeddings_for(g, 1)
    t32 = E.T[3 + 2:, 2:]
    np.testing.assert_allclose(t32 - t32.T, g[2:, 2:])
    assert np.all(np.tril(t32) == 0)


def test_embedding_residual_error():
    with pytest.raises(ValueError):
        build_embeddings(rotation(0.5), np.eye(2), 1)


def test_cocycle_parameters(E3):
    np.testing.assert_allclose(E3.a_param, G3, atol=1e-14)
    dual = dual_parameter(SkewMatrix.from_numpy(G3, 1, 1)).to_numpy()
    D = np.diag([1, 1, -1])
    np.testing.assert_allclose(E3.b_param, D @ dual @ D, atol=1e-13)
    mixed = E3.T.T @ E3.J @ E3.S
    np.testing.assert_allclose(mixed, np.rint(mixed), atol=1e-13)


def test_identity_shifts(E3):
    f = ModuleElement.gaussian(1, 1, center=[0.2], freq=[0.1])
    for g in (act_A(f, (0, 0, 0), E3), act_B((0, 0, 0), f, E3)):
        np.testing.assert_allclose(g.coefs, f.coefs)
        np.testing.assert_allclose(g.centers, f.centers)


def test_single_atom_translation():
    E = build_embeddings(rotation(0.4), np.diag([1.0, 0.4]), 1)
    f = ModuleElement.gaussian(1)
    g = act_A(f, (1, 0), E)
    assert g.centers[0, 0] == 1.0 and g.freqs[0, 0] == 0.0 and g.coefs[0] == f.coefs[0]
    for l in ((1, 1), (0, 1), (2, -1)):
        assert act_A(f, l, E).centers[0, 0] == pytest.approx(+E.t_points(l)[0, 0])
        assert act_B(l, f, E).centers[0, 0] == pytest.approx(-E.s_points(l)[0, 0])


BOX3 = list(itertools.product((-1, 0, 1), repeat=3))


def test_twisted_representation_exhaustive(E3):
    f = ModuleElement.gaussian(1, 1, center=[0.1], freq=[-0.3])
    for l, m in itertools.product(BOX3, repeat=2):
        l, m = np.array(l), np.array(m)
        ratio = act_A(act_A(f, l, E3), m, E3).coefs / act_A(f, l + m, E3).coefs
        assert abs(ratio[0] - np.exp(1j * np.pi * (l @ G3 @ m))) <= 1e-10
        ratio = act_B(l, act_B(m, f, E3), E3).coefs / act_B(l + m, f, E3).coefs
        assert abs(ratio[0] - np.exp(1j * np.pi * (l @ E3.b_param @ m))) <= 1e-10


def test_actions_commute_exhaustive(E3):
    f = ModuleElement.gaussian(1, 1, center=[0.1], freq=[-0.3]) + ModuleElement.gaussian(
        1, 1, center=[-0.5], width=[[2.0]], site=[1], coef=0.5j)
    for l, m in itertools.product(BOX3, repeat=2):
        u = act_B(l, act_A(f, m, E3), E3)
        v = act_A(act_B(l, f, E3), m, E3)
        assert np.abs(u.coefs - v.coefs).max() <= 1e-10
        assert np.array_equal(u.sites, v.sites)
        assert np.abs(u.centers - v.centers).max() <= 1e-12


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3), st.integers(-2, 2))
@settings(max_examples=40)
def test_closed_form_matches_defining_formula(l, site):
    E = embeddings_for(G3, 1)
    f = ModuleElement.gaussian(1, 1, center=[0.4], freq=[0.7], width=[[1.5]], site=[site])
    x = np.linspace(-4, 4, 33)[:, None]
    for g, formula, shift in ((act_A(f, l, E), right_action_formula(f, l, E), E.t_points(l)[0, 2]),
                              (act_B(l, f, E), left_action_formula(l, f, E), -E.s_points(l)[0, 2])):
        k = np.full((len(x), 1), site + int(round(shift)))
        assert np.abs(g.evaluate(x, k) - formula(x, k)).max() <= 1e-12


def test_mass_closed_form_vs_quadrature(E2):
    f = ModuleElement.gaussian(1)
    assert inner_A(f, f, E2, 8).trace() == pytest.approx(1.0, abs=1e-14)
    h = f + ModuleElement.gaussian(1, center=[0.7], freq=[0.4], width=[[0.6]], coef=0.3 - 0.2j)
    mass = inner_A(h, h, E2, 8).trace()
    assert abs(mass.imag) <= 1e-14 and mass.real > 0
    assert abs(mass - quadrature_inner(h, h)) <= 1e-8
    assert abs(l2_inner(h, h) - mass) <= 1e-14


def test_mass_two_dimensional_and_lattice():
    f = ModuleElement.gaussian(2, width=[[1.0, 0.2], [0.2, 0.8]], freq=[0.3, -0.1])
    assert abs(quadrature_inner(f, f, order=60) - 1.0) <= 1e-8
    g = ModuleElement.gaussian(1, 1, site=[2]) + ModuleElement.gaussian(1, 1, center=[0.3], site=[-1])
    assert abs(l2_inner(g, g) - quadrature_inner(g, g)) <= 1e-8


@pytest.mark.parametrize("l", [(0, 0), (1, 0), (0, 1), (1, -1), (-2, 1)])
def test_inner_coefficients_vs_quadrature(E2, l):
    f = ModuleElement.gaussian(1, center=[0.2], freq=[0.1])
    g = ModuleElement.gaussian(1, center=[-0.3], width=[[1.3]], coef=0.8 + 0.1j)
    a = inner_A(f, g, E2, 3)
    assert abs(a[l] - quadrature_inner(act_A(f, l, E2), g)) <= 1e-8
    b = inner_B(f, g, E2, 3)
    assert abs(b[l] - quadrature_inner(act_B(l, g, E2), f)) <= 1e-8


def test_far_apart_centres_are_nearly_orthogonal(E2):
    d = 6.0
    f, g = ModuleElement.gaussian(1), ModuleElement.gaussian(1, center=[d])
    assert abs(inner_A(f, g, E2, 2)[(0, 0)]) <= np.exp(-np.pi * d * d / 2) * 1.0001


def test_hermiticity(E3):
    f = ModuleElement.gaussian(1, 1, center=[0.2], freq=[0.3])
    g = ModuleElement.gaussian(1, 1, center=[-0.4], width=[[0.7]], coef=1 - 1j, site=[1])
    for inner in (inner_A, inner_B):
        a, b = inner(f, g, E3, 4), inner(g, f, E3, 4).adjoint()
        keys = set(a.as_dict()) | set(b.as_dict())
        assert max(abs(a[k] - b[k]) for k in keys) <= 1e-10
    assert inner_A(f, f, E3, 4).trace().real > 0


def test_right_module_compatibility(E2):
    f = ModuleElement.gaussian(1)
    g = ModuleElement.gaussian(1, center=[0.3], freq=[-0.2])
    idx = np.array([[0, 0], [1, 0], [0, -1]])
    a = AlgebraElement(idx, np.array([1.0, 0.5j, -0.25]), E2.a_param, 1)
    lhs = inner_A(f, right_action(g, a, E2), E2, 10)
    rhs = inner_A(f, g, E2, 9) * a
    for k in itertools.product(range(-4, 5), repeat=2):
        assert abs(lhs[k] - rhs[k]) <= 1e-10


def test_left_module_compatibility(E2):
    f, g = ModuleElement.gaussian(1), ModuleElement.gaussian(1, center=[0.3], freq=[-0.2])
    idx = np.array([[0, 0], [1, 0], [0, -1]])
    b = AlgebraElement(idx, np.array([1.0, 0.5j, -0.25]), E2.b_param, 1)
    lhs = inner_B(left_action(b, f, E2), g, E2, 10)
    rhs = b * inner_B(f, g, E2, 9)
    for k in itertools.product(range(-4, 5), repeat=2):
        assert abs(lhs[k] - rhs[k]) <= 1e-10


def test_imprimitivity_example(E2):
    f = ModuleElement.gaussian(1)
    assert imprimitivity_check(f, f, f, E2, 8).deviation <= 1e-6


def test_imprimitivity_refinement(E3):
    f = ModuleElement.gaussian(1, 1)
    g = ModuleElement.gaussian(1, 1, center=[0.3], freq=[0.2], site=[1])
    devs = [imprimitivity_check(f, g, f, E3, L).deviation for L in (2, 4, 8)]
    assert devs[0] > devs[1] > devs[2] and devs[2] <= 1e-12


def test_imprimitivity_zero_element(E2):
    z = ModuleElement.zero(1)
    f = ModuleElement.gaussian(1)
    rep = imprimitivity_check(z, f, f, E2, 4)
    assert rep.deviation == 0.0 and rep.scale == 0.0


@pytest.mark.parametrize("theta", [0.3, 0.618, 0.85])
def test_trace_matches_pfaffian_p1(theta):
    E = embeddings_for(rotation(theta), 1)
    rep = module_trace_report(ModuleElement.gaussian(1), E, 12)
    assert rep.deviation <= 1e-3 and rep.pfaffian_sign == 1


def test_trace_invariances(E2):
    f = ModuleElement.gaussian(1, center=[0.1], freq=[0.2])
    base = module_trace_numeric(f, E2, 10)
    assert abs(base - THETA) <= 1e-3
    assert abs(module_trace_numeric(f.scaled(2.5 - 1j), E2, 10) - base) <= 1e-9
    for l in ((1, 0), (0, 1), (2, -3)):
        assert abs(module_trace_numeric(act_A(f, l, E2), E2, 10) - base) <= 1e-6


@pytest.mark.parametrize("theta", [0.3, 0.618])
def test_trace_two_routes(theta):
    E = embeddings_for(rotation(theta), 1)
    f = ModuleElement.gaussian(1, center=[0.2], width=[[0.8]])
    raw, scaled = module_trace_literal(f, E, 10)
    assert abs(raw - 1.0) <= 1e-9                    # _B<f~, f~> = 1 pins the A side to e / kappa
    assert abs(scaled - module_trace_numeric(f, E, 12)) <= 1e-6
    assert abs(scaled - theta) <= 1e-6


def test_trace_with_lattice_factor(E3):
    rep = module_trace_report(ModuleElement.gaussian(1, 1, site=[3]), E3, 10)
    assert rep.deviation <= 1e-3


def test_trace_errors(E2):
    with pytest.raises(TruncationError):
        module_trace_report(ModuleElement.zero(1), E2, 4)
    with pytest.raises(TruncationError):
        module_trace_report(ModuleElement.gaussian(1), E2, 200, max_box=1000)


def test_module_element_validation():
    with pytest.raises(ValueError):
        ModuleElement.gaussian(1, width=[[-1.0]])
    f = ModuleElement.gaussian(2, 1, site=[4])
    atoms = list(f.atoms())
    assert len(atoms) == 1 and atoms[0].site == (4,)
    assert ModuleElement.from_atoms(atoms, 2, 1).coefs[0] == f.coefs[0]
