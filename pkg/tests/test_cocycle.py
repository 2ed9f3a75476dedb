import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field_endpoint, random_rational_skew, rational_skew
from nctorus.cocycle import (PhaseCocycle, cocycle_invariant, cocycle_phase, cohomology_invariant,
                             dual_parameter, field_cocycle, twist_by_coboundary, verify_cocycle,
                             verify_cocycle_box)
from nctorus.field import build_path
from nctorus.normalize import shifted
from nctorus.scalar import BackendError
from nctorus.skewmat import SkewMatrix

vec = lambda n: st.lists(st.integers(-4, 4), min_size=n, max_size=n)  # noqa: E731


def test_phase_values():
    A = SkewMatrix.from_upper(2, [Fraction(1, 3)])
    assert cocycle_phase(A, (1, 0), (0, 1)) == Fraction(1, 6)
    assert cocycle_phase(A, (0, 1), (1, 0)) == Fraction(5, 6)
    with pytest.raises(BackendError):
        cocycle_phase(SkewMatrix.symbolic(2), (1, 0), (0, 1))


@given(rational_skew(min_n=1, max_n=5), st.data())
def test_identity_exact_on_random_triples(A, data):
    x, y, z = (tuple(data.draw(vec(A.n))) for _ in range(3))
    w = PhaseCocycle.from_matrix(A)
    assert verify_cocycle(w, [(x, y, z)]).passed


@pytest.mark.parametrize("n", [1, 2, 3])
def test_box_check(n):
    A = random_rational_skew(random.Random(n), n)
    res = verify_cocycle_box(A, 2)
    assert res.passed and res.checked == 5 ** (3 * n)


def test_box_check_agrees_with_direct_check():
    A = random_rational_skew(random.Random(9), 2)
    rng = np.arange(-2, 3)
    triples = [((a, b), (c, d), (e, f)) for a in rng for b in rng for c in rng for d in rng
               for e in (-2, 0, 2) for f in (-1, 1)]
    assert verify_cocycle(PhaseCocycle.from_matrix(A), triples).passed


def test_negative_control_detects_broken_cocycle():
    n = 2
    bad = PhaseCocycle(n, lambda x, y: Fraction(x[0] * x[0] * y[1], 7) % 1)
    res = verify_cocycle(bad, 200)
    assert not res.passed and res.witness is not None


@given(rational_skew(min_n=2, max_n=4), st.lists(st.fractions(-3, 3, max_denominator=5), min_size=4, max_size=4))
@settings(max_examples=30)
def test_coboundary_twist(A, coeffs):
    f = lambda x: sum((c * v * (v + 1) for c, v in zip(coeffs, x)), Fraction(0))  # noqa: E731
    w = PhaseCocycle.from_matrix(A)
    tw = twist_by_coboundary(w, f)
    assert verify_cocycle(tw, 50, seed=1).passed
    assert cocycle_invariant(tw) == cocycle_invariant(w) == cohomology_invariant(A)


def test_twist_requires_normalized_function():
    w = PhaseCocycle.from_matrix(SkewMatrix.symbolic(2).map(lambda _: Fraction(0)))
    with pytest.raises(ValueError):
        twist_by_coboundary(w, lambda x: Fraction(1, 2))


@given(rational_skew(min_n=2, max_n=5), st.integers(-5, 5))
def test_integer_shift_keeps_invariant(A, t):
    assert cohomology_invariant(shifted(A, t)) == cohomology_invariant(A)


def test_float_cocycle_and_field_fibers(rng):
    path = build_path(random_field_endpoint(rng, 1, 1), random_field_endpoint(rng, 1, 1), 1, 1)
    for r in (0.0, 0.3, 1.0):
        w = field_cocycle(path, r)
        assert not w.exact
        assert verify_cocycle(w, 300, tol=1e-10).passed


def test_dual_parameter_rational_and_float():
    A = random_rational_skew(random.Random(4), 5).with_split(2, 1)
    D = dual_parameter(A)
    assert D.backend == A.backend
    np.testing.assert_allclose(dual_parameter(A.to_float().with_split(2, 1)).to_numpy(), D.to_numpy(),
                               atol=1e-9)
    g = A.to_numpy()
    assert np.allclose(np.linalg.inv(g[:4, :4]), D.to_numpy()[:4, :4])
    with pytest.raises(ValueError):
        dual_parameter(random_rational_skew(random.Random(1), 3))
