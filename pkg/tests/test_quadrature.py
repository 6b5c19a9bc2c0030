from math import factorial

import numpy as np
import pytest

from nlswave.quadrature import MAX_DEGREE, integrate_on_triangle, rule_for_degree

DEGREES = range(1, MAX_DEGREE + 1)


def monomial_integral(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("d", DEGREES)
def test_rule_invariants(d):
    rule = rule_for_degree(d)
    assert rule.exact_degree >= d
    assert np.all(rule.points >= 0)
    assert np.allclose(rule.points.sum(axis=1), 1, atol=1e-14, rtol=0)
    assert abs(rule.weights.sum() - 0.5) < 1e-14


@pytest.mark.parametrize("d", DEGREES)
def test_monomial_exactness(d):
    rule = rule_for_degree(d)
    x, y = rule.xy.T
    for a in range(d + 1):
        for b in range(d + 1 - a):
            q = np.sum(rule.weights * x**a * y**b)
            assert abs(q - monomial_integral(a, b)) < 1e-13, (a, b)


def test_low_order_rules():
    r1 = rule_for_degree(1)
    assert np.allclose(r1.points, [[1 / 3, 1 / 3, 1 / 3]])
    assert np.allclose(r1.weights, [0.5])
    r2 = rule_for_degree(2)
    assert len(r2) == 3
    assert np.allclose(r2.weights, 1 / 6)
    assert np.all(np.sort(r2.points, axis=1)[:, 0] == 0)  # edge midpoints
    x = r2.xy[:, 0]
    assert abs(np.sum(r2.weights * x**2) - 1 / 12) < 1e-15


@pytest.mark.parametrize("d", [0, 11, 2.5, "3"])
def test_unsupported_degree(d):
    with pytest.raises(ValueError):
        rule_for_degree(d)


REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def test_integrate_examples():
    assert integrate_on_triangle(lambda x, y: np.ones_like(x), REF, rule_for_degree(1)) == pytest.approx(0.5, abs=1e-15)
    assert integrate_on_triangle(lambda x, y: x, REF, rule_for_degree(1)) == pytest.approx(1 / 6, abs=1e-15)
    v = integrate_on_triangle(lambda x, y: x**2 * y**3, REF, rule_for_degree(5))
    assert abs(v - 1 / 420) < 1e-15


def test_integrate_complex_and_orientation():
    tri = np.array([[0.2, 0.1], [0.3, 0.9], [1.1, 0.4]])
    f = lambda x, y: (1 + 2j) * x * y  # noqa: E731
    a = integrate_on_triangle(f, tri, rule_for_degree(3))
    b = integrate_on_triangle(f, tri[::-1], rule_for_degree(3))
    assert abs(a - b) < 1e-15
    assert isinstance(a, complex) or np.iscomplexobj(a)


@pytest.mark.parametrize("d", [2, 5, 8])
def test_affine_invariance(d, rng):
    """int_A f = |J| int_ref f o A for polynomial f of degree d."""
    rule = rule_for_degree(d)
    coeffs = rng.normal(size=(d + 1, d + 1))

    def f(x, y):
        return sum(coeffs[a, b] * x**a * y**b for a in range(d + 1) for b in range(d + 1 - a))

    tri = rng.uniform(-1, 2, size=(3, 2))
    B = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    jac = abs(np.linalg.det(B))
    direct = integrate_on_triangle(f, tri, rule)
    # pulled back: exact monomial integration of f o A on the reference triangle
    from conftest import collapsed_gauss

    X, Y, W = collapsed_gauss(d + 2)
    px = tri[0, 0] + B[0, 0] * X + B[0, 1] * Y
    py = tri[0, 1] + B[1, 0] * X + B[1, 1] * Y
    pulled = jac * np.sum(W * f(px, py))
    assert abs(direct - pulled) < 1e-13 * max(1, abs(pulled))
