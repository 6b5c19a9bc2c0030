import numpy as np
import pytest
import scipy.sparse as sp

from nlswave.fem import assemble_mass, assemble_stiffness, build_space
from nlswave.mesh import disk_mesh
from nlswave.sparse import (
    BreakdownError,
    CompositeOperator,
    MaxIterationsError,
    SolverError,
    apply,
    diag_of,
    solve_bicgstab,
)


def fem_operator(level=2, r=1, tau=0.05, W=None):
    space = build_space(disk_mesh(level=level), r)
    M = space.block(assemble_mass(space), "ff")
    K = space.block(assemble_stiffness(space), "ff")
    alpha = 1 / tau**2 + 0.5j / tau
    return CompositeOperator(alpha, 0.5, M, K, W)


def test_apply_matches_dense(rng):
    op = fem_operator()
    x = rng.normal(size=op.shape[0]) + 1j * rng.normal(size=op.shape[0])
    dense = op.alpha * op.M.toarray() + op.beta * op.K.toarray()
    assert np.allclose(apply(op, x), dense @ x, rtol=1e-14, atol=1e-12)
    assert np.allclose(op.to_dense(), dense)
    assert np.allclose(diag_of(op), np.diag(dense))
    assert op._fused is not None


def test_unfused_path(rng):
    A = sp.random(6, 6, density=0.5, random_state=1, format="csr") + sp.eye(6)
    B = sp.eye(6, format="csr")
    op = CompositeOperator(2.0, 1j, A, B)
    assert op._fused is None
    x = rng.normal(size=6) + 0j
    assert np.allclose(op @ x, (2 * A.toarray() + 1j * np.eye(6)) @ x)


def test_operator_validation():
    with pytest.raises(ValueError):
        CompositeOperator(1, 1, None, None)
    with pytest.raises(ValueError):
        CompositeOperator(1, 1, sp.eye(3), sp.eye(4))
    op = CompositeOperator(1, 1, None, sp.eye(3))
    with pytest.raises(ValueError):
        apply(op, np.ones(4))


def test_two_by_two_closed_form():
    op = CompositeOperator(0, 1, None, sp.csr_matrix(np.array([[2, 1j], [-1j, 2]])))
    x, stats = solve_bicgstab(op, np.array([1.0, 0.0]))
    assert np.allclose(x, [2 / 3, 1j / 3], atol=1e-14)
    assert stats.converged


def test_identity_and_zero_rhs():
    op = CompositeOperator(1, 0, sp.eye(5, format="csr"), sp.eye(5, format="csr"))
    b = np.arange(5) + 1j
    x, stats = solve_bicgstab(op, b)
    assert np.allclose(x, b)
    assert stats.iterations <= 1
    x, stats = solve_bicgstab(op, np.zeros(5))
    assert np.all(x == 0) and stats.iterations == 0


def test_warm_start_at_solution(rng):
    op = fem_operator()
    x_true = rng.normal(size=op.shape[0]) + 1j * rng.normal(size=op.shape[0])
    b = apply(op, x_true)
    x, stats = solve_bicgstab(op, b, x0=x_true)
    assert stats.iterations == 0
    assert np.array_equal(x, x_true)


@pytest.mark.parametrize("r", [1, 2])
def test_residual_contract(r, rng):
    W = None
    op = fem_operator(level=3, r=r, tau=0.01, W=W)
    b = rng.normal(size=op.shape[0]) + 1j * rng.normal(size=op.shape[0])
    for tol in (1e-8, 1e-12):
        x, stats = solve_bicgstab(op, b, tol=tol)
        true = np.linalg.norm(b - apply(op, x)) / np.linalg.norm(b)
        assert true <= tol
        assert stats.residual == pytest.approx(true, rel=1e-6)
        assert np.allclose(x, np.linalg.solve(op.to_dense(), b), rtol=0, atol=100 * tol * np.abs(x).max())


def test_linearity(rng):
    op = fem_operator()
    n = op.shape[0]
    b1, b2 = (rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(2))
    a, c = 0.7 - 0.2j, -1.3j
    x1, _ = solve_bicgstab(op, b1, tol=1e-14)
    x2, _ = solve_bicgstab(op, b2, tol=1e-14)
    x3, _ = solve_bicgstab(op, a * b1 + c * b2, tol=1e-14)
    assert np.linalg.norm(x3 - (a * x1 + c * x2)) <= 1e-10 * np.linalg.norm(x3)


def test_random_complex_symmetric_system(rng):
    n = 50
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = A + A.T + 20 * np.eye(n)
    op = CompositeOperator(0, 1, None, sp.csr_matrix(A))
    b = rng.normal(size=n) + 0j
    x, stats = solve_bicgstab(op, b, tol=1e-12)
    assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_failure_modes():
    op = fem_operator(level=3)
    b = np.ones(op.shape[0])
    with pytest.raises(MaxIterationsError) as exc:
        solve_bicgstab(op, b, tol=1e-14, maxit=1)
    assert isinstance(exc.value, SolverError)
    assert not exc.value.stats.converged
    # rotation: r0 is orthogonal to A r0, so rho/denominator vanish
    rot = CompositeOperator(0, 1, None, sp.csr_matrix(np.array([[1.0, 1.0], [-1.0, 1.0]])))
    skew = CompositeOperator(0, 1, None, sp.csr_matrix(np.array([[1e-300, 1.0], [-1.0, 1e-300]])))
    solve_bicgstab(rot, np.array([1.0, 0.0]))
    with pytest.raises(BreakdownError):
        solve_bicgstab(skew, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        solve_bicgstab(op, b, tol=0)
    with pytest.raises(ValueError):
        solve_bicgstab(op, np.ones(3))
