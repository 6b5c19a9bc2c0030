import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from scipy.integrate import dblquad

from nlswave import fem
from nlswave.fem import build_space
from nlswave.mesh import disk_mesh, unit_square_mesh
from nlswave.problems import example1, example2, zero_problem
from nlswave.scheme import (
    EnergyRecorder,
    ErrorRecorder,
    LeapFrog,
    SchemeConfig,
    SchemeState,
    discrete_energy,
    initialize,
    run,
    step,
    steps_for,
)
from nlswave.sparse import CompositeOperator, solve_bicgstab


def random_state(space, rng, scale=1.0):
    def vec():
        v = scale * (rng.normal(size=space.ndof) + 1j * rng.normal(size=space.ndof))
        v[space.boundary_dofs] = 0
        return v

    return SchemeState(1, 0.0, vec(), vec())


def test_config_validation():
    assert SchemeConfig(0.01, 10.0).N == 1000
    assert SchemeConfig.from_steps(1.0, 3).N == 3
    for kw in ({"tau": 0.3, "T": 1.0}, {"tau": 0, "T": 1.0}, {"tau": 2.0, "T": 1.0}):
        with pytest.raises(ValueError):
            SchemeConfig(**kw)
    with pytest.raises(ValueError):
        SchemeConfig(0.1, 1.0, init_mode="guess")
    assert steps_for(1.0, 0.3) == 4
    assert steps_for(1.0, 0.25) == 4


def test_zero_data_stays_zero():
    space = build_space(unit_square_mesh(4), 2)
    cfg = SchemeConfig(0.1, 1.0)
    state = initialize(zero_problem(), space, cfg)
    assert not state.U_prev.any() and not state.U_curr.any()
    new, report = step(state, zero_problem(), space, cfg)
    assert not new.U_curr.any()
    assert (new.n, new.t) == (2, pytest.approx(0.2))
    assert report.stats.iterations == 0
    e = discrete_energy(new, zero_problem(), space, cfg)
    assert e.total == 0


def test_energy_of_constant_state():
    space = build_space(unit_square_mesh(3), 1)
    cfg = SchemeConfig(0.1, 1.0)
    ones = np.ones(space.ndof, complex)
    e = discrete_energy(SchemeState(1, 0.1, ones, ones), zero_problem(), space, cfg)
    assert e.kinetic == 0
    assert abs(e.gradient) < 1e-28
    assert e.quartic == pytest.approx(0.5, abs=1e-15)
    assert e.potential == 0
    assert e.total == e.kinetic + e.gradient + e.quartic + e.potential


def test_interpolation_init_center_value():
    space = build_space(unit_square_mesh(4), 1)
    state = initialize(example2(), space, SchemeConfig(0.1, 1.0, init_mode="interpolation"))
    center = np.flatnonzero(np.all(np.isclose(space.dof_coords, 0.5), axis=1))[0]
    assert state.U_prev[center] == pytest.approx(1.0, abs=1e-15)
    assert (state.n, state.t) == (1, 0.1)


def test_one_dof_closed_form():
    """unit_square_mesh(2), P1: the only free dof is the centre hat function.

    The potential is a quadratic so that the assembly rule integrates
    w*phi^2 exactly and the oracle can use adaptive quadrature.
    """
    from dataclasses import replace

    from nlswave.fem import ScalarField

    problem = replace(example2(), w=ScalarField(lambda x, y: -(np.sqrt(2) * np.pi + x * y)))
    space = build_space(unit_square_mesh(2), 1)
    (c,) = space.free_dofs
    tau = 0.05
    scheme = LeapFrog(problem, space, SchemeConfig(tau, 1.0))
    a, b = 0.8 - 0.3j, 0.9 + 0.1j
    Um, Un = np.zeros(space.ndof, complex), np.zeros(space.ndof, complex)
    Um[c], Un[c] = a, b
    new, _ = scheme.step(SchemeState(1, tau, Um, Un))

    # centre hat on six right triangles of area 1/8
    M, K, phi4 = 1 / 8, 4.0, 1 / 20
    tris = scheme.space.mesh.vertices[scheme.space.mesh.triangles[np.any(scheme.space.mesh.triangles == c, axis=1)]]

    def w_phi2(tri):
        p0, p1, p2 = tri
        B = np.column_stack([p1 - p0, p2 - p0])
        k = list(np.where(np.all(tri == 0.5, axis=1))[0])[0]

        def f(t, s):
            x, y = p0 + B @ [s, t]
            lam = [1 - s - t, s, t][k]
            return problem.w(x, y) * lam * lam

        return abs(np.linalg.det(B)) * dblquad(f, 0, 1, 0, lambda s: 1 - s, epsabs=1e-15, epsrel=1e-12)[0]

    Wpot = sum(w_phi2(t) for t in tris)
    W = abs(b) ** 2 * phi4 + Wpot
    lhs = (1 / tau**2 + 0.5j / tau) * M + 0.5 * (K + W)
    rhs = (2 / tau**2) * M * b - ((1 / tau**2 - 0.5j / tau) * M + 0.5 * (K + W)) * a
    assert new.U_curr[c] == pytest.approx(rhs / lhs, abs=1e-13)
    assert not new.U_curr[space.boundary_dofs].any()


def dense_step(scheme, state):
    """Full complex system assembled densely and solved by Gaussian elimination."""
    space, tau = scheme.space, scheme.tau
    W = scheme.weighted_mass(state.U_curr).toarray()
    M, K = scheme.M.toarray(), scheme.K.toarray()
    Ap = (1 / tau**2 + 0.5j / tau) * M + 0.5 * (K + W)
    Am = (1 / tau**2 - 0.5j / tau) * M + 0.5 * (K + W)
    rhs = (2 / tau**2) * M @ state.U_curr - Am @ state.U_prev
    if scheme.problem.source is not None:
        rhs = rhs + fem.assemble_load(space, lambda x, y: scheme.problem.source(x, y, state.n * tau), scheme.rule)
    f, b = space.free_dofs, space.boundary_dofs
    U = np.zeros(space.ndof, complex)
    U[b] = scheme.problem.boundary_values(*space.dof_coords[b].T, (state.n + 1) * tau)
    U[f] = np.linalg.solve(Ap[np.ix_(f, f)], rhs[f] - Ap[np.ix_(f, b)] @ U[b])
    return U


@pytest.mark.parametrize(
    "problem, mesh, r",
    [
        (example2, lambda: unit_square_mesh(4), 1),
        (example2, lambda: unit_square_mesh(4), 2),
        (example1, lambda: disk_mesh(level=2), 1),
    ],
)
def test_step_matches_dense_solve(problem, mesh, r):
    scheme = LeapFrog(problem(), build_space(mesh(), r), SchemeConfig(0.05, 1.0))
    state = scheme.initialize()
    for _ in range(3):
        expected = dense_step(scheme, state)
        state, report = scheme.step(state)
        assert np.abs(state.U_curr - expected).max() <= 1e-10 * np.abs(expected).max()
        assert report.stats.converged


def test_step_index_guard():
    scheme = LeapFrog(example2(), build_space(unit_square_mesh(2), 1), SchemeConfig(0.5, 1.0))
    state = scheme.initialize()
    state, _ = scheme.step(state)
    with pytest.raises(ValueError):
        scheme.step(state)


def test_single_step_run_returns_initial_state():
    space = build_space(unit_square_mesh(4), 1)
    cfg = SchemeConfig(1.0, 1.0)
    res = run(example2(), space, cfg, observers=[EnergyRecorder(), ErrorRecorder()])
    init = initialize(example2(), space, cfg)
    assert res.state.n == 1 and not res.reports
    assert np.array_equal(res.state.U_curr, init.U_curr)
    assert len(res.series["energy"]) == 1 and len(res.series["error"]) == 1


def test_first_step_conserves_energy():
    space = build_space(unit_square_mesh(8), 1)
    res = run(example2(), space, SchemeConfig(0.05, 0.1), observers=[EnergyRecorder()])
    (_, _, e0), (_, _, e1) = res.series["energy"]
    assert abs(e1.total - e0.total) <= 1e-11 * e0.total
    for e in (e0, e1):
        assert e.kinetic >= 0 and e.gradient >= 0 and e.quartic >= 0
        assert e.max_imag <= 1e-13


@settings(max_examples=6, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.sampled_from([3, 4, 6]),
    r=st.sampled_from([1, 2]),
    tau=st.sampled_from([0.5, 0.05, 0.005]),
    scale=st.sampled_from([0.1, 1.0, 3.0]),
)
def test_energy_conserved_for_random_data(seed, n, r, tau, scale):
    rng = np.random.default_rng(seed)
    problem = zero_problem(w=example2().w)
    space = build_space(unit_square_mesh(n), r)
    scheme = LeapFrog(problem, space, SchemeConfig.from_steps(60 * tau, 60))
    state = random_state(space, rng, scale)
    e0 = scheme.energy(state).total
    for _ in range(40):
        state, _ = scheme.step(state)
        assert abs(scheme.energy(state).total - e0) <= 1e-10 * max(1.0, abs(e0))


def test_step_is_linear_for_frozen_coefficient(rng):
    space = build_space(disk_mesh(level=2), 2)
    scheme = LeapFrog(zero_problem(w=example2().w), space, SchemeConfig(0.05, 1.0, tol=1e-14))
    W = scheme.weighted_mass(random_state(space, rng).U_curr)
    op = scheme.system(W)

    def frozen(state):
        x, _ = solve_bicgstab(op, scheme.rhs(state, W, 0.0), tol=1e-14)
        return x

    X, Y = random_state(space, rng), random_state(space, rng)
    a, b = 0.3 - 1.1j, 2.0
    Z = SchemeState(1, 0.0, a * X.U_prev + b * Y.U_prev, a * X.U_curr + b * Y.U_curr)
    lhs, rhs = frozen(Z), a * frozen(X) + b * frozen(Y)
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_time_reversal_of_frozen_linear_step(rng):
    """Reversing the pair and flipping the sign of i*D_tau undoes one step."""
    space = build_space(unit_square_mesh(6), 1)
    tau = 0.02
    scheme = LeapFrog(zero_problem(w=example2().w), space, SchemeConfig(tau, 1.0, tol=1e-14))
    state = random_state(space, rng)
    W = scheme.weighted_mass(random_state(space, rng).U_curr)
    x, _ = solve_bicgstab(scheme.system(W), scheme.rhs(state, W, 0.0), tol=1e-14)
    f = space.free_dofs
    Wff = space.block(W, "ff")
    back_op = CompositeOperator(1 / tau**2 - 0.5j / tau, 0.5, scheme.Mff, scheme.Kff, Wff)
    fwd_m = CompositeOperator(1 / tau**2 + 0.5j / tau, 0.5, scheme.Mff, scheme.Kff, Wff)
    rhs = (2 / tau**2) * (scheme.Mff @ state.U_curr[f]) - fwd_m @ x
    prev, _ = solve_bicgstab(back_op, rhs, tol=1e-14)
    assert np.abs(prev - state.U_prev[f]).max() <= 1e-10 * np.abs(state.U_prev).max()


def test_ritz_and_interpolation_differ_at_second_order():
    def gap(n):
        space = build_space(unit_square_mesh(n), 1)
        a = initialize(example2(), space, SchemeConfig(0.1, 1.0)).U_prev
        b = initialize(example2(), space, SchemeConfig(0.1, 1.0, init_mode="interpolation")).U_prev
        d = a - b
        return np.sqrt(np.vdot(d, fem.assemble_mass(space) @ d).real)

    ratio = gap(8) / gap(16)
    assert 3.5 < ratio < 4.5


def test_ritz_init_requires_gradients():
    from dataclasses import replace

    from nlswave.fem import ScalarField

    p = replace(example2(), u1=ScalarField(example2().u1.value))
    space = build_space(unit_square_mesh(2), 1)
    with pytest.raises(ValueError):
        initialize(p, space, SchemeConfig(0.1, 1.0))
    initialize(p, space, SchemeConfig(0.1, 1.0, init_mode="interpolation"))


def test_short_run_is_accurate_and_deterministic():
    space = build_space(unit_square_mesh(8), 2)
    cfg = SchemeConfig.from_steps(0.25, 8)
    a = run(example2(), space, cfg, observers=[ErrorRecorder()], stride=4)
    b = run(example2(), space, cfg)
    assert np.array_equal(a.state.U_curr, b.state.U_curr)
    assert [n for n, _, _ in a.series["error"]] == [1, 5, 8]
    assert a.series["error"][-1][2] < 5e-3
