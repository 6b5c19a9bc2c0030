"""Linearized energy-conserving leap-frog Galerkin scheme.

One step solves, on the free dofs,

    [(1/tau^2 + i/(2 tau)) M + (K + W^n)/2] U^{n+1}
        = (2/tau^2) M U^n - [(1/tau^2 - i/(2 tau)) M + (K + W^n)/2] U^{n-1} + F^n

with ``W^n`` the mass matrix weighted by ``|U^n|^2 + w`` and ``F^n`` the
load of the source at ``t_n``. The scheme conserves

    E^n = ||(U^{n+1} - U^n)/tau||^2 + (||grad U^{n+1}||^2 + ||grad U^n||^2)/2
          + ||U^n U^{n+1}||^2/2 + ((w U^n, U^n) + (w U^{n+1}, U^{n+1}))/2

exactly when the boundary data and source vanish, provided the quartic term
is evaluated with the same quadrature used for ``W^n``.
"""
from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import fem
from .fem import ScalarField
from .quadrature import rule_for_degree
from .sparse import CompositeOperator, SolveStats, solve_bicgstab

__all__ = [
    "SchemeConfig",
    "SchemeState",
    "EnergyBreakdown",
    "StepReport",
    "RunResult",
    "LeapFrog",
    "initialize",
    "step",
    "discrete_energy",
    "run",
    "EnergyRecorder",
    "ErrorRecorder",
    "taylor_first_step",
    "steps_for",
]

RITZ = "ritz"
INTERPOLATION = "interpolation"


@dataclass(frozen=True)
class SchemeConfig:
    tau: float
    T: float
    assembly_degree: int = None  # default 4r
    error_degree: int = None  # default 2r + 4
    tol: float = 1e-12
    init_mode: str = RITZ

    def __post_init__(self):
        if not (self.tau > 0 and self.tau <= self.T * (1 + 1e-12)):
            raise ValueError(f"need 0 < tau <= T, got tau={self.tau}, T={self.T}")
        if abs(self.T / self.tau - round(self.T / self.tau)) > 1e-12 * max(1.0, self.T / self.tau):
            raise ValueError(f"T/tau must be an integer, got {self.T / self.tau!r}")
        if self.init_mode not in (RITZ, INTERPOLATION):
            raise ValueError(f"init_mode must be 'ritz' or 'interpolation', got {self.init_mode!r}")
        if not self.tol > 0:
            raise ValueError("solver tolerance must be positive")

    @classmethod
    def from_steps(cls, T, N, **kw):
        return cls(tau=T / N, T=T, **kw)

    @property
    def N(self):
        return int(round(self.T / self.tau))


@dataclass
class SchemeState:
    """Leap-frog window: ``U_prev`` = U^{n-1}, ``U_curr`` = U^n."""

    n: int
    t: float
    U_prev: np.ndarray
    U_curr: np.ndarray


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    gradient: float
    quartic: float
    potential: float
    max_imag: float = 0.0  # largest imaginary part met in the quadratic forms

    @property
    def total(self):
        return self.kinetic + self.gradient + self.quartic + self.potential


@dataclass
class StepReport:
    stats: SolveStats
    wall_time: float
    lift_norm: float


@dataclass
class RunResult:
    state: SchemeState
    reports: list = field(default_factory=list)
    series: dict = field(default_factory=dict)


def taylor_first_step(problem, tau):
    """u0 + tau*u1 + tau^2/2 (Lap u0 - i u1 - |u0|^2 u0 - w u0 + g(0)), with gradient.

    ``g(0)`` is the source at t = 0 (absent for source-free problems); it
    keeps U^1 third-order accurate when a source is present.
    """
    u0, u1, lap, w = problem.u0, problem.u1, problem.laplacian_u0, problem.w
    g = problem.source
    c = 0.5 * tau * tau

    def value(x, y):
        a = u0(x, y)
        acc = lap(x, y) - 1j * u1(x, y) - np.abs(a) ** 2 * a - w(x, y) * a
        if g is not None:
            acc = acc + g(x, y, 0.0)
        return a + tau * u1(x, y) + c * acc

    grad = None
    have_grads = all(f.grad is not None for f in (u0, u1, lap, w))
    if have_grads and (g is None or problem.source_grad is not None):

        def grad(x, y):
            a = u0(x, y)
            wv = w(x, y)
            dg = problem.source_grad(x, y, 0.0) if g is not None else (0.0, 0.0)
            out = []
            for da, d1, dl, dw, dgi in zip(u0.grad(x, y), u1.grad(x, y), lap.grad(x, y), w.grad(x, y), dg):
                # d(|a|^2 a) = 2|a|^2 da + a^2 conj(da)
                dcubic = 2 * np.abs(a) ** 2 * da + a * a * np.conj(da)
                out.append(da + tau * d1 + c * (dl - 1j * d1 - dcubic - dw * a - wv * da + dgi))
            return tuple(out)

    return ScalarField(value, grad)


class LeapFrog:
    """Precomputed operators for one (problem, space, config) triple."""

    def __init__(self, problem, space, config):
        self.problem = problem
        self.space = space
        self.config = config
        r = space.degree
        self.rule = rule_for_degree(config.assembly_degree or 4 * r)
        self.error_rule = rule_for_degree(config.error_degree or 2 * r + 4)
        self.M = fem.assemble_mass(space, self.rule)
        self.K = fem.assemble_stiffness(space, self.rule)
        self.phi = space.basis(self.rule)
        self.qw = space.quad_weights(self.rule)
        self.w_q = np.asarray(problem.w(*space.quad_points(self.rule)), dtype=float)
        self.W_pot = fem.assemble_weighted_mass(space, self.w_q, self.rule)
        self.Mff, self.Mfb = space.block(self.M, "ff"), space.block(self.M, "fb")
        self.Kff, self.Kfb = space.block(self.K, "ff"), space.block(self.K, "fb")
        xb, yb = space.dof_coords[space.boundary_dofs].T
        self._xb, self._yb = xb, yb

    @property
    def tau(self):
        return self.config.tau

    def boundary_values(self, t):
        return self.problem.boundary_values(self._xb, self._yb, t)

    def _project(self, f, t):
        space = self.space
        if self.config.init_mode == INTERPOLATION:
            U = fem.interpolate(space, f)
            U[space.boundary_dofs] = self.boundary_values(t)
            return U
        if f.grad is None:
            raise ValueError("Ritz initialisation needs analytic gradients; use init_mode='interpolation'")
        return fem.ritz_project(
            space, f, boundary_values=self.boundary_values(t), K=self.K, tol=self.config.tol
        )

    def initialize(self):
        U0 = self._project(self.problem.u0, 0.0)
        U1 = self._project(taylor_first_step(self.problem, self.tau), self.tau)
        return SchemeState(1, self.tau, U0, U1)

    def modulus_at_quad(self, U):
        return np.abs(fem.evaluate(self.space, U, self.rule)) ** 2

    def weighted_mass(self, U):
        """W^n: mass weighted by |U|^2 + w on this scheme's quadrature."""
        return fem.assemble_weighted_mass(self.space, self.modulus_at_quad(U) + self.w_q, self.rule)

    def system(self, W):
        tau = self.tau
        alpha = 1 / tau**2 + 0.5j / tau
        return CompositeOperator(alpha, 0.5, self.Mff, self.Kff, self.space.block(W, "ff"))

    def rhs(self, state, W, t_source):
        tau = self.tau
        space = self.space
        f, b = space.free_dofs, space.boundary_dofs
        Wff, Wfb = space.block(W, "ff"), space.block(W, "fb")
        Un, Um = state.U_curr, state.U_prev
        alpha_m = 1 / tau**2 - 0.5j / tau

        def mul(Aff, Afb, U):
            return Aff @ U[f] + Afb @ U[b]

        rhs = (2 / tau**2) * mul(self.Mff, self.Mfb, Un)
        rhs -= alpha_m * mul(self.Mff, self.Mfb, Um)
        rhs -= 0.5 * (mul(self.Kff, self.Kfb, Um) + mul(Wff, Wfb, Um))
        if self.problem.source is not None:
            g = self.problem.source
            F = fem.assemble_load(space, lambda x, y: g(x, y, t_source), self.rule)
            rhs += F[f]
        return rhs

    def step(self, state):
        """Advance (U^{n-1}, U^n) -> (U^n, U^{n+1})."""
        if not 1 <= state.n <= self.config.N - 1:
            raise ValueError(f"step index {state.n} outside 1..{self.config.N - 1}")
        t0 = time.perf_counter()
        tau = self.tau
        space = self.space
        t_next = (state.n + 1) * tau
        W = self.weighted_mass(state.U_curr)
        op = self.system(W)
        rhs = self.rhs(state, W, state.n * tau)
        gb = self.boundary_values(t_next)
        lift_norm = float(np.linalg.norm(gb))
        if lift_norm > 0:
            alpha = 1 / tau**2 + 0.5j / tau
            Afb = alpha * self.Mfb + 0.5 * (self.Kfb + space.block(W, "fb"))
            rhs -= Afb @ gb
        x, stats = solve_bicgstab(op, rhs, x0=state.U_curr[space.free_dofs], tol=self.config.tol)
        U_next = np.empty(space.ndof, dtype=complex)
        U_next[space.free_dofs] = x
        U_next[space.boundary_dofs] = gb
        new = SchemeState(state.n + 1, t_next, state.U_curr, U_next)
        return new, StepReport(stats, time.perf_counter() - t0, lift_norm)

    def energy(self, state):
        """Discrete energy of the pair (U_prev, U_curr) read as (U^n, U^{n+1})."""
        U0, U1 = state.U_prev, state.U_curr
        tau = self.tau
        d = (U1 - U0) / tau
        forms = [
            np.vdot(d, self.M @ d),
            np.vdot(U1, self.K @ U1),
            np.vdot(U0, self.K @ U0),
            np.vdot(U0, self.W_pot @ U0),
            np.vdot(U1, self.W_pot @ U1),
        ]
        quartic = 0.5 * float(np.sum(self.qw * self.modulus_at_quad(U0) * self.modulus_at_quad(U1)))
        scale = max(1.0, max(abs(v) for v in forms))
        return EnergyBreakdown(
            kinetic=float(forms[0].real),
            gradient=float(0.5 * (forms[1].real + forms[2].real)),
            quartic=quartic,
            potential=float(0.5 * (forms[3].real + forms[4].real)),
            max_imag=float(max(abs(v.imag) for v in forms) / scale),
        )

    def l2_error(self, state):
        return fem.l2_error(
            self.space, state.U_curr, lambda x, y: self.problem.exact(x, y, state.t), self.error_rule
        )

    def run(self, observers=(), stride=1):
        """Initialize, then take N-1 steps; observers fire every ``stride`` steps."""
        state = self.initialize()
        result = RunResult(state)
        for obs in observers:
            result.series[obs.name] = []

        def observe(st):
            last = st.n == self.config.N
            if (st.n - 1) % stride == 0 or last:
                for obs in observers:
                    result.series[obs.name].append(obs(self, st))

        observe(state)
        while state.n < self.config.N:
            state, report = self.step(state)
            result.reports.append(report)
            observe(state)
        result.state = state
        return result


class EnergyRecorder:
    """Records (k, t_k, EnergyBreakdown) for E^k of the pair (U^k, U^{k+1})."""

    name = "energy"

    def __call__(self, scheme, state):
        k = state.n - 1
        return k, k * scheme.tau, scheme.energy(state)


class ErrorRecorder:
    """Records (n, t_n, ||U^n - u(t_n)||_{L2})."""

    name = "error"

    def __call__(self, scheme, state):
        return state.n, state.t, scheme.l2_error(state)


def initialize(problem, space, config):
    return LeapFrog(problem, space, config).initialize()


def step(state, problem, space, config):
    return LeapFrog(problem, space, config).step(state)


def discrete_energy(state, problem, space, config):
    return LeapFrog(problem, space, config).energy(state)


def run(problem, space, config, observers=(), stride=1):
    return LeapFrog(problem, space, config).run(observers, stride)


def steps_for(T, tau_target):
    """Smallest N with T/N <= tau_target."""
    return max(1, math.ceil(T / tau_target - 1e-9))
