"""Manufactured test problems for u_tt - Lap u + i u_t + |u|^2 u + w u = g.

Time-dependent fields are callables ``f(x, y, t)`` on numpy arrays;
initial data are :class:`~nlswave.fem.ScalarField` objects carrying the
gradients needed by the Ritz initialisation.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.stats import qmc

from .fem import ScalarField
from .mesh import Disk, UnitSquare

__all__ = [
    "ProblemSpec",
    "ResidualReport",
    "example1",
    "example2",
    "zero_problem",
    "get_problem",
    "residual_check",
    "pde_residual",
]


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: object
    w: ScalarField
    u0: ScalarField
    u1: ScalarField
    laplacian_u0: ScalarField
    exact: object = None  # (x, y, t) -> complex
    exact_grad: object = None  # (x, y, t) -> (gx, gy)
    source: object = None  # (x, y, t) -> complex, None for g = 0
    source_grad: object = None  # (x, y, t) -> (gx, gy)
    boundary: object = None  # (x, y, t) -> complex, None for u = 0 on the boundary

    @property
    def homogeneous(self):
        return self.boundary is None

    @property
    def source_free(self):
        return self.source is None

    @property
    def conservative(self):
        """True when the discrete energy is an invariant of the scheme."""
        return self.homogeneous and self.source_free

    def boundary_values(self, x, y, t):
        if self.boundary is None:
            return np.zeros(np.shape(x), dtype=complex)
        return np.asarray(self.boundary(x, y, t), dtype=complex)

    def exact_at(self, t):
        """The exact solution frozen at time ``t`` as a ScalarField."""
        if self.exact is None:
            raise ValueError(f"problem {self.name!r} has no exact solution")
        grad = None
        if self.exact_grad is not None:
            grad = lambda x, y: self.exact_grad(x, y, t)  # noqa: E731
        return ScalarField(lambda x, y: self.exact(x, y, t), grad)

    def with_source(self, source, source_grad=None):
        return replace(self, source=source, source_grad=source_grad)


# ---------------------------------------------------------------------------
# Example 1: disk, w = -x^2 y^2, u = 20 e^{8it} (1 + 8t^2) x^2 (1-x) y^2 (1-y)


def _p(s):
    return s * s * (1 - s)


def _dp(s):
    return 2 * s - 3 * s * s


def _d2p(s):
    return 2 - 6 * s


def _d3p(s):
    return -6.0 + 0 * s


def _amp(t):
    return 20 * np.exp(8j * t) * (1 + 8 * t**2)


def _amp_t(t):
    return 20 * np.exp(8j * t) * (8j * (1 + 8 * t**2) + 16 * t)


def _amp_tt(t):
    return 20 * np.exp(8j * t) * (16 + 256j * t - 64 * (1 + 8 * t**2))


def _ex1_w(x, y):
    return -(x**2) * y**2


def _ex1_w_grad(x, y):
    return -2 * x * y**2, -2 * x**2 * y


def _P(x, y):
    return _p(x) * _p(y)


def _P_grad(x, y):
    return _dp(x) * _p(y), _p(x) * _dp(y)


def _lapP(x, y):
    return _d2p(x) * _p(y) + _p(x) * _d2p(y)


def _lapP_grad(x, y):
    return (
        _d3p(x) * _p(y) + _dp(x) * _d2p(y),
        _d2p(x) * _dp(y) + _p(x) * _d3p(y),
    )


def _scaled(c, f, g):
    return ScalarField(
        lambda x, y: c * f(x, y),
        lambda x, y: tuple(c * gi for gi in g(x, y)),
    )


def _ex1_exact(x, y, t):
    return _amp(t) * _P(x, y)


def _ex1_exact_grad(x, y, t):
    gx, gy = _P_grad(x, y)
    a = _amp(t)
    return a * gx, a * gy


def _ex1_source(x, y, t):
    P = _P(x, y)
    a = _amp(t)
    return (
        _amp_tt(t) * P
        - a * _lapP(x, y)
        + 1j * _amp_t(t) * P
        + np.abs(a * P) ** 2 * a * P
        + _ex1_w(x, y) * a * P
    )


def _ex1_source_grad(x, y, t):
    # g = (A'' + iA') P - A Lap P + |A|^2 A P^3 + w A P
    a = _amp(t)
    c1 = _amp_tt(t) + 1j * _amp_t(t)
    P, w = _P(x, y), _ex1_w(x, y)
    out = []
    for dP, dlap, dw in zip(_P_grad(x, y), _lapP_grad(x, y), _ex1_w_grad(x, y)):
        out.append(c1 * dP - a * dlap + 3 * abs(a) ** 2 * a * P**2 * dP + a * (dw * P + w * dP))
    return tuple(out)


def example1():
    """Disk problem with manufactured source and non-vanishing boundary trace."""
    return ProblemSpec(
        name="example1",
        domain=Disk((0.5, 0.5), 0.5),
        w=ScalarField(_ex1_w, _ex1_w_grad),
        u0=_scaled(20.0, _P, _P_grad),
        u1=_scaled(160j, _P, _P_grad),
        laplacian_u0=_scaled(20.0, _lapP, _lapP_grad),
        exact=_ex1_exact,
        exact_grad=_ex1_exact_grad,
        source=_ex1_source,
        source_grad=_ex1_source_grad,
        boundary=_ex1_exact,
    )


# ---------------------------------------------------------------------------
# Example 2: unit square, u = sin(pi x) sin(pi y) e^{-i sqrt2 pi t}

_SQ2PI = math.sqrt(2) * math.pi


def _S(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def _S_grad(x, y):
    return (
        np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
        np.pi * np.sin(np.pi * x) * np.cos(np.pi * y),
    )


def _ex2_w(x, y):
    return -(_SQ2PI + _S(x, y) ** 2)


def _ex2_w_grad(x, y):
    s = _S(x, y)
    gx, gy = _S_grad(x, y)
    return -2 * s * gx, -2 * s * gy


def _ex2_exact(x, y, t):
    return _S(x, y) * np.exp(-1j * _SQ2PI * t)


def _ex2_exact_grad(x, y, t):
    gx, gy = _S_grad(x, y)
    e = np.exp(-1j * _SQ2PI * t)
    return gx * e, gy * e


def example2():
    """Unit-square problem, source free with homogeneous Dirichlet data."""
    return ProblemSpec(
        name="example2",
        domain=UnitSquare(),
        w=ScalarField(_ex2_w, _ex2_w_grad),
        u0=_scaled(1.0, _S, _S_grad),
        u1=_scaled(-1j * _SQ2PI, _S, _S_grad),
        laplacian_u0=_scaled(-2 * math.pi**2, _S, _S_grad),
        exact=_ex2_exact,
        exact_grad=_ex2_exact_grad,
    )


def zero_problem(domain=None, w=None):
    """All-zero data; the exact solution is u = 0."""
    zero = ScalarField.constant(0.0)
    return ProblemSpec(
        name="zero",
        domain=domain if domain is not None else UnitSquare(),
        w=w if w is not None else zero,
        u0=zero,
        u1=zero,
        laplacian_u0=zero,
        exact=lambda x, y, t: np.zeros(np.shape(x), dtype=complex),
        exact_grad=lambda x, y, t: (np.zeros(np.shape(x)), np.zeros(np.shape(x))),
    )


PROBLEMS = {"example1": example1, "example2": example2, "zero": zero_problem}


def get_problem(name):
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


# ---------------------------------------------------------------------------


@dataclass
class ResidualReport:
    passed: bool
    max_residual: float
    tolerance: float
    points: np.ndarray = field(repr=False)


def pde_residual(problem, x, y, t, step=1e-4):
    """Finite-difference residual of the exact solution in the PDE.

    u_tt uses the 5-point fourth-order central stencil in t, u_t the
    2-point central difference, and the Laplacian the 5-point cross.
    """
    u = problem.exact
    k = step
    u_tt = (
        -u(x, y, t + 2 * k) + 16 * u(x, y, t + k) - 30 * u(x, y, t)
        + 16 * u(x, y, t - k) - u(x, y, t - 2 * k)
    ) / (12 * k * k)
    u_t = (u(x, y, t + k) - u(x, y, t - k)) / (2 * k)
    u_c = u(x, y, t)
    lap = (u(x + k, y, t) + u(x - k, y, t) + u(x, y + k, t) + u(x, y - k, t) - 4 * u_c) / (k * k)
    g = problem.source(x, y, t) if problem.source is not None else 0.0
    return u_tt - lap + 1j * u_t + np.abs(u_c) ** 2 * u_c + problem.w(x, y) * u_c - g


def _sample_points(domain, count, margin, seed):
    sampler = qmc.Halton(d=2, scramble=True, seed=seed)
    if isinstance(domain, Disk):
        cx, cy = domain.center
        lo = np.array([cx - domain.radius, cy - domain.radius])
        span = 2 * domain.radius
    else:
        lo, span = np.zeros(2), 1.0
    pts = np.empty((0, 2))
    while len(pts) < count:
        cand = lo + span * sampler.random(2 * count)
        # points too close to the boundary for the stencil are resampled
        keep = domain.contains(cand[:, 0], cand[:, 1], margin=margin)
        pts = np.vstack([pts, cand[keep]])
    return pts[:count]


def residual_check(problem, sample_count=50, times=(0.0, 0.3, 0.7, 1.0), tolerance=1e-4, step=1e-4, seed=0):
    """Check the exact solution against the PDE at quasi-random points."""
    if problem.exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    pts = _sample_points(problem.domain, sample_count, margin=4 * step, seed=seed)
    x, y = pts.T
    worst = 0.0
    for t in times:
        res = pde_residual(problem, x, y, float(t), step)
        worst = max(worst, float(np.max(np.abs(res))))
    return ResidualReport(worst <= tolerance, worst, tolerance, pts)
