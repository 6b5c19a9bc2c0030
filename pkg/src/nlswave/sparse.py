"""Complex composite operator over real CSR matrices and Jacobi BiCGStab.

The per-step system matrix ``alpha*M + beta*(K + W)`` is complex symmetric
but not Hermitian, so CG does not apply.
"""
from dataclasses import dataclass
import logging

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CompositeOperator",
    "SolveStats",
    "SolverError",
    "BreakdownError",
    "MaxIterationsError",
    "apply",
    "diag_of",
    "solve_bicgstab",
]

log = logging.getLogger(__name__)


@dataclass
class SolveStats:
    iterations: int
    residual: float
    converged: bool


class SolverError(RuntimeError):
    """The Krylov solve failed; ``stats`` holds the state at failure."""

    def __init__(self, msg, stats):
        super().__init__(f"{msg} (iterations={stats.iterations}, residual={stats.residual:.3e})")
        self.stats = stats


class BreakdownError(SolverError):
    pass


class MaxIterationsError(SolverError):
    pass


def _same_pattern(A, B):
    return (
        A.shape == B.shape
        and np.array_equal(A.indptr, B.indptr)
        and np.array_equal(A.indices, B.indices)
    )


class CompositeOperator:
    """Linear action ``x -> alpha*M@x + beta*(K + W)@x``.

    ``M`` or ``W`` may be ``None`` (treated as zero). The complex matrix is
    never assembled symbolically: when all parts share a sparsity pattern
    (always the case for blocks of one ``FeSpace``) the value arrays are
    combined once, otherwise the parts are applied one by one.
    """

    def __init__(self, alpha, beta, M, K, W=None):
        self.alpha = complex(alpha)
        self.beta = complex(beta)
        parts = [A for A in (M, K, W) if A is not None]
        if not parts:
            raise ValueError("operator needs at least one matrix")
        shape = parts[0].shape
        if shape[0] != shape[1] or any(A.shape != shape for A in parts):
            raise ValueError("operator matrices must be square with a common shape")
        self.M, self.K, self.W = (None if A is None else sp.csr_matrix(A) for A in (M, K, W))
        self.shape = shape
        self._fused = None
        parts = [A for A in (self.M, self.K, self.W) if A is not None]
        if all(_same_pattern(parts[0], A) for A in parts[1:]):
            data = np.zeros(parts[0].nnz, dtype=complex)
            for A, c in self._terms():
                data += c * A.data
            self._fused = sp.csr_matrix((data, parts[0].indices, parts[0].indptr), shape=shape)

    def _terms(self):
        if self.M is not None:
            yield self.M, self.alpha
        if self.K is not None:
            yield self.K, self.beta
        if self.W is not None:
            yield self.W, self.beta

    def __matmul__(self, x):
        return apply(self, x)

    def to_dense(self):
        out = np.zeros(self.shape, dtype=complex)
        for A, c in self._terms():
            out += c * A.toarray()
        return out


def apply(op, x):
    """y = alpha*M x + beta*(K + W) x."""
    x = np.asarray(x)
    if x.shape[0] != op.shape[1]:
        raise ValueError(f"dimension mismatch: operator {op.shape}, vector {x.shape}")
    if op._fused is not None:
        return op._fused @ x
    y = np.zeros(x.shape, dtype=complex)
    for A, c in op._terms():
        y += c * (A @ x)
    return y


def diag_of(op):
    """Diagonal of the composite operator."""
    d = np.zeros(op.shape[0], dtype=complex)
    for A, c in op._terms():
        d += c * A.diagonal()
    return d


def solve_bicgstab(op, b, x0=None, tol=1e-12, maxit=None):
    """Jacobi-preconditioned BiCGStab for ``op @ x = b``.

    Convergence means ``||b - op@x|| <= tol*||b||``, checked on the true
    residual. Returns ``(x, SolveStats)``; raises ``BreakdownError`` or
    ``MaxIterationsError`` instead of returning an unconverged iterate.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=complex)
    n = op.shape[0]
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")
    if maxit is None:
        maxit = 10 * max(n, 1)
    x = np.zeros(n, dtype=complex) if x0 is None else np.array(x0, dtype=complex)

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n, dtype=complex), SolveStats(0, 0.0, True)
    d = diag_of(op)
    if np.any(d == 0):
        raise ValueError("Jacobi preconditioner: zero on the operator diagonal")
    dinv = 1.0 / d
    target = tol * bnorm

    r = b - apply(op, x)
    rnorm = np.linalg.norm(r)
    it = 0
    while rnorm > target:
        # (re)start from the true residual
        rhat = r.copy()
        rho_old = alpha = omega = 1.0 + 0j
        v = np.zeros(n, dtype=complex)
        p = np.zeros(n, dtype=complex)
        rhat_norm = np.linalg.norm(rhat)
        while True:
            if it >= maxit:
                raise MaxIterationsError("BiCGStab hit the iteration limit", SolveStats(it, rnorm / bnorm, False))
            it += 1
            rho = np.vdot(rhat, r)
            if abs(rho) < 1e-30 * rhat_norm * np.linalg.norm(r):
                raise BreakdownError("BiCGStab breakdown (rho)", SolveStats(it, rnorm / bnorm, False))
            beta = (rho / rho_old) * (alpha / omega)
            p = r + beta * (p - omega * v)
            phat = dinv * p
            v = apply(op, phat)
            denom = np.vdot(rhat, v)
            if abs(denom) < 1e-30 * rhat_norm * np.linalg.norm(v):
                raise BreakdownError("BiCGStab breakdown (r0.v)", SolveStats(it, rnorm / bnorm, False))
            alpha = rho / denom
            s = r - alpha * v
            if np.linalg.norm(s) <= target:
                x += alpha * phat
                break
            shat = dinv * s
            t = apply(op, shat)
            tt = np.vdot(t, t).real
            if tt == 0.0:
                raise BreakdownError("BiCGStab breakdown (t=0)", SolveStats(it, rnorm / bnorm, False))
            omega = np.vdot(t, s) / tt
            x += alpha * phat + omega * shat
            r = s - omega * t
            rnorm = np.linalg.norm(r)
            if rnorm <= target:
                break
            if abs(omega) < 1e-30:
                raise BreakdownError("BiCGStab breakdown (omega)", SolveStats(it, rnorm / bnorm, False))
            rho_old = rho
        r = b - apply(op, x)
        rnorm = np.linalg.norm(r)
        if rnorm > target:
            log.debug("BiCGStab: recursive residual drifted, restarting at it=%d", it)
    return x, SolveStats(it, float(rnorm / bnorm), True)
