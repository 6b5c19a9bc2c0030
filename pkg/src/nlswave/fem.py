"""P1/P2 Lagrange spaces, Galerkin assembly, projections and error norms.

Dof vectors are plain complex numpy arrays indexed by global dof. Global
dofs are the mesh vertices (in mesh order) followed, for P2, by the edge
midpoints in the lexicographic edge order of ``mesh.edges``.

Matrices are ``scipy.sparse.csr_matrix`` sharing one sparsity pattern per
space, so per-step reassembly of a weighted mass matrix only recomputes
the value array.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .quadrature import rule_for_degree

__all__ = [
    "ScalarField",
    "FeSpace",
    "build_space",
    "shape_values",
    "shape_barycentric_derivatives",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_weighted_mass",
    "assemble_load",
    "assemble_gradient_load",
    "evaluate",
    "evaluate_squared_modulus",
    "interpolate",
    "ritz_project",
    "l2_error",
    "h1_seminorm_error",
]


@dataclass(frozen=True)
class ScalarField:
    """A field ``value(x, y)`` with an optional ``grad(x, y) -> (gx, gy)``.

    Both callables must accept numpy arrays of matching shape.
    """

    value: object
    grad: object = None

    def __call__(self, x, y):
        return self.value(x, y)

    @classmethod
    def constant(cls, c):
        def value(x, y):
            return np.full(np.shape(x), c, dtype=np.result_type(c, float))

        def grad(x, y):
            z = np.zeros(np.shape(x))
            return z, z

        return cls(value, grad)


def shape_values(degree, lam):
    """Basis values at barycentric points ``lam`` (nq, 3) -> (nq, ndof)."""
    l0, l1, l2 = lam.T
    if degree == 1:
        return np.column_stack([l0, l1, l2])
    if degree == 2:
        return np.column_stack(
            [
                l0 * (2 * l0 - 1),
                l1 * (2 * l1 - 1),
                l2 * (2 * l2 - 1),
                4 * l0 * l1,
                4 * l1 * l2,
                4 * l2 * l0,
            ]
        )
    raise ValueError(f"unsupported element degree {degree!r}")


def shape_barycentric_derivatives(degree, lam):
    """d(phi_i)/d(lambda_k) at ``lam`` -> (nq, ndof, 3)."""
    nq = len(lam)
    if degree == 1:
        return np.broadcast_to(np.eye(3), (nq, 3, 3)).copy()
    if degree == 2:
        l0, l1, l2 = lam.T
        z = np.zeros(nq)
        d = np.empty((nq, 6, 3))
        d[:, 0] = np.column_stack([4 * l0 - 1, z, z])
        d[:, 1] = np.column_stack([z, 4 * l1 - 1, z])
        d[:, 2] = np.column_stack([z, z, 4 * l2 - 1])
        d[:, 3] = np.column_stack([4 * l1, 4 * l0, z])
        d[:, 4] = np.column_stack([z, 4 * l2, 4 * l1])
        d[:, 5] = np.column_stack([4 * l2, z, 4 * l0])
        return d
    raise ValueError(f"unsupported element degree {degree!r}")


class FeSpace:
    """Continuous Lagrange space of degree 1 or 2 on a triangle mesh."""

    def __init__(self, mesh, degree):
        if degree not in (1, 2):
            raise ValueError(f"unsupported element degree {degree!r}")
        self.mesh = mesh
        self.degree = degree
        nv = mesh.nv
        if degree == 1:
            self.dof_coords = mesh.vertices.copy()
            self.cell_dofs = mesh.triangles.copy()
            bnd = mesh.boundary.copy()
        else:
            edges = mesh.edges
            mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
            self.dof_coords = np.vstack([mesh.vertices, mid])
            self.cell_dofs = np.hstack([mesh.triangles, nv + mesh.triangle_edges])
            bnd = np.r_[mesh.boundary, mesh.edge_valence == 1]
        self.is_boundary = bnd
        self.boundary_dofs = np.flatnonzero(bnd)
        self.free_dofs = np.flatnonzero(~bnd)
        self.free_index = np.full(self.ndof, -1, dtype=np.int64)
        self.free_index[self.free_dofs] = np.arange(len(self.free_dofs))
        for a in (self.dof_coords, self.cell_dofs, self.is_boundary, self.boundary_dofs, self.free_dofs):
            a.setflags(write=False)

    @property
    def ndof(self):
        return len(self.dof_coords)

    @property
    def nloc(self):
        return self.cell_dofs.shape[1]

    def __repr__(self):
        return f"FeSpace(P{self.degree}, ndof={self.ndof}, free={len(self.free_dofs)})"

    # geometry -------------------------------------------------------------

    @cached_property
    def _geometry(self):
        p = self.mesh.vertices[self.mesh.triangles]  # (nt, 3, 2)
        B = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns e1, e2
        det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
        # rows of inv(B) are the gradients of lambda_1, lambda_2
        inv = np.empty_like(B)
        inv[:, 0, 0] = B[:, 1, 1] / det
        inv[:, 0, 1] = -B[:, 0, 1] / det
        inv[:, 1, 0] = -B[:, 1, 0] / det
        inv[:, 1, 1] = B[:, 0, 0] / det
        grad_lam = np.empty((len(p), 3, 2))
        grad_lam[:, 1:] = inv
        grad_lam[:, 0] = -inv[:, 0] - inv[:, 1]
        return np.abs(det), grad_lam

    @property
    def jacobians(self):
        """|det J| per triangle (twice the triangle area)."""
        return self._geometry[0]

    @property
    def grad_lambda(self):
        """(nt, 3, 2) constant gradients of the barycentric coordinates."""
        return self._geometry[1]

    def quad_points(self, rule):
        """Physical quadrature points, arrays x, y of shape (nt, nq)."""
        p = self.mesh.vertices[self.mesh.triangles]
        xy = np.einsum("qk,tkd->tqd", rule.points, p)
        return xy[..., 0], xy[..., 1]

    def basis(self, rule):
        """Basis values at the rule's points, (nq, nloc)."""
        return shape_values(self.degree, rule.points)

    def basis_gradients(self, rule):
        """Physical basis gradients, (nt, nq, nloc, 2)."""
        dphi = shape_barycentric_derivatives(self.degree, rule.points)
        return np.einsum("qik,tkd->tqid", dphi, self.grad_lambda)

    def quad_weights(self, rule):
        """|det J| * w_q, shape (nt, nq)."""
        return self.jacobians[:, None] * rule.weights[None, :]

    # sparsity -------------------------------------------------------------

    @cached_property
    def _pattern(self):
        n = self.ndof
        rows = np.repeat(self.cell_dofs, self.nloc, axis=1).ravel()
        cols = np.tile(self.cell_dofs, (1, self.nloc)).ravel()
        key = rows.astype(np.int64) * n + cols
        ukey, scatter = np.unique(key, return_inverse=True)
        indices = (ukey % n).astype(np.int32)
        counts = np.bincount(ukey // n, minlength=n)
        indptr = np.r_[0, np.cumsum(counts)].astype(np.int32)
        return indptr, indices, scatter.ravel()

    @property
    def nnz(self):
        return len(self._pattern[1])

    def matrix_from_local(self, local):
        """Sum element matrices (nt, nloc, nloc) into a CSR matrix."""
        indptr, indices, scatter = self._pattern
        data = np.bincount(scatter, weights=local.ravel(), minlength=len(indices))
        return sp.csr_matrix((data, indices, indptr), shape=(self.ndof, self.ndof))

    def vector_from_local(self, local):
        """Sum element vectors (nt, nloc) into a global vector."""
        idx = self.cell_dofs.ravel()
        local = local.ravel()
        if np.iscomplexobj(local):
            return np.bincount(idx, local.real, self.ndof) + 1j * np.bincount(idx, local.imag, self.ndof)
        return np.bincount(idx, local, self.ndof)

    @cached_property
    def _block_maps(self):
        # position of every pattern entry inside the free/boundary blocks
        indptr, indices, _ = self._pattern
        probe = sp.csr_matrix(
            (np.arange(1, len(indices) + 1, dtype=float), indices, indptr),
            shape=(self.ndof, self.ndof),
        )
        maps = {}
        for name, r, c in (
            ("ff", self.free_dofs, self.free_dofs),
            ("fb", self.free_dofs, self.boundary_dofs),
        ):
            sub = probe[r][:, c].tocsr()
            sub.sort_indices()
            maps[name] = (sub.data.astype(np.int64) - 1, sub.indices, sub.indptr, (len(r), len(c)))
        return maps

    def block(self, A, which):
        """Free-free (``"ff"``) or free-boundary (``"fb"``) block of ``A``.

        ``A`` must be a matrix assembled on this space's pattern.
        """
        pos, indices, indptr, shape = self._block_maps[which]
        return sp.csr_matrix((A.data[pos], indices, indptr), shape=shape)


def build_space(mesh, r):
    return FeSpace(mesh, r)


def _rule(space, rule, default):
    return rule if rule is not None else rule_for_degree(default)


def assemble_mass(space, rule=None):
    rule = _rule(space, rule, 2 * space.degree)
    phi = space.basis(rule)
    local = np.einsum("tq,qi,qj->tij", space.quad_weights(rule), phi, phi)
    return space.matrix_from_local(local)


def assemble_stiffness(space, rule=None):
    rule = _rule(space, rule, max(1, 2 * (space.degree - 1)))
    G = space.basis_gradients(rule)
    local = np.einsum("tq,tqid,tqjd->tij", space.quad_weights(rule), G, G)
    return space.matrix_from_local(local)


def assemble_weighted_mass(space, coeff, rule=None):
    """Matrix of ``int coeff * phi_i * phi_j``.

    ``coeff`` is either an (nt, nq) array of values at the rule's points or
    a callable ``coeff(x, y)``. It must be real-valued.
    """
    rule = _rule(space, rule, 4 * space.degree)
    if callable(coeff):
        coeff = coeff(*space.quad_points(rule))
    coeff = np.broadcast_to(np.asarray(coeff), (space.mesh.nt, len(rule)))
    if np.iscomplexobj(coeff):
        if np.abs(coeff.imag).max(initial=0.0) > 1e-13 * max(1.0, np.abs(coeff).max()):
            raise ValueError("weighted mass coefficient must be real-valued")
        coeff = coeff.real
    phi = space.basis(rule)
    local = np.einsum("tq,qi,qj->tij", space.quad_weights(rule) * coeff, phi, phi)
    return space.matrix_from_local(local)


def evaluate(space, U, rule):
    """Values of the finite element function ``U`` at quadrature points, (nt, nq)."""
    return U[space.cell_dofs] @ space.basis(rule).T


def evaluate_gradient(space, U, rule):
    """Gradients of ``U`` at quadrature points, (nt, nq, 2)."""
    return np.einsum("ti,tqid->tqd", U[space.cell_dofs], space.basis_gradients(rule))


def evaluate_squared_modulus(space, U, tri, lam):
    """|U_h|^2 at barycentric point ``lam`` of triangle ``tri``."""
    phi = shape_values(space.degree, np.atleast_2d(np.asarray(lam, dtype=float)))[0]
    val = U[space.cell_dofs[tri]] @ phi
    return float(abs(val) ** 2)


def assemble_load(space, f, rule=None):
    """Vector of ``int f * phi_i``; ``f`` is a callable or (nt, nq) values."""
    rule = _rule(space, rule, 2 * space.degree + 2)
    vals = f(*space.quad_points(rule)) if callable(f) else f
    vals = np.broadcast_to(np.asarray(vals), (space.mesh.nt, len(rule)))
    local = (space.quad_weights(rule) * vals) @ space.basis(rule)
    return space.vector_from_local(local)


def assemble_gradient_load(space, grad, rule=None):
    """Vector of ``int grad_f . grad(phi_i)`` for ``grad(x, y) -> (gx, gy)``."""
    rule = _rule(space, rule, 2 * space.degree)
    gx, gy = grad(*space.quad_points(rule))
    g = np.stack(np.broadcast_arrays(gx, gy), axis=-1)
    local = np.einsum("tq,tqd,tqid->ti", space.quad_weights(rule), g, space.basis_gradients(rule))
    return space.vector_from_local(local)


def interpolate(space, f):
    """Nodal interpolant: values of ``f`` at the dof coordinates."""
    x, y = space.dof_coords.T
    return np.asarray(f(x, y), dtype=complex)


def ritz_project(space, f, rule=None, boundary_values=None, K=None, tol=1e-12):
    """Ritz projection of ``f`` with nodal Dirichlet lifting.

    Boundary dofs take ``f`` at their coordinates (or ``boundary_values``);
    free dofs solve ``K_ff x = (grad f, grad phi)_f - K_fb g``.
    """
    from .sparse import CompositeOperator, solve_bicgstab

    if f.grad is None:
        raise ValueError("Ritz projection needs an analytic gradient")
    rule = _rule(space, rule, 2 * space.degree + 2)
    if K is None:
        K = assemble_stiffness(space)
    U = np.zeros(space.ndof, dtype=complex)
    bnd = space.boundary_dofs
    if boundary_values is None:
        x, y = space.dof_coords[bnd].T
        boundary_values = f(x, y)
    U[bnd] = boundary_values
    if len(space.free_dofs) == 0:
        return U
    load = assemble_gradient_load(space, f.grad, rule).astype(complex)
    rhs = load[space.free_dofs] - space.block(K, "fb") @ U[bnd]
    Kff = space.block(K, "ff")
    op = CompositeOperator(0.0, 1.0, None, Kff)
    x, _ = solve_bicgstab(op, rhs, tol=tol)
    U[space.free_dofs] = x
    return U


def l2_error(space, U, exact, rule=None):
    """||U_h - exact||_{L2}; ``exact`` is a callable ``(x, y)``."""
    rule = _rule(space, rule, 2 * space.degree + 4)
    diff = evaluate(space, U, rule) - exact(*space.quad_points(rule))
    return float(np.sqrt(np.sum(space.quad_weights(rule) * np.abs(diff) ** 2)))


def h1_seminorm_error(space, U, exact_grad, rule=None):
    """||grad(U_h - exact)||_{L2}; ``exact_grad(x, y) -> (gx, gy)``."""
    rule = _rule(space, rule, 2 * space.degree + 4)
    gx, gy = exact_grad(*space.quad_points(rule))
    G = evaluate_gradient(space, U, rule)
    err = np.abs(G[..., 0] - gx) ** 2 + np.abs(G[..., 1] - gy) ** 2
    return float(np.sqrt(np.sum(space.quad_weights(rule) * err)))
