# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Matrix Lie groups given by a basis of their Lie algebra.

Algebra vectors and coalgebra vectors are coordinate arrays of length
``dim``. Coalgebra coordinates pair with algebra coordinates through the
plain dot product, so ``mu @ xi`` is the natural pairing.
"""

import dataclasses
from functools import cached_property
from typing import Callable, Optional

from colcon_core.logging import colcon_logger
from colcon_equistab.errors import (
    DegenerateBasis,
    DimensionMismatch,
    InvalidInnerProduct,
    NonFiniteInput,
    NotInAlgebra,
    NotInGroup,
)
from colcon_equistab.linalg import kernel_basis, svd_rank
import numpy as np
import scipy.linalg

logger = colcon_logger.getChild(__name__)


def _finite_vector(name, value, dim):
    value = np.asarray(value, dtype=float)
    if value.shape != (dim,):
        raise DimensionMismatch(
            "{} must have shape ({},), got {}".format(name, dim, value.shape))
    if not np.all(np.isfinite(value)):
        raise NonFiniteInput("{} has non-finite entries".format(name))
    return value


def orthogonal_residual(matrix):
    """Membership residual of O(n)."""
    n = matrix.shape[0]
    return float(np.linalg.norm(matrix.T @ matrix - np.eye(n)))


def rigid_motion_residual(matrix):
    """Membership residual of SE(n) in homogeneous coordinates."""
    n = matrix.shape[0] - 1
    rotation = matrix[:n, :n]
    bottom = matrix[n] - np.eye(n + 1)[n]
    return float(
        np.linalg.norm(rotation.T @ rotation - np.eye(n))
        + np.linalg.norm(bottom))


def _no_membership(matrix):
    return 0.0


@dataclasses.dataclass(frozen=True, eq=False)
class LieGroupSpec:
    """
    A matrix Lie group together with an inner product on its algebra.

    ``structure_constants[i, j, k]`` is the k-th coordinate of
    ``[e_i, e_j]``. ``compact_basis`` spans the part of the algebra on
    which ``inner_product`` must be Ad-invariant (all of it when None).
    """

    name: str
    basis: np.ndarray
    structure_constants: np.ndarray
    inner_product: np.ndarray
    membership: Callable[[np.ndarray], float] = _no_membership
    tolerance: float = 1e-9
    compact_basis: Optional[np.ndarray] = None

    @classmethod
    def from_basis(
        cls, name, basis, *, inner_product=None, membership=None,
        tolerance=1e-9, compact_basis=None, matrix_size=None,
    ):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 3:
            if basis.size == 0 and matrix_size is not None:
                basis = np.zeros((0, matrix_size, matrix_size))
            else:
                raise DimensionMismatch(
                    "algebra basis must be a stack of square matrices")
        dim, n, n2 = basis.shape
        if n != n2:
            raise DimensionMismatch("algebra basis matrices must be square")
        if not np.all(np.isfinite(basis)):
            raise NonFiniteInput("algebra basis has non-finite entries")
        flat = basis.reshape(dim, n * n).T
        if dim:
            s = np.linalg.svd(flat, compute_uv=False)
            if svd_rank(s) < dim:
                raise DegenerateBasis(
                    "algebra basis of '{}' is linearly dependent".format(name))
        expansion = np.linalg.pinv(flat) if dim else np.zeros((0, n * n))

        constants = np.zeros((dim, dim, dim))
        for i in range(dim):
            for j in range(i + 1, dim):
                commutator = basis[i] @ basis[j] - basis[j] @ basis[i]
                coords = expansion @ commutator.ravel()
                residual = np.linalg.norm(flat @ coords - commutator.ravel())
                if residual > tolerance * max(1.0, np.linalg.norm(commutator)):
                    raise NotInAlgebra(
                        "[e{}, e{}] leaves the span of the basis of '{}' "
                        "(residual {:.3e})".format(i + 1, j + 1, name, residual))
                constants[i, j] = coords
                constants[j, i] = -coords

        if inner_product is None:
            inner_product = flat.T @ flat
        inner_product = np.asarray(inner_product, dtype=float)
        if inner_product.shape != (dim, dim):
            raise DimensionMismatch(
                "inner product must be {0}x{0}".format(dim))
        if np.max(np.abs(inner_product - inner_product.T), initial=0.0) > tolerance:
            raise InvalidInnerProduct("inner product is not symmetric")
        if dim and np.min(np.linalg.eigvalsh(inner_product)) <= 0:
            raise InvalidInnerProduct("inner product is not positive definite")

        if compact_basis is not None:
            compact_basis = np.asarray(compact_basis, dtype=float).reshape(dim, -1)
        return cls(
            name=name,
            basis=basis,
            structure_constants=constants,
            inner_product=inner_product,
            membership=membership or _no_membership,
            tolerance=tolerance,
            compact_basis=compact_basis,
        )

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def matrix_size(self):
        return self.basis.shape[1]

    @cached_property
    def _expansion(self):
        flat = self.basis.reshape(self.dim, -1).T
        return flat, (np.linalg.pinv(flat) if self.dim else flat.T)

    @cached_property
    def inner_product_inverse(self):
        if not self.dim:
            return np.zeros((0, 0))
        return np.linalg.inv(self.inner_product)

    @cached_property
    def _cholesky(self):
        return np.linalg.cholesky(self.inner_product)

    def matrix(self, xi):
        xi = _finite_vector("algebra vector", xi, self.dim)
        return np.einsum("i,ijk->jk", xi, self.basis)

    def coords(self, matrix):
        """Expand a matrix of the algebra in the basis."""
        matrix = np.asarray(matrix, dtype=float)
        flat, expansion = self._expansion
        coords = expansion @ matrix.ravel()
        residual = np.linalg.norm(flat @ coords - matrix.ravel())
        if residual > self.tolerance * max(1.0, np.linalg.norm(matrix)):
            raise NotInAlgebra(
                "matrix is not in the algebra of '{}' (residual {:.3e})".format(
                    self.name, residual))
        return coords

    def identity(self):
        return GroupElement(np.eye(self.matrix_size), self, ())

    def exp(self, xi):
        """Matrix exponential of an algebra vector."""
        xi = _finite_vector("algebra vector", xi, self.dim)
        matrix = scipy.linalg.expm(np.einsum("i,ijk->jk", xi, self.basis))
        return GroupElement(matrix, self, (xi.copy(),))

    def bracket(self, xi, eta):
        xi = _finite_vector("algebra vector", xi, self.dim)
        eta = _finite_vector("algebra vector", eta, self.dim)
        return np.einsum("i,j,ijk->k", xi, eta, self.structure_constants)

    def ad_matrix(self, xi):
        """Matrix of ``eta -> [xi, eta]``."""
        xi = _finite_vector("algebra vector", xi, self.dim)
        return np.einsum("i,ijk->kj", xi, self.structure_constants)

    def coad_matrix(self, xi):
        """Matrix of the infinitesimal coadjoint action of ``xi``."""
        return -self.ad_matrix(xi).T

    def adjoint_matrix(self, g):
        g = self._own(g)
        inverse = np.linalg.inv(g.matrix)
        columns = [
            self.coords(g.matrix @ self.basis[i] @ inverse)
            for i in range(self.dim)
        ]
        if not columns:
            return np.zeros((0, 0))
        return np.stack(columns, axis=1)

    def adjoint(self, g, xi):
        xi = _finite_vector("algebra vector", xi, self.dim)
        return self.adjoint_matrix(g) @ xi

    def coadjoint(self, g, mu):
        """Left coadjoint action ``Ad*_{g^-1} mu``."""
        mu = _finite_vector("coalgebra vector", mu, self.dim)
        return self.adjoint_matrix(g.inverse()).T @ mu

    def coadjoint_orbit_matrix(self, mu):
        """
        Matrix sending ``eta`` to the derivative of the coadjoint orbit.

        Its null space is the isotropy algebra of ``mu``.
        """
        mu = _finite_vector("coalgebra vector", mu, self.dim)
        return -np.einsum("ijk,k->ji", self.structure_constants, mu)

    def moment_isotropy_algebra(self, mu, atol=None):
        matrix = self.coadjoint_orbit_matrix(mu)
        if not self.dim:
            return np.zeros((0, 0))
        atol = self.tolerance if atol is None else atol
        return kernel_basis(matrix, atol=atol)

    def is_coadjoint_fixed(self, mu, tol=None):
        """Return whether every generator fixes ``mu``, and the residual."""
        tol = self.tolerance if tol is None else tol
        matrix = self.coadjoint_orbit_matrix(mu)
        residual = float(np.max(np.abs(matrix), initial=0.0))
        return residual <= tol * max(1.0, float(np.linalg.norm(mu))), residual

    def annihilator(self, sub_basis):
        """Basis (in coalgebra coordinates) of the annihilator of a subspace."""
        sub_basis = np.asarray(sub_basis, dtype=float).reshape(self.dim, -1)
        if sub_basis.shape[1] == 0:
            return np.eye(self.dim)
        s = np.linalg.svd(sub_basis, compute_uv=False)
        if svd_rank(s) < sub_basis.shape[1]:
            raise DegenerateBasis("subalgebra basis is linearly dependent")
        return kernel_basis(sub_basis.T)

    def centralizer(self, sub_basis):
        """Basis of the elements commuting with every column of ``sub_basis``."""
        sub_basis = np.asarray(sub_basis, dtype=float).reshape(self.dim, -1)
        if sub_basis.shape[1] == 0:
            return np.eye(self.dim)
        # [xi, eta] = -ad(eta) xi
        stacked = np.vstack([self.ad_matrix(eta) for eta in sub_basis.T])
        return kernel_basis(stacked, atol=self.tolerance)

    def orthogonal_splitting(self, sub_basis):
        """Split the algebra as ``sub + sub^perp`` for the inner product."""
        sub_basis = np.asarray(sub_basis, dtype=float).reshape(self.dim, -1)
        if sub_basis.shape[1] == 0:
            complement = np.eye(self.dim)
        else:
            complement = kernel_basis(sub_basis.T @ self.inner_product)
        return Splitting.from_bases(sub_basis, complement)

    def subgroup(self, sub_basis, name=None):
        sub_basis = np.asarray(sub_basis, dtype=float).reshape(self.dim, -1)
        matrices = np.einsum("ik,ijl->kjl", sub_basis, self.basis)
        return LieGroupSpec.from_basis(
            name or "{}_sub{}".format(self.name, sub_basis.shape[1]),
            matrices,
            inner_product=sub_basis.T @ self.inner_product @ sub_basis,
            membership=self.membership,
            tolerance=self.tolerance,
            matrix_size=self.matrix_size,
        )

    def random_algebra(self, rng, scale=1.0, sub_basis=None):
        if sub_basis is None:
            return scale * rng.standard_normal(self.dim)
        sub_basis = np.asarray(sub_basis, dtype=float).reshape(self.dim, -1)
        return sub_basis @ (scale * rng.standard_normal(sub_basis.shape[1]))

    def random_element(self, rng, scale=1.0, sub_basis=None):
        return self.exp(self.random_algebra(rng, scale, sub_basis))

    def verify_ad_invariance(self, n_samples=200, seed=0, sub_basis=None, scale=1.0):
        """
        Sample ``|<Ad_g xi, Ad_g eta> - <xi, eta>|`` over group elements.

        Group elements are drawn from ``sub_basis``, defaulting to the
        compact part of the algebra.
        """
        if sub_basis is None:
            sub_basis = self.compact_basis
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_samples):
            g = self.random_element(rng, scale, sub_basis)
            xi = rng.standard_normal(self.dim)
            eta = rng.standard_normal(self.dim)
            ad = self.adjoint_matrix(g)
            moved = (ad @ xi) @ self.inner_product @ (ad @ eta)
            worst = max(worst, abs(moved - xi @ self.inner_product @ eta))
        return AdInvarianceReport(max_violation=float(worst), n_samples=n_samples)

    def norm_suite(self, x, kind="algebra"):
        """
        Norms of an algebra or coalgebra vector.

        The dual norm uses the inverse inner product. The sup norm is the
        supremum of the pairing over unit algebra vectors, which has the
        same closed form.
        """
        x = _finite_vector("vector", x, self.dim)
        if kind == "algebra":
            norm_g = float(np.sqrt(x @ self.inner_product @ x))
            flat = self.inner_product @ x
            norm_dual = float(np.sqrt(flat @ self.inner_product_inverse @ flat))
            return NormSuite(norm_g, norm_dual, norm_dual)
        if kind == "coalgebra":
            norm_dual = float(np.sqrt(x @ self.inner_product_inverse @ x))
            sharp = self.inner_product_inverse @ x
            norm_g = float(np.sqrt(sharp @ self.inner_product @ sharp))
            return NormSuite(norm_g, norm_dual, norm_dual)
        raise ValueError("kind must be 'algebra' or 'coalgebra'")

    def sampled_sup_norm(self, rho, n_samples=10000, seed=0):
        """Estimate ``sup |<rho, xi>|`` over unit algebra vectors by sampling."""
        rho = _finite_vector("coalgebra vector", rho, self.dim)
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((n_samples, self.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        # xi = L^-T u has unit G-norm when G = L L^T
        xi = scipy.linalg.solve_triangular(
            self._cholesky, u.T, lower=True, trans="T").T
        return float(np.max(np.abs(xi @ rho)))

    def sup_vs_dual_constant(self, n_samples=200, seed=0):
        """
        Constant relating the sup norm to the dual norm on the coalgebra.

        Returns 1.0 unless sampling finds a larger ratio, which would
        signal a badly conditioned inner product.
        """
        if not self.dim:
            return 1.0
        rng = np.random.default_rng(seed)
        worst = 1.0
        for _ in range(n_samples):
            rho = rng.standard_normal(self.dim)
            dual = self.norm_suite(rho, "coalgebra").norm_dual
            sampled = self.sampled_sup_norm(
                rho, n_samples=64, seed=int(rng.integers(2**31)))
            worst = max(worst, sampled / dual)
        if worst > 1.0 + 1e-9:
            logger.warning(
                "sup norm exceeds dual norm by {:.3e} on '{}'".format(
                    worst - 1.0, self.name))
        return worst if worst > 1.0 + 1e-9 else 1.0

    def _own(self, g):
        """Accept elements of this group, or of another group whose matrix lies in it."""
        if g.group is self:
            return g
        if g.matrix.shape != (self.matrix_size,) * 2:
            raise DimensionMismatch("group element belongs to another group")
        residual = self.membership(g.matrix)
        if residual > self.tolerance * max(1.0, np.linalg.norm(g.matrix)):
            raise NotInGroup(
                "element of '{}' is not in '{}' (residual {:.3e})".format(
                    g.group.name, self.name, residual))
        return g


@dataclasses.dataclass(frozen=True, eq=False)
class GroupElement:
    """
    A group matrix, optionally remembering how it was generated.

    ``path`` lists algebra vectors whose exponentials multiply (left to
    right) to ``matrix``; it is None for elements of unknown origin.
    Representations other than the defining one need the path.
    """

    matrix: np.ndarray
    group: LieGroupSpec
    path: Optional[tuple] = ()

    def __post_init__(self):  # noqa: D105
        matrix = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", matrix)
        if not np.all(np.isfinite(matrix)):
            raise NonFiniteInput("group element has non-finite entries")
        residual = self.group.membership(matrix)
        if residual > self.group.tolerance * max(1.0, np.linalg.norm(matrix)):
            raise NotInGroup(
                "matrix is not in '{}' (residual {:.3e})".format(
                    self.group.name, residual))

    def __matmul__(self, other):
        path = None
        if self.path is not None and other.path is not None:
            path = tuple(self.path) + tuple(other.path)
        return GroupElement(self.matrix @ other.matrix, self.group, path)

    def inverse(self):
        path = None
        if self.path is not None:
            path = tuple(-xi for xi in reversed(self.path))
        return GroupElement(np.linalg.inv(self.matrix), self.group, path)

    @property
    def membership_residual(self):
        return self.group.membership(self.matrix)


@dataclasses.dataclass(frozen=True, eq=False)
class Splitting:
    """
    A direct sum ``sub + comp`` of the algebra.

    ``projector`` is the projection onto ``sub`` along ``comp`` and
    ``sub_coords`` returns the coordinates of that projection in the
    columns of ``sub_basis``.
    """

    sub_basis: np.ndarray
    comp_basis: np.ndarray
    projector: np.ndarray
    sub_coords: np.ndarray

    @classmethod
    def from_bases(cls, sub_basis, comp_basis, cond_max=1e10):
        sub_basis = np.asarray(sub_basis, dtype=float)
        comp_basis = np.asarray(comp_basis, dtype=float)
        dim = sub_basis.shape[0]
        k = sub_basis.shape[1]
        frame = np.hstack([sub_basis, comp_basis.reshape(dim, -1)])
        if frame.shape != (dim, dim):
            raise DegenerateBasis(
                "splitting bases have {} columns in dimension {}".format(
                    frame.shape[1], dim))
        if dim == 0:
            empty = np.zeros((0, 0))
            return cls(sub_basis, comp_basis.reshape(0, 0), empty, np.zeros((k, 0)))
        if np.linalg.cond(frame) > cond_max:
            raise DegenerateBasis("subspaces of the splitting are not transversal")
        inverse = np.linalg.inv(frame)
        sub_coords = inverse[:k]
        return cls(sub_basis, comp_basis.reshape(dim, -1), sub_basis @ sub_coords, sub_coords)

    def project(self, xi):
        return self.projector @ np.asarray(xi, dtype=float)


@dataclasses.dataclass(frozen=True)
class AdInvarianceReport:
    max_violation: float
    n_samples: int


@dataclasses.dataclass(frozen=True)
class NormSuite:
    norm_g: float
    norm_dual: float
    norm_sup: float


J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def so2():
    return LieGroupSpec.from_basis("SO2", [J2], membership=orthogonal_residual)


def so3():
    l1 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    l2 = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    l3 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return LieGroupSpec.from_basis(
        "SO3", [l1, l2, l3], membership=orthogonal_residual)


def torus(n):
    basis = np.zeros((n, 2 * n, 2 * n))
    for i in range(n):
        basis[i, 2 * i:2 * i + 2, 2 * i:2 * i + 2] = J2
    return LieGroupSpec.from_basis(
        "T{}".format(n), basis, membership=orthogonal_residual)


def se2():
    rotation = np.zeros((3, 3))
    rotation[:2, :2] = J2
    shift_x = np.zeros((3, 3))
    shift_x[0, 2] = 1.0
    shift_y = np.zeros((3, 3))
    shift_y[1, 2] = 1.0
    return LieGroupSpec.from_basis(
        "SE2", [rotation, shift_x, shift_y],
        membership=rigid_motion_residual,
        compact_basis=np.array([[1.0], [0.0], [0.0]]),
    )


CATALOG = {
    "SO2": so2,
    "SO3": so3,
    "T2": lambda: torus(2),
    "T3": lambda: torus(3),
    "SE2": se2,
}


def catalog_group(name, verify=True):
    """
    Instantiate a group from the catalog.

    The inner product is checked for Ad-invariance on the compact part.
    """
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(
            "unknown group '{}', available: {}".format(
                name, ", ".join(sorted(CATALOG))))
    group = factory()
    if verify and group.dim:
        report = group.verify_ad_invariance(n_samples=32)
        if report.max_violation > 1e-8:
            logger.warning(
                "inner product of '{}' is not Ad-invariant "
                "(violation {:.3e})".format(name, report.max_violation))
    return group
