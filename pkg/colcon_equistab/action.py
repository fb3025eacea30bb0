# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Linear and affine group actions on R^N, vector fields and gauges."""

import dataclasses
from typing import Callable, Optional

from colcon_core.logging import colcon_logger
from colcon_equistab.errors import (
    DimensionMismatch,
    DomainError,
    InvalidAction,
    NonFiniteInput,
    NotRelativeEquilibrium,
)
from colcon_equistab.lie import J2, catalog_group
from colcon_equistab.linalg import intersect_subspaces, kernel_basis, svd_rank
import numpy as np
import scipy.linalg

logger = colcon_logger.getChild(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class LinearGAction:
    """
    Action ``g . x = L(g) x + b(g)`` generated by an algebra representation.

    ``algebra_rep[i]`` is the N x N matrix representing basis vector
    ``e_i`` and ``affine_part[i]`` its translation. Elements are mapped
    through their exponential path, or taken literally when the action is
    the defining representation of a matrix group.
    """

    group: object
    algebra_rep: np.ndarray
    affine_part: Optional[np.ndarray] = None
    orthogonal: bool = True
    defining: bool = False
    name: str = ""
    tolerance: float = 1e-9

    def __post_init__(self):  # noqa: D105
        rep = np.asarray(self.algebra_rep, dtype=float)
        d = self.group.dim
        if rep.size == 0 and d == 0:
            rep = rep.reshape(0, *(rep.shape[1:] if rep.ndim == 3 else (0, 0)))
        if rep.ndim != 3 or rep.shape[0] != d or rep.shape[1] != rep.shape[2]:
            raise DimensionMismatch(
                "algebra representation must have shape ({}, N, N), got {}".format(
                    d, rep.shape))
        if not np.all(np.isfinite(rep)):
            raise NonFiniteInput("algebra representation has non-finite entries")
        n = rep.shape[1]
        affine = self.affine_part
        affine = np.zeros((d, n)) if affine is None else np.asarray(affine, dtype=float)
        if affine.shape != (d, n):
            raise DimensionMismatch(
                "affine part must have shape ({}, {}), got {}".format(d, n, affine.shape))
        object.__setattr__(self, "algebra_rep", rep)
        object.__setattr__(self, "affine_part", affine)
        if self.defining and self.group.matrix_size not in (n, n + 1):
            raise InvalidAction("defining action needs matching matrix size")
        self._check_homomorphism()

    @property
    def dim(self):
        return self.algebra_rep.shape[1]

    @property
    def is_linear(self):
        return not np.any(self.affine_part)

    def augmented(self, xi):
        """Representation of ``xi`` as an (N+1) x (N+1) affine matrix."""
        n = self.dim
        out = np.zeros((n + 1, n + 1))
        out[:n, :n] = np.einsum("i,ijk->jk", xi, self.algebra_rep)
        out[:n, n] = xi @ self.affine_part
        return out

    def _check_homomorphism(self):
        group = self.group
        for i in range(group.dim):
            for j in range(i + 1, group.dim):
                ei = np.eye(group.dim)[i]
                ej = np.eye(group.dim)[j]
                a, b = self.augmented(ei), self.augmented(ej)
                commutator = a @ b - b @ a
                expected = self.augmented(group.structure_constants[i, j])
                defect = np.linalg.norm(commutator - expected)
                if defect > self.tolerance * max(1.0, np.linalg.norm(commutator)):
                    raise InvalidAction(
                        "representation does not respect [e{}, e{}] "
                        "(defect {:.3e})".format(i + 1, j + 1, defect))

    def represent(self, g):
        """Return ``(L, b)`` for a group element."""
        n = self.dim
        if g.path is not None:
            total = np.eye(n + 1)
            for xi in g.path:
                total = total @ scipy.linalg.expm(self.augmented(xi))
            return total[:n, :n], total[:n, n]
        if self.defining:
            if g.matrix.shape[0] == n:
                return g.matrix, np.zeros(n)
            return g.matrix[:n, :n], g.matrix[:n, n]
        raise InvalidAction(
            "element without exponential path in a non-defining action")

    def linear_part(self, g):
        return self.represent(g)[0]

    def act(self, g, x):
        linear, shift = self.represent(g)
        x = np.asarray(x, dtype=float)
        return x @ linear.T + shift

    def orbit_matrix(self, m):
        """Matrix whose columns are the fundamental fields of the basis at m."""
        m = _state(m, self.dim)
        return np.einsum("ijk,...k->...ji", self.algebra_rep, m) + self.affine_part.T

    def verify_orthogonality(self, n_samples=16, seed=0):
        """Largest ``|L(g)^T L(g) - I|`` over sampled group elements."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_samples):
            linear = self.linear_part(self.group.random_element(rng))
            worst = max(worst, float(np.max(
                np.abs(linear.T @ linear - np.eye(self.dim)), initial=0.0)))
        return worst


def _state(m, n):
    m = np.asarray(m, dtype=float)
    if m.shape[-1:] != (n,):
        raise DimensionMismatch("state must have {} entries, got shape {}".format(n, m.shape))
    if not np.all(np.isfinite(m)):
        raise NonFiniteInput("state has non-finite entries")
    return m


def fundamental_field(action, xi, m):
    """Infinitesimal generator ``d/dt exp(t xi) . m`` at ``t = 0``."""
    m = _state(m, action.dim)
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1:] != (action.group.dim,):
        raise DimensionMismatch(
            "algebra vector must have {} entries".format(action.group.dim))
    return (
        np.einsum("...i,ijk,...k->...j", xi, action.algebra_rep, m)
        + xi @ action.affine_part
    )


@dataclasses.dataclass(frozen=True)
class OrbitTangent:
    orbit_basis: np.ndarray
    stabilizer_basis: np.ndarray
    singular_values: np.ndarray
    matrix: np.ndarray

    @property
    def orbit_dim(self):
        return self.orbit_basis.shape[1]


def orbit_tangent(action, m, rtol=1e-10, atol=1e-14):
    """Tangent space of the orbit through m and the stabilizer algebra."""
    matrix = action.orbit_matrix(_state(m, action.dim))
    d = action.group.dim
    if d == 0:
        return OrbitTangent(np.zeros((action.dim, 0)), np.zeros((0, 0)), np.zeros(0), matrix)
    u, s, vh = scipy.linalg.svd(matrix, full_matrices=True)
    rank = svd_rank(s, rtol, atol)
    return OrbitTangent(
        orbit_basis=u[:, :rank].copy(),
        stabilizer_basis=vh[rank:].T.copy(),
        singular_values=s,
        matrix=matrix,
    )


@dataclasses.dataclass(frozen=True, eq=False)
class VectorFieldHandle:
    """
    A vector field on R^N evaluated pointwise or on stacked points.

    ``declared_subalgebra`` spans the algebra directions under which the
    field is claimed to be equivariant (None means the whole algebra).
    """

    field: Callable[[np.ndarray], np.ndarray]
    dim: int
    declared_subalgebra: Optional[np.ndarray] = None
    name: str = "X"

    def __call__(self, m):
        return np.asarray(self.field(np.asarray(m, dtype=float)), dtype=float)


@dataclasses.dataclass(frozen=True)
class VelocitySolution:
    xi: np.ndarray
    residual: float
    kernel: np.ndarray
    tolerance: float

    @property
    def is_relative_equilibrium(self):
        return self.residual <= self.tolerance


def solve_velocity(action, X, m, tol=1e-9, subspace=None, rtol=1e-10):
    """
    Find the minimum-norm ``xi`` with ``xi_M(m)`` closest to ``X(m)``.

    ``subspace`` restricts ``xi`` to the span of its columns. The point
    is a relative equilibrium when the residual stays below
    ``tol * (1 + |X(m)|)``.
    """
    m = _state(m, action.dim)
    value = X(m)
    d = action.group.dim
    basis = np.eye(d) if subspace is None else np.asarray(subspace, dtype=float).reshape(d, -1)
    matrix = action.orbit_matrix(m) @ basis
    if matrix.shape[1] == 0:
        coefficients = np.zeros(0)
        kernel = np.zeros((d, 0))
    else:
        coefficients = np.linalg.lstsq(matrix, value, rcond=rtol)[0]
        kernel = basis @ kernel_basis(matrix, rtol)
    xi = basis @ coefficients
    residual = float(np.linalg.norm(matrix @ coefficients - value))
    return VelocitySolution(
        xi=xi,
        residual=residual,
        kernel=kernel,
        tolerance=tol * (1.0 + float(np.linalg.norm(value))),
    )


def require_relative_equilibrium(action, X, m, tol=1e-9):
    solution = solve_velocity(action, X, m, tol)
    if not solution.is_relative_equilibrium:
        raise NotRelativeEquilibrium(
            "X(m) is not tangent to the orbit (residual {:.3e})".format(solution.residual))
    return solution


@dataclasses.dataclass(frozen=True, eq=False)
class GaugeTransformation:
    """A smooth map from R^N into the algebra."""

    map: Callable[[np.ndarray], np.ndarray]
    action: LinearGAction
    subalgebra: Optional[np.ndarray] = None

    def __call__(self, m):
        return np.asarray(self.map(np.asarray(m, dtype=float)), dtype=float)

    def __neg__(self):
        return GaugeTransformation(lambda m: -self(m), self.action, self.subalgebra)

    def __add__(self, other):
        subalgebra = None
        if self.subalgebra is not None and other.subalgebra is not None:
            subalgebra = intersect_subspaces(self.subalgebra, other.subalgebra)
        return GaugeTransformation(
            lambda m: self(m) + other(m), self.action, subalgebra)

    @classmethod
    def constant(cls, action, xi, subalgebra=None):
        xi = np.asarray(xi, dtype=float)

        def constant_map(m):
            return np.broadcast_to(xi, m.shape[:-1] + xi.shape).copy()

        return cls(constant_map, action, subalgebra)

    @classmethod
    def zero(cls, action):
        return cls.constant(action, np.zeros(action.group.dim))


def induced_gauge_field(psi, m):
    """Vector field ``m -> psi(m)_M(m)``."""
    return fundamental_field(psi.action, psi(m), m)


def apply_gauge(X, psi):
    """Return the field ``X + psi_M``."""

    def gauged(m):
        return X(m) + induced_gauge_field(psi, m)

    declared = psi.subalgebra if psi.subalgebra is not None else X.declared_subalgebra
    return VectorFieldHandle(gauged, X.dim, declared, name="{}+gauge".format(X.name))


def augment_field(action, X, xi):
    """
    Return ``X - xi_M``, equivariant under the centralizer of ``xi``.

    ``xi = 0`` gives back X itself.
    """
    xi = np.asarray(xi, dtype=float)
    if not np.any(xi):
        return X
    centralizer = kernel_basis(action.group.ad_matrix(xi))
    if X.declared_subalgebra is not None:
        centralizer = intersect_subspaces(centralizer, X.declared_subalgebra)

    def augmented(m):
        return X(m) - fundamental_field(action, xi, m)

    return VectorFieldHandle(augmented, X.dim, centralizer, name="{}^xi".format(X.name))


@dataclasses.dataclass(frozen=True)
class EquivarianceReport:
    max_violation: float
    n_samples: int
    skipped: int = 0


def check_equivariance(action, X, n_samples=64, seed=0, center=None, scale=1.0):
    """Sample ``|X(g.m) - L(g) X(m)|`` over the declared subalgebra."""
    rng = np.random.default_rng(seed)
    center = np.zeros(action.dim) if center is None else np.asarray(center, dtype=float)
    worst = 0.0
    skipped = 0
    for _ in range(n_samples):
        g = action.group.random_element(rng, sub_basis=X.declared_subalgebra)
        m = center + scale * rng.standard_normal(action.dim)
        try:
            violation = np.linalg.norm(
                X(action.act(g, m)) - action.linear_part(g) @ X(m))
        except DomainError:
            skipped += 1
            continue
        worst = max(worst, float(violation))
    return EquivarianceReport(worst, n_samples, skipped)


def check_gauge(psi, n_samples=64, seed=0, center=None, scale=1.0):
    """Sample ``|psi(g.m) - Ad_g psi(m)|`` over the gauge's subalgebra."""
    action = psi.action
    group = action.group
    rng = np.random.default_rng(seed)
    center = np.zeros(action.dim) if center is None else np.asarray(center, dtype=float)
    worst = 0.0
    for _ in range(n_samples):
        g = group.random_element(rng, sub_basis=psi.subalgebra)
        m = center + scale * rng.standard_normal(action.dim)
        violation = np.linalg.norm(psi(action.act(g, m)) - group.adjoint(g, psi(m)))
        worst = max(worst, float(violation))
    return EquivarianceReport(worst, n_samples)


def _blocks(*blocks):
    return scipy.linalg.block_diag(*blocks)


def catalog_action(name):
    """
    Instantiate a named action together with its group.

    Available: SO2_R2, SO2_DIAG_R4, SO3_R3, SO3_DIAG_R6, T2_R4, T3_R6,
    SE2_R2.
    """
    if name == "SO2_R2":
        group = catalog_group("SO2")
        return LinearGAction(group, group.basis, defining=True, name=name)
    if name == "SO2_DIAG_R4":
        group = catalog_group("SO2")
        return LinearGAction(group, [_blocks(J2, J2)], name=name)
    if name == "SO3_R3":
        group = catalog_group("SO3")
        return LinearGAction(group, group.basis, defining=True, name=name)
    if name == "SO3_DIAG_R6":
        group = catalog_group("SO3")
        return LinearGAction(group, [_blocks(e, e) for e in group.basis], name=name)
    if name in ("T2_R4", "T3_R6"):
        group = catalog_group(name[:2])
        return LinearGAction(group, group.basis, defining=True, name=name)
    if name == "SE2_R2":
        group = catalog_group("SE2")
        return LinearGAction(
            group, group.basis[:, :2, :2], affine_part=group.basis[:, :2, 2],
            orthogonal=False, defining=True, name=name)
    raise KeyError("unknown action '{}'".format(name))


CATALOG_ACTIONS = (
    "SO2_R2", "SO2_DIAG_R4", "SO3_R3", "SO3_DIAG_R6", "T2_R4", "T3_R6", "SE2_R2")
