# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Constant symplectic forms, Hamiltonian fields and momentum maps."""

import dataclasses
from functools import cached_property
from typing import Tuple

from colcon_core.logging import colcon_logger
from colcon_equistab.action import LinearGAction, VectorFieldHandle
from colcon_equistab.errors import (
    DimensionMismatch,
    DomainError,
    InvalidAction,
    NoConsistentSign,
    SingularOmega,
)
from colcon_equistab.expr import (
    BinOp,
    Expression,
    linear_combination,
    quadratic_form,
)
import numpy as np

logger = colcon_logger.getChild(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class SymplecticStructure:
    """A constant nondegenerate antisymmetric form ``omega(u, v) = u^T O v``."""

    omega: np.ndarray
    tolerance: float = 1e-12

    def __post_init__(self):  # noqa: D105
        omega = np.asarray(self.omega, dtype=float)
        object.__setattr__(self, "omega", omega)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise DimensionMismatch("symplectic form must be square")
        scale = max(1.0, float(np.max(np.abs(omega), initial=0.0)))
        if np.max(np.abs(omega + omega.T), initial=0.0) > self.tolerance * scale:
            raise SingularOmega("symplectic form is not antisymmetric")
        if omega.shape[0] % 2:
            raise SingularOmega("symplectic form needs an even dimension")
        if omega.size:
            s = np.linalg.svd(omega, compute_uv=False)
            if s[-1] <= 1e-12 * s[0]:
                raise SingularOmega("symplectic form is degenerate")

    @classmethod
    def canonical(cls, n):
        """Form on ``(q, p)`` coordinates of R^{2n}."""
        omega = np.zeros((2 * n, 2 * n))
        omega[:n, n:] = np.eye(n)
        omega[n:, :n] = -np.eye(n)
        return cls(omega)

    @property
    def dim(self):
        return self.omega.shape[0]

    @cached_property
    def sharp(self):
        """Matrix sending a gradient to its Hamiltonian vector."""
        return np.linalg.inv(self.omega.T)

    def pairing(self, u, v):
        return np.einsum("...i,ij,...j->...", u, self.omega, v)


@dataclasses.dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """
    A G-invariant Hamiltonian with an equivariant momentum map.

    ``momentum[i]`` is the component of the momentum map paired with
    the algebra basis vector ``e_i``.
    """

    action: LinearGAction
    omega: SymplecticStructure
    h: Expression
    momentum: Tuple[Expression, ...]
    name: str = "system"

    def __post_init__(self):  # noqa: D105
        n = self.action.dim
        if self.omega.dim != n or self.h.n_vars != n:
            raise DimensionMismatch(
                "action, form and Hamiltonian disagree on the dimension")
        if len(self.momentum) != self.action.group.dim:
            raise DimensionMismatch(
                "momentum map needs {} components".format(self.action.group.dim))
        for component in self.momentum:
            if component.n_vars != n:
                raise DimensionMismatch("momentum component has the wrong arity")

    @property
    def dim(self):
        return self.action.dim

    @property
    def group(self):
        return self.action.group

    def momentum_value(self, m):
        m = np.asarray(m, dtype=float)
        if not self.momentum:
            return np.zeros(m.shape[:-1] + (0,))
        if m.ndim == 1:
            return np.array([c.evaluate(m) for c in self.momentum])
        return np.stack([c.evaluate_batch(m) for c in self.momentum], axis=-1)

    def momentum_jacobian(self, m):
        """Rows are the gradients of the momentum components."""
        if not self.momentum:
            return np.zeros((0, self.dim))
        return np.stack([c.gradient(m) for c in self.momentum])

    def momentum_dual_norm2(self, m):
        """Squared dual norm of the momentum."""
        value = self.momentum_value(m)
        return np.einsum("...i,ij,...j->...", value, self.group.inner_product_inverse, value)

    def energy(self, m):
        m = np.asarray(m, dtype=float)
        return self.h.evaluate(m) if m.ndim == 1 else self.h.evaluate_batch(m)


def gradient_field(omega, expression, name="X"):
    """Hamiltonian vector field of an expression."""
    sharp = omega.sharp

    def field(m):
        if m.ndim == 1:
            return sharp @ expression.gradient(m)
        return expression.gradient_batch(m) @ sharp.T

    return VectorFieldHandle(field, omega.dim, name=name)


def hamiltonian_field(system, verify=True, n_checks=10, seed=0, center=None, scale=1.0):
    """
    Vector field ``X_h`` with ``omega(X_h, v) = dh . v``.

    With ``verify`` the defining identity is sampled around ``center``.
    """
    field = gradient_field(system.omega, system.h, name="X_h")
    if verify:
        rng = np.random.default_rng(seed)
        center = np.zeros(system.dim) if center is None else np.asarray(center, dtype=float)
        for _ in range(n_checks):
            m = center + scale * rng.standard_normal(system.dim)
            v = rng.standard_normal(system.dim)
            try:
                gradient = system.h.gradient(m)
            except DomainError:
                continue
            defect = abs(system.omega.pairing(field(m), v) - gradient @ v)
            if defect > 1e-10 * (1.0 + np.linalg.norm(gradient) * np.linalg.norm(v)):
                raise SingularOmega(
                    "Hamiltonian field fails omega(X, v) = dh.v "
                    "(defect {:.3e})".format(defect))
    return field


def quadratic_momentum(action, omega, tol=1e-9, n_samples=16, seed=0):
    """
    Momentum map ``Phi_i(m) = c m^T O R_i m`` of a linear symplectic action.

    The constant ``c`` is chosen from -1/2 and +1/2 as the one for which
    ``dPhi_i . v = omega(R_i m, v)`` holds on random samples.
    """
    if not action.is_linear:
        raise InvalidAction("quadratic momentum needs a linear action")
    n = action.dim
    if omega.dim != n:
        raise DimensionMismatch("form and action disagree on the dimension")
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((n_samples, n))
    tangents = rng.standard_normal((n_samples, n))
    for c in (-0.5, 0.5):
        components = tuple(
            quadratic_form(c * omega.omega @ rep, n) for rep in action.algebra_rep)
        worst = 0.0
        for m, v in zip(points, tangents):
            for i, component in enumerate(components):
                expected = omega.pairing(action.algebra_rep[i] @ m, v)
                worst = max(worst, abs(component.gradient(m) @ v - expected))
        if worst <= tol * (1.0 + n):
            logger.debug("quadratic momentum uses c = {}".format(c))
            return components
    raise NoConsistentSign("neither sign gives a momentum map; is the action symplectic?")


def augmented_hamiltonian(system, xi):
    """Expression of ``h - <Phi, xi>``; ``xi = 0`` returns h itself."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (system.group.dim,):
        raise DimensionMismatch("algebra vector has the wrong length")
    if not np.any(xi):
        return system.h
    pairing = linear_combination(zip(xi, system.momentum), system.dim)
    return Expression(BinOp("-", system.h.ast, pairing.ast), system.dim)


@dataclasses.dataclass(frozen=True)
class MomentumMapReport:
    property_violation: float
    equivariance_violation: float
    n_samples: int


def verify_momentum_map(system, n_samples=64, seed=0, center=None, scale=1.0):
    """Sample the infinitesimal property and coadjoint equivariance."""
    action = system.action
    group = system.group
    rng = np.random.default_rng(seed)
    center = np.zeros(system.dim) if center is None else np.asarray(center, dtype=float)
    prop = 0.0
    equiv = 0.0
    for _ in range(n_samples):
        m = center + scale * rng.standard_normal(system.dim)
        v = rng.standard_normal(system.dim)
        jacobian = system.momentum_jacobian(m)
        orbit = action.orbit_matrix(m)
        for i in range(group.dim):
            expected = system.omega.pairing(orbit[:, i], v)
            prop = max(prop, abs(jacobian[i] @ v - expected))
        g = group.random_element(rng)
        moved = system.momentum_value(action.act(g, m))
        if group.dim:
            equiv = max(equiv, float(np.linalg.norm(
                moved - group.coadjoint(g, system.momentum_value(m)))))
    return MomentumMapReport(float(prop), float(equiv), n_samples)


def verify_symplectic_invariance(action, omega, n_samples=32, seed=0):
    """Largest ``|L^T O L - O|`` over sampled group elements."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        linear = action.linear_part(action.group.random_element(rng))
        worst = max(worst, float(np.max(
            np.abs(linear.T @ omega.omega @ linear - omega.omega), initial=0.0)))
    return worst


@dataclasses.dataclass(frozen=True)
class NoetherReport:
    energy_drift_rate: float
    momentum_drift_rate: float
    n_samples: int


def noether_report(system, n_samples=32, seed=0, center=None, scale=1.0):
    """Sample ``dh . X_h`` and ``dPhi_i . X_h``, both zero for invariant h."""
    field = hamiltonian_field(system, verify=False)
    rng = np.random.default_rng(seed)
    center = np.zeros(system.dim) if center is None else np.asarray(center, dtype=float)
    energy = 0.0
    momentum = 0.0
    for _ in range(n_samples):
        m = center + scale * rng.standard_normal(system.dim)
        try:
            velocity = field(m)
            energy = max(energy, abs(system.h.gradient(m) @ velocity))
        except DomainError:
            continue
        if system.momentum:
            momentum = max(momentum, float(np.max(np.abs(
                system.momentum_jacobian(m) @ velocity))))
    return NoetherReport(float(energy), float(momentum), n_samples)
