# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""
Local normal form of the momentum map near a point with fixed momentum.

Near ``g . (m + ...)`` the momentum reads
``Ad*_{g^-1} (mu + rho + iota(Phi_W(w)))`` with ``rho`` in the
annihilator of the stabilizer algebra ``k``, ``w`` in a symplectic
normal space ``W`` and ``Phi_W`` the quadratic momentum of ``K`` on W.
A coadjoint-fixed moment ``mu`` is handled by shifting ``Phi``.
"""

import dataclasses
from typing import Tuple

from colcon_core.logging import colcon_logger
from colcon_equistab.action import LinearGAction, orbit_tangent
from colcon_equistab.config import DEFAULT_TOLERANCES
from colcon_equistab.errors import (
    DimensionMismatch,
    InvalidAction,
    NonzeroMoment,
    OutOfChart,
    PreconditionFailed,
    SingularOmega,
)
from colcon_equistab.expr import Expression
from colcon_equistab.lie import Splitting
from colcon_equistab.linalg import kernel_basis
from colcon_equistab.stability import (
    Definiteness,
    characterize,
    classify,
    restricted_hessian,
    slice_complement,
)
from colcon_equistab.symplectic import SymplecticStructure, quadratic_momentum
from colcon_equistab.tube import build_tube
import numpy as np

logger = colcon_logger.getChild(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class MGSData:
    point: np.ndarray
    mu: np.ndarray
    k_basis: np.ndarray
    k0_basis: np.ndarray
    splitting: Splitting
    w_basis: np.ndarray
    omega_w: np.ndarray
    w_action: LinearGAction
    phi_w: Tuple[Expression, ...]
    k0_radius: float
    w_radius: float
    w_invariance_defect: float

    @property
    def dims(self):
        """``(dim k0, dim W, dim orbit)``."""
        return self.k0_basis.shape[1], self.w_basis.shape[1], self.orbit_dim

    @property
    def orbit_dim(self):
        return self.k0_basis.shape[0] - self.k_basis.shape[1]


def symplectic_normal_space(omega, orbit_basis, rtol=1e-10):
    """
    A symplectic complement of the orbit inside ``ker dPhi``.

    The orbit tangent ``O`` is isotropic at a coadjoint-fixed moment, so
    ``O + Omega^T O`` is symplectic and its omega-complement is returned.
    """
    n = omega.dim
    if orbit_basis.shape[1] == 0:
        return np.eye(n)
    partner = omega.omega.T @ orbit_basis
    constraints = np.vstack([
        orbit_basis.T @ omega.omega,
        partner.T @ omega.omega,
    ])
    return kernel_basis(constraints, rtol)


def _annihilator_radius(system, m, orbit_basis, slice_radius):
    """
    Radius of the momentum values reached from the slice ball along the
    symplectic partners of the orbit directions.
    """
    if orbit_basis.shape[1] == 0:
        return slice_radius
    partner = np.linalg.qr(system.omega.omega.T @ orbit_basis)[0]
    s = np.linalg.svd(system.momentum_jacobian(m) @ partner, compute_uv=False)
    return slice_radius * float(s[-1]) if s.size and s[-1] > 0 else slice_radius


def mgs_data(system, m, tol=DEFAULT_TOLERANCES):
    """Compute the normal-form data at a relative equilibrium m."""
    m = np.asarray(m, dtype=float)
    action = system.action
    group = system.group
    found = characterize(system, m, tol)
    if not found.is_relative_equilibrium:
        raise PreconditionFailed("m is not a relative equilibrium")
    mu = found.mu
    if group.dim:
        fixed, residual = group.is_coadjoint_fixed(mu, tol.algebra)
        if not fixed:
            raise NonzeroMoment(
                "moment is not coadjoint-fixed (residual {:.3e})".format(residual))
    tangent = orbit_tangent(action, m, tol.rank_rtol)
    k_basis = tangent.stabilizer_basis
    k0_basis = group.annihilator(k_basis) if group.dim else np.zeros((0, 0))
    splitting = group.orthogonal_splitting(k_basis)
    w_basis = symplectic_normal_space(system.omega, tangent.orbit_basis, tol.rank_rtol)
    omega_w = w_basis.T @ system.omega.omega @ w_basis
    omega_w = 0.5 * (omega_w - omega_w.T)
    if w_basis.shape[1]:
        s = np.linalg.svd(omega_w, compute_uv=False)
        if s[-1] <= 1e-8 * s[0]:
            raise SingularOmega("restricted form on W is degenerate")
    matrices = np.einsum("ik,ijl->kjl", k_basis, action.algebra_rep)
    w_rep = np.einsum("ja,kjl,lb->kab", w_basis, matrices, w_basis).reshape(
        k_basis.shape[1], w_basis.shape[1], w_basis.shape[1])
    defect = 0.0
    projector = w_basis @ w_basis.T
    for matrix in matrices:
        moved = matrix @ w_basis
        defect = max(defect, float(np.max(np.abs(moved - projector @ moved), initial=0.0)))
    if defect > tol.algebra * 10:
        logger.warning("W is not invariant under the stabilizer (defect {:.3e})".format(defect))
    k_group = group.subgroup(k_basis, name="{}_m".format(group.name))
    w_action = LinearGAction(k_group, w_rep, name="W")
    phi_w = quadratic_momentum(w_action, SymplecticStructure(omega_w, tolerance=1e-9))
    w_radius = tol.radius_hint
    if action.orthogonal and action.is_linear:
        try:
            w_radius = build_tube(action, m, tol.radius_hint, tol.cond_max).radius
        except InvalidAction as e:
            logger.debug("tube radius unavailable: {}".format(e))
    k0_radius = _annihilator_radius(system, m, tangent.orbit_basis, w_radius)
    data = MGSData(
        point=m,
        mu=mu,
        k_basis=k_basis,
        k0_basis=k0_basis,
        splitting=splitting,
        w_basis=w_basis,
        omega_w=omega_w,
        w_action=w_action,
        phi_w=phi_w,
        k0_radius=float(k0_radius),
        w_radius=float(w_radius),
        w_invariance_defect=defect,
    )
    k0, w, orbit = data.dims
    if k0 + w + orbit != system.dim:
        logger.warning(
            "dimension count {} + {} + {} != {}".format(k0, w, orbit, system.dim))
    return data


def iota_embed(splitting, rho):
    """Embed a coalgebra vector of the subalgebra into the full coalgebra."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (splitting.sub_basis.shape[1],):
        raise DimensionMismatch(
            "expected {} coordinates, got {}".format(splitting.sub_basis.shape[1], rho.shape))
    return splitting.sub_coords.T @ rho


def mgs_momentum(data, g, rho, w, splitting=None):
    """Normal-form momentum at chart coordinates ``(g, rho, w)``."""
    splitting = data.splitting if splitting is None else splitting
    rho = np.asarray(rho, dtype=float)
    w = np.asarray(w, dtype=float)
    if rho.shape != (data.k0_basis.shape[1],) or w.shape != (data.w_basis.shape[1],):
        raise DimensionMismatch("chart coordinates have the wrong shape")
    if np.linalg.norm(rho) >= data.k0_radius:
        raise OutOfChart("rho exceeds the radius {:.3e}".format(data.k0_radius))
    if np.linalg.norm(w) >= data.w_radius:
        raise OutOfChart("w exceeds the radius {:.3e}".format(data.w_radius))
    phi = np.array([component.evaluate(w) for component in data.phi_w])
    value = data.mu + data.k0_basis @ rho + iota_embed(splitting, phi)
    if not value.size:
        return value
    return g.group.coadjoint(g, value)


@dataclasses.dataclass(frozen=True)
class ReductionReport:
    class_u: Definiteness
    class_w: Definiteness
    spectrum_u: np.ndarray
    spectrum_w: np.ndarray

    @property
    def agree(self):
        return self.class_u == self.class_w


def reduction_check(system, m, xi=None, tol=DEFAULT_TOLERANCES):
    """
    Classify the augmented Hessian on the Euclidean complement and on the
    symplectic normal space; the two classes must agree.
    """
    m = np.asarray(m, dtype=float)
    if xi is None:
        xi = characterize(system, m, tol).xi
    u_basis = slice_complement(system, m, tol=tol).basis
    w_basis = mgs_data(system, m, tol).w_basis
    class_u, spectrum_u, _ = classify(restricted_hessian(system, m, xi, u_basis), tol.nondeg)
    class_w, spectrum_w, _ = classify(restricted_hessian(system, m, xi, w_basis), tol.nondeg)
    return ReductionReport(class_u, class_w, spectrum_u, spectrum_w)
