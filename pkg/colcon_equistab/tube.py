# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""
Slice model of a tube around an orbit.

Points near ``G.m`` are written ``g . (m + S v)`` with ``S`` an
orthonormal basis of the Euclidean complement of the orbit tangent at m.
A tangent vector at ``m + S v`` splits as ``eta_M + S u`` with ``eta`` in
the complement of the stabilizer algebra.
"""

import dataclasses

from colcon_core.logging import colcon_logger
from colcon_equistab.action import (
    apply_gauge,
    check_gauge,
    fundamental_field,
    GaugeTransformation,
    LinearGAction,
    orbit_tangent,
    require_relative_equilibrium,
    VectorFieldHandle,
)
from colcon_equistab.errors import (
    DegenerateSplit,
    IllConditioned,
    InvalidAction,
    RetractionFailed,
)
from colcon_equistab.lie import Splitting
from colcon_equistab.linalg import canonical_signs, orthogonal_complement
import numpy as np
import scipy.optimize

logger = colcon_logger.getChild(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class TubeModel:
    action: LinearGAction
    base_point: np.ndarray
    orbit_basis: np.ndarray
    stabilizer_basis: np.ndarray
    splitting: Splitting
    slice_basis: np.ndarray
    radius: float
    cond_max: float

    @property
    def slice_dim(self):
        return self.slice_basis.shape[1]

    @property
    def complement_basis(self):
        return self.splitting.comp_basis


def build_tube(
    action, m, radius_hint=0.5, cond_max=1e6, rtol=1e-10, seed=0,
    n_checks=32, max_halvings=40,
):
    """
    Build the slice model at m.

    The radius starts at ``radius_hint`` and is halved until the
    splitting frame stays below ``cond_max`` on sampled slice points.
    """
    if not action.orthogonal or not action.is_linear:
        raise InvalidAction("slice models need a linear orthogonal action")
    defect = action.verify_orthogonality(seed=seed)
    if defect > 1e-8:
        raise InvalidAction(
            "action flagged orthogonal is not (defect {:.3e})".format(defect))
    m = np.asarray(m, dtype=float)
    tangent = orbit_tangent(action, m, rtol)
    splitting = action.group.orthogonal_splitting(tangent.stabilizer_basis)
    slice_basis = canonical_signs(
        orthogonal_complement(tangent.orbit_basis, action.dim, rtol))
    tube = TubeModel(
        action=action,
        base_point=m.copy(),
        orbit_basis=tangent.orbit_basis,
        stabilizer_basis=tangent.stabilizer_basis,
        splitting=splitting,
        slice_basis=slice_basis,
        radius=float(radius_hint),
        cond_max=float(cond_max),
    )
    if slice_basis.shape[1] == 0:
        logger.info("orbit through m is open, the slice is a single point")
    base_cond = float(np.linalg.cond(frame(tube, np.zeros(tube.slice_dim))))
    if not base_cond <= cond_max:
        raise DegenerateSplit(
            "splitting frame is singular at m (cond {:.3e})".format(base_cond))
    if tube.slice_dim == 0:
        return tube

    rng = np.random.default_rng(seed)
    radius = float(radius_hint)
    for _ in range(max_halvings):
        samples = _ball_samples(rng, n_checks, tube.slice_dim, radius)
        worst = float(np.max(np.linalg.cond(frame(tube, samples))))
        if worst <= cond_max:
            logger.debug("tube radius {:.3e} (worst cond {:.3e})".format(radius, worst))
            return dataclasses.replace(tube, radius=radius)
        radius /= 2
    raise DegenerateSplit("no tube radius keeps the splitting well conditioned")


def _ball_samples(rng, n, dim, radius):
    directions = rng.standard_normal((n, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    lengths = radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / dim)
    return directions * lengths


def embed(tube, v):
    """Slice coordinates to ambient points ``m + S v``."""
    return tube.base_point + np.asarray(v, dtype=float) @ tube.slice_basis.T


def slice_coords(tube, p):
    return (np.asarray(p, dtype=float) - tube.base_point) @ tube.slice_basis


def frame(tube, v):
    """Stacked ``[A(m + S v) Q | S]`` splitting frame."""
    v = np.asarray(v, dtype=float)
    orbit = tube.action.orbit_matrix(embed(tube, v)) @ tube.complement_basis
    slice_part = np.broadcast_to(
        tube.slice_basis, orbit.shape[:-2] + tube.slice_basis.shape)
    return np.concatenate([orbit, slice_part], axis=-1)


@dataclasses.dataclass(frozen=True)
class SplitResult:
    eta: np.ndarray
    u: np.ndarray


def split_tangent(tube, v, w):
    """
    Split ``w`` at ``m + S v`` as ``eta_M + S u``.

    Works on stacked inputs. Raises IllConditioned when the frame
    condition number exceeds the tube's bound.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    matrix = frame(tube, v)
    condition = np.linalg.cond(matrix)
    if np.any(~(condition <= tube.cond_max)):
        raise IllConditioned(
            "splitting frame condition {:.3e} exceeds {:.1e}".format(
                float(np.max(condition)), tube.cond_max))
    coefficients = np.linalg.solve(matrix, w[..., None])[..., 0]
    residual = np.linalg.norm(
        (matrix @ coefficients[..., None])[..., 0] - w, axis=-1)
    scale = 1e-9 * (1.0 + np.linalg.norm(w, axis=-1))
    if np.any(residual > scale):
        raise IllConditioned("splitting solve is inaccurate")
    q = tube.complement_basis.shape[1]
    eta = coefficients[..., :q] @ tube.complement_basis.T
    return SplitResult(eta=eta, u=coefficients[..., q:])


def project_P(tube, X):
    """Slice-coordinate field ``v -> u`` of the split ``X(m + S v)``."""

    def projected(v):
        return split_tangent(tube, v, X(embed(tube, v))).u

    return VectorFieldHandle(
        projected, tube.slice_dim, tube.stabilizer_basis, name="P({})".format(X.name))


def tube_point(tube, g, v):
    return tube.action.act(g, embed(tube, v))


def extend_E(tube, Y, g, v):
    """Push a slice field out to the tube: ``L(g) S Y(v)``."""
    return tube.action.linear_part(g) @ (tube.slice_basis @ Y(v))


@dataclasses.dataclass(frozen=True, eq=False)
class TubeGauge:
    """Gauge ``(g, v) -> Ad_g eta(v)`` recovered from a split field."""

    tube: TubeModel
    field: VectorFieldHandle

    def on_slice(self, v):
        return split_tangent(self.tube, v, self.field(embed(self.tube, v))).eta

    def __call__(self, g, v):
        return self.tube.action.group.adjoint(g, self.on_slice(v))

    def as_gauge(self):
        """The same gauge as a map on ambient points near the orbit."""

        def ambient(p):
            p = np.asarray(p, dtype=float)
            if p.ndim == 1:
                g, v = retract(self.tube, p)
                return self(g, v)
            return np.stack([ambient(q) for q in p])

        return GaugeTransformation(ambient, self.tube.action)


def roundtrip_gauge(tube, X):
    return TubeGauge(tube, X)


def roundtrip_residual(tube, X, g, v):
    """``|X(p) - E(P(X))(g, v) - psi(g, v)_M(p)|`` at ``p = g.(m + S v)``."""
    p = tube_point(tube, g, v)
    rebuilt = extend_E(tube, project_P(tube, X), g, v) + fundamental_field(
        tube.action, roundtrip_gauge(tube, X)(g, v), p)
    return float(np.linalg.norm(X(p) - rebuilt))


def retract(tube, p, n_starts=16, seed=0, tol=1e-9):
    """
    Write an ambient point as ``g . (m + S v)``.

    The group element is searched as ``exp(Q c)`` over the stabilizer
    complement from several starts; the solution with the shortest
    slice vector wins.
    """
    action = tube.action
    group = action.group
    p = np.asarray(p, dtype=float)
    complement = tube.complement_basis
    normal = np.eye(action.dim) - tube.slice_basis @ tube.slice_basis.T

    def pull_back(c):
        linear, shift = action.represent(group.exp(complement @ c))
        return np.linalg.solve(linear, p - shift)

    def residual(c):
        return normal @ (pull_back(c) - tube.base_point)

    q = complement.shape[1]
    if q == 0:
        if np.linalg.norm(residual(np.zeros(0))) > tol * (1.0 + np.linalg.norm(p)):
            raise RetractionFailed("point is off the slice of a discrete orbit")
        return group.identity(), slice_coords(tube, p)

    rng = np.random.default_rng(seed)
    starts = [np.zeros(q)] + [
        np.pi * rng.uniform(-1.0, 1.0, q) for _ in range(n_starts - 1)]
    best, best_length = None, np.inf
    for start in starts:
        solution = scipy.optimize.least_squares(
            residual, start, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.linalg.norm(solution.fun) > tol * (1.0 + np.linalg.norm(p)):
            continue
        length = float(np.linalg.norm(slice_coords(tube, pull_back(solution.x))))
        if length < best_length:
            best, best_length = solution.x, length
    if best is None:
        raise RetractionFailed("no group element maps the point onto the slice")
    if best_length > tube.radius:
        logger.debug("retracted point lies outside the tube radius")
    return group.exp(complement @ best), slice_coords(tube, pull_back(best))


def slice_representation(tube):
    """Linearized action of the stabilizer on the slice coordinates."""
    group = tube.action.group
    stabilizer = tube.stabilizer_basis
    k = stabilizer.shape[1]
    subgroup = group.subgroup(stabilizer, name="{}_m".format(group.name))
    matrices = np.einsum("ik,ijl->kjl", stabilizer, tube.action.algebra_rep)
    rep = np.einsum("ja,kjl,lb->kab", tube.slice_basis, matrices, tube.slice_basis)
    return LinearGAction(
        subgroup, rep.reshape(k, tube.slice_dim, tube.slice_dim), name="slice")


def slice_gauges(tube):
    """
    Gauges ``v -> (1 + |v|^2) kappa_i`` on the slice, one per stabilizer
    direction, each equivariant under the one-parameter subgroup of its
    direction acting through the slice representation.
    """
    if tube.stabilizer_basis.shape[1] == 0 or tube.slice_dim == 0:
        return ()
    representation = slice_representation(tube)
    gauges = []
    for direction in np.eye(representation.group.dim):

        def weighted(v, direction=direction):
            weight = 1.0 + np.sum(v * v, axis=-1)
            return np.multiply.outer(weight, direction)

        gauges.append(GaugeTransformation(weighted, representation, direction[:, None]))
    return tuple(gauges)


@dataclasses.dataclass(frozen=True)
class TransportReport:
    projected_residual: float
    gauge_residuals: tuple
    gauge_violation: float
    passed: bool


def transport_rel_eq_checks(tube, X, gauges=None, tol=1e-9, n_gauge_samples=16):
    """
    Check that a relative equilibrium at m projects to a zero of P(X).

    The check is repeated for ``P(X)`` gauged by each slice gauge valued
    in the stabilizer algebra; the linear stabilizer action fixes the
    slice origin, so every gauged field must vanish there too.
    """
    require_relative_equilibrium(tube.action, X, tube.base_point, tol)
    origin = np.zeros(tube.slice_dim)
    projected = project_P(tube, X)
    residual = float(np.linalg.norm(projected(origin)))
    gauges = slice_gauges(tube) if gauges is None else tuple(gauges)
    gauge_residuals = []
    gauge_violation = 0.0
    for psi in gauges:
        gauge_residuals.append(
            float(np.linalg.norm(apply_gauge(projected, psi)(origin))))
        gauge_violation = max(gauge_violation, check_gauge(
            psi, n_gauge_samples, center=origin, scale=tube.radius / 2).max_violation)
    scale = tol * (1.0 + float(np.linalg.norm(X(tube.base_point))))
    passed = (
        residual <= scale
        and all(r <= scale for r in gauge_residuals)
        and gauge_violation <= tol
    )
    return TransportReport(residual, tuple(gauge_residuals), float(gauge_violation), passed)


def with_splitting(tube, comp_basis):
    """Replace the stabilizer complement used by the splitting."""
    splitting = Splitting.from_bases(tube.stabilizer_basis, comp_basis)
    return dataclasses.replace(tube, splitting=splitting)


@dataclasses.dataclass(frozen=True)
class LinearizationReport:
    jacobian: np.ndarray
    eigenvalues: np.ndarray


def linearized_spectrum(tube, X, step=1e-6):
    """Central-difference Jacobian of P(X) at the slice origin."""
    projected = project_P(tube, X)
    n = tube.slice_dim
    jacobian = np.zeros((n, n))
    for j in range(n):
        offset = np.zeros(n)
        offset[j] = step
        jacobian[:, j] = (projected(offset) - projected(-offset)) / (2 * step)
    eigenvalues = np.linalg.eigvals(jacobian) if n else np.zeros(0, dtype=complex)
    order = np.lexsort((eigenvalues.imag, eigenvalues.real))
    return LinearizationReport(jacobian, eigenvalues[order])
