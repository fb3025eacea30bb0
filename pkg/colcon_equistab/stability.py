# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""
Energy-momentum test for relative equilibria.

A relative equilibrium ``m`` with velocity ``xi`` is a critical point of
the augmented Hamiltonian ``h - <Phi, xi>``. Its Hessian restricted to a
complement ``W`` of the momentum-isotropy orbit inside ``ker dPhi(m)``
decides stability modulo the isotropy group of the momentum.
"""

import dataclasses
import enum
import itertools
from typing import Optional

from colcon_core.logging import colcon_logger
from colcon_equistab.action import orbit_tangent, solve_velocity
from colcon_equistab.config import DEFAULT_TOLERANCES
from colcon_equistab.errors import (
    HessianIllDefined,
    NewtonDiverged,
    NotPositiveDefinite,
    NotSymmetric,
    PreconditionFailed,
    RankAmbiguous,
)
from colcon_equistab.linalg import (
    intersect_subspaces,
    orthogonal_complement,
    range_basis,
    rank_gap,
    svd_rank,
)
from colcon_equistab.symplectic import augmented_hamiltonian, hamiltonian_field
import numpy as np
import scipy.linalg
import scipy.optimize

logger = colcon_logger.getChild(__name__)


class Definiteness(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    DEGENERATE = "Degenerate"
    INDEFINITE = "Indefinite"

    @property
    def is_definite(self):
        return self in (Definiteness.POSITIVE_DEFINITE, Definiteness.NEGATIVE_DEFINITE)


class Verdict(enum.Enum):
    STABLE_MOD_G_MU = "StableModGmu"
    INCONCLUSIVE = "Inconclusive"


@dataclasses.dataclass(frozen=True)
class Characterization:
    xi: np.ndarray
    mu: np.ndarray
    g_mu_basis: np.ndarray
    velocity_kernel: np.ndarray
    residual_field: float
    residual_critical: float
    field_tolerance: float
    critical_tolerance: float

    @property
    def is_relative_equilibrium(self):
        return self.residual_field <= self.field_tolerance

    @property
    def is_critical(self):
        return self.residual_critical <= self.critical_tolerance

    @property
    def consistent(self):
        return self.is_relative_equilibrium == self.is_critical


def augmented_gradient(system, xi, m):
    m = np.asarray(m, dtype=float)
    return system.h.gradient(m) - system.momentum_jacobian(m).T @ xi


def characterize(system, m, tol=DEFAULT_TOLERANCES):
    """
    Decide whether m is a relative equilibrium and find its velocity.

    The velocity is restricted to the isotropy algebra of ``Phi(m)``.
    Both the field residual and the criticality residual of the
    augmented Hamiltonian are reported.
    """
    m = np.asarray(m, dtype=float)
    group = system.group
    mu = system.momentum_value(m)
    g_mu = group.moment_isotropy_algebra(mu, atol=tol.algebra) if group.dim else np.zeros((0, 0))
    field = hamiltonian_field(system, verify=False)
    solution = solve_velocity(
        system.action, field, m, tol=tol.rel_eq, subspace=g_mu, rtol=tol.rank_rtol)
    residual_critical = float(np.linalg.norm(augmented_gradient(system, solution.xi, m)))
    # |dh^xi| = |O^T (X_h - xi_M)| so the field tolerance transfers through |O|
    omega_norm = float(np.linalg.norm(system.omega.omega, 2))
    return Characterization(
        xi=solution.xi,
        mu=mu,
        g_mu_basis=g_mu,
        velocity_kernel=solution.kernel,
        residual_field=solution.residual,
        residual_critical=residual_critical,
        field_tolerance=solution.tolerance,
        critical_tolerance=omega_norm * solution.tolerance,
    )


@dataclasses.dataclass(frozen=True)
class ComplementBasis:
    kernel_basis: np.ndarray
    orbit_mu_basis: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]


def slice_complement(system, m, mu=None, g_mu=None, tol=DEFAULT_TOLERANCES):
    """
    Euclidean complement W of ``T_m(G_mu . m)`` inside ``ker dPhi(m)``.

    Raises RankAmbiguous when a singular value of ``dPhi(m)`` sits too
    close to the rank cutoff to be classified.
    """
    m = np.asarray(m, dtype=float)
    group = system.group
    if mu is None:
        mu = system.momentum_value(m)
    if g_mu is None:
        g_mu = group.moment_isotropy_algebra(mu, atol=tol.algebra) if group.dim else np.zeros((0, 0))
    jacobian = system.momentum_jacobian(m)
    n = system.dim
    if jacobian.shape[0]:
        _, s, vh = scipy.linalg.svd(jacobian, full_matrices=True)
        near = rank_gap(s, tol.rank_rtol, tol.rank_atol, tol.rank_ambiguity)
        if near.size:
            raise RankAmbiguous(
                "singular values {} of dPhi(m) are near the rank cutoff".format(near.tolist()),
                gap=float(near.min()))
        kernel = vh[svd_rank(s, tol.rank_rtol, tol.rank_atol):].T.copy()
    else:
        s = np.zeros(0)
        kernel = np.eye(n)
    orbit_mu = range_basis(system.action.orbit_matrix(m) @ g_mu, tol.rank_rtol)
    inside = range_basis(kernel.T @ orbit_mu, tol.rank_rtol)
    w_coords = orthogonal_complement(inside, kernel.shape[1], tol.rank_rtol)
    return ComplementBasis(
        kernel_basis=kernel,
        orbit_mu_basis=kernel @ inside,
        basis=kernel @ w_coords,
        singular_values=s,
    )


def complement_invariance_defect(system, m, basis):
    """Largest ``|(I - P_W) R(kappa) W|`` over the stabilizer algebra of m."""
    action = system.action
    stabilizer = orbit_tangent(action, m).stabilizer_basis
    basis = np.asarray(basis, dtype=float)
    if basis.shape[1] == 0 or stabilizer.shape[1] == 0:
        return 0.0
    projector = basis @ np.linalg.pinv(basis)
    worst = 0.0
    for kappa in stabilizer.T:
        moved = np.einsum("i,ijk->jk", kappa, action.algebra_rep) @ basis
        worst = max(worst, float(np.max(np.abs(moved - projector @ moved))))
    return worst


def restricted_hessian(system, m, xi, basis, critical_tol=None):
    """
    ``B^T Hess(h - <Phi, xi>)(m) B``.

    Raises HessianIllDefined unless m is a critical point of the
    augmented Hamiltonian.
    """
    m = np.asarray(m, dtype=float)
    xi = np.asarray(xi, dtype=float)
    augmented = augmented_hamiltonian(system, xi)
    gradient = augmented.gradient(m)
    if critical_tol is None:
        critical_tol = DEFAULT_TOLERANCES.critical * (1.0 + float(np.linalg.norm(system.h.gradient(m))))
    if np.linalg.norm(gradient) > critical_tol:
        raise HessianIllDefined(
            "m is not critical for h - <Phi, xi> (|grad| = {:.3e})".format(
                float(np.linalg.norm(gradient))))
    basis = np.asarray(basis, dtype=float).reshape(system.dim, -1)
    restricted = basis.T @ augmented.hessian(m) @ basis
    return 0.5 * (restricted + restricted.T)


def classify(matrix, nondeg_tol=None):
    """Return ``(Definiteness, eigenvalues, tolerance)`` of a symmetric matrix."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return Definiteness.DEGENERATE, np.zeros(0), 0.0 if nondeg_tol is None else nondeg_tol
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotSymmetric("matrix is not square")
    scale = float(np.max(np.abs(matrix)))
    if np.max(np.abs(matrix - matrix.T)) > 1e-12 * max(1.0, scale):
        raise NotSymmetric("matrix is not symmetric")
    eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    if nondeg_tol is None:
        nondeg_tol = 1e-8 * max(1.0, float(np.max(np.abs(eigenvalues))))
    if eigenvalues.min() > nondeg_tol:
        kind = Definiteness.POSITIVE_DEFINITE
    elif eigenvalues.max() < -nondeg_tol:
        kind = Definiteness.NEGATIVE_DEFINITE
    elif np.min(np.abs(eigenvalues)) <= nondeg_tol:
        kind = Definiteness.DEGENERATE
    else:
        kind = Definiteness.INDEFINITE
    return kind, eigenvalues, nondeg_tol


def definiteness(matrix, nondeg_tol=None):
    return classify(matrix, nondeg_tol)[0]


def _score(eigenvalues):
    if eigenvalues.size == 0:
        return -np.inf
    return float(max(eigenvalues.min(), -eigenvalues.max()))


@dataclasses.dataclass(frozen=True)
class StabilityReport:
    point: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    family_basis: np.ndarray
    residual_field: float
    residual_critical: float
    complement: ComplementBasis
    complement_invariance: float
    hessian: np.ndarray
    eigenvalues: np.ndarray
    definiteness: Definiteness
    nondeg_tol: float
    verdict: Verdict
    search_trace: tuple

    def to_dict(self):
        return {
            "point": self.point.tolist(),
            "mu": self.mu.tolist(),
            "xi": self.xi.tolist(),
            "family_dim": int(self.family_basis.shape[1]),
            "residual_field": self.residual_field,
            "residual_critical": self.residual_critical,
            "kernel_dim": int(self.complement.kernel_basis.shape[1]),
            "orbit_mu_dim": int(self.complement.orbit_mu_basis.shape[1]),
            "w_dim": int(self.complement.dim),
            "w_basis": self.complement.basis.T.tolist(),
            "w_invariance_defect": self.complement_invariance,
            "hessian": self.hessian.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "definiteness": self.definiteness.value,
            "nondeg_tol": self.nondeg_tol,
            "verdict": self.verdict.value,
            "search_trace": [dict(entry) for entry in self.search_trace],
        }


def mro_verdict(
    system, m, search="grid", tol=DEFAULT_TOLERANCES, grid_radius=2.0,
    grid_points=9, polish=True,
):
    """
    Sufficient test for stability modulo ``G_mu``.

    Searches the family ``xi + kappa`` over the stabilizer directions
    inside the isotropy algebra of the momentum, for one whose restricted
    Hessian is definite and nondegenerate. Returns the best candidate.
    """
    if search not in ("grid", "nelder-mead"):
        raise ValueError("search must be 'grid' or 'nelder-mead'")
    m = np.asarray(m, dtype=float)
    group = system.group
    found = characterize(system, m, tol)
    if not found.is_relative_equilibrium:
        raise PreconditionFailed(
            "m is not a relative equilibrium (residual {:.3e})".format(found.residual_field))
    if group.dim:
        fixed, residual = group.is_coadjoint_fixed(found.mu, tol.algebra)
        if not fixed:
            raise PreconditionFailed(
                "momentum is not fixed by the coadjoint action (residual {:.3e})".format(residual))
    complement = slice_complement(system, m, found.mu, found.g_mu_basis, tol)
    stabilizer = orbit_tangent(system.action, m, tol.rank_rtol).stabilizer_basis
    if group.dim:
        family = intersect_subspaces(stabilizer, found.g_mu_basis, tol.rank_rtol)
    else:
        family = np.zeros((0, 0))
    critical_tol = max(found.critical_tolerance, tol.critical * (
        1.0 + float(np.linalg.norm(system.h.gradient(m)))))

    cache = {}

    def evaluate(t):
        key = tuple(np.round(np.asarray(t, dtype=float), 15))
        if key not in cache:
            xi = found.xi + family @ np.asarray(t, dtype=float)
            hessian = restricted_hessian(system, m, xi, complement.basis, critical_tol)
            kind, eigenvalues, nondeg = classify(hessian, tol.nondeg)
            cache[key] = (xi, hessian, kind, eigenvalues, nondeg)
        return cache[key]

    k = family.shape[1]
    trace = []
    candidates = [np.zeros(k)]
    if k and search == "grid":
        axis = np.linspace(-grid_radius, grid_radius, grid_points)
        candidates = [np.array(t) for t in itertools.product(axis, repeat=k)]
    best_t, best_score = None, -np.inf
    for t in candidates:
        _, _, kind, eigenvalues, _ = evaluate(t)
        score = _score(eigenvalues)
        trace.append({"t": t.tolist(), "score": score if np.isfinite(score) else None,
                      "class": kind.value})
        if best_t is None or score > best_score:
            best_t, best_score = t, score
    if k and polish and complement.dim:
        result = scipy.optimize.minimize(
            lambda t: -_score(evaluate(t)[3]),
            best_t,
            method="Nelder-Mead",
            bounds=[(-grid_radius, grid_radius)] * k,
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 200 * k},
        )
        if -result.fun > best_score:
            best_t, best_score = np.asarray(result.x, dtype=float), float(-result.fun)
            trace.append({"t": best_t.tolist(), "score": best_score,
                          "class": evaluate(best_t)[2].value})
    xi, hessian, kind, eigenvalues, nondeg = evaluate(best_t)
    verdict = Verdict.STABLE_MOD_G_MU if kind.is_definite else Verdict.INCONCLUSIVE
    logger.info(
        "verdict {} (restricted Hessian {}, dim W = {})".format(
            verdict.value, kind.value, complement.dim))
    return StabilityReport(
        point=m,
        mu=found.mu,
        xi=xi,
        family_basis=family,
        residual_field=found.residual_field,
        residual_critical=found.residual_critical,
        complement=complement,
        complement_invariance=complement_invariance_defect(system, m, complement.basis),
        hessian=hessian,
        eigenvalues=eigenvalues,
        definiteness=kind,
        nondeg_tol=nondeg,
        verdict=verdict,
        search_trace=tuple(trace),
    )


@dataclasses.dataclass(frozen=True)
class LemmaReport:
    class_w: Definiteness
    class_w_tilde: Definiteness
    spectrum_w: np.ndarray
    spectrum_w_tilde: np.ndarray

    @property
    def agree(self):
        return self.class_w == self.class_w_tilde


def restricted_form_lemma_check(form, u_basis, w_basis, w_tilde_basis, tol=1e-9, nondeg_tol=None):
    """
    Compare a symmetric form on two complements of a subspace in its kernel.

    ``form`` must vanish on ``u_basis`` and both complements must
    complete it to the whole space.
    """
    form = np.asarray(form, dtype=float)
    n = form.shape[0]
    if np.max(np.abs(form - form.T), initial=0.0) > tol * max(1.0, np.max(np.abs(form), initial=0.0)):
        raise NotSymmetric("form is not symmetric")
    u_basis = np.asarray(u_basis, dtype=float).reshape(n, -1)
    for name, basis in (("W", w_basis), ("W~", w_tilde_basis)):
        frame = np.hstack([u_basis, np.asarray(basis, dtype=float).reshape(n, -1)])
        if frame.shape[1] != n or svd_rank(np.linalg.svd(frame, compute_uv=False)) != n:
            raise PreconditionFailed("{} is not a complement of U".format(name))
    if np.max(np.abs(form @ u_basis), initial=0.0) > tol * max(1.0, np.linalg.norm(form)):
        raise PreconditionFailed("U is not in the kernel of the form")
    w_basis = np.asarray(w_basis, dtype=float).reshape(n, -1)
    w_tilde_basis = np.asarray(w_tilde_basis, dtype=float).reshape(n, -1)
    class_w, spectrum_w, _ = classify(w_basis.T @ form @ w_basis, nondeg_tol)
    class_t, spectrum_t, _ = classify(w_tilde_basis.T @ form @ w_tilde_basis, nondeg_tol)
    return LemmaReport(class_w, class_t, spectrum_w, spectrum_t)


@dataclasses.dataclass(frozen=True)
class ComplementIndependenceReport:
    reference: Definiteness
    classes: tuple

    @property
    def all_agree(self):
        return all(kind == self.reference for kind in self.classes)


def complement_independence_check(system, m, xi, n_trials=50, seed=0, scale=1.0, tol=DEFAULT_TOLERANCES):
    """
    Classify the restricted Hessian on randomly sheared complements.

    Each trial uses ``W + O A`` for a random matrix ``A``, with ``O`` the
    momentum-isotropy orbit directions, so it stays a complement.
    """
    m = np.asarray(m, dtype=float)
    complement = slice_complement(system, m, tol=tol)
    basis = complement.basis
    orbit = complement.orbit_mu_basis
    reference = classify(restricted_hessian(system, m, xi, basis), tol.nondeg)[0]
    rng = np.random.default_rng(seed)
    classes = []
    for _ in range(n_trials):
        shear = scale * rng.standard_normal((orbit.shape[1], basis.shape[1]))
        sheared = basis + orbit @ shear
        classes.append(classify(restricted_hessian(system, m, xi, sheared), tol.nondeg)[0])
    return ComplementIndependenceReport(reference, tuple(classes))


@dataclasses.dataclass(frozen=True, eq=False)
class MorseBranch:
    """
    Critical branch ``w = sigma(rho)`` of ``f(rho, w)`` near the origin.

    Variables ``x1..x{n_rho}`` are the parameters and the rest are ``w``.
    """

    f: object
    n_rho: int
    n_w: int
    rho_grid: np.ndarray
    sigma_values: np.ndarray
    newton_tol: float
    max_iter: int

    def sigma(self, rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if self.rho_grid.size:
            nearest = int(np.argmin(np.linalg.norm(self.rho_grid - rho, axis=1)))
            start = self.sigma_values[nearest]
        else:
            start = np.zeros(self.n_w)
        return _newton_w(self.f, self.n_rho, rho, start, self.newton_tol, self.max_iter)

    def expansion_residual(self, y_scale=0.1, n_directions=8, seed=0):
        """
        Largest ``|f(rho, s + y) - f(rho, s) - y^T H y / 2|`` on the grid.

        ``s = sigma(rho)``, ``H`` the w-Hessian there and ``|y| = y_scale``.
        """
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((n_directions, self.n_w))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        worst = 0.0
        for rho, sigma in zip(self.rho_grid, self.sigma_values):
            base = np.concatenate([rho, sigma])
            hessian = self.f.hessian(base)[self.n_rho:, self.n_rho:]
            value = self.f.evaluate(base)
            for direction in directions:
                y = y_scale * direction
                moved = self.f.evaluate(np.concatenate([rho, sigma + y]))
                worst = max(worst, abs(moved - value - 0.5 * y @ hessian @ y))
        return float(worst)


def _newton_w(f, n_rho, rho, start, tol, max_iter):
    w = np.array(start, dtype=float)
    for _ in range(max_iter):
        x = np.concatenate([rho, w])
        gradient = f.gradient(x)[n_rho:]
        hessian = f.hessian(x)[n_rho:, n_rho:]
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            raise NewtonDiverged("w-Hessian became singular at rho = {}".format(rho.tolist()))
        w = w - step
        if not np.all(np.isfinite(w)) or np.linalg.norm(w) > 1e6:
            raise NewtonDiverged("Newton iterates left every bound at rho = {}".format(rho.tolist()))
        if np.linalg.norm(step) <= tol * (1.0 + np.linalg.norm(w)):
            return w
    raise NewtonDiverged("Newton did not converge at rho = {}".format(rho.tolist()))


def morse_branch(
    f, n_rho, n_w, rho_max=0.2, n_grid=9, newton_tol=1e-13, max_iter=50,
    value_tol: Optional[float] = 1e-10,
):
    """
    Continue the critical point ``w = 0`` of ``f(0, .)`` in the parameters.

    Requires ``f(0, 0) = 0``, ``d_w f(0, 0) = 0`` and a positive definite
    w-Hessian at the origin.
    """
    if f.n_vars != n_rho + n_w:
        raise PreconditionFailed("f must have n_rho + n_w variables")
    origin = np.zeros(n_rho + n_w)
    if abs(f.evaluate(origin)) > value_tol:
        raise PreconditionFailed("f(0, 0) must vanish")
    if np.linalg.norm(f.gradient(origin)[n_rho:]) > value_tol:
        raise PreconditionFailed("origin is not critical in w")
    kind, eigenvalues, _ = classify(f.hessian(origin)[n_rho:, n_rho:])
    if kind is not Definiteness.POSITIVE_DEFINITE:
        raise NotPositiveDefinite(
            "w-Hessian at the origin has eigenvalues {}".format(eigenvalues.tolist()))
    axis = np.linspace(-rho_max, rho_max, n_grid)
    grid = np.array(list(itertools.product(axis, repeat=n_rho))).reshape(-1, n_rho)
    order = np.argsort(np.linalg.norm(grid, axis=1), kind="stable")
    solved_rho = []
    solved_sigma = []
    for index in order:
        rho = grid[index]
        if solved_rho:
            nearest = int(np.argmin(np.linalg.norm(np.array(solved_rho) - rho, axis=1)))
            start = solved_sigma[nearest]
        else:
            start = np.zeros(n_w)
        solved_rho.append(rho)
        solved_sigma.append(_newton_w(f, n_rho, rho, start, newton_tol, max_iter))
    return MorseBranch(
        f=f,
        n_rho=n_rho,
        n_w=n_w,
        rho_grid=np.array(solved_rho).reshape(-1, n_rho),
        sigma_values=np.array(solved_sigma).reshape(-1, n_w),
        newton_tol=newton_tol,
        max_iter=max_iter,
    )
