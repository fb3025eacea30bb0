# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Fixed-step integration, conservation checks and orbit-space probes."""

from concurrent.futures import ThreadPoolExecutor
import csv
import dataclasses
from typing import Dict, Optional, Tuple

from colcon_core.logging import colcon_logger
from colcon_equistab.action import augment_field, check_gauge
from colcon_equistab.config import get_thread_count
from colcon_equistab.errors import (
    DomainError,
    InvalidConfig,
    NonFiniteState,
    PreconditionFailed,
)
from colcon_equistab.expr import check_invariance
from colcon_equistab.symplectic import hamiltonian_field
from colcon_equistab.tube import embed, project_P, slice_coords
import numpy as np

logger = colcon_logger.getChild(__name__)

# samples per probe chunk; fixed so results do not depend on thread count
PROBE_CHUNK = 16


@dataclasses.dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-3
    horizon: float = 10.0
    blowup_guard: float = 1e8
    method: str = "rk4"
    log_every: int = 1

    def __post_init__(self):  # noqa: D105
        if not self.step > 0 or not self.horizon > 0:
            raise InvalidConfig("step and horizon must be positive")
        if self.step > self.horizon:
            raise InvalidConfig("step must not exceed the horizon")
        if self.method != "rk4":
            raise InvalidConfig("unknown integration method '{}'".format(self.method))
        if self.log_every < 1:
            raise InvalidConfig("log_every must be at least 1")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.step))


@dataclasses.dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    observables: Dict[str, np.ndarray]
    halted: bool = False
    halt_reason: Optional[str] = None


def rk4_step(field, x, step):
    k1 = field(x)
    k2 = field(x + 0.5 * step * k1)
    k3 = field(x + 0.5 * step * k2)
    k4 = field(x + step * k3)
    return x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field, x0, config, observables=None):
    """
    Integrate ``x' = field(x)`` with classical Runge-Kutta.

    Integration halts early, flagging the trajectory, when the state
    norm exceeds ``blowup_guard``. Non-finite states raise.
    """
    observables = observables or {}
    x = np.asarray(x0, dtype=float).copy()
    times = [0.0]
    states = [x.copy()]
    logs = {name: [float(fn(x))] for name, fn in observables.items()}
    halted, reason = False, None
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, config.n_steps + 1):
            x = rk4_step(field, x, config.step)
            if not np.all(np.isfinite(x)):
                raise NonFiniteState("state became non-finite at t = {:.6g}".format(i * config.step))
            blown = np.linalg.norm(x) > config.blowup_guard
            if i % config.log_every == 0 or blown or i == config.n_steps:
                times.append(i * config.step)
                states.append(x.copy())
                for name, fn in observables.items():
                    logs[name].append(float(fn(x)))
            if blown:
                halted, reason = True, "state norm exceeded {:.1e}".format(config.blowup_guard)
                logger.warning("integration halted at t = {:.6g}: {}".format(i * config.step, reason))
                break
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        observables={name: np.array(values) for name, values in logs.items()},
        halted=halted,
        halt_reason=reason,
    )


@dataclasses.dataclass(frozen=True)
class ConservationReport:
    variant: str
    drift_h: float
    drift_phi2: float
    trajectory: Trajectory

    def to_dict(self):
        return {
            "variant": self.variant,
            "drift_h": self.drift_h,
            "drift_phi2": self.drift_phi2,
            "n_samples": int(self.trajectory.times.size),
            "halted": self.trajectory.halted,
        }


def _drift(values):
    return float(np.max(np.abs(values - values[0]))) if values.size else 0.0


def require_stabilizer_direction(tube, eta):
    """Raise PreconditionFailed unless eta lies in the stabilizer algebra of the tube."""
    eta = np.asarray(eta, dtype=float)
    stabilizer = tube.stabilizer_basis
    outside = eta - stabilizer @ (stabilizer.T @ eta)
    if np.linalg.norm(outside) > 1e-9 * (1 + np.linalg.norm(eta)):
        raise PreconditionFailed("eta must lie in the stabilizer algebra of the base point")


def conservation_report(system, variant, m0, config, eta=None, tube=None):
    """
    Integrate one of the Hamiltonian flows and log h and ``|Phi|^2``.

    ``hamiltonian`` integrates ``X_h``, ``augmented`` integrates
    ``X_h - eta_M`` and ``vertical_augmented`` integrates the slice
    projection of the latter, with eta in the stabilizer algebra.
    """
    field = hamiltonian_field(system, verify=False)
    eta = np.zeros(system.group.dim) if eta is None else np.asarray(eta, dtype=float)
    observables = {"h": system.energy, "phi2": system.momentum_dual_norm2}
    if variant == "hamiltonian":
        trajectory = integrate(field, m0, config, observables)
    elif variant == "augmented":
        trajectory = integrate(augment_field(system.action, field, eta), m0, config, observables)
    elif variant == "vertical_augmented":
        if tube is None:
            raise PreconditionFailed("vertical_augmented needs a tube")
        require_stabilizer_direction(tube, eta)
        m0 = np.asarray(m0, dtype=float)
        v0 = slice_coords(tube, m0)
        if np.linalg.norm(embed(tube, v0) - m0) > 1e-9 * (1 + np.linalg.norm(m0)):
            raise PreconditionFailed("initial state is not on the slice")
        projected = project_P(tube, augment_field(system.action, field, eta))
        trajectory = integrate(projected, v0, config, {
            "h": lambda v: system.energy(embed(tube, v)),
            "phi2": lambda v: system.momentum_dual_norm2(embed(tube, v)),
        })
    else:
        raise InvalidConfig("unknown conservation variant '{}'".format(variant))
    return ConservationReport(
        variant=variant,
        drift_h=_drift(trajectory.observables["h"]),
        drift_phi2=_drift(trajectory.observables["phi2"]),
        trajectory=trajectory,
    )


@dataclasses.dataclass(frozen=True, eq=False)
class InvariantCoordinates:
    """Polynomial invariants used as coordinates on the orbit space."""

    generators: Tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.array([g.evaluate(x) for g in self.generators])
        return np.stack([g.evaluate_batch(x) for g in self.generators], axis=-1)

    @property
    def dim(self):
        return len(self.generators)

    def verify(self, action, n_samples=64, seed=0, center=None, scale=1.0):
        """Largest invariance violation over all generators."""
        return max(
            (check_invariance(g, action, n_samples, seed, center, scale).max_violation
             for g in self.generators),
            default=0.0,
        )

    def separation_report(self, action, n_pairs=64, n_group=64, seed=0, center=None, scale=1.0, sep_min=1e-3):
        """
        Sample pairs of points whose orbits are at least 0.1 apart and
        report how many have invariant distance below ``sep_min``.
        """
        rng = np.random.default_rng(seed)
        center = np.zeros(action.dim) if center is None else np.asarray(center, dtype=float)
        elements = [action.group.random_element(rng, scale=np.pi) for _ in range(n_group)]
        tested, collapsed, smallest = 0, 0, np.inf
        for _ in range(n_pairs):
            p = center + scale * rng.standard_normal(action.dim)
            q = center + scale * rng.standard_normal(action.dim)
            distance = min(np.linalg.norm(p - action.act(g, q)) for g in elements)
            if distance < 0.1:
                continue
            tested += 1
            gap = orbit_distance(self, p, q)
            smallest = min(smallest, gap)
            if gap < sep_min:
                collapsed += 1
        return SeparationReport(tested, collapsed, float(smallest))


@dataclasses.dataclass(frozen=True)
class SeparationReport:
    n_pairs: int
    n_collapsed: int
    min_invariant_distance: float


def orbit_distance(invariants, p, q):
    """Euclidean distance between invariant-coordinate images."""
    return float(np.linalg.norm(invariants(p) - invariants(q)))


@dataclasses.dataclass(frozen=True)
class ProbeLevel:
    delta: float
    n_samples: int
    escaping_chunks: int
    max_distance: float

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class ProbeResult:
    verdict: str
    eps: float
    horizon: float
    step: float
    levels: Tuple[ProbeLevel, ...]
    witness: Optional[dict] = None
    vacuous: bool = False

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "eps": self.eps,
            "horizon": self.horizon,
            "step": self.step,
            "vacuous": self.vacuous,
            "levels": [level.to_dict() for level in self.levels],
            "witness": self.witness,
        }


def _sample_near(invariants, m, delta, count, rng):
    """Points with invariant distance at most ``delta`` from m."""
    n = m.size
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = delta * rng.uniform(0.0, 1.0, size=count)
    base = invariants(m)
    points = m + radii[:, None] * directions
    for _ in range(60):
        distances = np.linalg.norm(invariants(points) - base, axis=1)
        too_far = distances > delta
        if not np.any(too_far):
            break
        radii[too_far] *= 0.5
        points = m + radii[:, None] * directions
    return points


def _probe_chunk(field, invariants, base, points, eps, n_steps, step):
    """Return ``(step index, local index, distance, state)`` of the first escape."""
    x = points.copy()
    worst = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n_steps + 1):
            try:
                x = rk4_step(field, x, step)
                distances = np.linalg.norm(invariants(x) - base, axis=1)
            except DomainError:
                return (i, 0, np.inf, x[0].copy()), np.inf
            distances = np.where(np.isfinite(distances), distances, np.inf)
            worst = max(worst, float(np.max(distances)))
            escaped = np.flatnonzero(distances > eps)
            if escaped.size:
                j = int(escaped[0])
                return (i, j, float(distances[j]), x[j].copy()), worst
    return None, worst


def stability_probe(
    field, m, invariants, eps, deltas, n_samples=64, horizon=1000.0, step=0.01,
    seed=0, threads=None,
):
    """
    Look for trajectories that leave an ``eps`` neighbourhood in orbit space.

    For each ``delta`` in increasing order, ``n_samples`` initial states
    within invariant distance ``delta`` are integrated to ``horizon``.
    The earliest escape over all samples is reported as the witness.
    Escape on the smallest delta makes every later level moot.
    """
    if not eps > 0:
        raise InvalidConfig("eps must be positive")
    if not all(d > 0 for d in deltas):
        raise InvalidConfig("every delta must be positive")
    if n_samples < 0:
        raise InvalidConfig("n_samples must not be negative")
    m = np.asarray(m, dtype=float)
    config = IntegratorConfig(step=step, horizon=horizon)
    threads = get_thread_count() if threads is None else threads
    base = invariants(m)
    rng = np.random.default_rng(seed)
    levels = []
    witness = None
    vacuous = n_samples == 0 or all(d >= eps for d in deltas)
    if vacuous:
        logger.warning("no sample can tell an escape apart, the probe is vacuous")
    for delta in sorted(deltas):
        points = np.zeros((0, m.size))
        if n_samples:
            points = _sample_near(invariants, m, delta, n_samples, rng)
        chunks = [points[i:i + PROBE_CHUNK] for i in range(0, n_samples, PROBE_CHUNK)]

        def run(chunk):
            return _probe_chunk(field, invariants, base, chunk, eps, config.n_steps, step)

        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run, chunks))
        escapes = []
        worst = 0.0
        for c, (escape, chunk_worst) in enumerate(results):
            worst = max(worst, chunk_worst)
            if escape is not None:
                i, j, distance, state = escape
                escapes.append((i, c * PROBE_CHUNK + j, distance, state))
        levels.append(ProbeLevel(float(delta), n_samples, len(escapes), float(worst)))
        logger.info("delta {:.3e}: {} of {} chunks escaped".format(delta, len(escapes), len(chunks)))
        if escapes:
            i, index, distance, state = min(escapes, key=lambda e: (e[0], e[1]))
            witness = {
                "delta": float(delta),
                "sample": int(index),
                "time": float(i * step),
                "distance": float(distance) if np.isfinite(distance) else None,
                "initial_state": points[index].tolist(),
                "state": state.tolist() if np.all(np.isfinite(state)) else None,
            }
            break
    return ProbeResult(
        verdict="Escaped" if witness else "NoEscapeObserved",
        eps=float(eps),
        horizon=float(horizon),
        step=float(step),
        levels=tuple(levels),
        witness=witness,
        vacuous=vacuous,
    )


@dataclasses.dataclass(frozen=True)
class FlowDiscrepancyReport:
    max_orbit_discrepancy: float
    gauge_violation: float


def isomorphic_flow_check(X, Y, psi, invariants, m0, config, n_gauge_samples=16):
    """
    Integrate two fields related by a gauge and compare their orbit-space
    images along the way.
    """
    gauge_violation = check_gauge(psi, n_gauge_samples, center=m0, scale=0.1).max_violation
    first = integrate(X, m0, config)
    second = integrate(Y, m0, config)
    count = min(first.states.shape[0], second.states.shape[0])
    discrepancy = np.linalg.norm(
        invariants(first.states[:count]) - invariants(second.states[:count]), axis=1)
    return FlowDiscrepancyReport(float(np.max(discrepancy)), float(gauge_violation))


@dataclasses.dataclass(frozen=True)
class CertificateReport:
    coupling: float
    phi_margin: float
    f_margin: float
    f_drift: float
    phi_holds: bool
    f_holds: bool
    drift_flagged: bool

    @property
    def holds(self):
        return self.phi_holds and self.f_holds and not self.drift_flagged

    def to_dict(self):
        report = dataclasses.asdict(self)
        report["holds"] = self.holds
        return report


def certificate_monitor(system, tube, eta, trajectory, coupling=None, conservation_tol=1e-6):
    """
    Track the Lyapunov quantities along a trajectory of ``P(X_h - eta_M)``.

    With ``f = h - h(m) - <Phi - Phi(m), eta>`` and
    ``phi = |Phi - Phi(m)|^2`` in the dual norm, ``phi`` must not grow and
    ``|f|`` must stay below ``|f(0)| + A |Phi - Phi(m)|(0) |eta|``.
    A drift of f beyond ``conservation_tol`` flags a flow that is not the
    projected augmented one.
    """
    eta = np.asarray(eta, dtype=float)
    require_stabilizer_direction(tube, eta)
    group = system.group
    coupling = group.sup_vs_dual_constant() if coupling is None else float(coupling)
    if not coupling > 0:
        raise InvalidConfig("the coupling constant A must be positive")
    m = tube.base_point
    h0 = system.energy(m)
    mu0 = system.momentum_value(m)
    points = embed(tube, trajectory.states)
    shifted = system.momentum_value(points) - mu0
    f = system.energy(points) - h0 - shifted @ eta
    phi = np.einsum("...i,ij,...j->...", shifted, group.inner_product_inverse, shifted)
    eta_norm = group.norm_suite(eta).norm_g if group.dim else 0.0
    theta = abs(f[0]) + coupling * np.sqrt(phi[0]) * eta_norm
    phi_margin = float(np.max(phi) - phi[0])
    f_margin = float(np.max(np.abs(f)) - theta)
    f_drift = float(np.max(np.abs(f - f[0])))
    return CertificateReport(
        coupling=coupling,
        phi_margin=phi_margin,
        f_margin=f_margin,
        f_drift=f_drift,
        phi_holds=phi_margin <= conservation_tol,
        f_holds=f_margin <= conservation_tol,
        drift_flagged=f_drift > conservation_tol,
    )


def certify_slice_flow(system, tube, eta, v0, config, coupling=None, conservation_tol=1e-6):
    """Integrate ``P(X_h - eta_M)`` from slice coordinates v0 and monitor it."""
    report = conservation_report(
        system, "vertical_augmented", embed(tube, v0), config, eta=eta, tube=tube)
    return certificate_monitor(
        system, tube, eta, report.trajectory, coupling, conservation_tol)
